//! Scenario files, baseline samplers, the seeded benchmark harness and a
//! flood-fill connectivity oracle for low-dimensional scenes.

mod harness;
mod oracle;
mod samplers;
mod scenario;

pub use harness::{
    format_summary, median, run_benchmark, run_trial, summarize, write_csv, BenchConfig, SummaryRow, TrialRecord,
    CSV_COLUMNS,
};
pub use oracle::{flood_fill_oracle, Connectivity, ORACLE_MAX_DIM};
pub use samplers::{
    goal_bias_sampling, uniform_sampling, GoalBiasSampler, SamplerKind, UniformSampler, DEFAULT_P_GOAL,
};
pub use scenario::{
    builtin_json, AttachmentSpec, GridSpec, Query, QuerySpec, Scenario, ScenarioFile, SelfCollisionSpec,
    BUILTIN_SCENARIOS, SCENARIO_SCHEMA,
};
