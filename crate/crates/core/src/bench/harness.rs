use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::samplers::{GoalBiasSampler, SamplerKind, UniformSampler, DEFAULT_P_GOAL};
use super::scenario::{Query, Scenario};
use crate::error::{Error, Result};
use crate::optimizer::{optimize, StageMetrics};
use crate::path::Path;
use crate::planner::{plan, plan_with_sampler, PlanResult, PlannerParams};

/// CSV header, in column order.
pub const CSV_COLUMNS: [&str; 14] = [
    "scenario",
    "query",
    "sampler",
    "seed",
    "success",
    "extended_nodes",
    "plan_time_s",
    "fit_time_s",
    "raw_nodes",
    "raw_len_rad",
    "shortcut_nodes",
    "shortcut_len_rad",
    "dp_nodes",
    "refined_joints",
];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub trials: usize,
    /// Trial `t` runs with seed `base_seed + t`.
    pub base_seed: u64,
    pub samplers: Vec<SamplerKind>,
    /// Only these queries; all when empty.
    pub queries: Vec<String>,
    pub p_goal: f64,
    /// Skip the optimizer stages.
    pub plan_only: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            trials: 10,
            base_seed: 0,
            samplers: SamplerKind::ALL.to_vec(),
            queries: Vec::new(),
            p_goal: DEFAULT_P_GOAL,
            plan_only: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub scenario: String,
    pub query: String,
    pub sampler: SamplerKind,
    pub seed: u64,
    pub success: bool,
    pub extended_nodes: usize,
    pub iterations: usize,
    pub plan_time_s: f64,
    pub fit_time_s: f64,
    pub metrics: Option<StageMetrics>,
    /// Planner output.
    pub path: Option<Path>,
    /// Control polygon after all optimizer stages.
    pub optimized: Option<Path>,
    /// Set when the trial aborted with an error instead of running out of budget.
    pub error: Option<String>,
}

/// Plans one query with the given sampler and seed. The optimizer continues
/// the planner's random stream.
pub fn run_trial(
    scenario: &Scenario,
    query: &Query,
    sampler: SamplerKind,
    seed: u64,
    config: &BenchConfig,
) -> TrialRecord {
    let mut record = TrialRecord {
        scenario: scenario.name.clone(),
        query: query.name.clone(),
        sampler,
        seed,
        success: false,
        extended_nodes: 0,
        iterations: 0,
        plan_time_s: 0.0,
        fit_time_s: 0.0,
        metrics: None,
        path: None,
        optimized: None,
        error: None,
    };
    if let Err(e) = fill_trial(scenario, query, sampler, seed, config, &mut record) {
        record.success = false;
        record.error = Some(e.to_string());
    }
    record
}

fn fill_trial(
    scenario: &Scenario,
    query: &Query,
    sampler: SamplerKind,
    seed: u64,
    config: &BenchConfig,
    record: &mut TrialRecord,
) -> Result<()> {
    let params = PlannerParams {
        seed,
        ..scenario.planner.clone()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scene = &scenario.scene;
    let (qi, qg) = (&query.q_init, &query.q_goal);
    let result: PlanResult = match sampler {
        SamplerKind::Prior => plan(scene, qi, qg, &params, &mut rng)?,
        SamplerKind::Uniform => plan_with_sampler(scene, qi, qg, &params, &mut UniformSampler, &mut rng)?,
        SamplerKind::GoalBias => {
            let mut s = GoalBiasSampler { p_goal: config.p_goal };
            plan_with_sampler(scene, qi, qg, &params, &mut s, &mut rng)?
        }
    };
    record.success = result.success();
    record.extended_nodes = result.extended_nodes;
    record.iterations = result.iterations;
    record.plan_time_s = result.planning_time_s;
    record.fit_time_s = result.fit_time_s;
    record.path = result.path;
    if let (Some(path), false) = (&record.path, config.plan_only) {
        let out = optimize(scene, path, &scenario.optimizer, &mut rng)?;
        record.metrics = Some(out.metrics);
        record.optimized = Some(out.refined.path);
    }
    Ok(())
}

/// Every sampler × query × trial, run in parallel and returned sorted by
/// sampler, query and seed.
pub fn run_benchmark(scenario: &Scenario, config: &BenchConfig) -> Result<Vec<TrialRecord>> {
    if config.trials == 0 {
        return Err(Error::param("trials must be >= 1"));
    }
    if !(0.0..=1.0).contains(&config.p_goal) {
        return Err(Error::param(format!(
            "p_goal must lie in [0, 1], got {}",
            config.p_goal
        )));
    }
    let queries: Vec<&Query> = if config.queries.is_empty() {
        scenario.queries.iter().collect()
    } else {
        config
            .queries
            .iter()
            .map(|name| {
                scenario
                    .query(name)
                    .ok_or_else(|| Error::Scenario(format!("scenario '{}' has no query '{name}'", scenario.name)))
            })
            .collect::<Result<_>>()?
    };
    let mut jobs = Vec::new();
    for &sampler in &config.samplers {
        for &query in &queries {
            for t in 0..config.trials {
                let seed = config
                    .base_seed
                    .checked_add(t as u64)
                    .ok_or_else(|| Error::param("base_seed + trials overflows u64"))?;
                jobs.push((sampler, query, seed));
            }
        }
    }
    let mut records: Vec<TrialRecord> = jobs
        .into_par_iter()
        .map(|(sampler, query, seed)| run_trial(scenario, query, sampler, seed, config))
        .collect();
    records.sort_by(|a, b| (a.sampler, &a.query, a.seed).cmp(&(b.sampler, &b.query, b.seed)));
    Ok(records)
}

/// Writes the fixed-column CSV. Timing columns stay empty unless
/// `with_timing` is set, so that output is byte-reproducible by default.
pub fn write_csv<W: Write>(records: &[TrialRecord], writer: W, with_timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_COLUMNS)?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in records {
        let m = r.metrics.as_ref();
        let time = |t: f64| if with_timing { format!("{t:.6}") } else { String::new() };
        w.write_record([
            r.scenario.clone(),
            r.query.clone(),
            r.sampler.name().to_string(),
            r.seed.to_string(),
            r.success.to_string(),
            r.extended_nodes.to_string(),
            time(r.plan_time_s),
            time(r.fit_time_s),
            opt(m.map(|m| m.raw_nodes.to_string())),
            opt(m.map(|m| m.raw_len_rad.to_string())),
            opt(m.map(|m| m.shortcut_nodes.to_string())),
            opt(m.map(|m| m.shortcut_len_rad.to_string())),
            opt(m.map(|m| m.dp_nodes.to_string())),
            opt(m.map(|m| m.refined_joints.to_string())),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Aggregate over the trials of one sampler on one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub query: String,
    pub sampler: SamplerKind,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Mean over all trials, rounded up.
    pub mean_extended_nodes: u64,
    pub median_extended_nodes: f64,
    pub mean_plan_time_s: f64,
    pub mean_fit_time_s: f64,
    /// Means over optimized successes; `None` when there are none.
    pub mean_raw_nodes: Option<f64>,
    pub mean_raw_len_rad: Option<f64>,
    pub mean_shortcut_nodes: Option<f64>,
    pub mean_shortcut_len_rad: Option<f64>,
    pub mean_dp_nodes: Option<f64>,
    pub mean_refined_joints: Option<f64>,
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// One row per (sampler, query), in record order.
pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(SamplerKind, &str)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.sampler, r.query.as_str())) {
            keys.push((r.sampler, &r.query));
        }
    }
    keys.into_iter()
        .map(|(sampler, query)| {
            let rows: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.sampler == sampler && r.query == query)
                .collect();
            let trials = rows.len();
            let successes = rows.iter().filter(|r| r.success).count();
            let nodes_sum: u64 = rows.iter().map(|r| r.extended_nodes as u64).sum();
            let mut nodes: Vec<f64> = rows.iter().map(|r| r.extended_nodes as f64).collect();
            let metrics: Vec<&StageMetrics> = rows.iter().filter_map(|r| r.metrics.as_ref()).collect();
            let m = |f: fn(&StageMetrics) -> f64| mean(metrics.iter().map(|s| f(s)));
            SummaryRow {
                query: query.to_string(),
                sampler,
                trials,
                successes,
                success_rate: successes as f64 / trials as f64,
                mean_extended_nodes: nodes_sum.div_ceil(trials as u64),
                median_extended_nodes: median(&mut nodes).expect("at least one row"),
                mean_plan_time_s: mean(rows.iter().map(|r| r.plan_time_s)).expect("at least one row"),
                mean_fit_time_s: mean(rows.iter().map(|r| r.fit_time_s)).expect("at least one row"),
                mean_raw_nodes: m(|s| s.raw_nodes as f64),
                mean_raw_len_rad: m(|s| s.raw_len_rad),
                mean_shortcut_nodes: m(|s| s.shortcut_nodes as f64),
                mean_shortcut_len_rad: m(|s| s.shortcut_len_rad),
                mean_dp_nodes: m(|s| s.dp_nodes as f64),
                mean_refined_joints: m(|s| s.refined_joints as f64),
            }
        })
        .collect()
}

/// Plain-text summary table.
pub fn format_summary(rows: &[SummaryRow]) -> String {
    let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.2}"));
    let mut out = String::from(
        "query\tsampler\ttrials\tsuccess_rate\tmean_nodes\tmedian_nodes\tmean_raw_len_rad\tmean_shortcut_len_rad\tmean_dp_nodes\tmean_refined_joints\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{:.2}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.query,
            r.sampler,
            r.trials,
            r.success_rate,
            r.mean_extended_nodes,
            r.median_extended_nodes,
            f(r.mean_raw_len_rad),
            f(r.mean_shortcut_len_rad),
            f(r.mean_dp_nodes),
            f(r.mean_refined_joints),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(sampler: SamplerKind, seed: u64, nodes: usize, success: bool) -> TrialRecord {
        TrialRecord {
            scenario: "s".into(),
            query: "q".into(),
            sampler,
            seed,
            success,
            extended_nodes: nodes,
            iterations: nodes,
            plan_time_s: 0.5,
            fit_time_s: 0.0,
            metrics: success.then_some(StageMetrics {
                raw_nodes: 10,
                raw_len_rad: 2.0,
                shortcut_nodes: 5,
                shortcut_len_rad: 1.5,
                dp_nodes: 2,
                dp_len_rad: 1.5,
                refined_joints: 0,
                unresolved: 0,
            }),
            path: None,
            optimized: None,
            error: None,
        }
    }

    #[test]
    fn medians() {
        assert_eq!(median(&mut []), None);
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }

    #[test]
    fn summary_rounds_node_means_up() {
        let rows = vec![
            record(SamplerKind::Uniform, 0, 10, true),
            record(SamplerKind::Uniform, 1, 11, false),
            record(SamplerKind::Prior, 0, 4, true),
        ];
        let s = summarize(&rows);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].sampler, SamplerKind::Uniform);
        assert_eq!(s[0].mean_extended_nodes, 11);
        assert_eq!(s[0].median_extended_nodes, 10.5);
        assert_eq!(s[0].success_rate, 0.5);
        assert_eq!(s[0].mean_raw_len_rad, Some(2.0));
        assert_eq!(s[1].mean_extended_nodes, 4);
        assert!(format_summary(&s).lines().count() == 3);
    }

    #[test]
    fn csv_layout() {
        let rows = vec![
            record(SamplerKind::GoalBias, 7, 12, true),
            record(SamplerKind::GoalBias, 8, 50, false),
        ];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert_eq!(lines[1], "s,q,goal-bias,7,true,12,,,10,2,5,1.5,2,0");
        assert_eq!(lines[2], "s,q,goal-bias,8,false,50,,,,,,,,");
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf, true).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains(",0.500000,0.000000,"));
    }
}
