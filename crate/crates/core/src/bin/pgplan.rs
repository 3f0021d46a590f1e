use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use pgplan::bench::{
    flood_fill_oracle, format_summary, run_benchmark, summarize, write_csv, BenchConfig, GoalBiasSampler, Query,
    SamplerKind, Scenario, UniformSampler, ORACLE_MAX_DIM,
};
use pgplan::exemplars::{collect_exemplars, ExemplarParams};
use pgplan::fgmm::{em_fit, Dataset, Fgmm};
use pgplan::optimizer::{optimize, OptimizerParams, StageMetrics, Trajectory};
use pgplan::planner::{plan, plan_with_sampler, PlannerParams, PriorGuidedSampler};
use pgplan::{Error, Path, Result};

#[derive(Parser)]
#[command(
    name = "pgplan",
    version,
    about = "Prior-guided RRT-Connect planning and path optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan one query and write the path with its metrics.
    Plan(PlanArgs),
    /// Run the optimizer stages on a path and write the trajectory.
    Optimize(OptimizeArgs),
    /// Collect collision-free exemplars around a query endpoint.
    CollectExemplars(ExemplarArgs),
    /// Fit a Gaussian mixture to an exemplar dataset.
    FitGmm(FitArgs),
    /// Run every sampler on a scenario and write per-trial CSV rows.
    Bench(BenchArgs),
    /// Check a scenario and, for up to three joints, its free-space connectivity.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerArg {
    Uniform,
    GoalBias,
    Prior,
}

impl From<SamplerArg> for SamplerKind {
    fn from(s: SamplerArg) -> Self {
        match s {
            SamplerArg::Uniform => SamplerKind::Uniform,
            SamplerArg::GoalBias => SamplerKind::GoalBias,
            SamplerArg::Prior => SamplerKind::Prior,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Endpoint {
    Init,
    Goal,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file, or the name of a built-in scenario.
    #[arg(long)]
    scenario: String,
    /// Query name; defaults to the first query.
    #[arg(long)]
    query: Option<String>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<(Scenario, Query)> {
        let scenario = Scenario::load(&self.scenario)?;
        let query = match &self.query {
            None => scenario.queries[0].clone(),
            Some(name) => scenario
                .query(name)
                .cloned()
                .ok_or_else(|| Error::Scenario(format!("scenario '{}' has no query '{name}'", scenario.name)))?,
        };
        Ok((scenario, query))
    }
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value = "prior")]
    sampler: SamplerArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pre-fitted mixture for the start side; needs --goal-model too.
    #[arg(long, requires = "goal_model")]
    init_model: Option<PathBuf>,
    #[arg(long, requires = "init_model")]
    goal_model: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// A path file or the output of `plan`.
    #[arg(long)]
    path: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also check the sampled spline, failing when it collides.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExemplarArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value = "init")]
    endpoint: Endpoint,
    /// Number of exemplars; defaults to the scenario's planner setting.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Dataset written by `collect-exemplars`.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = pgplan::fgmm::DEFAULT_EM_TOL)]
    tol: f64,
    #[arg(long, default_value_t = pgplan::fgmm::DEFAULT_EM_MAX_ITER)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Scenario file, or the name of a built-in scenario.
    #[arg(long)]
    scenario: String,
    /// Restrict to these queries; repeatable.
    #[arg(long)]
    query: Vec<String>,
    /// Samplers to compare; repeatable. All three by default.
    #[arg(long, value_enum)]
    sampler: Vec<SamplerArg>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Base seed; trial t uses seed + t.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = pgplan::bench::DEFAULT_P_GOAL)]
    p_goal: f64,
    /// Fill the wall-clock columns; output then differs between runs.
    #[arg(long)]
    timing: bool,
    /// Plan only, leaving the optimizer columns empty.
    #[arg(long)]
    plan_only: bool,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the summary table here instead of stderr.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Also write every trial's raw and optimized path as JSON.
    #[arg(long)]
    paths: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Scenario file, or the name of a built-in scenario.
    #[arg(long)]
    scenario: String,
    /// Cells per joint for the flood-fill oracle.
    #[arg(long, default_value_t = 200)]
    cells: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct PlanOutput {
    scenario: String,
    query: String,
    sampler: SamplerKind,
    seed: u64,
    success: bool,
    extended_nodes: usize,
    iterations: usize,
    planning_time_s: f64,
    fit_time_s: f64,
    path: Option<Path>,
}

#[derive(Serialize)]
struct OptimizeOutput {
    scenario: String,
    query: String,
    metrics: StageMetrics,
    unresolved: Vec<(usize, usize)>,
    trajectory: Trajectory,
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &PathBuf) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn cmd_plan(a: PlanArgs) -> Result<()> {
    let (scenario, query) = a.scenario.load()?;
    let params = PlannerParams {
        seed: a.seed,
        ..scenario.planner.clone()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let (scene, qi, qg) = (&scenario.scene, &query.q_init, &query.q_goal);
    let sampler: SamplerKind = a.sampler.into();
    let result = match (sampler, &a.init_model, &a.goal_model) {
        (SamplerKind::Prior, Some(init), Some(goal)) => {
            let mut s =
                PriorGuidedSampler::from_models(read_json::<Fgmm>(init)?, read_json::<Fgmm>(goal)?, params.p_bias)?;
            plan_with_sampler(scene, qi, qg, &params, &mut s, &mut rng)?
        }
        (SamplerKind::Prior, _, _) => plan(scene, qi, qg, &params, &mut rng)?,
        (SamplerKind::Uniform, _, _) => plan_with_sampler(scene, qi, qg, &params, &mut UniformSampler, &mut rng)?,
        (SamplerKind::GoalBias, _, _) => {
            plan_with_sampler(scene, qi, qg, &params, &mut GoalBiasSampler::default(), &mut rng)?
        }
    };
    eprintln!(
        "{}: success={} extended_nodes={} iterations={} plan_time_s={:.3} fit_time_s={:.3}",
        query.name,
        result.success(),
        result.extended_nodes,
        result.iterations,
        result.planning_time_s,
        result.fit_time_s
    );
    write_json(
        &a.out,
        &PlanOutput {
            scenario: scenario.name.clone(),
            query: query.name.clone(),
            sampler,
            seed: a.seed,
            success: result.success(),
            extended_nodes: result.extended_nodes,
            iterations: result.iterations,
            planning_time_s: result.planning_time_s,
            fit_time_s: result.fit_time_s,
            path: result.path,
        },
    )
}

fn cmd_optimize(a: OptimizeArgs) -> Result<()> {
    let (scenario, query) = a.scenario.load()?;
    let text = std::fs::read_to_string(&a.path)?;
    let path: Path = match serde_json::from_str::<PlanOutput>(&text) {
        Ok(plan) => plan
            .path
            .ok_or_else(|| Error::InvalidParameter(format!("{} holds a failed plan", a.path.display())))?,
        Err(_) => serde_json::from_str(&text)?,
    };
    for (i, w) in path.waypoints().windows(2).enumerate() {
        if !scenario
            .scene
            .segment_is_free(&w[0], &w[1], scenario.optimizer.check_resolution)?
        {
            return Err(Error::InvalidParameter(format!("input path edge {i} is in collision")));
        }
    }
    let params = OptimizerParams {
        strict_curve_check: a.strict || scenario.optimizer.strict_curve_check,
        ..scenario.optimizer.clone()
    };
    let out = optimize(&scenario.scene, &path, &params, &mut ChaCha8Rng::seed_from_u64(a.seed))?;
    let m = &out.metrics;
    eprintln!("stage\tnodes\tlength_rad");
    eprintln!("raw\t{}\t{:.4}", m.raw_nodes, m.raw_len_rad);
    eprintln!("shortcut\t{}\t{:.4}", m.shortcut_nodes, m.shortcut_len_rad);
    eprintln!("simplified\t{}\t{:.4}", m.dp_nodes, m.dp_len_rad);
    eprintln!("refined joints: {} (unresolved {})", m.refined_joints, m.unresolved);
    write_json(
        &a.out,
        &OptimizeOutput {
            scenario: scenario.name.clone(),
            query: query.name.clone(),
            metrics: out.metrics.clone(),
            unresolved: out.refined.unresolved.clone(),
            trajectory: out.trajectory,
        },
    )
}

fn cmd_collect(a: ExemplarArgs) -> Result<()> {
    let (scenario, query) = a.scenario.load()?;
    let mut params: ExemplarParams = scenario.planner.exemplars.clone();
    if let Some(m) = a.m {
        params.m = m;
    }
    let target = match a.endpoint {
        Endpoint::Init => &query.q_init,
        Endpoint::Goal => &query.q_goal,
    };
    let data = collect_exemplars(&scenario.scene, target, &params, &mut ChaCha8Rng::seed_from_u64(a.seed))?;
    eprintln!("collected {} exemplars", data.len());
    write_json(&a.out, &data)
}

fn cmd_fit(a: FitArgs) -> Result<()> {
    let data: Dataset = read_json(&a.data)?;
    let fit = em_fit(&data, a.k, a.tol, a.max_iter, &mut ChaCha8Rng::seed_from_u64(a.seed))?;
    eprintln!(
        "iterations={} converged={} log_likelihood={:.6}",
        fit.iterations,
        fit.converged,
        fit.log_likelihood.last().copied().unwrap_or(f64::NAN)
    );
    write_json(&a.out, &fit.model)
}

#[derive(Serialize)]
struct TrialPaths<'a> {
    query: &'a str,
    sampler: SamplerKind,
    seed: u64,
    path: &'a Option<Path>,
    optimized: &'a Option<Path>,
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let scenario = Scenario::load(&a.scenario)?;
    let samplers = if a.sampler.is_empty() {
        SamplerKind::ALL.to_vec()
    } else {
        a.sampler.iter().map(|s| (*s).into()).collect()
    };
    let config = BenchConfig {
        trials: a.trials,
        base_seed: a.seed,
        samplers,
        queries: a.query.clone(),
        p_goal: a.p_goal,
        plan_only: a.plan_only,
    };
    let records = run_benchmark(&scenario, &config)?;
    for r in records.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "{} {} seed {}: {}",
            r.query,
            r.sampler,
            r.seed,
            r.error.as_deref().unwrap_or_default()
        );
    }
    let mut w = sink(&a.out)?;
    write_csv(&records, &mut w, a.timing)?;
    w.flush()?;
    let summary = format_summary(&summarize(&records));
    match &a.summary {
        Some(p) => std::fs::write(p, summary)?,
        None => eprint!("{summary}"),
    }
    if let Some(p) = &a.paths {
        let rows: Vec<TrialPaths> = records
            .iter()
            .map(|r| TrialPaths {
                query: &r.query,
                sampler: r.sampler,
                seed: r.seed,
                path: &r.path,
                optimized: &r.optimized,
            })
            .collect();
        write_json(&Some(p.clone()), &rows)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ValidateOutput {
    scenario: String,
    dim: usize,
    queries: usize,
    grid_voxels: usize,
    static_boxes: usize,
    connectivity: Vec<QueryConnectivity>,
}

#[derive(Serialize)]
struct QueryConnectivity {
    query: String,
    cells_per_joint: usize,
    components: usize,
    connected: bool,
}

fn cmd_validate(a: ValidateArgs) -> Result<()> {
    let scenario = Scenario::load(&a.scenario)?;
    let scene = &scenario.scene;
    let mut connectivity = Vec::new();
    if scene.dim() <= ORACLE_MAX_DIM {
        for q in &scenario.queries {
            let c = flood_fill_oracle(scene, a.cells, &[q.q_init.clone(), q.q_goal.clone()])?;
            connectivity.push(QueryConnectivity {
                query: q.name.clone(),
                cells_per_joint: a.cells,
                components: c.components,
                connected: c.probes_connected(),
            });
        }
    } else {
        eprintln!("{} joints: flood-fill oracle skipped", scene.dim());
    }
    write_json(
        &a.out,
        &ValidateOutput {
            scenario: scenario.name.clone(),
            dim: scene.dim(),
            queries: scenario.queries.len(),
            grid_voxels: scene.grid().len(),
            static_boxes: scene.static_boxes().len(),
            connectivity,
        },
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan(a) => cmd_plan(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::CollectExemplars(a) => cmd_collect(a),
        Command::FitGmm(a) => cmd_fit(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
