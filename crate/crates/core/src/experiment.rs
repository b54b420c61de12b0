//! Repeated seeded solves of a benchmark, their aggregates, parameter sweeps
//! and root activity dumps, with CSV output.

use std::io::Write;
use std::str::FromStr;
use std::time::Duration;

use rand::SeedableRng;
use thiserror::Error;

use crate::domain::VarId;
use crate::heuristics::{
    build_heuristic, ActivityBased, HeuristicKind, HeuristicParams, SearchRng,
};
use crate::models::{
    build_knapsack_cop, build_knapsack_csp, build_magic_square, parse_knapsack, KnapsackInstance,
    Model, ModelError, ParseError,
};
use crate::search::{solve, RestartPolicy, SearchLimits, SearchStatus, Solver};

const KNAPSACK_DATA: [(&str, &str); 5] = [
    ("1-2", include_str!("../data/mknap1-2.txt")),
    ("1-3", include_str!("../data/mknap1-3.txt")),
    ("1-4", include_str!("../data/mknap1-4.txt")),
    ("1-5", include_str!("../data/mknap1-5.txt")),
    ("1-6", include_str!("../data/mknap1-6.txt")),
];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(
        "unknown benchmark {0:?} (expected msq-N, knap1-K-csp or knap1-K-cop with K in 2..=6)"
    )]
    UnknownBenchmark(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

/// Names of the bundled knapsack instances.
pub fn knapsack_instance_names() -> impl Iterator<Item = &'static str> {
    KNAPSACK_DATA.iter().map(|(name, _)| *name)
}

/// A bundled knapsack instance, e.g. `"1-4"`.
pub fn bundled_knapsack(name: &str) -> Option<KnapsackInstance> {
    KNAPSACK_DATA
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(n, text)| parse_knapsack(&format!("mknap{n}"), text).expect("bundled data parses"))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Benchmark {
    MagicSquare(usize),
    KnapsackCsp(String),
    KnapsackCop(String),
}

impl Benchmark {
    pub fn build(&self) -> Result<Model, ExperimentError> {
        let knapsack = |name: &str| {
            bundled_knapsack(name)
                .ok_or_else(|| ExperimentError::UnknownBenchmark(self.to_string()))
        };
        Ok(match self {
            Benchmark::MagicSquare(n) => build_magic_square(*n)?,
            Benchmark::KnapsackCsp(name) => build_knapsack_csp(&knapsack(name)?)?,
            Benchmark::KnapsackCop(name) => build_knapsack_cop(&knapsack(name)?)?,
        })
    }
}

impl FromStr for Benchmark {
    type Err = ExperimentError;

    /// `msq-7`, `knap1-4-csp`, `knap1-4-cop`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || ExperimentError::UnknownBenchmark(s.to_string());
        if let Some(n) = s.strip_prefix("msq-") {
            return match n.parse() {
                Ok(n) if n >= 3 => Ok(Benchmark::MagicSquare(n)),
                _ => Err(unknown()),
            };
        }
        let rest = s.strip_prefix("knap").ok_or_else(unknown)?;
        let (name, kind) = rest.rsplit_once('-').ok_or_else(unknown)?;
        if bundled_knapsack(name).is_none() {
            return Err(unknown());
        }
        match kind {
            "csp" => Ok(Benchmark::KnapsackCsp(name.to_string())),
            "cop" => Ok(Benchmark::KnapsackCop(name.to_string())),
            _ => Err(unknown()),
        }
    }
}

impl std::fmt::Display for Benchmark {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Benchmark::MagicSquare(n) => write!(f, "msq-{n}"),
            Benchmark::KnapsackCsp(name) => write!(f, "knap{name}-csp"),
            Benchmark::KnapsackCop(name) => write!(f, "knap{name}-cop"),
        }
    }
}

/// Restart setting of a run configuration.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum Restarts {
    None,
    /// Geometric growth factor; the first limit is three failures per
    /// variable.
    Geometric(f64),
}

impl Restarts {
    pub fn policy(self, model: &Model) -> RestartPolicy {
        match self {
            Restarts::None => RestartPolicy::none(),
            Restarts::Geometric(rho) => RestartPolicy::geometric_for(rho, model),
        }
    }
}

impl FromStr for Restarts {
    type Err = ExperimentError;

    /// `nr`, `geo:RHO`, or the shorthands `r1.1` and `r2.0`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ExperimentError::InvalidConfig(format!("restart setting {s:?}"));
        if s == "nr" {
            return Ok(Restarts::None);
        }
        let rho: f64 = s
            .strip_prefix("geo:")
            .or_else(|| s.strip_prefix('r'))
            .ok_or_else(bad)?
            .parse()
            .map_err(|_| bad())?;
        if rho.is_nan() || rho <= 1.0 {
            return Err(ExperimentError::InvalidConfig(format!(
                "restart growth factor must exceed 1, got {rho}"
            )));
        }
        Ok(Restarts::Geometric(rho))
    }
}

impl std::fmt::Display for Restarts {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Restarts::None => f.write_str("nr"),
            Restarts::Geometric(rho) => write!(f, "geo:{rho}"),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// One solve per worker thread. Falls back to sequential when the crate
    /// is built without the `parallel` feature.
    Parallel {
        threads: Option<usize>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub benchmark: Benchmark,
    pub heuristic: HeuristicKind,
    pub params: HeuristicParams,
    pub restarts: Restarts,
    pub runs: usize,
    pub timeout: Duration,
    pub base_seed: u64,
    pub execution: Execution,
}

impl RunConfig {
    /// 50 runs, 300 s timeout, default heuristic parameters.
    pub fn new(benchmark: Benchmark, heuristic: HeuristicKind) -> Self {
        RunConfig {
            benchmark,
            heuristic,
            params: HeuristicParams::default(),
            restarts: Restarts::None,
            runs: 50,
            timeout: Duration::from_secs(300),
            base_seed: 0,
            execution: Execution::Parallel { threads: None },
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let p = &self.params;
        let bad = |msg: String| Err(ExperimentError::InvalidConfig(msg));
        if self.runs == 0 {
            return bad("at least one run is required".into());
        }
        if p.alpha.is_nan() || p.alpha < 1.0 {
            return bad(format!("alpha must be at least 1, got {}", p.alpha));
        }
        if !(0.0..=1.0).contains(&p.gamma) {
            return bad(format!("gamma must lie in [0, 1], got {}", p.gamma));
        }
        if !(p.probing.delta > 0.0 && p.probing.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", p.probing.delta));
        }
        if let Execution::Parallel { threads: Some(0) } = self.execution {
            return bad("thread count must be positive".into());
        }
        Ok(())
    }
}

/// Outcome of one seeded solve.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub run_id: usize,
    pub seed: u64,
    pub status: SearchStatus,
    /// Wall time, or the timeout for runs that hit it.
    pub time_s: f64,
    pub choice_points: u64,
    pub failures: u64,
    pub restarts: u64,
    pub objective: Option<i64>,
    pub probes: u64,
}

impl RunResult {
    pub fn timed_out(&self) -> bool {
        self.status == SearchStatus::TimedOut
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub runs: usize,
    /// Runs that did not time out.
    pub solved: usize,
    pub mean_time: f64,
    /// Sample standard deviation (n - 1); 0 for a single run.
    pub sd_time: f64,
    pub mean_choice_points: f64,
    pub mean_failures: f64,
    pub mean_restarts: f64,
    pub mean_probes: f64,
    /// First quartile, median and third quartile of the run times.
    pub time_quartiles: [f64; 3],
    pub median_probes: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Quantile by linear interpolation between order statistics.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

impl Aggregate {
    pub fn from_runs(runs: &[RunResult]) -> Self {
        assert!(!runs.is_empty(), "no runs to aggregate");
        let col = |f: fn(&RunResult) -> f64| runs.iter().map(f).collect::<Vec<f64>>();
        let times = col(|r| r.time_s);
        let probes = col(|r| r.probes as f64);
        Aggregate {
            runs: runs.len(),
            solved: runs.iter().filter(|r| !r.timed_out()).count(),
            mean_time: mean(&times),
            sd_time: sample_sd(&times),
            mean_choice_points: mean(&col(|r| r.choice_points as f64)),
            mean_failures: mean(&col(|r| r.failures as f64)),
            mean_restarts: mean(&col(|r| r.restarts as f64)),
            mean_probes: mean(&probes),
            time_quartiles: [0.25, 0.5, 0.75].map(|q| quantile(&times, q)),
            median_probes: quantile(&probes, 0.5),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub config: RunConfig,
    /// Ordered by seed.
    pub runs: Vec<RunResult>,
    pub aggregate: Aggregate,
}

fn single_run(model: &Model, config: &RunConfig, run_id: usize) -> RunResult {
    let seed = config.base_seed.wrapping_add(run_id as u64);
    let mut h = build_heuristic(config.heuristic, &config.params, model);
    let stats = solve(
        model,
        h.as_mut(),
        config.restarts.policy(model),
        SearchRng::seed_from_u64(seed),
        SearchLimits::timeout(config.timeout),
    );
    let time_s = if stats.status == SearchStatus::TimedOut {
        config.timeout.as_secs_f64()
    } else {
        stats.time_s()
    };
    RunResult {
        run_id,
        seed,
        status: stats.status,
        time_s,
        choice_points: stats.choice_points,
        failures: stats.failures,
        restarts: stats.restarts,
        objective: stats.objective(),
        probes: stats.probes,
    }
}

/// Worker count: the explicit setting, else `BENCH_THREADS`, else all cores.
pub fn thread_count(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var("BENCH_THREADS").ok()?.parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[cfg(feature = "parallel")]
fn map_runs(model: &Model, config: &RunConfig, threads: Option<usize>) -> Vec<RunResult> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(threads))
        .build()
        .expect("thread pool");
    pool.install(|| {
        (0..config.runs)
            .into_par_iter()
            .map(|i| single_run(model, config, i))
            .collect()
    })
}

#[cfg(not(feature = "parallel"))]
fn map_runs(model: &Model, config: &RunConfig, _threads: Option<usize>) -> Vec<RunResult> {
    (0..config.runs)
        .map(|i| single_run(model, config, i))
        .collect()
}

/// Runs `config.runs` solves with seeds `base_seed..base_seed + runs`.
pub fn run_experiment(config: &RunConfig) -> Result<RunRecord, ExperimentError> {
    config.validate()?;
    let model = config.benchmark.build()?;
    let runs = match config.execution {
        Execution::Sequential => (0..config.runs)
            .map(|i| single_run(&model, config, i))
            .collect(),
        Execution::Parallel { threads } => map_runs(&model, config, threads),
    };
    Ok(RunRecord {
        config: config.clone(),
        aggregate: Aggregate::from_runs(&runs),
        runs,
    })
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Delta,
    Gamma,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Delta => "delta",
            SweepParam::Gamma => "gamma",
        }
    }

    pub fn apply(self, params: &mut HeuristicParams, value: f64) {
        match self {
            SweepParam::Delta => params.probing.delta = value,
            SweepParam::Gamma => params.gamma = value,
        }
    }
}

impl FromStr for SweepParam {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "delta" => Ok(SweepParam::Delta),
            "gamma" => Ok(SweepParam::Gamma),
            _ => Err(ExperimentError::InvalidConfig(format!(
                "unknown sweep parameter {s:?} (expected delta or gamma)"
            ))),
        }
    }
}

/// One experiment per value of `param`, in the given order.
pub fn sweep(
    param: SweepParam,
    values: &[f64],
    base: &RunConfig,
) -> Result<Vec<(f64, RunRecord)>, ExperimentError> {
    values
        .iter()
        .map(|&v| {
            let mut config = base.clone();
            param.apply(&mut config.params, v);
            run_experiment(&config).map(|r| (v, r))
        })
        .collect()
}

/// Root activities after probing, for every variable still unfixed.
pub fn dump_activities(
    model: &Model,
    params: &HeuristicParams,
    seed: u64,
    timeout: Duration,
) -> Vec<(VarId, f64)> {
    let mut h = ActivityBased::new(model, params);
    let mut solver = Solver::new(
        model,
        SearchRng::seed_from_u64(seed),
        SearchLimits::timeout(timeout),
    );
    if solver.initialize(&mut h) == Some(SearchStatus::ProvedInfeasible) {
        return Vec::new();
    }
    let store = solver.store();
    store
        .vars()
        .filter(|&x| !store.is_fixed(x))
        .map(|x| (x, h.table().activity(x)))
        .collect()
}

pub fn write_activities_csv<W: Write>(
    out: W,
    rows: &[(VarId, f64)],
) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["variable", "activity"])?;
    for (x, a) in rows {
        w.write_record([x.index().to_string(), a.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// CSV layout options.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct CsvOptions {
    /// Leave time columns empty so that output depends only on the seeds.
    pub omit_time: bool,
}

const RUN_COLUMNS: [&str; 16] = [
    "run_id",
    "seed",
    "status",
    "time_s",
    "choice_points",
    "failures",
    "restarts",
    "objective",
    "probes",
    "agg",
    "time_sd",
    "solved",
    "time_q1",
    "time_median",
    "time_q3",
    "probes_median",
];

fn record_rows(record: &RunRecord, opts: CsvOptions) -> Vec<Vec<String>> {
    let time = |t: f64| {
        if opts.omit_time {
            String::new()
        } else {
            t.to_string()
        }
    };
    let mut rows: Vec<Vec<String>> = record
        .runs
        .iter()
        .map(|r| {
            let mut row = vec![
                r.run_id.to_string(),
                r.seed.to_string(),
                r.status.to_string(),
                time(r.time_s),
                r.choice_points.to_string(),
                r.failures.to_string(),
                r.restarts.to_string(),
                r.objective.map(|z| z.to_string()).unwrap_or_default(),
                r.probes.to_string(),
                "0".into(),
            ];
            row.resize(RUN_COLUMNS.len(), String::new());
            row
        })
        .collect();
    let a = &record.aggregate;
    let [q1, q2, q3] = a.time_quartiles;
    rows.push(vec![
        String::new(),
        String::new(),
        String::new(),
        time(a.mean_time),
        a.mean_choice_points.to_string(),
        a.mean_failures.to_string(),
        a.mean_restarts.to_string(),
        String::new(),
        a.mean_probes.to_string(),
        "1".into(),
        time(a.sd_time),
        a.solved.to_string(),
        time(q1),
        time(q2),
        time(q3),
        a.median_probes.to_string(),
    ]);
    rows
}

/// Per-run rows followed by one aggregate row flagged `agg=1`.
pub fn write_run_csv<W: Write>(
    out: W,
    record: &RunRecord,
    opts: CsvOptions,
) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RUN_COLUMNS)?;
    for row in record_rows(record, opts) {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Same layout as [`write_run_csv`] with the swept parameter and its value
/// prepended; one block per value.
pub fn write_sweep_csv<W: Write>(
    out: W,
    param: SweepParam,
    blocks: &[(f64, RunRecord)],
    opts: CsvOptions,
) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["param", "value"].iter().chain(RUN_COLUMNS.iter()))?;
    for (value, record) in blocks {
        for row in record_rows(record, opts) {
            let head = [param.as_str().to_string(), value.to_string()];
            w.write_record(head.into_iter().chain(row))?;
        }
    }
    w.flush()?;
    Ok(())
}
