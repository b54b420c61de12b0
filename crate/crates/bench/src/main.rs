use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use cpsearch::experiment::{
    dump_activities, run_experiment, sweep, write_activities_csv, write_run_csv, write_sweep_csv,
    Benchmark, CsvOptions, Execution, ExperimentError, Restarts, RunConfig, RunRecord, SweepParam,
};
use cpsearch::heuristics::{HeuristicKind, HeuristicParams, ImpactOrder, StoppingRule};

/// Runs repeated seeded solves of the benchmark models and writes CSV.
#[derive(Parser, Debug)]
#[command(name = "bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one benchmark `--runs` times.
    Run(RunArgs),
    /// Repeat `run` for each value of a heuristic parameter.
    Sweep {
        #[arg(long)]
        param: SweepParam,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Root activities after probing, one row per unfixed variable.
    Activities {
        #[arg(long)]
        bench: Benchmark,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 300.0)]
        timeout: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct ParamArgs {
    #[arg(long, default_value_t = 8.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.999)]
    gamma: f64,
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
    /// Try values in ascending order instead of by assignment activity.
    #[arg(long)]
    no_value_heur: bool,
    /// IBS branches on the smallest or largest sum of (1 - impact).
    #[arg(long, default_value = "smallest")]
    ibs_order: ImpactOrder,
}

impl ParamArgs {
    fn params(&self) -> HeuristicParams {
        HeuristicParams {
            alpha: self.alpha,
            gamma: self.gamma,
            value_heuristic: !self.no_value_heur,
            probing: StoppingRule::new(self.delta),
            impact_order: self.ibs_order,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// msq-N, knap1-K-csp or knap1-K-cop (K in 2..=6).
    #[arg(long)]
    bench: Benchmark,
    /// abs, ibs or wdeg.
    #[arg(long)]
    heur: HeuristicKind,
    /// nr, geo:RHO, r1.1 or r2.0.
    #[arg(long, default_value = "nr")]
    restart: Restarts,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, default_value_t = 50)]
    runs: usize,
    /// Per-run timeout in seconds.
    #[arg(long, default_value_t = 300.0)]
    timeout: f64,
    /// Seed of the first run; run i uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; defaults to BENCH_THREADS or the core count.
    #[arg(long)]
    threads: Option<usize>,
    /// Run the solves one after another on the calling thread.
    #[arg(long)]
    sequential: bool,
    /// Leave time columns empty so output is identical across repeats.
    #[arg(long)]
    omit_time: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn timeout(secs: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(secs).map_err(|_| {
        ExperimentError::InvalidConfig(format!("timeout must be a non-negative number, got {secs}"))
            .into()
    })
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let config = RunConfig {
            benchmark: self.bench.clone(),
            heuristic: self.heur,
            params: self.params.params(),
            restarts: self.restart,
            runs: self.runs,
            timeout: timeout(self.timeout)?,
            base_seed: self.seed,
            execution: if self.sequential {
                Execution::Sequential
            } else {
                Execution::Parallel {
                    threads: self.threads,
                }
            },
        };
        config.validate()?;
        Ok(config)
    }

    fn csv(&self) -> CsvOptions {
        CsvOptions {
            omit_time: self.omit_time,
        }
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn summary(label: &str, r: &RunRecord) {
    let a = &r.aggregate;
    eprintln!(
        "{label} {} {} {}: F={}/{} mu(T)={:.3}s sd(T)={:.3}s mu(C)={:.1}",
        r.config.benchmark,
        r.config.heuristic,
        r.config.restarts,
        a.solved,
        a.runs,
        a.mean_time,
        a.sd_time,
        a.mean_choice_points
    );
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let record = run_experiment(&args.config()?)?;
            write_run_csv(output(&args.out)?, &record, args.csv())?;
            summary("run", &record);
        }
        Command::Sweep { param, values, run } => {
            let base = run.config()?;
            for &v in &values {
                let mut c = base.clone();
                param.apply(&mut c.params, v);
                c.validate()?;
            }
            let blocks = sweep(param, &values, &base)?;
            write_sweep_csv(output(&run.out)?, param, &blocks, run.csv())?;
            for (v, record) in &blocks {
                summary(&format!("{}={v}", param.as_str()), record);
            }
        }
        Command::Activities {
            bench,
            params,
            seed,
            timeout: secs,
            out,
        } => {
            let mut check = RunConfig::new(bench.clone(), HeuristicKind::Abs);
            check.params = params.params();
            check.validate()?;
            let model = bench.build()?;
            let rows = dump_activities(&model, &check.params, seed, timeout(secs)?);
            write_activities_csv(output(&out)?, &rows)?;
            eprintln!("activities {bench}: {} unfixed variables", rows.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = matches!(
                e.downcast_ref::<ExperimentError>(),
                Some(ExperimentError::InvalidConfig(_) | ExperimentError::UnknownBenchmark(_))
            );
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
