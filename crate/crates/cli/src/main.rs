//! `exitsim`: run exit-time ensembles from a model file and write CSVs.
//!
//! Exit status: 0 success, 2 usage error, 3 model error, 4 runtime error.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use exitsim::harness::{
    compare, compare_with_reference, convergence_study, method_seed, run_ensemble, BinGrid,
    HarnessError, Method, DEFAULT_BINS,
};
use exitsim::model::{Model, ModelError};
use exitsim::report::{self, ReportError};

#[derive(Parser)]
#[command(
    name = "exitsim",
    version,
    about = "Exit-time ensembles for reaction networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one ensemble and write its exit-time histogram.
    Simulate(SimulateArgs),
    /// Run SSA on --seed and the exit-time method on --seed + 1, then compare.
    Compare(CompareArgs),
    /// Compare several epsilons against one SSA reference.
    Converge(ConvergeArgs),
}

#[derive(Args)]
struct Common {
    /// Model JSON file.
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// Trajectories per ensemble.
    #[arg(long, value_name = "N", value_parser = parse_samples)]
    samples: usize,
    #[arg(long, value_name = "N")]
    seed: u64,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Worker threads [default: available parallelism].
    #[arg(long, value_name = "N", value_parser = parse_workers)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Ssa,
    Exit,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    method: MethodArg,
    /// Grouping tolerance; required with --method exit.
    #[arg(long, value_name = "F", allow_hyphen_values = true, value_parser = parse_epsilon)]
    epsilon: Option<f64>,
    /// Histogram bins (>= 10).
    #[arg(long, value_name = "N", default_value_t = DEFAULT_BINS, value_parser = parse_bins)]
    bins: usize,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_name = "F", allow_hyphen_values = true, value_parser = parse_epsilon)]
    epsilon: f64,
    /// Histogram bins (>= 10) [default: 200, or the reference's bin count].
    #[arg(long, value_name = "N", value_parser = parse_bins)]
    bins: Option<usize>,
    /// Output directory of an earlier `simulate --method ssa` run to use as
    /// the SSA side instead of simulating it.
    #[arg(long, value_name = "DIR")]
    reference: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    common: Common,
    /// Strictly descending, comma separated.
    #[arg(
        long,
        value_name = "F,F,...",
        value_delimiter = ',',
        required = true,
        allow_hyphen_values = true,
        value_parser = parse_epsilon
    )]
    epsilons: Vec<f64>,
    #[arg(long, value_name = "N", default_value_t = DEFAULT_BINS, value_parser = parse_bins)]
    bins: usize,
}

fn parse_samples(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        Ok(_) => Err("must be at least 1".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_workers(s: &str) -> Result<usize, String> {
    parse_samples(s)
}

fn parse_bins(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 10 => Ok(n),
        Ok(_) => Err("must be at least 10".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_epsilon(s: &str) -> Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(e) if e.is_finite() && e >= 0.0 => Ok(e),
        Ok(_) => Err("must be a finite number >= 0".into()),
        Err(e) => Err(e.to_string()),
    }
}

enum Failure {
    Usage(String),
    Model(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Model(_) => 3,
            Failure::Runtime(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Model(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::NoSamples
            | HarnessError::InvalidEpsilon(_)
            | HarnessError::EpsilonOrder => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Harness(h) => h.into(),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn load_model(path: &Path) -> Result<Model, Failure> {
    Model::load(path).map_err(|e: ModelError| Failure::Model(e.to_string()))
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let method = match (args.method, args.epsilon) {
        (MethodArg::Ssa, None) => Method::Ssa,
        (MethodArg::Ssa, Some(_)) => {
            return Err(Failure::Usage(
                "--epsilon only applies to --method exit".into(),
            ))
        }
        (MethodArg::Exit, Some(epsilon)) => Method::ExitTime { epsilon },
        (MethodArg::Exit, None) => {
            return Err(Failure::Usage("--method exit requires --epsilon".into()))
        }
    };
    let c = &args.common;
    let model = load_model(&c.model)?;
    prepare_out(&c.out)?;
    let ensemble = run_ensemble(&model, method, c.samples, c.seed, c.workers)?;
    let grid = BinGrid::pooled(&[&ensemble], args.bins)?;
    let histogram = ensemble.histogram(&grid)?;
    report::write_simulation(&c.out, &ensemble, &histogram)?;
    println!(
        "exited={} censored={} exp_draws={} gamma_draws={}",
        ensemble.n_exited(),
        ensemble.n_censored,
        ensemble.counters.exponential,
        ensemble.counters.gamma
    );
    Ok(())
}

fn compare_cmd(args: CompareArgs) -> Result<(), Failure> {
    let c = &args.common;
    let model = load_model(&c.model)?;
    let cmp = match &args.reference {
        Some(dir) => {
            let reference = report::read_reference(dir)?;
            if let Some(bins) = args.bins {
                if bins != reference.grid.bins {
                    return Err(HarnessError::GridMismatch {
                        left: format!("{} bins in {}", reference.grid.bins, dir.display()),
                        right: format!("--bins {bins}"),
                    }
                    .into());
                }
            }
            prepare_out(&c.out)?;
            compare_with_reference(
                &model,
                args.epsilon,
                c.samples,
                c.seed,
                reference,
                c.workers,
            )?
        }
        None => {
            prepare_out(&c.out)?;
            let bins = args.bins.unwrap_or(DEFAULT_BINS);
            compare(&model, args.epsilon, c.samples, c.seed, bins, c.workers)?
        }
    };
    report::write_comparison(&c.out, &cmp)?;
    println!(
        "ssa_seed={} method_seed={}",
        cmp.ssa_seed,
        method_seed(cmp.ssa_seed)
    );
    report::describe_comparison(&mut io::stdout().lock(), &cmp)?;
    Ok(())
}

fn converge(args: ConvergeArgs) -> Result<(), Failure> {
    if args.epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Failure::Usage(
            "--epsilons must be strictly descending".into(),
        ));
    }
    let c = &args.common;
    let model = load_model(&c.model)?;
    prepare_out(&c.out)?;
    let study = convergence_study(
        &model,
        &args.epsilons,
        c.samples,
        c.seed,
        args.bins,
        c.workers,
    )?;
    report::write_convergence(&c.out.join(report::CONVERGENCE_FILE), &study)?;
    for r in &study.records {
        let order = r
            .order
            .map(|o| format!("{o:.3}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "epsilon={} l1={:.6} l2={:.6} rho={:.5} order={order}",
            r.epsilon, r.l1, r.l2, r.rho
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Compare(a) => compare_cmd(a),
        Command::Converge(a) => converge(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
