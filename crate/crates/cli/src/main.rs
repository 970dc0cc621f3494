use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod report;
mod simulate;

use hdsign::csvio;
use hdsign::inference::{self, TestReport};
use hdsign::montecarlo::{self, TestSpec};
use hdsign::{selftest, StatKind};

/// High-dimensional location tests based on spatial signs and ranks.
#[derive(Debug, Parser)]
#[command(name = "hdsign", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Test whether two samples share a location.
    TwoSample(TwoSampleArgs),
    /// Test whether one sample is centered at the origin.
    OneSample(OneSampleArgs),
    /// Estimate sizes and powers over a (d, c) grid.
    Simulate(simulate::SimulateArgs),
    /// Size/power table from repeated subsampling of two classes.
    Subsample(SubsampleArgs),
    /// Write a simulated sample as CSV.
    Generate(simulate::GenerateArgs),
    /// Check the fast statistics against direct index loops.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TwoStat {
    Cq2,
    Wmw,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OneStat {
    Cq1,
    S,
    Sr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TwoMethod {
    Asymptotic,
    Permutation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OneMethod {
    Asymptotic,
    Signflip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Args)]
struct Common {
    /// Number of random relabelings for randomization tests.
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    perms: u64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Args)]
struct TwoSampleArgs {
    /// CSV file, one observation per row.
    #[arg(long)]
    x: PathBuf,
    #[arg(long)]
    y: PathBuf,
    #[arg(long, value_enum)]
    stat: TwoStat,
    #[arg(long, value_enum, default_value_t = TwoMethod::Asymptotic)]
    method: TwoMethod,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct OneSampleArgs {
    #[arg(long)]
    x: PathBuf,
    #[arg(long, value_enum)]
    stat: OneStat,
    #[arg(long, value_enum, default_value_t = OneMethod::Asymptotic)]
    method: OneMethod,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct SubsampleArgs {
    /// Rows of the first class.
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// Subsample size as a fraction of each class.
    #[arg(long, default_value_t = 0.2)]
    fraction: f64,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    reps: u64,
    #[arg(long, default_value = "wmw:asym,cq2:asym,wmw:perm,cq2:perm")]
    tests: String,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    perms: u64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Failure modes and their exit codes.
pub enum Failure {
    /// Bad flags or flag values: exit 2.
    Usage(String),
    /// Unreadable or invalid data, or a failed computation: exit 3.
    Data(String),
}

impl From<hdsign::Error> for Failure {
    fn from(e: hdsign::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

fn check_alpha(alpha: f64) -> Result<(), Failure> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Failure::Usage(format!(
            "--alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

fn two_sample(args: &TwoSampleArgs) -> Result<String, Failure> {
    check_alpha(args.common.alpha)?;
    let x = csvio::read_matrix_path(&args.x)?;
    let y = csvio::read_matrix_path(&args.y)?;
    let stat = match args.stat {
        TwoStat::Cq2 => StatKind::Cq2,
        TwoStat::Wmw => StatKind::Wmw,
    };
    let c = &args.common;
    let rep: TestReport = match args.method {
        TwoMethod::Asymptotic => inference::asymptotic_two_sample(&x, &y, stat, c.alpha)?,
        TwoMethod::Permutation => {
            inference::randomization_two_sample(&x, &y, stat, c.alpha, c.perms as usize, c.seed)?
        }
    };
    let label = match args.method {
        TwoMethod::Asymptotic => "asymptotic",
        TwoMethod::Permutation => "permutation",
    };
    Ok(report::render(&rep, label, c.format))
}

fn one_sample(args: &OneSampleArgs) -> Result<String, Failure> {
    check_alpha(args.common.alpha)?;
    let x = csvio::read_matrix_path(&args.x)?;
    let stat = match args.stat {
        OneStat::Cq1 => StatKind::Cq1,
        OneStat::S => StatKind::S,
        OneStat::Sr => StatKind::Sr,
    };
    let c = &args.common;
    let rep = match args.method {
        OneMethod::Asymptotic => inference::asymptotic_one_sample(&x, stat, c.alpha)?,
        OneMethod::Signflip => {
            inference::randomization_one_sample(&x, stat, c.alpha, c.perms as usize, c.seed)?
        }
    };
    let label = match args.method {
        OneMethod::Asymptotic => "asymptotic",
        OneMethod::Signflip => "signflip",
    };
    Ok(report::render(&rep, label, c.format))
}

fn subsample(args: &SubsampleArgs) -> Result<String, Failure> {
    check_alpha(args.alpha)?;
    let tests = simulate::parse_tests(&args.tests)?;
    if let Some(t) = tests
        .iter()
        .find(|t: &&TestSpec| !t.stat.is_two_sample() || t.method == inference::Method::RsrmOracle)
    {
        return Err(Failure::Usage(format!(
            "test '{t}' cannot be run on observed data"
        )));
    }
    let a = csvio::read_matrix_path(&args.a)?;
    let b = csvio::read_matrix_path(&args.b)?;
    let table = montecarlo::run_subsample_protocol(
        &a,
        &b,
        args.fraction,
        args.reps as usize,
        &tests,
        args.alpha,
        args.perms as usize,
        args.seed,
    )?;
    Ok(match args.format {
        Format::Text => table.render(),
        Format::Json => report::to_json(&table),
        Format::Csv => report::subsample_csv(&table),
    })
}

fn selftest_cmd(args: &SelftestArgs) -> Result<(String, bool), Failure> {
    let r = selftest::run(args.trials, args.seed)?;
    let mut out = format!(
        "selftest: {} trials, seed {}, tolerance {:e}\n",
        r.trials,
        r.seed,
        selftest::TOLERANCE
    );
    for c in &r.checks {
        out.push_str(&format!(
            "{:<22} max rel dev {:<10.3e} {}\n",
            c.name,
            c.max_rel_dev,
            if c.passed() { "ok" } else { "FAIL" }
        ));
    }
    out.push_str(if r.passed() { "PASS\n" } else { "FAIL\n" });
    Ok((out, r.passed()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().collect();
    let result = match &cli.command {
        Command::TwoSample(a) => two_sample(a).map(|s| (s, true)),
        Command::OneSample(a) => one_sample(a).map(|s| (s, true)),
        Command::Simulate(a) => simulate::run(a, &argv).map(|s| (s, true)),
        Command::Subsample(a) => subsample(a).map(|s| (s, true)),
        Command::Generate(a) => simulate::generate(a).map(|s| (s, true)),
        Command::Selftest(a) => selftest_cmd(a),
    };
    match result {
        Ok((out, ok)) => {
            print!("{out}");
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
