//! `simulate` and `generate`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use hdsign::csvio;
use hdsign::generators::{self, GeneratorSpec, MeanShift, ShiftStyle};
use hdsign::montecarlo::{self, ExperimentPlan, GridPoint, PowerCurvePoint, TestSpec};

use crate::report::{to_json, SCHEMA};
use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Ar1Gauss,
    Ar1T5,
    SphericalT5,
    EquicorrGauss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShiftArg {
    /// μ = (c, 0, …, 0)
    First,
    /// μ_k = c/√d
    Spread,
}

#[derive(Debug, Args)]
pub struct ModelFlags {
    #[arg(long, value_enum)]
    model: ModelArg,
    /// AR(1) coefficient.
    #[arg(long, default_value_t = 0.7)]
    rho: f64,
    /// Equicorrelation.
    #[arg(long, default_value_t = 0.7)]
    beta: f64,
    #[arg(long, value_enum, default_value_t = ShiftArg::First)]
    shift_style: ShiftArg,
}

impl ModelFlags {
    fn spec(&self, d: usize) -> GeneratorSpec {
        let spec = match self.model {
            ModelArg::Ar1Gauss => GeneratorSpec::ar1_gauss(d, self.rho),
            ModelArg::Ar1T5 => GeneratorSpec::ar1_t(d, self.rho, 5.0),
            ModelArg::SphericalT5 => GeneratorSpec::spherical_t(d, 5.0),
            ModelArg::EquicorrGauss => GeneratorSpec::equicorr_gauss(d, self.beta),
        };
        let style = match self.shift_style {
            ShiftArg::First => ShiftStyle::FirstCoordinate,
            ShiftArg::Spread => ShiftStyle::SpreadEqually,
        };
        spec.with_shift(MeanShift {
            style,
            magnitude: 0.0,
        })
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    model: Option<ModelFlags>,
    #[arg(long, default_value_t = 20)]
    m: usize,
    #[arg(long, default_value_t = 20)]
    n: usize,
    /// Comma-separated d:c pairs, e.g. "100:1.5,200:3".
    #[arg(long)]
    grid: Option<String>,
    /// Comma-separated stat:method pairs, e.g. "wmw:perm,cq2:asym".
    #[arg(long, default_value = "wmw:asym,cq2:asym")]
    tests: String,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    reps: u64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    perms: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Plot-data CSV; the manifest goes to FILE.manifest.json.
    #[arg(long)]
    out: PathBuf,
    /// Rerun the plan recorded in a manifest instead of the flags above.
    #[arg(long, conflicts_with_all = ["model", "grid"])]
    replay: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    model: ModelFlags,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    /// Shift magnitude.
    #[arg(long, default_value_t = 0.0)]
    c: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn parse_grid(s: &str) -> Result<Vec<GridPoint>, Failure> {
    s.split(',')
        .map(|item| {
            let bad = || Failure::Usage(format!("grid entry '{item}' is not of the form d:c"));
            let (d, c) = item.trim().split_once(':').ok_or_else(bad)?;
            let d: usize = d.trim().parse().map_err(|_| bad())?;
            let c: f64 = c.trim().parse().map_err(|_| bad())?;
            if d == 0 || !(c.is_finite() && c >= 0.0) {
                return Err(bad());
            }
            Ok(GridPoint { d, c })
        })
        .collect()
}

pub fn parse_tests(s: &str) -> Result<Vec<TestSpec>, Failure> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|e: hdsign::Error| Failure::Usage(e.to_string()))
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct Seeds {
    base_seed: u64,
    /// How per-replicate streams are derived from the base seed.
    derivation: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    schema: u32,
    command: String,
    version: String,
    /// Seconds since the Unix epoch. The only field that varies between
    /// identical runs.
    timestamp: u64,
    plan: ExperimentPlan,
    results: Vec<PowerCurvePoint>,
    seeds: Seeds,
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn plan_from_flags(a: &SimulateArgs) -> Result<ExperimentPlan, Failure> {
    let model = a
        .model
        .as_ref()
        .ok_or_else(|| Failure::Usage("--model is required unless --replay is given".into()))?;
    let grid =
        parse_grid(a.grid.as_deref().ok_or_else(|| {
            Failure::Usage("--grid is required unless --replay is given".into())
        })?)?;
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(Failure::Usage(format!(
            "--alpha must lie in (0, 1), got {}",
            a.alpha
        )));
    }
    let plan = ExperimentPlan {
        generator: model.spec(grid[0].d),
        grid,
        m: a.m,
        n: a.n,
        tests: parse_tests(&a.tests)?,
        replications: a.reps as usize,
        alpha: a.alpha,
        n_resamples: a.perms as usize,
        base_seed: a.seed,
    };
    plan.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(plan)
}

pub fn run(a: &SimulateArgs, argv: &[String]) -> Result<String, Failure> {
    let plan = match &a.replay {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
            let m: Manifest = serde_json::from_str(&text)
                .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
            m.plan
        }
        None => plan_from_flags(a)?,
    };
    let points = montecarlo::run_power_study(&plan)?;
    let csv = montecarlo::summarize_to_plot_data(&points)?;
    write(&a.out, &csv)?;
    let manifest = Manifest {
        schema: SCHEMA,
        command: argv.join(" "),
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        seeds: Seeds {
            base_seed: plan.base_seed,
            derivation:
                "X: derive_seed(base, [grid, rep, 0]); Y: derive_seed(base, [grid, rep, 1]); \
                         test t: derive_seed(base, [grid, rep, 2, t])"
                    .into(),
        },
        plan,
        results: points,
    };
    write(&manifest_path(&a.out), &to_json(&manifest))?;
    Ok(format!(
        "wrote {} points to {} and manifest to {}\n",
        manifest.results.len(),
        a.out.display(),
        manifest_path(&a.out).display()
    ))
}

pub fn generate(a: &GenerateArgs) -> Result<String, Failure> {
    if a.n == 0 || a.d == 0 {
        return Err(Failure::Usage("--n and --d must be positive".into()));
    }
    let mut spec = a.model.spec(a.d).with_seed(a.seed);
    spec.shift.magnitude = a.c;
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let sample = generators::generate(&spec, a.n)?;
    let mut buf = Vec::new();
    csvio::write_matrix(&sample.data, &mut buf)?;
    let text = String::from_utf8(buf).expect("ascii digits");
    match &a.out {
        Some(path) => {
            write(path, &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}
