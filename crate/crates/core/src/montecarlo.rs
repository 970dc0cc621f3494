//! Size and power estimation by seeded Monte Carlo.
//!
//! Replicate `r` at grid point `g` draws X from `derive_seed(base, [g, r, 0])`
//! and Y from `derive_seed(base, [g, r, 1])`; test `t` inside it uses
//! `derive_seed(base, [g, r, 2, t])`. Every test in a replicate sees the same
//! data. Outcomes depend only on these paths, never on scheduling.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{self, GeneratorSpec, MeanShift, Model, ShiftStyle};
use crate::inference::{self, Method, TestReport};
use crate::matrix::ObservationMatrix;
use crate::rng::{self, derive_seed};
use crate::ustat::StatKind;

/// A statistic paired with a calibration backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TestSpec {
    pub stat: StatKind,
    pub method: Method,
}

impl TestSpec {
    pub fn new(stat: StatKind, method: Method) -> Self {
        Self { stat, method }
    }
}

impl fmt::Display for TestSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let method = match (self.method, self.stat.is_two_sample()) {
            (Method::Asymptotic, _) => "asym",
            (Method::Randomization, true) => "perm",
            (Method::Randomization, false) => "signflip",
            (Method::RsrmOracle, _) => "oracle",
        };
        write!(f, "{}:{method}", self.stat.name().to_ascii_lowercase())
    }
}

impl FromStr for TestSpec {
    type Err = Error;

    /// `stat:method`, e.g. `wmw:perm` or `s:signflip`.
    fn from_str(s: &str) -> Result<Self> {
        let (stat, method) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("test '{s}' is not of the form stat:method")))?;
        let stat: StatKind = stat.trim().parse()?;
        let method_str = method.trim();
        let method: Method = method_str.parse()?;
        let fits = match method_str {
            "perm" | "permutation" => stat.is_two_sample(),
            "signflip" => !stat.is_two_sample(),
            _ => true,
        };
        if !fits {
            return Err(Error::Parse(format!(
                "method '{method_str}' does not apply to {stat}"
            )));
        }
        Ok(Self { stat, method })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub d: usize,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    /// Model template; `d`, shift magnitude and seed are set per grid point
    /// and replicate. The template's shift style is kept.
    pub generator: GeneratorSpec,
    pub grid: Vec<GridPoint>,
    pub m: usize,
    pub n: usize,
    pub tests: Vec<TestSpec>,
    pub replications: usize,
    pub alpha: f64,
    pub n_resamples: usize,
    pub base_seed: u64,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(Error::InvalidArgument(s.to_string()));
        if self.replications == 0 {
            return bad("replications must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if self.grid.is_empty() {
            return bad("grid is empty");
        }
        if self.tests.is_empty() {
            return bad("no tests requested");
        }
        if self.generator.model == Model::RsrmCustom {
            return bad("custom models cannot be driven by a plan");
        }
        if self.n_resamples == 0 && self.tests.iter().any(|t| t.method == Method::Randomization) {
            return bad("randomization tests need at least one resample");
        }
        for g in &self.grid {
            self.spec_at(g, 0, true).validate()?;
        }
        Ok(())
    }

    fn spec_at(&self, g: &GridPoint, seed: u64, shifted: bool) -> GeneratorSpec {
        let style = match self.generator.shift.style {
            ShiftStyle::Zero => ShiftStyle::FirstCoordinate,
            s => s,
        };
        let shift = if shifted {
            MeanShift {
                style,
                magnitude: g.c,
            }
        } else {
            MeanShift::ZERO
        };
        GeneratorSpec {
            d: g.d,
            shift,
            seed,
            ..self.generator
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurvePoint {
    pub model: String,
    pub d: usize,
    pub c: f64,
    pub stat: StatKind,
    pub method: Method,
    pub rejection_rate: f64,
    pub replications: usize,
    pub std_err: f64,
}

/// Binomial standard error √(r(1−r)/reps).
pub fn binomial_se(rate: f64, reps: usize) -> f64 {
    (rate * (1.0 - rate) / reps as f64).sqrt()
}

/// Runs one test on one replicate's data.
fn run_test(
    t: &TestSpec,
    x: &generators::Sample,
    y: &generators::Sample,
    alpha: f64,
    n_resamples: usize,
    seed: u64,
) -> Result<TestReport> {
    if t.stat.is_two_sample() {
        match t.method {
            Method::Asymptotic => inference::asymptotic_two_sample(&x.data, &y.data, t.stat, alpha),
            Method::Randomization => inference::randomization_two_sample(
                &x.data,
                &y.data,
                t.stat,
                alpha,
                n_resamples,
                seed,
            ),
            Method::RsrmOracle => {
                let aux = generators::pair_auxiliary(&x.aux, &y.aux)?;
                inference::rsrm_oracle_two_sample(&x.data, &y.data, &aux, t.stat, alpha)
            }
        }
    } else {
        // one-sample tests look at the shifted sample
        match t.method {
            Method::Asymptotic => inference::asymptotic_one_sample(&y.data, t.stat, alpha),
            Method::Randomization => {
                inference::randomization_one_sample(&y.data, t.stat, alpha, n_resamples, seed)
            }
            Method::RsrmOracle => inference::rsrm_oracle_one_sample(&y.data, &y.aux, t.stat, alpha),
        }
    }
}

/// Rejection decisions of every test in replicate `rep` at grid point `grid_index`.
pub fn run_replicate(plan: &ExperimentPlan, grid_index: usize, rep: usize) -> Result<Vec<bool>> {
    let g = plan
        .grid
        .get(grid_index)
        .ok_or_else(|| Error::InvalidArgument(format!("no grid point {grid_index}")))?;
    let (gi, r) = (grid_index as u64, rep as u64);
    let wrap = |e: Error| Error::Replicate {
        grid_index,
        replicate: rep,
        source: Box::new(e),
    };
    let x_spec = plan.spec_at(g, derive_seed(plan.base_seed, &[gi, r, 0]), false);
    let y_spec = plan.spec_at(g, derive_seed(plan.base_seed, &[gi, r, 1]), true);
    let x = generators::generate(&x_spec, plan.m).map_err(wrap)?;
    let y = generators::generate(&y_spec, plan.n).map_err(wrap)?;
    plan.tests
        .iter()
        .enumerate()
        .map(|(t, spec)| {
            let seed = derive_seed(plan.base_seed, &[gi, r, 2, t as u64]);
            run_test(spec, &x, &y, plan.alpha, plan.n_resamples, seed)
                .map(|rep| rep.reject)
                .map_err(wrap)
        })
        .collect()
}

/// Rejection rates for every (grid point, test) pair, in plan order.
pub fn run_power_study(plan: &ExperimentPlan) -> Result<Vec<PowerCurvePoint>> {
    plan.validate()?;
    let model = model_label(&plan.generator);
    let mut points = Vec::with_capacity(plan.grid.len() * plan.tests.len());
    for (gi, g) in plan.grid.iter().enumerate() {
        let outcomes: Vec<Result<Vec<bool>>> = (0..plan.replications)
            .into_par_iter()
            .map(|r| run_replicate(plan, gi, r))
            .collect();
        let mut hits = vec![0usize; plan.tests.len()];
        // first failure in replicate order, whatever the scheduling
        for o in outcomes {
            for (h, rejected) in hits.iter_mut().zip(o?) {
                *h += rejected as usize;
            }
        }
        for (t, h) in plan.tests.iter().zip(hits) {
            let rate = h as f64 / plan.replications as f64;
            points.push(PowerCurvePoint {
                model: model.clone(),
                d: g.d,
                c: g.c,
                stat: t.stat,
                method: t.method,
                rejection_rate: rate,
                replications: plan.replications,
                std_err: binomial_se(rate, plan.replications),
            });
        }
    }
    Ok(points)
}

/// Short model name used in plot data, e.g. `spherical-t5`.
pub fn model_label(spec: &GeneratorSpec) -> String {
    match spec.model {
        Model::Ar1T => format!("ar1-t{}", spec.df),
        Model::SphericalT if spec.df.is_infinite() => "spherical-gauss".to_string(),
        Model::SphericalT => format!("spherical-t{}", spec.df),
        other => other.name().to_string(),
    }
}

const PLOT_HEADER: [&str; 8] = ["model", "d", "c", "stat", "method", "rate", "se", "reps"];

/// Plot data as CSV, one row per point, sorted by (model, stat, method, d, c).
///
/// Floats use Rust's shortest round-trip formatting, so [`parse_plot_data`]
/// recovers the points exactly.
pub fn summarize_to_plot_data(points: &[PowerCurvePoint]) -> Result<String> {
    if points.is_empty() {
        return Err(Error::EmptyInput("power curve points"));
    }
    let mut sorted: Vec<&PowerCurvePoint> = points.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.model, a.stat.name(), a.method.name(), a.d)
            .cmp(&(&b.model, b.stat.name(), b.method.name(), b.d))
            .then(a.c.total_cmp(&b.c))
    });
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(PLOT_HEADER).map_err(io)?;
    for p in sorted {
        w.write_record([
            p.model.clone(),
            p.d.to_string(),
            p.c.to_string(),
            p.stat.name().to_string(),
            p.method.name().to_string(),
            p.rejection_rate.to_string(),
            p.std_err.to_string(),
            p.replications.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

pub fn parse_plot_data(text: &str) -> Result<Vec<PowerCurvePoint>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if header.iter().ne(PLOT_HEADER) {
        return Err(Error::Parse(format!(
            "unexpected plot-data header {header:?}"
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let num = |k: usize| -> Result<f64> {
            field(k).parse().map_err(|_| {
                Error::Parse(format!(
                    "row {}: bad {} '{}'",
                    i + 1,
                    PLOT_HEADER[k],
                    field(k)
                ))
            })
        };
        let int = |k: usize| -> Result<usize> {
            field(k).parse().map_err(|_| {
                Error::Parse(format!(
                    "row {}: bad {} '{}'",
                    i + 1,
                    PLOT_HEADER[k],
                    field(k)
                ))
            })
        };
        out.push(PowerCurvePoint {
            model: field(0).to_string(),
            d: int(1)?,
            c: num(2)?,
            stat: field(3).parse()?,
            method: field(4).parse()?,
            rejection_rate: num(5)?,
            std_err: num(6)?,
            replications: int(7)?,
        });
    }
    Ok(out)
}

/// One line of the size/power table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleRow {
    pub test: TestSpec,
    pub size: f64,
    pub size_se: f64,
    pub power: f64,
    pub power_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleTable {
    /// Subsample sizes drawn from class A and class B.
    pub k_a: usize,
    pub k_b: usize,
    pub repetitions: usize,
    pub rows: Vec<SubsampleRow>,
}

impl SubsampleTable {
    /// Text table with one block per backend and one line per statistic.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut methods: Vec<Method> = self.rows.iter().map(|r| r.test.method).collect();
        methods.sort();
        methods.dedup();
        for method in methods {
            let title = match method {
                Method::Asymptotic => "Implementation as in the rho-mixing setup",
                Method::Randomization => "Permutation implementation",
                Method::RsrmOracle => "RSRM oracle implementation",
            };
            out.push_str(title);
            out.push('\n');
            out.push_str(&format!("{:<8}{:>8}{:>8}\n", "", "Size", "Power"));
            for r in self.rows.iter().filter(|r| r.test.method == method) {
                out.push_str(&format!(
                    "{:<8}{:>8.3}{:>8.3}\n",
                    r.test.stat.label(),
                    r.size,
                    r.power
                ));
            }
        }
        out
    }
}

fn subsample_size(fraction: f64, rows: usize) -> Result<usize> {
    let k = (fraction * rows as f64).round() as usize;
    if k < 4 {
        return Err(Error::SubsampleTooSmall { size: k, needed: 4 });
    }
    Ok(k)
}

/// Size and power of two-sample tests from repeated subsampling of two
/// classes.
///
/// Size: two disjoint subsamples of size k from the same class (a draw of
/// 2k rows split in half), averaged over both classes. Power: k_a rows of
/// class A against k_b rows of class B. If both classes are the same
/// matrix the across-class draw is also made disjoint, so no row is ever
/// compared with itself.
#[allow(clippy::too_many_arguments)]
pub fn run_subsample_protocol(
    class_a: &ObservationMatrix,
    class_b: &ObservationMatrix,
    fraction: f64,
    repetitions: usize,
    tests: &[TestSpec],
    alpha: f64,
    n_resamples: usize,
    seed: u64,
) -> Result<SubsampleTable> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "fraction must lie in (0, 1), got {fraction}"
        )));
    }
    if repetitions == 0 {
        return Err(Error::InvalidArgument(
            "repetitions must be at least 1".into(),
        ));
    }
    if let Some(t) = tests
        .iter()
        .find(|t| !t.stat.is_two_sample() || t.method == Method::RsrmOracle)
    {
        return Err(Error::InvalidArgument(format!(
            "{t} cannot be run on observed data"
        )));
    }
    let k_a = subsample_size(fraction, class_a.rows())?;
    let k_b = subsample_size(fraction, class_b.rows())?;
    for (k, rows) in [(k_a, class_a.rows()), (k_b, class_b.rows())] {
        if 2 * k > rows {
            return Err(Error::InvalidArgument(format!(
                "two disjoint subsamples of {k} need {} rows, class has {rows}",
                2 * k
            )));
        }
    }
    let same = class_a == class_b;

    // stream tags: 0, 1 = within class A, B; 2 = across classes
    let draw = |tag: u64, r: usize| -> Result<(ObservationMatrix, ObservationMatrix)> {
        let mut g = rng::stream(seed, &[tag, r as u64]);
        let split = |cls: &ObservationMatrix, k1: usize, k2: usize, g: &mut rng::StreamRng| {
            let idx = index::sample(g, cls.rows(), k1 + k2).into_vec();
            Ok::<_, Error>((cls.select_rows(&idx[..k1])?, cls.select_rows(&idx[k1..])?))
        };
        match tag {
            0 => split(class_a, k_a, k_a, &mut g),
            1 => split(class_b, k_b, k_b, &mut g),
            _ if same => split(class_a, k_a, k_b, &mut g),
            _ => {
                let ia = index::sample(&mut g, class_a.rows(), k_a).into_vec();
                let ib = index::sample(&mut g, class_b.rows(), k_b).into_vec();
                Ok((class_a.select_rows(&ia)?, class_b.select_rows(&ib)?))
            }
        }
    };
    let rates = |tag: u64| -> Result<Vec<f64>> {
        let outcomes: Vec<Result<Vec<bool>>> = (0..repetitions)
            .into_par_iter()
            .map(|r| {
                let wrap = |e: Error| Error::Replicate {
                    grid_index: tag as usize,
                    replicate: r,
                    source: Box::new(e),
                };
                let (x, y) = draw(tag, r).map_err(wrap)?;
                tests
                    .iter()
                    .enumerate()
                    .map(|(t, spec)| {
                        let s = derive_seed(seed, &[tag, r as u64, 3, t as u64]);
                        let rep = match spec.method {
                            Method::Asymptotic => {
                                inference::asymptotic_two_sample(&x, &y, spec.stat, alpha)
                            }
                            _ => inference::randomization_two_sample(
                                &x,
                                &y,
                                spec.stat,
                                alpha,
                                n_resamples,
                                s,
                            ),
                        };
                        rep.map(|rep| rep.reject).map_err(wrap)
                    })
                    .collect()
            })
            .collect();
        let mut hits = vec![0usize; tests.len()];
        for o in outcomes {
            for (h, rej) in hits.iter_mut().zip(o?) {
                *h += rej as usize;
            }
        }
        Ok(hits
            .into_iter()
            .map(|h| h as f64 / repetitions as f64)
            .collect())
    };
    let size_a = rates(0)?;
    let size_b = rates(1)?;
    let power = rates(2)?;
    let rows = tests
        .iter()
        .enumerate()
        .map(|(t, &test)| {
            let (sa, sb) = (size_a[t], size_b[t]);
            SubsampleRow {
                test,
                size: 0.5 * (sa + sb),
                size_se: 0.5
                    * (binomial_se(sa, repetitions).powi(2) + binomial_se(sb, repetitions).powi(2))
                        .sqrt(),
                power: power[t],
                power_se: binomial_se(power[t], repetitions),
            }
        })
        .collect();
    Ok(SubsampleTable {
        k_a,
        k_b,
        repetitions,
        rows,
    })
}
