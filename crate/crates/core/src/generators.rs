//! Seeded synthetic data for the simulation models.
//!
//! Row `i` of a sample is drawn from its own stream
//! `rng::stream(spec.seed, [i])`, so a sample is a pure function of the spec
//! and its size, and any row can be regenerated on its own. The mean shift is
//! added last, as `z + μ_k`, to an otherwise shift-free draw.

use rand_distr::{ChiSquared, Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::RsrmAuxiliary;
use crate::matrix::ObservationMatrix;
use crate::rng::{self, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShiftStyle {
    /// μ = (c, 0, …, 0).
    FirstCoordinate,
    /// μ_k = c/√d, so ‖μ‖ = c.
    SpreadEqually,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanShift {
    pub style: ShiftStyle,
    pub magnitude: f64,
}

impl MeanShift {
    pub const ZERO: MeanShift = MeanShift {
        style: ShiftStyle::Zero,
        magnitude: 0.0,
    };

    pub fn first_coordinate(c: f64) -> Self {
        Self {
            style: ShiftStyle::FirstCoordinate,
            magnitude: c,
        }
    }

    pub fn spread_equally(c: f64) -> Self {
        Self {
            style: ShiftStyle::SpreadEqually,
            magnitude: c,
        }
    }

    pub fn vector(&self, d: usize) -> Vec<f64> {
        let mut mu = vec![0.0; d];
        match self.style {
            ShiftStyle::Zero => {}
            ShiftStyle::FirstCoordinate => mu[0] = self.magnitude,
            ShiftStyle::SpreadEqually => {
                let v = self.magnitude / (d as f64).sqrt();
                mu.iter_mut().for_each(|m| *m = v);
            }
        }
        mu
    }

    pub fn is_zero(&self) -> bool {
        self.style == ShiftStyle::Zero || self.magnitude == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    /// AR(1) across coordinates with Gaussian innovations.
    Ar1Gauss,
    /// AR(1) across coordinates with t(df) innovations.
    Ar1T,
    /// μ + G/P with G ~ N(0, I) and P = √(χ²_df/df).
    SphericalT,
    /// Gaussian with covariance (1−β)I + β11'.
    EquicorrGauss,
    /// Caller-supplied base rows and scale law, see [`gen_rsrm_custom`].
    RsrmCustom,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Ar1Gauss => "ar1-gauss",
            Model::Ar1T => "ar1-t",
            Model::SphericalT => "spherical-t",
            Model::EquicorrGauss => "equicorr-gauss",
            Model::RsrmCustom => "rsrm-custom",
        }
    }
}

/// Model parameters. Fields that a model does not use are ignored.
///
/// `df = ∞` is accepted for [`Model::SphericalT`] and forces every P_i = 1,
/// which gives the spherical Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub model: Model,
    pub d: usize,
    pub rho: f64,
    pub beta: f64,
    pub df: f64,
    pub shift: MeanShift,
    pub seed: u64,
}

impl GeneratorSpec {
    fn base(model: Model, d: usize) -> Self {
        Self {
            model,
            d,
            rho: 0.0,
            beta: 0.0,
            df: 5.0,
            shift: MeanShift::ZERO,
            seed: 0,
        }
    }

    pub fn ar1_gauss(d: usize, rho: f64) -> Self {
        Self {
            rho,
            ..Self::base(Model::Ar1Gauss, d)
        }
    }

    pub fn ar1_t(d: usize, rho: f64, df: f64) -> Self {
        Self {
            rho,
            df,
            ..Self::base(Model::Ar1T, d)
        }
    }

    pub fn spherical_t(d: usize, df: f64) -> Self {
        Self {
            df,
            ..Self::base(Model::SphericalT, d)
        }
    }

    pub fn equicorr_gauss(d: usize, beta: f64) -> Self {
        Self {
            beta,
            ..Self::base(Model::EquicorrGauss, d)
        }
    }

    pub fn rsrm_custom(d: usize) -> Self {
        Self::base(Model::RsrmCustom, d)
    }

    pub fn with_shift(self, shift: MeanShift) -> Self {
        Self { shift, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.d == 0 {
            return bad("dimension must be at least 1".into());
        }
        if !(self.shift.magnitude.is_finite() && self.shift.magnitude >= 0.0) {
            return bad(format!(
                "shift magnitude {} must be ≥ 0",
                self.shift.magnitude
            ));
        }
        match self.model {
            Model::Ar1Gauss | Model::Ar1T if !(self.rho.abs() < 1.0) => {
                bad(format!("rho = {} must satisfy |rho| < 1", self.rho))
            }
            Model::Ar1T | Model::SphericalT if !(self.df > 0.0) => {
                bad(format!("df = {} must be positive", self.df))
            }
            Model::Ar1T if !self.df.is_finite() => bad("AR(1) t innovations need finite df".into()),
            Model::EquicorrGauss if !(self.beta > 0.0 && self.beta < 1.0) => {
                bad(format!("beta = {} must lie in (0, 1)", self.beta))
            }
            _ => Ok(()),
        }
    }

    fn expect(&self, models: &[Model]) -> Result<()> {
        self.validate()?;
        if models.contains(&self.model) {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!(
                "generator does not handle model {}",
                self.model.name()
            )))
        }
    }
}

/// Population moments of the zero-mean (latent) component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Population {
    /// tr(Σ)/d.
    pub sigma_sq: f64,
    /// tr(Σ²).
    pub tr_sigma_sq: f64,
}

/// Population values for the models with a closed form.
///
/// For [`Model::SphericalT`] these describe the Gaussian part G, not X.
pub fn population(spec: &GeneratorSpec) -> Result<Population> {
    spec.validate()?;
    let d = spec.d as f64;
    match spec.model {
        Model::Ar1Gauss | Model::Ar1T => {
            if spec.model == Model::Ar1T && spec.df <= 2.0 {
                return Err(Error::InvalidSpec(format!(
                    "t({}) innovations have no finite variance",
                    spec.df
                )));
            }
            let s2 = 1.0 / (1.0 - spec.rho * spec.rho);
            let r2 = spec.rho * spec.rho;
            let mut lag = 0.0;
            let mut pow = 1.0;
            for h in 1..spec.d {
                pow *= r2;
                lag += (spec.d - h) as f64 * pow;
            }
            Ok(Population {
                sigma_sq: s2,
                tr_sigma_sq: s2 * s2 * (d + 2.0 * lag),
            })
        }
        Model::SphericalT => Ok(Population {
            sigma_sq: 1.0,
            tr_sigma_sq: d,
        }),
        Model::EquicorrGauss => {
            let b = spec.beta;
            Ok(Population {
                sigma_sq: 1.0,
                tr_sigma_sq: d * (1.0 - b).powi(2) + 2.0 * b * (1.0 - b) * d + b * b * d * d,
            })
        }
        Model::RsrmCustom => Err(Error::InvalidSpec(
            "custom models carry caller-supplied population values".into(),
        )),
    }
}

/// Fills an n×d matrix row by row, each row from its own stream, then
/// adds the shift.
fn fill_rows(
    spec: &GeneratorSpec,
    n: usize,
    mut row: impl FnMut(&mut StreamRng, &mut [f64]) -> Result<()>,
) -> Result<ObservationMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample size must be at least 1".into(),
        ));
    }
    let d = spec.d;
    let mut data = vec![0.0; n * d];
    for (i, out) in data.chunks_exact_mut(d).enumerate() {
        let mut g = rng::stream(spec.seed, &[i as u64]);
        row(&mut g, out)?;
    }
    if !spec.shift.is_zero() {
        let mu = spec.shift.vector(d);
        for out in data.chunks_exact_mut(d) {
            out.iter_mut().zip(&mu).for_each(|(v, m)| *v += m);
        }
    }
    ObservationMatrix::new(n, d, data)
}

pub fn gen_ar1(spec: &GeneratorSpec, n: usize) -> Result<ObservationMatrix> {
    spec.expect(&[Model::Ar1Gauss, Model::Ar1T])?;
    let rho = spec.rho;
    match spec.model {
        Model::Ar1Gauss => {
            let start = (1.0 - rho * rho).sqrt().recip();
            fill_rows(spec, n, |g, out| {
                let z0: f64 = StandardNormal.sample(g);
                let mut prev = start * z0;
                out[0] = prev;
                for v in &mut out[1..] {
                    let e: f64 = StandardNormal.sample(g);
                    prev = rho * prev + e;
                    *v = prev;
                }
                Ok(())
            })
        }
        _ => {
            let t = StudentT::new(spec.df).map_err(|e| Error::InvalidSpec(e.to_string()))?;
            let unit = if spec.df > 2.0 {
                ((spec.df - 2.0) / spec.df).sqrt()
            } else {
                1.0
            };
            let burn_in = 10 * (1.0 / (1.0 - rho.abs())).ceil() as usize;
            fill_rows(spec, n, |g, out| {
                let mut prev = 0.0;
                for _ in 0..burn_in {
                    prev = rho * prev + unit * t.sample(g);
                }
                for v in out.iter_mut() {
                    prev = rho * prev + unit * t.sample(g);
                    *v = prev;
                }
                Ok(())
            })
        }
    }
}

/// Spherical t rows with their latent scales; σ_V² = 1 and tr(Σ_V²) = d.
pub fn gen_spherical_t(
    spec: &GeneratorSpec,
    n: usize,
) -> Result<(ObservationMatrix, RsrmAuxiliary)> {
    spec.expect(&[Model::SphericalT])?;
    let df = spec.df;
    let chi = if df.is_finite() {
        Some(ChiSquared::new(df).map_err(|e| Error::InvalidSpec(e.to_string()))?)
    } else {
        None
    };
    let base = |g: &mut StreamRng, out: &mut [f64]| {
        out.iter_mut().for_each(|v| *v = StandardNormal.sample(g));
    };
    let scale = |g: &mut StreamRng| match &chi {
        Some(chi) => (chi.sample(g) / df).sqrt(),
        None => 1.0,
    };
    gen_scaled(spec, n, &base, &scale, spec.d as f64)
}

/// Rows μ + V_i/P_i from a caller-supplied zero-mean base sampler and a
/// positive scale law. Within each row's stream the base row is drawn
/// before the scale.
pub fn gen_rsrm_custom(
    spec: &GeneratorSpec,
    n: usize,
    base: &dyn Fn(&mut StreamRng, &mut [f64]),
    scale_law: &dyn Fn(&mut StreamRng) -> f64,
    latent: Population,
) -> Result<(ObservationMatrix, RsrmAuxiliary)> {
    spec.expect(&[Model::RsrmCustom])?;
    let (x, aux) = gen_scaled(spec, n, base, scale_law, latent.tr_sigma_sq)?;
    Ok((
        x,
        RsrmAuxiliary::one_sample(aux.p_scales, latent.sigma_sq, latent.tr_sigma_sq)?,
    ))
}

fn gen_scaled(
    spec: &GeneratorSpec,
    n: usize,
    base: &dyn Fn(&mut StreamRng, &mut [f64]),
    scale_law: &dyn Fn(&mut StreamRng) -> f64,
    tr_v: f64,
) -> Result<(ObservationMatrix, RsrmAuxiliary)> {
    let mut scales = Vec::with_capacity(n);
    let x = fill_rows(spec, n, |g, out| {
        base(g, out);
        let p = scale_law(g);
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::NonpositiveScale(p));
        }
        out.iter_mut().for_each(|v| *v /= p);
        scales.push(p);
        Ok(())
    })?;
    Ok((x, RsrmAuxiliary::one_sample(scales, 1.0, tr_v)?))
}

pub fn gen_equicorr_gauss(spec: &GeneratorSpec, n: usize) -> Result<ObservationMatrix> {
    spec.expect(&[Model::EquicorrGauss])?;
    let own = (1.0 - spec.beta).sqrt();
    let common = spec.beta.sqrt();
    fill_rows(spec, n, |g, out| {
        let z0: f64 = StandardNormal.sample(g);
        for v in out.iter_mut() {
            let z: f64 = StandardNormal.sample(g);
            *v = own * z + common * z0;
        }
        Ok(())
    })
}

/// A generated sample together with latent scales and population traces.
///
/// Models without random scales report P_i = 1 and their own population
/// moments, so the oracle backend applies to every built-in model.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub data: ObservationMatrix,
    pub aux: RsrmAuxiliary,
}

/// Draws `n` rows from any built-in model.
pub fn generate(spec: &GeneratorSpec, n: usize) -> Result<Sample> {
    let (data, aux) = match spec.model {
        Model::SphericalT => gen_spherical_t(spec, n)?,
        Model::Ar1Gauss | Model::Ar1T | Model::EquicorrGauss => {
            let data = if spec.model == Model::EquicorrGauss {
                gen_equicorr_gauss(spec, n)?
            } else {
                gen_ar1(spec, n)?
            };
            let aux = match population(spec) {
                Ok(pop) => RsrmAuxiliary::one_sample(vec![1.0; n], pop.sigma_sq, pop.tr_sigma_sq)?,
                // heavy-tailed innovations: no finite population moments
                Err(_) => RsrmAuxiliary::one_sample(vec![1.0; n], 1.0, 0.0)?,
            };
            (data, aux)
        }
        Model::RsrmCustom => {
            return Err(Error::InvalidSpec(
                "custom models are generated with gen_rsrm_custom".into(),
            ))
        }
    };
    Ok(Sample { data, aux })
}

/// Two-sample auxiliary from two independent samples of the same model.
pub fn pair_auxiliary(x: &RsrmAuxiliary, y: &RsrmAuxiliary) -> Result<RsrmAuxiliary> {
    // same latent law in both samples, so tr(Σ_VΣ_W) = tr(Σ_V²)
    RsrmAuxiliary::two_sample(
        x.p_scales.clone(),
        y.p_scales.clone(),
        x.sigma_v_sq,
        y.sigma_v_sq,
        x.tr_sigma_v_sq,
        y.tr_sigma_v_sq,
        x.tr_sigma_v_sq,
    )
}
