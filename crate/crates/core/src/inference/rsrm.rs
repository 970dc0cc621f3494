//! Oracle calibration for randomly scaled ρ-mixing data.
//!
//! Observations are X_i = μ₁ + V_i/P_i and Y_j = μ₂ + W_j/Q_j with latent
//! positive scales P, Q and ρ-mixing V, W. Conditionally on the scales the
//! sign statistics are asymptotically Gaussian with variances that depend on
//! P, Q and the population traces of V and W. None of these can be estimated
//! from the data, so this backend is only usable when they are known.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{check_same_dim, ObservationMatrix};
use crate::ustat::{self, falling, StatKind};

use super::{check_alpha, gaussian_report, Method, OracleQuantities, TestReport};

/// Latent scales and population traces of the ρ-mixing components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsrmAuxiliary {
    pub p_scales: Vec<f64>,
    pub q_scales: Option<Vec<f64>>,
    pub sigma_v_sq: f64,
    pub sigma_w_sq: Option<f64>,
    pub tr_sigma_v_sq: f64,
    pub tr_sigma_w_sq: Option<f64>,
    pub tr_sigma_vw: Option<f64>,
}

fn check_scales(s: &[f64]) -> Result<()> {
    match s.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        Some(&bad) => Err(Error::NonpositiveScale(bad)),
        None => Ok(()),
    }
}

fn check_trace(name: &str, t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be finite and ≥ 0, got {t}"
        )))
    }
}

impl RsrmAuxiliary {
    pub fn one_sample(p_scales: Vec<f64>, sigma_v_sq: f64, tr_sigma_v_sq: f64) -> Result<Self> {
        check_scales(&p_scales)?;
        check_scales(&[sigma_v_sq])?;
        check_trace("tr(Σ_V²)", tr_sigma_v_sq)?;
        Ok(Self {
            p_scales,
            q_scales: None,
            sigma_v_sq,
            sigma_w_sq: None,
            tr_sigma_v_sq,
            tr_sigma_w_sq: None,
            tr_sigma_vw: None,
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub fn two_sample(
        p_scales: Vec<f64>,
        q_scales: Vec<f64>,
        sigma_v_sq: f64,
        sigma_w_sq: f64,
        tr_sigma_v_sq: f64,
        tr_sigma_w_sq: f64,
        tr_sigma_vw: f64,
    ) -> Result<Self> {
        check_scales(&p_scales)?;
        check_scales(&q_scales)?;
        check_scales(&[sigma_v_sq, sigma_w_sq])?;
        check_trace("tr(Σ_V²)", tr_sigma_v_sq)?;
        check_trace("tr(Σ_W²)", tr_sigma_w_sq)?;
        check_trace("tr(Σ_VΣ_W)", tr_sigma_vw)?;
        Ok(Self {
            p_scales,
            q_scales: Some(q_scales),
            sigma_v_sq,
            sigma_w_sq: Some(sigma_w_sq),
            tr_sigma_v_sq,
            tr_sigma_w_sq: Some(tr_sigma_w_sq),
            tr_sigma_vw: Some(tr_sigma_vw),
        })
    }

    fn second(&self) -> Result<(&[f64], f64, f64, f64)> {
        match (
            &self.q_scales,
            self.sigma_w_sq,
            self.tr_sigma_w_sq,
            self.tr_sigma_vw,
        ) {
            (Some(q), Some(sw), Some(trw), Some(trvw)) => Ok((q, sw, trw, trvw)),
            _ => Err(Error::MismatchedAuxiliary(
                "two-sample oracle needs Q scales, σ_W², tr(Σ_W²) and tr(Σ_VΣ_W)".into(),
            )),
        }
    }
}

/// Conditional moments for the two-sample statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleOracle {
    /// Centering coefficient of ‖μ‖² for d·T_WMW.
    pub s1: f64,
    pub l3: f64,
    pub l4: f64,
    pub l5: f64,
    /// Conditional variance of d·T_WMW.
    pub s2: f64,
    /// Conditional variance of T_CQ2.
    pub s3: f64,
}

impl TwoSampleOracle {
    pub fn compute(aux: &RsrmAuxiliary) -> Result<Self> {
        let p = &aux.p_scales;
        let (q, sw, trw, trvw) = aux.second()?;
        let (m, n) = (p.len(), q.len());
        if m < 2 || n < 2 {
            return Err(Error::TooFewObservations {
                what: "RSRM oracle",
                needed: 2,
                got: m.min(n),
            });
        }
        let sv = aux.sigma_v_sq;

        // k(i, j) = (σ_V²/P_i² + σ_W²/Q_j²)^{-1/2}
        let mut k = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                k[i * n + j] = (sv / (p[i] * p[i]) + sw / (q[j] * q[j])).sqrt().recip();
            }
        }
        let mut r = vec![0.0; m];
        let mut c = vec![0.0; n];
        let mut k_sq = 0.0;
        for i in 0..m {
            for j in 0..n {
                let v = k[i * n + j];
                r[i] += v;
                c[j] += v;
                k_sq += v * v;
            }
        }
        let total: f64 = r.iter().sum();
        let r_sq: f64 = r.iter().map(|v| v * v).sum();
        let c_sq: f64 = c.iter().map(|v| v * v).sum();
        let pairs = falling(m, 2) * falling(n, 2);
        let s1 = (total * total - r_sq - c_sq + k_sq) / pairs;

        // A_{i₁i₂} = r_{i₁} r_{i₂} − Σ_j k(i₁,j) k(i₂,j)
        let mut l3 = 0.0;
        for i1 in 0..m {
            for i2 in 0..m {
                if i1 == i2 {
                    continue;
                }
                let inner: f64 = (0..n).map(|j| k[i1 * n + j] * k[i2 * n + j]).sum();
                let a = r[i1] * r[i2] - inner;
                l3 += 2.0 * a * a / (p[i1] * p[i2]).powi(2);
            }
        }
        // B_{j₁j₂} = c_{j₁} c_{j₂} − Σ_i k(i,j₁) k(i,j₂)
        let mut l4 = 0.0;
        for j1 in 0..n {
            for j2 in 0..n {
                if j1 == j2 {
                    continue;
                }
                let inner: f64 = (0..m).map(|i| k[i * n + j1] * k[i * n + j2]).sum();
                let b = c[j1] * c[j2] - inner;
                l4 += 2.0 * b * b / (q[j1] * q[j2]).powi(2);
            }
        }
        // C_{ij} = (r_i − k_ij)(c_j − k_ij)
        let mut l5 = 0.0;
        for i in 0..m {
            for j in 0..n {
                let v = k[i * n + j];
                let cc = (r[i] - v) * (c[j] - v);
                l5 += 2.0 * cc * cc / (p[i] * q[j]).powi(2);
            }
        }
        let s2 = (l3 * aux.tr_sigma_v_sq + l4 * trw + 2.0 * l5 * trvw) / (pairs * pairs);

        let inv_sq_pairs = |s: &[f64]| {
            let t: f64 = s.iter().map(|v| v.powi(-2)).sum();
            let t2: f64 = s.iter().map(|v| v.powi(-4)).sum();
            t * t - t2
        };
        let p_inv: f64 = p.iter().map(|v| v.powi(-2)).sum();
        let q_inv: f64 = q.iter().map(|v| v.powi(-2)).sum();
        let s3 = 2.0 * aux.tr_sigma_v_sq * inv_sq_pairs(p) / falling(m, 2).powi(2)
            + 2.0 * trw * inv_sq_pairs(q) / falling(n, 2).powi(2)
            + 4.0 * trvw * p_inv * q_inv / ((m * n) as f64).powi(2);

        Ok(Self {
            s1,
            l3,
            l4,
            l5,
            s2,
            s3,
        })
    }
}

/// Conditional moments for the one-sample statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneSampleOracle {
    pub z1: f64,
    /// Absent when n < 4.
    pub z2: Option<f64>,
    pub z3: Option<f64>,
    pub gamma3: f64,
    pub z4: f64,
}

impl OneSampleOracle {
    pub fn compute(aux: &RsrmAuxiliary) -> Result<Self> {
        let p = &aux.p_scales;
        let n = p.len();
        if n < 2 {
            return Err(Error::TooFewObservations {
                what: "RSRM oracle",
                needed: 2,
                got: n,
            });
        }
        let sv = aux.sigma_v_sq;
        let trv = aux.tr_sigma_v_sq;
        let n2 = falling(n, 2);

        let sum_p: f64 = p.iter().sum();
        let sum_p2: f64 = p.iter().map(|v| v * v).sum();
        let z1 = (sum_p * sum_p - sum_p2) / (n2 * sv);
        let gamma3 = 2.0 * trv / (n2 * sv * sv);
        let t: f64 = p.iter().map(|v| v.powi(-2)).sum();
        let t2: f64 = p.iter().map(|v| v.powi(-4)).sum();
        let z4 = 2.0 * trv * (t * t - t2) / (n2 * n2);

        let (z2, z3) = if n >= 4 {
            let (z2, z3) = z2_z3(p, sv, trv);
            (Some(z2), Some(z3))
        } else {
            (None, None)
        };
        Ok(Self {
            z1,
            z2,
            z3,
            gamma3,
            z4,
        })
    }
}

/// Z₂ and Z₃ through Ũ in O(n³).
///
/// With f(a, c) = P_c/√(P_a² + P_c²) and g_ab = Σ_{c∉{a,b}} f(a, c),
/// Ũ_ab = g_ab·g_ba − Σ_{c∉{a,b}} f(a, c) f(b, c).
fn z2_z3(p: &[f64], sv: f64, trv: f64) -> (f64, f64) {
    let n = p.len();
    let mut f = vec![0.0; n * n];
    let mut row = vec![0.0; n];
    for a in 0..n {
        for c in 0..n {
            if a != c {
                let v = p[c] / (p[a] * p[a] + p[c] * p[c]).sqrt();
                f[a * n + c] = v;
                row[a] += v;
            }
        }
    }
    let mut up = 0.0;
    let mut uu = 0.0;
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let g_ab = row[a] - f[a * n + b];
            let g_ba = row[b] - f[b * n + a];
            let mut both = 0.0;
            for c in 0..n {
                if c != a && c != b {
                    both += f[a * n + c] * f[b * n + c];
                }
            }
            let u = g_ab * g_ba - both;
            up += u * p[a] * p[b];
            uu += u * u;
        }
    }
    let n4 = falling(n, 4);
    (2.0 * up / (n4 * sv), 8.0 * trv * uu / (n4 * sv).powi(2))
}

fn mismatch(what: &str, want: usize, got: usize) -> Error {
    Error::MismatchedAuxiliary(format!("{got} {what} scales for {want} observations"))
}

/// Two-sample test standardized by the conditional oracle variances.
pub fn rsrm_oracle_two_sample(
    x: &ObservationMatrix,
    y: &ObservationMatrix,
    aux: &RsrmAuxiliary,
    stat: StatKind,
    alpha: f64,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    check_same_dim(x, y)?;
    let (q, ..) = aux.second()?;
    if aux.p_scales.len() != x.rows() {
        return Err(mismatch("P", x.rows(), aux.p_scales.len()));
    }
    if q.len() != y.rows() {
        return Err(mismatch("Q", y.rows(), q.len()));
    }
    let value = ustat::two_sample(stat, x, y)?;
    let oracle = TwoSampleOracle::compute(aux)?;
    let (numerator, var) = match stat {
        StatKind::Wmw => (x.cols() as f64 * value.value, oracle.s2),
        _ => (value.value, oracle.s3),
    };
    if var <= 0.0 {
        return Err(Error::DegenerateVariance("oracle variance = 0"));
    }
    let mut report = gaussian_report(value, numerator / var.sqrt(), Method::RsrmOracle, alpha);
    report.oracle = Some(OracleQuantities::TwoSample(oracle));
    Ok(report)
}

/// One-sample test standardized by the conditional oracle variances.
pub fn rsrm_oracle_one_sample(
    x: &ObservationMatrix,
    aux: &RsrmAuxiliary,
    stat: StatKind,
    alpha: f64,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    if aux.p_scales.len() != x.rows() {
        return Err(mismatch("P", x.rows(), aux.p_scales.len()));
    }
    let value = ustat::one_sample(stat, x)?;
    let oracle = OneSampleOracle::compute(aux)?;
    let d = x.cols() as f64;
    let z = match stat {
        StatKind::S => nonzero(oracle.gamma3).map(|g| d * value.value / g.sqrt())?,
        // n ≥ 4 is guaranteed by the statistic itself
        StatKind::Sr => {
            nonzero(oracle.z3.unwrap_or(0.0)).map(|z3| d * value.value / (2.0 * z3.sqrt()))?
        }
        _ => nonzero(oracle.z4).map(|z4| value.value / z4.sqrt())?,
    };
    let mut report = gaussian_report(value, z, Method::RsrmOracle, alpha);
    report.oracle = Some(OracleQuantities::OneSample(oracle));
    Ok(report)
}

fn nonzero(v: f64) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::DegenerateVariance("oracle variance = 0"))
    }
}
