//! Unbiased plug-in estimators for the variance functionals that standardize
//! the statistics.
//!
//! The four-index trace estimators are reduced to entrywise sums over the
//! (cross-)Gram matrix of the centered data. Centering leaves every
//! difference X_i − X_j unchanged, so it does not alter the estimator; it only
//! keeps the Gram entries small.

use serde::{Deserialize, Serialize};

use crate::error::{require, Error, Result};
use crate::matrix::{check_same_dim, ObservationMatrix};
use crate::ustat::falling;

/// Plug-in nuisance estimates used by the asymptotic backend.
///
/// Two-sample snapshots fill every field; one-sample snapshots leave the
/// second-sample and cross fields empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceSnapshot {
    pub tr_sigma1_sq: f64,
    pub tr_sigma2_sq: Option<f64>,
    pub tr_sigma1_sigma2: Option<f64>,
    /// Γ̂₁ (two-sample) or Γ̂₂ (one-sample).
    pub gamma: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: Option<f64>,
}

/// Unbiased estimator of tr(Σ²) from one sample (m ≥ 4).
pub fn tr_sigma_sq_hat(x: &ObservationMatrix) -> Result<f64> {
    let m = x.rows();
    require("trace estimator", 4, m)?;
    let g = x.centered().gram();

    let mut s2 = 0.0; // Σ_{i≠j} a_ij²
    let mut path = 0.0; // Σ_i (r_i² − Σ_{j≠i} a_ij²)
    let mut r_sq = 0.0;
    let mut total = 0.0;
    for i in 0..m {
        let row = &g[i * m..(i + 1) * m];
        let mut r = 0.0;
        let mut q = 0.0;
        for (j, &a) in row.iter().enumerate() {
            if j != i {
                r += a;
                q += a * a;
            }
        }
        s2 += q;
        path += r * r - q;
        r_sq += r * r;
        total += r;
    }
    let disjoint = total * total - 4.0 * r_sq + 2.0 * s2;
    let mf = m as f64;
    let quad = (mf - 2.0) * (mf - 3.0) * s2 - 2.0 * (mf - 3.0) * path + disjoint;
    Ok((quad / falling(m, 4)).max(0.0))
}

/// Unbiased estimator of tr(Σ₁Σ₂) from two independent samples.
pub fn tr_sigma_cross_hat(x: &ObservationMatrix, y: &ObservationMatrix) -> Result<f64> {
    let (m, n) = (x.rows(), y.rows());
    require("cross trace estimator", 2, m)?;
    require("cross trace estimator", 2, n)?;
    check_same_dim(x, y)?;
    let k = x.centered().cross_gram(&y.centered());

    let mut q = 0.0;
    let mut row_sums = vec![0.0; m];
    let mut col_sums = vec![0.0; n];
    let mut row_sq = vec![0.0; m];
    let mut col_sq = vec![0.0; n];
    for i in 0..m {
        for j in 0..n {
            let v = k[i * n + j];
            q += v * v;
            row_sums[i] += v;
            col_sums[j] += v;
            row_sq[i] += v * v;
            col_sq[j] += v * v;
        }
    }
    let same_row: f64 = row_sums.iter().zip(&row_sq).map(|(r, s)| r * r - s).sum();
    let same_col: f64 = col_sums.iter().zip(&col_sq).map(|(c, s)| c * c - s).sum();
    let total: f64 = row_sums.iter().sum();
    let r2: f64 = row_sums.iter().map(|r| r * r).sum();
    let c2: f64 = col_sums.iter().map(|c| c * c).sum();
    let disjoint = total * total - r2 - c2 + q;

    let (mf, nf) = (m as f64, n as f64);
    let quad =
        (mf - 1.0) * (nf - 1.0) * q - (mf - 1.0) * same_row - (nf - 1.0) * same_col + disjoint;
    Ok((quad / (falling(m, 2) * falling(n, 2))).max(0.0))
}

/// Coordinate-averaged sample variance: [d(n−1)]⁻¹ Σ_k Σ_i (X_ik − X̄_k)².
pub fn sigma_sq_hat(x: &ObservationMatrix) -> Result<f64> {
    let n = x.rows();
    require("variance estimator", 2, n)?;
    let ss: f64 = x.centered().as_slice().iter().map(|v| v * v).sum();
    Ok(ss / (x.cols() * (n - 1)) as f64)
}

/// Γ̂₁ = 2/(m)₂·tr̂(Σ₁²) + 2/(n)₂·tr̂(Σ₂²) + 4/(mn)·tr̂(Σ₁Σ₂), with σ̂₁², σ̂₂².
pub fn gamma1_hat(x: &ObservationMatrix, y: &ObservationMatrix) -> Result<VarianceSnapshot> {
    check_same_dim(x, y)?;
    let (m, n) = (x.rows(), y.rows());
    let tr1 = tr_sigma_sq_hat(x)?;
    let tr2 = tr_sigma_sq_hat(y)?;
    let tr12 = tr_sigma_cross_hat(x, y)?;
    let gamma = 2.0 / falling(m, 2) * tr1 + 2.0 / falling(n, 2) * tr2 + 4.0 / (m * n) as f64 * tr12;
    if gamma <= 0.0 {
        return Err(Error::DegenerateVariance("Γ̂₁ = 0"));
    }
    Ok(VarianceSnapshot {
        tr_sigma1_sq: tr1,
        tr_sigma2_sq: Some(tr2),
        tr_sigma1_sigma2: Some(tr12),
        gamma,
        sigma1_sq: sigma_sq_hat(x)?,
        sigma2_sq: Some(sigma_sq_hat(y)?),
    })
}

/// Γ̂₂ = 2·tr̂(Σ²)/(n)₂ with σ̂².
pub fn gamma2_hat(x: &ObservationMatrix) -> Result<VarianceSnapshot> {
    let tr = tr_sigma_sq_hat(x)?;
    let gamma = 2.0 * tr / falling(x.rows(), 2);
    if gamma <= 0.0 {
        return Err(Error::DegenerateVariance("Γ̂₂ = 0"));
    }
    Ok(VarianceSnapshot {
        tr_sigma1_sq: tr,
        tr_sigma2_sq: None,
        tr_sigma1_sigma2: None,
        gamma,
        sigma1_sq: sigma_sq_hat(x)?,
        sigma2_sq: None,
    })
}
