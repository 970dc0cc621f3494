//! Plug-in Gaussian calibration.

use crate::error::{require, Error, Result};
use crate::matrix::{check_same_dim, ObservationMatrix};
use crate::nuisance::{gamma1_hat, gamma2_hat, VarianceSnapshot};
use crate::ustat::{self, StatKind, StatisticValue};

use super::{check_alpha, gaussian_report, Method, TestReport};

/// Standardized two-sample score from a statistic and Γ₁ (plus σ₁², σ₂² for WMW).
pub fn standardize_two_sample(
    stat: StatisticValue,
    d: usize,
    nuisance: &VarianceSnapshot,
) -> Result<f64> {
    if nuisance.gamma <= 0.0 {
        return Err(Error::DegenerateVariance("Γ₁ = 0"));
    }
    let root = nuisance.gamma.sqrt();
    match stat.kind {
        StatKind::Cq2 => Ok(stat.value / root),
        StatKind::Wmw => {
            let s2 = nuisance
                .sigma2_sq
                .ok_or_else(|| Error::InvalidArgument("WMW standardization needs σ₂²".into()))?;
            Ok(d as f64 * (nuisance.sigma1_sq + s2) * stat.value / root)
        }
        other => Err(Error::InvalidArgument(format!(
            "{other} is a one-sample statistic"
        ))),
    }
}

/// Standardized one-sample score from a statistic and Γ₂ (plus σ² for S, SR).
pub fn standardize_one_sample(
    stat: StatisticValue,
    d: usize,
    nuisance: &VarianceSnapshot,
) -> Result<f64> {
    if nuisance.gamma <= 0.0 {
        return Err(Error::DegenerateVariance("Γ₂ = 0"));
    }
    let root = nuisance.gamma.sqrt();
    let scale = d as f64 * nuisance.sigma1_sq;
    match stat.kind {
        StatKind::Cq1 => Ok(stat.value / root),
        StatKind::S => Ok(scale * stat.value / root),
        StatKind::Sr => Ok(scale * stat.value / (2.0 * root)),
        other => Err(Error::InvalidArgument(format!(
            "{other} is a two-sample statistic"
        ))),
    }
}

/// Two-sample test calibrated by Γ̂₁. Needs m, n ≥ 4.
pub fn asymptotic_two_sample(
    x: &ObservationMatrix,
    y: &ObservationMatrix,
    stat: StatKind,
    alpha: f64,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    check_same_dim(x, y)?;
    // statistic first, so its own preconditions are the ones reported
    let value = ustat::two_sample(stat, x, y)?;
    require("asymptotic test", 4, x.rows())?;
    require("asymptotic test", 4, y.rows())?;
    let nuisance = gamma1_hat(x, y)?;
    asymptotic_two_sample_with(x, y, value, alpha, nuisance)
}

/// Two-sample test with caller-supplied nuisance values, e.g. population ones.
pub fn asymptotic_two_sample_with(
    x: &ObservationMatrix,
    y: &ObservationMatrix,
    stat: StatisticValue,
    alpha: f64,
    nuisance: VarianceSnapshot,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    check_same_dim(x, y)?;
    let z = standardize_two_sample(stat, x.cols(), &nuisance)?;
    let mut report = gaussian_report(stat, z, Method::Asymptotic, alpha);
    report.nuisance = Some(nuisance);
    Ok(report)
}

/// One-sample test calibrated by Γ̂₂. Needs n ≥ 4.
pub fn asymptotic_one_sample(
    x: &ObservationMatrix,
    stat: StatKind,
    alpha: f64,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    let value = ustat::one_sample(stat, x)?;
    require("asymptotic test", 4, x.rows())?;
    let nuisance = gamma2_hat(x)?;
    asymptotic_one_sample_with(x, value, alpha, nuisance)
}

pub fn asymptotic_one_sample_with(
    x: &ObservationMatrix,
    stat: StatisticValue,
    alpha: f64,
    nuisance: VarianceSnapshot,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    let z = standardize_one_sample(stat, x.cols(), &nuisance)?;
    let mut report = gaussian_report(stat, z, Method::Asymptotic, alpha);
    report.nuisance = Some(nuisance);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(seed: u64, n: usize, d: usize, shift0: f64) -> ObservationMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut data: Vec<f64> = (0..n * d)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        for i in 0..n {
            data[i * d] += shift0;
        }
        ObservationMatrix::new(n, d, data).unwrap()
    }

    #[test]
    fn large_shift_rejects() {
        let x = gaussian(1, 20, 100, 0.0);
        let y = gaussian(2, 20, 100, 50.0);
        for kind in [StatKind::Cq2, StatKind::Wmw] {
            let r = asymptotic_two_sample(&x, &y, kind, 0.05).unwrap();
            assert!(r.p_value < 1e-3, "{kind}: {}", r.p_value);
            assert!(r.reject);
        }
        let x = gaussian(3, 20, 100, 20.0);
        for kind in [StatKind::Cq1, StatKind::S, StatKind::Sr] {
            let r = asymptotic_one_sample(&x, kind, 0.05).unwrap();
            assert!(r.p_value < 1e-3, "{kind}: {}", r.p_value);
        }
    }

    #[test]
    fn z_recomputes_from_report_fields() {
        let x = gaussian(4, 9, 12, 0.3);
        let y = gaussian(5, 7, 12, 0.0);
        let r = asymptotic_two_sample(&x, &y, StatKind::Wmw, 0.05).unwrap();
        let nu = r.nuisance.unwrap();
        let z = 12.0 * (nu.sigma1_sq + nu.sigma2_sq.unwrap()) * r.statistic.value / nu.gamma.sqrt();
        assert!((r.z.unwrap() - z).abs() <= 1e-12 * z.abs().max(1.0));
        assert_eq!(r.p_value, normal::upper_tail(r.z.unwrap()));

        let r = asymptotic_one_sample(&x, StatKind::Sr, 0.05).unwrap();
        let nu = r.nuisance.unwrap();
        let z = 12.0 * nu.sigma1_sq * r.statistic.value / (2.0 * nu.gamma.sqrt());
        assert!((r.z.unwrap() - z).abs() <= 1e-12 * z.abs().max(1.0));
    }

    #[test]
    fn needs_four_rows_and_valid_alpha() {
        let x = gaussian(6, 3, 5, 0.0);
        let y = gaussian(7, 6, 5, 0.0);
        assert!(matches!(
            asymptotic_two_sample(&x, &y, StatKind::Cq2, 0.05),
            Err(Error::TooFewObservations { needed: 4, .. })
        ));
        assert!(asymptotic_one_sample(&y, StatKind::S, 1.0).is_err());
        assert!(asymptotic_one_sample(&y, StatKind::Wmw, 0.05).is_err());
    }

    #[test]
    fn identical_rows_are_degenerate() {
        let x = ObservationMatrix::from_rows(&[[1.0, 2.0]; 5]).unwrap();
        assert!(matches!(
            asymptotic_one_sample(&x, StatKind::Cq1, 0.05),
            Err(Error::DegenerateVariance(_))
        ));
    }
}
