//! Turning statistics into decisions.
//!
//! All tests are right-tailed: every statistic estimates a nonnegative
//! location functional, so large values are evidence against H₀.
//!
//! * [`asymptotic`]: standardize with plug-in nuisance estimates and compare
//!   to the Gaussian limit.
//! * [`randomization`]: permutation (two samples) or sign-flip (one sample)
//!   reference distributions with an add-one p-value.
//! * [`rsrm`]: conditional Gaussian limits for randomly scaled ρ-mixing data
//!   when the latent scales are known, as in a simulation.

pub mod asymptotic;
pub mod randomization;
pub mod rsrm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;
use crate::nuisance::VarianceSnapshot;
use crate::ustat::StatisticValue;

pub use asymptotic::{
    asymptotic_one_sample, asymptotic_one_sample_with, asymptotic_two_sample,
    asymptotic_two_sample_with, standardize_one_sample, standardize_two_sample,
};
pub use randomization::{randomization_one_sample, randomization_two_sample};
pub use rsrm::{
    rsrm_oracle_one_sample, rsrm_oracle_two_sample, OneSampleOracle, RsrmAuxiliary, TwoSampleOracle,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Asymptotic,
    Randomization,
    RsrmOracle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Asymptotic => "asymptotic",
            Method::Randomization => "randomization",
            Method::RsrmOracle => "rsrm-oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "asymptotic" | "asym" => Ok(Method::Asymptotic),
            "randomization" | "permutation" | "perm" | "signflip" => Ok(Method::Randomization),
            "rsrm-oracle" | "oracle" => Ok(Method::RsrmOracle),
            other => Err(Error::Parse(format!("unknown method '{other}'"))),
        }
    }
}

/// Latent-scale quantities reported by the oracle backend.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OracleQuantities {
    TwoSample(TwoSampleOracle),
    OneSample(OneSampleOracle),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: StatisticValue,
    /// Standardized score; `None` for the randomization backend.
    pub z: Option<f64>,
    pub p_value: f64,
    pub method: Method,
    pub alpha: f64,
    pub reject: bool,
    pub nuisance: Option<VarianceSnapshot>,
    pub oracle: Option<OracleQuantities>,
    pub n_resamples: Option<usize>,
    pub seed: Option<u64>,
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

/// Report for a Gaussian-referenced score.
pub(crate) fn gaussian_report(
    statistic: StatisticValue,
    z: f64,
    method: Method,
    alpha: f64,
) -> TestReport {
    let p_value = normal::upper_tail(z);
    TestReport {
        statistic,
        z: Some(z),
        p_value,
        method,
        alpha,
        reject: p_value <= alpha,
        nuisance: None,
        oracle: None,
        n_resamples: None,
        seed: None,
    }
}
