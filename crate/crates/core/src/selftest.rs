//! Fast paths against the index-loop oracles on random small instances,
//! plus the unit-scale collapse of the oracle variances.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::inference::{OneSampleOracle, RsrmAuxiliary, TwoSampleOracle};
use crate::matrix::ObservationMatrix;
use crate::naive;
use crate::nuisance;
use crate::rng::{self, StreamRng};
use crate::ustat::{self, falling};

pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub max_rel_dev: f64,
    pub cases: usize,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.max_rel_dev <= TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub trials: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

/// |a − b| / |b|, with 0/0 read as no deviation.
pub fn rel_dev(a: f64, b: f64) -> f64 {
    let diff = (a - b).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / b.abs()
    }
}

struct Tally {
    names: Vec<&'static str>,
    worst: Vec<f64>,
    cases: Vec<usize>,
}

impl Tally {
    fn new(names: &[&'static str]) -> Self {
        Self {
            names: names.to_vec(),
            worst: vec![0.0; names.len()],
            cases: vec![0; names.len()],
        }
    }

    fn record(&mut self, name: &str, dev: f64) {
        let k = self
            .names
            .iter()
            .position(|n| *n == name)
            .expect("known check");
        // NaN counts as a failure
        self.worst[k] = if dev.is_nan() {
            f64::INFINITY
        } else {
            self.worst[k].max(dev)
        };
        self.cases[k] += 1;
    }
}

const NAMES: [&str; 13] = [
    "T_CQ1",
    "T_CQ2",
    "T_S",
    "T_SR",
    "T_WMW",
    "tr_sigma_sq",
    "tr_sigma_cross",
    "gamma1",
    "rsrm_s1",
    "rsrm_l345",
    "rsrm_z2_z3",
    "collapse_two_sample",
    "collapse_one_sample",
];

fn uniform(g: &mut StreamRng, n: usize, d: usize) -> Result<ObservationMatrix> {
    let data = (0..n * d).map(|_| g.random_range(-2.0..2.0)).collect();
    ObservationMatrix::new(n, d, data)
}

fn scales(g: &mut StreamRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| g.random_range(0.2..3.0)).collect()
}

/// Runs `trials` random instances from `seed`. Every trial exercises every
/// check.
pub fn run(trials: usize, seed: u64) -> Result<SelftestReport> {
    let mut t = Tally::new(&NAMES);
    for trial in 0..trials.max(1) {
        let mut g = rng::stream(seed, &[trial as u64]);
        let d = g.random_range(1..=10);
        let (m, n) = (g.random_range(2..=8), g.random_range(2..=8));
        let x = uniform(&mut g, m, d)?;
        let y = uniform(&mut g, n, d)?;
        // the quadruple-index quantities need at least four rows
        let (m4, n4) = (g.random_range(4..=8), g.random_range(4..=8));
        let x4 = uniform(&mut g, m4, d)?;
        let y4 = uniform(&mut g, n4, d)?;

        t.record("T_CQ1", rel_dev(ustat::t_cq1(&x)?.value, naive::t_cq1(&x)));
        t.record(
            "T_CQ2",
            rel_dev(ustat::t_cq2(&x, &y)?.value, naive::t_cq2(&x, &y)),
        );
        t.record("T_S", rel_dev(ustat::t_s(&x)?.value, naive::t_s(&x)?));
        t.record("T_SR", rel_dev(ustat::t_sr(&x4)?.value, naive::t_sr(&x4)?));
        t.record(
            "T_WMW",
            rel_dev(ustat::t_wmw(&x, &y)?.value, naive::t_wmw(&x, &y)?),
        );
        t.record(
            "tr_sigma_sq",
            rel_dev(nuisance::tr_sigma_sq_hat(&x4)?, naive::tr_sigma_sq_hat(&x4)),
        );
        t.record(
            "tr_sigma_cross",
            rel_dev(
                nuisance::tr_sigma_cross_hat(&x, &y)?,
                naive::tr_sigma_cross_hat(&x, &y),
            ),
        );
        t.record(
            "gamma1",
            rel_dev(
                nuisance::gamma1_hat(&x4, &y4)?.gamma,
                naive::gamma1_hat(&x4, &y4),
            ),
        );

        // oracle sums with random scales
        let (p, q) = (scales(&mut g, m), scales(&mut g, n));
        let (sv, sw) = (g.random_range(0.5..2.0), g.random_range(0.5..2.0));
        let aux = RsrmAuxiliary::two_sample(p.clone(), q.clone(), sv, sw, 3.0, 2.0, 1.0)?;
        let o = TwoSampleOracle::compute(&aux)?;
        t.record("rsrm_s1", rel_dev(o.s1, naive::rsrm::s1(&p, &q, sv, sw)));
        let (l3, l4, l5) = naive::rsrm::l345(&p, &q, sv, sw);
        t.record(
            "rsrm_l345",
            rel_dev(o.l3, l3)
                .max(rel_dev(o.l4, l4))
                .max(rel_dev(o.l5, l5)),
        );
        let p4 = scales(&mut g, m4);
        let o1 = OneSampleOracle::compute(&RsrmAuxiliary::one_sample(p4.clone(), sv, 5.0)?)?;
        let (z2, z3) = naive::rsrm::z2_z3(&p4, sv, 5.0);
        t.record(
            "rsrm_z2_z3",
            rel_dev(o1.z2.unwrap_or(f64::NAN), z2).max(rel_dev(o1.z3.unwrap_or(f64::NAN), z3)),
        );

        // unit scales reduce the oracle variances to Γ₁ and Γ₂
        let tr = g.random_range(1.0..50.0);
        let unit = RsrmAuxiliary::two_sample(vec![1.0; m], vec![1.0; n], 1.0, 1.0, tr, tr, tr)?;
        let o = TwoSampleOracle::compute(&unit)?;
        let gamma1 =
            2.0 * tr / falling(m, 2) + 2.0 * tr / falling(n, 2) + 4.0 * tr / (m * n) as f64;
        t.record(
            "collapse_two_sample",
            rel_dev(o.s1, 0.5)
                .max(rel_dev(o.s3, gamma1))
                .max(rel_dev(o.s2, gamma1 / 4.0)),
        );
        let o1 = OneSampleOracle::compute(&RsrmAuxiliary::one_sample(vec![1.0; m4], 1.0, tr)?)?;
        let gamma2 = 2.0 * tr / falling(m4, 2);
        let u = naive::rsrm::u_tilde(&vec![1.0; m4]);
        let u_want = ((m4 - 2) * (m4 - 3)) as f64 / 2.0;
        t.record(
            "collapse_one_sample",
            rel_dev(o1.z1, 1.0)
                .max(rel_dev(o1.gamma3, gamma2))
                .max(rel_dev(o1.z4, gamma2))
                .max(rel_dev(o1.z3.unwrap_or(f64::NAN), gamma2))
                .max(rel_dev(u[1], u_want)),
        );
    }
    let checks = t
        .names
        .iter()
        .zip(t.worst)
        .zip(t.cases)
        .map(|((name, worst), cases)| Check {
            name: name.to_string(),
            max_rel_dev: worst,
            cases,
        })
        .collect();
    Ok(SelftestReport {
        trials: trials.max(1),
        seed,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_trial_covers_everything() {
        let r = run(1, 3).unwrap();
        assert_eq!(r.checks.len(), NAMES.len());
        assert!(r.checks.iter().all(|c| c.cases == 1));
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn deterministic() {
        assert_eq!(run(5, 9).unwrap(), run(5, 9).unwrap());
    }
}
