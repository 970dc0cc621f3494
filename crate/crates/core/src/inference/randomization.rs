//! Permutation and sign-flip calibration.
//!
//! Per-pair quantities (Gram entries, unit differences, unit sums) are
//! computed once; each resample only re-aggregates them under the new
//! labeling. Resample `r` draws from its own stream `rng::stream(seed, [r])`,
//! so the p-value does not depend on how rayon schedules the work.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{add_assign, check_same_dim, norm_sq, sub_assign, ObservationMatrix};
use crate::rng;
use crate::ustat::{self, falling, sign_in_place, sr_from_row_sums, wmw_from_margins, StatKind};

use super::{check_alpha, Method, TestReport};

/// Vectors indexed by unordered pairs a < b of `n` items; `None` marks a
/// zero vector that has no spatial sign.
struct PairTable {
    n: usize,
    d: usize,
    data: Vec<f64>,
    ok: Vec<bool>,
}

impl PairTable {
    /// `fill(a, b, out)` writes the raw vector for pair (a, b).
    fn signs(n: usize, d: usize, fill: impl Fn(usize, usize, &mut [f64])) -> Self {
        let pairs = n * n.saturating_sub(1) / 2;
        let mut data = vec![0.0; pairs * d];
        let mut ok = vec![true; pairs];
        let mut k = 0;
        for a in 0..n {
            for b in a + 1..n {
                let out = &mut data[k * d..(k + 1) * d];
                fill(a, b, out);
                ok[k] = sign_in_place(out, String::new).is_ok();
                k += 1;
            }
        }
        Self { n, d, data, ok }
    }

    #[inline]
    fn index(&self, a: usize, b: usize) -> usize {
        debug_assert!(a < b);
        a * (2 * self.n - a - 1) / 2 + (b - a - 1)
    }

    #[inline]
    fn get(&self, a: usize, b: usize) -> Option<&[f64]> {
        let k = self.index(a, b);
        self.ok[k].then(|| &self.data[k * self.d..(k + 1) * self.d])
    }
}

fn add_signed(acc: &mut [f64], v: &[f64], positive: bool) {
    if positive {
        add_assign(acc, v);
    } else {
        sub_assign(acc, v);
    }
}

enum TwoSampleEval {
    Cq2 { gram: Vec<f64> },
    Wmw { diffs: PairTable },
}

impl TwoSampleEval {
    fn new(kind: StatKind, pooled: &ObservationMatrix) -> Result<Self> {
        match kind {
            StatKind::Cq2 => Ok(Self::Cq2 {
                gram: pooled.gram(),
            }),
            StatKind::Wmw => Ok(Self::Wmw {
                diffs: PairTable::signs(pooled.rows(), pooled.cols(), |a, b, out| {
                    out.copy_from_slice(pooled.row(b));
                    sub_assign(out, pooled.row(a));
                }),
            }),
            other => Err(Error::InvalidArgument(format!(
                "{other} is a one-sample statistic"
            ))),
        }
    }

    /// Statistic with pooled rows `labels[..m]` as X and the rest as Y.
    fn eval(&self, labels: &[usize], m: usize) -> Result<f64> {
        let n = labels.len() - m;
        let (xs, ys) = labels.split_at(m);
        match self {
            Self::Cq2 { gram } => {
                let total = labels.len();
                let g = |a: usize, b: usize| gram[a * total + b];
                let mut xx = 0.0;
                let mut yy = 0.0;
                let mut xy = 0.0;
                for (k, &a) in xs.iter().enumerate() {
                    for &b in &xs[k + 1..] {
                        xx += g(a, b);
                    }
                    for &b in ys {
                        xy += g(a, b);
                    }
                }
                for (k, &a) in ys.iter().enumerate() {
                    for &b in &ys[k + 1..] {
                        yy += g(a, b);
                    }
                }
                Ok(2.0 * xx / falling(m, 2) + 2.0 * yy / falling(n, 2) - 2.0 * xy / (m * n) as f64)
            }
            Self::Wmw { diffs } => {
                let d = diffs.d;
                let mut rows = vec![0.0; m * d];
                let mut cols = vec![0.0; n * d];
                let mut u_norms = 0.0;
                for (i, &a) in xs.iter().enumerate() {
                    for (j, &b) in ys.iter().enumerate() {
                        // U_ij = S(Z_b − Z_a) = −S(Z_a − Z_b)
                        let (lo, hi, positive) = if a < b { (a, b, true) } else { (b, a, false) };
                        let u = diffs.get(lo, hi).ok_or_else(|| Error::ZeroVector {
                            context: format!("pooled rows {a} and {b} coincide"),
                        })?;
                        add_signed(&mut rows[i * d..(i + 1) * d], u, positive);
                        add_signed(&mut cols[j * d..(j + 1) * d], u, positive);
                        u_norms += norm_sq(u);
                    }
                }
                Ok(wmw_from_margins(&rows, &cols, d, m, n, u_norms))
            }
        }
    }
}

enum OneSampleEval {
    /// Gram matrix of the rows (CQ1) or of their spatial signs (S).
    Quadratic {
        gram: Vec<f64>,
    },
    Sr {
        plus: PairTable,
        minus: PairTable,
    },
}

impl OneSampleEval {
    fn new(kind: StatKind, x: &ObservationMatrix) -> Result<Self> {
        let (n, d) = (x.rows(), x.cols());
        match kind {
            StatKind::Cq1 => Ok(Self::Quadratic { gram: x.gram() }),
            StatKind::S => {
                let mut signs = Vec::with_capacity(n * d);
                for (i, r) in x.iter_rows().enumerate() {
                    let mut s = r.to_vec();
                    sign_in_place(&mut s, || format!("row {i}"))?;
                    signs.extend_from_slice(&s);
                }
                let signs = ObservationMatrix::new(n, d, signs)?;
                Ok(Self::Quadratic { gram: signs.gram() })
            }
            StatKind::Sr => Ok(Self::Sr {
                plus: PairTable::signs(n, d, |a, b, out| {
                    out.copy_from_slice(x.row(a));
                    add_assign(out, x.row(b));
                }),
                minus: PairTable::signs(n, d, |a, b, out| {
                    out.copy_from_slice(x.row(a));
                    sub_assign(out, x.row(b));
                }),
            }),
            other => Err(Error::InvalidArgument(format!(
                "{other} is a two-sample statistic"
            ))),
        }
    }

    /// Statistic of the rows ε_i X_i, with `flips[i]` true meaning ε_i = −1.
    fn eval(&self, flips: &[bool]) -> Result<f64> {
        let n = flips.len();
        let eps = |i: usize| if flips[i] { -1.0 } else { 1.0 };
        match self {
            Self::Quadratic { gram } => {
                let mut acc = 0.0;
                for a in 0..n {
                    let mut row = 0.0;
                    for b in a + 1..n {
                        row += eps(b) * gram[a * n + b];
                    }
                    acc += eps(a) * row;
                }
                Ok(2.0 * acc / falling(n, 2))
            }
            Self::Sr { plus, minus } => {
                let d = plus.d;
                let mut row_sums = vec![0.0; n * d];
                let mut w_norms = 0.0;
                for a in 0..n {
                    for b in a + 1..n {
                        // ε_a X_a + ε_b X_b = ε_a (X_a ± X_b)
                        let table = if flips[a] == flips[b] { plus } else { minus };
                        let w = table.get(a, b).ok_or_else(|| Error::ZeroVector {
                            context: format!("signed rows {a} and {b} cancel"),
                        })?;
                        add_signed(&mut row_sums[a * d..(a + 1) * d], w, !flips[a]);
                        add_signed(&mut row_sums[b * d..(b + 1) * d], w, !flips[a]);
                        w_norms += 2.0 * norm_sq(w);
                    }
                }
                Ok(sr_from_row_sums(&row_sums, n, d, w_norms))
            }
        }
    }
}

fn finish(
    statistic: ustat::StatisticValue,
    exceed: usize,
    n_resamples: usize,
    alpha: f64,
    seed: u64,
) -> TestReport {
    let p_value = (1 + exceed) as f64 / (n_resamples + 1) as f64;
    TestReport {
        statistic,
        z: None,
        p_value,
        method: Method::Randomization,
        alpha,
        reject: p_value <= alpha,
        nuisance: None,
        oracle: None,
        n_resamples: Some(n_resamples),
        seed: Some(seed),
    }
}

fn check_resamples(n_resamples: usize) -> Result<()> {
    if n_resamples == 0 {
        Err(Error::InvalidArgument(
            "n_resamples must be at least 1".into(),
        ))
    } else {
        Ok(())
    }
}

/// Permutation test: relabels the pooled rows into groups of sizes m and n.
pub fn randomization_two_sample(
    x: &ObservationMatrix,
    y: &ObservationMatrix,
    stat: StatKind,
    alpha: f64,
    n_resamples: usize,
    seed: u64,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    check_resamples(n_resamples)?;
    let statistic = ustat::two_sample(stat, x, y)?;
    check_same_dim(x, y)?;
    let pooled = x.vstack(y)?;
    let m = x.rows();
    let eval = TwoSampleEval::new(stat, &pooled)?;
    let identity: Vec<usize> = (0..pooled.rows()).collect();
    let observed = eval.eval(&identity, m)?;

    let exceed = (0..n_resamples)
        .into_par_iter()
        .map(|r| {
            let mut g = rng::stream(seed, &[r as u64]);
            let mut labels = identity.clone();
            labels.shuffle(&mut g);
            eval.eval(&labels, m).map(|t| t >= observed)
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&hit| hit)
        .count();
    Ok(finish(statistic, exceed, n_resamples, alpha, seed))
}

/// Sign-flip test: multiplies each row by an independent fair ±1.
///
/// Exact when the null distribution of each row is symmetric about zero.
pub fn randomization_one_sample(
    x: &ObservationMatrix,
    stat: StatKind,
    alpha: f64,
    n_resamples: usize,
    seed: u64,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    check_resamples(n_resamples)?;
    let statistic = ustat::one_sample(stat, x)?;
    let eval = OneSampleEval::new(stat, x)?;
    let n = x.rows();
    let observed = eval.eval(&vec![false; n])?;

    let exceed = (0..n_resamples)
        .into_par_iter()
        .map(|r| {
            let mut g = rng::stream(seed, &[r as u64]);
            let flips: Vec<bool> = (0..n).map(|_| g.random()).collect();
            eval.eval(&flips).map(|t| t >= observed)
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&hit| hit)
        .count();
    Ok(finish(statistic, exceed, n_resamples, alpha, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(seed: u64, n: usize, d: usize, shift: f64) -> ObservationMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * d)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z + shift
            })
            .collect::<Vec<f64>>();
        ObservationMatrix::new(n, d, data).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn two_sample_evaluator_matches_public_statistic() {
        let (x, y) = (gaussian(1, 5, 4, 0.0), gaussian(2, 7, 4, 0.5));
        let pooled = x.vstack(&y).unwrap();
        let mut labels: Vec<usize> = (0..12).collect();
        let mut g = rng::stream(3, &[]);
        for kind in [StatKind::Cq2, StatKind::Wmw] {
            let eval = TwoSampleEval::new(kind, &pooled).unwrap();
            for _ in 0..5 {
                labels.shuffle(&mut g);
                let xs = pooled.select_rows(&labels[..5]).unwrap();
                let ys = pooled.select_rows(&labels[5..]).unwrap();
                let want = ustat::two_sample(kind, &xs, &ys).unwrap().value;
                assert!(close(eval.eval(&labels, 5).unwrap(), want), "{kind}");
            }
        }
    }

    #[test]
    fn one_sample_evaluator_matches_public_statistic() {
        let x = gaussian(4, 7, 3, 0.2);
        let mut g = rng::stream(5, &[]);
        for kind in [StatKind::Cq1, StatKind::S, StatKind::Sr] {
            let eval = OneSampleEval::new(kind, &x).unwrap();
            for _ in 0..5 {
                let flips: Vec<bool> = (0..7).map(|_| g.random()).collect();
                let signs: Vec<f64> = flips.iter().map(|&f| if f { -1.0 } else { 1.0 }).collect();
                let flipped = x.row_scaled(&signs).unwrap();
                let want = ustat::one_sample(kind, &flipped).unwrap().value;
                assert!(close(eval.eval(&flips).unwrap(), want), "{kind}");
            }
        }
    }

    #[test]
    fn add_one_p_value_floor_under_large_shift() {
        let x = gaussian(6, 15, 20, 0.0);
        let y = gaussian(7, 15, 20, 5.0);
        let r = randomization_two_sample(&x, &y, StatKind::Wmw, 0.05, 99, 1).unwrap();
        assert_eq!(r.p_value, 0.01);
        assert!(r.z.is_none());
        let r = randomization_one_sample(&y, StatKind::S, 0.05, 199, 1).unwrap();
        assert_eq!(r.p_value, 1.0 / 200.0);
        assert_eq!(r.n_resamples, Some(199));
    }

    #[test]
    fn same_seed_same_report() {
        let (x, y) = (gaussian(8, 10, 6, 0.0), gaussian(9, 10, 6, 0.0));
        let a = randomization_two_sample(&x, &y, StatKind::Cq2, 0.05, 200, 42).unwrap();
        let b = randomization_two_sample(&x, &y, StatKind::Cq2, 0.05, 200, 42).unwrap();
        assert_eq!(a, b);
        let a = randomization_one_sample(&x, StatKind::Sr, 0.05, 100, 42).unwrap();
        let b = randomization_one_sample(&x, StatKind::Sr, 0.05, 100, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn duplicate_pooled_rows_fail_only_when_compared() {
        // X rows coincide, which is harmless until a permutation puts one of
        // them in Y
        let x = ObservationMatrix::from_rows(&[[1.0, 0.0], [1.0, 0.0], [0.0, 3.0]]).unwrap();
        let y = ObservationMatrix::from_rows(&[[2.0, 2.0], [5.0, 1.0], [4.0, 4.0]]).unwrap();
        assert!(ustat::t_wmw(&x, &y).is_ok());
        let err = randomization_two_sample(&x, &y, StatKind::Wmw, 0.05, 200, 0).unwrap_err();
        assert!(matches!(err, Error::ZeroVector { .. }));
    }

    #[test]
    fn rejects_zero_resamples() {
        let x = gaussian(10, 6, 2, 0.0);
        assert!(randomization_one_sample(&x, StatKind::Cq1, 0.05, 0, 0).is_err());
    }
}
