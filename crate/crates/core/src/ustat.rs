//! The five location statistics as U-statistics over ordered tuples of
//! distinct indices.
//!
//! Each statistic is evaluated in O((m + n)·d) or O(n²·d) time by expanding
//! the tuple sum into full sums and subtracting the coincident-index terms
//! (inclusion–exclusion). Reference index-loop versions live in
//! [`crate::naive`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{require, Error, Result};
use crate::matrix::{add_assign, check_same_dim, norm_sq, sub_assign, ObservationMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StatKind {
    #[serde(rename = "CQ1")]
    Cq1,
    #[serde(rename = "CQ2")]
    Cq2,
    S,
    #[serde(rename = "SR")]
    Sr,
    #[serde(rename = "WMW")]
    Wmw,
}

impl StatKind {
    pub const ALL: [StatKind; 5] = [
        StatKind::Cq1,
        StatKind::Cq2,
        StatKind::S,
        StatKind::Sr,
        StatKind::Wmw,
    ];

    pub fn is_two_sample(self) -> bool {
        matches!(self, StatKind::Cq2 | StatKind::Wmw)
    }

    /// Sign and rank statistics live in [-1, 1].
    pub fn is_sign_based(self) -> bool {
        matches!(self, StatKind::S | StatKind::Sr | StatKind::Wmw)
    }

    /// Smallest per-sample size the statistic is defined for.
    pub fn min_observations(self) -> usize {
        match self {
            StatKind::Sr => 4,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StatKind::Cq1 => "CQ1",
            StatKind::Cq2 => "CQ2",
            StatKind::S => "S",
            StatKind::Sr => "SR",
            StatKind::Wmw => "WMW",
        }
    }

    pub(crate) fn label(self) -> &'static str {
        match self {
            StatKind::Cq1 => "T_CQ1",
            StatKind::Cq2 => "T_CQ2",
            StatKind::S => "T_S",
            StatKind::Sr => "T_SR",
            StatKind::Wmw => "T_WMW",
        }
    }
}

impl fmt::Display for StatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StatKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cq1" => Ok(StatKind::Cq1),
            "cq2" => Ok(StatKind::Cq2),
            "s" => Ok(StatKind::S),
            "sr" => Ok(StatKind::Sr),
            "wmw" => Ok(StatKind::Wmw),
            other => Err(Error::Parse(format!("unknown statistic '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticValue {
    pub value: f64,
    pub kind: StatKind,
}

impl StatisticValue {
    fn new(kind: StatKind, value: f64) -> Self {
        let value = if kind.is_sign_based() {
            // mathematically in [-1, 1]; rounding can overshoot by an ulp
            value.clamp(-1.0, 1.0)
        } else {
            value
        };
        Self { value, kind }
    }
}

/// `x / ‖x‖`.
pub fn spatial_sign(x: &[f64]) -> Result<Vec<f64>> {
    let mut out = x.to_vec();
    sign_in_place(&mut out, || "spatial_sign input".to_string())?;
    Ok(out)
}

#[inline]
pub(crate) fn sign_in_place(v: &mut [f64], context: impl FnOnce() -> String) -> Result<()> {
    let norm = norm_sq(v).sqrt();
    if norm == 0.0 || v.is_empty() {
        return Err(Error::ZeroVector { context: context() });
    }
    v.iter_mut().for_each(|a| *a /= norm);
    Ok(())
}

/// One-sample mean statistic: average of X_i'X_j over ordered pairs i ≠ j.
pub fn t_cq1(x: &ObservationMatrix) -> Result<StatisticValue> {
    let n = x.rows();
    require("T_CQ1", 2, n)?;
    let mut total = vec![0.0; x.cols()];
    let mut diag = 0.0;
    for r in x.iter_rows() {
        add_assign(&mut total, r);
        diag += norm_sq(r);
    }
    let pairs = (n * (n - 1)) as f64;
    Ok(StatisticValue::new(
        StatKind::Cq1,
        (norm_sq(&total) - diag) / pairs,
    ))
}

/// Two-sample mean statistic, an unbiased estimator of ‖E(X) − E(Y)‖².
pub fn t_cq2(x: &ObservationMatrix, y: &ObservationMatrix) -> Result<StatisticValue> {
    let (m, n) = (x.rows(), y.rows());
    require("T_CQ2", 2, m)?;
    require("T_CQ2", 2, n)?;
    check_same_dim(x, y)?;
    let (sx, dx) = sum_and_diag(x);
    let (sy, dy) = sum_and_diag(y);
    let xx = (norm_sq(&sx) - dx) / (m * (m - 1)) as f64;
    let yy = (norm_sq(&sy) - dy) / (n * (n - 1)) as f64;
    let xy: f64 = sx.iter().zip(&sy).map(|(a, b)| a * b).sum::<f64>() / (m * n) as f64;
    Ok(StatisticValue::new(StatKind::Cq2, xx + yy - 2.0 * xy))
}

fn sum_and_diag(x: &ObservationMatrix) -> (Vec<f64>, f64) {
    let mut total = vec![0.0; x.cols()];
    let mut diag = 0.0;
    for r in x.iter_rows() {
        add_assign(&mut total, r);
        diag += norm_sq(r);
    }
    (total, diag)
}

/// One-sample spatial sign statistic.
pub fn t_s(x: &ObservationMatrix) -> Result<StatisticValue> {
    let n = x.rows();
    require("T_S", 2, n)?;
    let mut total = vec![0.0; x.cols()];
    let mut diag = 0.0;
    let mut s = vec![0.0; x.cols()];
    for (i, r) in x.iter_rows().enumerate() {
        s.copy_from_slice(r);
        sign_in_place(&mut s, || format!("row {i}"))?;
        add_assign(&mut total, &s);
        diag += norm_sq(&s);
    }
    Ok(StatisticValue::new(
        StatKind::S,
        (norm_sq(&total) - diag) / (n * (n - 1)) as f64,
    ))
}

/// One-sample spatial signed-rank statistic over ordered quadruples of
/// distinct indices.
///
/// With W_ab = S(X_a + X_b), A = Σ_{a≠b} W_ab and B_a = Σ_{b≠a} W_ab the
/// quadruple sum is ‖A‖² − 4 Σ_a ‖B_a‖² + 2 Σ_{a≠b} ‖W_ab‖².
pub fn t_sr(x: &ObservationMatrix) -> Result<StatisticValue> {
    let n = x.rows();
    let d = x.cols();
    require("T_SR", 4, n)?;
    let mut row_sums = vec![0.0; n * d];
    let mut w = vec![0.0; d];
    let mut w_norms = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            for ((o, p), q) in w.iter_mut().zip(x.row(a)).zip(x.row(b)) {
                *o = p + q;
            }
            sign_in_place(&mut w, || format!("rows {a} and {b} sum to zero"))?;
            add_assign(&mut row_sums[a * d..(a + 1) * d], &w);
            add_assign(&mut row_sums[b * d..(b + 1) * d], &w);
            w_norms += 2.0 * norm_sq(&w);
        }
    }
    Ok(StatisticValue::new(
        StatKind::Sr,
        sr_from_row_sums(&row_sums, n, d, w_norms),
    ))
}

/// Quadruple sum reduction shared with the sign-flip evaluator.
pub(crate) fn sr_from_row_sums(row_sums: &[f64], n: usize, d: usize, w_norms: f64) -> f64 {
    let mut total = vec![0.0; d];
    let mut b_sq = 0.0;
    for b in row_sums.chunks_exact(d) {
        add_assign(&mut total, b);
        b_sq += norm_sq(b);
    }
    let quad = norm_sq(&total) - 4.0 * b_sq + 2.0 * w_norms;
    quad / falling(n, 4)
}

/// Two-sample spatial rank statistic built from U_ij = S(Y_j − X_i).
///
/// With T = Σ U_ij, R_i = Σ_j U_ij and C_j = Σ_i U_ij the quadruple sum is
/// ‖T‖² − Σ‖R_i‖² − Σ‖C_j‖² + Σ‖U_ij‖².
pub fn t_wmw(x: &ObservationMatrix, y: &ObservationMatrix) -> Result<StatisticValue> {
    let (m, n) = (x.rows(), y.rows());
    require("T_WMW", 2, m)?;
    require("T_WMW", 2, n)?;
    check_same_dim(x, y)?;
    let d = x.cols();
    let mut rows = vec![0.0; m * d];
    let mut cols = vec![0.0; n * d];
    let mut u = vec![0.0; d];
    let mut u_norms = 0.0;
    for i in 0..m {
        let xi = x.row(i);
        for j in 0..n {
            u.copy_from_slice(y.row(j));
            sub_assign(&mut u, xi);
            sign_in_place(&mut u, || format!("Y row {j} equals X row {i}"))?;
            add_assign(&mut rows[i * d..(i + 1) * d], &u);
            add_assign(&mut cols[j * d..(j + 1) * d], &u);
            u_norms += norm_sq(&u);
        }
    }
    Ok(StatisticValue::new(
        StatKind::Wmw,
        wmw_from_margins(&rows, &cols, d, m, n, u_norms),
    ))
}

pub(crate) fn wmw_from_margins(
    rows: &[f64],
    cols: &[f64],
    d: usize,
    m: usize,
    n: usize,
    u_norms: f64,
) -> f64 {
    let mut total = vec![0.0; d];
    let mut r_sq = 0.0;
    for r in rows.chunks_exact(d) {
        add_assign(&mut total, r);
        r_sq += norm_sq(r);
    }
    let c_sq: f64 = cols.chunks_exact(d).map(norm_sq).sum();
    (norm_sq(&total) - r_sq - c_sq + u_norms) / (falling(m, 2) * falling(n, 2))
}

/// Evaluates a one-sample statistic.
pub fn one_sample(kind: StatKind, x: &ObservationMatrix) -> Result<StatisticValue> {
    match kind {
        StatKind::Cq1 => t_cq1(x),
        StatKind::S => t_s(x),
        StatKind::Sr => t_sr(x),
        other => Err(Error::InvalidArgument(format!(
            "{other} is a two-sample statistic"
        ))),
    }
}

/// Evaluates a two-sample statistic.
pub fn two_sample(
    kind: StatKind,
    x: &ObservationMatrix,
    y: &ObservationMatrix,
) -> Result<StatisticValue> {
    match kind {
        StatKind::Cq2 => t_cq2(x, y),
        StatKind::Wmw => t_wmw(x, y),
        other => Err(Error::InvalidArgument(format!(
            "{other} is a one-sample statistic"
        ))),
    }
}

/// Falling factorial (p)_q as a float.
pub fn falling(p: usize, q: usize) -> f64 {
    (0..q).map(|k| p.saturating_sub(k) as f64).product()
}
