//! Reference implementations that loop over every tuple of distinct indices.
//!
//! These are deliberately literal transcriptions of the defining sums and
//! share no code with the fast paths. They cost up to O(n⁴·d) and are meant
//! for small instances only: the test suites and `selftest` compare the fast
//! paths against them.

use crate::error::Result;
use crate::matrix::{dot, ObservationMatrix};
use crate::ustat::spatial_sign;

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| p - q).collect()
}

fn sum(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| p + q).collect()
}

pub fn t_cq1(x: &ObservationMatrix) -> f64 {
    let n = x.rows();
    let mut acc = 0.0;
    for i1 in 0..n {
        for i2 in 0..n {
            if i1 != i2 {
                acc += dot(x.row(i1), x.row(i2));
            }
        }
    }
    acc / (n * (n - 1)) as f64
}

pub fn t_cq2(x: &ObservationMatrix, y: &ObservationMatrix) -> f64 {
    let (m, n) = (x.rows(), y.rows());
    let mut acc = 0.0;
    for i1 in 0..m {
        for i2 in 0..m {
            if i1 == i2 {
                continue;
            }
            for j1 in 0..n {
                for j2 in 0..n {
                    if j1 == j2 {
                        continue;
                    }
                    let a = diff(x.row(i1), y.row(j1));
                    let b = diff(x.row(i2), y.row(j2));
                    acc += dot(&a, &b);
                }
            }
        }
    }
    acc / (m * (m - 1) * n * (n - 1)) as f64
}

pub fn t_s(x: &ObservationMatrix) -> Result<f64> {
    let n = x.rows();
    let mut acc = 0.0;
    for i1 in 0..n {
        for i2 in 0..n {
            if i1 != i2 {
                acc += dot(&spatial_sign(x.row(i1))?, &spatial_sign(x.row(i2))?);
            }
        }
    }
    Ok(acc / (n * (n - 1)) as f64)
}

pub fn t_sr(x: &ObservationMatrix) -> Result<f64> {
    let n = x.rows();
    let mut acc = 0.0;
    let mut count = 0usize;
    for i1 in 0..n {
        for i2 in 0..n {
            for i3 in 0..n {
                for i4 in 0..n {
                    if !all_distinct(&[i1, i2, i3, i4]) {
                        continue;
                    }
                    let a = spatial_sign(&sum(x.row(i1), x.row(i2)))?;
                    let b = spatial_sign(&sum(x.row(i3), x.row(i4)))?;
                    acc += dot(&a, &b);
                    count += 1;
                }
            }
        }
    }
    Ok(acc / count as f64)
}

pub fn t_wmw(x: &ObservationMatrix, y: &ObservationMatrix) -> Result<f64> {
    let (m, n) = (x.rows(), y.rows());
    let mut acc = 0.0;
    for i1 in 0..m {
        for i2 in 0..m {
            if i1 == i2 {
                continue;
            }
            for j1 in 0..n {
                for j2 in 0..n {
                    if j1 == j2 {
                        continue;
                    }
                    let a = spatial_sign(&diff(y.row(j1), x.row(i1)))?;
                    let b = spatial_sign(&diff(y.row(j2), x.row(i2)))?;
                    acc += dot(&a, &b);
                }
            }
        }
    }
    Ok(acc / (m * (m - 1) * n * (n - 1)) as f64)
}

/// Average over ordered distinct quadruples of [(X₁−X₂)'(X₃−X₄)]², over 4.
pub fn tr_sigma_sq_hat(x: &ObservationMatrix) -> f64 {
    let m = x.rows();
    let mut acc = 0.0;
    let mut count = 0usize;
    for i1 in 0..m {
        for i2 in 0..m {
            for i3 in 0..m {
                for i4 in 0..m {
                    if !all_distinct(&[i1, i2, i3, i4]) {
                        continue;
                    }
                    let v = dot(&diff(x.row(i1), x.row(i2)), &diff(x.row(i3), x.row(i4)));
                    acc += v * v;
                    count += 1;
                }
            }
        }
    }
    acc / (4.0 * count as f64)
}

/// Average over i₁≠i₂, j₁≠j₂ of [(X_{i₁}−X_{i₂})'(Y_{j₁}−Y_{j₂})]², over 4.
pub fn tr_sigma_cross_hat(x: &ObservationMatrix, y: &ObservationMatrix) -> f64 {
    let (m, n) = (x.rows(), y.rows());
    let mut acc = 0.0;
    for i1 in 0..m {
        for i2 in 0..m {
            if i1 == i2 {
                continue;
            }
            let dx = diff(x.row(i1), x.row(i2));
            for j1 in 0..n {
                for j2 in 0..n {
                    if j1 == j2 {
                        continue;
                    }
                    let v = dot(&dx, &diff(y.row(j1), y.row(j2)));
                    acc += v * v;
                }
            }
        }
    }
    acc / (4.0 * (m * (m - 1) * n * (n - 1)) as f64)
}

/// Γ̂₁ assembled from the loop estimators.
pub fn gamma1_hat(x: &ObservationMatrix, y: &ObservationMatrix) -> f64 {
    let (m, n) = (x.rows() as f64, y.rows() as f64);
    2.0 / (m * (m - 1.0)) * tr_sigma_sq_hat(x)
        + 2.0 / (n * (n - 1.0)) * tr_sigma_sq_hat(y)
        + 4.0 / (m * n) * tr_sigma_cross_hat(x, y)
}

fn all_distinct(idx: &[usize]) -> bool {
    idx.iter()
        .enumerate()
        .all(|(k, a)| idx[k + 1..].iter().all(|b| a != b))
}

/// Scale kernel k(i, j) = (σ_V²/P_i² + σ_W²/Q_j²)^{-1/2}.
fn kernel(p: f64, q: f64, sv: f64, sw: f64) -> f64 {
    (sv / (p * p) + sw / (q * q)).powf(-0.5)
}

/// RSRM coefficient sums by direct summation.
pub mod rsrm {
    use super::{all_distinct, kernel};

    pub fn s1(p: &[f64], q: &[f64], sv: f64, sw: f64) -> f64 {
        let (m, n) = (p.len(), q.len());
        let mut acc = 0.0;
        for i1 in 0..m {
            for i2 in 0..m {
                for j1 in 0..n {
                    for j2 in 0..n {
                        if i1 != i2 && j1 != j2 {
                            acc += kernel(p[i1], q[j2], sv, sw) * kernel(p[i2], q[j1], sv, sw);
                        }
                    }
                }
            }
        }
        acc / (m * (m - 1) * n * (n - 1)) as f64
    }

    /// A_{i₁,i₂} (i₁ ≠ i₂) as an m×m row-major matrix with zero diagonal.
    pub fn a(p: &[f64], q: &[f64], sv: f64, sw: f64) -> Vec<f64> {
        let (m, n) = (p.len(), q.len());
        let mut out = vec![0.0; m * m];
        for i1 in 0..m {
            for i2 in 0..m {
                if i1 == i2 {
                    continue;
                }
                for j1 in 0..n {
                    for j2 in 0..n {
                        if j1 != j2 {
                            out[i1 * m + i2] +=
                                kernel(p[i1], q[j2], sv, sw) * kernel(p[i2], q[j1], sv, sw);
                        }
                    }
                }
            }
        }
        out
    }

    pub fn b(p: &[f64], q: &[f64], sv: f64, sw: f64) -> Vec<f64> {
        let (m, n) = (p.len(), q.len());
        let mut out = vec![0.0; n * n];
        for j1 in 0..n {
            for j2 in 0..n {
                if j1 == j2 {
                    continue;
                }
                for i1 in 0..m {
                    for i2 in 0..m {
                        if i1 != i2 {
                            out[j1 * n + j2] +=
                                kernel(p[i1], q[j2], sv, sw) * kernel(p[i2], q[j1], sv, sw);
                        }
                    }
                }
            }
        }
        out
    }

    pub fn c(p: &[f64], q: &[f64], sv: f64, sw: f64) -> Vec<f64> {
        let (m, n) = (p.len(), q.len());
        let mut out = vec![0.0; m * n];
        for i1 in 0..m {
            for j1 in 0..n {
                for i2 in 0..m {
                    for j2 in 0..n {
                        if i2 != i1 && j2 != j1 {
                            out[i1 * n + j1] +=
                                kernel(p[i1], q[j2], sv, sw) * kernel(p[i2], q[j1], sv, sw);
                        }
                    }
                }
            }
        }
        out
    }

    /// (L₃, L₄, L₅) from the coefficient matrices.
    pub fn l345(p: &[f64], q: &[f64], sv: f64, sw: f64) -> (f64, f64, f64) {
        let (m, n) = (p.len(), q.len());
        let (a, b, c) = (a(p, q, sv, sw), b(p, q, sv, sw), c(p, q, sv, sw));
        let mut l3 = 0.0;
        for i1 in 0..m {
            for i2 in 0..m {
                if i1 != i2 {
                    l3 += 2.0 * a[i1 * m + i2].powi(2) / (p[i1] * p[i2]).powi(2);
                }
            }
        }
        let mut l4 = 0.0;
        for j1 in 0..n {
            for j2 in 0..n {
                if j1 != j2 {
                    l4 += 2.0 * b[j1 * n + j2].powi(2) / (q[j1] * q[j2]).powi(2);
                }
            }
        }
        let mut l5 = 0.0;
        for i in 0..m {
            for j in 0..n {
                l5 += 2.0 * c[i * n + j].powi(2) / (p[i] * q[j]).powi(2);
            }
        }
        (l3, l4, l5)
    }

    /// Ũ_{i₁,i₂} as an n×n matrix (zero diagonal).
    pub fn u_tilde(p: &[f64]) -> Vec<f64> {
        let n = p.len();
        let mut out = vec![0.0; n * n];
        for i1 in 0..n {
            for i2 in 0..n {
                for i3 in 0..n {
                    for i4 in 0..n {
                        if all_distinct(&[i1, i2, i3, i4]) {
                            out[i1 * n + i2] += p[i3] * p[i4]
                                / ((p[i1].powi(2) + p[i3].powi(2)).sqrt()
                                    * (p[i2].powi(2) + p[i4].powi(2)).sqrt());
                        }
                    }
                }
            }
        }
        out
    }

    /// (Z₂, Z₃) by direct quadruple summation.
    pub fn z2_z3(p: &[f64], sv: f64, tr_v: f64) -> (f64, f64) {
        let n = p.len();
        let u = u_tilde(p);
        let n4 = (n * (n - 1) * (n - 2) * (n - 3)) as f64;
        let mut z2 = 0.0;
        let mut z3 = 0.0;
        for i1 in 0..n {
            for i2 in 0..n {
                if i1 != i2 {
                    z2 += u[i1 * n + i2] * p[i1] * p[i2];
                    z3 += u[i1 * n + i2].powi(2);
                }
            }
        }
        (2.0 * z2 / (n4 * sv), 8.0 * tr_v * z3 / (n4 * sv).powi(2))
    }
}
