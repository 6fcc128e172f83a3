//! Tridiagonal linear algebra: LU solves and Sturm counts.

use crate::error::{Error, Result};

/// A general tridiagonal matrix. `sub[0]` and `sup[n-1]` are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `y = M x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.sub[i] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.sup[i] * x[i + 1];
            }
            y[i] = acc;
        }
    }

    /// Largest absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.len())
            .map(|i| self.sub[i].abs() + self.diag[i].abs() + self.sup[i].abs())
            .fold(0.0, f64::max)
    }

    /// Solves `M x = rhs`: Thomas elimination first, partial pivoting when a pivot is tiny.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let scale = self.inf_norm().max(f64::MIN_POSITIVE);
        match thomas(self, rhs, scale) {
            Some(x) => Ok(x),
            None => solve_with_pivoting(self, rhs, scale),
        }
    }
}

const PIVOT_FLOOR: f64 = 1e-14;

fn thomas(m: &Tridiagonal, rhs: &[f64], scale: f64) -> Option<Vec<f64>> {
    let n = m.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = m.diag[0];
    if pivot.abs() < PIVOT_FLOOR * scale {
        return None;
    }
    c[0] = m.sup[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = m.diag[i] - m.sub[i] * c[i - 1];
        if pivot.abs() < PIVOT_FLOOR * scale || !pivot.is_finite() {
            return None;
        }
        c[i] = if i + 1 < n { m.sup[i] / pivot } else { 0.0 };
        d[i] = (rhs[i] - m.sub[i] * d[i - 1]) / pivot;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

/// Gaussian elimination with row interchanges on the band (one extra superdiagonal).
fn solve_with_pivoting(m: &Tridiagonal, rhs: &[f64], scale: f64) -> Result<Vec<f64>> {
    let n = m.len();
    let mut dl: Vec<f64> = (0..n)
        .map(|i| if i + 1 < n { m.sub[i + 1] } else { 0.0 })
        .collect();
    let mut d = m.diag.clone();
    let mut du = m.sup.clone();
    let mut du2 = vec![0.0; n];
    let mut b = rhs.to_vec();
    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            if d[i].abs() < PIVOT_FLOOR * scale {
                return Err(Error::SingularJacobian {
                    row: i,
                    pivot: d[i],
                });
            }
            let factor = dl[i] / d[i];
            d[i + 1] -= factor * du[i];
            b[i + 1] -= factor * b[i];
            dl[i] = 0.0;
        } else {
            let factor = d[i] / dl[i];
            d[i] = dl[i];
            let tmp = d[i + 1];
            d[i + 1] = du[i] - factor * tmp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -factor * du2[i];
            }
            du[i] = tmp;
            b.swap(i, i + 1);
            b[i + 1] -= factor * b[i];
            dl[i] = 0.0;
        }
    }
    if d[n - 1].abs() < PIVOT_FLOOR * scale {
        return Err(Error::SingularJacobian {
            row: n - 1,
            pivot: d[n - 1],
        });
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        if i + 1 < n {
            acc -= du[i] * x[i + 1];
        }
        if i + 2 < n {
            acc -= du2[i] * x[i + 2];
        }
        x[i] = acc / d[i];
    }
    Ok(x)
}

/// Symmetric tridiagonal matrix with diagonal `diag` and off-diagonal `off` (`off[i]` couples `i, i+1`).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut radius = 0.0;
            if i > 0 {
                radius += self.off[i - 1].abs();
            }
            if i + 1 < n {
                radius += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - radius);
            hi = hi.max(self.diag[i] + radius);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence of the `LDLᵀ` pivots).
    pub fn count_below(&self, x: f64) -> usize {
        let n = self.len();
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0..n {
            if i > 0 {
                q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / q;
            }
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            y[i] = acc;
        }
    }

    /// `self − shift·I` as a general tridiagonal.
    pub fn shifted(&self, shift: f64) -> Tridiagonal {
        let n = self.len();
        let mut sub = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let m = n.saturating_sub(1);
        sup[..m].copy_from_slice(&self.off[..m]);
        sub[1..=m].copy_from_slice(&self.off[..m]);
        Tridiagonal {
            sub,
            diag: self.diag.iter().map(|d| d - shift).collect(),
            sup,
        }
    }
}
