//! Small dense-vector helpers and a tridiagonal LU with partial pivoting.

use crate::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y ← y + alpha·x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `y = T x` for a general tridiagonal `T` given by its three diagonals.
pub fn tridiag_matvec(lower: &[f64], diag: &[f64], upper: &[f64], x: &[f64], y: &mut [f64]) {
    let n = diag.len();
    for i in 0..n {
        let mut acc = diag[i] * x[i];
        if i > 0 {
            acc += lower[i - 1] * x[i - 1];
        }
        if i + 1 < n {
            acc += upper[i] * x[i + 1];
        }
        y[i] = acc;
    }
}

/// LU factorization of a general tridiagonal matrix with row interchanges,
/// laid out as LAPACK's `gttrf`: `l` holds multipliers, `u0/u1/u2` the three
/// diagonals of `U`, `pivot[i]` records whether rows `i` and `i+1` swapped.
#[derive(Debug, Clone)]
pub struct TridiagLu {
    l: Vec<f64>,
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    pivot: Vec<bool>,
}

impl TridiagLu {
    /// Factor the matrix with sub-diagonal `lower` (len n-1), `diag` (len n)
    /// and super-diagonal `upper` (len n-1). Zero pivots are replaced by
    /// `tiny` when it is positive (inverse iteration at an exact eigenvalue),
    /// and reported as an error otherwise.
    pub fn factor(lower: &[f64], diag: &[f64], upper: &[f64], tiny: f64) -> Result<Self> {
        let n = diag.len();
        let mut d = diag.to_vec();
        let mut du = upper.to_vec();
        let mut dl = lower.to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut pivot = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = Self::replace_zero(tiny)?;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                pivot[i] = true;
            }
        }
        if n > 0 && d[n - 1] == 0.0 {
            d[n - 1] = Self::replace_zero(tiny)?;
        }
        Ok(Self {
            l: dl,
            u0: d,
            u1: du,
            u2: du2,
            pivot,
        })
    }

    fn replace_zero(tiny: f64) -> Result<f64> {
        if tiny > 0.0 {
            Ok(tiny)
        } else {
            Err(Error::Numeric("singular tridiagonal system".into()))
        }
    }

    /// Solve in place.
    pub fn solve(&self, x: &mut [f64]) {
        let n = self.u0.len();
        for i in 0..n.saturating_sub(1) {
            if self.pivot[i] {
                x.swap(i, i + 1);
            }
            x[i + 1] -= self.l[i] * x[i];
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            if i + 1 < n {
                acc -= self.u1[i] * x[i + 1];
            }
            if i + 2 < n {
                acc -= self.u2[i] * x[i + 2];
            }
            x[i] = acc / self.u0[i];
        }
    }
}

/// Cholesky factor `L` of a symmetric positive definite band matrix with
/// half bandwidth `w`. Row `i` of `L` is stored in `w + 1` slots ending at
/// the diagonal.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    w: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    /// `entry(i, j)` gives `A_ij` for `i - w <= j <= i`.
    pub fn factor(n: usize, w: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let stride = w + 1;
        let idx = |i: usize, j: usize| i * stride + w + j - i;
        let mut l = vec![0.0; n * stride];
        for i in 0..n {
            let j0 = i.saturating_sub(w);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(w));
                let (ri, rj) = (idx(i, k0), idx(j, k0));
                let s = entry(i, j) - dot(&l[ri..ri + j - k0], &l[rj..rj + j - k0]);
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::Numeric(format!("band matrix not positive definite at row {i}")));
                    }
                    l[idx(i, i)] = s.sqrt();
                } else {
                    l[idx(i, j)] = s / l[idx(j, j)];
                }
            }
        }
        Ok(Self { n, w, l })
    }

    /// Solve `A x = b` in place.
    pub fn solve(&self, x: &mut [f64]) {
        let (n, w, stride) = (self.n, self.w, self.w + 1);
        for i in 0..n {
            let k0 = i.saturating_sub(w);
            let row = &self.l[i * stride + w + k0 - i..(i + 1) * stride];
            let (off, diag) = row.split_at(i - k0);
            x[i] = (x[i] - dot(off, &x[k0..i])) / diag[0];
        }
        for i in (0..n).rev() {
            let k0 = i.saturating_sub(w);
            let row = &self.l[i * stride + w + k0 - i..(i + 1) * stride];
            x[i] /= row[i - k0];
            let xi = x[i];
            axpy(-xi, &row[..i - k0], &mut x[k0..i]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_system_needing_pivoting() {
        let lower = [3.0, 1.0, -2.0];
        let diag = [1e-14, 2.0, 0.5, 4.0];
        let upper = [1.0, -1.0, 2.0];
        let x_true = [1.0, -2.0, 0.25, 3.0];
        let mut b = vec![0.0; 4];
        tridiag_matvec(&lower, &diag, &upper, &x_true, &mut b);
        let lu = TridiagLu::factor(&lower, &diag, &upper, 0.0).unwrap();
        lu.solve(&mut b);
        for (a, e) in b.iter().zip(&x_true) {
            assert!((a - e).abs() < 1e-12, "{a} vs {e}");
        }
    }

    #[test]
    fn singular_without_tiny_is_error() {
        let r = TridiagLu::factor(&[0.0], &[0.0, 1.0], &[0.0], 0.0);
        assert!(r.is_err());
    }

    #[test]
    fn band_cholesky_matches_dense_product() {
        // Five-point Laplacian plus identity on a 6 × 6 grid, half bandwidth 6.
        let m = 6;
        let n = m * m;
        let entry = |i: usize, j: usize| {
            if i == j {
                5.0
            } else if i - j == m || (i - j == 1 && i % m != 0) {
                -1.0
            } else {
                0.0
            }
        };
        let chol = BandCholesky::factor(n, m, entry).unwrap();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                let a = if j <= i && i - j <= m {
                    entry(i, j)
                } else if i < j && j - i <= m {
                    entry(j, i)
                } else {
                    0.0
                };
                b[i] += a * x_true[j];
            }
        }
        chol.solve(&mut b);
        for (a, e) in b.iter().zip(&x_true) {
            assert!((a - e).abs() < 1e-12, "{a} vs {e}");
        }
    }

    #[test]
    fn band_cholesky_rejects_indefinite() {
        assert!(BandCholesky::factor(2, 1, |i, j| if i == j { 1.0 } else { 2.0 }).is_err());
    }
}
