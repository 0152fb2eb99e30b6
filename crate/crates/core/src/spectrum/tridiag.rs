//! Lowest eigenpairs of a symmetric tridiagonal matrix: Sturm-sequence
//! bisection for the eigenvalues, inverse iteration for the vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{axpy, dot, norm, tridiag_matvec, TridiagLu};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct TridiagEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

/// Number of eigenvalues strictly below `x`.
pub fn sturm_count(diag: &[f64], off2: &[f64], x: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q.abs() < pivmin {
        q = -pivmin;
    }
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        q = diag[i] - x - off2[i - 1] / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `k` smallest eigenvalues, ascending.
pub fn lowest_eigenvalues(diag: &[f64], off: &[f64], k: usize) -> Result<Vec<f64>> {
    let n = diag.len();
    if k == 0 || k > n || off.len() + 1 != n {
        return Err(Error::Config(format!(
            "cannot extract {k} eigenvalues from a {n}x{n} matrix"
        )));
    }
    if diag.iter().chain(off).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite matrix entry".into()));
    }
    let off2: Vec<f64> = off.iter().map(|e| e * e).collect();
    let max_off = off.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let pivmin = f64::MIN_POSITIVE * off2.iter().fold(1.0f64, |m, &e| m.max(e));
    let abs_tol = 1e-3 * f64::EPSILON * max_off.max(f64::MIN_POSITIVE);

    let lo = (0..n)
        .map(|i| {
            let l = if i > 0 { off[i - 1].abs() } else { 0.0 };
            let r = if i + 1 < n { off[i].abs() } else { 0.0 };
            diag[i] - l - r
        })
        .fold(f64::INFINITY, f64::min);
    let hi_bound = (0..n)
        .map(|i| {
            let l = if i > 0 { off[i - 1].abs() } else { 0.0 };
            let r = if i + 1 < n { off[i].abs() } else { 0.0 };
            diag[i] + l + r
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let lo = lo - abs_tol - f64::EPSILON * lo.abs();
    let mut width = max_off.max(1.0);
    let mut hi = lo + width;
    while hi < hi_bound && sturm_count(diag, &off2, hi, pivmin) < k {
        width *= 2.0;
        hi = lo + width;
    }
    let hi = hi.min(hi_bound + abs_tol + f64::EPSILON * hi_bound.abs());

    let mut values = Vec::with_capacity(k);
    let mut a0 = lo;
    for j in 0..k {
        let (mut a, mut b) = (a0, hi);
        loop {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b || b - a <= abs_tol + 2.0 * f64::EPSILON * a.abs().max(b.abs()) {
                break;
            }
            if sturm_count(diag, &off2, mid, pivmin) > j {
                b = mid;
            } else {
                a = mid;
            }
        }
        let value = 0.5 * (a + b);
        values.push(value);
        // eigenvalue j+1 is not below eigenvalue j's lower bracket
        a0 = a;
    }
    Ok(values)
}

/// Eigenvalues and unit eigenvectors of the `k` lowest eigenpairs.
pub fn lowest_eigenpairs(diag: &[f64], off: &[f64], k: usize) -> Result<TridiagEigen> {
    let values = lowest_eigenvalues(diag, off, k)?;
    let n = diag.len();
    let scale =
        diag.iter().map(|d| d.abs()).fold(0.0f64, f64::max) + 2.0 * off.iter().map(|e| e.abs()).fold(0.0f64, f64::max);
    let tiny = f64::EPSILON * scale.max(f64::MIN_POSITIVE);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let mut tmp = vec![0.0; n];
    for &lambda in &values {
        let shifted: Vec<f64> = diag.iter().map(|d| d - lambda).collect();
        let lu = TridiagLu::factor(off, &shifted, off, tiny)?;
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for _ in 0..4 {
            lu.solve(&mut x);
            orthogonalize(&mut x, &vectors);
            let nx = norm(&x);
            if !(nx > 0.0) || !nx.is_finite() {
                return Err(Error::Numeric("inverse iteration broke down".into()));
            }
            x.iter_mut().for_each(|v| *v /= nx);
        }
        // Two passes of Gram–Schmidt keep near-degenerate pairs orthogonal.
        orthogonalize(&mut x, &vectors);
        let nx = norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        fix_sign(&mut x);
        tridiag_matvec(off, diag, off, &x, &mut tmp);
        axpy(-lambda, &x, &mut tmp);
        residuals.push(norm(&tmp));
        vectors.push(x);
    }
    Ok(TridiagEigen {
        values,
        vectors,
        residuals,
    })
}

pub(crate) fn orthogonalize(x: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(x, b);
            axpy(-c, b, x);
        }
    }
}

/// Fix the arbitrary overall sign: the first entry that is not negligible
/// (above 1e-3 of the largest magnitude) is made positive.
pub(crate) fn fix_sign(x: &mut [f64]) {
    let max = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(first) = x.iter().find(|v| v.abs() > 1e-3 * max) {
        if *first < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
    }
}
