//! Lanczos iteration with full reorthogonalization and explicit locking.
//!
//! Each run builds a Krylov basis orthogonal to every locked eigenvector,
//! extracts Ritz pairs from the projected tridiagonal matrix and locks the
//! converged ones. A single Krylov space holds one copy of each degenerate
//! eigenvalue, so runs repeat until a fresh run finds nothing below the
//! current `k`-th locked value.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tridiag::{fix_sign, lowest_eigenpairs as tridiag_eigenpairs, orthogonalize};
use crate::linalg::{axpy, dot, norm};
use crate::{Error, Result};

/// A second Gram–Schmidt pass is taken when one pass shrinks the vector
/// below this fraction of its norm.
const DGKS: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn reorthogonalize(w: &mut [f64], basis: &[Vec<f64>], locked: &[Vec<f64>]) -> f64 {
    for b in basis.iter().chain(locked) {
        let c = dot(w, b);
        axpy(-c, b, w);
    }
    norm(w)
}

/// Weight of the fresh random vector in a restart.
const RANDOM_MIX: f64 = 1e-3;

pub trait SymmetricOperator {
    fn size(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Converged when `‖Ax - θx‖ ≤ tol · ‖A‖` (norm estimated from the runs).
    pub tol: f64,
    /// Largest Krylov basis held in memory within one run.
    pub max_basis: usize,
    /// Total matrix-vector products allowed across all runs.
    pub max_iterations: usize,
    pub seed: u64,
}

impl LanczosOptions {
    /// Iteration cap `10·k·√N`.
    pub fn for_problem(size: usize, k: usize) -> Self {
        Self {
            tol: 1e-10,
            max_basis: 150.min(size),
            max_iterations: (10.0 * k as f64 * (size as f64).sqrt()).ceil() as usize,
            seed: 17,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LanczosResult {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

struct Locked {
    value: f64,
    vector: Vec<f64>,
    residual: f64,
}

pub fn lowest_lanczos<A: SymmetricOperator>(op: &A, k: usize, opts: LanczosOptions) -> Result<LanczosResult> {
    let n = op.size();
    if k == 0 || k > n {
        return Err(Error::Config(format!(
            "cannot extract {k} eigenpairs from an operator of size {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<Locked> = Vec::new();
    let mut iterations = 0usize;
    let mut anorm = 0.0f64;
    let mut best_residual = f64::INFINITY;
    let mut restart: Option<Vec<f64>> = None;

    loop {
        let locked_vecs: Vec<Vec<f64>> = locked.iter().map(|l| l.vector.clone()).collect();
        let room = n - locked.len();
        if room == 0 {
            break;
        }
        // A small random part keeps every eigendirection present in each run
        // (restart vectors can miss whole symmetry classes), which the
        // stopping rule relies on.
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if let Some(r) = restart.take() {
            let (nv, nr) = (norm(&v), norm(&r));
            if nr > 0.0 {
                v.iter_mut()
                    .zip(&r)
                    .for_each(|(a, b)| *a = RANDOM_MIX * *a / nv + b / nr);
            }
        }
        orthogonalize(&mut v, &locked_vecs);
        let nv = norm(&v);
        if nv == 0.0 {
            break;
        }
        v.iter_mut().for_each(|x| *x /= nv);

        let kth = (locked.len() >= k).then(|| locked[k - 1].value);
        let want = k.min(room);
        let max_basis = opts.max_basis.min(room).max(want);
        let mut basis: Vec<Vec<f64>> = vec![v];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut w = vec![0.0; n];
        let mut ritz = None;
        let mut exhausted = false;
        loop {
            let j = basis.len() - 1;
            op.apply(&basis[j], &mut w);
            iterations += 1;
            let alpha = dot(&w, &basis[j]);
            axpy(-alpha, &basis[j], &mut w);
            if j > 0 {
                axpy(-betas[j - 1], &basis[j - 1], &mut w);
            }
            let before = norm(&w);
            let mut beta = reorthogonalize(&mut w, &basis, &locked_vecs);
            if beta < DGKS * before {
                beta = reorthogonalize(&mut w, &basis, &locked_vecs);
            }
            alphas.push(alpha);
            anorm = anorm.max(alpha.abs() + beta + betas.last().copied().unwrap_or(0.0));

            let m = alphas.len();
            let invariant = beta <= f64::EPSILON * anorm.max(f64::MIN_POSITIVE);
            let full = m >= max_basis || iterations >= opts.max_iterations;
            if m >= want && (m % 10 == 0 || invariant || full) {
                let eig = tridiag_eigenpairs(&alphas, &betas, want.min(m))?;
                let done: Vec<bool> = eig
                    .vectors
                    .iter()
                    .map(|s| invariant || (beta * s[m - 1]).abs() <= opts.tol * anorm)
                    .collect();
                best_residual = best_residual.min((beta * eig.vectors[0][m - 1]).abs());
                // Ritz values decrease toward the spectrum: once the lowest one
                // has settled above the k-th locked value, nothing is missing.
                if let Some(kth) = kth {
                    if done[0] && eig.values[0] >= kth - opts.tol * anorm {
                        exhausted = true;
                        break;
                    }
                }
                if done.iter().all(|&d| d) || full {
                    ritz = Some((eig, done, m));
                    break;
                }
            }
            if invariant {
                break;
            }
            let next: Vec<f64> = w.iter().map(|x| x / beta).collect();
            betas.push(beta);
            basis.push(next);
        }

        if exhausted {
            break;
        }
        let Some((eig, done, m)) = ritz else {
            return Err(Error::Convergence {
                iterations,
                best_residual,
            });
        };
        let ritz_vector = |s: &[f64]| -> Vec<f64> {
            let mut x = vec![0.0; n];
            for (q, c) in basis.iter().take(m).zip(s) {
                axpy(*c, q, &mut x);
            }
            x
        };
        // Explicit restart from the sum of the wanted Ritz vectors still open.
        let mut next = vec![0.0; n];
        let mut open = false;
        for (s, _) in eig.vectors.iter().zip(&done).filter(|(_, d)| !**d) {
            axpy(1.0, &ritz_vector(s), &mut next);
            open = true;
        }
        restart = open.then_some(next);
        if !done.iter().any(|&d| d) {
            if iterations >= opts.max_iterations {
                return Err(Error::Convergence {
                    iterations,
                    best_residual,
                });
            }
            continue;
        }
        let mut new_min = f64::INFINITY;
        let mut tmp = vec![0.0; n];
        for (s, _) in eig.vectors.iter().zip(&done).filter(|(_, d)| **d) {
            let mut x = ritz_vector(s);
            let current: Vec<Vec<f64>> = locked.iter().map(|l| l.vector.clone()).collect();
            orthogonalize(&mut x, &current);
            let nx = norm(&x);
            x.iter_mut().for_each(|c| *c /= nx);
            fix_sign(&mut x);
            op.apply(&x, &mut tmp);
            let theta = dot(&x, &tmp);
            axpy(-theta, &x, &mut tmp);
            new_min = new_min.min(theta);
            locked.push(Locked {
                value: theta,
                vector: x,
                residual: norm(&tmp),
            });
        }
        locked.sort_by(|a, b| a.value.total_cmp(&b.value));
        if locked.len() >= k {
            let kth = locked[k - 1].value;
            // Nothing new below the current k-th value: the lowest k are complete.
            if new_min >= kth - opts.tol * anorm {
                break;
            }
        }
        if iterations >= opts.max_iterations {
            return Err(Error::Convergence {
                iterations,
                best_residual,
            });
        }
    }
    if locked.len() < k {
        return Err(Error::Convergence {
            iterations,
            best_residual,
        });
    }
    locked.truncate(k);
    Ok(LanczosResult {
        values: locked.iter().map(|l| l.value).collect(),
        residuals: locked.iter().map(|l| l.residual).collect(),
        vectors: locked.into_iter().map(|l| l.vector).collect(),
        iterations,
    })
}
