//! Lowest eigenpairs of assembled operators, the spectral gap, and the
//! one-dimensional tools built on the first excited state: the θ-profile
//! and the surface (flux) formula for `E₁`.

pub mod lanczos;
pub mod tridiag;

use crate::grid_operator::{AssembledOperator, Grid, OperatorMatrix};
use crate::linalg::{axpy, dot, norm, BandCholesky};
use crate::potential::{critical_points, CriticalKind, PotentialSpec, Region};
use crate::quadrature::{integrate, QuadOptions};
use crate::witten::WittenContext;
use crate::{Error, Result};

use lanczos::{lowest_lanczos, LanczosOptions, SymmetricOperator};

/// Relative residual below which a pair counts as converged.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Largest band (entries) factored for shift-invert; beyond it the d = 2 path
/// runs Lanczos on the operator itself.
const MAX_BAND_ENTRIES: usize = 50_000_000;

/// `x ↦ -(M + σI)⁻¹ x`: the lowest eigenvalues of `M` become the lowest,
/// and best separated, eigenvalues of this operator.
struct ShiftInverted {
    chol: BandCholesky,
    size: usize,
}

impl SymmetricOperator for ShiftInverted {
    fn size(&self) -> usize {
        self.size
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
        self.chol.solve(y);
        y.iter_mut().for_each(|v| *v = -*v);
    }
}

fn shift_inverted(n: usize, diag: &[f64], coupling: f64) -> Option<ShiftInverted> {
    let size = diag.len();
    if size * (n + 1) > MAX_BAND_ENTRIES {
        return None;
    }
    // Gershgorin lower bound, lifted so the shifted matrix is definite.
    let lower = diag.iter().fold(f64::INFINITY, |m, d| m.min(*d)) - 4.0 * coupling.abs();
    let sigma = (-lower).max(0.0) + 1e-3 * (diag.iter().fold(0.0f64, |m, d| m.max(d.abs())) + 1.0);
    let entry = |i: usize, j: usize| {
        if i == j {
            diag[i] + sigma
        } else if i - j == n || (i - j == 1 && i % n != 0) {
            coupling
        } else {
            0.0
        }
    };
    BandCholesky::factor(size, n, entry)
        .ok()
        .map(|chol| ShiftInverted { chol, size })
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Unit Euclidean norm over the node samples. The first entry above
    /// 1e-3 of the maximum is positive, so `ψ₁` is positive in the left well.
    pub eigenvectors: Vec<Vec<f64>>,
    /// `‖Mv - Ev‖`
    pub residuals: Vec<f64>,
    pub converged: Vec<bool>,
    /// Tolerance the residuals were judged against.
    pub tolerance: f64,
}

impl SpectrumResult {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }
}

impl SymmetricOperator for AssembledOperator {
    fn size(&self) -> usize {
        self.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        AssembledOperator::apply(self, x, y)
    }
}

/// The `k` lowest eigenpairs. Tridiagonal operators (d = 1) go through
/// bisection and inverse iteration on the symmetric form; the d = 2 stencil
/// goes through Lanczos. For the Fokker–Planck kind the pairs are those of
/// the similarity-symmetrized `-L`, so eigenvectors are `ψ`-like, not
/// densities.
pub fn lowest_eigenpairs(op: &AssembledOperator, k: usize) -> Result<SpectrumResult> {
    let size = op.dim();
    if k < 2 || k > size {
        return Err(Error::Config(format!("k must lie in [2, {size}], got {k}")));
    }
    match &op.matrix {
        OperatorMatrix::Tridiagonal { .. } => {
            let (diag, off) = op
                .symmetric_tridiagonal()
                .ok_or_else(|| Error::Numeric("operator has no symmetric tridiagonal form".into()))?;
            let scale = off.iter().fold(0.0f64, |m, e| m.max(e.abs())).max(f64::MIN_POSITIVE);
            let eig = tridiag::lowest_eigenpairs(&diag, &off, k)?;
            let tolerance = RESIDUAL_TOL * scale;
            let converged = eig.residuals.iter().map(|&r| r <= tolerance).collect();
            Ok(SpectrumResult {
                eigenvalues: eig.values,
                eigenvectors: eig.vectors,
                residuals: eig.residuals,
                converged,
                tolerance,
            })
        }
        OperatorMatrix::Stencil2d { n, diag, coupling } => {
            let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs())) + 4.0 * coupling.abs();
            let opts = LanczosOptions::for_problem(size, k);
            let (values, vectors, residuals) = match shift_inverted(*n, diag, *coupling) {
                Some(inv) => {
                    let res = lowest_lanczos(&inv, k, opts)?;
                    let mut pairs: Vec<(f64, Vec<f64>, f64)> = res
                        .vectors
                        .into_iter()
                        .map(|v| {
                            let mut mv = vec![0.0; size];
                            op.apply(&v, &mut mv);
                            let theta = dot(&v, &mv);
                            axpy(-theta, &v, &mut mv);
                            (theta, v, norm(&mv))
                        })
                        .collect();
                    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
                    let values = pairs.iter().map(|p| p.0).collect();
                    let residuals = pairs.iter().map(|p| p.2).collect();
                    (values, pairs.into_iter().map(|p| p.1).collect(), residuals)
                }
                None => {
                    let res = lowest_lanczos(op, k, opts)?;
                    (res.values, res.vectors, res.residuals)
                }
            };
            let tolerance = RESIDUAL_TOL * scale;
            let converged = residuals.iter().map(|&r: &f64| r <= tolerance).collect();
            Ok(SpectrumResult {
                eigenvalues: values,
                eigenvectors: vectors,
                residuals,
                converged,
                tolerance,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralGap {
    /// `E₁ - E₀`
    pub gap: f64,
    /// `E₀`, zero for the exact operator.
    pub ground: f64,
}

pub fn spectral_gap(result: &SpectrumResult) -> Result<SpectralGap> {
    if result.eigenvalues.len() < 2 {
        return Err(Error::Precondition("spectral gap needs two eigenpairs".into()));
    }
    if let Some(i) = result.converged.iter().take(2).position(|&c| !c) {
        return Err(Error::Convergence {
            iterations: 0,
            best_residual: result.residuals[i],
        });
    }
    let e0 = result.eigenvalues[0];
    Ok(SpectralGap {
        gap: (result.eigenvalues[1] - e0).max(0.0),
        ground: e0,
    })
}

/// A double well cut at its barrier. `well_region` is the domain `G` of the
/// surface formula and of the well free energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellPartition {
    pub barrier_x: f64,
    pub left_min: f64,
    pub right_min: f64,
    pub well_region: Region,
}

impl WellPartition {
    pub fn new(barrier_x: f64, left_min: f64, right_min: f64, well_region: Region) -> Result<Self> {
        if !(left_min < barrier_x && barrier_x < right_min) {
            return Err(Error::Config(format!(
                "barrier {barrier_x} must lie strictly between the minima {left_min} and {right_min}"
            )));
        }
        let left = well_region.hi <= barrier_x && well_region.contains(left_min);
        let right = well_region.lo >= barrier_x && well_region.contains(right_min);
        if !(left || right) {
            return Err(Error::Config(format!(
                "well region [{}, {}] must contain one minimum and stay on one side of the barrier {barrier_x}",
                well_region.lo, well_region.hi
            )));
        }
        Ok(Self {
            barrier_x,
            left_min,
            right_min,
            well_region,
        })
    }

    /// From the critical points of `spec` on `search`, which must be exactly
    /// a minimum, a maximum and a minimum. `G` is the left well
    /// `[search.lo, barrier]`.
    pub fn auto(spec: &PotentialSpec, search: Region) -> Result<Self> {
        let cps = critical_points(spec, search)?;
        let kinds: Vec<CriticalKind> = cps.iter().map(|c| c.kind).collect();
        if kinds != [CriticalKind::Minimum, CriticalKind::Maximum, CriticalKind::Minimum] {
            return Err(Error::Config(format!(
                "automatic partition needs exactly minimum, maximum, minimum; found {} critical points {:?}",
                cps.len(),
                cps.iter().map(|c| c.x()).collect::<Vec<_>>()
            )));
        }
        let barrier = cps[1].x();
        Self::new(barrier, cps[0].x(), cps[2].x(), Region::new(search.lo, barrier)?)
    }

    /// `+1` when `G` lies left of the barrier (its outward normal at the
    /// barrier points to `+x`), `-1` otherwise.
    pub fn outward_normal(&self) -> f64 {
        if self.well_region.hi <= self.barrier_x {
            1.0
        } else {
            -1.0
        }
    }

    /// The minimum inside `G`.
    pub fn well_min(&self) -> f64 {
        if self.outward_normal() > 0.0 {
            self.left_min
        } else {
            self.right_min
        }
    }
}

/// `θ(x) = 1 - 2 ∫_{x_l}^{x} e^{βU} / ∫_{x_l}^{x_r} e^{βU}` at the interior
/// nodes, with `x_l, x_r` the two minima; `+1` left of `x_l`, `-1` right of
/// `x_r`. The integrand is scaled by `e^{-βU(x_b)}` so the largest value is
/// about one.
pub fn theta_profile(ctx: &WittenContext, grid: &Grid, partition: &WellPartition) -> Result<Vec<f64>> {
    if grid.dim() != 1 {
        return Err(Error::Precondition("θ-profile is defined in one dimension".into()));
    }
    let spec = &ctx.spec;
    let beta = ctx.beta;
    let ub = spec.value1(partition.barrier_x)?;
    let (xl, xr) = (partition.left_min, partition.right_min);
    let f = |x: f64| (beta * (spec.value1(x).unwrap_or(f64::NEG_INFINITY) - ub)).exp();
    let opts = QuadOptions {
        rel_tol: 1e-12,
        initial_panels: 1,
        ..QuadOptions::default()
    };

    let axis = grid.axis();
    let mut knots = vec![xl];
    knots.extend(axis.iter().copied().filter(|&x| x > xl && x < xr));
    knots.push(xr);
    let mut cumulative = vec![0.0; knots.len()];
    for i in 1..knots.len() {
        cumulative[i] = cumulative[i - 1] + integrate(f, knots[i - 1], knots[i], opts)?.value;
    }
    let total = cumulative[knots.len() - 1];
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Numeric("θ normalization is not a positive finite number".into()));
    }
    let mut inner = cumulative[1..knots.len() - 1].iter();
    Ok(axis
        .iter()
        .map(|&x| {
            if x <= xl {
                1.0
            } else if x >= xr {
                -1.0
            } else {
                1.0 - 2.0 * inner.next().copied().unwrap_or(total) / total
            }
        })
        .collect())
}

/// `E₁ = -n ψ₀(x_b) ψ₁'(x_b) / ∫_G ψ₀ψ₁` with `n` the outward normal of `G`
/// at the barrier, `ψ₁'` from the fourth-order central difference at the
/// node nearest `x_b`, and the denominator by the trapezoid rule over the
/// nodes of `G`. Numerator and denominator are both linear in `ψ₁`, so the
/// value does not depend on the eigenvector sign or normalization.
pub fn surface_formula_e1(psi0: &[f64], psi1: &[f64], partition: &WellPartition, grid: &Grid) -> Result<f64> {
    if grid.dim() != 1 {
        return Err(Error::Precondition(
            "surface formula is implemented in one dimension".into(),
        ));
    }
    let n = grid.n();
    if psi0.len() != n || psi1.len() != n {
        return Err(Error::Config(format!("eigenvectors must have {n} samples")));
    }
    let h = grid.spacing();
    let i = grid.nearest_node(partition.barrier_x);
    if i < 2 || i + 2 >= n {
        return Err(Error::DegeneratePartition(
            "barrier too close to the grid edge for the stencil".into(),
        ));
    }
    let d1 = (-psi1[i + 2] + 8.0 * psi1[i + 1] - 8.0 * psi1[i - 1] + psi1[i - 2]) / (12.0 * h);

    let g = partition.well_region;
    let nodes: Vec<usize> = (0..n).filter(|&j| g.contains(grid.axis_node(j))).collect();
    if nodes.len() < 2 {
        return Err(Error::DegeneratePartition(
            "well region holds fewer than two nodes".into(),
        ));
    }
    let mut den: f64 = nodes.iter().map(|&j| psi0[j] * psi1[j]).sum();
    den -= 0.5 * (psi0[nodes[0]] * psi1[nodes[0]] + psi0[nodes[nodes.len() - 1]] * psi1[nodes[nodes.len() - 1]]);
    den *= h;
    if den.abs() < 1e-300 {
        return Err(Error::DegeneratePartition("∫_G ψ₀ψ₁ vanishes".into()));
    }
    Ok(-partition.outward_normal() * psi0[i] * d1 / den)
}
