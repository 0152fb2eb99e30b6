//! Potential families `U`, their derivatives, critical points and
//! free energies `F(G) = -(1/β) ln ∫_G e^{-βU}`.
//!
//! Analytic families are separable: in `d` dimensions
//! `U(x) = Σ_j u(x_j)` with `u` the one-dimensional profile, which for the
//! quadratic family is exactly `α|x|²`. Tabulated potentials are
//! one-dimensional and reconstructed with a natural cubic spline.

mod spline;

pub use spline::NaturalSpline;

use crate::quadrature::{log_integral_exp, QuadOptions};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `u(x) = α x²`
    Quadratic {
        alpha: f64,
    },
    /// `u(x) = h ((x/a)² - 1)²`
    QuarticDoubleWell {
        height: f64,
        well: f64,
    },
    /// `u(x) = ΔU e^{-a² x²} + κ x²`: a Gaussian barrier of height `ΔU` and
    /// inverse width `a` between two wells shaped by the confinement `κ`.
    /// Requires `a² ΔU > κ`, otherwise there is a single well.
    GaussianBarrierWell {
        barrier: f64,
        inverse_width: f64,
        confinement: f64,
    },
    Tabulated(NaturalSpline),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    family: Family,
    dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalKind {
    Minimum,
    Maximum,
    Saddle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub location: Vec<f64>,
    pub kind: CriticalKind,
    pub hessian_eigs: Vec<f64>,
}

impl CriticalPoint {
    /// Coordinate of a one-dimensional critical point.
    pub fn x(&self) -> f64 {
        self.location[0]
    }
}

/// A one-dimensional interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub lo: f64,
    pub hi: f64,
}

impl Region {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Config(format!("region [{lo}, {hi}] is empty or unbounded")));
        }
        Ok(Self { lo, hi })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn contains_region(&self, other: &Region) -> bool {
        other.lo >= self.lo && other.hi <= self.hi
    }

    pub fn overlaps(&self, other: &Region) -> bool {
        self.lo < other.hi && other.lo < self.hi
    }
}

impl PotentialSpec {
    pub fn quadratic(alpha: f64, dim: usize) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Config(format!(
                "quadratic stiffness must be positive, got {alpha}"
            )));
        }
        Self::analytic(Family::Quadratic { alpha }, dim)
    }

    pub fn quartic_double_well(height: f64, well: f64) -> Result<Self> {
        if !(height > 0.0 && well > 0.0) {
            return Err(Error::Config(format!(
                "quartic double well needs positive h and a, got h = {height}, a = {well}"
            )));
        }
        Self::analytic(Family::QuarticDoubleWell { height, well }, 1)
    }

    pub fn gaussian_barrier_well(barrier: f64, inverse_width: f64, confinement: f64) -> Result<Self> {
        if !(barrier > 0.0 && inverse_width > 0.0 && confinement > 0.0) {
            return Err(Error::Config("Gaussian barrier parameters must be positive".into()));
        }
        if inverse_width * inverse_width * barrier <= confinement {
            return Err(Error::Config(format!(
                "Gaussian barrier with a²ΔU = {} <= κ = {confinement} has no double well",
                inverse_width * inverse_width * barrier
            )));
        }
        Self::analytic(
            Family::GaussianBarrierWell {
                barrier,
                inverse_width,
                confinement,
            },
            1,
        )
    }

    pub fn tabulated(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Ok(Self {
            family: Family::Tabulated(NaturalSpline::new(nodes, values)?),
            dim: 1,
        })
    }

    fn analytic(family: Family, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("dimension must be positive".into()));
        }
        Ok(Self { family, dim })
    }

    /// Same family in `dim` dimensions (separable sum). Tabulated stays 1D.
    pub fn with_dim(mut self, dim: usize) -> Result<Self> {
        if dim == 0 || (matches!(self.family, Family::Tabulated(_)) && dim != 1) {
            return Err(Error::Config(format!("unsupported dimension {dim} for this family")));
        }
        self.dim = dim;
        Ok(self)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn describe(&self) -> String {
        match &self.family {
            Family::Quadratic { alpha } => format!("quadratic(alpha={alpha}, d={})", self.dim),
            Family::QuarticDoubleWell { height, well } => {
                format!("quartic_double_well(h={height}, a={well}, d={})", self.dim)
            }
            Family::GaussianBarrierWell {
                barrier,
                inverse_width,
                confinement,
            } => format!(
                "gaussian_barrier_well(delta_u={barrier}, a={inverse_width}, kappa={confinement}, d={})",
                self.dim
            ),
            Family::Tabulated(s) => format!(
                "tabulated({} nodes on [{}, {}])",
                s.nodes().len(),
                s.range().0,
                s.range().1
            ),
        }
    }

    /// Characteristic length of the wells, used for default grids.
    pub fn well_scale(&self) -> f64 {
        match &self.family {
            Family::Quadratic { alpha } => 1.0 / alpha.sqrt(),
            Family::QuarticDoubleWell { well, .. } => *well,
            Family::GaussianBarrierWell { inverse_width, .. } => {
                let xw = self.known_critical_points().last().copied().unwrap_or(1.0);
                xw.max(1.0 / inverse_width)
            }
            Family::Tabulated(s) => {
                let (lo, hi) = s.range();
                0.125 * (hi - lo)
            }
        }
    }

    /// Critical points of the one-dimensional profile known in closed form.
    pub fn known_critical_points(&self) -> Vec<f64> {
        match &self.family {
            Family::Quadratic { .. } => vec![0.0],
            Family::QuarticDoubleWell { well, .. } => vec![-well, 0.0, *well],
            Family::GaussianBarrierWell {
                barrier,
                inverse_width,
                confinement,
            } => {
                let a2 = inverse_width * inverse_width;
                let xw = (a2 * barrier / confinement).ln().sqrt() / inverse_width;
                vec![-xw, 0.0, xw]
            }
            Family::Tabulated(_) => Vec::new(),
        }
    }

    /// Value, first and second derivative of the 1D profile `u`.
    pub fn profile(&self, x: f64) -> Result<(f64, f64, f64)> {
        Ok(match &self.family {
            Family::Quadratic { alpha } => (alpha * x * x, 2.0 * alpha * x, 2.0 * alpha),
            Family::QuarticDoubleWell { height, well } => {
                let s = x / well;
                let q = s * s - 1.0;
                (
                    height * q * q,
                    4.0 * height * s * q / well,
                    4.0 * height * (3.0 * s * s - 1.0) / (well * well),
                )
            }
            Family::GaussianBarrierWell {
                barrier,
                inverse_width,
                confinement,
            } => {
                let a2 = inverse_width * inverse_width;
                let g = barrier * (-a2 * x * x).exp();
                (
                    g + confinement * x * x,
                    -2.0 * a2 * x * g + 2.0 * confinement * x,
                    g * (4.0 * a2 * a2 * x * x - 2.0 * a2) + 2.0 * confinement,
                )
            }
            Family::Tabulated(s) => s.eval_all(x)?,
        })
    }

    pub fn value1(&self, x: f64) -> Result<f64> {
        if let Family::Quadratic { alpha } = self.family {
            return Ok(alpha * x * x);
        }
        Ok(self.profile(x)?.0)
    }

    pub fn derivative1(&self, x: f64) -> Result<f64> {
        Ok(self.profile(x)?.1)
    }

    pub fn second_derivative1(&self, x: f64) -> Result<f64> {
        Ok(self.profile(x)?.2)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Config(format!(
                "coordinate has {} components, potential is {}-dimensional",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// `U(x)`
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        x.iter().map(|&t| self.value1(t)).sum()
    }

    /// `∇U(x)`
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        x.iter().map(|&t| self.derivative1(t)).collect()
    }

    /// Diagonal of the Hessian (the full Hessian for separable families).
    pub fn hessian_diag(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        x.iter().map(|&t| self.second_derivative1(t)).collect()
    }

    pub fn laplacian(&self, x: &[f64]) -> Result<f64> {
        Ok(self.hessian_diag(x)?.iter().sum())
    }
}

/// Sign-change bracketing of `U'` on a fine sampling of `search`, bisection
/// to 1e-12, classification by the sign of `U''`.
pub fn critical_points(spec: &PotentialSpec, search: Region) -> Result<Vec<CriticalPoint>> {
    const SAMPLES: usize = 10_000;
    const ROOT_TOL: f64 = 1e-12;
    let xs: Vec<f64> = (0..=SAMPLES)
        .map(|i| search.lo + search.len() * i as f64 / SAMPLES as f64)
        .collect();
    let mut slopes = Vec::with_capacity(xs.len());
    let mut max_curv = 0.0f64;
    for &x in &xs {
        let (_, d1, d2) = spec.profile(x)?;
        slopes.push(d1);
        max_curv = max_curv.max(d2.abs());
    }
    let mut roots: Vec<f64> = Vec::new();
    for i in 0..SAMPLES {
        let (ga, gb) = (slopes[i], slopes[i + 1]);
        if ga == 0.0 {
            roots.push(xs[i]);
        } else if gb != 0.0 && ga.signum() != gb.signum() {
            let (mut a, mut b) = (xs[i], xs[i + 1]);
            let mut fa = ga;
            while b - a > ROOT_TOL {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                let fm = spec.derivative1(m)?;
                if fm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
    }
    if slopes[SAMPLES] == 0.0 {
        roots.push(xs[SAMPLES]);
    }
    roots.dedup_by(|a, b| (*a - *b).abs() <= 10.0 * ROOT_TOL);

    let tol = 1e-8 * max_curv.max(f64::MIN_POSITIVE);
    roots
        .into_iter()
        .map(|x| {
            let curvature = spec.second_derivative1(x)?;
            if curvature.abs() < tol {
                return Err(Error::NonMorse { location: x, curvature });
            }
            let kind = if curvature > 0.0 {
                CriticalKind::Minimum
            } else {
                CriticalKind::Maximum
            };
            Ok(CriticalPoint {
                location: vec![x],
                kind,
                hessian_eigs: vec![curvature],
            })
        })
        .collect()
}

/// `F = -(1/β) ln ∫_region e^{-βU(x)} dx`, evaluated with the minimum of `U`
/// factored out of the exponent.
pub fn free_energy(spec: &PotentialSpec, region: Region, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(-log_partition(spec, region, beta)? / beta)
}

/// `ln ∫_region e^{-βU(x)} dx`
pub fn log_partition(spec: &PotentialSpec, region: Region, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    spec.value1(region.lo)?;
    spec.value1(region.hi)?;
    let opts = QuadOptions {
        rel_tol: 1e-10,
        ..QuadOptions::default()
    };
    log_integral_exp(
        |x| -beta * spec.value1(x).unwrap_or(f64::INFINITY),
        region.lo,
        region.hi,
        opts,
    )
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Config(format!(
            "inverse temperature must be positive and finite, got {beta}"
        )));
    }
    Ok(())
}
