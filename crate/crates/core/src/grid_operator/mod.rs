//! Uniform Dirichlet grids and the two discretizations of the diffusion
//! generator: the Schrödinger form `H` and the conservative Fokker–Planck
//! form `L f = div(e^{-βU} grad(f e^{βU}))`.
//!
//! Both use the Gibbs weight `e^{-β(U_j + U_{j+1})/2}` on the cell midpoint
//! (geometric mean of the nodal weights). With that choice the discrete
//! identities `H = A^*A`, `H e^{-βU/2} = 0` (interior rows) and
//! `W^{-1}(-L)W = H`, `W = diag(e^{-βU_i/2})`, hold at the matrix level.

mod assemble;

use std::fmt::Write as _;

pub use assemble::{assemble_fokker_planck, assemble_schrodinger, assemble_schrodinger_with, PotentialStencil};

use crate::linalg::tridiag_matvec;
use crate::{Error, Result};

/// Tensor grid on `[lo, hi]^d` with `n` interior nodes per axis; the two
/// endpoints carry the Dirichlet condition and are not unknowns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    lo: f64,
    hi: f64,
    n: usize,
    dim: usize,
}

pub const MIN_NODES: usize = 16;

pub fn build_grid(lo: f64, hi: f64, n: usize, dim: usize) -> Result<Grid> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Config(format!("grid needs lo < hi, got [{lo}, {hi}]")));
    }
    if n < MIN_NODES {
        return Err(Error::Config(format!(
            "grid needs at least {MIN_NODES} interior nodes, got {n}"
        )));
    }
    if !(1..=2).contains(&dim) {
        return Err(Error::Config(format!("grid dimension must be 1 or 2, got {dim}")));
    }
    Ok(Grid { lo, hi, n, dim })
}

impl Grid {
    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Interior nodes per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n + 1) as f64
    }

    /// `h^d`, the quadrature weight of one node.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Total number of unknowns, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of interior node `i` along one axis.
    pub fn axis_node(&self, i: usize) -> f64 {
        self.lo + self.spacing() * (i + 1) as f64
    }

    /// Interior coordinates along one axis.
    pub fn axis(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.axis_node(i)).collect()
    }

    /// All `n + 2` coordinates along one axis, boundary included.
    pub fn full_axis(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n + 2)
            .map(|i| {
                if i == self.n + 1 {
                    self.hi
                } else {
                    self.lo + h * i as f64
                }
            })
            .collect()
    }

    /// Coordinate of flattened unknown `k` (row-major over axes).
    pub fn coordinate(&self, k: usize) -> Vec<f64> {
        match self.dim {
            1 => vec![self.axis_node(k)],
            _ => vec![self.axis_node(k / self.n), self.axis_node(k % self.n)],
        }
    }

    /// Index of the interior node closest to `x` (1D).
    pub fn nearest_node(&self, x: f64) -> usize {
        let t = ((x - self.lo) / self.spacing()).round() as i64 - 1;
        t.clamp(0, self.n as i64 - 1) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Schrodinger,
    FokkerPlanck,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorMatrix {
    /// `lower[i]` is entry `(i+1, i)`, `upper[i]` entry `(i, i+1)`.
    Tridiagonal {
        lower: Vec<f64>,
        diag: Vec<f64>,
        upper: Vec<f64>,
    },
    /// Five-point stencil on an `n × n` tensor grid: `diag` per node and a
    /// uniform off-diagonal `coupling` to the four neighbours.
    Stencil2d { n: usize, diag: Vec<f64>, coupling: f64 },
}

/// An assembled, immutable discretization tagged with its β and grid.
#[derive(Debug, Clone)]
pub struct AssembledOperator {
    pub kind: OperatorKind,
    pub beta: f64,
    pub grid: Grid,
    pub matrix: OperatorMatrix,
    /// `U` at the interior nodes.
    pub energies: Vec<f64>,
    /// Similarity weights `w_i = e^{-βU_i/2}` (may underflow to zero).
    pub weights: Vec<f64>,
}

impl AssembledOperator {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `y = M x`
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        match &self.matrix {
            OperatorMatrix::Tridiagonal { lower, diag, upper } => tridiag_matvec(lower, diag, upper, x, y),
            OperatorMatrix::Stencil2d { n, diag, coupling } => {
                let n = *n;
                for i in 0..n {
                    for j in 0..n {
                        let k = i * n + j;
                        let mut nb = 0.0;
                        if i > 0 {
                            nb += x[k - n];
                        }
                        if i + 1 < n {
                            nb += x[k + n];
                        }
                        if j > 0 {
                            nb += x[k - 1];
                        }
                        if j + 1 < n {
                            nb += x[k + 1];
                        }
                        y[k] = diag[k] * x[k] + coupling * nb;
                    }
                }
            }
        }
    }

    /// Nonzero entries as `(row, col, value)` triplets, row-major.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        match &self.matrix {
            OperatorMatrix::Tridiagonal { lower, diag, upper } => {
                for i in 0..diag.len() {
                    if i > 0 {
                        out.push((i, i - 1, lower[i - 1]));
                    }
                    out.push((i, i, diag[i]));
                    if i + 1 < diag.len() {
                        out.push((i, i + 1, upper[i]));
                    }
                }
            }
            OperatorMatrix::Stencil2d { n, diag, coupling } => {
                let n = *n;
                for k in 0..n * n {
                    let (i, j) = (k / n, k % n);
                    if i > 0 {
                        out.push((k, k - n, *coupling));
                    }
                    if j > 0 {
                        out.push((k, k - 1, *coupling));
                    }
                    out.push((k, k, diag[k]));
                    if j + 1 < n {
                        out.push((k, k + 1, *coupling));
                    }
                    if i + 1 < n {
                        out.push((k, k + n, *coupling));
                    }
                }
            }
        }
        out
    }

    /// Plain-text dump: `#`-prefixed header lines, then one
    /// `row col value` triplet per line (0-based indices).
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let kind = match self.kind {
            OperatorKind::Schrodinger => "schrodinger",
            OperatorKind::FokkerPlanck => "fokker_planck",
        };
        let _ = writeln!(s, "# kind {kind}");
        let _ = writeln!(s, "# beta {}", self.beta);
        let _ = writeln!(
            s,
            "# grid lo {} hi {} n {} dim {}",
            self.grid.lo, self.grid.hi, self.grid.n, self.grid.dim
        );
        let _ = writeln!(s, "# size {}", self.dim());
        for (r, c, v) in self.triplets() {
            let _ = writeln!(s, "{r} {c} {v}");
        }
        s
    }

    /// Symmetric tridiagonal form `(diag, off)` of the low spectrum:
    /// `H` itself for the Schrödinger kind, the similarity-symmetrized `-L`
    /// (off-diagonals `-√(L_{i,i+1} L_{i+1,i})`) for the Fokker–Planck kind.
    pub fn symmetric_tridiagonal(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let OperatorMatrix::Tridiagonal { lower, diag, upper } = &self.matrix else {
            return None;
        };
        Some(match self.kind {
            OperatorKind::Schrodinger => (diag.clone(), upper.clone()),
            OperatorKind::FokkerPlanck => (
                diag.iter().map(|d| -d).collect(),
                lower.iter().zip(upper).map(|(l, u)| -(l * u).sqrt()).collect(),
            ),
        })
    }
}
