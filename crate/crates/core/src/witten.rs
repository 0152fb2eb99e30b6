//! The substitution `ψ = e^{βU/2} f` that turns diffusion in a potential
//! into imaginary-time Schrödinger evolution `∂ψ/∂t = -Hψ` with
//! `H = A^*A = -Δ + V`, `A_i = e^{-βU/2} ∂_i e^{βU/2}` and
//! `V = -(β/2)ΔU + (β²/4)|∇U|²`.
//!
//! Energies are in units with `ħ = 2m = 1`. `A` is the deformed exterior
//! derivative `d_t = e^{-tU} d e^{tU}` restricted to functions, with `t = β/2`.

use crate::grid_operator::Grid;
use crate::potential::{check_beta, PotentialSpec};
use crate::Result;

#[derive(Debug, Clone)]
pub struct WittenContext {
    pub spec: PotentialSpec,
    pub beta: f64,
}

impl WittenContext {
    pub fn new(spec: PotentialSpec, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self { spec, beta })
    }

    /// Deformation parameter of the corresponding Witten Laplacian.
    pub fn deformation(&self) -> f64 {
        0.5 * self.beta
    }

    /// `V(x) = -(β/2)ΔU(x) + (β²/4)|∇U(x)|²`
    pub fn effective_potential(&self, x: &[f64]) -> Result<f64> {
        let lap = self.spec.laplacian(x)?;
        let g2: f64 = self.spec.grad(x)?.iter().map(|g| g * g).sum();
        Ok(-0.5 * self.beta * lap + 0.25 * self.beta * self.beta * g2)
    }

    pub fn effective_potential1(&self, x: f64) -> Result<f64> {
        let (_, d1, d2) = self.spec.profile(x)?;
        Ok(-0.5 * self.beta * d2 + 0.25 * self.beta * self.beta * d1 * d1)
    }

    /// Energies `U` at every node of the grid including the Dirichlet
    /// boundary ring, row-major with `(n + 2)^d` entries.
    pub fn full_energies(&self, grid: &Grid) -> Result<Vec<f64>> {
        let axis = grid.full_axis();
        match grid.dim() {
            1 => axis.iter().map(|&x| self.spec.eval(&[x])).collect(),
            _ => {
                let mut out = Vec::with_capacity(axis.len() * axis.len());
                for &x in &axis {
                    for &y in &axis {
                        out.push(self.spec.eval(&[x, y])?);
                    }
                }
                Ok(out)
            }
        }
    }

    /// Energies at the interior nodes.
    pub fn node_energies(&self, grid: &Grid) -> Result<Vec<f64>> {
        (0..grid.len()).map(|k| self.spec.eval(&grid.coordinate(k))).collect()
    }

    /// Normalized ground state `ψ₀ = e^{-βU/2} / (∫ e^{-βU})^{1/2}` sampled at
    /// the interior nodes; the discrete norm `(h^d Σ ψ₀²)^{1/2}` is one.
    pub fn ground_state(&self, grid: &Grid) -> Result<Vec<f64>> {
        let energies = self.node_energies(grid)?;
        Ok(ground_state_from_energies(&energies, self.beta, grid.cell_volume()))
    }

    /// `Σ_i ‖A_i ψ‖²` with `A_i ψ` taken at cell midpoints as
    /// `(e^{βΔU/4} ψ_{j+1} - e^{-βΔU/4} ψ_j)/h`, `ΔU = U_{j+1} - U_j`.
    /// Equals `h^d Σ ψ (Hψ)` for the default Schrödinger assembly.
    pub fn quadratic_form_check(&self, grid: &Grid, psi: &[f64]) -> Result<f64> {
        let full = self.full_energies(grid)?;
        let n = grid.n();
        let m = n + 2;
        let h = grid.spacing();
        let value_at = |idx: &[usize]| -> f64 {
            // idx in full-grid coordinates; boundary values vanish
            if idx.iter().any(|&t| t == 0 || t == m - 1) {
                0.0
            } else {
                let k = idx.iter().fold(0, |acc, &t| acc * n + (t - 1));
                psi[k]
            }
        };
        let energy_at = |idx: &[usize]| -> f64 { full[idx.iter().fold(0, |acc, &t| acc * m + t)] };
        let mut total = 0.0;
        match grid.dim() {
            1 => {
                for j in 0..m - 1 {
                    let a = self.midpoint_derivative(
                        energy_at(&[j]),
                        energy_at(&[j + 1]),
                        value_at(&[j]),
                        value_at(&[j + 1]),
                        h,
                    );
                    total += a * a;
                }
                total *= h;
            }
            _ => {
                for line in 1..m - 1 {
                    for j in 0..m - 1 {
                        let ax = self.midpoint_derivative(
                            energy_at(&[j, line]),
                            energy_at(&[j + 1, line]),
                            value_at(&[j, line]),
                            value_at(&[j + 1, line]),
                            h,
                        );
                        let ay = self.midpoint_derivative(
                            energy_at(&[line, j]),
                            energy_at(&[line, j + 1]),
                            value_at(&[line, j]),
                            value_at(&[line, j + 1]),
                            h,
                        );
                        total += ax * ax + ay * ay;
                    }
                }
                total *= h * h;
            }
        }
        Ok(total)
    }

    fn midpoint_derivative(&self, u0: f64, u1: f64, p0: f64, p1: f64, h: f64) -> f64 {
        let z = (0.25 * self.beta * (u1 - u0)).clamp(-EXP_CLAMP / 2.0, EXP_CLAMP / 2.0);
        (z.exp() * p1 - (-z).exp() * p0) / h
    }
}

/// Largest exponent used when forming Gibbs-weight ratios. Ratios beyond
/// `e^700` only arise next to nodes whose Gibbs weight underflows anyway.
pub(crate) const EXP_CLAMP: f64 = 700.0;

pub(crate) fn ground_state_from_energies(energies: &[f64], beta: f64, cell: f64) -> Vec<f64> {
    let umin = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let mut psi: Vec<f64> = energies.iter().map(|u| (-0.5 * beta * (u - umin)).exp()).collect();
    let norm = (cell * psi.iter().map(|p| p * p).sum::<f64>()).sqrt();
    for p in &mut psi {
        *p /= norm;
    }
    psi
}
