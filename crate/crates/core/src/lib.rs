//! Spectral gap of the Witten–Schrödinger operator `H = -Δ + V` attached to
//! diffusion in a confining potential, together with the semiclassical,
//! Arrhenius and Eyring rate estimates it is compared against.
//!
//! Units follow the convention `ħ = 2m = 1`. The operator `H` is the
//! function-level piece `d_t^* d_t` of the deformed Laplacian with `t = β/2`;
//! higher-degree forms are not modelled.
//!
//! Module map:
//! - [`potential`]: potential families, critical points, free energies
//! - [`witten`]: effective potential, analytic ground state, `A^*A` check
//! - [`grid_operator`]: grids and the Schrödinger / Fokker–Planck assemblies
//! - [`spectrum`]: lowest eigenpairs, gap, θ-profile, surface formula
//! - [`semiclassics`]: Bohr–Sommerfeld action, WKB, Arrhenius, Eyring
//! - [`evolution`]: Crank–Nicolson diffusion and relaxation-rate fits
//! - [`ratescan`]: β sweeps and Arrhenius regression

pub mod error;
pub mod evolution;
pub mod grid_operator;
pub mod linalg;
pub mod potential;
pub mod quadrature;
pub mod ratescan;
pub mod semiclassics;
pub mod spectrum;
pub mod witten;

pub use error::{Error, Result};
pub use grid_operator::{
    assemble_fokker_planck, assemble_schrodinger, assemble_schrodinger_with, build_grid, AssembledOperator, Grid,
    OperatorKind, PotentialStencil,
};
pub use potential::{critical_points, free_energy, CriticalKind, CriticalPoint, Family, PotentialSpec, Region};
pub use spectrum::{lowest_eigenpairs, spectral_gap, SpectrumResult, WellPartition};
pub use witten::WittenContext;
