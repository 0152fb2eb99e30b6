//! β sweeps of every gap estimator and Arrhenius regression of the results.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::grid_operator::{assemble_schrodinger, build_grid, Grid};
use crate::potential::PotentialSpec;
use crate::semiclassics::{rate_estimates, RateEstimates};
use crate::spectrum::{lowest_eigenpairs, spectral_gap, surface_formula_e1, WellPartition};
use crate::witten::WittenContext;
use crate::{Error, Result};

pub const CSV_HEADER: &str = "beta,E1_numeric,E1_wkb,E1_arrhenius,E1_eyring,E1_surface,deltaU,F0,F1,p0,vol";

/// How the grid is chosen at each β.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridPolicy {
    Fixed {
        lo: f64,
        hi: f64,
        n: usize,
    },
    /// `n = max(min_n, per_unit · β · ΔU)`, rounded up to odd.
    Scaled {
        lo: f64,
        hi: f64,
        min_n: usize,
        per_unit: f64,
    },
}

impl GridPolicy {
    /// `[-8ℓ, 8ℓ]` with `ℓ` the well scale, `n = max(1599, 200 β ΔU)`.
    pub fn default_for(spec: &PotentialSpec) -> Self {
        let l = 8.0 * spec.well_scale();
        GridPolicy::Scaled {
            lo: -l,
            hi: l,
            min_n: 1599,
            per_unit: 200.0,
        }
    }

    pub fn grid(&self, beta: f64, delta_u: f64) -> Result<Grid> {
        match *self {
            GridPolicy::Fixed { lo, hi, n } => build_grid(lo, hi, n, 1),
            GridPolicy::Scaled {
                lo,
                hi,
                min_n,
                per_unit,
            } => {
                let n = min_n.max((per_unit * beta * delta_u.max(0.0)).ceil() as usize);
                build_grid(lo, hi, n | 1, 1)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub estimates: RateEstimates,
    /// Interior nodes used at this β.
    pub nodes: usize,
    /// Whether the eigensolve converged; unconverged rows carry no
    /// spectral estimates and are skipped by fits.
    pub converged: bool,
    /// `|E₀|` of a harmonic calibration on the same grid and β.
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
    pub policy: GridPolicy,
    pub potential: String,
    pub warnings: Vec<String>,
}

/// One entry per estimator column of the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Numeric,
    Wkb,
    Arrhenius,
    Eyring,
    Surface,
}

impl Estimator {
    pub const ALL: [Estimator; 5] = [
        Estimator::Numeric,
        Estimator::Wkb,
        Estimator::Arrhenius,
        Estimator::Eyring,
        Estimator::Surface,
    ];

    pub fn column(&self) -> &'static str {
        match self {
            Estimator::Numeric => "E1_numeric",
            Estimator::Wkb => "E1_wkb",
            Estimator::Arrhenius => "E1_arrhenius",
            Estimator::Eyring => "E1_eyring",
            Estimator::Surface => "E1_surface",
        }
    }

    pub fn value(&self, row: &RateEstimates) -> Option<f64> {
        match self {
            Estimator::Numeric => row.e1_numeric,
            Estimator::Wkb => row.e1_wkb,
            Estimator::Arrhenius => row.e1_arrhenius,
            Estimator::Eyring => row.e1_eyring,
            Estimator::Surface => row.e1_surface,
        }
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Estimator::ALL
            .into_iter()
            .find(|e| key == e.column().to_ascii_lowercase() || key == e.column()[3..].to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown estimator '{s}'")))
    }
}

fn harmonic_floor(spec: &PotentialSpec, partition: &WellPartition, grid: &Grid, beta: f64) -> Result<f64> {
    let curvature = spec.second_derivative1(partition.well_min())?;
    let calib = PotentialSpec::quadratic(0.5 * curvature, 1)?;
    let ctx = WittenContext::new(calib, beta)?;
    let res = lowest_eigenpairs(&assemble_schrodinger(&ctx, grid)?, 2)?;
    Ok(res.eigenvalues[0].abs())
}

fn scan_row(spec: &PotentialSpec, beta: f64, partition: &WellPartition, policy: &GridPolicy) -> Result<ScanRow> {
    let delta_u = spec.value1(partition.barrier_x)? - spec.value1(partition.well_min())?;
    estimate_row(spec, beta, partition, &policy.grid(beta, delta_u)?)
}

/// One table row on a given grid. A non-converged eigensolve yields a row
/// flagged `converged = false` rather than an error.
pub fn estimate_row(spec: &PotentialSpec, beta: f64, partition: &WellPartition, grid: &Grid) -> Result<ScanRow> {
    let ctx = WittenContext::new(spec.clone(), beta)?;
    let grid = *grid;
    let floor = harmonic_floor(spec, partition, &grid, beta)?;
    let spectral = lowest_eigenpairs(&assemble_schrodinger(&ctx, &grid)?, 2).and_then(|res| {
        let gap = spectral_gap(&res)?;
        let surface = surface_formula_e1(&res.eigenvectors[0], &res.eigenvectors[1], partition, &grid)?;
        Ok((gap.gap, surface))
    });
    let (numeric, surface, converged) = match spectral {
        Ok((g, s)) => (Some(g), Some(s).filter(|v| *v > 0.0), true),
        Err(Error::Convergence { .. }) => (None, None, false),
        Err(e) => return Err(e),
    };
    let estimates = rate_estimates(&ctx, partition, numeric, surface)?;
    Ok(ScanRow {
        estimates,
        nodes: grid.n(),
        converged,
        floor,
    })
}

/// Every estimator at each β, rows in increasing β. Rows are computed in
/// parallel and merged in input order.
pub fn beta_scan(
    spec: &PotentialSpec,
    betas: &[f64],
    partition: &WellPartition,
    policy: GridPolicy,
) -> Result<ScanTable> {
    if betas.len() < 2 {
        return Err(Error::Config(format!(
            "a scan needs at least two β values, got {}",
            betas.len()
        )));
    }
    if betas.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
        return Err(Error::Config("every β must be positive and finite".into()));
    }
    let mut sorted = betas.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("β values must be distinct".into()));
    }
    let rows: Vec<ScanRow> = sorted
        .par_iter()
        .map(|&b| scan_row(spec, b, partition, &policy))
        .collect::<Result<_>>()?;
    let mut warnings = Vec::new();
    for r in &rows {
        if !r.converged {
            warnings.push(format!(
                "β = {}: eigensolve did not converge; row left out of fits",
                r.estimates.beta
            ));
        } else if let Some(e1) = r.estimates.e1_numeric {
            if e1 < 1e3 * r.floor {
                warnings.push(format!(
                    "β = {}: E1 = {e1:e} is within 1e3 of the discretization floor {:e}",
                    r.estimates.beta, r.floor
                ));
            }
        }
    }
    Ok(ScanTable {
        rows,
        policy,
        potential: spec.describe(),
        warnings,
    })
}

fn field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One CSV line (no newline) in [`CSV_HEADER`] order. Empty fields where an
/// estimator does not apply; values use shortest round-trip formatting.
pub fn csv_row(e: &RateEstimates) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        e.beta,
        field(e.e1_numeric),
        field(e.e1_wkb),
        field(e.e1_arrhenius),
        field(e.e1_eyring),
        field(e.e1_surface),
        e.delta_u,
        field(e.f0),
        field(e.f1),
        field(e.p0),
        field(e.vol)
    )
}

impl ScanTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{CSV_HEADER}");
        for r in &self.rows {
            let _ = writeln!(s, "{}", csv_row(&r.estimates));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrheniusFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `-slope`
    pub implied_delta_u: f64,
    pub rows_used: usize,
    pub warning: Option<String>,
}

/// Ordinary least squares of `ln(rate)` on `β`.
pub fn fit_log_rates(betas: &[f64], rates: &[f64]) -> Result<ArrheniusFit> {
    let pts: Vec<(f64, f64)> = betas
        .iter()
        .zip(rates)
        .filter(|(_, r)| **r > 0.0 && r.is_finite())
        .map(|(b, r)| (*b, r.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Precondition(format!(
            "fit needs two positive rates, got {}",
            pts.len()
        )));
    }
    let m = pts.len() as f64;
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - xm).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Precondition("fit needs two distinct β values".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - ym).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let warning =
        (slope > 0.0).then(|| "rate grows with β: there is no activation barrier for an Arrhenius fit".to_string());
    Ok(ArrheniusFit {
        slope,
        intercept,
        r_squared,
        implied_delta_u: -slope,
        rows_used: pts.len(),
        warning,
    })
}

/// [`fit_log_rates`] on one estimator column, skipping unconverged rows and
/// rows where the column is empty or nonpositive.
pub fn arrhenius_fit(table: &ScanTable, estimator: Estimator) -> Result<ArrheniusFit> {
    let (betas, rates): (Vec<f64>, Vec<f64>) = table
        .rows
        .iter()
        .filter(|r| r.converged)
        .filter_map(|r| estimator.value(&r.estimates).map(|v| (r.estimates.beta, v)))
        .unzip();
    fit_log_rates(&betas, &rates)
}
