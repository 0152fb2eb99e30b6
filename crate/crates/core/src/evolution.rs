//! Time integration of the diffusion equation `∂f/∂t = L f` on the
//! conservative Fokker–Planck assembly, and the decay rate of `f` toward the
//! Gibbs state.

use crate::grid_operator::{AssembledOperator, Grid, OperatorKind, OperatorMatrix};
use crate::linalg::TridiagLu;
use crate::spectrum::WellPartition;
use crate::witten::WittenContext;
use crate::{Error, Result};

/// Backward-Euler half steps replacing the first Crank–Nicolson steps. They
/// damp the stiff content of non-smooth initial data, which CN alone only
/// flips in sign.
pub const RANNACHER_HALF_STEPS: usize = 4;

#[derive(Debug, Clone, Default)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    /// `h Σ f_i`
    pub mass: Vec<f64>,
    /// `‖f - f_∞‖` in `L²(e^{βU} dx)`
    pub distance: Vec<f64>,
    pub snapshots: Vec<(f64, Vec<f64>)>,
}

impl EvolutionTrace {
    /// Largest `|m(t) - m(0)| / |m(0)|` over the trace.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.mass.first().copied().unwrap_or(0.0);
        let scale = m0.abs().max(f64::MIN_POSITIVE);
        self.mass.iter().map(|m| (m - m0).abs() / scale).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Record mass and distance every this many steps.
    pub sample_every: usize,
    /// Keep a copy of `f` every this many steps.
    pub snapshot_every: Option<usize>,
}

impl EvolveOptions {
    /// `dt = 0.01/E₁` with `E₁` an a-priori estimate of the gap.
    pub fn from_rate_estimate(e1: f64, t_end: f64) -> Self {
        Self {
            dt: 0.01 / e1,
            t_end,
            sample_every: 1,
            snapshot_every: None,
        }
    }
}

/// Largest step for which Crank–Nicolson keeps every nonnegative density
/// nonnegative: `dt ≤ 2 / max|L_ii|` makes `I + dt/2 L` entrywise
/// nonnegative, and `I - dt/2 L` is an M-matrix with nonnegative inverse.
/// Larger steps can undershoot when mass sits where the drift is strong;
/// the undershoot is worst just above this bound, not at large `dt`.
pub fn positivity_time_step(op: &AssembledOperator) -> Result<f64> {
    match (&op.kind, &op.matrix) {
        (OperatorKind::FokkerPlanck, OperatorMatrix::Tridiagonal { diag, .. }) => {
            Ok(2.0 / diag.iter().fold(0.0f64, |m, d| m.max(d.abs())))
        }
        _ => Err(Error::Config(
            "positivity bound needs the one-dimensional Fokker-Planck assembly".into(),
        )),
    }
}

/// `h Σ f_i`; the Dirichlet endpoints carry zero.
pub fn mass(grid: &Grid, f: &[f64]) -> f64 {
    grid.cell_volume() * f.iter().sum::<f64>()
}

fn gibbs_from_energies(energies: &[f64], beta: f64, cell: f64, total: f64) -> Vec<f64> {
    let umin = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let g: Vec<f64> = energies.iter().map(|u| (-beta * (u - umin)).exp()).collect();
    let z = cell * g.iter().sum::<f64>();
    g.into_iter().map(|v| v * total / z).collect()
}

/// `ln ∫ f² e^{βU}` on the grid, or `-∞` for `f = 0`.
fn log_weighted_norm2(energies: &[f64], beta: f64, cell: f64, f: &[f64]) -> f64 {
    let terms: Vec<f64> = f
        .iter()
        .zip(energies)
        .filter(|(v, _)| **v != 0.0)
        .map(|(v, u)| 2.0 * v.abs().ln() + beta * u)
        .collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + (terms.iter().map(|t| (t - max).exp()).sum::<f64>() * cell).ln()
}

fn weighted_distance(energies: &[f64], beta: f64, cell: f64, f: &[f64], limit: &[f64]) -> f64 {
    let diff: Vec<f64> = f.iter().zip(limit).map(|(a, b)| a - b).collect();
    (0.5 * log_weighted_norm2(energies, beta, cell, &diff)).exp()
}

/// `y = L f` for a conservative tridiagonal `L`, as differences of the
/// interface fluxes `upper[j] f[j+1] - lower[j] f[j]` plus `leak[i] f[i]`.
fn flux_apply(lower: &[f64], upper: &[f64], leak: &[f64], f: &[f64], y: &mut [f64]) {
    let n = f.len();
    let mut prev = 0.0;
    for i in 0..n {
        let flux = if i + 1 < n {
            upper[i] * f[i + 1] - lower[i] * f[i]
        } else {
            0.0
        };
        y[i] = flux - prev + leak[i] * f[i];
        prev = flux;
    }
}

/// `e^{-βU(x_i)} ∫f₀ / ∫e^{-βU}` with both integrals as node sums.
pub fn gibbs_limit(ctx: &WittenContext, grid: &Grid, f0: &[f64]) -> Result<Vec<f64>> {
    if f0.len() != grid.len() {
        return Err(Error::Config(format!(
            "initial condition needs {} samples, got {}",
            grid.len(),
            f0.len()
        )));
    }
    if f0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("initial condition has non-finite samples".into()));
    }
    let energies = ctx.node_energies(grid)?;
    if !log_weighted_norm2(&energies, ctx.beta, grid.cell_volume(), f0).is_finite() && f0.iter().any(|&v| v != 0.0) {
        return Err(Error::Precondition(
            "initial condition is not square integrable against e^{βU}".into(),
        ));
    }
    Ok(gibbs_from_energies(
        &energies,
        ctx.beta,
        grid.cell_volume(),
        mass(grid, f0),
    ))
}

/// Crank–Nicolson `(I - dt/2 L) f_{k+1} = (I + dt/2 L) f_k`, with the first
/// step replaced by backward-Euler half steps. The left-hand matrix is the
/// same for both schemes and is factored once.
pub fn evolve(op: &AssembledOperator, f0: &[f64], opts: &EvolveOptions) -> Result<EvolutionTrace> {
    if op.kind != OperatorKind::FokkerPlanck {
        return Err(Error::Config("evolution needs the Fokker-Planck assembly".into()));
    }
    let OperatorMatrix::Tridiagonal { lower, diag, upper } = &op.matrix else {
        return Err(Error::Config("evolution is one-dimensional".into()));
    };
    if !(opts.dt > 0.0) || !(opts.t_end >= opts.dt) || opts.sample_every == 0 {
        return Err(Error::Config(format!(
            "need dt > 0, T >= dt and sample_every >= 1; got dt = {}, T = {}, sample_every = {}",
            opts.dt, opts.t_end, opts.sample_every
        )));
    }
    let n = diag.len();
    if f0.len() != n {
        return Err(Error::Config(format!(
            "initial condition needs {n} samples, got {}",
            f0.len()
        )));
    }
    let cell = op.grid.cell_volume();
    let total = cell * f0.iter().sum::<f64>();
    let limit = gibbs_from_energies(&op.energies, op.beta, cell, total);

    let half = 0.5 * opts.dt;
    let lhs_lower: Vec<f64> = lower.iter().map(|v| -half * v).collect();
    let lhs_upper: Vec<f64> = upper.iter().map(|v| -half * v).collect();
    let lhs_diag: Vec<f64> = diag.iter().map(|v| 1.0 - half * v).collect();
    let lu = TridiagLu::factor(&lhs_lower, &lhs_diag, &lhs_upper, 0.0)?;
    // Outflow through the domain edge. Interior columns of L sum to zero by
    // construction; their rounding residue (~1e-12 relative) is dropped, as
    // it would otherwise leak mass at a steady rate.
    let mut leak = vec![0.0; n];
    if n > 1 {
        leak[0] = diag[0] + lower[0];
        leak[n - 1] = diag[n - 1] + upper[n - 2];
    } else {
        leak[0] = diag[0];
    }

    let steps = ((opts.t_end / opts.dt).round() as usize).max(1);
    let mut trace = EvolutionTrace::default();
    let mut f = f0.to_vec();
    let record = |trace: &mut EvolutionTrace, k: usize, f: &[f64]| {
        let t = k as f64 * opts.dt;
        trace.times.push(t);
        trace.mass.push(cell * f.iter().sum::<f64>());
        trace
            .distance
            .push(weighted_distance(&op.energies, op.beta, cell, f, &limit));
    };
    record(&mut trace, 0, &f);
    if opts.snapshot_every.is_some() {
        trace.snapshots.push((0.0, f.clone()));
    }
    let mut lf = vec![0.0; n];
    let mut resid = vec![0.0; n];
    // Solve (I - dt/2 L) x = rhs with one refinement step whose residual
    // uses the flux form of L: the assembled diagonal cancels its columns
    // only to rounding, and that residue would drain mass at a steady rate.
    let mut solve = |rhs: &[f64], x: &mut Vec<f64>| {
        x.copy_from_slice(rhs);
        lu.solve(x);
        flux_apply(lower, upper, &leak, x, &mut lf);
        for i in 0..n {
            resid[i] = rhs[i] - (x[i] - half * lf[i]);
        }
        lu.solve(&mut resid);
        x.iter_mut().zip(&resid).for_each(|(a, d)| *a += d);
    };
    let mut next = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let damped_steps = RANNACHER_HALF_STEPS / 2;
    for k in 1..=steps {
        if k <= damped_steps {
            for _ in 0..2 {
                solve(&f, &mut next);
                std::mem::swap(&mut f, &mut next);
            }
        } else {
            flux_apply(lower, upper, &leak, &f, &mut rhs);
            rhs.iter_mut().zip(&f).for_each(|(r, v)| *r = v + half * *r);
            solve(&rhs, &mut next);
            std::mem::swap(&mut f, &mut next);
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite density after step {k}")));
        }
        if k % opts.sample_every == 0 || k == steps {
            record(&mut trace, k, &f);
        }
        if let Some(every) = opts.snapshot_every {
            if every > 0 && (k % every == 0 || k == steps) {
                trace.snapshots.push((k as f64 * opts.dt, f.clone()));
            }
        }
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationFit {
    /// `-d ln(distance)/dt`
    pub rate: f64,
    /// `ln(distance)` of the fit line at `t = 0`.
    pub intercept: f64,
    /// Root-mean-square residual of the log-linear fit.
    pub residual: f64,
    pub points: usize,
}

/// Least-squares slope of `-ln(distance)` against `t` over `window`.
pub fn relaxation_rate(trace: &EvolutionTrace, window: (f64, f64)) -> Result<RelaxationFit> {
    let (t0, t1) = window;
    if !(t0 < t1) {
        return Err(Error::Config(format!("empty fit window [{t0}, {t1}]")));
    }
    let last = trace.times.last().copied().unwrap_or(f64::NEG_INFINITY);
    if t1 > last * (1.0 + 1e-12) || t0 < trace.times.first().copied().unwrap_or(f64::INFINITY) {
        return Err(Error::Precondition(format!(
            "window [{t0}, {t1}] is not inside the trace"
        )));
    }
    let mut pts = Vec::new();
    for (&t, &d) in trace.times.iter().zip(&trace.distance) {
        if t >= t0 && t <= t1 {
            if !(d > 1e-300) {
                return Err(Error::Precondition(format!(
                    "distance has underflowed at t = {t}; choose an earlier window"
                )));
            }
            pts.push((t, -d.ln()));
        }
    }
    if pts.len() < 2 {
        return Err(Error::Precondition("fewer than two samples in the fit window".into()));
    }
    let m = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let rate = sxy / sxx;
    let intercept = ym - rate * tm;
    let residual = (pts.iter().map(|p| (p.1 - intercept - rate * p.0).powi(2)).sum::<f64>() / m).sqrt();
    Ok(RelaxationFit {
        rate,
        intercept: -intercept,
        residual,
        points: pts.len(),
    })
}

/// Gibbs density restricted to the well `G` of the partition, unit mass.
pub fn left_well_gibbs(ctx: &WittenContext, grid: &Grid, partition: &WellPartition) -> Result<Vec<f64>> {
    let energies = ctx.node_energies(grid)?;
    let g = partition.well_region;
    let umin = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let f: Vec<f64> = grid
        .axis()
        .iter()
        .zip(&energies)
        .map(|(&x, u)| {
            if g.contains(x) {
                (-ctx.beta * (u - umin)).exp()
            } else {
                0.0
            }
        })
        .collect();
    normalized(grid, f)
}

/// Gaussian bump of unit mass centred at `center`.
pub fn gaussian_bump(grid: &Grid, center: f64, width: f64) -> Result<Vec<f64>> {
    if !(width > 0.0) {
        return Err(Error::Config(format!("bump width must be positive, got {width}")));
    }
    let f = grid
        .axis()
        .iter()
        .map(|x| (-0.5 * ((x - center) / width).powi(2)).exp())
        .collect();
    normalized(grid, f)
}

fn normalized(grid: &Grid, mut f: Vec<f64>) -> Result<Vec<f64>> {
    let m = mass(grid, &f);
    if !(m > 0.0) {
        return Err(Error::Config("initial condition has no mass on the grid".into()));
    }
    f.iter_mut().for_each(|v| *v /= m);
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_operator::{assemble_fokker_planck, build_grid};
    use crate::potential::{PotentialSpec, Region};
    use crate::spectrum::lowest_eigenpairs;

    fn quartic(beta: f64) -> WittenContext {
        WittenContext::new(PotentialSpec::quartic_double_well(1.0, 1.0).unwrap(), beta).unwrap()
    }

    fn partition() -> WellPartition {
        WellPartition::auto(&quartic(1.0).spec, Region::new(-8.0, 8.0).unwrap()).unwrap()
    }

    #[test]
    fn gibbs_is_fixed_point_of_limit() {
        let ctx = quartic(6.0);
        let grid = build_grid(-8.0, 8.0, 799, 1).unwrap();
        let g = gibbs_limit(&ctx, &grid, &gaussian_bump(&grid, -1.0, 0.2).unwrap()).unwrap();
        let again = gibbs_limit(&ctx, &grid, &g).unwrap();
        for (a, b) in g.iter().zip(&again) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
        }
    }

    #[test]
    fn zero_mass_limit_is_zero() {
        let ctx = quartic(6.0);
        let grid = build_grid(-3.0, 3.0, 299, 1).unwrap();
        let axis = grid.axis();
        let f0: Vec<f64> = axis.iter().map(|x| x * (-(x * x)).exp()).collect();
        let g = gibbs_limit(&ctx, &grid, &f0).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn gibbs_initial_condition_is_stationary() {
        let ctx = quartic(6.0);
        let grid = build_grid(-8.0, 8.0, 799, 1).unwrap();
        let op = assemble_fokker_planck(&ctx, &grid).unwrap();
        let f0 = gibbs_limit(&ctx, &grid, &gaussian_bump(&grid, 0.0, 1.0).unwrap()).unwrap();
        let opts = EvolveOptions {
            dt: 0.5,
            t_end: 50.0,
            sample_every: 10,
            snapshot_every: None,
        };
        let tr = evolve(&op, &f0, &opts).unwrap();
        assert!(tr.distance.iter().all(|d| *d < 1e-10), "{:?}", tr.distance);
    }

    #[test]
    fn mass_conserved_over_many_steps() {
        let ctx = quartic(6.0);
        let grid = build_grid(-8.0, 8.0, 1599, 1).unwrap();
        let op = assemble_fokker_planck(&ctx, &grid).unwrap();
        let f0 = gaussian_bump(&grid, -1.0, 0.3).unwrap();
        let opts = EvolveOptions {
            dt: 0.05,
            t_end: 500.0,
            sample_every: 100,
            snapshot_every: None,
        };
        let tr = evolve(&op, &f0, &opts).unwrap();
        assert_eq!(tr.times.len(), 101);
        assert!(tr.mass_drift() <= 1e-10, "{}", tr.mass_drift());
    }

    #[test]
    fn relaxation_matches_gap_quartic() {
        let ctx = quartic(6.0);
        let grid = build_grid(-8.0, 8.0, 1599, 1).unwrap();
        let op = assemble_fokker_planck(&ctx, &grid).unwrap();
        let e1 = lowest_eigenpairs(&op, 2).unwrap().eigenvalues[1];
        let f0 = left_well_gibbs(&ctx, &grid, &partition()).unwrap();
        let opts = EvolveOptions {
            dt: 0.01 / e1,
            t_end: 20.0 / e1,
            sample_every: 5,
            snapshot_every: None,
        };
        let tr = evolve(&op, &f0, &opts).unwrap();
        let fit = relaxation_rate(&tr, (5.0 / e1, 15.0 / e1)).unwrap();
        assert!(((fit.rate - e1) / e1).abs() < 0.05, "{} vs {e1}", fit.rate);
        assert!(*tr.distance.last().unwrap() <= 1e-6, "{}", tr.distance.last().unwrap());
    }

    #[test]
    fn relaxation_matches_gap_quadratic() {
        let ctx = WittenContext::new(PotentialSpec::quadratic(1.0, 1).unwrap(), 1.0).unwrap();
        let grid = build_grid(-10.0, 10.0, 1599, 1).unwrap();
        let op = assemble_fokker_planck(&ctx, &grid).unwrap();
        let f0 = gaussian_bump(&grid, 1.0, 0.3).unwrap();
        let opts = EvolveOptions {
            dt: 0.005,
            t_end: 6.0,
            sample_every: 10,
            snapshot_every: None,
        };
        let tr = evolve(&op, &f0, &opts).unwrap();
        let fit = relaxation_rate(&tr, (2.0, 5.0)).unwrap();
        assert!((fit.rate - 2.0).abs() < 0.1, "{}", fit.rate);
    }

    #[test]
    fn late_time_distance_is_monotone() {
        let ctx = quartic(4.0);
        let grid = build_grid(-6.0, 6.0, 799, 1).unwrap();
        let op = assemble_fokker_planck(&ctx, &grid).unwrap();
        let f0 = left_well_gibbs(&ctx, &grid, &partition()).unwrap();
        let opts = EvolveOptions {
            dt: 0.2,
            t_end: 400.0,
            sample_every: 1,
            snapshot_every: Some(500),
        };
        let tr = evolve(&op, &f0, &opts).unwrap();
        // Past ~1e-10 the distance sits on the rounding floor.
        let floor = 1e-9 * tr.distance[0];
        for (i, w) in tr
            .distance
            .windows(2)
            .enumerate()
            .skip(10)
            .filter(|(_, w)| w[1] > floor)
        {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "step {i}: {} -> {}", w[0], w[1]);
        }
        assert_eq!(tr.snapshots.len(), 1 + 4);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]
        #[test]
        fn positivity_below_threshold(f0 in proptest::collection::vec(0.0f64..1.0, 99), scale in 0.1f64..1.0) {
            let ctx = quartic(2.0);
            let grid = build_grid(-2.5, 2.5, 99, 1).unwrap();
            let op = assemble_fokker_planck(&ctx, &grid).unwrap();
            let dt = scale * positivity_time_step(&op).unwrap();
            let opts = EvolveOptions { dt, t_end: 50.0 * dt, sample_every: 1, snapshot_every: Some(1) };
            let tr = evolve(&op, &f0, &opts).unwrap();
            for (_, f) in &tr.snapshots {
                proptest::prop_assert!(f.iter().all(|&v| v >= 0.0));
            }
        }

        #[test]
        fn mass_conserved_for_any_step(dt in 1e-3f64..20.0, center in -3.0f64..3.0, width in 0.05f64..1.0) {
            let ctx = quartic(6.0);
            let grid = build_grid(-6.0, 6.0, 599, 1).unwrap();
            let op = assemble_fokker_planck(&ctx, &grid).unwrap();
            let f0 = gaussian_bump(&grid, center, width).unwrap();
            let opts = EvolveOptions { dt, t_end: 1000.0 * dt, sample_every: 50, snapshot_every: None };
            let tr = evolve(&op, &f0, &opts).unwrap();
            proptest::prop_assert!(tr.mass_drift() <= 1e-10, "drift {}", tr.mass_drift());
        }
    }

    #[test]
    fn synthetic_traces() {
        let times: Vec<f64> = (0..100).map(|i| i as f64 * 0.05).collect();
        let single = EvolutionTrace {
            distance: times.iter().map(|t| (-3.0 * t).exp()).collect(),
            mass: vec![1.0; 100],
            times: times.clone(),
            snapshots: vec![],
        };
        let fit = relaxation_rate(&single, (0.5, 4.0)).unwrap();
        assert!((fit.rate - 3.0).abs() < 1e-12 && fit.residual < 1e-12);
        let late: Vec<f64> = (0..200).map(|i| i as f64 * 0.1).collect();
        let two = EvolutionTrace {
            distance: late.iter().map(|t| (-t).exp() + 0.01 * (-5.0 * t).exp()).collect(),
            mass: vec![1.0; 200],
            times: late,
            snapshots: vec![],
        };
        assert!((relaxation_rate(&two, (10.0, 19.0)).unwrap().rate - 1.0).abs() < 1e-12);
        assert!((relaxation_rate(&two, (0.0, 2.0)).unwrap().rate - 1.0).abs() > 1e-3);
    }

    #[test]
    fn underflowed_window_rejected() {
        let times: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let tr = EvolutionTrace {
            distance: vec![1.0, 0.1, 0.01, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            mass: vec![1.0; 10],
            times,
            snapshots: vec![],
        };
        let err = relaxation_rate(&tr, (2.0, 6.0)).unwrap_err();
        assert!(err.to_string().contains("earlier window"));
    }

    #[test]
    fn schrodinger_operator_rejected() {
        let ctx = quartic(2.0);
        let grid = build_grid(-3.0, 3.0, 99, 1).unwrap();
        let op = crate::grid_operator::assemble_schrodinger(&ctx, &grid).unwrap();
        let f0 = vec![0.0; 99];
        let opts = EvolveOptions {
            dt: 0.1,
            t_end: 1.0,
            sample_every: 1,
            snapshot_every: None,
        };
        assert!(evolve(&op, &f0, &opts).is_err());
    }
}
