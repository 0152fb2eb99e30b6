//! Semiclassical estimates of the gap: the Bohr–Sommerfeld action of a well
//! of `V`, the WKB tunnelling splitting, and the Arrhenius and Eyring rates.

use crate::potential::{critical_points, log_partition, Region};
use crate::quadrature::{integrate_turning, QuadOptions};
use crate::spectrum::WellPartition;
use crate::witten::WittenContext;
use crate::{Error, Result};

/// Samples used to bracket sign changes of `V` before bisection.
const SIGN_SAMPLES: usize = 4000;
const ROOT_TOL: f64 = 1e-13;

/// One row of estimator output at a single β. Rates are `None` when the
/// estimator does not apply (e.g. the barrier is not resolved yet).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RateEstimates {
    pub beta: f64,
    pub e1_numeric: Option<f64>,
    pub e1_wkb: Option<f64>,
    pub e1_arrhenius: Option<f64>,
    pub e1_eyring: Option<f64>,
    pub e1_surface: Option<f64>,
    pub delta_u: f64,
    pub f0: Option<f64>,
    pub f1: Option<f64>,
    /// `√V(x_b)`
    pub p0: Option<f64>,
    /// Length of the classically allowed region of one well.
    pub vol: Option<f64>,
    /// Inverse width of a Gaussian barrier, when the potential has one.
    pub gaussian_width: Option<f64>,
}

fn bisect(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut ga = g(a);
    while (b - a).abs() > ROOT_TOL * (1.0 + a.abs()) {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let gm = g(m);
        if (gm <= 0.0) == (ga <= 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Maximal intervals of `[lo, hi]` on which `g ≤ 0`, with endpoints
/// refined by bisection.
fn nonpositive_intervals(g: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let xs: Vec<f64> = (0..=SIGN_SAMPLES)
        .map(|i| lo + (hi - lo) * i as f64 / SIGN_SAMPLES as f64)
        .collect();
    let inside: Vec<bool> = xs.iter().map(|&x| g(x) <= 0.0).collect();
    let mut out = Vec::new();
    let mut start = if inside[0] { Some(lo) } else { None };
    for i in 0..SIGN_SAMPLES {
        match (inside[i], inside[i + 1]) {
            (false, true) => start = Some(bisect(&g, xs[i], xs[i + 1])),
            (true, false) => {
                if let Some(s) = start.take() {
                    out.push((s, bisect(&g, xs[i], xs[i + 1])));
                }
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, hi));
    }
    out
}

/// Walk from `from` toward `to` until `g` changes sign, then bisect.
/// Returns `to` when no sign change is met.
fn march_to_sign_change(g: impl Fn(f64) -> f64, from: f64, to: f64) -> f64 {
    let steps = SIGN_SAMPLES;
    let start = g(from) <= 0.0;
    let mut prev = from;
    for i in 1..=steps {
        let x = from + (to - from) * i as f64 / steps as f64;
        if (g(x) <= 0.0) != start {
            return bisect(&g, prev, x);
        }
        prev = x;
    }
    to
}

/// `(1/π) ∫_{V ≤ 0} √(-V) dx` over `well`; a bound state of the well is
/// predicted when the value is at least one half. The well must hold
/// exactly one critical point of `U` in its interior.
pub fn bohr_sommerfeld_action(ctx: &WittenContext, well: Region) -> Result<f64> {
    let interior = critical_points(&ctx.spec, well)?
        .into_iter()
        .filter(|c| c.x() > well.lo && c.x() < well.hi)
        .count();
    if interior != 1 {
        return Err(Error::Precondition(format!(
            "well [{}, {}] holds {interior} interior critical points, expected one",
            well.lo, well.hi
        )));
    }
    let v = |x: f64| ctx.effective_potential1(x).unwrap_or(f64::INFINITY);
    let opts = QuadOptions {
        initial_panels: 20,
        ..QuadOptions::default()
    };
    let mut total = 0.0;
    for (a, b) in nonpositive_intervals(v, well.lo, well.hi) {
        total += integrate_turning(|x| (-v(x)).max(0.0).sqrt(), a, b, opts)?.value;
    }
    Ok(total / std::f64::consts::PI)
}

/// Barrier momentum and well volume shared by the WKB and Arrhenius
/// prefactor `p(0)/Vol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prefactor {
    /// `√V(x_b)`
    pub p0: f64,
    /// Length of the `V ≤ 0` component of the well around its minimum.
    pub vol: f64,
    /// `U(x_b) - U(x_min)`
    pub delta_u: f64,
}

pub fn prefactor(ctx: &WittenContext, partition: &WellPartition) -> Result<Prefactor> {
    let spec = &ctx.spec;
    let ub = spec.value1(partition.barrier_x)?;
    let (ul, ur) = (spec.value1(partition.left_min)?, spec.value1(partition.right_min)?);
    let delta_u = ub - spec.value1(partition.well_min())?;
    if !(delta_u > 0.0) {
        return Err(Error::Precondition(format!("barrier height {delta_u} is not positive")));
    }
    if (ul - ur).abs() > 1e-8 * delta_u {
        return Err(Error::Precondition(format!(
            "wells are not symmetric: U differs by {} at the two minima",
            (ul - ur).abs()
        )));
    }
    let vb = ctx.effective_potential1(partition.barrier_x)?;
    if !(vb > 0.0) {
        return Err(Error::Precondition(
            "barrier not semiclassically resolved; increase β".into(),
        ));
    }
    let v = |x: f64| ctx.effective_potential1(x).unwrap_or(f64::INFINITY);
    let xm = partition.well_min();
    let g = partition.well_region;
    let lo = march_to_sign_change(v, xm, g.lo);
    let hi = march_to_sign_change(v, xm, g.hi);
    Ok(Prefactor {
        p0: vb.sqrt(),
        vol: hi - lo,
        delta_u,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WkbSplitting {
    pub e1: f64,
    /// `∫ √V` across the barrier component of `{V > 0}`.
    pub action: f64,
    /// Endpoints of that component.
    pub barrier: (f64, f64),
    pub prefactor: Prefactor,
}

/// `E₁ ≈ (p(0)/Vol) exp(-∫ √V)` with the integral over the connected
/// component of `{V > 0}` containing the barrier.
pub fn wkb_splitting(ctx: &WittenContext, partition: &WellPartition) -> Result<WkbSplitting> {
    let pre = prefactor(ctx, partition)?;
    let v = |x: f64| ctx.effective_potential1(x).unwrap_or(f64::INFINITY);
    let xb = partition.barrier_x;
    let a = march_to_sign_change(v, xb, partition.left_min);
    let b = march_to_sign_change(v, xb, partition.right_min);
    let opts = QuadOptions {
        initial_panels: 20,
        ..QuadOptions::default()
    };
    let action = integrate_turning(|x| v(x).max(0.0).sqrt(), a, b, opts)?.value;
    Ok(WkbSplitting {
        e1: pre.p0 / pre.vol * (-action).exp(),
        action,
        barrier: (a, b),
        prefactor: pre,
    })
}

/// `E₁ ≈ (p(0)/Vol) exp(-βΔU)`
pub fn arrhenius_rate(ctx: &WittenContext, partition: &WellPartition) -> Result<(f64, Prefactor)> {
    let pre = prefactor(ctx, partition)?;
    Ok((pre.p0 / pre.vol * (-ctx.beta * pre.delta_u).exp(), pre))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyringRate {
    pub rate: f64,
    pub f0: f64,
    pub f1: f64,
}

/// `exp(-β(F₁ - F₀))` with `F₀` the free energy of `well` and `F₁` that of
/// `barrier`. Identical regions are allowed (the rate is one); regions that
/// partially overlap are rejected.
pub fn eyring_rate(ctx: &WittenContext, well: Region, barrier: Region) -> Result<EyringRate> {
    if well != barrier && well.overlaps(&barrier) {
        return Err(Error::Config(format!(
            "well [{}, {}] and barrier [{}, {}] overlap",
            well.lo, well.hi, barrier.lo, barrier.hi
        )));
    }
    let beta = ctx.beta;
    let z0 = log_partition(&ctx.spec, well, beta)?;
    let z1 = if well == barrier {
        z0
    } else {
        log_partition(&ctx.spec, barrier, beta)?
    };
    Ok(EyringRate {
        rate: (z1 - z0).exp(),
        f0: -z0 / beta,
        f1: -z1 / beta,
    })
}

/// Default Eyring regions: the barrier region is the thermal window
/// `U ≥ U(x_b) - 1/β` around the barrier, and the well region is `G` cut
/// off where the window begins.
pub fn eyring_regions(ctx: &WittenContext, partition: &WellPartition) -> Result<(Region, Region)> {
    let spec = &ctx.spec;
    let xb = partition.barrier_x;
    let level = spec.value1(xb)? - 1.0 / ctx.beta;
    let g = |x: f64| level - spec.value1(x).unwrap_or(f64::NEG_INFINITY);
    for m in [partition.left_min, partition.right_min] {
        if spec.value1(m)? >= level {
            return Err(Error::Precondition(
                "thermal window around the barrier reaches a minimum; increase β".into(),
            ));
        }
    }
    let lo = bisect(&g, partition.left_min, xb);
    let hi = bisect(&g, xb, partition.right_min);
    let barrier = Region::new(lo, hi)?;
    let wr = partition.well_region;
    let well = if partition.outward_normal() > 0.0 {
        Region::new(wr.lo, wr.hi.min(lo))?
    } else {
        Region::new(wr.lo.max(hi), wr.hi)?
    };
    Ok((well, barrier))
}

/// `√(βΔU) (a/Vol) e^{-βΔU}` for a barrier modelled as `ΔU e^{-a²x²}`.
pub fn gaussian_barrier_rate(beta: f64, delta_u: f64, inverse_width: f64, vol: f64) -> f64 {
    (beta * delta_u).sqrt() * inverse_width / vol * (-beta * delta_u).exp()
}

/// Every estimator that applies at this β. Spectral inputs (`E₁` from the
/// eigensolver and from the surface formula) are passed in by the caller.
pub fn rate_estimates(
    ctx: &WittenContext,
    partition: &WellPartition,
    e1_numeric: Option<f64>,
    e1_surface: Option<f64>,
) -> Result<RateEstimates> {
    let spec = &ctx.spec;
    let delta_u = spec.value1(partition.barrier_x)? - spec.value1(partition.well_min())?;
    let mut row = RateEstimates {
        beta: ctx.beta,
        e1_numeric,
        e1_surface,
        delta_u,
        ..Default::default()
    };
    if let crate::potential::Family::GaussianBarrierWell { inverse_width, .. } = spec.family() {
        row.gaussian_width = Some(*inverse_width);
    }
    match wkb_splitting(ctx, partition) {
        Ok(w) => {
            row.e1_wkb = Some(w.e1);
            row.e1_arrhenius = Some(w.prefactor.p0 / w.prefactor.vol * (-ctx.beta * w.prefactor.delta_u).exp());
            row.p0 = Some(w.prefactor.p0);
            row.vol = Some(w.prefactor.vol);
        }
        Err(Error::Precondition(_)) => {}
        Err(e) => return Err(e),
    }
    match eyring_regions(ctx, partition) {
        Ok((well, barrier)) => {
            let ey = eyring_rate(ctx, well, barrier)?;
            row.e1_eyring = Some(ey.rate);
            row.f0 = Some(ey.f0);
            row.f1 = Some(ey.f1);
        }
        Err(Error::Precondition(_)) => {}
        Err(e) => return Err(e),
    }
    Ok(row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_operator::{assemble_schrodinger, build_grid};
    use crate::potential::PotentialSpec;
    use crate::spectrum::lowest_eigenpairs;

    fn quartic(beta: f64) -> WittenContext {
        WittenContext::new(PotentialSpec::quartic_double_well(1.0, 1.0).unwrap(), beta).unwrap()
    }

    fn partition() -> WellPartition {
        WellPartition::auto(
            &PotentialSpec::quartic_double_well(1.0, 1.0).unwrap(),
            Region::new(-8.0, 8.0).unwrap(),
        )
        .unwrap()
    }

    fn numeric_e1(beta: f64) -> f64 {
        let grid = build_grid(-8.0, 8.0, 1599, 1).unwrap();
        lowest_eigenpairs(&assemble_schrodinger(&quartic(beta), &grid).unwrap(), 2)
            .unwrap()
            .eigenvalues[1]
    }

    #[test]
    fn bohr_sommerfeld_quadratic_is_one_half() {
        for beta in [1.0, 8.0, 32.0] {
            let ctx = WittenContext::new(PotentialSpec::quadratic(1.0, 1).unwrap(), beta).unwrap();
            let s = bohr_sommerfeld_action(&ctx, Region::new(-3.0, 3.0).unwrap()).unwrap();
            assert!((s - 0.5).abs() < 1e-9, "{beta}: {s}");
        }
    }

    #[test]
    fn bohr_sommerfeld_zero_at_maximum() {
        let s = bohr_sommerfeld_action(&quartic(8.0), Region::new(-0.3, 0.3).unwrap()).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn bohr_sommerfeld_quartic_well_against_trapezoid() {
        let ctx = quartic(8.0);
        let s = bohr_sommerfeld_action(&ctx, Region::new(0.0, 2.0).unwrap()).unwrap();
        let n = 100_000;
        let h = 2.0 / n as f64;
        let brute: f64 = (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * (-ctx.effective_potential1(i as f64 * h).unwrap()).max(0.0).sqrt()
            })
            .sum::<f64>()
            * h
            / std::f64::consts::PI;
        // Anharmonic corrections keep the action just below the harmonic 1/2.
        assert!((s - 0.5).abs() < 0.015, "{s}");
        assert!((s - brute).abs() < 1e-6, "{s} vs {brute}");
    }

    #[test]
    fn bohr_sommerfeld_grows_with_beta() {
        let mut prev = 0.0;
        for beta in [2.0, 4.0, 8.0, 16.0] {
            let s = bohr_sommerfeld_action(&quartic(beta), Region::new(0.0, 2.0).unwrap()).unwrap();
            assert!(s >= prev, "{beta}: {s} < {prev}");
            prev = s;
        }
    }

    #[test]
    fn bohr_sommerfeld_needs_one_critical_point() {
        let err = bohr_sommerfeld_action(&quartic(8.0), Region::new(-2.0, 2.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn wkb_within_ten_percent_in_log() {
        let w = wkb_splitting(&quartic(10.0), &partition()).unwrap();
        let e1 = numeric_e1(10.0);
        assert!((w.e1.ln() - e1.ln()).abs() <= 0.1 * e1.ln().abs(), "{} vs {e1}", w.e1);
        assert!(w.barrier.0 < 0.0 && w.barrier.1 > 0.0);
    }

    #[test]
    fn wkb_exponent_roughly_doubles_with_beta() {
        let a = wkb_splitting(&quartic(10.0), &partition()).unwrap().action;
        let b = wkb_splitting(&quartic(20.0), &partition()).unwrap().action;
        assert!((b / a - 2.0).abs() < 0.1, "{a} {b}");
    }

    #[test]
    fn asymmetric_wells_rejected() {
        let xs: Vec<f64> = (0..=800).map(|i| -4.0 + 0.01 * i as f64).collect();
        let us: Vec<f64> = xs.iter().map(|x| (x * x - 1.0f64).powi(2) + 0.05 * x).collect();
        let spec = PotentialSpec::tabulated(xs, us).unwrap();
        let p = WellPartition::auto(&spec, Region::new(-3.0, 3.0).unwrap()).unwrap();
        let ctx = WittenContext::new(spec, 10.0).unwrap();
        assert!(matches!(wkb_splitting(&ctx, &p), Err(Error::Precondition(_))));
        assert!(matches!(arrhenius_rate(&ctx, &p), Err(Error::Precondition(_))));
    }

    #[test]
    fn unresolved_barrier_rejected() {
        // A cut placed on the flank of a well, where V < 0.
        let p = WellPartition::new(0.9, -1.0, 1.0, Region::new(-8.0, 0.9).unwrap()).unwrap();
        let err = wkb_splitting(&quartic(10.0), &p).unwrap_err();
        assert!(err.to_string().contains("increase β"), "{err}");
    }

    #[test]
    fn arrhenius_is_ratio_of_wkb() {
        let p = partition();
        let mut prev = f64::INFINITY;
        for beta in [6.0, 10.0, 14.0] {
            let ctx = quartic(beta);
            let w = wkb_splitting(&ctx, &p).unwrap();
            let (arr, pre) = arrhenius_rate(&ctx, &p).unwrap();
            assert!((pre.delta_u - 1.0).abs() < 1e-12);
            let r = (arr / w.e1).ln();
            assert!(r > 0.0 && r < prev, "{beta}: {r}");
            assert!(r / beta < 0.1);
            prev = r;
        }
    }

    #[test]
    fn arrhenius_doubling_beta() {
        let p = partition();
        let (a, _) = arrhenius_rate(&quartic(6.0), &p).unwrap();
        let (b, _) = arrhenius_rate(&quartic(12.0), &p).unwrap();
        let drift = (b.ln() - a.ln()) + 6.0;
        assert!(drift.abs() <= 1.5 * std::f64::consts::LN_2, "{drift}");
    }

    #[test]
    fn eyring_identical_regions_give_one() {
        let r = Region::new(0.0, 2.0).unwrap();
        let ey = eyring_rate(&quartic(5.0), r, r).unwrap();
        assert_eq!(ey.rate, 1.0);
    }

    #[test]
    fn eyring_rejects_partial_overlap() {
        let err = eyring_rate(
            &quartic(5.0),
            Region::new(-2.0, 0.5).unwrap(),
            Region::new(0.0, 1.0).unwrap(),
        );
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn eyring_shift_invariant() {
        let xs: Vec<f64> = (0..=600).map(|i| -3.0 + 0.01 * i as f64).collect();
        let base: Vec<f64> = xs.iter().map(|x| (x * x - 1.0f64).powi(2)).collect();
        let shifted: Vec<f64> = base.iter().map(|u| u + 7.5).collect();
        let well = Region::new(-2.0, -0.3).unwrap();
        let barrier = Region::new(-0.3, 0.3).unwrap();
        let a = eyring_rate(
            &WittenContext::new(PotentialSpec::tabulated(xs.clone(), base).unwrap(), 10.0).unwrap(),
            well,
            barrier,
        )
        .unwrap();
        let b = eyring_rate(
            &WittenContext::new(PotentialSpec::tabulated(xs, shifted).unwrap(), 10.0).unwrap(),
            well,
            barrier,
        )
        .unwrap();
        assert!((a.rate / b.rate - 1.0).abs() < 1e-10);
        assert!((b.f0 - a.f0 - 7.5).abs() < 1e-10);
    }

    #[test]
    fn default_regions_touch_at_window_edge() {
        let ctx = quartic(10.0);
        let (well, barrier) = eyring_regions(&ctx, &partition()).unwrap();
        assert_eq!(well.hi, barrier.lo);
        let u = |x| ctx.spec.value1(x).unwrap();
        assert!((u(barrier.lo) - 0.9).abs() < 1e-10 && (u(barrier.hi) - 0.9).abs() < 1e-10);
    }

    #[test]
    fn gaussian_barrier_closed_form() {
        // The two forms differ by a prefactor of order a²βΔU, so their logs
        // agree to 5% only once βΔU is large.
        let spec = PotentialSpec::gaussian_barrier_well(10.0, 1.0, 0.5).unwrap();
        let p = WellPartition::auto(&spec, Region::new(-10.0, 10.0).unwrap()).unwrap();
        let ctx = WittenContext::new(spec, 10.0).unwrap();
        let (well, barrier) = eyring_regions(&ctx, &p).unwrap();
        let ey = eyring_rate(&ctx, well, barrier).unwrap().rate;
        let pre = prefactor(&ctx, &p).unwrap();
        let closed = gaussian_barrier_rate(10.0, pre.delta_u, 1.0, pre.vol);
        let rel = (ey.ln() - closed.ln()).abs() / closed.ln().abs();
        assert!(rel <= 0.05, "{ey} vs {closed}: {rel}");
    }

    #[test]
    fn eyring_quartic_log_error_is_pinned() {
        // Measured: 0.201 of βΔU at β = 10 with the thermal-window regions.
        let ctx = quartic(10.0);
        let (well, barrier) = eyring_regions(&ctx, &partition()).unwrap();
        let ey = eyring_rate(&ctx, well, barrier).unwrap().rate;
        let e1 = numeric_e1(10.0);
        let err = (ey.ln() - e1.ln()).abs() / 10.0;
        assert!((err - 0.201).abs() < 0.005, "{err}");
    }

    #[test]
    fn estimates_row_populated() {
        let row = rate_estimates(&quartic(10.0), &partition(), Some(1.0), None).unwrap();
        for v in [row.e1_wkb, row.e1_arrhenius, row.e1_eyring, row.p0, row.vol] {
            assert!(v.unwrap() > 0.0);
        }
        assert!(row.gaussian_width.is_none());
        assert_eq!(row.delta_u, 1.0);
    }
}
