//! Adaptive Gauss–Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the odd-indexed Kronrod abscissae XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Uniform panels the interval is split into before adapting, so that
    /// narrow peaks are not missed by the first rule evaluation.
    pub initial_panels: usize,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            initial_panels: 200,
            max_panels: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Integrate `f` over `[a, b]` to the requested tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let panels = opts.initial_panels.max(1);
    let width = (hi - lo) / panels as f64;
    let mut heap = BinaryHeap::with_capacity(panels * 2);
    for i in 0..panels {
        let pa = lo + width * i as f64;
        let pb = if i + 1 == panels {
            hi
        } else {
            lo + width * (i + 1) as f64
        };
        let (value, error) = gk15(&f, pa, pb);
        heap.push(Panel {
            a: pa,
            b: pb,
            value,
            error,
        });
    }
    let mut total: f64 = heap.iter().map(|p| p.value).sum();
    let mut err: f64 = heap.iter().map(|p| p.error).sum();
    loop {
        if !total.is_finite() {
            return Err(Error::Numeric("non-finite integrand in quadrature".into()));
        }
        let done = err <= opts.abs_tol.max(opts.rel_tol * total.abs()) || err == 0.0;
        if done || heap.len() >= opts.max_panels {
            // Fixed summation order (sorted by interval) keeps results reproducible.
            let mut panels: Vec<Panel> = heap.into_vec();
            panels.sort_by(|p, q| p.a.total_cmp(&q.a));
            let value: f64 = panels.iter().map(|p| p.value).sum();
            let error: f64 = panels.iter().map(|p| p.error).sum();
            return Ok(QuadResult {
                value: sign * value,
                error,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel width at floating-point resolution; accept what we have.
            err -= worst.error;
            heap.push(Panel { error: 0.0, ..worst });
            continue;
        }
        let (lv, le) = gk15(&f, worst.a, mid);
        let (rv, re) = gk15(&f, mid, worst.b);
        total += lv + rv - worst.value;
        err += le + re - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: lv,
            error: le,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: rv,
            error: re,
        });
    }
}

/// Integrate a function with square-root behaviour at both endpoints
/// (turning-point integrals) using the substitution `x = m + r·sin(t)`,
/// which turns `√(x - a)` endpoint factors into smooth ones.
pub fn integrate_turning<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    let m = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let g = |t: f64| f(m + r * t.sin()) * r * t.cos();
    integrate(g, -std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2, opts)
}

/// Natural log of `∫_a^b exp(g(x)) dx`, evaluated with the maximum of `g`
/// over a sampling of the interval factored out.
pub fn log_integral_exp<F: Fn(f64) -> f64>(g: F, a: f64, b: f64, opts: QuadOptions) -> Result<f64> {
    let samples = 4 * opts.initial_panels.max(1);
    let shift = (0..=samples)
        .map(|i| g(a + (b - a) * i as f64 / samples as f64))
        .fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return Err(Error::Numeric("exponent not finite on integration interval".into()));
    }
    let res = integrate(|x| (g(x) - shift).exp(), a, b, opts)?;
    if res.value <= 0.0 {
        return Err(Error::Numeric("integral of exponential vanished".into()));
    }
    Ok(shift + res.value.ln())
}
