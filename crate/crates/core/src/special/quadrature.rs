//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The interval is split at its midpoint and each half is mapped through
//! `z = lo + t^p` or `z = hi - t^p`, which turns endpoint singularities of
//! the form `(z - lo)^(1/p - 1)` into smooth integrands.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::SpecialError;

/// Maximum number of bisections applied to any single panel.
pub const MAX_DEPTH: u32 = 40;

const MAX_PANELS: usize = 20_000;
const DEFAULT_POWER: u32 = 2;

// Kronrod abscissae and weights from QUADPACK's qk15; the odd-indexed
// abscissae are the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// `∫_lo^hi f(z) dz` with estimated absolute error at most `tol`.
///
/// Integrable singularities like `z^(-1/2)` at either endpoint are allowed;
/// `f` is never evaluated exactly at `lo` or `hi`.
pub fn integrate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64, SpecialError> {
    integrate_with_power(f, lo, hi, tol, DEFAULT_POWER)
}

/// As [`integrate`], with substitution power `p`. Larger powers handle
/// stronger endpoint singularities: `(z - lo)^s` becomes smooth for
/// `s > 1/p - 1`.
pub fn integrate_with_power(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
    power: u32,
) -> Result<f64, SpecialError> {
    if !(lo.is_finite() && hi.is_finite()) || !(tol > 0.0) || power == 0 {
        return Err(SpecialError::Domain {
            func: "integrate",
            detail: format!("need finite limits, tol > 0 and power >= 1, got [{lo}, {hi}], tol {tol}, power {power}"),
        });
    }
    if lo == hi {
        return Ok(0.0);
    }
    if lo > hi {
        return integrate_with_power(f, hi, lo, tol, power).map(|v| -v);
    }
    let p = power as i32;
    let pf = power as f64;
    let half = 0.5 * (hi - lo);
    let t_max = half.powf(1.0 / pf);

    let left = |t: f64| {
        let z = lo + t.powi(p);
        pf * t.powi(p - 1) * f(z)
    };
    let right = |t: f64| {
        let z = hi - t.powi(p);
        pf * t.powi(p - 1) * f(z)
    };
    // Both halves share one panel budget so the tolerance is global.
    let g = |side: Side, t: f64| match side {
        Side::Left => left(t),
        Side::Right => right(t),
    };
    adaptive(&g, t_max, tol)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Side {
    Left,
    Right,
}

#[derive(Debug)]
struct Panel {
    side: Side,
    a: f64,
    b: f64,
    depth: u32,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
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

fn adaptive(g: &impl Fn(Side, f64) -> f64, t_max: f64, tol: f64) -> Result<f64, SpecialError> {
    let mut heap = BinaryHeap::new();
    let mut frozen = (0.0, 0.0);
    for side in [Side::Left, Side::Right] {
        heap.push(panel(g, side, 0.0, t_max, 0)?);
    }
    let mut running_error: f64 = heap.iter().map(|p| p.error).sum();
    loop {
        if running_error <= tol {
            // The running total drifts; confirm with an exact re-summation.
            let (value, error) = totals(&heap, frozen);
            if error <= tol {
                return Ok(value);
            }
            running_error = error;
        }
        let worst = match heap.pop() {
            Some(p) if heap.len() + 2 <= MAX_PANELS => p,
            _ => {
                let (estimate, error) = totals(&heap, frozen);
                return Err(SpecialError::QuadratureTolerance { estimate, error, tol });
            }
        };
        if worst.depth >= MAX_DEPTH {
            frozen.0 += worst.value;
            frozen.1 += worst.error;
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let l = panel(g, worst.side, worst.a, mid, worst.depth + 1)?;
        let r = panel(g, worst.side, mid, worst.b, worst.depth + 1)?;
        running_error += l.error + r.error - worst.error;
        heap.push(l);
        heap.push(r);
    }
}

fn totals(heap: &BinaryHeap<Panel>, frozen: (f64, f64)) -> (f64, f64) {
    heap.iter().fold(frozen, |(v, e), p| (v + p.value, e + p.error))
}

fn panel(g: &impl Fn(Side, f64) -> f64, side: Side, a: f64, b: f64, depth: u32) -> Result<Panel, SpecialError> {
    let (value, error) = gk15(|t| g(side, t), a, b)?;
    Ok(Panel {
        side,
        a,
        b,
        depth,
        value,
        error,
    })
}

/// One 15-point Kronrod panel with QUADPACK's error heuristic.
fn gk15(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<(f64, f64), SpecialError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(SpecialError::NonFiniteIntegrand(x))
        }
    };

    let fc = eval(center)?;
    let mut res_k = WGK[7] * fc;
    let mut res_g = WG[3] * fc;
    let mut res_abs = res_k.abs();
    let mut pairs = [(0.0, 0.0); 7];
    for (j, pair) in pairs.iter_mut().enumerate() {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        *pair = (f1, f2);
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for (j, (f1, f2)) in pairs.iter().enumerate() {
        res_asc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }

    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok((value, error))
}
