//! Shared numerical kernel: adaptive Gauss–Kronrod quadrature on proper and
//! improper intervals, bracketing root finding for strictly decreasing
//! functions, and the endpoint-divergence heuristic used when classifying
//! measures that have no closed form.
//!
//! Improper and power-law-singular endpoints are removed by substitution
//! before the adaptive rule sees the integrand:
//!
//! * `[0, b]` uses `x = b·exp(1 - 1/u)`, `u ∈ (0, 1]`;
//! * `[a, ∞)` with `a > 0` uses `x = a·exp((1 - u)/u)`, `u ∈ (0, 1]`;
//! * `[a, b]` with `b/a > 16` is integrated in `ln x`.
//!
//! Under these maps an integrand behaving like `x^q` at the endpoint becomes
//! exponentially flat in `u`, so the 15-point rule converges quickly.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::RwLock;

use crate::error::{Error, Result};

/// Tolerances and limits shared by every integral in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub abs_tol: f64,
    pub max_depth: u32,
    pub max_intervals: usize,
}

impl Settings {
    pub const DEFAULT: Settings = Settings {
        abs_tol: 1e-10,
        max_depth: 60,
        max_intervals: 4000,
    };
}

impl Default for Settings {
    fn default() -> Self {
        Settings::DEFAULT
    }
}

static SETTINGS: RwLock<Settings> = RwLock::new(Settings::DEFAULT);

/// Current global numerical settings.
pub fn settings() -> Settings {
    *SETTINGS.read().unwrap_or_else(|e| e.into_inner())
}

/// Replace the global numerical settings. Intended to be called once at
/// start-up (the CLI does this from its flags).
pub fn set_settings(s: Settings) {
    *SETTINGS.write().unwrap_or_else(|e| e.into_inner()) = s;
}

/// Value and error estimate of an integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

// 15-point Kronrod extension of the 7-point Gauss rule.
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
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = kronrod * half;
    let res_abs = abs_sum * half.abs();
    let res_asc = asc * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    if !result.is_finite() {
        err = f64::INFINITY;
    }
    (result, err)
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    depth: u32,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive bisection on a finite interval.
fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64, cfg: &Settings) -> Result<Quadrature> {
    let (value, error) = gauss_kronrod(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error, depth: 0 });
    let mut frozen_value = 0.0;
    let mut frozen_error = 0.0;
    let mut total = value;
    let mut total_err = error;
    let mut count = 1usize;
    loop {
        let tol = abs_tol.max(1e-14 * total.abs());
        if total_err <= tol {
            break;
        }
        let Some(seg) = heap.pop() else {
            break;
        };
        if seg.depth >= cfg.max_depth || count >= cfg.max_intervals {
            frozen_value += seg.value;
            frozen_error += seg.error;
            if count >= cfg.max_intervals {
                // drain the rest; nothing can be refined any more
                for s in heap.drain() {
                    frozen_value += s.value;
                    frozen_error += s.error;
                }
            }
            continue;
        }
        let mid = 0.5 * (seg.a + seg.b);
        let (v1, e1) = gauss_kronrod(f, seg.a, mid);
        let (v2, e2) = gauss_kronrod(f, mid, seg.b);
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        count += 1;
        heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1, depth: seg.depth + 1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2, depth: seg.depth + 1 });
        // re-sum periodically to keep the running totals honest
        if count.is_multiple_of(64) {
            total = frozen_value + heap.iter().map(|s| s.value).sum::<f64>();
            total_err = frozen_error + heap.iter().map(|s| s.error).sum::<f64>();
        }
    }
    let value = frozen_value + heap.iter().map(|s| s.value).sum::<f64>();
    let error = frozen_error + heap.iter().map(|s| s.error).sum::<f64>();
    if !value.is_finite() || !error.is_finite() || error > abs_tol.max(1e-14 * value.abs()) {
        return Err(Error::Quadrature { partial: value, error });
    }
    Ok(Quadrature { value, error })
}

/// Product `f(x)·jac` for a mapped integrand.
///
/// Abscissae that under- or overflow are skipped without calling `f`, and
/// abscissae within a few hundred binades of that limit carry no usable
/// information, so non-finite products there are zeroed. Elsewhere an
/// infinite value is kept, since it signals a genuinely divergent integrand.
#[inline]
fn mapped<F: Fn(f64) -> f64>(f: &F, x: f64, jac: f64) -> f64 {
    if x == 0.0 || !x.is_finite() || !jac.is_finite() || jac == 0.0 {
        return 0.0;
    }
    let v = f(x) * jac;
    if v.is_nan() || (v.is_infinite() && !(1e-150..=1e150).contains(&x)) {
        0.0
    } else {
        v
    }
}

/// Distance in log-units from the finite limit at which the integrand of an
/// improper integral is probed for non-negligible remaining mass.
const TRUNCATION_PROBE: f64 = 400.0;

/// Account for the part of an improper integral lost where the abscissa
/// under- or overflows. The mapped rule sees the integrand out to about 700
/// log-units; beyond the probe `x_end` the loss is bounded by
/// `TRUNCATION_PROBE·|x_end·f(x_end)|` for log-scale integrands that decay at
/// least linearly.
fn with_truncation<F: Fn(f64) -> f64>(inner: Result<Quadrature>, f: &F, x_end: f64, abs_tol: f64) -> Result<Quadrature> {
    let q = inner?;
    let tail = TRUNCATION_PROBE * (x_end * f(x_end)).abs();
    // 0·∞ from an underflowed factor: the integrand has no usable value there
    let tail = if tail.is_nan() { 0.0 } else { tail };
    let error = q.error + tail;
    if error > abs_tol.max(1e-14 * q.value.abs()) {
        return Err(Error::Quadrature { partial: q.value, error });
    }
    Ok(Quadrature { value: q.value, error })
}

/// Integrate `f` over `[a, b]` to absolute tolerance `abs_tol`.
///
/// `b` may be `f64::INFINITY`. A lower limit of exactly zero is treated as a
/// possibly singular endpoint. Fails with [`Error::Quadrature`] (carrying the
/// partial value) when the depth or interval limits are exhausted.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<Quadrature> {
    let cfg = settings();
    integrate_with(&f, a, b, abs_tol, &cfg)
}

/// [`integrate`] with the global absolute tolerance.
pub fn quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    let cfg = settings();
    integrate_with(&f, a, b, cfg.abs_tol, &cfg).map(|q| q.value)
}

pub fn integrate_with<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    cfg: &Settings,
) -> Result<Quadrature> {
    if a.is_nan() || b.is_nan() || a.is_infinite() {
        return Err(Error::Domain(format!("bad integration limits [{a}, {b}]")));
    }
    if a > b {
        return Err(Error::Domain(format!("lower limit {a} exceeds upper limit {b}")));
    }
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0 });
    }
    if b.is_infinite() {
        if a > 0.0 {
            let g = |u: f64| {
                let x = a * ((1.0 - u) / u).exp();
                mapped(f, x, x / (u * u))
            };
            let x_end = a * TRUNCATION_PROBE.exp();
            return with_truncation(adaptive(&g, 0.0, 1.0, abs_tol, cfg), f, x_end, abs_tol);
        }
        let split = 1.0_f64.max(a + 1.0);
        let left = integrate_with(f, a, split, 0.5 * abs_tol, cfg)?;
        let right = integrate_with(f, split, b, 0.5 * abs_tol, cfg)?;
        return Ok(Quadrature {
            value: left.value + right.value,
            error: left.error + right.error,
        });
    }
    if a == 0.0 {
        let g = |u: f64| {
            let x = b * (1.0 - 1.0 / u).exp();
            mapped(f, x, x / (u * u))
        };
        let x_end = b * (-TRUNCATION_PROBE).exp();
        return with_truncation(adaptive(&g, 0.0, 1.0, abs_tol, cfg), f, x_end, abs_tol);
    }
    if a > 0.0 && b / a > 16.0 {
        let g = |s: f64| {
            let x = s.exp();
            mapped(&f, x, x)
        };
        return adaptive(&g, a.ln(), b.ln(), abs_tol, cfg);
    }
    adaptive(f, a, b, abs_tol, cfg)
}

/// Find `x > 0` with `g(x) = target` for a continuous, strictly decreasing `g`.
///
/// The bracket is grown from `hint` by powers of two (up to 200 doublings in
/// each direction) and then refined with Brent's method to full precision.
pub fn solve_decreasing<G: Fn(f64) -> f64>(g: G, target: f64, hint: f64) -> Result<f64> {
    const MAX_DOUBLINGS: u32 = 200;
    let start = if hint.is_finite() && hint > 0.0 { hint } else { 1.0 };
    let h = |x: f64| g(x) - target;

    let mut lo = start;
    let mut hlo = h(lo);
    let mut hi = start;
    let mut hhi = hlo;
    if hlo.is_nan() {
        return Err(Error::Domain(format!("function is NaN at {start}")));
    }
    if hlo == 0.0 {
        return Ok(start);
    }
    if hlo < 0.0 {
        // g(start) below target: move left
        let mut n = 0;
        while hlo < 0.0 {
            if n == MAX_DOUBLINGS {
                return Err(Error::BracketNotFound { doublings: n });
            }
            hi = lo;
            hhi = hlo;
            lo *= 0.5;
            hlo = h(lo);
            n += 1;
        }
    } else {
        let mut n = 0;
        while hhi > 0.0 {
            if n == MAX_DOUBLINGS {
                return Err(Error::BracketNotFound { doublings: n });
            }
            lo = hi;
            hlo = hhi;
            hi *= 2.0;
            hhi = h(hi);
            n += 1;
        }
    }
    if hlo.is_nan() || hhi.is_nan() {
        return Err(Error::Domain("function is NaN inside the bracket".into()));
    }
    if hlo == 0.0 {
        return Ok(lo);
    }
    if hhi == 0.0 {
        return Ok(hi);
    }
    Ok(brent(&h, lo, hi, hlo, hhi))
}

/// Brent's method on a sign-changing bracket `[a, b]`.
fn brent<H: Fn(f64) -> f64>(h: &H, a0: f64, b0: f64, fa0: f64, fb0: f64) -> f64 {
    let (mut a, mut b, mut fa, mut fb) = (a0, b0, fa0, fb0);
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..300 {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + f64::MIN_POSITIVE;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return b;
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = h(b);
    }
    b
}

/// Verdict of the partial-integral divergence heuristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Divergence {
    Converges(f64),
    Diverges,
    Inconclusive,
}

/// Classify a sequence of partial integrals taken on a geometrically refined
/// endpoint grid.
///
/// Diverges when any partial is infinite or the last three successive ratios
/// are all at least 1.5; converges when the last increment is below
/// `1e-10 · total`; otherwise inconclusive.
pub fn detect_divergence(partials: &[f64]) -> Divergence {
    if partials.iter().any(|p| p.is_infinite() || p.is_nan()) {
        return Divergence::Diverges;
    }
    let n = partials.len();
    if n >= 4 {
        let growing = partials[n - 4..]
            .windows(2)
            .all(|w| w[0] > 0.0 && w[1] >= 1.5 * w[0]);
        if growing {
            return Divergence::Diverges;
        }
    }
    if n >= 2 {
        let last = partials[n - 1];
        let inc = (last - partials[n - 2]).abs();
        if inc <= 1e-10 * last.abs() {
            return Divergence::Converges(last);
        }
    }
    Divergence::Inconclusive
}

/// Largest grid level whose endpoint `exp(±2^k)` stays representable.
const GRID_LEVELS: u32 = 9;

/// Partial integrals `∫_{b·e^{-2^k}}^{b} f`, `k = 0..=9`, computed in the
/// variable `s = ln(b/x)`.
pub fn partials_near_zero<F: Fn(f64) -> f64>(f: F, b: f64) -> Vec<f64> {
    let g = |s: f64| {
        let x = b * (-s).exp();
        mapped(&f, x, x)
    };
    partials_on_grid(&g)
}

/// Partial integrals `∫_{a}^{a·e^{2^k}} f`, `k = 0..=9`, computed in the
/// variable `s = ln(x/a)`.
pub fn partials_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64) -> Vec<f64> {
    let g = |s: f64| {
        let x = a * s.exp();
        mapped(&f, x, x)
    };
    partials_on_grid(&g)
}

fn partials_on_grid<G: Fn(f64) -> f64>(g: &G) -> Vec<f64> {
    let cfg = settings();
    let mut out = Vec::with_capacity(GRID_LEVELS as usize + 1);
    let mut acc = 0.0;
    let mut lo = 0.0;
    for k in 0..=GRID_LEVELS {
        let hi = f64::from(1u32 << k);
        let piece = match adaptive(g, lo, hi, cfg.abs_tol, &cfg) {
            Ok(q) => q.value,
            Err(Error::Quadrature { partial, .. }) if partial.is_finite() => partial,
            Err(_) => f64::INFINITY,
        };
        acc += piece;
        out.push(acc);
        if !acc.is_finite() {
            break;
        }
        lo = hi;
    }
    out
}
