//! Exact simulation of the MRCA-age process as a piecewise-deterministic
//! Markov process.
//!
//! From a state `x > 0` the next peak is drawn by inverting the survival
//! function `L ↦ M(L)/M(x)`, and the trough after it by inverting the
//! jump-target distribution function `y ↦ exp(−∫ᵧᴸ M)`. The state zero (and,
//! as a guard against accumulating jumps, any state below the resolution
//! `t₀`) is handled with exact one-step kernel draws of length `t₀`.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::kernels::{self, exp_guarded};
use crate::measure::LifetimeMeasure;

/// Default cap on the number of simulated events per path.
pub const DEFAULT_EVENT_CAP: u64 = 10_000_000;

/// Identifies an independent random stream: identical `(seed, stream)`
/// pairs reproduce identical draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream }
    }

    /// A ChaCha8 generator keyed by `seed` on stream `stream`.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Run `f` on streams `0..n` of `seed` in parallel; results are ordered by
/// stream id regardless of scheduling.
pub fn fan_out<T, F>(seed: u64, n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync + Send,
{
    (0..n)
        .into_par_iter()
        .map(|stream| f(stream, &mut RngStream::new(seed, stream).rng()))
        .collect()
}

/// Uniform draw on the open interval `(0, 1)`.
#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

/// Peak reached from `x > 0` when the survival uniform is `u`:
/// the `L` with `M(L) = u·M(x)`.
pub fn next_peak_from_uniform(meas: &LifetimeMeasure, x: f64, u: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain(format!("next peak needs x > 0, got {x}")));
    }
    let l = meas.inverse_ln_tail(u.ln() + meas.ln_tail(x))?;
    // guard the rounding of the inversion against the drift constraint
    Ok(l.max(x))
}

/// Draw the peak `L ≥ x` ending the current slope-1 stretch from `x`.
pub fn next_peak<R: Rng + ?Sized>(meas: &LifetimeMeasure, x: f64, rng: &mut R) -> Result<f64> {
    next_peak_from_uniform(meas, x, uniform(rng))
}

/// Trough reached from peak `l` when the target uniform is `v`: zero when
/// `v ≤ exp(−∫₀ᴸ M)`, otherwise the `y` with `∫ᵧᴸ M = −ln v`.
pub fn next_trough_from_uniform(meas: &LifetimeMeasure, l: f64, v: f64) -> Result<f64> {
    if !(l > 0.0) {
        return Err(domain(format!("next trough needs L > 0, got {l}")));
    }
    let mass = meas.mass_near_zero(l)?;
    if mass.is_finite() && v <= exp_guarded(-mass) {
        return Ok(0.0);
    }
    match meas.inverse_tail_between(l, -v.ln()) {
        Ok(y) => Ok(y.min(l)),
        Err(Error::NoSolution { .. }) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Draw the post-jump value `R ∈ [0, L)` from peak `l`.
pub fn next_trough<R: Rng + ?Sized>(meas: &LifetimeMeasure, l: f64, rng: &mut R) -> Result<f64> {
    next_trough_from_uniform(meas, l, uniform(rng))
}

/// Draw `A_t` given `A_0 = x` from the exact one-step kernel: `x + t` with
/// probability `M(x+t)/M(x)`, otherwise a jump target from `x + t`.
pub fn kernel_step<R: Rng + ?Sized>(meas: &LifetimeMeasure, x: f64, t: f64, rng: &mut R) -> Result<f64> {
    let atom = kernels::transition_atom(meas, x, t)?;
    if uniform(rng) < atom {
        Ok(x + t)
    } else {
        next_trough(meas, x + t, rng)
    }
}

/// One downward jump: time `T`, peak `L = A(T−)`, trough `R = A(T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub time: f64,
    pub peak: f64,
    pub trough: f64,
    /// Resolved by a `t₀` kernel step rather than an exact draw: the time is
    /// only known to within `t₀`.
    pub coarse: bool,
}

/// A saw-tooth trajectory of `A` on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub x0: f64,
    pub horizon: f64,
    /// Resolution used for the state zero and states below it.
    pub t0: f64,
    pub jumps: Vec<Jump>,
    /// Intervals `[start, end)` on which `A = 0`, at resolution `t₀`.
    pub zero_intervals: Vec<(f64, f64)>,
}

impl PathSample {
    /// `A(t)` for `t ∈ [0, horizon]` (right-continuous).
    pub fn value_at(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(domain(format!("t = {t} outside [0, {}]", self.horizon)));
        }
        let k = self.jumps.partition_point(|j| j.time <= t);
        let z = self.zero_intervals.partition_point(|iv| iv.0 <= t);
        if z > 0 {
            let (start, end) = self.zero_intervals[z - 1];
            if t < end {
                return Ok(0.0);
            }
            if k == 0 || self.jumps[k - 1].time < end {
                debug_assert!(start <= end);
                return Ok(t - end);
            }
        }
        Ok(match k {
            0 => self.x0 + t,
            _ => {
                let j = &self.jumps[k - 1];
                j.trough + (t - j.time)
            }
        })
    }

    /// Number of jumps in `[a, b]`.
    pub fn jumps_in(&self, a: f64, b: f64) -> usize {
        let lo = self.jumps.partition_point(|j| j.time < a);
        let hi = self.jumps.partition_point(|j| j.time <= b);
        hi.saturating_sub(lo)
    }

    /// `A` at the horizon.
    pub fn final_value(&self) -> f64 {
        self.value_at(self.horizon).unwrap_or(f64::NAN)
    }
}

/// Options for [`simulate_path`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOptions {
    /// Zero-state resolution; `None` selects `1e-6 · horizon`.
    pub t0: Option<f64>,
    pub event_cap: u64,
}

impl Default for PathOptions {
    fn default() -> Self {
        PathOptions { t0: None, event_cap: DEFAULT_EVENT_CAP }
    }
}

/// Simulate `A` on `[0, horizon]` from `A_0 = x0`.
///
/// Above `t₀` the path is exact. At zero, and below `t₀`, time advances in
/// exact kernel steps of length `t₀`; a zero sojourn ending with value `y`
/// at the end of a step is recorded as leaving zero `y` before it, and any
/// other step that jumps is recorded as a coarse jump at the step's end.
pub fn simulate_path<R: Rng + ?Sized>(
    meas: &LifetimeMeasure,
    x0: f64,
    horizon: f64,
    opts: PathOptions,
    rng: &mut R,
) -> Result<PathSample> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(domain(format!("horizon must be positive and finite, got {horizon}")));
    }
    if !(x0 >= 0.0 && x0.is_finite()) {
        return Err(domain(format!("initial state must be nonnegative, got {x0}")));
    }
    let t0 = opts.t0.unwrap_or(1e-6 * horizon);
    if !(t0 > 0.0) {
        return Err(domain(format!("zero resolution must be positive, got {t0}")));
    }
    let mut path = PathSample { x0, horizon, t0, jumps: Vec::new(), zero_intervals: Vec::new() };
    run_segment(meas, &mut path, 0.0, x0, opts.event_cap, rng)?;
    Ok(path)
}

/// Continue `path` from its current horizon to `new_horizon`.
///
/// The continuation restarts the survival draw from the state at the old
/// horizon, which is exact by the Markov property; a path extended in fixed
/// steps is therefore reproducible regardless of how far it is taken.
pub fn extend_path<R: Rng + ?Sized>(
    meas: &LifetimeMeasure,
    path: &mut PathSample,
    new_horizon: f64,
    event_cap: u64,
    rng: &mut R,
) -> Result<()> {
    if !(new_horizon > path.horizon && new_horizon.is_finite()) {
        return Err(domain(format!("new horizon {new_horizon} must exceed {}", path.horizon)));
    }
    let start = path.horizon;
    let x = path.value_at(start)?;
    path.horizon = new_horizon;
    run_segment(meas, path, start, x, event_cap, rng)
}

/// Append the events of `path` on `[start, path.horizon]` from state `x`.
fn run_segment<R: Rng + ?Sized>(
    meas: &LifetimeMeasure,
    path: &mut PathSample,
    start: f64,
    x: f64,
    event_cap: u64,
    rng: &mut R,
) -> Result<()> {
    let (horizon, t0) = (path.horizon, path.t0);
    let mut t = start;
    let mut x = x;
    let mut events = 0u64;
    let mut tick = || {
        events += 1;
        if events > event_cap {
            Err(Error::IterationCap(event_cap))
        } else {
            Ok(())
        }
    };
    while t < horizon {
        if x == 0.0 {
            let start = t;
            loop {
                tick()?;
                let y = kernel_step(meas, 0.0, t0, rng)?;
                t += t0;
                if t >= horizon {
                    // the path is not examined past the horizon
                    let end = if y > 0.0 { (t - y).max(start) } else { t };
                    path.zero_intervals.push((start, end.min(horizon)));
                    return Ok(());
                }
                if y > 0.0 {
                    path.zero_intervals.push((start, (t - y).max(start)));
                    x = y;
                    break;
                }
            }
        } else if x < t0 {
            tick()?;
            let end = t + t0;
            if end > horizon {
                // finish exactly at the horizon with a shorter exact step
                let s = horizon - t;
                let y = kernel_step(meas, x, s, rng)?;
                if y != x + s {
                    path.jumps.push(Jump { time: horizon, peak: x + s, trough: y, coarse: true });
                }
                return Ok(());
            }
            let y = kernel_step(meas, x, t0, rng)?;
            if y != x + t0 {
                path.jumps.push(Jump { time: end, peak: x + t0, trough: y, coarse: true });
            }
            t = end;
            x = y;
        } else {
            tick()?;
            let l = next_peak(meas, x, rng)?;
            let time = t + (l - x);
            if time > horizon {
                return Ok(());
            }
            let r = next_trough(meas, l, rng)?;
            path.jumps.push(Jump { time, peak: l, trough: r, coarse: false });
            t = time;
            x = r;
        }
    }
    Ok(())
}

/// Draw from the stationary law by solving `I(x) = −ln U`.
pub fn sample_stationary<R: Rng + ?Sized>(meas: &LifetimeMeasure, rng: &mut R) -> Result<f64> {
    sample_stationary_from_uniform(meas, uniform(rng))
}

pub fn sample_stationary_from_uniform(meas: &LifetimeMeasure, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(domain(format!("uniform must lie in (0, 1), got {u}")));
    }
    meas.inverse_integrated_tail(-u.ln())
}

/// A path started from a stationary draw.
pub fn simulate_stationary<R: Rng + ?Sized>(
    meas: &LifetimeMeasure,
    horizon: f64,
    opts: PathOptions,
    rng: &mut R,
) -> Result<PathSample> {
    let x0 = sample_stationary(meas, rng)?;
    simulate_path(meas, x0, horizon, opts, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainStart {
    Peak,
    Trough,
}

/// Alternating peaks and troughs `L₀, R₀, L₁, R₁, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpChainSample {
    pub peaks: Vec<f64>,
    pub troughs: Vec<f64>,
    /// The chain reached the state zero, after which it is not defined.
    pub hit_zero: bool,
}

impl JumpChainSample {
    pub fn len(&self) -> usize {
        self.troughs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.troughs.is_empty()
    }
}

/// Run `n` peak-to-trough steps of the jump chain from a peak or a trough.
pub fn simulate_jump_chain<R: Rng + ?Sized>(
    meas: &LifetimeMeasure,
    kind: ChainStart,
    value: f64,
    n: usize,
    rng: &mut R,
) -> Result<JumpChainSample> {
    if !(value > 0.0 && value.is_finite()) {
        return Err(domain(format!("chain start must be positive, got {value}")));
    }
    let mut out = JumpChainSample { peaks: Vec::with_capacity(n), troughs: Vec::with_capacity(n), hit_zero: false };
    let mut peak = match kind {
        ChainStart::Peak => value,
        ChainStart::Trough => next_peak(meas, value, rng)?,
    };
    for _ in 0..n {
        let r = next_trough(meas, peak, rng)?;
        out.peaks.push(peak);
        out.troughs.push(r);
        if r == 0.0 {
            out.hit_zero = true;
            break;
        }
        peak = next_peak(meas, r, rng)?;
    }
    Ok(out)
}
