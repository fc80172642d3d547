//! Record families, the dual process and the time-reversal test.
//!
//! A family is a record when it is at some moment the oldest one alive.
//! Every jump `(T, L, R)` of a path closes the record `(T − L, L)` (birth,
//! lifetime) and makes the family born at `T − R` the new oldest one. The
//! dual `Â_t`, the time until every family alive at `t` has died, only
//! depends on records: it is `d − t` for the last record born by `t`, whose
//! death time `d` is the largest among them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::kernels;
use crate::measure::LifetimeMeasure;
use crate::simulate::{self, PathOptions, PathSample, DEFAULT_EVENT_CAP};
use crate::stats::{self, DEFAULT_ALPHA};

/// A family that is oldest at some moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub birth: f64,
    pub lifetime: f64,
}

impl Record {
    pub fn death(&self) -> f64 {
        self.birth + self.lifetime
    }
}

/// Closed records of a path, ordered by birth (and hence by death), plus the
/// birth time of the record still alive at the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordSet {
    pub records: Vec<Record>,
    /// Birth of the oldest family alive at the horizon; `Â` is determined
    /// on `[0, open_birth)`.
    pub open_birth: f64,
}

/// Records of `path`: one per jump, plus the open record at the horizon.
pub fn extract_records(path: &PathSample) -> RecordSet {
    let records = path
        .jumps
        .iter()
        .map(|j| Record { birth: j.time - j.peak, lifetime: j.peak })
        .collect();
    RecordSet { records, open_birth: path.horizon - path.final_value() }
}

impl RecordSet {
    fn check(&self, t: f64) -> Result<()> {
        if t >= 0.0 && t < self.open_birth {
            Ok(())
        } else {
            Err(Error::WindowNotClosed(t))
        }
    }

    /// `Â_t` from the last record born by `t`.
    pub fn dual_at(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        let k = self.records.partition_point(|r| r.birth <= t);
        if k == 0 {
            return Ok(0.0);
        }
        Ok((self.records[k - 1].death() - t).max(0.0))
    }

    /// `Â_t` as the largest `(s + y) − t` over records `(s, y)` with
    /// `s ≤ t < s + y`, by direct sweep of the planar point set.
    pub fn dual_at_sweep(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self
            .records
            .iter()
            .filter(|r| r.birth <= t && t < r.death())
            .map(|r| r.death() - t)
            .fold(0.0, f64::max))
    }

    /// Upward jumps of `Â` at the births of records `1..`: `(time, size)`.
    pub fn dual_jumps(&self) -> Vec<(f64, f64)> {
        self.records
            .windows(2)
            .filter(|w| w[1].birth < self.open_birth)
            .map(|w| {
                let before = (w[0].death() - w[1].birth).max(0.0);
                let after = w[1].death() - w[1].birth;
                (w[1].birth, after - before)
            })
            .collect()
    }
}

/// `Â_t` for a record set.
pub fn dual_path(records: &RecordSet, t: f64) -> Result<f64> {
    records.dual_at(t)
}

/// Options for [`run_until_window_closed`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureOptions {
    /// Length of each simulation extension. Closure is checked between
    /// extensions, so results do not depend on the window length.
    pub chunk: f64,
    pub t0: f64,
    pub event_cap: u64,
}

impl Default for ClosureOptions {
    fn default() -> Self {
        ClosureOptions { chunk: 16.0, t0: 1e-6, event_cap: DEFAULT_EVENT_CAP }
    }
}

/// Simulate a stationary path until every record relevant to `[0, window]`
/// is known, i.e. until the oldest living family was born after `window`.
pub fn run_until_window_closed<R: Rng + ?Sized>(
    meas: &LifetimeMeasure,
    window: f64,
    opts: ClosureOptions,
    rng: &mut R,
) -> Result<(PathSample, RecordSet)> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(domain(format!("window must be positive, got {window}")));
    }
    let path_opts = PathOptions { t0: Some(opts.t0), event_cap: opts.event_cap };
    let mut path = simulate::simulate_stationary(meas, opts.chunk, path_opts, rng)?;
    loop {
        let records = extract_records(&path);
        if records.open_birth > window {
            return Ok((path, records));
        }
        if path.jumps.len() as u64 > opts.event_cap {
            return Err(Error::IterationCap(opts.event_cap));
        }
        let next = path.horizon + opts.chunk;
        simulate::extend_path(meas, &mut path, next, opts.event_cap, rng)?;
    }
}

/// Time after `window` at which the window closed: the first jump whose
/// new oldest family is born after `window`.
pub fn closure_overshoot(path: &PathSample, window: f64) -> Option<f64> {
    path.jumps
        .iter()
        .find(|j| j.time - j.trough > window && j.time >= window)
        .map(|j| j.time - window)
}

/// Settings of the time-reversal test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReversalOptions {
    pub seed: u64,
    /// Total number of independent paths; even streams give forward
    /// features, odd streams dual features.
    pub n_paths: u64,
    /// Window length; `None` selects `2q + 200` with `q` the burn-in.
    pub window: Option<f64>,
    /// Keep every `stride`-th jump to weaken serial dependence.
    pub stride: usize,
    /// Lag of the increment comparison; `None` selects the median of `π`.
    pub lag: Option<f64>,
    pub alpha: f64,
}

impl Default for ReversalOptions {
    fn default() -> Self {
        ReversalOptions { seed: 0, n_paths: 400, window: None, stride: 8, lag: None, alpha: DEFAULT_ALPHA }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub comparison: String,
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub functional: String,
    pub forward: f64,
    pub dual: f64,
    pub z: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReversalReport {
    pub window: f64,
    pub burn_in: f64,
    pub lag: f64,
    pub n_paths: u64,
    /// Jumps of `A` inside the burn-in-trimmed windows of forward paths.
    pub forward_jumps: usize,
    pub alpha: f64,
    pub comparisons: Vec<Comparison>,
    /// Increments of `Â` against un-negated increments of `A`; must fail.
    pub negative_control: Comparison,
    pub exchange: Vec<MomentCheck>,
    pub passed: bool,
}

#[derive(Default)]
struct Features {
    middle: f64,
    jump_sizes: Vec<f64>,
    gaps: Vec<f64>,
    pairs: Vec<(f64, f64)>,
    increments: Vec<f64>,
    window_jumps: usize,
}

/// Jump times and sizes inside `[lo, hi]`, thinned by `stride`, each paired
/// with the gap before it, or after it when `following` (time reversal
/// moves the gap preceding a jump to the other side).
fn jump_features(times: &[f64], sizes: &[f64], lo: f64, hi: f64, stride: usize, following: bool, f: &mut Features) {
    let n = times.len();
    let idx: Vec<usize> = (1..n.saturating_sub(1)).filter(|&i| times[i] >= lo && times[i] <= hi).collect();
    f.window_jumps = idx.len();
    // thin by absolute index: restarting at the first jump of the window
    // would overweight it, and its gap is length-biased
    for &i in idx.iter().filter(|&&i| i % stride.max(1) == 0) {
        let before = times[i] - times[i - 1];
        let gap = if following { times[i + 1] - times[i] } else { before };
        f.jump_sizes.push(sizes[i]);
        f.gaps.push(before);
        f.pairs.push((gap, sizes[i]));
    }
}

/// Round to a 1e-9 grid. An increment without a jump is exactly `±lag`,
/// an atom that rounding would otherwise split into distinct values.
fn snap(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

/// Start times of the increments taken from one path. `A` keeps large
/// values for a long time, so the points are spread over the whole window
/// (four per path by default) to keep their dependence weak.
fn increment_grid(lo: f64, hi: f64, lag: f64) -> Vec<f64> {
    let spacing = (8.0 * lag).max(0.25 * (hi - lo));
    let mut out = Vec::new();
    let mut t = lo;
    while t + lag <= hi {
        out.push(t);
        t += spacing;
    }
    out
}

fn forward_features(path: &PathSample, window: f64, q: f64, lag: f64, stride: usize) -> Result<Features> {
    let mut f = Features { middle: path.value_at(0.5 * window)?, ..Features::default() };
    let times: Vec<f64> = path.jumps.iter().map(|j| j.time).collect();
    let sizes: Vec<f64> = path.jumps.iter().map(|j| j.peak - j.trough).collect();
    jump_features(&times, &sizes, q, window - q, stride, false, &mut f);
    for t in increment_grid(q, window - q, lag) {
        f.increments.push(snap(path.value_at(t + lag)? - path.value_at(t)?));
    }
    Ok(f)
}

fn dual_features(records: &RecordSet, window: f64, q: f64, lag: f64, stride: usize) -> Result<Features> {
    let mut f = Features { middle: records.dual_at(0.5 * window)?, ..Features::default() };
    let jumps = records.dual_jumps();
    let times: Vec<f64> = jumps.iter().map(|j| j.0).collect();
    let sizes: Vec<f64> = jumps.iter().map(|j| j.1).collect();
    jump_features(&times, &sizes, q, window - q, stride, true, &mut f);
    for t in increment_grid(q, window - q, lag) {
        f.increments.push(snap(records.dual_at(t + lag)? - records.dual_at(t)?));
    }
    Ok(f)
}

fn compare(name: &str, a: &[f64], b: &[f64], alpha: f64) -> Result<Comparison> {
    let ks = stats::ks_two_sample(a, b)?;
    Ok(Comparison {
        comparison: name.to_string(),
        statistic: ks.statistic,
        p_value: ks.p_value,
        n: a.len().min(b.len()),
        passed: ks.passes(alpha),
    })
}

/// `x/(1+x)`: maps the heavy-tailed gaps and jumps into `[0, 1)` so that
/// mixed moments exist.
fn compress(x: f64) -> f64 {
    x / (1.0 + x)
}

/// Mean over all values and its standard error treating each group (one
/// path) as an independent cluster.
fn clustered_mean(groups: impl Iterator<Item = Vec<f64>>) -> (f64, f64) {
    let sums: Vec<(f64, f64)> = groups.map(|g| (g.iter().sum::<f64>(), g.len() as f64)).collect();
    let total: f64 = sums.iter().map(|s| s.1).sum();
    let mean = sums.iter().map(|s| s.0).sum::<f64>() / total;
    let k = sums.len() as f64;
    let ss: f64 = sums.iter().map(|(s, n)| (s - mean * n).powi(2)).sum();
    (mean, (k / (k - 1.0) * ss).sqrt() / total)
}

type Functional = (&'static str, fn(f64, f64) -> f64);

const EXCHANGE_FUNCTIONALS: [Functional; 3] =
    [("xy", |x, y| x * y), ("x^2 y", |x, y| x * x * y), ("x y^2", |x, y| x * y * y)];

/// Statistical check that the dual of a stationary path is distributed as
/// its time reversal.
///
/// Compares, by two-sample KS tests between independent path groups:
/// `Â` and `A` at the window midpoint; dual inter-jump gaps with jump sizes
/// of `A`; dual jump sizes with inter-jump gaps of `A`; and lag-`h`
/// increments of `Â` with negated increments of `A`. The un-negated
/// increments serve as a negative control. Mixed moments of compressed
/// `(gap, jump)` pairs check that reversal exchanges gaps and jumps.
pub fn reversal_test(meas: &LifetimeMeasure, opts: ReversalOptions) -> Result<ReversalReport> {
    if !meas.has_stationary_law()? {
        return Err(Error::NoStationaryLaw);
    }
    if opts.n_paths < 16 {
        return Err(domain("reversal test needs at least 16 paths"));
    }
    let q = meas.inverse_integrated_tail(-(0.999f64).ln())?;
    let window = opts.window.unwrap_or(2.0 * q + 200.0);
    if !(window > 2.0 * q) {
        return Err(domain(format!("window {window} leaves nothing after the burn-in {q} at both ends")));
    }
    let lag = match opts.lag {
        Some(h) => h,
        None => meas.inverse_integrated_tail(std::f64::consts::LN_2)?,
    };
    let stride = opts.stride;
    let features: Vec<Result<Features>> = simulate::fan_out(opts.seed, opts.n_paths, |stream, rng| {
        let (path, records) = run_until_window_closed(meas, window, ClosureOptions::default(), rng)?;
        if stream % 2 == 0 {
            forward_features(&path, window, q, lag, stride)
        } else {
            dual_features(&records, window, q, lag, stride)
        }
    });
    let mut fwd = Features::default();
    let mut dual = Features::default();
    let mut fwd_pairs: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut dual_pairs: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut fwd_mid = Vec::new();
    let mut dual_mid = Vec::new();
    for (i, f) in features.into_iter().enumerate() {
        let f = f?;
        let (acc, mid) = if i % 2 == 0 { (&mut fwd, &mut fwd_mid) } else { (&mut dual, &mut dual_mid) };
        mid.push(f.middle);
        acc.jump_sizes.extend(f.jump_sizes);
        acc.gaps.extend(f.gaps);
        let group = if i % 2 == 0 { &mut fwd_pairs } else { &mut dual_pairs };
        group.push(f.pairs);
        acc.increments.extend(f.increments);
        acc.window_jumps += f.window_jumps;
    }
    let negated: Vec<f64> = fwd.increments.iter().map(|d| -d).collect();
    let alpha = opts.alpha;
    let comparisons = vec![
        compare("dual marginal vs forward marginal", &dual_mid, &fwd_mid, alpha)?,
        compare("dual gaps vs forward jump sizes", &dual.gaps, &fwd.jump_sizes, alpha)?,
        compare("dual jump sizes vs forward gaps", &dual.jump_sizes, &fwd.gaps, alpha)?,
        compare("dual increments vs negated forward increments", &dual.increments, &negated, alpha)?,
    ];
    let negative_control = compare("dual increments vs forward increments", &dual.increments, &fwd.increments, alpha)?;
    let exchange = EXCHANGE_FUNCTIONALS
        .iter()
        .map(|(name, f)| {
            let eval = |groups: &[Vec<(f64, f64)>]| {
                clustered_mean(groups.iter().map(|g| g.iter().map(|&(x, y)| f(compress(x), compress(y))).collect()))
            };
            let (a, a_se) = eval(&fwd_pairs);
            let (b, b_se) = eval(&dual_pairs);
            let z = (a - b).abs() / a_se.hypot(b_se);
            MomentCheck { functional: (*name).to_string(), forward: a, dual: b, z, passed: z < 4.0 }
        })
        .collect::<Vec<_>>();
    let passed = comparisons.iter().all(|c| c.passed) && !negative_control.passed && exchange.iter().all(|m| m.passed);
    Ok(ReversalReport {
        window,
        burn_in: q,
        lag,
        n_paths: opts.n_paths,
        forward_jumps: fwd.window_jumps,
        alpha,
        comparisons,
        negative_control,
        exchange,
        passed,
    })
}

/// Stationary density of the dual at a fixed time equals `π`; exposed for
/// reports.
pub fn dual_marginal_cdf(meas: &LifetimeMeasure, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    kernels::stationary_cdf(meas, x)
}
