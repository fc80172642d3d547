//! Lifetime measures: density `m`, tail `M(x) = μ((x, ∞))`, integrated tail
//! `I(x) = ∫ₓ^∞ M`, their inverses, and the recurrence/stationarity
//! classification driven by them.
//!
//! Built-in families answer every query in closed form. Custom measures
//! (a tabulated tail or a user callable) fall back to quadrature, root
//! finding and the partial-integral divergence heuristic.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::{self, Divergence};

/// Serializable description of a lifetime measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MeasureSpec {
    /// `M(x) = (1+β)/(βx)`, the family-lifetime measure of the conditioned
    /// critical `(1+β)`-stable branching process.
    Stable { beta: f64 },
    /// `m(x) = αx⁻²` on `(0, 1]`, continued by `m(x) = α·e^{1−x}` beyond 1.
    Hyperbolic { alpha: f64 },
    /// `M(x) = a·x^{−p}`.
    Pareto { a: f64, p: f64 },
    /// Tail tabulated as `[x, M(x)]` pairs, interpolated log-log.
    Custom { tail_table: Vec<[f64; 2]> },
}

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Family {
    Stable { beta: f64, c: f64 },
    Hyperbolic { alpha: f64 },
    Pareto { a: f64, p: f64 },
    Table(TailTable),
    Callable { tail: RealFn, density: Option<RealFn> },
}

/// A lifetime measure `μ` on `(0, ∞)` with `μ((0, ∞)) = ∞` and finite tails.
///
/// Immutable after construction; lazily computed endpoint verdicts for
/// custom measures are cached behind `OnceLock`.
#[derive(Clone)]
pub struct LifetimeMeasure {
    spec: Option<MeasureSpec>,
    family: Family,
    near_zero: Arc<OnceLock<Divergence>>,
    at_infinity: Arc<OnceLock<Divergence>>,
}

impl fmt::Debug for LifetimeMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.spec {
            Some(spec) => write!(f, "LifetimeMeasure({spec:?})"),
            None => write!(f, "LifetimeMeasure(custom callable)"),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidMeasure(format!("{name} must be finite and positive, got {v}")))
    }
}

impl LifetimeMeasure {
    fn with_family(spec: Option<MeasureSpec>, family: Family) -> Self {
        LifetimeMeasure {
            spec,
            family,
            near_zero: Arc::new(OnceLock::new()),
            at_infinity: Arc::new(OnceLock::new()),
        }
    }

    pub fn from_spec(spec: MeasureSpec) -> Result<Self> {
        let family = match &spec {
            MeasureSpec::Stable { beta } => {
                let beta = positive("beta", *beta)?;
                if beta > 1.0 {
                    return Err(Error::InvalidMeasure(format!("beta must be at most 1, got {beta}")));
                }
                Family::Stable { beta, c: (1.0 + beta) / beta }
            }
            MeasureSpec::Hyperbolic { alpha } => Family::Hyperbolic { alpha: positive("alpha", *alpha)? },
            MeasureSpec::Pareto { a, p } => Family::Pareto {
                a: positive("a", *a)?,
                p: positive("p", *p)?,
            },
            MeasureSpec::Custom { tail_table } => Family::Table(TailTable::new(tail_table)?),
        };
        Ok(Self::with_family(Some(spec), family))
    }

    pub fn stable(beta: f64) -> Result<Self> {
        Self::from_spec(MeasureSpec::Stable { beta })
    }

    pub fn hyperbolic(alpha: f64) -> Result<Self> {
        Self::from_spec(MeasureSpec::Hyperbolic { alpha })
    }

    pub fn pareto(a: f64, p: f64) -> Result<Self> {
        Self::from_spec(MeasureSpec::Pareto { a, p })
    }

    pub fn from_table(tail_table: Vec<[f64; 2]>) -> Result<Self> {
        Self::from_spec(MeasureSpec::Custom { tail_table })
    }

    /// A custom measure given by its tail and, optionally, its density.
    ///
    /// Without a density, `m` is the centered difference of `M` with step
    /// `max(1e-6·x, 1e-12)`.
    pub fn custom<T>(tail: T, density: Option<RealFn>) -> Self
    where
        T: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::with_family(None, Family::Callable { tail: Arc::new(tail), density })
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let spec: MeasureSpec =
            serde_json::from_str(json).map_err(|e| Error::InvalidMeasure(e.to_string()))?;
        Self::from_spec(spec)
    }

    /// The serializable description, `None` for callable custom measures.
    pub fn spec(&self) -> Option<&MeasureSpec> {
        self.spec.as_ref()
    }

    pub fn is_builtin(&self) -> bool {
        matches!(
            self.family,
            Family::Stable { .. } | Family::Hyperbolic { .. } | Family::Pareto { .. }
        )
    }

    /// `β` when this is the stable family.
    pub fn stable_beta(&self) -> Option<f64> {
        match self.family {
            Family::Stable { beta, .. } => Some(beta),
            _ => None,
        }
    }

    fn raw_tail(&self, x: f64) -> f64 {
        match &self.family {
            Family::Stable { c, .. } => c / x,
            Family::Hyperbolic { alpha } => {
                if x <= 1.0 {
                    alpha / x
                } else {
                    alpha * (1.0 - x).exp()
                }
            }
            Family::Pareto { a, p } => a * x.powf(-p),
            Family::Table(t) => t.tail(x),
            Family::Callable { tail, .. } => tail(x),
        }
    }

    fn raw_density(&self, x: f64) -> f64 {
        match &self.family {
            Family::Stable { c, .. } => c / (x * x),
            Family::Hyperbolic { alpha } => {
                if x <= 1.0 {
                    alpha / (x * x)
                } else {
                    alpha * (1.0 - x).exp()
                }
            }
            Family::Pareto { a, p } => p * a * x.powf(-p - 1.0),
            Family::Callable { density: Some(d), .. } => d(x),
            Family::Table(_) | Family::Callable { density: None, .. } => {
                let h = difference_step(x);
                (self.raw_tail(x - h) - self.raw_tail(x + h)) / (2.0 * h)
            }
        }
    }

    /// `ln m(x)`, exact for built-in families even where `m` overflows.
    pub(crate) fn ln_density(&self, x: f64) -> f64 {
        match &self.family {
            Family::Stable { c, .. } => c.ln() - 2.0 * x.ln(),
            Family::Hyperbolic { alpha } if x <= 1.0 => alpha.ln() - 2.0 * x.ln(),
            Family::Pareto { a, p } => (p * a).ln() - (p + 1.0) * x.ln(),
            Family::Table(_) | Family::Callable { density: None, .. } => {
                let h = difference_step(x);
                (self.raw_tail(x - h) - self.raw_tail(x + h)).ln() - (2.0 * h).ln()
            }
            _ => self.raw_density(x).ln(),
        }
    }

    /// `ln M(x)`, exact for built-in families even where `M` overflows.
    pub(crate) fn ln_tail(&self, x: f64) -> f64 {
        match &self.family {
            Family::Stable { c, .. } => c.ln() - x.ln(),
            Family::Hyperbolic { alpha } if x <= 1.0 => alpha.ln() - x.ln(),
            Family::Hyperbolic { alpha } => alpha.ln() + 1.0 - x,
            Family::Pareto { a, p } => a.ln() - p * x.ln(),
            _ => self.raw_tail(x).ln(),
        }
    }

    /// `m(x)`, the lifetime density.
    pub fn density(&self, x: f64) -> Result<f64> {
        check_positive(x)?;
        Ok(self.raw_density(x))
    }

    /// `M(x) = μ((x, ∞))`.
    pub fn tail(&self, x: f64) -> Result<f64> {
        check_positive(x)?;
        Ok(self.raw_tail(x))
    }

    /// `∫ᵧˣ M(u) du` for `0 < y ≤ x`.
    pub fn tail_between(&self, y: f64, x: f64) -> Result<f64> {
        check_positive(y)?;
        if !(y <= x) {
            return Err(domain(format!("tail_between needs y <= x, got y={y}, x={x}")));
        }
        if y == x {
            return Ok(0.0);
        }
        Ok(self.signed_tail_between(y, x))
    }

    /// `∫ᵧˣ M` without the ordering check (negative when `y > x`).
    pub(crate) fn signed_tail_between(&self, y: f64, x: f64) -> f64 {
        match &self.family {
            Family::Stable { c, .. } => c * (x / y).ln(),
            Family::Hyperbolic { alpha } => hyperbolic_primitive(*alpha, x) - hyperbolic_primitive(*alpha, y),
            Family::Pareto { a, p } => {
                if *p == 1.0 {
                    a * (x / y).ln()
                } else {
                    a * (x.powf(1.0 - p) - y.powf(1.0 - p)) / (1.0 - p)
                }
            }
            Family::Table(_) | Family::Callable { .. } => {
                let (lo, hi, sign) = if y <= x { (y, x, 1.0) } else { (x, y, -1.0) };
                match numerics::quad(|u| self.raw_tail(u), lo, hi) {
                    Ok(v) => sign * v,
                    Err(Error::Quadrature { partial, .. }) => sign * partial,
                    Err(_) => f64::NAN,
                }
            }
        }
    }

    /// `∫₀ˣ M(u) du`, `+∞` when `M` is not integrable at zero.
    pub fn mass_near_zero(&self, x: f64) -> Result<f64> {
        check_positive(x)?;
        match &self.family {
            Family::Stable { .. } | Family::Hyperbolic { .. } => Ok(f64::INFINITY),
            Family::Pareto { a, p } => {
                if *p < 1.0 {
                    Ok(a * x.powf(1.0 - p) / (1.0 - p))
                } else {
                    Ok(f64::INFINITY)
                }
            }
            Family::Table(t) => {
                if t.low_exponent < 1.0 {
                    numerics::quad(|u| self.raw_tail(u), 0.0, x)
                } else {
                    Ok(f64::INFINITY)
                }
            }
            Family::Callable { .. } => match self.zero_verdict() {
                Divergence::Diverges => Ok(f64::INFINITY),
                Divergence::Converges(_) => numerics::quad(|u| self.raw_tail(u), 0.0, x),
                Divergence::Inconclusive => Err(Error::Inconclusive("∫₀ M")),
            },
        }
    }

    fn zero_verdict(&self) -> Divergence {
        *self.near_zero.get_or_init(|| {
            numerics::detect_divergence(&numerics::partials_near_zero(|u| self.raw_tail(u), 1.0))
        })
    }

    fn infinity_verdict(&self) -> Divergence {
        *self.at_infinity.get_or_init(|| {
            numerics::detect_divergence(&numerics::partials_to_infinity(|u| self.raw_tail(u), 1.0))
        })
    }

    /// `I(x) = ∫ₓ^∞ M(u) du`; `+∞` when the tail is not integrable.
    ///
    /// Callable custom measures may report [`Error::Inconclusive`].
    pub fn integrated_tail(&self, x: f64) -> Result<f64> {
        check_positive(x)?;
        match &self.family {
            Family::Stable { .. } => Ok(f64::INFINITY),
            Family::Hyperbolic { alpha } => Ok(hyperbolic_integrated_tail(*alpha, x)),
            Family::Pareto { a, p } => {
                if *p > 1.0 {
                    Ok(a * x.powf(1.0 - p) / (p - 1.0))
                } else {
                    Ok(f64::INFINITY)
                }
            }
            Family::Table(t) => {
                if t.high_exponent > 1.0 {
                    numerics::quad(|u| self.raw_tail(u), x, f64::INFINITY)
                } else {
                    Ok(f64::INFINITY)
                }
            }
            Family::Callable { .. } => match self.infinity_verdict() {
                Divergence::Diverges => Ok(f64::INFINITY),
                Divergence::Converges(_) => numerics::quad(|u| self.raw_tail(u), x, f64::INFINITY),
                Divergence::Inconclusive => Err(Error::Inconclusive("∫₁^∞ M")),
            },
        }
    }

    /// Whether `I(1) < ∞`, i.e. whether a stationary law exists.
    pub fn has_stationary_law(&self) -> Result<bool> {
        Ok(self.integrated_tail(1.0)?.is_finite())
    }

    /// The unique `x` with `M(x) = u`.
    pub fn inverse_tail(&self, u: f64) -> Result<f64> {
        if !(u > 0.0) || !u.is_finite() {
            return Err(domain(format!("inverse_tail needs a finite u > 0, got {u}")));
        }
        let x = match &self.family {
            Family::Stable { c, .. } => c / u,
            Family::Hyperbolic { alpha } => {
                if u >= *alpha {
                    alpha / u
                } else {
                    1.0 - (u / alpha).ln()
                }
            }
            Family::Pareto { a, p } => (a / u).powf(1.0 / p),
            Family::Table(_) | Family::Callable { .. } => {
                return numerics::solve_decreasing(|x| self.raw_tail(x), u, 1.0);
            }
        };
        Ok(x)
    }

    /// The unique `x` with `ln M(x) = ln_u`; usable where `M` itself
    /// overflows.
    pub fn inverse_ln_tail(&self, ln_u: f64) -> Result<f64> {
        if !ln_u.is_finite() {
            return Err(domain(format!("inverse_ln_tail needs a finite argument, got {ln_u}")));
        }
        let x = match &self.family {
            Family::Stable { c, .. } => (c.ln() - ln_u).exp(),
            Family::Hyperbolic { alpha } => {
                let la = alpha.ln();
                if ln_u >= la {
                    (la - ln_u).exp()
                } else {
                    1.0 + (la - ln_u)
                }
            }
            Family::Pareto { a, p } => ((a.ln() - ln_u) / p).exp(),
            Family::Table(_) | Family::Callable { .. } => return self.inverse_tail(ln_u.exp()),
        };
        Ok(positive_or_tiny(x))
    }

    /// The unique `x` with `I(x) = c`, for `c > 0` when a stationary law
    /// exists.
    pub fn inverse_integrated_tail(&self, c: f64) -> Result<f64> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(domain(format!("inverse_integrated_tail needs a finite c > 0, got {c}")));
        }
        if !self.has_stationary_law()? {
            return Err(Error::NoStationaryLaw);
        }
        let x = match &self.family {
            Family::Hyperbolic { alpha } => {
                if c >= *alpha {
                    (1.0 - c / alpha).exp()
                } else {
                    1.0 - (c / alpha).ln()
                }
            }
            Family::Pareto { a, p } => (a / ((p - 1.0) * c)).powf(1.0 / (p - 1.0)),
            _ => {
                return numerics::solve_decreasing(
                    |x| self.integrated_tail(x).unwrap_or(f64::NAN),
                    c,
                    1.0,
                )
            }
        };
        if x.is_finite() {
            Ok(positive_or_tiny(x))
        } else {
            Err(domain(format!("I(x) = {c} has no representable solution")))
        }
    }

    /// The unique `y ∈ (0, L]` with `∫ᵧᴸ M = c`.
    ///
    /// Returns [`Error::NoSolution`] when `c ≥ ∫₀ᴸ M`; samplers map that to
    /// a jump to zero.
    pub fn inverse_tail_between(&self, upper: f64, c: f64) -> Result<f64> {
        check_positive(upper)?;
        if !(c >= 0.0) || !c.is_finite() {
            return Err(domain(format!("inverse_tail_between needs finite c >= 0, got {c}")));
        }
        if c == 0.0 {
            return Ok(upper);
        }
        match &self.family {
            Family::Stable { c: k, .. } => Ok(positive_or_tiny(upper * (-c / k).exp())),
            Family::Hyperbolic { alpha } => {
                let target = hyperbolic_primitive(*alpha, upper) - c;
                Ok(positive_or_tiny(hyperbolic_primitive_inverse(*alpha, target)))
            }
            Family::Pareto { a, p } => {
                if *p == 1.0 {
                    return Ok(positive_or_tiny(upper * (-c / a).exp()));
                }
                let base = upper.powf(1.0 - p) - c * (1.0 - p) / a;
                if *p < 1.0 && base <= 0.0 {
                    return Err(Error::NoSolution {
                        target: c,
                        total: a * upper.powf(1.0 - p) / (1.0 - p),
                    });
                }
                Ok(positive_or_tiny(base.powf(1.0 / (1.0 - p))))
            }
            Family::Table(_) | Family::Callable { .. } => {
                let total = self.mass_near_zero(upper)?;
                if c >= total {
                    return Err(Error::NoSolution { target: c, total });
                }
                numerics::solve_decreasing(|y| self.signed_tail_between(y, upper), c, 0.5 * upper)
            }
        }
    }
}

fn check_positive(x: f64) -> Result<()> {
    if x > 0.0 && !x.is_nan() {
        Ok(())
    } else {
        Err(domain(format!("argument must be positive, got {x}")))
    }
}

/// Centered-difference step for densities derived from a tail.
fn difference_step(x: f64) -> f64 {
    (1e-6 * x).max(1e-12).min(0.5 * x)
}

fn positive_or_tiny(y: f64) -> f64 {
    if y > 0.0 {
        y
    } else {
        f64::MIN_POSITIVE
    }
}

/// `∫₁ˣ M` for the hyperbolic family.
fn hyperbolic_primitive(alpha: f64, x: f64) -> f64 {
    if x <= 1.0 {
        alpha * x.ln()
    } else {
        -alpha * (1.0 - x).exp_m1()
    }
}

fn hyperbolic_primitive_inverse(alpha: f64, v: f64) -> f64 {
    if v <= 0.0 {
        (v / alpha).exp()
    } else {
        1.0 - (-v / alpha).ln_1p()
    }
}

fn hyperbolic_integrated_tail(alpha: f64, x: f64) -> f64 {
    if x <= 1.0 {
        alpha * (1.0 - x.ln())
    } else {
        alpha * (1.0 - x).exp()
    }
}

/// Tail tabulated on a grid, interpolated linearly in `(ln x, ln M)` and
/// extended beyond both ends by power laws fitted to the outermost decade.
#[derive(Debug, Clone)]
pub struct TailTable {
    ln_x: Vec<f64>,
    ln_m: Vec<f64>,
    /// `M(x) ∝ x^{-low_exponent}` below the first point.
    pub low_exponent: f64,
    /// `M(x) ∝ x^{-high_exponent}` above the last point.
    pub high_exponent: f64,
}

impl TailTable {
    pub fn new(points: &[[f64; 2]]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidMeasure("tail_table needs at least two points".into()));
        }
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| a[0].total_cmp(&b[0]));
        for w in pts.windows(2) {
            if !(w[0][0] < w[1][0]) {
                return Err(Error::InvalidMeasure("tail_table abscissae must be distinct".into()));
            }
            if !(w[0][1] > w[1][1]) {
                return Err(Error::InvalidMeasure("tail_table values must be strictly decreasing".into()));
            }
        }
        for p in &pts {
            if !(p[0] > 0.0 && p[1] > 0.0 && p[0].is_finite() && p[1].is_finite()) {
                return Err(Error::InvalidMeasure("tail_table entries must be finite and positive".into()));
            }
        }
        let ln_x: Vec<f64> = pts.iter().map(|p| p[0].ln()).collect();
        let ln_m: Vec<f64> = pts.iter().map(|p| p[1].ln()).collect();
        let decade = std::f64::consts::LN_10;
        let n = ln_x.len();
        let hi: Vec<usize> = (0..n).filter(|&i| ln_x[i] >= ln_x[n - 1] - decade).collect();
        let lo: Vec<usize> = (0..n).filter(|&i| ln_x[i] <= ln_x[0] + decade).collect();
        let hi = if hi.len() >= 2 { hi } else { vec![n - 2, n - 1] };
        let lo = if lo.len() >= 2 { lo } else { vec![0, 1] };
        let high_exponent = -ls_slope(&ln_x, &ln_m, &hi);
        let low_exponent = -ls_slope(&ln_x, &ln_m, &lo);
        if !(high_exponent > 0.0 && low_exponent > 0.0) {
            return Err(Error::InvalidMeasure("tail_table end fits must decrease".into()));
        }
        Ok(TailTable { ln_x, ln_m, low_exponent, high_exponent })
    }

    pub fn tail(&self, x: f64) -> f64 {
        let lx = x.ln();
        let n = self.ln_x.len();
        if lx <= self.ln_x[0] {
            return (self.ln_m[0] - self.low_exponent * (lx - self.ln_x[0])).exp();
        }
        if lx >= self.ln_x[n - 1] {
            return (self.ln_m[n - 1] - self.high_exponent * (lx - self.ln_x[n - 1])).exp();
        }
        let i = self.ln_x.partition_point(|&v| v <= lx).max(1) - 1;
        let w = (lx - self.ln_x[i]) / (self.ln_x[i + 1] - self.ln_x[i]);
        (self.ln_m[i] + w * (self.ln_m[i + 1] - self.ln_m[i])).exp()
    }
}

fn ls_slope(xs: &[f64], ys: &[f64], idx: &[usize]) -> f64 {
    let n = idx.len() as f64;
    let mx = idx.iter().map(|&i| xs[i]).sum::<f64>() / n;
    let my = idx.iter().map(|&i| ys[i]).sum::<f64>() / n;
    let sxy: f64 = idx.iter().map(|&i| (xs[i] - mx) * (ys[i] - my)).sum();
    let sxx: f64 = idx.iter().map(|&i| (xs[i] - mx).powi(2)).sum();
    sxy / sxx
}

// ---------------------------------------------------------------------------
// Classification

/// Three-valued verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Yes,
    No,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainVerdict {
    Transient,
    NullRecurrent,
    PositiveRecurrent,
    Inconclusive,
}

/// Value of a criterion integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum CriterionValue {
    Finite(f64),
    Infinite,
    Inconclusive,
}

impl CriterionValue {
    pub fn is_finite(&self) -> Option<bool> {
        match self {
            CriterionValue::Finite(_) => Some(true),
            CriterionValue::Infinite => Some(false),
            CriterionValue::Inconclusive => None,
        }
    }
}

/// The four criterion integrals behind the classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionValues {
    /// `∫₀¹ exp(∫ₓ¹ M) dx`: finite iff zero is reached; jump chains transient.
    pub zero_return: CriterionValue,
    /// `∫₁^∞ exp(−∫₁ˣ M) dx`: infinite iff points are revisited forever.
    pub point_recurrence: CriterionValue,
    /// `I(1) = ∫₁^∞ M`: finite iff a stationary law exists.
    pub stationarity: CriterionValue,
    /// `∫₀¹ m(x) exp(−∫ₓ¹ M) dx`: finite iff jump chains are positive recurrent.
    pub positive_recurrence: CriterionValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub returns_to_zero: Verdict,
    pub point_recurrent: Verdict,
    pub has_stationary: Verdict,
    pub jump_chain: ChainVerdict,
    pub criterion_values: CriterionValues,
}

fn finite_or(v: Result<f64>) -> CriterionValue {
    match v {
        Ok(x) if x.is_finite() => CriterionValue::Finite(x),
        Ok(_) => CriterionValue::Infinite,
        Err(_) => CriterionValue::Inconclusive,
    }
}

fn from_divergence(d: Divergence) -> CriterionValue {
    match d {
        Divergence::Converges(v) => CriterionValue::Finite(v),
        Divergence::Diverges => CriterionValue::Infinite,
        Divergence::Inconclusive => CriterionValue::Inconclusive,
    }
}

enum Analytic {
    Finite,
    Infinite,
}

impl LifetimeMeasure {
    fn zero_return_integrand(&self, x: f64) -> f64 {
        self.signed_tail_between(x, 1.0).exp()
    }

    fn point_recurrence_integrand(&self, x: f64) -> f64 {
        (-self.signed_tail_between(1.0, x)).exp()
    }

    fn positive_recurrence_integrand(&self, x: f64) -> f64 {
        (self.ln_density(x) - self.signed_tail_between(x, 1.0)).exp()
    }

    /// Closed-form finiteness of the four criteria for built-in families.
    fn analytic_criteria(&self) -> Option<[Analytic; 4]> {
        use Analytic::{Finite as F, Infinite as I};
        let verdicts = match &self.family {
            // c = (1+β)/β ≥ 2: x^{-c} is not integrable at 0 but is at ∞, and
            // m·exp(-∫ₓ¹M) = c·x^{c-2} is integrable at 0.
            Family::Stable { .. } => [I, F, I, F],
            Family::Hyperbolic { alpha } => [
                if *alpha < 1.0 { F } else { I },
                I,
                F,
                if *alpha > 1.0 { F } else { I },
            ],
            Family::Pareto { a, p } => {
                if *p < 1.0 {
                    [F, F, I, I]
                } else if *p == 1.0 {
                    [
                        if *a < 1.0 { F } else { I },
                        if *a > 1.0 { F } else { I },
                        I,
                        if *a > 1.0 { F } else { I },
                    ]
                } else {
                    [I, I, F, F]
                }
            }
            Family::Table(_) | Family::Callable { .. } => return None,
        };
        Some(verdicts)
    }

    /// Evaluate the recurrence, stationarity and jump-chain criteria.
    pub fn classify(&self) -> ClassificationReport {
        let values = match self.analytic_criteria() {
            Some([zero, point, stat, pos]) => {
                let eval = |flag: Analytic, v: &dyn Fn() -> Result<f64>| match flag {
                    Analytic::Infinite => CriterionValue::Infinite,
                    // a quadrature failure here is a numerical problem, not a
                    // verdict; keep the analytic answer and report NaN
                    Analytic::Finite => match v() {
                        Ok(x) => CriterionValue::Finite(x),
                        Err(_) => CriterionValue::Finite(f64::NAN),
                    },
                };
                CriterionValues {
                    zero_return: eval(zero, &|| numerics::quad(|x| self.zero_return_integrand(x), 0.0, 1.0)),
                    point_recurrence: eval(point, &|| {
                        numerics::quad(|x| self.point_recurrence_integrand(x), 1.0, f64::INFINITY)
                    }),
                    stationarity: eval(stat, &|| self.integrated_tail(1.0)),
                    positive_recurrence: eval(pos, &|| {
                        numerics::quad(|x| self.positive_recurrence_integrand(x), 0.0, 1.0)
                    }),
                }
            }
            None => CriterionValues {
                zero_return: from_divergence(numerics::detect_divergence(&numerics::partials_near_zero(
                    |x| self.zero_return_integrand(x),
                    1.0,
                ))),
                point_recurrence: from_divergence(numerics::detect_divergence(
                    &numerics::partials_to_infinity(|x| self.point_recurrence_integrand(x), 1.0),
                )),
                stationarity: finite_or(self.integrated_tail(1.0)),
                positive_recurrence: from_divergence(numerics::detect_divergence(
                    &numerics::partials_near_zero(|x| self.positive_recurrence_integrand(x), 1.0),
                )),
            },
        };
        report_from_values(values)
    }
}

fn yes_no(v: Option<bool>) -> Verdict {
    match v {
        Some(true) => Verdict::Yes,
        Some(false) => Verdict::No,
        None => Verdict::Inconclusive,
    }
}

fn report_from_values(values: CriterionValues) -> ClassificationReport {
    let zero = values.zero_return.is_finite();
    let point = values.point_recurrence.is_finite().map(|f| !f);
    let stat = values.stationarity.is_finite();
    let pos = values.positive_recurrence.is_finite();
    let jump_chain = match (stat, zero, pos, point) {
        (_, Some(true), _, _) => ChainVerdict::Transient,
        (Some(true), Some(false), Some(true), _) => ChainVerdict::PositiveRecurrent,
        (Some(true), Some(false), Some(false), _) => ChainVerdict::NullRecurrent,
        // without a stationary law: escaping to infinity makes both chains
        // evanescent; otherwise they are recurrent but cannot be positive
        (Some(false), Some(false), _, Some(false)) => ChainVerdict::Transient,
        (Some(false), Some(false), _, Some(true)) => ChainVerdict::NullRecurrent,
        _ => ChainVerdict::Inconclusive,
    };
    ClassificationReport {
        returns_to_zero: yes_no(zero),
        point_recurrent: yes_no(point),
        has_stationary: yes_no(stat),
        jump_chain,
        criterion_values: values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{E, LN_2};

    fn stable_table() -> LifetimeMeasure {
        let pts: Vec<[f64; 2]> = (-40..=40)
            .map(|k| {
                let x = 10f64.powf(k as f64 / 8.0);
                [x, 2.0 / x]
            })
            .collect();
        LifetimeMeasure::from_table(pts).unwrap()
    }

    #[test]
    fn stable_tail_values() {
        assert_eq!(LifetimeMeasure::stable(1.0).unwrap().tail(2.0).unwrap(), 1.0);
        assert_relative_eq!(LifetimeMeasure::stable(0.5).unwrap().tail(3.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(LifetimeMeasure::pareto(1.0, 2.0).unwrap().tail(1.0).unwrap(), 1.0);
    }

    #[test]
    fn tail_rejects_nonpositive() {
        let m = LifetimeMeasure::stable(1.0).unwrap();
        assert!(matches!(m.tail(0.0), Err(Error::Domain(_))));
        assert!(matches!(m.tail(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(LifetimeMeasure::stable(1.5).is_err());
        assert!(LifetimeMeasure::stable(0.0).is_err());
        assert!(LifetimeMeasure::hyperbolic(-1.0).is_err());
        assert!(LifetimeMeasure::pareto(1.0, 0.0).is_err());
        assert!(LifetimeMeasure::from_table(vec![[1.0, 1.0], [2.0, 2.0]]).is_err());
    }

    #[test]
    fn tail_between_closed_forms() {
        let m = LifetimeMeasure::stable(1.0).unwrap();
        assert_relative_eq!(m.tail_between(1.0, E).unwrap(), 2.0, epsilon = 1e-15);
        assert_eq!(m.tail_between(3.0, 3.0).unwrap(), 0.0);
        assert!(m.tail_between(2.0, 1.0).is_err());
        let t = stable_table();
        assert!((t.tail_between(1.0, 2.0).unwrap() - 2.0 * LN_2).abs() < 1e-10);
    }

    #[test]
    fn integrated_tail_values() {
        let p = LifetimeMeasure::pareto(1.0, 2.0).unwrap();
        assert_relative_eq!(p.integrated_tail(2.0).unwrap(), 0.5, epsilon = 1e-15);
        assert!(LifetimeMeasure::stable(1.0).unwrap().integrated_tail(1.0).unwrap().is_infinite());
        let h = LifetimeMeasure::hyperbolic(2.0).unwrap();
        assert_relative_eq!(h.integrated_tail(1.0).unwrap(), 2.0, epsilon = 1e-15);
        let by_quad = numerics::quad(|u| h.tail(u).unwrap(), 1.0, f64::INFINITY).unwrap();
        assert!((by_quad - 2.0).abs() < 1e-10);
    }

    #[test]
    fn inverse_tail_values() {
        assert_eq!(LifetimeMeasure::stable(1.0).unwrap().inverse_tail(2.0).unwrap(), 1.0);
        assert_relative_eq!(LifetimeMeasure::stable(0.5).unwrap().inverse_tail(3.0).unwrap(), 1.0, epsilon = 1e-15);
        let custom = LifetimeMeasure::custom(|x| 2.0 / x, None);
        assert!((custom.inverse_tail(0.5).unwrap() - 4.0).abs() < 1e-10);
    }

    #[test]
    fn inverse_tail_between_values() {
        let s = LifetimeMeasure::stable(1.0).unwrap();
        assert_eq!(s.inverse_tail_between(1.7, 0.0).unwrap(), 1.7);
        assert_relative_eq!(s.inverse_tail_between(1.0, 2.0 * LN_2).unwrap(), 0.5, epsilon = 1e-15);
        let h = LifetimeMeasure::hyperbolic(1.0).unwrap();
        let y = h.inverse_tail_between(0.5, LN_2).unwrap();
        assert_relative_eq!(y, 0.25, epsilon = 1e-15);
        // numerical check of the defining integral
        let integral = numerics::quad(|u| h.tail(u).unwrap(), y, 0.5).unwrap();
        assert!((integral - LN_2).abs() < 1e-10);
    }

    #[test]
    fn inverse_tail_between_no_solution() {
        // ∫₀¹ u^{-1/2} du = 2
        let p = LifetimeMeasure::pareto(1.0, 0.5).unwrap();
        assert!(matches!(p.inverse_tail_between(1.0, 2.5), Err(Error::NoSolution { .. })));
        assert!(p.inverse_tail_between(1.0, 1.5).is_ok());
        let custom = LifetimeMeasure::custom(|x: f64| x.powf(-0.5), None);
        assert!(matches!(custom.inverse_tail_between(1.0, 2.5), Err(Error::NoSolution { .. })));
        let y = custom.inverse_tail_between(1.0, 1.5).unwrap();
        let want = p.inverse_tail_between(1.0, 1.5).unwrap();
        assert!((y - want).abs() < 1e-9, "{y} vs {want}");
    }

    #[test]
    fn log_and_integrated_inverses() {
        let h = LifetimeMeasure::hyperbolic(0.5).unwrap();
        for &x in &[1e-300, 1e-20, 0.3, 1.0, 4.0] {
            assert_relative_eq!(h.inverse_ln_tail(h.ln_tail(x)).unwrap(), x, max_relative = 1e-12);
        }
        let p = LifetimeMeasure::pareto(1.0, 2.0).unwrap();
        assert_relative_eq!(p.inverse_integrated_tail(1.0).unwrap(), 1.0, epsilon = 1e-15);
        let h2 = LifetimeMeasure::hyperbolic(2.0).unwrap();
        for &c in &[0.01, 1.0, 2.0, 5.0] {
            let x = h2.inverse_integrated_tail(c).unwrap();
            assert_relative_eq!(h2.integrated_tail(x).unwrap(), c, max_relative = 1e-12);
        }
        let custom = LifetimeMeasure::custom(|x: f64| x.powi(-2), None);
        assert!((custom.inverse_integrated_tail(1.0).unwrap() - 1.0).abs() < 1e-9);
        assert!(p.inverse_integrated_tail(0.0).is_err());
        assert!(LifetimeMeasure::stable(1.0).unwrap().inverse_integrated_tail(1.0).is_err());
    }

    #[test]
    fn density_matches_tail_differences() {
        let measures = [
            LifetimeMeasure::stable(0.5).unwrap(),
            LifetimeMeasure::hyperbolic(2.0).unwrap(),
            LifetimeMeasure::pareto(1.5, 0.7).unwrap(),
        ];
        let grid = [0.05, 0.3, 0.9, 1.0, 1.7, 6.0];
        for m in &measures {
            for &y in &grid {
                for &x in grid.iter().filter(|&&x| x > y) {
                    let by_quad = numerics::quad(|u| m.density(u).unwrap(), y, x).unwrap();
                    let diff = m.tail(y).unwrap() - m.tail(x).unwrap();
                    assert!((by_quad - diff).abs() <= 1e-8 * diff.abs(), "{m:?} y={y} x={x}");
                }
            }
        }
    }

    #[test]
    fn inverse_tail_round_trip() {
        let measures = [
            LifetimeMeasure::stable(0.3).unwrap(),
            LifetimeMeasure::hyperbolic(2.0).unwrap(),
            LifetimeMeasure::pareto(2.0, 1.5).unwrap(),
            stable_table(),
        ];
        for m in &measures {
            for k in -12..=6 {
                let x = 10f64.powf(f64::from(k) / 3.0);
                let back = m.inverse_tail(m.tail(x).unwrap()).unwrap();
                assert!((back - x).abs() <= 1e-10 * x, "{m:?} x={x} back={back}");
            }
        }
    }

    #[test]
    fn hyperbolic_is_continuous_at_one() {
        let h = LifetimeMeasure::hyperbolic(2.0).unwrap();
        assert_relative_eq!(h.tail(1.0).unwrap(), 2.0);
        assert_relative_eq!(h.tail(1.0 + 1e-12).unwrap(), 2.0, epsilon = 1e-10);
        assert_relative_eq!(h.density(1.0).unwrap(), h.density(1.0 + 1e-12).unwrap(), epsilon = 1e-10);
    }

    #[test]
    fn custom_density_by_difference() {
        let c = LifetimeMeasure::custom(|x| 2.0 / x, None);
        assert_relative_eq!(c.density(0.5).unwrap(), 8.0, max_relative = 1e-8);
    }

    #[test]
    fn table_interpolation_and_extrapolation() {
        let t = stable_table();
        for &x in &[1e-9, 0.3, 1.0, 7.5, 1e9] {
            assert_relative_eq!(t.tail(x).unwrap(), 2.0 / x, max_relative = 1e-12);
        }
        assert_relative_eq!(t.inverse_tail(0.5).unwrap(), 4.0, max_relative = 1e-10);
    }

    #[test]
    fn spec_json_round_trip() {
        let json = r#"{"type":"hyperbolic","alpha":2.0}"#;
        let m = LifetimeMeasure::from_json(json).unwrap();
        assert_eq!(m.spec(), Some(&MeasureSpec::Hyperbolic { alpha: 2.0 }));
        let back = serde_json::to_string(m.spec().unwrap()).unwrap();
        assert_eq!(back, json);
        let table = r#"{"type":"custom","tail_table":[[1.0,2.0],[2.0,1.0],[4.0,0.5]]}"#;
        assert!(LifetimeMeasure::from_json(table).is_ok());
        assert!(LifetimeMeasure::from_json(r#"{"type":"weird"}"#).is_err());
    }

    #[test]
    fn classify_hyperbolic_family() {
        let t = LifetimeMeasure::hyperbolic(0.5).unwrap().classify();
        assert_eq!(t.jump_chain, ChainVerdict::Transient);
        assert_eq!(t.returns_to_zero, Verdict::Yes);
        let n = LifetimeMeasure::hyperbolic(1.0).unwrap().classify();
        assert_eq!(n.jump_chain, ChainVerdict::NullRecurrent);
        let p = LifetimeMeasure::hyperbolic(2.0).unwrap().classify();
        assert_eq!(p.jump_chain, ChainVerdict::PositiveRecurrent);
        assert_eq!(p.has_stationary, Verdict::Yes);
        // ∫₀¹ 2 x^{-2} x² dx = 2
        match p.criterion_values.positive_recurrence {
            CriterionValue::Finite(v) => assert!((v - 2.0).abs() < 1e-9, "{v}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn classify_stable_family() {
        for beta in [0.25, 0.5, 1.0] {
            let r = LifetimeMeasure::stable(beta).unwrap().classify();
            assert_eq!(r.returns_to_zero, Verdict::No);
            assert_eq!(r.point_recurrent, Verdict::No);
            assert_eq!(r.has_stationary, Verdict::No);
        }
    }

    #[test]
    fn classify_custom_table_matches_analytic() {
        let r = stable_table().classify();
        let s = LifetimeMeasure::stable(1.0).unwrap().classify();
        assert_eq!(r.returns_to_zero, s.returns_to_zero);
        assert_eq!(r.point_recurrent, s.point_recurrent);
        assert_eq!(r.has_stationary, s.has_stationary);
    }

    #[test]
    fn classify_custom_callable_pareto() {
        let r = LifetimeMeasure::custom(|x: f64| x.powi(-2), None).classify();
        assert_eq!(r.has_stationary, Verdict::Yes);
        assert_eq!(r.returns_to_zero, Verdict::No);
        assert_eq!(r.jump_chain, ChainVerdict::PositiveRecurrent);
    }

    #[test]
    fn pareto_stationarity_iff_p_above_one() {
        for &p in &[0.3, 0.9, 1.0, 1.1, 2.0, 5.0] {
            for &a in &[0.5, 1.0, 3.0] {
                let r = LifetimeMeasure::pareto(a, p).unwrap().classify();
                assert_eq!(r.has_stationary == Verdict::Yes, p > 1.0, "a={a} p={p}");
            }
        }
    }
}
