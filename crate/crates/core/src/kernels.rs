//! Closed-form laws of the MRCA-age process: the one-step transition kernel
//! (atom, absolutely continuous part and mass at zero), the jump mechanism,
//! the stationary law and total-variation bound, the peak/trough chain
//! kernels with their invariant densities, and the jump intensity.
//!
//! Every function takes the measure by reference and is pure. Exponentials
//! of exponents below -745 are returned as exactly zero.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::measure::{CriterionValue, LifetimeMeasure};
use crate::numerics;

/// `e^v`, flushed to zero below the smallest subnormal exponent.
#[inline]
pub(crate) fn exp_guarded(v: f64) -> f64 {
    if v < -745.0 {
        0.0
    } else {
        v.exp()
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("time must be positive and finite, got {t}")))
    }
}

fn check_state(x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("state must be nonnegative and finite, got {x}")))
    }
}

/// `P^x{A_t = x + t} = M(x+t)/M(x)`, zero from `x = 0`.
pub fn transition_atom(meas: &LifetimeMeasure, x: f64, t: f64) -> Result<f64> {
    check_state(x)?;
    check_time(t)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok(exp_guarded(meas.ln_tail(x + t) - meas.ln_tail(x)))
}

/// Density of `A_t` at `y ∈ (0, x+t)` started from `x`:
/// `[1 − M(x+t)/M(x)]·exp(−∫ᵧ^{x+t} M)·M(y)`, with prefactor 1 at `x = 0`.
pub fn transition_density(meas: &LifetimeMeasure, x: f64, t: f64, y: f64) -> Result<f64> {
    let atom = transition_atom(meas, x, t)?;
    let top = x + t;
    if !(y > 0.0 && y < top) {
        return Err(domain(format!("transition density needs 0 < y < x + t, got y={y}")));
    }
    let prefactor = 1.0 - atom;
    Ok(prefactor * exp_guarded(meas.ln_tail(y) - meas.tail_between(y, top)?))
}

/// `P^x{A_t = 0} = (1 − M(x+t)/M(x))·exp(−∫₀^{x+t} M)`; zero unless `M` is
/// integrable at the origin.
pub fn prob_at_zero(meas: &LifetimeMeasure, x: f64, t: f64) -> Result<f64> {
    let atom = transition_atom(meas, x, t)?;
    let mass = meas.mass_near_zero(x + t)?;
    Ok((1.0 - atom) * exp_guarded(-mass))
}

/// Total jump rate `m(x)/M(x)` out of state `x > 0`.
pub fn jump_rate(meas: &LifetimeMeasure, x: f64) -> Result<f64> {
    meas.tail(x)?;
    Ok((meas.ln_density(x) - meas.ln_tail(x)).exp())
}

fn check_target(x: f64, y: f64) -> Result<()> {
    if y > 0.0 && y < x {
        Ok(())
    } else {
        Err(domain(format!("jump target needs 0 < y < x, got x={x}, y={y}")))
    }
}

/// Density `exp(−∫ᵧˣ M)·M(y)` of the state reached by a jump from `x`.
pub fn jump_target_density(meas: &LifetimeMeasure, x: f64, y: f64) -> Result<f64> {
    check_target(x, y)?;
    Ok(exp_guarded(meas.ln_tail(y) - meas.tail_between(y, x)?))
}

/// `P{target ≤ y} = exp(−∫ᵧˣ M)` for `0 < y ≤ x`; its limit at `y → 0` is
/// the probability of jumping to zero.
pub fn jump_target_cdf(meas: &LifetimeMeasure, x: f64, y: f64) -> Result<f64> {
    if y == x && x > 0.0 {
        return Ok(1.0);
    }
    check_target(x, y)?;
    Ok(exp_guarded(-meas.tail_between(y, x)?))
}

fn integrated_tail_stationary(meas: &LifetimeMeasure, x: f64) -> Result<f64> {
    if !meas.has_stationary_law()? {
        return Err(Error::NoStationaryLaw);
    }
    meas.integrated_tail(x)
}

/// Stationary density `π(x) = M(x)·exp(−I(x))`.
pub fn stationary_density(meas: &LifetimeMeasure, x: f64) -> Result<f64> {
    let i = integrated_tail_stationary(meas, x)?;
    Ok(exp_guarded(meas.ln_tail(x) - i))
}

/// Stationary distribution function `exp(−I(x))`.
pub fn stationary_cdf(meas: &LifetimeMeasure, x: f64) -> Result<f64> {
    let i = integrated_tail_stationary(meas, x)?;
    Ok(exp_guarded(-i))
}

/// Coupling bound on `‖P^x{A_t ∈ ·} − π‖_TV`:
/// `1 − exp(−I(x+t))·[M(x) − M(x+t)]/M(x)`.
pub fn tv_bound(meas: &LifetimeMeasure, x: f64, t: f64) -> Result<f64> {
    let atom = transition_atom(meas, x, t)?;
    let i = integrated_tail_stationary(meas, x + t)?;
    Ok((1.0 - exp_guarded(-i) * (1.0 - atom)).clamp(0.0, 1.0))
}

fn require_stationary(meas: &LifetimeMeasure) -> Result<()> {
    if meas.has_stationary_law()? {
        Ok(())
    } else {
        Err(Error::NoStationaryLaw)
    }
}

fn check_pair(x: f64, z: f64) -> Result<()> {
    if x > 0.0 && z > 0.0 && x.is_finite() && z.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("chain kernels need x, z > 0, got x={x}, z={z}")))
    }
}

/// Integrate over `[a, b]` with extra breakpoints (kinks of the built-in
/// measures) inserted where they fall inside.
fn quad_split<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64]) -> Result<f64> {
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&p| p > a && p < b));
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += numerics::quad(&f, w[0], w[1])?;
    }
    Ok(total)
}

/// Breakpoints of the built-in measures: the hyperbolic family changes
/// form at 1.
const KINKS: [f64; 1] = [1.0];

/// `atom + ∫ density + mass at zero` for the time-`t` kernel from `x`;
/// equals 1 for a proper kernel.
pub fn mass_balance(meas: &LifetimeMeasure, x: f64, t: f64) -> Result<f64> {
    let top = x + t;
    let mut breaks = KINKS.to_vec();
    if x > 0.0 {
        breaks.push(x);
    }
    check_time(t)?;
    check_state(x)?;
    let cont = quad_split(|y| transition_density(meas, x, t, y).unwrap_or(0.0), 0.0, top, &breaks)?;
    Ok(transition_atom(meas, x, t)? + cont + prob_at_zero(meas, x, t)?)
}

/// Continuous density at `y` of the time-`s` kernel followed by the time-`t`
/// kernel from `x`, composing continuous parts, atoms and zero mass.
pub fn composed_transition_density(meas: &LifetimeMeasure, x: f64, s: f64, t: f64, y: f64) -> Result<f64> {
    if !(y > 0.0 && y < x + s + t) {
        return Err(domain(format!("y must lie in (0, {}), got {y}", x + s + t)));
    }
    let top = x + s;
    // atom first, then continuous move from x + s
    let mut total = transition_atom(meas, x, s)? * transition_density(meas, top, t, y)?;
    // continuous move first, then atom: arrives from z = y − t
    let z = y - t;
    if z > 0.0 && z < top {
        total += transition_density(meas, x, s, z)? * transition_atom(meas, z, t)?;
    }
    let p0 = prob_at_zero(meas, x, s)?;
    if p0 > 0.0 && y < t {
        total += p0 * transition_density(meas, 0.0, t, y)?;
    }
    // both moves continuous: z ranges over (max(0, y − t), x + s)
    let lo = z.max(0.0);
    let mut breaks = vec![x, 1.0 - t];
    breaks.extend(KINKS);
    let f = |z: f64| {
        if z <= 0.0 {
            return 0.0;
        }
        let a = transition_density(meas, x, s, z).unwrap_or(0.0);
        if a == 0.0 {
            return 0.0;
        }
        a * transition_density(meas, z, t, y).unwrap_or(0.0)
    };
    total += quad_split(f, lo, top, &breaks)?;
    Ok(total)
}

/// One-step density of the peak chain:
/// `m(z)·∫₀^{x∧z} exp(−∫ᵧˣ M) dy`.
pub fn peak_kernel(meas: &LifetimeMeasure, x: f64, z: f64) -> Result<f64> {
    check_pair(x, z)?;
    require_stationary(meas)?;
    let w = x.min(z);
    let inner = quad_split(
        |y| exp_guarded(-meas.signed_tail_between(y, x)),
        0.0,
        w,
        &[1.0],
    )?;
    Ok(meas.density(z)? * inner)
}

/// One-step density of the trough chain:
/// `M(z)/M(x)·∫_{x∨z}^∞ m(y)·exp(−∫_z^y M) dy`.
pub fn trough_kernel(meas: &LifetimeMeasure, x: f64, z: f64) -> Result<f64> {
    check_pair(x, z)?;
    require_stationary(meas)?;
    let w = x.max(z);
    let lz = meas.ln_tail(z) - meas.ln_tail(x);
    let f = |y: f64| exp_guarded(lz + meas.ln_density(y) - meas.signed_tail_between(z, y));
    let mut total = 0.0;
    if w < 1.0 {
        total += quad_split(f, w, 1.0, &[])?;
    }
    total += numerics::quad(f, w.max(1.0), f64::INFINITY)?;
    Ok(total)
}

/// Unnormalized invariant density `p(x) = m(x)·exp(−I(x))` of the peaks.
pub fn peak_invariant_density(meas: &LifetimeMeasure, x: f64) -> Result<f64> {
    let i = integrated_tail_stationary(meas, x)?;
    meas.tail(x)?;
    Ok(exp_guarded(meas.ln_density(x) - i))
}

/// Unnormalized invariant density `q(x) = M(x)²·exp(−I(x))` of the troughs.
pub fn trough_invariant_density(meas: &LifetimeMeasure, x: f64) -> Result<f64> {
    let i = integrated_tail_stationary(meas, x)?;
    meas.tail(x)?;
    Ok(exp_guarded(2.0 * meas.ln_tail(x) - i))
}

/// Total mass of an invariant density or of the jump intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum Normalizer {
    Finite(f64),
    Diverges,
}

impl Normalizer {
    pub fn finite(self) -> Option<f64> {
        match self {
            Normalizer::Finite(v) => Some(v),
            Normalizer::Diverges => None,
        }
    }
}

fn normalizer<F: Fn(f64) -> Result<f64>>(meas: &LifetimeMeasure, density: F) -> Result<Normalizer> {
    require_stationary(meas)?;
    match meas.classify().criterion_values.positive_recurrence {
        CriterionValue::Infinite => return Ok(Normalizer::Diverges),
        CriterionValue::Inconclusive => return Err(Error::Inconclusive("∫₀¹ m·exp(−∫ₓ¹ M)")),
        CriterionValue::Finite(_) => {}
    }
    let f = |x: f64| density(x).unwrap_or(f64::NAN);
    let total = quad_split(f, 0.0, 1.0, &[])? + numerics::quad(f, 1.0, f64::INFINITY)?;
    Ok(Normalizer::Finite(total))
}

/// `∫ p`, finite exactly when the jump chains are positive recurrent.
pub fn peak_normalizer(meas: &LifetimeMeasure) -> Result<Normalizer> {
    normalizer(meas, |x| peak_invariant_density(meas, x))
}

/// `∫ q`, which equals `∫ p` by an integration by parts.
pub fn trough_normalizer(meas: &LifetimeMeasure) -> Result<Normalizer> {
    normalizer(meas, |x| trough_invariant_density(meas, x))
}

/// Intensity `ρ = ∫ m(x)·exp(−I(x)) dx` of jump times of the stationary
/// process.
pub fn jump_intensity(meas: &LifetimeMeasure) -> Result<Normalizer> {
    peak_normalizer(meas)
}

/// Closed forms for the stable lifetime measure `M(x) = (1+β)/(βx)` and
/// the log-time-changed process `B_s = A_{e^s}`-type rescaling.
pub mod stable {
    use crate::error::{domain, Result};

    fn check_beta(beta: f64) -> Result<f64> {
        if beta > 0.0 && beta <= 1.0 {
            Ok((1.0 + beta) / beta)
        } else {
            Err(domain(format!("beta must lie in (0, 1], got {beta}")))
        }
    }

    /// `(1+β)·t·y^{1/β} / (β·(x+t)^{2+1/β})` for `0 < y < x+t`.
    pub fn transition_density(beta: f64, x: f64, t: f64, y: f64) -> Result<f64> {
        let c = check_beta(beta)?;
        if !(x >= 0.0 && t > 0.0 && y > 0.0 && y < x + t) {
            return Err(domain("stable transition density needs x ≥ 0, t > 0, 0 < y < x+t"));
        }
        Ok(c * t * y.powf(1.0 / beta) / (x + t).powf(2.0 + 1.0 / beta))
    }

    /// `x/(x+t)`.
    pub fn transition_atom(beta: f64, x: f64, t: f64) -> Result<f64> {
        check_beta(beta)?;
        if !(x >= 0.0 && t > 0.0) {
            return Err(domain("stable atom needs x ≥ 0, t > 0"));
        }
        Ok(x / (x + t))
    }

    /// `1/x`.
    pub fn jump_rate(beta: f64, x: f64) -> Result<f64> {
        check_beta(beta)?;
        if !(x > 0.0) {
            return Err(domain("stable jump rate needs x > 0"));
        }
        Ok(1.0 / x)
    }

    /// `(1 + 1/β)·y^{1/β}/x^{1+1/β}` on `(0, x)`.
    pub fn jump_target_density(beta: f64, x: f64, y: f64) -> Result<f64> {
        let c = check_beta(beta)?;
        if !(y > 0.0 && y < x) {
            return Err(domain("stable jump target needs 0 < y < x"));
        }
        Ok(c * y.powf(1.0 / beta) / x.powf(c))
    }

    /// `(y/x)^{1+1/β}`.
    pub fn jump_target_cdf(beta: f64, x: f64, y: f64) -> Result<f64> {
        let c = check_beta(beta)?;
        if !(y > 0.0 && y <= x) {
            return Err(domain("stable jump target needs 0 < y ≤ x"));
        }
        Ok((y / x).powf(c))
    }

    /// Distribution function `u^{1+1/β}` of the `Beta(1+1/β, 1)` limit of
    /// `A_t/t`.
    pub fn beta_limit_cdf(beta: f64, u: f64) -> Result<f64> {
        let c = check_beta(beta)?;
        if !(0.0..=1.0).contains(&u) {
            return Err(domain(format!("u must lie in [0, 1], got {u}")));
        }
        Ok(u.powf(c))
    }

    /// Tail `(1+β)/(β(e^y − 1))` of the lifetime measure after the
    /// logarithmic time change.
    pub fn logscale_tail(beta: f64, y: f64) -> Result<f64> {
        let c = check_beta(beta)?;
        if !(y > 0.0) {
            return Err(domain(format!("y must be positive, got {y}")));
        }
        Ok(c / y.exp_m1())
    }

    /// Stationary density `(1+β)/β·e^{−x}(1 − e^{−x})^{1/β}` of the
    /// log-time-changed process.
    pub fn logscale_stationary_density(beta: f64, x: f64) -> Result<f64> {
        let c = check_beta(beta)?;
        if !(x > 0.0) {
            return Err(domain(format!("x must be positive, got {x}")));
        }
        Ok(c * (-x).exp() * (-(-x).exp_m1()).powf(1.0 / beta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{E, LN_2};

    fn pareto12() -> LifetimeMeasure {
        LifetimeMeasure::pareto(1.0, 2.0).unwrap()
    }

    #[test]
    fn stable_kernel_values() {
        let m = LifetimeMeasure::stable(1.0).unwrap();
        assert_relative_eq!(transition_density(&m, 1.0, 1.0, 1.0).unwrap(), 0.25, epsilon = 1e-14);
        assert_relative_eq!(transition_density(&m, 0.0, 1.0, 0.5).unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(transition_atom(&m, 1.0, 1.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(prob_at_zero(&m, 1.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(jump_rate(&m, 2.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(jump_rate(&m, 0.1).unwrap(), 10.0, epsilon = 1e-13);
    }

    #[test]
    fn kernel_domain_errors() {
        let m = pareto12();
        assert!(transition_density(&m, 1.0, 1.0, 2.0).is_err());
        assert!(transition_density(&m, 1.0, 1.0, 0.0).is_err());
        assert!(jump_rate(&m, 0.0).is_err());
        assert!(jump_target_density(&m, 1.0, 1.5).is_err());
    }

    #[test]
    fn atom_limits() {
        let h = LifetimeMeasure::hyperbolic(2.0).unwrap();
        assert_relative_eq!(transition_atom(&h, 0.5, 0.25).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert!((transition_atom(&h, 0.5, 1e-12).unwrap() - 1.0).abs() < 1e-9);
        let p = LifetimeMeasure::pareto(1.0, 0.5).unwrap();
        assert!(prob_at_zero(&p, 0.5, 1e-12).unwrap() < 1e-9);
    }

    #[test]
    fn jump_target_examples() {
        let h = LifetimeMeasure::hyperbolic(1.0).unwrap();
        assert_relative_eq!(jump_target_cdf(&h, 0.5, 0.25).unwrap(), 0.5, epsilon = 1e-15);
        let by_quad = numerics::quad(|u| h.tail(u).unwrap(), 0.25, 0.5).unwrap();
        assert!(((-by_quad).exp() - 0.5).abs() < 1e-10);
        assert_eq!(jump_target_cdf(&h, 0.5, 0.5).unwrap(), 1.0);
        let s = LifetimeMeasure::stable(0.5).unwrap();
        for &y in &[0.1, 0.5, 0.9] {
            assert_relative_eq!(jump_target_density(&s, 1.0, y).unwrap(), 3.0 * y * y, max_relative = 1e-12);
        }
    }

    #[test]
    fn pareto_stationary_law() {
        let m = pareto12();
        assert_relative_eq!(stationary_density(&m, 1.0).unwrap(), (-1.0f64).exp(), epsilon = 1e-15);
        assert!(stationary_cdf(&m, 1e12).unwrap() > 1.0 - 1e-11);
        let mass = numerics::quad(|x| stationary_density(&m, x).unwrap(), 0.0, f64::INFINITY).unwrap();
        assert!((mass - 1.0).abs() < 1e-9);
        let s = LifetimeMeasure::stable(1.0).unwrap();
        assert_eq!(stationary_density(&s, 1.0), Err(Error::NoStationaryLaw));
    }

    #[test]
    fn tv_bound_values() {
        let m = pareto12();
        assert_relative_eq!(tv_bound(&m, 1.0, 1.0).unwrap(), 1.0 - (-0.5f64).exp() * 0.75, epsilon = 1e-15);
        assert!(tv_bound(&m, 1.0, 1e9).unwrap() < 1e-8);
        assert!((tv_bound(&m, 1.0, 1e-12).unwrap() - 1.0).abs() < 1e-9);
        let mut prev = 1.0;
        for k in 0..40 {
            let b = tv_bound(&m, 1.0, 0.1 * f64::from(k) + 0.01).unwrap();
            assert!(b <= prev && (0.0..=1.0).contains(&b));
            prev = b;
        }
    }

    /// Exact `‖K_t(x, ·) − π‖_TV` by quadrature.
    fn exact_tv(m: &LifetimeMeasure, x: f64, t: f64) -> f64 {
        let atom = transition_atom(m, x, t).unwrap();
        let top = x + t;
        let diff = |y: f64| (transition_density(m, x, t, y).unwrap() - stationary_density(m, y).unwrap()).abs();
        let inside = numerics::quad(diff, 0.0, top).unwrap();
        let outside = 1.0 - stationary_cdf(m, top).unwrap();
        0.5 * (atom + inside + outside + prob_at_zero(m, x, t).unwrap())
    }

    #[test]
    fn tv_bound_dominates_exact_distance() {
        for m in [pareto12(), LifetimeMeasure::hyperbolic(2.0).unwrap(), LifetimeMeasure::pareto(2.0, 3.0).unwrap()] {
            for &x in &[0.0, 0.5, 1.0, 2.0] {
                for &t in &[0.1, 1.0, 5.0] {
                    let tv = exact_tv(&m, x, t);
                    let bound = tv_bound(&m, x, t).unwrap();
                    assert!(tv <= bound + 1e-9, "{m:?} x={x} t={t}: tv {tv} > bound {bound}");
                }
            }
        }
    }

    #[test]
    fn mass_balance_on_grid() {
        let measures = [
            LifetimeMeasure::stable(0.5).unwrap(),
            LifetimeMeasure::hyperbolic(0.5).unwrap(),
            LifetimeMeasure::hyperbolic(2.0).unwrap(),
            pareto12(),
            LifetimeMeasure::pareto(1.0, 0.5).unwrap(),
        ];
        for m in &measures {
            for &x in &[0.0, 0.5, 1.0, 2.0] {
                for &t in &[0.1, 1.0, 5.0] {
                    let total = mass_balance(m, x, t).unwrap();
                    assert!((total - 1.0).abs() < 1e-8, "{m:?} x={x} t={t}: {total}");
                }
            }
        }
    }

    #[test]
    fn chapman_kolmogorov() {
        let m = LifetimeMeasure::hyperbolic(2.0).unwrap();
        let (x, s, t) = (1.0, 0.5, 0.5);
        for k in 1..40 {
            let y = 0.05 * f64::from(k);
            let direct = transition_density(&m, x, s + t, y).unwrap();
            let composed = composed_transition_density(&m, x, s, t, y).unwrap();
            assert!((direct - composed).abs() < 1e-6, "y={y}: {direct} vs {composed}");
        }
        let atoms = transition_atom(&m, x, s).unwrap() * transition_atom(&m, x + s, t).unwrap();
        assert!((atoms - transition_atom(&m, x, s + t).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn pareto_half_has_zero_mass() {
        // ∫₀^{x+t} u^{-1/2} du = 2√(x+t)
        let m = LifetimeMeasure::pareto(1.0, 0.5).unwrap();
        let atom = (0.5f64 / 1.0).sqrt();
        assert_relative_eq!(prob_at_zero(&m, 0.5, 0.5).unwrap(), (1.0 - atom) * (-2.0f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn stationarity_is_preserved() {
        let m = pareto12();
        let t = 0.7;
        for &y in &[0.2, 0.5, 1.0, 3.0] {
            let atom_in = if y > t {
                stationary_density(&m, y - t).unwrap() * transition_atom(&m, y - t, t).unwrap()
            } else {
                0.0
            };
            let lo = (y - t).max(0.0);
            let f = |x: f64| {
                if x == 0.0 {
                    return 0.0;
                }
                stationary_density(&m, x).unwrap() * transition_density(&m, x, t, y).unwrap()
            };
            let cont = numerics::quad(f, lo, lo + 1.0).unwrap() + numerics::quad(f, lo + 1.0, f64::INFINITY).unwrap();
            let pi = stationary_density(&m, y).unwrap();
            assert!((atom_in + cont - pi).abs() < 1e-6, "y={y}: {} vs {pi}", atom_in + cont);
        }
    }

    #[test]
    fn peak_kernel_is_a_probability_kernel() {
        let m = pareto12();
        for &x in &[0.5, 1.0, 2.0] {
            let f = |z: f64| peak_kernel(&m, x, z).unwrap();
            let total = quad_split(f, 0.0, x, &[]).unwrap() + numerics::quad(f, x, f64::INFINITY).unwrap();
            assert!((total - 1.0).abs() < 1e-8, "x={x}: {total}");
        }
    }

    #[test]
    fn chain_kernels_detailed_balance() {
        let m = pareto12();
        let grid = [0.3, 0.7, 1.0, 1.6, 4.0];
        for &x in &grid {
            for &z in &grid {
                let lhs = peak_invariant_density(&m, x).unwrap() * peak_kernel(&m, x, z).unwrap();
                let rhs = peak_invariant_density(&m, z).unwrap() * peak_kernel(&m, z, x).unwrap();
                assert!((lhs - rhs).abs() < 1e-8, "peak x={x} z={z}: {lhs} {rhs}");
                let lhs = trough_invariant_density(&m, x).unwrap() * trough_kernel(&m, x, z).unwrap();
                let rhs = trough_invariant_density(&m, z).unwrap() * trough_kernel(&m, z, x).unwrap();
                assert!((lhs - rhs).abs() < 1e-8, "trough x={x} z={z}: {lhs} {rhs}");
            }
        }
    }

    #[test]
    fn normalizers_and_intensity() {
        let m = pareto12();
        let p = peak_normalizer(&m).unwrap().finite().unwrap();
        let q = trough_normalizer(&m).unwrap().finite().unwrap();
        assert!((p - 2.0).abs() < 1e-9 && (q - 2.0).abs() < 1e-9, "{p} {q}");
        assert!((jump_intensity(&m).unwrap().finite().unwrap() - 2.0).abs() < 1e-9);
        let h2 = LifetimeMeasure::hyperbolic(2.0).unwrap();
        let want = 1.0 + (-2.0f64).exp();
        assert!((peak_normalizer(&h2).unwrap().finite().unwrap() - want).abs() < 1e-9);
        assert!((trough_normalizer(&h2).unwrap().finite().unwrap() - want).abs() < 1e-9);
        let h1 = LifetimeMeasure::hyperbolic(1.0).unwrap();
        assert_eq!(peak_normalizer(&h1).unwrap(), Normalizer::Diverges);
        assert_eq!(trough_normalizer(&h1).unwrap(), Normalizer::Diverges);
        assert_eq!(jump_intensity(&h1).unwrap(), Normalizer::Diverges);
    }

    #[test]
    fn generic_matches_stable_closed_forms() {
        for beta in [0.25, 0.5, 0.8, 1.0] {
            let m = LifetimeMeasure::stable(beta).unwrap();
            let pts: Vec<f64> = (1..=10).map(|k| 0.3 * f64::from(k)).collect();
            for &x in &pts {
                for &t in &pts {
                    assert!((transition_atom(&m, x, t).unwrap() - stable::transition_atom(beta, x, t).unwrap()).abs() < 1e-12);
                    for &u in &pts {
                        let y = (x + t) * u / 3.1;
                        let g = transition_density(&m, x, t, y).unwrap();
                        let c = stable::transition_density(beta, x, t, y).unwrap();
                        assert!((g - c).abs() <= 1e-10 * c.max(1.0), "beta={beta} x={x} t={t} y={y}");
                    }
                }
                assert!((jump_rate(&m, x).unwrap() - stable::jump_rate(beta, x).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn logscale_laws() {
        for beta in [0.5, 1.0] {
            let mass = numerics::quad(|x| stable::logscale_stationary_density(beta, x).unwrap(), 0.0, f64::INFINITY).unwrap();
            assert!((mass - 1.0).abs() < 1e-10);
        }
        // Beta(2, 1) has mean 2/3
        let mean = numerics::quad(|u| 1.0 - stable::beta_limit_cdf(1.0, u).unwrap(), 0.0, 1.0).unwrap();
        assert!((mean - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(stable::beta_limit_cdf(0.7, 1.0).unwrap(), 1.0);
        assert_relative_eq!(stable::logscale_tail(1.0, LN_2).unwrap(), 2.0, epsilon = 1e-14);
        assert_relative_eq!(stable::logscale_tail(1.0, 1.0).unwrap(), 2.0 / (E - 1.0), epsilon = 1e-14);
    }
}
