//! The critical `(1+β)`-stable branching process `X`, its version `Y`
//! conditioned on non-extinction and the interpolating family `Z^δ`.
//!
//! All three have explicit Laplace transforms of the form
//! `exp(−x θ_t) (1 + tθ^β)^{−δ}` with `θ_t = θ (1 + tθ^β)^{−1/β}`, where
//! `δ = 0` gives `X` and `δ = (β+1)/β` gives `Y`. Started at zero, `Z^δ_t`
//! is a `β`-stable subordinator evaluated at an independent gamma time,
//! which gives an exact sampler.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{domain, Result};
use crate::numerics;
use crate::simulate::uniform;

/// Parameters of a member of the `δ`-family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableBranchingParams {
    pub beta: f64,
    pub delta: f64,
    pub x0: f64,
}

impl StableBranchingParams {
    pub fn new(beta: f64, delta: f64, x0: f64) -> Result<Self> {
        check_beta(beta)?;
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(domain(format!("delta must be nonnegative, got {delta}")));
        }
        if !(x0 >= 0.0 && x0.is_finite()) {
            return Err(domain(format!("initial mass must be nonnegative, got {x0}")));
        }
        Ok(StableBranchingParams { beta, delta, x0 })
    }

    /// The unconditioned process `X`.
    pub fn unconditioned(beta: f64, x0: f64) -> Result<Self> {
        Self::new(beta, 0.0, x0)
    }

    /// The process `Y` conditioned on non-extinction.
    pub fn conditioned(beta: f64, x0: f64) -> Result<Self> {
        Self::new(beta, conditioned_delta(beta), x0)
    }

    /// `E exp(−θ Z_t)` from `Z_0 = x0`.
    pub fn laplace(&self, t: f64, theta: f64) -> f64 {
        laplace_delta_family(self.beta, self.x0, t, theta, self.delta)
    }
}

/// One draw of the pair `(S₁, G)` behind [`sample_z_from_zero`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubordinatorDraw {
    /// Standard positive `β`-stable variate, `E e^{−θS₁} = e^{−θ^β}`.
    pub s1: f64,
    /// Gamma variate with shape `δ` and unit scale.
    pub g: f64,
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta <= 1.0 {
        Ok(())
    } else {
        Err(domain(format!("beta must lie in (0, 1], got {beta}")))
    }
}

/// Index of the conditioned process, `(β+1)/β`.
pub fn conditioned_delta(beta: f64) -> f64 {
    (beta + 1.0) / beta
}

/// `1 + tθ^β`.
fn base(beta: f64, t: f64, theta: f64) -> f64 {
    1.0 + t * theta.powf(beta)
}

/// The argument `θ_t = θ (1 + tθ^β)^{−1/β}` solving the backward equation.
pub fn evolved_argument(beta: f64, t: f64, theta: f64) -> f64 {
    theta * base(beta, t, theta).powf(-1.0 / beta)
}

/// `E exp(−θ X_t)` from `X_0 = x`.
pub fn laplace_x(beta: f64, x: f64, t: f64, theta: f64) -> f64 {
    (-x * evolved_argument(beta, t, theta)).exp()
}

/// `E exp(−θ Y_t)` from `Y_0 = y`.
pub fn laplace_y(beta: f64, y: f64, t: f64, theta: f64) -> f64 {
    laplace_delta_family(beta, y, t, theta, conditioned_delta(beta))
}

/// `P{X_t = 0}` from `X_0 = x`: `exp(−x / t^{1/β})`.
pub fn extinction_prob(beta: f64, x: f64, t: f64) -> f64 {
    (-x / t.powf(1.0 / beta)).exp()
}

/// `E exp(−θ Z^δ_t)` from `Z_0 = x`.
pub fn laplace_delta_family(beta: f64, x: f64, t: f64, theta: f64, delta: f64) -> f64 {
    laplace_x(beta, x, t, theta) * base(beta, t, theta).powf(-delta)
}

/// `|P_s P_t e^{−θ·}(x) − P_{s+t} e^{−θ·}(x)|`, composing through the
/// evolved argument.
pub fn semigroup_residual(beta: f64, delta: f64, s: f64, t: f64, theta: f64, x: f64) -> f64 {
    let inner = evolved_argument(beta, t, theta);
    let composed = laplace_delta_family(beta, x, s, inner, delta) * base(beta, t, theta).powf(-delta);
    (composed - laplace_delta_family(beta, x, s + t, theta, delta)).abs()
}

/// `|P^{δ'}(x') P^{δ''}(x'') − P^{δ'+δ''}(x'+x'')|` at time `t`.
pub fn additivity_residual(beta: f64, t: f64, theta: f64, parts: [(f64, f64); 2]) -> f64 {
    let [(x1, d1), (x2, d2)] = parts;
    let product = laplace_delta_family(beta, x1, t, theta, d1) * laplace_delta_family(beta, x2, t, theta, d2);
    (product - laplace_delta_family(beta, x1 + x2, t, theta, d1 + d2)).abs()
}

/// Scaling residual: `b^{−1/β} Z_{bt}` from `b^{1/β} x` has the law of `Z_t`
/// from `x`.
pub fn self_similarity_residual(beta: f64, delta: f64, b: f64, x: f64, t: f64, theta: f64) -> f64 {
    let scale = b.powf(1.0 / beta);
    let scaled = laplace_delta_family(beta, scale * x, b * t, theta / scale, delta);
    (scaled - laplace_delta_family(beta, x, t, theta, delta)).abs()
}

/// `|E e^{−θY_t} + (1/y) ∂_θ E e^{−θX_t}|` from `y`, by central difference.
pub fn size_bias_residual(beta: f64, y: f64, t: f64, theta: f64) -> f64 {
    let h = 1e-5 * theta.max(1e-3);
    let derivative = (laplace_x(beta, y, t, theta + h) - laplace_x(beta, y, t, theta - h)) / (2.0 * h);
    (laplace_y(beta, y, t, theta) + derivative / y).abs()
}

/// Standard positive `β`-stable variate by Kanter's representation
/// `S = (A(U)/E)^{(1−β)/β}` with `A` Zolotarev's function.
pub fn sample_positive_stable<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> Result<f64> {
    check_beta(beta)?;
    if beta == 1.0 {
        return Ok(1.0);
    }
    let u = PI * uniform(rng);
    let e: f64 = Exp1.sample(rng);
    let a = (beta * u).sin().powf(beta / (1.0 - beta)) * ((1.0 - beta) * u).sin() / u.sin().powf(1.0 / (1.0 - beta));
    Ok((a / e).powf((1.0 - beta) / beta))
}

/// Draw `(S₁, G)` with `G ~ Gamma(δ, 1)`.
pub fn sample_subordinators<R: Rng + ?Sized>(beta: f64, delta: f64, rng: &mut R) -> Result<SubordinatorDraw> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(domain(format!("delta must be nonnegative, got {delta}")));
    }
    let g = if delta == 0.0 {
        0.0
    } else {
        Gamma::new(delta, 1.0).map_err(|e| domain(e.to_string()))?.sample(rng)
    };
    Ok(SubordinatorDraw { s1: sample_positive_stable(beta, rng)?, g })
}

/// Exact draw of `Z^δ_t` from `Z_0 = 0`: the stable subordinator at the
/// gamma time `tG`, i.e. `(tG)^{1/β} S₁`.
pub fn sample_z_from_zero<R: Rng + ?Sized>(t: f64, beta: f64, delta: f64, rng: &mut R) -> Result<f64> {
    check_beta(beta)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(domain(format!("time must be nonnegative, got {t}")));
    }
    if delta == 0.0 || t == 0.0 {
        sample_subordinators(beta, delta, rng)?;
        return Ok(0.0);
    }
    let d = sample_subordinators(beta, delta, rng)?;
    Ok((t * d.g).powf(1.0 / beta) * d.s1)
}

/// Exact draw of `X_t` from `x` for `β = 1`: a Poisson(`x/t`) number of
/// exponential clusters with mean `t`.
pub fn sample_x_quadratic<R: Rng + ?Sized>(x: f64, t: f64, rng: &mut R) -> Result<f64> {
    if !(x >= 0.0 && t > 0.0 && x.is_finite() && t.is_finite()) {
        return Err(domain(format!("need x >= 0 and t > 0, got x={x}, t={t}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let count: f64 = Poisson::new(x / t).map_err(|e| domain(e.to_string()))?.sample(rng);
    let mut total = 0.0;
    for _ in 0..count as u64 {
        let e: f64 = Exp1.sample(rng);
        total += t * e;
    }
    Ok(total)
}

/// Lévy density `(1+β)/Γ(1−β) x^{−(1+β)}` of the branching mechanism.
pub fn levy_density(beta: f64, x: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(domain(format!("beta must lie in (0, 1), got {beta}")));
    }
    if !(x > 0.0) {
        return Err(domain(format!("x must be positive, got {x}")));
    }
    Ok((1.0 + beta) / gamma(1.0 - beta) * x.powf(-(1.0 + beta)))
}

/// Lifetime tail `M(t)` recomputed from branching: integrates the survival
/// probability of a family of initial mass `x` against the Lévy measure.
pub fn lifetime_tail_from_branching(beta: f64, t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(domain(format!("t must be positive, got {t}")));
    }
    levy_density(beta, 1.0)?;
    let c = (1.0 + beta) / gamma(1.0 - beta);
    let scale = t.powf(1.0 / beta);
    // written as x^{−β} times a bounded ratio so nothing overflows near 0
    let f = |x: f64| c * x.powf(-beta) * (-(-x / scale).exp_m1() / x);
    Ok(numerics::quad(f, 0.0, scale)? + numerics::quad(f, scale, f64::INFINITY)?)
}

/// Relative deviation of [`lifetime_tail_from_branching`] from `(1+β)/(βt)`.
pub fn lemma51_check(beta: f64, t: f64) -> Result<f64> {
    let exact = (1.0 + beta) / (beta * t);
    Ok((lifetime_tail_from_branching(beta, t)? / exact - 1.0).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::LifetimeMeasure;
    use crate::simulate::RngStream;
    use crate::stats;
    use statrs::function::erf::erfc;

    const BETAS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

    #[test]
    fn closed_form_values() {
        assert!((laplace_x(1.0, 1.0, 1.0, 1.0) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((laplace_delta_family(1.0, 0.0, 1.0, 1.0, 2.0) - 0.25).abs() < 1e-15);
        assert!((extinction_prob(1.0, 2.0, 2.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(extinction_prob(0.5, 0.0, 1.0), 1.0);
        for &b in &BETAS {
            assert_eq!(laplace_x(b, 2.0, 1.0, 0.0), 1.0);
            assert_eq!(laplace_y(b, 2.0, 1.0, 0.0), 1.0);
            // large θ recovers the extinction probability
            assert!((laplace_x(b, 1.5, 2.0, 1e40) - extinction_prob(b, 1.5, 2.0)).abs() < 1e-5);
        }
    }

    #[test]
    fn family_reductions() {
        for &b in &BETAS {
            for &x in &[0.0, 0.3, 2.0] {
                for &th in &[0.1, 1.0, 7.0] {
                    assert_eq!(laplace_delta_family(b, x, 1.3, th, 0.0), laplace_x(b, x, 1.3, th));
                    let y = laplace_y(b, x, 1.3, th);
                    let p = StableBranchingParams::conditioned(b, x).unwrap();
                    assert_eq!(y, p.laplace(1.3, th));
                    if x > 0.0 {
                        assert!(size_bias_residual(b, x, 1.3, th) < 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn transform_identities() {
        for &b in &BETAS {
            for &s in &[0.1, 1.0, 4.0] {
                for &th in &[0.01, 1.0, 50.0] {
                    assert!(semigroup_residual(b, 1.7, s, 0.6, th, 0.8) < 1e-12);
                    assert!(additivity_residual(b, s, th, [(0.4, 0.5), (1.1, 2.0)]) < 1e-14);
                    assert!(self_similarity_residual(b, 1.2, 3.0, 0.7, s, th) < 1e-13);
                }
            }
        }
    }

    #[test]
    fn transforms_are_monotone() {
        let v = |x, th, d| laplace_delta_family(0.5, x, 1.0, th, d);
        assert!(v(1.0, 1.0, 1.0) > v(2.0, 1.0, 1.0));
        assert!(v(1.0, 1.0, 1.0) > v(1.0, 2.0, 1.0));
        assert!(v(1.0, 1.0, 1.0) > v(1.0, 1.0, 2.0));
        assert!(v(1.0, 1.0, 1.0) <= 1.0 && v(1.0, 1.0, 1.0) > 0.0);
    }

    #[test]
    fn params_validation() {
        assert!(StableBranchingParams::new(0.0, 1.0, 1.0).is_err());
        assert!(StableBranchingParams::new(1.5, 1.0, 1.0).is_err());
        assert!(StableBranchingParams::new(0.5, -1.0, 1.0).is_err());
        assert_eq!(StableBranchingParams::conditioned(1.0, 0.0).unwrap().delta, 2.0);
    }

    #[test]
    fn half_stable_matches_levy_law() {
        // β = 1/2: S₁ is Lévy with scale 1/2, CDF erfc(1/(2√s))
        let s: Vec<f64> = crate::simulate::fan_out(3, 20_000, |_, rng| sample_positive_stable(0.5, rng).unwrap());
        let ks = stats::ks_one_sample(&s, |x| erfc(0.5 / x.sqrt())).unwrap();
        assert!(ks.passes(1e-3), "{ks:?}");
        assert_eq!(sample_positive_stable(1.0, &mut RngStream::new(0, 0).rng()).unwrap(), 1.0);
    }

    #[test]
    fn stable_laplace_transform() {
        for &b in &[0.3, 0.7] {
            let s: Vec<f64> = crate::simulate::fan_out(4, 50_000, |_, rng| sample_positive_stable(b, rng).unwrap());
            for est in stats::empirical_laplace(&s, &[0.5, 1.0, 2.0]) {
                let truth = (-est.theta.powf(b)).exp();
                assert!(est.z_score(truth).abs() < 4.0, "beta {b}: {est:?}");
            }
        }
    }

    #[test]
    fn z_from_zero_special_cases() {
        let mut rng = RngStream::new(1, 0).rng();
        assert_eq!(sample_z_from_zero(1.0, 0.5, 0.0, &mut rng).unwrap(), 0.0);
        let z: Vec<f64> = crate::simulate::fan_out(6, 20_000, |_, rng| sample_z_from_zero(2.5, 1.0, 2.0, rng).unwrap() / 2.5);
        // Gamma(2, 1) CDF
        let ks = stats::ks_one_sample(&z, |x| 1.0 - (1.0 + x) * (-x).exp()).unwrap();
        assert!(ks.passes(1e-3), "{ks:?}");
    }

    #[test]
    fn quadratic_x_sampler_matches_transform() {
        let draws: Vec<f64> = crate::simulate::fan_out(8, 50_000, |_, rng| sample_x_quadratic(1.5, 0.8, rng).unwrap());
        for est in stats::empirical_laplace(&draws, &[0.2, 1.0, 5.0]) {
            let truth = laplace_x(1.0, 1.5, 0.8, est.theta);
            assert!(est.z_score(truth).abs() < 4.0, "{est:?}");
        }
        let zero = draws.iter().filter(|&&x| x == 0.0).count() as f64 / draws.len() as f64;
        let p = extinction_prob(1.0, 1.5, 0.8);
        assert!((zero - p).abs() < 4.0 * (p * (1.0 - p) / draws.len() as f64).sqrt());
    }

    #[test]
    fn lifetime_tail_identity() {
        for &b in &[0.3, 0.5, 0.7, 0.9] {
            for &t in &[0.5, 1.0, 2.0] {
                assert!(lemma51_check(b, t).unwrap() < 1e-6, "beta {b}, t {t}");
            }
        }
        // ties the branching side to the lifetime measure of the genealogy
        for &b in &[0.25, 0.5, 0.9] {
            let m = LifetimeMeasure::stable(b).unwrap();
            for &t in &[0.3, 1.0, 5.0] {
                let branching = lifetime_tail_from_branching(b, t).unwrap();
                assert!((m.tail(t).unwrap() / branching - 1.0).abs() < 1e-6);
            }
        }
        assert!(levy_density(1.0, 1.0).is_err());
    }
}
