//! Statistics for Monte Carlo versus formula comparisons: Kolmogorov–Smirnov
//! tests, binned chi-square goodness of fit, empirical Laplace transforms
//! with standard errors, binned total-variation estimates and exact Poisson
//! rate intervals.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::numerics;

/// Default significance level of every acceptance comparison.
pub const DEFAULT_ALPHA: f64 = 1e-3;

/// Per-test level for `m` simultaneous tests at family level `alpha`.
pub fn bonferroni(alpha: f64, m: usize) -> f64 {
    alpha / m.max(1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

impl KsResult {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

/// `P{K > λ}` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.0 {
        // Jacobi-theta form converges fast for small λ
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let mut cdf = 0.0;
        for k in 1..=50 {
            let j = f64::from(2 * k - 1);
            let term = (-j * j * c).exp();
            cdf += term;
            if term < 1e-18 {
                break;
            }
        }
        cdf *= (2.0 * std::f64::consts::PI).sqrt() / lambda;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut sf = 0.0;
    for k in 1..=100 {
        let kf = f64::from(k);
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sf += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sf).clamp(0.0, 1.0)
}

/// Asymptotic p-value with Stephens' small-sample correction.
fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    kolmogorov_sf((s + 0.12 + 0.11 / s) * d)
}

fn sorted_finite(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::DegenerateSample("sample contains NaN".into()));
    }
    if samples.len() < 8 {
        return Err(Error::DegenerateSample(format!("need at least 8 observations, got {}", samples.len())));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// One-sample Kolmogorov–Smirnov test of `samples` against `cdf`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult> {
    let v = sorted_finite(samples)?;
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        if f.is_nan() {
            return Err(Error::DegenerateSample(format!("cdf is NaN at {x}")));
        }
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    Ok(KsResult { statistic: d, p_value: ks_p_value(d, n), n: v.len() })
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    let a = sorted_finite(a)?;
    let b = sorted_finite(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let n_eff = na * nb / (na + nb);
    Ok(KsResult { statistic: d, p_value: ks_p_value(d, n_eff), n: a.len().min(b.len()) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Number of cells after merging sparse ones.
    pub cells: usize,
}

/// Chi-square goodness of fit of `observed` counts against `expected`
/// counts. Adjacent cells are merged until each expects at least five.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> Result<ChiSquareResult> {
    if observed.len() != expected.len() || observed.is_empty() {
        return Err(Error::DegenerateSample("observed and expected lengths differ".into()));
    }
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &e) in observed.iter().zip(expected) {
        o_acc += o as f64;
        e_acc += e;
        if e_acc >= 5.0 {
            cells.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => cells.push((o_acc, e_acc)),
        }
    }
    if cells.len() < 2 {
        return Err(Error::DegenerateSample("fewer than two cells after merging".into()));
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::DegenerateSample(e.to_string()))?;
    Ok(ChiSquareResult { statistic, dof, p_value: dist.sf(statistic), cells: cells.len() })
}

/// Counts of `samples` in the cells `[edges[i], edges[i+1])`; values outside
/// the edges are dropped.
pub fn histogram(samples: &[f64], edges: &[f64]) -> Vec<u64> {
    let mut counts = vec![0u64; edges.len().saturating_sub(1)];
    for &x in samples {
        let k = edges.partition_point(|&e| e <= x);
        if k >= 1 && k < edges.len() {
            counts[k - 1] += 1;
        }
    }
    counts
}

/// Streaming mean and variance (Welford), mergeable across threads.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Combine two accumulators (Chan et al. pairwise update).
    pub fn merge(&self, other: &Moments) -> Moments {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * self.n as f64 * other.n as f64 / n as f64;
        Moments { n, mean, m2 }
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceEstimate {
    pub theta: f64,
    pub estimate: f64,
    pub std_error: f64,
}

impl LaplaceEstimate {
    /// Deviation from `truth` in standard errors.
    pub fn z_score(&self, truth: f64) -> f64 {
        let d = self.estimate - truth;
        if self.std_error == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d.abs() / self.std_error
        }
    }
}

/// Mean of `e^{−θX}` with its standard error at each `θ`.
pub fn empirical_laplace(samples: &[f64], thetas: &[f64]) -> Vec<LaplaceEstimate> {
    thetas
        .iter()
        .map(|&theta| {
            let m: Moments = samples.iter().map(|&x| (-theta * x).exp()).collect();
            LaplaceEstimate { theta, estimate: m.mean, std_error: m.std_error() }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvEstimate {
    pub estimate: f64,
    /// `½ Σ √(p̂ᵢ(1 − p̂ᵢ)/n)`, the Monte Carlo error scale of the estimate.
    pub mc_error: f64,
    pub bins: usize,
}

/// Binned total-variation distance between the empirical law of `samples`
/// and a law on `(0, ∞)` with distribution function `cdf`, over `bins`
/// cells of equal mass under that law. The bin count is reduced until every
/// cell expects at least ten observations.
pub fn binned_tv<F: Fn(f64) -> f64>(samples: &[f64], cdf: F, bins: usize) -> Result<TvEstimate> {
    let n = samples.len();
    if n < 20 {
        return Err(Error::DegenerateSample(format!("need at least 20 observations, got {n}")));
    }
    let bins = bins.clamp(2, n / 10);
    let mut edges = Vec::with_capacity(bins + 1);
    edges.push(0.0);
    let mut hint = 1.0;
    for k in 1..bins {
        let level = k as f64 / bins as f64;
        let x = numerics::solve_decreasing(|x| 1.0 - cdf(x), 1.0 - level, hint)?;
        edges.push(x);
        hint = x;
    }
    edges.push(f64::INFINITY);
    let counts = histogram(samples, &edges);
    let nf = n as f64;
    let target = 1.0 / bins as f64;
    let mut estimate = 0.0;
    let mut mc_error = 0.0;
    for &c in &counts {
        let p = c as f64 / nf;
        estimate += (p - target).abs();
        mc_error += (p * (1.0 - p) / nf).sqrt();
    }
    // mass outside (0, ∞), such as exact zeros, is entirely unmatched
    let outside = 1.0 - counts.iter().sum::<u64>() as f64 / nf;
    Ok(TvEstimate { estimate: 0.5 * (estimate + outside), mc_error: 0.5 * mc_error, bins })
}

/// Exact (Garwood) two-sided interval at confidence `level` for a Poisson
/// rate observed as `count` events over `exposure`.
pub fn poisson_rate_ci(count: u64, exposure: f64, level: f64) -> Result<(f64, f64)> {
    if !(exposure > 0.0) || !(0.0 < level && level < 1.0) {
        return Err(Error::Domain(format!("bad exposure {exposure} or level {level}")));
    }
    let alpha = 1.0 - level;
    let k = count as f64;
    let lo = if count == 0 {
        0.0
    } else {
        let d = ChiSquared::new(2.0 * k).map_err(|e| Error::Domain(e.to_string()))?;
        0.5 * d.inverse_cdf(0.5 * alpha)
    };
    let d = ChiSquared::new(2.0 * k + 2.0).map_err(|e| Error::Domain(e.to_string()))?;
    let hi = 0.5 * d.inverse_cdf(1.0 - 0.5 * alpha);
    Ok((lo / exposure, hi / exposure))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp, Gamma, Poisson};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn kolmogorov_tail_values() {
        // reference values of the Kolmogorov distribution
        assert!((kolmogorov_sf(1.0) - 0.269_999_671_677_1).abs() < 1e-9);
        assert!((kolmogorov_sf(1.358_098_8) - 0.05).abs() < 1e-6);
        assert!((kolmogorov_sf(1.949_585_7) - 0.001).abs() < 1e-6);
        assert!((kolmogorov_sf(0.5) - 0.963_945_5).abs() < 1e-6);
        // the two series agree where they switch
        let below = kolmogorov_sf(1.0 - 1e-12);
        assert!((below - kolmogorov_sf(1.0)).abs() < 1e-9);
    }

    #[test]
    fn ks_rejects_tiny_samples() {
        assert!(matches!(ks_one_sample(&[0.1, 0.2], |x| x), Err(Error::DegenerateSample(_))));
        assert!(ks_one_sample(&[f64::NAN; 10], |x| x).is_err());
    }

    #[test]
    fn ks_null_p_values_are_uniform() {
        let mut r = rng(1);
        let p: Vec<f64> = (0..200)
            .map(|_| {
                let s: Vec<f64> = (0..500).map(|_| r.random::<f64>()).collect();
                ks_one_sample(&s, |x| x.clamp(0.0, 1.0)).unwrap().p_value
            })
            .collect();
        let calib = ks_one_sample(&p, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(calib.passes(1e-3), "{calib:?}");
    }

    #[test]
    fn ks_two_sample_null_calibration() {
        let mut r = rng(2);
        let p: Vec<f64> = (0..200)
            .map(|_| {
                let a: Vec<f64> = (0..300).map(|_| r.random::<f64>()).collect();
                let b: Vec<f64> = (0..400).map(|_| r.random::<f64>()).collect();
                ks_two_sample(&a, &b).unwrap().p_value
            })
            .collect();
        // discreteness makes the two-sample p-values slightly conservative
        let calib = ks_one_sample(&p, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(calib.passes(1e-3), "{calib:?}");
    }

    #[test]
    fn ks_beta_two_one_law() {
        let mut r = rng(3);
        let s: Vec<f64> = (0..10_000).map(|_| r.random::<f64>().sqrt()).collect();
        assert!(ks_one_sample(&s, |u| (u * u).clamp(0.0, 1.0)).unwrap().passes(1e-3));
    }

    #[test]
    fn ks_detects_shift() {
        let mut r = rng(4);
        for _ in 0..20 {
            let s: Vec<f64> = (0..10_000).map(|_| r.random::<f64>() + 0.05).collect();
            assert!(!ks_one_sample(&s, |x| x.clamp(0.0, 1.0)).unwrap().passes(1e-3));
            let t: Vec<f64> = (0..10_000).map(|_| r.random::<f64>()).collect();
            assert!(!ks_two_sample(&s, &t).unwrap().passes(1e-3));
        }
    }

    #[test]
    fn chi_square_merges_and_calibrates() {
        let observed = [3, 2, 50, 45];
        let expected = [2.5, 2.5, 50.0, 45.0];
        let r = chi_square_gof(&observed, &expected).unwrap();
        assert_eq!(r.cells, 3);
        assert!(r.statistic < 0.1 && r.p_value > 0.9);
        let mut g = rng(5);
        let p: Vec<f64> = (0..200)
            .map(|_| {
                let s: Vec<f64> = (0..2000).map(|_| g.random::<f64>()).collect();
                let edges: Vec<f64> = (0..=20).map(|k| f64::from(k) / 20.0).collect();
                let counts = histogram(&s, &edges);
                chi_square_gof(&counts, &[100.0; 20]).unwrap().p_value
            })
            .collect();
        assert!(ks_one_sample(&p, |x| x.clamp(0.0, 1.0)).unwrap().passes(1e-3));
    }

    #[test]
    fn moments_merge_is_exact() {
        let xs: Vec<f64> = (0..1000).map(|k| (f64::from(k) * 0.37).sin()).collect();
        let whole: Moments = xs.iter().copied().collect();
        let left: Moments = xs[..313].iter().copied().collect();
        let right: Moments = xs[313..].iter().copied().collect();
        let merged = left.merge(&right);
        assert_eq!(merged.n, whole.n);
        assert!((merged.mean - whole.mean).abs() < 1e-14);
        assert!((merged.variance() - whole.variance()).abs() < 1e-13);
        assert_eq!(right.merge(&left).n, 1000);
    }

    #[test]
    fn laplace_of_constant_and_known_laws() {
        let c = empirical_laplace(&[0.7; 200], &[0.5, 2.0]);
        assert!((c[0].estimate - (-0.35f64).exp()).abs() < 1e-15 && c[0].std_error == 0.0);
        let mut r = rng(6);
        let exp = Exp::new(1.0).unwrap();
        let s: Vec<f64> = (0..100_000).map(|_| exp.sample(&mut r)).collect();
        for e in empirical_laplace(&s, &[0.25, 1.0, 4.0]) {
            assert!(e.z_score(1.0 / (1.0 + e.theta)) < 4.0, "{e:?}");
        }
        let gamma = Gamma::new(2.0, 1.0).unwrap();
        let s: Vec<f64> = (0..100_000).map(|_| gamma.sample(&mut r)).collect();
        for e in empirical_laplace(&s, &[0.25, 1.0, 4.0]) {
            assert!(e.z_score((1.0 + e.theta).powi(-2)) < 4.0, "{e:?}");
        }
    }

    #[test]
    fn binned_tv_consistency_and_disjoint_support() {
        let mut r = rng(7);
        let exp = Exp::new(1.0).unwrap();
        let cdf = |x: f64| -(-x).exp_m1();
        let mut last = f64::INFINITY;
        for n in [1_000, 10_000, 100_000] {
            let s: Vec<f64> = (0..n).map(|_| exp.sample(&mut r)).collect();
            let tv = binned_tv(&s, cdf, 50).unwrap();
            assert!(tv.estimate < 4.0 * tv.mc_error + 1e-12, "{tv:?}");
            assert!(tv.estimate < last);
            last = tv.estimate;
        }
        let far: Vec<f64> = (0..1000).map(|k| 1e3 + f64::from(k)).collect();
        let tv = binned_tv(&far, cdf, 20).unwrap();
        assert!(tv.estimate > 0.94, "{tv:?}");
        let few = binned_tv(&far[..100], cdf, 50).unwrap();
        assert_eq!(few.bins, 10);
    }

    #[test]
    fn poisson_interval_coverage() {
        let (lo, hi) = poisson_rate_ci(0, 1.0, 0.99).unwrap();
        assert_eq!(lo, 0.0);
        assert!((hi - 5.298_317).abs() < 1e-5);
        let mut r = rng(8);
        let pois = Poisson::new(2000.0).unwrap();
        let runs = 2000;
        let covered = (0..runs)
            .filter(|_| {
                let k: f64 = pois.sample(&mut r);
                let (lo, hi) = poisson_rate_ci(k as u64, 1000.0, 0.99).unwrap();
                lo <= 2.0 && 2.0 <= hi
            })
            .count();
        let frac = covered as f64 / f64::from(runs);
        assert!((frac - 0.99).abs() < 0.01, "coverage {frac}");
    }
}
