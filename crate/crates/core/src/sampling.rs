//! Normalized Barenblatt profiles, their exact CDF and Cardano inverse, and
//! composition-method sampling of mixtures.
//!
//! The basic profile is `B(x) = sqrt(3)/8 * (T^(-1/3) - (x - x0)^2 / (12 T))_+`,
//! a unit-mass density supported on `x0 +- sqrt(12 T^(2/3))` whose CDF is the
//! cubic `sqrt(3)/8 (z T^(-1/3) - z^3 / (36 T)) + 1/2`.

use std::f64::consts::PI;

use rand::distr::{Distribution, Open01};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{replica_rng, Stream};

const SQRT3_OVER_8: f64 = 0.216_506_350_946_109_66;

/// Half-width `sqrt(12 T^(2/3))` of the profile support.
pub fn support_half_width(t: f64) -> f64 {
    (12.0 * t.powf(2.0 / 3.0)).sqrt()
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!(
            "Barenblatt parameter T must be positive, got {t}"
        )))
    }
}

/// Normalized Barenblatt profile centred at `x0`.
pub fn barenblatt_pdf(x: f64, t: f64, x0: f64) -> Result<f64> {
    check_t(t)?;
    Ok(profile(x - x0, t))
}

#[inline]
fn profile(z: f64, t: f64) -> f64 {
    (SQRT3_OVER_8 * (1.0 / t.cbrt() - z * z / (12.0 * t))).max(0.0)
}

/// CDF of the profile centred at zero. `t` must be positive.
pub fn barenblatt_cdf(z: f64, t: f64) -> f64 {
    let h = support_half_width(t);
    if z < -h {
        0.0
    } else if z >= h {
        1.0
    } else {
        let raw = SQRT3_OVER_8 * (z / t.cbrt() - z * z * z / (36.0 * t)) + 0.5;
        raw.clamp(0.0, 1.0)
    }
}

/// Pseudo-inverse of [`barenblatt_cdf`] via the trigonometric Cardano root.
///
/// `v = 0` maps to the left support endpoint instead of `-inf`.
pub fn barenblatt_inv_cdf(v: f64, t: f64) -> Result<f64> {
    check_t(t)?;
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::domain(format!("probability {v} outside [0, 1]")));
    }
    let h = support_half_width(t);
    if v == 0.0 {
        return Ok(-h);
    }
    if v == 1.0 {
        return Ok(h);
    }
    // z^3 + p z + q = 0 has three real roots; the middle one lies in the support.
    let p = -36.0 * t.powf(2.0 / 3.0);
    let q = (v - 0.5) * 96.0 * 3f64.sqrt() * t;
    let arg = (-(q / 2.0) * (-27.0 / (p * p * p)).sqrt()).clamp(-1.0, 1.0);
    Ok(-(-4.0 / 3.0 * p).sqrt() * (arg.acos() / 3.0 + PI / 3.0).cos())
}

/// One term `alpha * beta * B(beta (x - x0))` of an initial mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarenblattComponent {
    pub alpha: f64,
    pub beta: f64,
    pub t: f64,
    pub x0: f64,
}

impl BarenblattComponent {
    pub fn new(alpha: f64, beta: f64, t: f64, x0: f64) -> Result<Self> {
        let c = Self { alpha, beta, t, x0 };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        check_t(self.t)?;
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::config(format!(
                "component beta must be positive, got {}",
                self.beta
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config(format!(
                "component alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if !self.x0.is_finite() {
            return Err(Error::config("component center x0 must be finite"));
        }
        Ok(())
    }

    /// Unit-mass component density (without the weight `alpha`).
    pub fn pdf(&self, x: f64) -> f64 {
        self.beta * profile(self.beta * (x - self.x0), self.t)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        barenblatt_cdf(self.beta * (x - self.x0), self.t)
    }

    /// `F^-1(v) / beta + x0`.
    pub fn inv_cdf(&self, v: f64) -> Result<f64> {
        Ok(barenblatt_inv_cdf(v, self.t)? / self.beta + self.x0)
    }

    pub fn support(&self) -> (f64, f64) {
        let h = support_half_width(self.t) / self.beta;
        (self.x0 - h, self.x0 + h)
    }

    /// Weighted peak value `alpha * beta * sqrt(3)/8 * T^(-1/3)`.
    pub fn weighted_peak(&self) -> f64 {
        self.alpha * self.beta * SQRT3_OVER_8 / self.t.cbrt()
    }
}

/// Mixture of Barenblatt components with weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDensity {
    components: Vec<BarenblattComponent>,
}

impl InitialDensity {
    pub fn new(components: Vec<BarenblattComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::config(
                "initial density needs at least one component",
            ));
        }
        for c in &components {
            c.validate()?;
        }
        let total: f64 = components.iter().map(|c| c.alpha).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::config(format!(
                "mixture weights must satisfy sum(alpha) = 1, got {total}"
            )));
        }
        Ok(Self { components })
    }

    /// Three disjoint profiles, `alpha = (1/4, 1/2, 1/4)`, `beta = (1, 1, 1)`, `T = 2`.
    pub fn initial1() -> Self {
        Self::three_bumps([1.0, 1.0, 1.0])
    }

    /// As [`initial1`](Self::initial1) but with `beta = (2, 1, 2)`.
    pub fn initial2() -> Self {
        Self::three_bumps([2.0, 1.0, 2.0])
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "initial1" => Some(Self::initial1()),
            "initial2" => Some(Self::initial2()),
            _ => None,
        }
    }

    fn three_bumps(beta: [f64; 3]) -> Self {
        let t = 2.0;
        let h = support_half_width(t);
        let x0 = [-h * (1.0 + 1.0 / beta[0]), 0.0, h * (1.0 + 1.0 / beta[2])];
        let alpha = [0.25, 0.5, 0.25];
        let components = (0..3)
            .map(|l| BarenblattComponent {
                alpha: alpha[l],
                beta: beta[l],
                t,
                x0: x0[l],
            })
            .collect();
        Self { components }
    }

    pub fn components(&self) -> &[BarenblattComponent] {
        &self.components
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.components.iter().map(|c| c.alpha * c.pdf(x)).sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.components.iter().map(|c| c.alpha * c.cdf(x)).sum()
    }

    /// Smallest interval containing every component support.
    pub fn support(&self) -> (f64, f64) {
        self.components
            .iter()
            .filter(|c| c.alpha > 0.0)
            .map(BarenblattComponent::support)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| {
                (lo.min(a), hi.max(b))
            })
    }

    /// `max_x u0(x)`.
    pub fn sup_norm(&self) -> f64 {
        let peak = self
            .components
            .iter()
            .map(BarenblattComponent::weighted_peak)
            .fold(0.0, f64::max);
        if !self.has_overlap() {
            return peak;
        }
        let (lo, hi) = self.support();
        let n = 200_000;
        let h = (hi - lo) / n as f64;
        (0..=n)
            .map(|k| self.pdf(lo + k as f64 * h))
            .fold(peak, f64::max)
    }

    fn has_overlap(&self) -> bool {
        let live: Vec<(f64, f64)> = self
            .components
            .iter()
            .filter(|c| c.alpha > 0.0)
            .map(BarenblattComponent::support)
            .collect();
        live.iter()
            .enumerate()
            .any(|(i, a)| live[i + 1..].iter().any(|b| a.0 < b.1 && b.0 < a.1))
    }

    /// Draws one position: component index from a uniform on `[0, 1)`, then
    /// a uniform on the open interval `(0, 1)` pushed through that
    /// component's inverse CDF.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let selector: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = None;
        for (l, c) in self.components.iter().enumerate() {
            acc += c.alpha;
            if selector < acc {
                chosen = Some(l);
                break;
            }
        }
        // rounding in the cumulative sum can leave selector >= acc
        let l = chosen.unwrap_or_else(|| {
            self.components
                .iter()
                .rposition(|c| c.alpha > 0.0)
                .unwrap_or(self.components.len() - 1)
        });
        let u: f64 = Open01.sample(rng);
        self.components[l]
            .inv_cdf(u)
            .expect("open-interval uniform is a valid probability")
    }

    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<f64> {
        (0..count).map(|_| self.sample_one(rng)).collect()
    }
}

/// `count` i.i.d. draws from `density`, consuming `rng` in a fixed order.
pub fn sample_initial<R: Rng + ?Sized>(
    density: &InitialDensity,
    count: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::config("sample count must be at least 1"));
    }
    Ok(density.sample(count, rng))
}

/// Parallel variant: chunk `c` draws from the stream keyed by
/// `derive_seed(seed, c)`, so the output does not depend on the thread count.
pub fn sample_initial_chunked(
    density: &InitialDensity,
    count: usize,
    seed: u64,
    chunk_size: usize,
) -> Result<Vec<f64>> {
    if count == 0 || chunk_size == 0 {
        return Err(Error::config(
            "sample count and chunk size must be at least 1",
        ));
    }
    let chunks = count.div_ceil(chunk_size);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = replica_rng(seed, c as u64, Stream::Initial);
            let len = chunk_size.min(count - c * chunk_size);
            density.sample(len, &mut rng)
        })
        .collect();
    Ok(parts.concat())
}

/// `max_x u0(x)` of an initial mixture.
pub fn density_sup_norm(density: &InitialDensity) -> f64 {
    density.sup_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (hi - lo) / n as f64;
        let mut acc = f(lo) + f(hi);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(lo + k as f64 * h);
        }
        acc * h / 3.0
    }

    fn bisect_inverse(v: f64, t: f64) -> f64 {
        let h = support_half_width(t);
        let (mut lo, mut hi) = (-h, h);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if barenblatt_cdf(mid, t) < v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn pdf_peak_support_and_mass() {
        let peak = barenblatt_pdf(1.0, 2.0, 1.0).unwrap();
        assert_relative_eq!(peak, 3f64.sqrt() / 8.0 / 2f64.cbrt(), max_relative = 1e-15);
        assert!((peak - 0.171_841_2).abs() < 1e-7);
        let h = support_half_width(2.0);
        assert_eq!(barenblatt_pdf(h + 0.1, 2.0, 0.0).unwrap(), 0.0);
        // piecewise quadratic: Simpson is exact up to rounding on the support
        let mass = simpson(|x| barenblatt_pdf(x, 2.0, 0.0).unwrap(), -h, h, 2000);
        assert!((mass - 1.0).abs() < 1e-10, "{mass}");
        assert!(barenblatt_pdf(0.0, 0.0, 0.0).is_err());
        assert!(barenblatt_pdf(0.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn cdf_reference_values() {
        let t = 2.0;
        let h = support_half_width(t);
        assert_eq!(barenblatt_cdf(0.0, t), 0.5);
        assert!(barenblatt_cdf(-h, t).abs() < 1e-15);
        assert_eq!(barenblatt_cdf(h, t), 1.0);
        assert_eq!(barenblatt_cdf(-h - 1.0, t), 0.0);
        let direct = 3f64.sqrt() / 8.0 * (1.0 / 2f64.cbrt() - 1.0 / 72.0) + 0.5;
        assert_relative_eq!(barenblatt_cdf(1.0, t), direct, max_relative = 1e-14);
        assert!((direct - 0.668_834_2).abs() < 1e-7);
        let quad = simpson(|x| barenblatt_pdf(x, t, 0.0).unwrap(), -h, 1.0, 4000);
        assert!((quad - direct).abs() < 1e-10);
    }

    #[test]
    fn cdf_derivative_matches_pdf() {
        for &t in &[0.5, 2.0] {
            let h = support_half_width(t);
            for k in 1..=50 {
                let z = -h + 2.0 * h * k as f64 / 51.0;
                let d = 1e-6;
                let fd = (barenblatt_cdf(z + d, t) - barenblatt_cdf(z - d, t)) / (2.0 * d);
                assert!((fd - barenblatt_pdf(z, t, 0.0).unwrap()).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn inverse_reference_values() {
        assert!(barenblatt_inv_cdf(0.5, 2.0).unwrap().abs() < 1e-14);
        assert!(barenblatt_inv_cdf(0.5, 7.0).unwrap().abs() < 1e-14);
        let top = barenblatt_inv_cdf(1.0, 2.0).unwrap();
        assert_relative_eq!(top, (12.0 * 2f64.powf(2.0 / 3.0)).sqrt());
        assert!((top - 4.364_494_5).abs() < 1e-7);
        assert_eq!(barenblatt_inv_cdf(0.0, 2.0).unwrap(), -top);
        let z = barenblatt_inv_cdf(0.25, 2.0).unwrap();
        assert!((barenblatt_cdf(z, 2.0) - 0.25).abs() < 1e-12);
        assert!((z - bisect_inverse(0.25, 2.0)).abs() < 1e-10);
    }

    #[test]
    fn inverse_rejects_bad_probability() {
        assert!(matches!(
            barenblatt_inv_cdf(-0.1, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            barenblatt_inv_cdf(1.1, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(barenblatt_inv_cdf(0.5, 0.0).is_err());
    }

    #[test]
    fn round_trip_on_dense_grid() {
        for &t in &[0.5, 1.0, 2.0, 5.0] {
            for k in 1..=1000 {
                let v = k as f64 / 1001.0;
                let z = barenblatt_inv_cdf(v, t).unwrap();
                assert!((barenblatt_cdf(z, t) - v).abs() <= 1e-12, "t={t} v={v}");
            }
        }
    }

    #[test]
    fn inverse_near_the_edges_stays_in_support() {
        let t = 2.0;
        let h = support_half_width(t);
        for &v in &[1e-300, 1e-17, 1e-12, 1.0 - 1e-16, 1.0 - 1e-12] {
            let z = barenblatt_inv_cdf(v, t).unwrap();
            assert!(
                z.is_finite() && z >= -h - 1e-12 && z <= h + 1e-12,
                "v={v} z={z}"
            );
        }
    }

    #[test]
    fn mixture_validation() {
        let c = |a| BarenblattComponent {
            alpha: a,
            beta: 1.0,
            t: 2.0,
            x0: 0.0,
        };
        assert!(InitialDensity::new(vec![]).is_err());
        let err = InitialDensity::new(vec![c(0.5), c(0.4)]).unwrap_err();
        assert!(err.to_string().contains("sum(alpha) = 1"));
        assert!(InitialDensity::new(vec![c(0.5), c(0.5)]).is_ok());
        assert!(BarenblattComponent::new(0.5, 0.0, 2.0, 0.0).is_err());
        assert!(BarenblattComponent::new(1.5, 1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn presets_have_disjoint_supports() {
        for d in [InitialDensity::initial1(), InitialDensity::initial2()] {
            assert!(!d.has_overlap());
            let (lo, hi) = d.support();
            let mass = d
                .components()
                .iter()
                .map(|c| {
                    let (a, b) = c.support();
                    simpson(|x| c.alpha * c.pdf(x), a, b, 2000)
                })
                .sum::<f64>();
            assert!((mass - 1.0).abs() < 1e-10);
            assert!(lo < 0.0 && hi > 0.0);
        }
    }

    #[test]
    fn sup_norm_values() {
        // disjoint supports: the largest weighted peak
        assert!((InitialDensity::initial1().sup_norm() - 0.085_920_6).abs() < 1e-7);
        assert_eq!(
            InitialDensity::initial1().sup_norm(),
            InitialDensity::initial2().sup_norm()
        );
        let single =
            InitialDensity::new(vec![BarenblattComponent::new(1.0, 1.0, 2.0, 0.0).unwrap()])
                .unwrap();
        assert!((single.sup_norm() - 0.171_841_2).abs() < 1e-7);
        let doubled = InitialDensity::new(
            InitialDensity::initial1()
                .components()
                .iter()
                .map(|c| BarenblattComponent {
                    beta: 2.0 * c.beta,
                    ..*c
                })
                .collect(),
        )
        .unwrap();
        assert_relative_eq!(
            doubled.sup_norm(),
            2.0 * InitialDensity::initial1().sup_norm(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn overlapping_supports_use_grid_search() {
        let c = |x0| BarenblattComponent {
            alpha: 0.5,
            beta: 1.0,
            t: 1.0,
            x0,
        };
        let d = InitialDensity::new(vec![c(-0.5), c(0.5)]).unwrap();
        let exact = d.pdf(0.0);
        assert!(exact > c(0.0).weighted_peak());
        assert!((d.sup_norm() - exact).abs() < 1e-9);
    }

    #[test]
    fn samples_stay_in_support() {
        let comp = BarenblattComponent::new(1.0, 2.0, 2.0, 3.0).unwrap();
        let d = InitialDensity::new(vec![comp]).unwrap();
        let (lo, hi) = comp.support();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for x in sample_initial(&d, 10_000, &mut rng).unwrap() {
            assert!(x >= lo && x <= hi);
        }
        assert!(sample_initial(&d, 0, &mut rng).is_err());
    }

    #[test]
    fn sample_mean_of_symmetric_component() {
        let d = InitialDensity::new(vec![BarenblattComponent::new(1.0, 1.0, 2.0, 1.25).unwrap()])
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let xs = d.sample(100_000, &mut rng);
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean - 1.25).abs() < 3.0 * (var / n).sqrt());
    }

    #[test]
    fn chunked_sampling_is_deterministic() {
        let d = InitialDensity::initial2();
        let a = sample_initial_chunked(&d, 1000, 5, 128).unwrap();
        let b = sample_initial_chunked(&d, 1000, 5, 128).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 1000);
    }
}
