//! Truncated Gaussian marginals on bounded intervals.
//!
//! An exact design value `m` with relative deviation `R` becomes the interval
//! `[m(1-R), m(1+R)]` (ordered for negative means) carrying a Gaussian
//! centred at `m` whose standard deviation places the interval at +/-3 sigma.
//! The density is renormalised so the interval holds unit mass. `R = 0`
//! produces a point mass, which is how certain data flows through the same
//! code path.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};

/// Number of standard deviations between the mean and each interval end.
pub const SIGMA_SPAN: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedGaussianMarginal {
    lower: f64,
    upper: f64,
    mean: f64,
    sigma: f64,
    normalizer: f64,
}

/// A sub-interval of a marginal's support. The lower end is either closed
/// (`[lo, hi]`) or open (`(lo, hi]`); openness only matters for point masses,
/// where it decides which side of a split owns a value equal to the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveRange {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
}

impl ActiveRange {
    pub fn closed(lo: f64, hi: f64) -> Self {
        ActiveRange {
            lo,
            hi,
            lo_open: false,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo_open && self.lo >= self.hi)
    }

    /// Split at `s` into the `x <= s` part and the `x > s` part.
    pub fn split(&self, s: f64) -> (ActiveRange, ActiveRange) {
        let left = ActiveRange {
            lo: self.lo,
            hi: self.hi.min(s),
            lo_open: self.lo_open,
        };
        let right = if s >= self.lo {
            ActiveRange {
                lo: s,
                hi: self.hi,
                lo_open: true,
            }
        } else {
            *self
        };
        (left, right)
    }
}

impl TruncatedGaussianMarginal {
    /// Builds a marginal from explicit bounds and a standard deviation.
    pub fn new(lower: f64, upper: f64, mean: f64, sigma: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && mean.is_finite() && sigma.is_finite()) {
            return Err(Error::InvalidParameter(
                "marginal parameters must be finite".into(),
            ));
        }
        if !(lower < upper) || mean < lower || mean > upper || sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "need lower < upper, lower <= mean <= upper and sigma > 0; got [{lower}, {upper}], mean {mean}, sigma {sigma}"
            )));
        }
        let z_lo = (lower - mean) / sigma;
        let z_hi = (upper - mean) / sigma;
        let mass = std_normal_mass(z_lo, z_hi);
        if !(mass > 0.0) {
            return Err(Error::InvalidParameter(
                "interval carries no Gaussian mass".into(),
            ));
        }
        Ok(TruncatedGaussianMarginal {
            lower,
            upper,
            mean,
            sigma,
            normalizer: 1.0 / mass,
        })
    }

    /// A certain value: all mass sits at `value`.
    pub fn point(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "value {value} is not finite"
            )));
        }
        Ok(TruncatedGaussianMarginal {
            lower: value,
            upper: value,
            mean: value,
            sigma: 0.0,
            normalizer: 1.0,
        })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn is_point(&self) -> bool {
        self.sigma == 0.0
    }

    pub fn support(&self) -> ActiveRange {
        ActiveRange::closed(self.lower, self.upper)
    }

    /// Probability mass on the closed interval `[a, b]`.
    pub fn mass_on(&self, a: f64, b: f64) -> f64 {
        self.mass_in(&ActiveRange::closed(a, b))
    }

    /// Probability mass on an active range, honouring an open lower end.
    pub fn mass_in(&self, range: &ActiveRange) -> f64 {
        if self.is_point() {
            let above = if range.lo_open {
                self.mean > range.lo
            } else {
                self.mean >= range.lo
            };
            return if above && self.mean <= range.hi { 1.0 } else { 0.0 };
        }
        let a = range.lo.max(self.lower);
        let b = range.hi.min(self.upper);
        if !(a < b) {
            return 0.0;
        }
        if a == self.lower && b == self.upper {
            return 1.0;
        }
        let z_a = (a - self.mean) / self.sigma;
        let z_b = (b - self.mean) / self.sigma;
        (self.normalizer * std_normal_mass(z_a, z_b)).clamp(0.0, 1.0)
    }

    /// Truncated CDF on the support.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < self.lower {
            0.0
        } else {
            self.mass_on(self.lower, x)
        }
    }
}

/// Standard normal mass between two z-scores.
fn std_normal_mass(z_a: f64, z_b: f64) -> f64 {
    0.5 * (erf(z_b / SQRT_2) - erf(z_a / SQRT_2))
}

/// Expands an exact value into its uncertainty interval with half-width
/// `relative_deviation * |mean|`.
pub fn make_marginal(mean: f64, relative_deviation: f64) -> Result<TruncatedGaussianMarginal> {
    if !(0.0..1.0).contains(&relative_deviation) {
        return Err(Error::InvalidParameter(format!(
            "relative deviation must lie in [0, 1), got {relative_deviation}"
        )));
    }
    if relative_deviation == 0.0 {
        return TruncatedGaussianMarginal::point(mean);
    }
    let half_width = relative_deviation * mean.abs();
    if !(half_width > 0.0) || !half_width.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "mean {mean} with deviation {relative_deviation} gives a non-positive interval width"
        )));
    }
    let lower = mean - half_width;
    let upper = mean + half_width;
    TruncatedGaussianMarginal::new(lower, upper, mean, (upper - lower) / (2.0 * SIGMA_SPAN))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn centred(lower: f64, upper: f64) -> TruncatedGaussianMarginal {
        let mean = 0.5 * (lower + upper);
        TruncatedGaussianMarginal::new(lower, upper, mean, (upper - lower) / 6.0).unwrap()
    }

    /// Composite Simpson integration of the renormalised density.
    fn simpson_mass(m: &TruncatedGaussianMarginal, a: f64, b: f64) -> f64 {
        let n = 20_000;
        let h = (b - a) / n as f64;
        let pdf = |x: f64| {
            let z = (x - m.mean()) / m.sigma();
            m.normalizer() * (-0.5 * z * z).exp() / (m.sigma() * (2.0 * std::f64::consts::PI).sqrt())
        };
        let mut acc = pdf(a) + pdf(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * pdf(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn make_marginal_ten_percent() {
        let m = make_marginal(2.0, 0.1).unwrap();
        assert!((m.lower() - 1.8).abs() < 1e-12);
        assert!((m.upper() - 2.2).abs() < 1e-12);
        assert!((m.sigma() - 0.4 / 6.0).abs() < 1e-12);
        // 1 / erf(3 / sqrt 2) = 1 / 0.99730...
        assert!((m.normalizer() - 1.0027).abs() < 1e-4);
        assert!((m.normalizer() - 1.0 / 0.997_300_203_936_740).abs() < 1e-12);
    }

    #[test]
    fn zero_deviation_is_point_mass() {
        let m = make_marginal(5.0, 0.0).unwrap();
        assert!(m.is_point());
        assert_eq!(m.mass_on(5.0, 5.0), 1.0);
        assert_eq!(m.mass_on(4.0, 4.99), 0.0);
    }

    #[test]
    fn negative_mean_keeps_ordering() {
        let m = make_marginal(-10.0, 0.1).unwrap();
        assert!((m.lower() + 11.0).abs() < 1e-12);
        assert!((m.upper() + 9.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_marginal(0.0, 0.1).is_err());
        assert!(make_marginal(1.0, 1.0).is_err());
        assert!(make_marginal(1.0, -0.1).is_err());
        assert!(make_marginal(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn mass_on_examples() {
        let m = centred(0.0, 10.0);
        assert_eq!(m.mass_on(0.0, 10.0), 1.0);
        assert!((m.mass_on(0.0, 5.0) - 0.5).abs() < 1e-12);
        let oracle = simpson_mass(&m, 0.0, 7.0);
        assert!((m.mass_on(0.0, 7.0) - oracle).abs() < 1e-10);
        assert!((oracle - 0.886).abs() < 5e-4);
        assert_eq!(m.mass_on(11.0, 12.0), 0.0);
        assert_eq!(m.mass_on(-5.0, 20.0), 1.0);
    }

    #[test]
    fn open_lower_end_only_matters_for_points() {
        let p = TruncatedGaussianMarginal::point(3.0).unwrap();
        let open = ActiveRange { lo: 3.0, hi: 4.0, lo_open: true };
        assert_eq!(p.mass_in(&open), 0.0);
        assert_eq!(p.mass_in(&ActiveRange::closed(3.0, 4.0)), 1.0);
        let c = centred(0.0, 10.0);
        assert_eq!(c.mass_in(&ActiveRange { lo: 5.0, hi: 10.0, lo_open: true }), c.mass_on(5.0, 10.0));
    }

    #[test]
    fn split_of_range() {
        let r = ActiveRange::closed(0.0, 10.0);
        let (l, rr) = r.split(4.0);
        assert_eq!(l, ActiveRange::closed(0.0, 4.0));
        assert_eq!(rr, ActiveRange { lo: 4.0, hi: 10.0, lo_open: true });
        let (l, rr) = r.split(-1.0);
        assert!(l.is_empty());
        assert_eq!(rr, r);
        let (l, rr) = r.split(12.0);
        assert_eq!(l, r);
        assert!(rr.is_empty());
    }

    proptest::proptest! {
        #[test]
        fn unit_mass_and_monotone(mean in -1e3f64..1e3, r in 0.001f64..0.9, t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
            proptest::prop_assume!(mean.abs() > 1e-3);
            let m = make_marginal(mean, r).unwrap();
            proptest::prop_assert!((m.mass_on(m.lower(), m.upper()) - 1.0).abs() < 1e-12);
            let w = m.upper() - m.lower();
            let (b1, b2) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let lo = m.lower();
            proptest::prop_assert!(m.mass_on(lo, lo + b1 * w) <= m.mass_on(lo, lo + b2 * w) + 1e-15);
        }
    }
}
