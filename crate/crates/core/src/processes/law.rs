use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A bounded, mean-zero law on the real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Law {
    /// The point mass at zero.
    Zero,
    /// `+1` or `-1` with probability one half each.
    Rademacher,
    /// Uniform on `[-c, c]`.
    Uniform { c: f64 },
    /// `a` with probability `p`, `b` otherwise.
    TwoPoint { p: f64, a: f64, b: f64 },
}

impl Law {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Law::Rademacher | Law::Zero => Ok(()),
            Law::Uniform { c } if c > 0.0 && c.is_finite() => Ok(()),
            Law::Uniform { c } => Err(Error::param("c", format!("half-width {c} must be positive"))),
            Law::TwoPoint { p, a, b } => {
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::param("p", format!("{p} must lie in (0, 1)")));
                }
                if !(a.is_finite() && b.is_finite()) || a == b {
                    return Err(Error::param("a", "atoms must be finite and distinct"));
                }
                let m = p * a + (1.0 - p) * b;
                if m.abs() > 1e-12 * a.abs().max(b.abs()) {
                    return Err(Error::param("p", format!("two-point law has mean {m}, not zero")));
                }
                Ok(())
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Law::Zero => 0.0,
            Law::Rademacher => 1.0,
            Law::Uniform { c } => c * c / 3.0,
            Law::TwoPoint { p, a, b } => p * a * a + (1.0 - p) * b * b,
        }
    }

    /// `(min, max)` of the support.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Law::Zero => (0.0, 0.0),
            Law::Rademacher => (-1.0, 1.0),
            Law::Uniform { c } => (-c, c),
            Law::TwoPoint { a, b, .. } => (a.min(b), a.max(b)),
        }
    }

    pub fn bound(&self) -> f64 {
        let (lo, hi) = self.support();
        lo.abs().max(hi.abs())
    }

    pub fn is_symmetric(&self) -> bool {
        match *self {
            Law::Zero | Law::Rademacher | Law::Uniform { .. } => true,
            Law::TwoPoint { p, a, b } => p == 0.5 && a == -b,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Law::Zero => 0.0,
            Law::Rademacher => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Law::Uniform { c } => c * (2.0 * rng.gen::<f64>() - 1.0),
            Law::TwoPoint { p, a, b } => {
                if rng.gen::<f64>() < p {
                    a
                } else {
                    b
                }
            }
        }
    }

    /// Cumulant generating function `log E exp(theta X)`.
    pub fn cgf(&self, theta: f64) -> f64 {
        match *self {
            Law::Zero => 0.0,
            Law::Rademacher => theta.abs() + (-2.0 * theta.abs()).exp().ln_1p() - std::f64::consts::LN_2,
            Law::Uniform { c } => {
                let s = (c * theta).abs();
                if s < 1e-4 {
                    s * s / 6.0 - s.powi(4) / 180.0
                } else {
                    // log(sinh(s) / s) without overflow.
                    s + (-(-2.0 * s).exp_m1()).ln() - std::f64::consts::LN_2 - s.ln()
                }
            }
            Law::TwoPoint { p, a, b } => {
                let (u, v) = (theta * a + p.ln(), theta * b + (1.0 - p).ln());
                crate::numerics::log_add_exp(u, v)
            }
        }
    }

    /// Mean of the exponentially tilted law, `cgf'(theta)`.
    pub fn tilted_mean(&self, theta: f64) -> f64 {
        match *self {
            Law::Zero => 0.0,
            Law::Rademacher => theta.tanh(),
            Law::Uniform { c } => {
                let s = c * theta;
                if s.abs() < 1e-4 {
                    c * (s / 3.0 - s.powi(3) / 45.0)
                } else {
                    c * (1.0 / s.tanh() - 1.0 / s)
                }
            }
            Law::TwoPoint { p, a, b } => {
                let q = self.tilted_weight(theta, p, a, b);
                q * a + (1.0 - q) * b
            }
        }
    }

    fn tilted_weight(&self, theta: f64, p: f64, a: f64, b: f64) -> f64 {
        let (u, v) = (theta * a + p.ln(), theta * b + (1.0 - p).ln());
        1.0 / (1.0 + (v - u).exp())
    }

    /// Draw from the law tilted by `exp(theta x - cgf(theta))`.
    pub fn sample_tilted<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> f64 {
        match *self {
            Law::Zero => 0.0,
            Law::Rademacher => {
                let q = 0.5 * (1.0 + theta.tanh());
                if rng.gen::<f64>() < q {
                    1.0
                } else {
                    -1.0
                }
            }
            Law::Uniform { c } => {
                let u: f64 = rng.gen();
                if (c * theta).abs() < 1e-12 {
                    return c * (2.0 * u - 1.0);
                }
                let x = -c + (u * (2.0 * c * theta).exp_m1()).ln_1p() / theta;
                x.clamp(-c, c)
            }
            Law::TwoPoint { p, a, b } => {
                let q = self.tilted_weight(theta, p, a, b);
                if rng.gen::<f64>() < q {
                    a
                } else {
                    b
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn cgf_matches_closed_forms() {
        let t: f64 = 0.7;
        assert!((Law::Rademacher.cgf(t) - t.cosh().ln()).abs() < 1e-15);
        let u = Law::Uniform { c: 2.0 };
        assert!((u.cgf(t) - ((2.0 * t).sinh() / (2.0 * t)).ln()).abs() < 1e-14);
        let tp = Law::TwoPoint { p: 0.25, a: 3.0, b: -1.0 };
        assert!((tp.cgf(t) - (0.25 * (3.0 * t).exp() + 0.75 * (-t).exp()).ln()).abs() < 1e-14);
        assert!(u.cgf(1e-6).abs() < 1e-12);
    }

    #[test]
    fn tilted_mean_is_cgf_derivative() {
        let h = 1e-6;
        for law in [Law::Rademacher, Law::Uniform { c: 1.0 }, Law::TwoPoint { p: 0.25, a: 3.0, b: -1.0 }] {
            for t in [-1.3, 0.0, 0.4, 2.0] {
                let d = (law.cgf(t + h) - law.cgf(t - h)) / (2.0 * h);
                assert!((law.tilted_mean(t) - d).abs() < 1e-7, "{law:?} at {t}");
            }
        }
    }

    #[test]
    fn rejects_biased_two_point() {
        assert!(Law::TwoPoint { p: 0.5, a: 1.0, b: -0.5 }.validate().is_err());
        assert!(Law::TwoPoint { p: 0.25, a: 3.0, b: -1.0 }.validate().is_ok());
    }

    #[test]
    fn tilted_uniform_sample_mean() {
        let law = Law::Uniform { c: 1.0 };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 200_000;
        let m: f64 = (0..n).map(|_| law.sample_tilted(1.5, &mut rng)).sum::<f64>() / n as f64;
        assert!((m - law.tilted_mean(1.5)).abs() < 0.005);
    }
}
