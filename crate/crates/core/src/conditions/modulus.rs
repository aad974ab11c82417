use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Concave nondecreasing modulus of continuity `c` with `c(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Modulus {
    /// `c(t) = scale * t`.
    Linear { scale: f64 },
    /// `c(t) = scale * t^alpha`, `0 < alpha <= 1`.
    Power { alpha: f64, scale: f64 },
    /// `c(t) = scale * |log t|^{-gamma}` for `t <= exp(-(gamma + 1))`,
    /// continued by its tangent line beyond that point (where the log form
    /// stops being concave).
    LogPower { gamma: f64, scale: f64 },
}

impl Modulus {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Modulus::Linear { scale } if scale > 0.0 => Ok(()),
            Modulus::Power { alpha, scale } if alpha > 0.0 && alpha <= 1.0 && scale > 0.0 => Ok(()),
            Modulus::LogPower { gamma, scale } if gamma > 0.0 && scale > 0.0 => Ok(()),
            _ => Err(Error::param("modulus", format!("{self:?} is not a valid concave modulus"))),
        }
    }

    fn log_knee(gamma: f64) -> f64 {
        gamma + 1.0
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            Modulus::Linear { scale } => scale * t,
            Modulus::Power { alpha, scale } => scale * t.powf(alpha),
            Modulus::LogPower { gamma, scale } => {
                let u0 = Self::log_knee(gamma);
                let t0 = (-u0).exp();
                if t <= t0 {
                    scale * (-t.ln()).powf(-gamma)
                } else {
                    let slope = scale * gamma * u0.powf(-gamma - 1.0) / t0;
                    scale * u0.powf(-gamma) + slope * (t - t0)
                }
            }
        }
    }

    /// `c(exp(-u))`, usable far below the smallest positive double.
    pub fn eval_neg_log(&self, u: f64) -> f64 {
        match *self {
            Modulus::Linear { scale } => scale * (-u).exp(),
            Modulus::Power { alpha, scale } => scale * (-alpha * u).exp(),
            Modulus::LogPower { gamma, scale } => {
                if u >= Self::log_knee(gamma) {
                    scale * u.powf(-gamma)
                } else {
                    self.eval((-u).exp())
                }
            }
        }
    }

    /// Midpoint concavity and monotonicity on `n` random-free probe pairs in `(0, 1/2]`.
    pub fn concavity_spot_check(&self, n: usize) -> bool {
        (1..=n).all(|i| {
            let a = 0.5 * (i as f64 / (n as f64 + 1.0)).powi(3);
            let b = 0.5 * ((i as f64 + 0.5) / (n as f64 + 1.0)).sqrt();
            let (lo, hi) = (a.min(b), a.max(b));
            let mid = self.eval(0.5 * (lo + hi));
            let chord = 0.5 * (self.eval(lo) + self.eval(hi));
            mid >= chord - 1e-12 && self.eval(hi) >= self.eval(lo) - 1e-15
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_power_is_continuous_at_knee() {
        let m = Modulus::LogPower { gamma: 0.75, scale: 1.0 };
        let t0 = (-1.75f64).exp();
        assert!((m.eval(t0 * (1.0 - 1e-9)) - m.eval(t0 * (1.0 + 1e-9))).abs() < 1e-8);
        assert!(m.concavity_spot_check(100));
        assert!((m.eval_neg_log(1000.0) - 1000f64.powf(-0.75)).abs() < 1e-15);
    }

    #[test]
    fn power_modulus_concave() {
        assert!(Modulus::Power { alpha: 0.3, scale: 2.0 }.concavity_spot_check(100));
        assert!(Modulus::Power { alpha: 1.5, scale: 1.0 }.validate().is_err());
    }
}
