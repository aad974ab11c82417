//! Observables `f: [0, 1] -> R` used by the dynamical and chain models.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Observable {
    /// `f(x) = value`.
    Constant { value: f64 },
    /// `f(x) = x`.
    Identity,
    /// `f(x) = cos(2 pi k x)`.
    Cosine { freq: u32 },
    /// `f(x) = sin(2 pi k x)`.
    Sine { freq: u32 },
    /// `f(x) = |x - c|^alpha`, Hoelder of order `alpha`.
    Holder { alpha: f64, center: f64 },
    /// `f(x) = 1{x >= threshold}`; bounded variation, not continuous.
    Step { threshold: f64 },
}

impl Observable {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Observable::Holder { alpha, center } => {
                if !(alpha > 0.0 && alpha <= 1.0) {
                    return Err(Error::param("alpha", format!("{alpha} not in (0, 1]")));
                }
                if !(0.0..=1.0).contains(&center) {
                    return Err(Error::param("center", "must lie in [0, 1]"));
                }
            }
            Observable::Step { threshold } if !(threshold > 0.0 && threshold < 1.0) => {
                return Err(Error::param("threshold", "must lie in (0, 1)"));
            }
            Observable::Cosine { freq } | Observable::Sine { freq } if freq == 0 => {
                return Err(Error::param("freq", "must be positive"));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Observable::Constant { value } => value,
            Observable::Identity => x,
            Observable::Cosine { freq } => (2.0 * PI * freq as f64 * x).cos(),
            Observable::Sine { freq } => (2.0 * PI * freq as f64 * x).sin(),
            Observable::Holder { alpha, center } => (x - center).abs().powf(alpha),
            Observable::Step { threshold } => {
                if x >= threshold {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Points where `f` fails to be smooth; quadrature splits there.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Observable::Holder { center, .. } => vec![center],
            Observable::Step { threshold } => vec![threshold],
            _ => vec![],
        }
    }

    /// `sup |f|` over `[0, 1]`.
    pub fn sup_abs(&self) -> f64 {
        match *self {
            Observable::Holder { alpha, center } => center.max(1.0 - center).powf(alpha),
            Observable::Constant { value } => value.abs(),
            _ => 1.0,
        }
    }

    /// Lipschitz constant, if finite.
    pub fn lipschitz(&self) -> Option<f64> {
        match *self {
            Observable::Constant { .. } => Some(0.0),
            Observable::Identity => Some(1.0),
            Observable::Cosine { freq } | Observable::Sine { freq } => Some(2.0 * PI * freq as f64),
            Observable::Holder { alpha: 1.0, .. } => Some(1.0),
            _ => None,
        }
    }

    /// `int_0^1 f(x) p(x) dx` for a density `p` (Gauss-Legendre, split at breakpoints).
    pub fn integrate_against<P: Fn(f64) -> f64>(&self, density: P) -> f64 {
        crate::numerics::integrate(|x| self.eval(x) * density(x), 0.0, 1.0, &self.breakpoints(), 64)
    }
}
