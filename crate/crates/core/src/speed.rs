//! Speed sequences `a_n` with `a_n -> 0` and `n a_n -> infinity`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpeedSequence {
    /// `a_n = n^{-gamma}` with `0 < gamma < 1`.
    Power { gamma: f64 },
    /// `a_1, a_2, ...` given explicitly.
    Explicit { values: Vec<f64> },
}

impl SpeedSequence {
    pub fn power(gamma: f64) -> Result<Self> {
        let s = SpeedSequence::Power { gamma };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SpeedSequence::Power { gamma } => {
                if !(*gamma > 0.0 && *gamma < 1.0) {
                    return Err(Error::param("gamma", format!("{gamma} not in (0, 1)")));
                }
            }
            SpeedSequence::Explicit { values } => {
                if values.is_empty() || values.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
                    return Err(Error::param("values", "speed values must be positive and finite"));
                }
                for (i, w) in values.windows(2).enumerate() {
                    let n = (i + 1) as f64;
                    if w[1] > w[0] || (n + 1.0) * w[1] < n * w[0] {
                        return Err(Error::param(
                            "values",
                            format!("need a_n nonincreasing and n a_n nondecreasing (fails at n = {})", i + 2),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// `a_n` for `n >= 1`.
    pub fn value(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::Domain { value: 0.0, domain: "n >= 1" });
        }
        match self {
            SpeedSequence::Power { gamma } => Ok((n as f64).powf(-gamma)),
            SpeedSequence::Explicit { values } => values
                .get((n - 1) as usize)
                .copied()
                .ok_or(Error::Domain { value: n as f64, domain: "indices covered by the explicit list" }),
        }
    }
}
