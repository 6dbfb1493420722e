//! Scalar threshold operators `T_tau` applied coordinatewise.
//!
//! Both kinds satisfy `T_tau(x) = 0` for `|x| <= tau` and `|T_tau(x) - x| <= tau`
//! for every `x`, with both inequalities holding in floating point.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdOperator {
    #[default]
    Soft,
    Hard,
}

impl ThresholdOperator {
    /// Scalar operator. `tau` is assumed valid (finite, `>= 0`).
    #[inline]
    pub fn eval(self, x: f64, tau: f64) -> f64 {
        let a = x.abs();
        if a <= tau {
            return 0.0;
        }
        match self {
            Self::Hard => x,
            Self::Soft => {
                // Round a - tau upward so that a - shrunk never exceeds tau.
                let mut shrunk = a - tau;
                if a - shrunk > tau {
                    shrunk = shrunk.next_up();
                }
                shrunk.copysign(x)
            }
        }
    }

    pub fn apply(self, v: &[f64], tau: f64) -> Result<Vec<f64>> {
        check_tau(tau)?;
        Ok(v.iter().map(|&x| self.eval(x, tau)).collect())
    }

    pub fn apply_in_place(self, v: &mut [f64], tau: f64) -> Result<()> {
        check_tau(tau)?;
        v.iter_mut().for_each(|x| *x = self.eval(*x, tau));
        Ok(())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Soft => "soft",
            Self::Hard => "hard",
        }
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "threshold level must be finite and >= 0, got {tau}"
        )))
    }
}

impl fmt::Display for ThresholdOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ThresholdOperator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "soft" => Ok(Self::Soft),
            "hard" => Ok(Self::Hard),
            other => Err(format!(
                "unknown threshold operator {other:?} (expected soft or hard)"
            )),
        }
    }
}
