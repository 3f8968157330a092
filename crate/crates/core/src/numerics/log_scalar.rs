use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul};

/// Nonnegative real stored as its natural logarithm.
///
/// Zero is carried by a flag; when `is_zero` is set the magnitude field is
/// ignored everywhere.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LogScalar {
    log_magnitude: f64,
    is_zero: bool,
}

impl LogScalar {
    pub const ZERO: LogScalar = LogScalar {
        log_magnitude: f64::NEG_INFINITY,
        is_zero: true,
    };
    pub const ONE: LogScalar = LogScalar {
        log_magnitude: 0.0,
        is_zero: false,
    };

    /// Builds the scalar `exp(log)`. `-inf` maps to zero.
    pub fn from_ln(log: f64) -> Self {
        if log == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogScalar {
                log_magnitude: log,
                is_zero: false,
            }
        }
    }

    /// Panics on negative or NaN input.
    pub fn from_value(x: f64) -> Self {
        assert!(x >= 0.0, "LogScalar::from_value needs x >= 0, got {x}");
        if x == 0.0 {
            Self::ZERO
        } else {
            Self::from_ln(x.ln())
        }
    }

    pub fn is_zero(&self) -> bool {
        self.is_zero
    }

    /// Natural log; `-inf` for zero.
    pub fn ln(&self) -> f64 {
        if self.is_zero {
            f64::NEG_INFINITY
        } else {
            self.log_magnitude
        }
    }

    pub fn log2(&self) -> f64 {
        self.ln() / std::f64::consts::LN_2
    }

    /// Linear value; may overflow to `inf` or underflow to `0`.
    pub fn value(&self) -> f64 {
        if self.is_zero {
            0.0
        } else {
            self.log_magnitude.exp()
        }
    }

    pub fn powf(&self, p: f64) -> Self {
        if self.is_zero {
            if p > 0.0 {
                Self::ZERO
            } else {
                Self::ONE
            }
        } else {
            Self::from_ln(self.log_magnitude * p)
        }
    }

    /// Log-sum-exp over an iterator.
    pub fn sum<I: IntoIterator<Item = LogScalar>>(items: I) -> Self {
        let items: Vec<LogScalar> = items.into_iter().filter(|x| !x.is_zero).collect();
        let Some(max) = items
            .iter()
            .map(|x| x.log_magnitude)
            .max_by(|a, b| a.total_cmp(b))
        else {
            return Self::ZERO;
        };
        if max == f64::INFINITY {
            return Self::from_ln(f64::INFINITY);
        }
        let acc: f64 = items.iter().map(|x| (x.log_magnitude - max).exp()).sum();
        Self::from_ln(max + acc.ln())
    }
}

impl Default for LogScalar {
    fn default() -> Self {
        Self::ZERO
    }
}

impl Add for LogScalar {
    type Output = LogScalar;

    fn add(self, rhs: LogScalar) -> LogScalar {
        match (self.is_zero, rhs.is_zero) {
            (true, _) => rhs,
            (_, true) => self,
            _ => {
                let (hi, lo) = if self.log_magnitude >= rhs.log_magnitude {
                    (self.log_magnitude, rhs.log_magnitude)
                } else {
                    (rhs.log_magnitude, self.log_magnitude)
                };
                if hi == f64::INFINITY {
                    return Self::from_ln(hi);
                }
                Self::from_ln(hi + (lo - hi).exp().ln_1p())
            }
        }
    }
}

impl Mul for LogScalar {
    type Output = LogScalar;

    fn mul(self, rhs: LogScalar) -> LogScalar {
        if self.is_zero || rhs.is_zero {
            Self::ZERO
        } else {
            Self::from_ln(self.log_magnitude + rhs.log_magnitude)
        }
    }
}

impl Div for LogScalar {
    type Output = LogScalar;

    /// Panics on division by zero.
    fn div(self, rhs: LogScalar) -> LogScalar {
        assert!(!rhs.is_zero, "LogScalar division by zero");
        if self.is_zero {
            Self::ZERO
        } else {
            Self::from_ln(self.log_magnitude - rhs.log_magnitude)
        }
    }
}

impl PartialEq for LogScalar {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for LogScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.ln().partial_cmp(&other.ln())
    }
}

impl fmt::Display for LogScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero {
            write!(f, "0")
        } else {
            write!(f, "exp({})", self.log_magnitude)
        }
    }
}
