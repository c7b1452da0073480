//! Class-K∞ comparison functions with evaluation, inverse and derivative.

use std::fmt;
use std::sync::Arc;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A class-K∞ function `[0, ∞) → [0, ∞)`.
#[derive(Clone)]
pub enum ClassK {
    /// `s ↦ gain · s`
    Linear { gain: f64 },
    /// `s ↦ gain · s^exponent`
    Power { gain: f64, exponent: f64 },
    /// Arbitrary function with its inverse. The derivative falls back to a
    /// central difference.
    Custom {
        name: String,
        eval: ScalarFn,
        inverse: ScalarFn,
    },
}

impl fmt::Debug for ClassK {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Linear { gain } => write!(f, "Linear({gain})"),
            Self::Power { gain, exponent } => write!(f, "Power({gain}·s^{exponent})"),
            Self::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl ClassK {
    pub fn linear(gain: f64) -> Self {
        Self::Linear { gain }
    }

    pub fn power(gain: f64, exponent: f64) -> Self {
        Self::Power { gain, exponent }
    }

    pub fn custom(
        name: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        inverse: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::Custom {
            name: name.into(),
            eval: Arc::new(eval),
            inverse: Arc::new(inverse),
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Self::Linear { gain } => gain * s,
            Self::Power { gain, exponent } => gain * s.powf(*exponent),
            Self::Custom { eval, .. } => eval(s),
        }
    }

    pub fn inverse(&self, r: f64) -> f64 {
        match self {
            Self::Linear { gain } => r / gain,
            Self::Power { gain, exponent } => (r / gain).powf(exponent.recip()),
            Self::Custom { inverse, .. } => inverse(r),
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match self {
            Self::Linear { gain } => *gain,
            Self::Power { gain, exponent } => {
                if s == 0.0 {
                    if *exponent > 1.0 {
                        0.0
                    } else if *exponent == 1.0 {
                        *gain
                    } else {
                        f64::INFINITY
                    }
                } else {
                    gain * exponent * s.powf(exponent - 1.0)
                }
            }
            Self::Custom { eval, .. } => {
                let step = 1e-6 * s.abs().max(1.0);
                let lo = (s - step).max(0.0);
                (eval(s + step) - eval(lo)) / (s + step - lo)
            }
        }
    }

    /// Gain of a linear function, `None` otherwise (a power law with unit
    /// exponent counts as linear).
    pub fn linear_gain(&self) -> Option<f64> {
        match self {
            Self::Linear { gain } => Some(*gain),
            Self::Power { gain, exponent } if *exponent == 1.0 => Some(*gain),
            _ => None,
        }
    }

    /// Pointwise minimum of two class-K∞ functions.
    pub fn min(a: &ClassK, b: &ClassK) -> Self {
        if let (Some(ga), Some(gb)) = (a.linear_gain(), b.linear_gain()) {
            return Self::Linear { gain: ga.min(gb) };
        }
        let (ea, eb) = (a.clone(), b.clone());
        let (ia, ib) = (a.clone(), b.clone());
        Self::custom(
            format!("min({a:?}, {b:?})"),
            move |s| ea.eval(s).min(eb.eval(s)),
            move |r| ia.inverse(r).max(ib.inverse(r)),
        )
    }

    /// `s ↦ c · self(s)`.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            Self::Linear { gain } => Self::Linear { gain: c * gain },
            Self::Power { gain, exponent } => Self::Power {
                gain: c * gain,
                exponent: *exponent,
            },
            Self::Custom {
                name,
                eval,
                inverse,
            } => {
                let (eval, inverse) = (eval.clone(), inverse.clone());
                Self::custom(
                    format!("{c}·{name}"),
                    move |s| c * eval(s),
                    move |r| inverse(r / c),
                )
            }
        }
    }
}
