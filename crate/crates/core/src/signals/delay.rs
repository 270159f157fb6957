//! Pairwise delay functions, continuous and bounded by the global delay cap.

use super::SignalError;

/// A time delay signal `tau(t)`, guaranteed continuous and within
/// `[0, tau_max]` by construction.
#[derive(Debug, Clone, PartialEq)]
pub enum DelaySpec {
    Constant {
        value: f64,
    },
    /// `tau(t) = base + amplitude * sin(angular_freq * t + phase)`.
    Sinusoid {
        base: f64,
        amplitude: f64,
        angular_freq: f64,
        phase: f64,
    },
}

impl DelaySpec {
    pub fn zero() -> Self {
        DelaySpec::Constant { value: 0.0 }
    }

    /// Check the bound `0 <= tau(t) <= tau_max` analytically.
    pub fn validate(&self, tau_max: f64) -> Result<(), SignalError> {
        match *self {
            DelaySpec::Constant { value } => {
                if !value.is_finite() || value < 0.0 || value > tau_max {
                    return Err(SignalError::InvalidSpec(format!(
                        "constant delay {value} outside [0, {tau_max}]"
                    )));
                }
            }
            DelaySpec::Sinusoid {
                base,
                amplitude,
                angular_freq,
                phase,
            } => {
                if ![base, amplitude, angular_freq, phase]
                    .iter()
                    .all(|v| v.is_finite())
                {
                    return Err(SignalError::InvalidSpec(
                        "sinusoid delay has non-finite parameter".into(),
                    ));
                }
                if amplitude < 0.0 {
                    return Err(SignalError::InvalidSpec(format!(
                        "sinusoid amplitude {amplitude} must be nonnegative"
                    )));
                }
                if base - amplitude < 0.0 {
                    return Err(SignalError::InvalidSpec(format!(
                        "sinusoid delay dips below zero: base {base} - amplitude {amplitude} < 0"
                    )));
                }
                if base + amplitude > tau_max {
                    return Err(SignalError::InvalidSpec(format!(
                        "sinusoid delay exceeds the bound: base {base} + amplitude {amplitude} > {tau_max}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            DelaySpec::Constant { value } => value,
            DelaySpec::Sinusoid {
                base,
                amplitude,
                angular_freq,
                phase,
            } => base + amplitude * (angular_freq * t + phase).sin(),
        }
    }

    pub fn max_value(&self) -> f64 {
        match *self {
            DelaySpec::Constant { value } => value,
            DelaySpec::Sinusoid {
                base, amplitude, ..
            } => base + amplitude,
        }
    }
}
