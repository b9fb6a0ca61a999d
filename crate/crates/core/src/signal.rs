//! Boundary disturbance signals.
//!
//! All four kinds are continuous on [0, inf) with an analytic first
//! derivative, which the boundary-lifting step of the loop-A solver needs.

use serde::{Deserialize, Serialize};

/// A scalar disturbance signal d(t) applied at the z = 0 boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceSignal {
    /// d(t) = 0.
    Zero,
    /// d(t) = amplitude.
    Constant { amplitude: f64 },
    /// d(t) = amplitude * sin(omega t + phase).
    Sinusoid {
        amplitude: f64,
        omega: f64,
        phase: f64,
    },
    /// Cubic ramp from 0 to amplitude over [0, rise_time], constant after.
    /// C^1 at both junctions.
    SmoothedStep { amplitude: f64, rise_time: f64 },
}

impl DisturbanceSignal {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            DisturbanceSignal::Zero => 0.0,
            DisturbanceSignal::Constant { amplitude } => amplitude,
            DisturbanceSignal::Sinusoid {
                amplitude,
                omega,
                phase,
            } => amplitude * (omega * t + phase).sin(),
            DisturbanceSignal::SmoothedStep {
                amplitude,
                rise_time,
            } => {
                if t >= rise_time {
                    amplitude
                } else if t <= 0.0 {
                    0.0
                } else {
                    let x = t / rise_time;
                    amplitude * x * x * (3.0 - 2.0 * x)
                }
            }
        }
    }

    /// Analytic derivative d'(t).
    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            DisturbanceSignal::Zero | DisturbanceSignal::Constant { .. } => 0.0,
            DisturbanceSignal::Sinusoid {
                amplitude,
                omega,
                phase,
            } => amplitude * omega * (omega * t + phase).cos(),
            DisturbanceSignal::SmoothedStep {
                amplitude,
                rise_time,
            } => {
                if t >= rise_time || t <= 0.0 {
                    0.0
                } else {
                    let x = t / rise_time;
                    amplitude * 6.0 * x * (1.0 - x) / rise_time
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            DisturbanceSignal::Zero => true,
            DisturbanceSignal::Constant { amplitude } => amplitude == 0.0,
            DisturbanceSignal::Sinusoid { amplitude, .. }
            | DisturbanceSignal::SmoothedStep { amplitude, .. } => amplitude == 0.0,
        }
    }

    /// Signal parameters are finite and the kind-specific constraints hold.
    pub fn validate(&self) -> crate::Result<()> {
        let ok = match *self {
            DisturbanceSignal::Zero => true,
            DisturbanceSignal::Constant { amplitude } => amplitude.is_finite(),
            DisturbanceSignal::Sinusoid {
                amplitude,
                omega,
                phase,
            } => amplitude.is_finite() && omega.is_finite() && phase.is_finite(),
            DisturbanceSignal::SmoothedStep {
                amplitude,
                rise_time,
            } => amplitude.is_finite() && rise_time.is_finite() && rise_time > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(crate::Error::InvalidParameter(
                "disturbance signal parameters must be finite (rise_time > 0)".into(),
            ))
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            DisturbanceSignal::Zero => "zero".into(),
            DisturbanceSignal::Constant { amplitude } => format!("constant({amplitude})"),
            DisturbanceSignal::Sinusoid {
                amplitude,
                omega,
                phase,
            } => {
                format!("sinusoid(A={amplitude}, omega={omega}, phase={phase})")
            }
            DisturbanceSignal::SmoothedStep {
                amplitude,
                rise_time,
            } => {
                format!("smoothed_step(A={amplitude}, rise={rise_time})")
            }
        }
    }
}
