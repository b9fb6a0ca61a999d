//! Time evolution of both loops: the modal series engine, exact transport by
//! characteristics, Picard fixed-point solvers, and a Crank-Nicolson
//! finite-difference reference.
//!
//! Every simulation is a pure function of (parameters, initial data,
//! disturbance, grid); reruns are bit-identical.

pub mod fd;
pub mod loop_a;
pub mod loop_b;
pub mod picard;
pub mod series;

pub use fd::{fd_loop_a, fd_loop_b};
pub use loop_a::simulate_loop_a;
pub use loop_b::simulate_loop_b;
pub use picard::{picard_loop_a, picard_loop_b};
pub use series::{dehomogenize, homogenize, series_evolve, ForcingTerm, SeriesEngine};

use crate::error::{Error, Result};
use crate::spectral::WeightFunction;

/// Knobs shared by the solvers.
#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Series truncation.
    pub n_modes: usize,
    /// Weight behind the stored weighted norms (`None`: plain sup norm).
    pub weight: Option<WeightFunction>,
    /// Corrector sweeps of the per-step coupling fixed point.
    pub corrector_sweeps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            n_modes: 64,
            weight: None,
            corrector_sweeps: 3,
        }
    }
}

impl SolverOptions {
    pub fn with_modes(n_modes: usize) -> Self {
        SolverOptions {
            n_modes,
            ..Default::default()
        }
    }

    pub fn with_weight(weight: WeightFunction) -> Self {
        SolverOptions {
            weight: Some(weight),
            ..Default::default()
        }
    }
}

pub(crate) fn check_compat(label: &str, actual: f64, expected: f64, scale: f64) -> Result<()> {
    let tol = 1e-8 * scale.abs().max(1.0);
    if (actual - expected).abs() > tol {
        return Err(Error::IncompatibleData(format!(
            "{label}: got {actual}, required {expected}"
        )));
    }
    Ok(())
}
