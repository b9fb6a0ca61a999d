// `!(x > 0.0)`-style guards intentionally reject NaN together with the
// excluded range; time-stepping chains index several step-offset arrays at
// once, where explicit indices read better than zipped iterators.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

//! Simulation and stability certification of two coupled parabolic-hyperbolic
//! PDE loops on the unit interval, in the spatial sup norm.
//!
//! The library covers two model families:
//!
//! * **Loop A** — a reaction-diffusion equation coupled to a zero-speed
//!   hyperbolic equation (a spatially parameterized ODE), with a Dirichlet
//!   boundary disturbance. This family contains the dimensionless model of
//!   chemical transport in groundwater and, after a time rescale, the wave
//!   equation with Kelvin-Voigt and viscous damping.
//! * **Loop B** — a reaction-diffusion equation with a Robin boundary
//!   condition, coupled through a non-local integral term and a boundary
//!   trace term to a transport equation of speed `c`. The stability
//!   certificate for this family is independent of `c`, so it doubles as a
//!   delay-independent condition for the equivalent delay PDE.
//!
//! Functionality is organized as:
//!
//! * [`params`], [`signal`], [`transforms`] — parameter sets, disturbance
//!   signals and the closed-form transformations between model families;
//! * [`spectral`] — Sturm-Liouville eigensystems, positive weight functions
//!   and weighted sup norms;
//! * [`solvers`] — a modal series engine, exact transport by characteristics,
//!   Picard fixed-point solvers and a Crank-Nicolson reference;
//! * [`certify`] — evaluation of every small-gain stability condition, the
//!   magnification-factor curve `g(s)` and explicit ISS constants;
//! * [`verify`] — empirical decay fitting, pointwise ISS bound checking,
//!   sharpness probes and delay-independence sweeps;
//! * [`config`], [`runner`], [`report`] — the configuration-driven run layer
//!   shared by the CLI.

pub mod certify;
pub mod config;
pub mod error;
pub mod grid;
pub mod params;
pub mod quadrature;
pub mod report;
pub mod root;
pub mod runner;
pub mod signal;
pub mod solvers;
pub mod spectral;
pub mod transforms;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{Grid, Trajectory};
pub use params::{
    BacksteppingParams, ChemicalParams, Kernel, LoopAParams, LoopBParams, WaveKVParams,
};
pub use signal::DisturbanceSignal;
pub use spectral::{EigenSystem, WeightFunction};
