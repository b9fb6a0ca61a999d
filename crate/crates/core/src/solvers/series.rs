//! Modal series engine: expansion in a truncated eigensystem with exact
//! exponential time stepping of the Duhamel integrals.
//!
//! The per-mode update over a step of length h with forcing linear in time
//! between f0 and f1 is
//!
//! ```text
//! c <- exp(-x) c + h (phi2(x) f0 + (phi1(x) - phi2(x)) f1),   x = lambda h,
//! ```
//!
//! with phi1(x) = (1 - e^-x)/x and phi2(x) = (1 - e^-x (1 + x))/x^2. The
//! update is exact for forcing that is linear in time, so single-mode decay
//! and constant-forcing responses are reproduced to rounding.

use std::sync::Arc;

use crate::error::Result;
use crate::quadrature::GaussRule;
use crate::spectral::EigenSystem;

/// phi1(x) = (1 - e^-x) / x, stable near zero.
pub fn phi1(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        1.0 - x / 2.0 + x2 / 6.0 - x2 * x / 24.0 + x2 * x2 / 120.0 - x2 * x2 * x / 720.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// phi2(x) = (1 - e^-x (1 + x)) / x^2, stable near zero (the naive quotient
/// loses eps / x^2 to cancellation).
pub fn phi2(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        0.5 - x / 3.0 + x2 / 8.0 - x2 * x / 30.0 + x2 * x2 / 144.0 - x2 * x2 * x / 840.0
    } else {
        (1.0 - (-x).exp() * (1.0 + x)) / (x * x)
    }
}

/// Time-space forcing term f(t, z).
#[derive(Clone)]
pub struct ForcingTerm {
    pub description: String,
    eval: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl ForcingTerm {
    pub fn new(
        description: impl Into<String>,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ForcingTerm {
            description: description.into(),
            eval: Arc::new(f),
        }
    }

    pub fn zero() -> Self {
        ForcingTerm::new("zero", |_, _| 0.0)
    }

    pub fn eval(&self, t: f64, z: f64) -> f64 {
        (self.eval)(t, z)
    }
}

impl std::fmt::Debug for ForcingTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ForcingTerm({})", self.description)
    }
}

/// Precomputed eigenfunction samples plus the exponential stepper.
pub struct SeriesEngine {
    pub eigen: EigenSystem,
    pub quad: GaussRule,
    grid_nodes: Vec<f64>,
    /// phi[n][q] at the quadrature nodes.
    phi_quad: Vec<Vec<f64>>,
    /// phi[n][i] at the grid nodes.
    phi_grid: Vec<Vec<f64>>,
    /// phi_n(1) and phi_n'(1), for boundary traces and Robin residuals.
    phi_at_one: Vec<f64>,
    dphi_at_one: Vec<f64>,
}

impl SeriesEngine {
    pub fn new(eigen: EigenSystem, grid_nodes: &[f64]) -> Self {
        // projections pair one eigenfunction with smooth data, so the rule
        // only needs to resolve a single mode frequency
        let quad =
            GaussRule::for_max_frequency((eigen.count() as f64 + 2.0) * std::f64::consts::PI);
        let phi_quad = (0..eigen.count())
            .map(|n| {
                quad.nodes()
                    .iter()
                    .map(|&z| eigen.eigenfunction(n, z))
                    .collect()
            })
            .collect();
        let phi_grid = (0..eigen.count())
            .map(|n| {
                grid_nodes
                    .iter()
                    .map(|&z| eigen.eigenfunction(n, z))
                    .collect()
            })
            .collect();
        let phi_at_one = (0..eigen.count())
            .map(|n| eigen.eigenfunction(n, 1.0))
            .collect();
        let dphi_at_one = (0..eigen.count())
            .map(|n| eigen.eigenfunction_deriv(n, 1.0))
            .collect();
        SeriesEngine {
            eigen,
            quad,
            grid_nodes: grid_nodes.to_vec(),
            phi_quad,
            phi_grid,
            phi_at_one,
            dphi_at_one,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.eigen.count()
    }

    pub fn grid_nodes(&self) -> &[f64] {
        &self.grid_nodes
    }

    /// Modal coefficients of a function given as a closure.
    pub fn project_fn<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        let samples: Vec<f64> = self.quad.nodes().iter().map(|&z| f(z)).collect();
        self.project_quad_values(&samples)
    }

    /// Modal coefficients of values sampled at the quadrature nodes.
    pub fn project_quad_values(&self, values: &[f64]) -> Vec<f64> {
        (0..self.n_modes())
            .map(|n| {
                self.quad
                    .weights()
                    .iter()
                    .zip(&self.phi_quad[n])
                    .zip(values)
                    .map(|((&w, &p), &v)| w * p * v)
                    .sum()
            })
            .collect()
    }

    pub fn synth_grid(&self, coeffs: &[f64]) -> Vec<f64> {
        self.synth(coeffs, &self.phi_grid, self.grid_nodes.len())
    }

    pub fn synth_quad(&self, coeffs: &[f64]) -> Vec<f64> {
        self.synth(coeffs, &self.phi_quad, self.quad.len())
    }

    fn synth(&self, coeffs: &[f64], basis: &[Vec<f64>], len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for (c, phi) in coeffs.iter().zip(basis) {
            if *c == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(phi) {
                *o += c * p;
            }
        }
        out
    }

    /// Series value at z = 1 (the boundary trace).
    pub fn trace_at_one(&self, coeffs: &[f64]) -> f64 {
        coeffs
            .iter()
            .zip(&self.phi_at_one)
            .map(|(c, p)| c * p)
            .sum()
    }

    /// Series derivative at z = 1.
    pub fn deriv_at_one(&self, coeffs: &[f64]) -> f64 {
        coeffs
            .iter()
            .zip(&self.dphi_at_one)
            .map(|(c, p)| c * p)
            .sum()
    }

    /// One exponential step with modal forcing linear between f0 and f1.
    pub fn advance(&self, coeffs: &mut [f64], dt: f64, f0: &[f64], f1: &[f64]) {
        for n in 0..coeffs.len() {
            let x = self.eigen.lambdas[n] * dt;
            let e = (-x).exp();
            let p2 = phi2(x);
            let p1 = phi1(x);
            coeffs[n] = e * coeffs[n] + dt * (p2 * f0[n] + (p1 - p2) * f1[n]);
        }
    }

    /// Crude tail indicator: last retained modal amplitude times the sup of
    /// its eigenfunction. Reported alongside series solutions so truncation
    /// quality is visible.
    pub fn truncation_indicator(&self, coeffs: &[f64]) -> f64 {
        match coeffs.last() {
            Some(c) => c.abs() * self.eigen.normalizers[self.n_modes() - 1],
            None => 0.0,
        }
    }
}

/// Evolves `u0` (given by modal coefficients) under the eigensystem dynamics
/// with forcing `f`, sampling the forcing at `n_steps` uniform times, and
/// returns the profile on the engine grid at time `t`.
pub fn series_evolve(
    engine: &SeriesEngine,
    u0_coeffs: &[f64],
    forcing: &ForcingTerm,
    t: f64,
    n_steps: usize,
) -> Result<Vec<f64>> {
    if t < 0.0 || n_steps == 0 {
        return Err(crate::Error::Domain("need t >= 0 and n_steps >= 1".into()));
    }
    let dt = t / n_steps as f64;
    let mut coeffs = u0_coeffs.to_vec();
    let sample = |time: f64| -> Vec<f64> {
        let vals: Vec<f64> = engine
            .quad
            .nodes()
            .iter()
            .map(|&z| forcing.eval(time, z))
            .collect();
        engine.project_quad_values(&vals)
    };
    let mut f0 = sample(0.0);
    for step in 0..n_steps {
        let t1 = (step + 1) as f64 * dt;
        let f1 = sample(t1);
        engine.advance(&mut coeffs, dt, &f0, &f1);
        f0 = f1;
    }
    Ok(engine.synth_grid(&coeffs))
}

/// Boundary lifting for loop A: w1 = u1 - (1 - z) d.
pub fn homogenize(u1: &[f64], nodes: &[f64], d: f64) -> Vec<f64> {
    u1.iter()
        .zip(nodes)
        .map(|(&u, &z)| u - (1.0 - z) * d)
        .collect()
}

/// Inverse lifting: u1 = w1 + (1 - z) d.
pub fn dehomogenize(w1: &[f64], nodes: &[f64], d: f64) -> Vec<f64> {
    w1.iter()
        .zip(nodes)
        .map(|(&w, &z)| w + (1.0 - z) * d)
        .collect()
}
