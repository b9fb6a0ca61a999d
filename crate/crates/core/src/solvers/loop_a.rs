//! Spectral solver for loop A.
//!
//! The boundary disturbance is lifted out with w1 = u1 - (1 - z) d(t), which
//! turns the parabolic line into a homogeneous Dirichlet problem driven by
//!
//! ```text
//! F(t, z) = r b_tilde u2(t, z) - (1 - z) (d'(t) + k d(t)),
//! ```
//!
//! stepped in the sine eigensystem by exact exponential quadrature on
//! forcing held piecewise linear in time. The relaxation line
//! u2_t = a_tilde u1 - b_tilde u2 is an ODE at every node and advances with
//! the same exponential rule. The step couples both updates through a fixed
//! small number of corrector sweeps.
//!
//! Boundary identities hold to rounding: the sine synthesis vanishes at
//! z = 1 and the lifting restores u1(t, 0) = d(t) exactly.

use crate::error::Result;
use crate::grid::{Grid, Trajectory, TrajectoryMeta};
use crate::params::LoopAParams;
use crate::signal::DisturbanceSignal;
use crate::solvers::series::{dehomogenize, phi1, phi2, SeriesEngine};
use crate::solvers::{check_compat, SolverOptions};
use crate::spectral::EigenSystem;

pub fn simulate_loop_a(
    params: &LoopAParams,
    u1_0: &dyn Fn(f64) -> f64,
    u2_0: &dyn Fn(f64) -> f64,
    d: &DisturbanceSignal,
    grid: &Grid,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    params.validate()?;
    grid.validate()?;
    d.validate()?;
    check_compat(
        "boundary compatibility d(0) = u1_0(0)",
        u1_0(0.0),
        d.eval(0.0),
        d.eval(0.0),
    )?;
    check_compat("boundary compatibility u1_0(1) = 0", u1_0(1.0), 0.0, 1.0)?;

    let nodes = grid.nodes();
    let engine = SeriesEngine::new(
        EigenSystem::dirichlet_dirichlet(params.reaction_k, opts.n_modes),
        &nodes,
    );
    let quad_nodes: Vec<f64> = engine.quad.nodes().to_vec();

    // modal image of the lifting profile (1 - z)
    let lift_modal = engine.project_fn(|z| 1.0 - z);

    // state: w1 modes, u2 at quadrature and grid nodes
    let d0 = d.eval(0.0);
    let mut coeffs = engine.project_fn(|z| u1_0(z) - (1.0 - z) * d0);
    let mut u2_quad: Vec<f64> = quad_nodes.iter().map(|&z| u2_0(z)).collect();
    let mut u2_grid: Vec<f64> = nodes.iter().map(|&z| u2_0(z)).collect();

    let mut traj = Trajectory::new(
        nodes.clone(),
        opts.weight.clone(),
        TrajectoryMeta {
            solver: "spectral-loop-a".into(),
            model: serde_json::to_string(params)?,
            disturbance: d.describe(),
        },
    );
    let u1_initial: Vec<f64> = nodes.iter().map(|&z| u1_0(z)).collect();
    traj.push(0.0, u1_initial, u2_grid.clone())?;

    let dt = grid.dt;
    let rb = params.r * params.b_tilde;
    let x2 = params.b_tilde * dt;
    let (e2, p1_2, p2_2) = ((-x2).exp(), phi1(x2), phi2(x2));

    // modal forcing of w1 from the current u2 samples and lifting terms
    let modal_forcing = |u2q: &[f64], t: f64| -> Vec<f64> {
        let g = -(d.derivative(t) + params.reaction_k * d.eval(t));
        let mut f = engine.project_quad_values(u2q);
        for (fi, li) in f.iter_mut().zip(&lift_modal) {
            *fi = rb * *fi + g * li;
        }
        f
    };
    // exponential step of the relaxation line at a set of nodes, with u1
    // linear in time between g0 and g1 samples
    let step_u2 = |u2: &[f64], g0: &[f64], g1: &[f64]| -> Vec<f64> {
        u2.iter()
            .zip(g0.iter().zip(g1))
            .map(|(&u, (&a0, &a1))| {
                e2 * u + dt * (p2_2 * params.a_tilde * a0 + (p1_2 - p2_2) * params.a_tilde * a1)
            })
            .collect()
    };

    let mut u1_quad = {
        let w = engine.synth_quad(&coeffs);
        dehomogenize(&w, &quad_nodes, d0)
    };

    for step in 0..grid.n_steps() {
        let t0 = step as f64 * dt;
        let t1 = t0 + dt;
        let d1 = d.eval(t1);
        let f0 = modal_forcing(&u2_quad, t0);

        // predictor: freeze u1 across the step for u2, then correct
        let mut u2_next = step_u2(&u2_quad, &u1_quad, &u1_quad);
        let mut coeffs_next = coeffs.clone();
        let mut u1_next = u1_quad.clone();
        for _ in 0..=opts.corrector_sweeps {
            let f1 = modal_forcing(&u2_next, t1);
            coeffs_next = coeffs.clone();
            engine.advance(&mut coeffs_next, dt, &f0, &f1);
            u1_next = dehomogenize(&engine.synth_quad(&coeffs_next), &quad_nodes, d1);
            u2_next = step_u2(&u2_quad, &u1_quad, &u1_next);
        }

        coeffs = coeffs_next;
        u1_quad = u1_next;
        u2_quad = u2_next;
        // grid values of u2 advance with the same exact rule, using the u1
        // grid profiles at both ends of the step
        let u1_grid_next = dehomogenize(&engine.synth_grid(&coeffs), &nodes, d1);
        let u1_grid_prev = traj.u1.last().expect("pushed initial step");
        u2_grid = u2_grid
            .iter()
            .zip(u1_grid_prev.iter().zip(&u1_grid_next))
            .map(|(&u, (&a0, &a1))| {
                e2 * u + dt * (p2_2 * params.a_tilde * a0 + (p1_2 - p2_2) * params.a_tilde * a1)
            })
            .collect();
        traj.push(t1, u1_grid_next, u2_grid.clone())?;
    }
    Ok(traj)
}
