//! Picard fixed-point solvers.
//!
//! Both loops satisfy integral equations: the parabolic line is a modal
//! Duhamel integral driven by the other line, and the other line is either
//! an exponential relaxation integral (loop A) or an exact characteristic
//! shift of the boundary trace (loop B). Iterating the pair on a time
//! window contracts when the window is short enough relative to the
//! coupling strength; windows are chained by restarting from the converged
//! state, and a diverging window is halved and retried.

use crate::error::{Error, Result};
use crate::grid::{Grid, Trajectory, TrajectoryMeta};
use crate::params::{LoopAParams, LoopBParams};
use crate::signal::DisturbanceSignal;
use crate::solvers::fd::cubic_uniform;
use crate::solvers::loop_b::kernel_mode_matrix;
use crate::solvers::series::{dehomogenize, phi1, phi2, SeriesEngine};
use crate::solvers::{check_compat, SolverOptions};
use crate::spectral::EigenSystem;

const PICARD_TOL: f64 = 1e-9;
const MAX_SWEEPS: usize = 400;
const MAX_HALVINGS: usize = 5;

/// Window length heuristic: the reciprocal of twice the coupling strength,
/// the same quantity a damping shift would have to dominate.
fn default_window(t_end: f64, dt: f64, coupling: f64) -> f64 {
    let w = (1.0 / (2.0 * coupling.max(0.5))).max(10.0 * dt).min(t_end);
    // round down to a whole number of steps
    let steps = (w / dt).floor().max(1.0);
    steps * dt
}

struct WindowPlan {
    steps_total: usize,
    steps_window: usize,
}

impl WindowPlan {
    fn new(grid: &Grid, window: f64) -> Result<Self> {
        let steps_window = (window / grid.dt).round().max(1.0) as usize;
        Ok(WindowPlan {
            steps_total: grid.n_steps(),
            steps_window,
        })
    }
}

pub fn picard_loop_a(
    params: &LoopAParams,
    u1_0: &dyn Fn(f64) -> f64,
    u2_0: &dyn Fn(f64) -> f64,
    d: &DisturbanceSignal,
    grid: &Grid,
    opts: &SolverOptions,
    window: Option<f64>,
) -> Result<Trajectory> {
    params.validate()?;
    grid.validate()?;
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
    let lift_modal = engine.project_fn(|z| 1.0 - z);
    let dt = grid.dt;

    let coupling = 2.0 * (params.r * params.b_tilde).abs() + params.a_tilde.abs();
    let window = window.unwrap_or_else(|| default_window(grid.t_end, dt, coupling));
    let mut plan = WindowPlan::new(grid, window)?;

    let rb = params.r * params.b_tilde;
    let x2 = params.b_tilde * dt;
    let (e2, p1_2, p2_2) = ((-x2).exp(), phi1(x2), phi2(x2));
    let estep = |u: f64, g0: f64, g1: f64| -> f64 {
        e2 * u + dt * (p2_2 * params.a_tilde * g0 + (p1_2 - p2_2) * params.a_tilde * g1)
    };
    let modal_forcing = |u2q: &[f64], t: f64| -> Vec<f64> {
        let g = -(d.derivative(t) + params.reaction_k * d.eval(t));
        let mut f = engine.project_quad_values(u2q);
        for (fi, li) in f.iter_mut().zip(&lift_modal) {
            *fi = rb * *fi + g * li;
        }
        f
    };

    let d0 = d.eval(0.0);
    let mut coeffs = engine.project_fn(|z| u1_0(z) - (1.0 - z) * d0);
    let mut u2_quad: Vec<f64> = quad_nodes.iter().map(|&z| u2_0(z)).collect();
    let mut u2_grid: Vec<f64> = nodes.iter().map(|&z| u2_0(z)).collect();

    let mut traj = Trajectory::new(
        nodes.clone(),
        opts.weight.clone(),
        TrajectoryMeta {
            solver: "picard-loop-a".into(),
            model: serde_json::to_string(params)?,
            disturbance: d.describe(),
        },
    );
    traj.push(
        0.0,
        nodes.iter().map(|&z| u1_0(z)).collect(),
        u2_grid.clone(),
    )?;

    let scale = traj.sup_u1[0].max(traj.sup_u2[0]).max(1.0);
    let tol = PICARD_TOL * scale;

    let mut step_done = 0usize;
    let mut halvings = 0usize;
    while step_done < plan.steps_total {
        let m_steps = plan.steps_window.min(plan.steps_total - step_done);
        let t_base = step_done as f64 * dt;

        // iterate on the window: u2 samples at quadrature nodes per step
        let mut u2_iter: Vec<Vec<f64>> = vec![u2_quad.clone(); m_steps + 1];
        let mut cms: Vec<Vec<f64>> = Vec::new();
        let mut converged = false;
        let mut prev_diff = f64::INFINITY;
        let mut grew = 0usize;
        for _sweep in 0..MAX_SWEEPS {
            // parabolic line from the current u2 iterate
            cms = Vec::with_capacity(m_steps + 1);
            cms.push(coeffs.clone());
            let mut forcings: Vec<Vec<f64>> = Vec::with_capacity(m_steps + 1);
            for m in 0..=m_steps {
                forcings.push(modal_forcing(&u2_iter[m], t_base + m as f64 * dt));
            }
            for m in 0..m_steps {
                let mut next = cms[m].clone();
                engine.advance(&mut next, dt, &forcings[m], &forcings[m + 1]);
                cms.push(next);
            }
            // relaxation line from the new parabolic samples
            let u1q: Vec<Vec<f64>> = (0..=m_steps)
                .map(|m| {
                    dehomogenize(
                        &engine.synth_quad(&cms[m]),
                        &quad_nodes,
                        d.eval(t_base + m as f64 * dt),
                    )
                })
                .collect();
            let mut diff = 0.0f64;
            let mut new_u2 = vec![u2_quad.clone()];
            for m in 0..m_steps {
                let next: Vec<f64> = new_u2[m]
                    .iter()
                    .zip(u1q[m].iter().zip(&u1q[m + 1]))
                    .map(|(&u, (&g0, &g1))| estep(u, g0, g1))
                    .collect();
                for (a, b) in next.iter().zip(&u2_iter[m + 1]) {
                    diff = diff.max((a - b).abs());
                }
                new_u2.push(next);
            }
            u2_iter = new_u2;
            if diff <= tol {
                converged = true;
                break;
            }
            if !diff.is_finite() || diff > 1e9 * scale {
                break;
            }
            if diff > prev_diff {
                grew += 1;
                if grew >= 3 {
                    break;
                }
            } else {
                grew = 0;
            }
            prev_diff = diff;
        }
        if !converged {
            halvings += 1;
            if halvings > MAX_HALVINGS {
                return Err(Error::NonContraction(format!(
                    "window did not contract after {MAX_HALVINGS} halvings (coupling {coupling})"
                )));
            }
            plan.steps_window = (plan.steps_window / 2).max(1);
            continue;
        }

        // commit the window: grid profiles and the grid-sampled relaxation line
        for m in 0..m_steps {
            let t1 = t_base + (m + 1) as f64 * dt;
            let u1_grid_prev = traj.u1.last().expect("initial pushed").clone();
            let u1_grid_next = dehomogenize(&engine.synth_grid(&cms[m + 1]), &nodes, d.eval(t1));
            u2_grid = u2_grid
                .iter()
                .zip(u1_grid_prev.iter().zip(&u1_grid_next))
                .map(|(&u, (&g0, &g1))| estep(u, g0, g1))
                .collect();
            traj.push(t1, u1_grid_next, u2_grid.clone())?;
        }
        coeffs = cms[m_steps].clone();
        u2_quad = u2_iter[m_steps].clone();
        step_done += m_steps;
    }
    Ok(traj)
}

pub fn picard_loop_b(
    params: &LoopBParams,
    u1_0: &dyn Fn(f64) -> f64,
    u2_0: &dyn Fn(f64) -> f64,
    grid: &Grid,
    opts: &SolverOptions,
    window: Option<f64>,
) -> Result<Trajectory> {
    params.validate()?;
    grid.validate()?;
    check_compat("boundary compatibility u1_0(0) = 0", u1_0(0.0), 0.0, 1.0)?;
    check_compat(
        "boundary compatibility u2_0(0) = k u1_0(1)",
        u2_0(0.0),
        params.boundary_gain * u1_0(1.0),
        u1_0(1.0),
    )?;

    let nodes = grid.nodes();
    let engine = SeriesEngine::new(
        EigenSystem::dirichlet_robin(
            params.diffusion,
            params.reaction,
            params.robin_q,
            opts.n_modes,
        )?,
        &nodes,
    );
    let quad_nodes: Vec<f64> = engine.quad.nodes().to_vec();
    let kernel_modal = kernel_mode_matrix(&engine, &params.kernel, &quad_nodes);
    let modal_forcing = |u2q: &[f64]| -> Vec<f64> {
        kernel_modal
            .iter()
            .map(|row| {
                row.iter()
                    .zip(engine.quad.weights())
                    .zip(u2q)
                    .map(|((&g, &w), &v)| g * w * v)
                    .sum()
            })
            .collect()
    };

    let dt = grid.dt;
    let c = params.transport_speed;
    let rows = crate::certify::KernelRowBound::new(&params.kernel, 1.0, 101);
    let coupling = params.boundary_gain.abs() * rows.max() + 1.0;
    let window = window.unwrap_or_else(|| default_window(grid.t_end, dt, coupling));
    let mut plan = WindowPlan::new(grid, window)?;

    // global uniform trace samples u1(j dt, 1)
    let mut trace: Vec<f64> = vec![u1_0(1.0)];
    let transport = |trace: &[f64], t: f64, z: f64| -> f64 {
        if c * t > z {
            params.boundary_gain * cubic_uniform(trace, (t - z / c) / dt)
        } else {
            u2_0(z - c * t)
        }
    };

    let mut coeffs = engine.project_fn(u1_0);
    let mut traj = Trajectory::new(
        nodes.clone(),
        opts.weight.clone(),
        TrajectoryMeta {
            solver: "picard-loop-b".into(),
            model: serde_json::to_string(params)?,
            disturbance: "none".into(),
        },
    );
    traj.push(
        0.0,
        nodes.iter().map(|&z| u1_0(z)).collect(),
        nodes.iter().map(|&z| u2_0(z)).collect(),
    )?;
    let mut robin =
        vec![engine.deriv_at_one(&coeffs) - params.robin_q * engine.trace_at_one(&coeffs)];
    let scale = traj.sup_u1[0].max(traj.sup_u2[0]).max(1.0);
    let tol = PICARD_TOL * scale;

    let mut step_done = 0usize;
    let mut halvings = 0usize;
    while step_done < plan.steps_total {
        let m_steps = plan.steps_window.min(plan.steps_total - step_done);
        let t_base = step_done as f64 * dt;
        let trace_base_len = trace.len();
        // provisional window trace: constant extension
        trace.resize(trace_base_len + m_steps, *trace.last().expect("seeded"));

        let mut cms: Vec<Vec<f64>> = Vec::new();
        let mut converged = false;
        let mut prev_diff = f64::INFINITY;
        let mut grew = 0usize;
        for _sweep in 0..MAX_SWEEPS {
            // transport samples and modal forcing from the current trace
            let mut forcings: Vec<Vec<f64>> = Vec::with_capacity(m_steps + 1);
            for m in 0..=m_steps {
                let t = t_base + m as f64 * dt;
                let u2q: Vec<f64> = quad_nodes
                    .iter()
                    .map(|&z| transport(&trace, t, z))
                    .collect();
                forcings.push(modal_forcing(&u2q));
            }
            cms = Vec::with_capacity(m_steps + 1);
            cms.push(coeffs.clone());
            for m in 0..m_steps {
                let mut next = cms[m].clone();
                engine.advance(&mut next, dt, &forcings[m], &forcings[m + 1]);
                cms.push(next);
            }
            let mut diff = 0.0f64;
            for m in 1..=m_steps {
                let new_val = engine.trace_at_one(&cms[m]);
                let old = trace[trace_base_len + m - 1];
                diff = diff.max((new_val - old).abs());
                trace[trace_base_len + m - 1] = new_val;
            }
            if diff <= tol {
                converged = true;
                break;
            }
            if !diff.is_finite() || diff > 1e9 * scale {
                break;
            }
            if diff > prev_diff {
                grew += 1;
                if grew >= 3 {
                    break;
                }
            } else {
                grew = 0;
            }
            prev_diff = diff;
        }
        if !converged {
            halvings += 1;
            if halvings > MAX_HALVINGS {
                return Err(Error::NonContraction(format!(
                    "window did not contract after {MAX_HALVINGS} halvings (coupling {coupling})"
                )));
            }
            trace.truncate(trace_base_len);
            plan.steps_window = (plan.steps_window / 2).max(1);
            continue;
        }

        for m in 1..=m_steps {
            let t = t_base + m as f64 * dt;
            let u1_grid = engine.synth_grid(&cms[m]);
            let u2_grid: Vec<f64> = nodes.iter().map(|&z| transport(&trace, t, z)).collect();
            robin
                .push(engine.deriv_at_one(&cms[m]) - params.robin_q * engine.trace_at_one(&cms[m]));
            traj.push(t, u1_grid, u2_grid)?;
        }
        coeffs = cms[m_steps].clone();
        step_done += m_steps;
    }
    traj.robin_residuals = Some(robin);
    Ok(traj)
}
