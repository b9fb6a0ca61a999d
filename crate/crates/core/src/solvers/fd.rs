//! Crank-Nicolson finite-difference reference solvers, second order in both
//! the grid step and the time step. They share nothing with the spectral
//! path except the parameter structs, so cross-solver agreement is a real
//! consistency check.

use crate::error::Result;
use crate::grid::{Grid, Trajectory, TrajectoryMeta};
use crate::params::{LoopAParams, LoopBParams};
use crate::signal::DisturbanceSignal;
use crate::solvers::{check_compat, SolverOptions};

/// Thomas solve of a tridiagonal system (lower, diag, upper are the constant
/// bands; rhs is consumed).
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], mut rhs: Vec<f64>) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    rhs[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = d[i] - c[i] * rhs[i + 1];
    }
    rhs
}

/// Cubic interpolation on uniformly spaced values; `x` is the fractional
/// index. Falls back to linear when fewer than four samples exist.
pub(crate) fn cubic_uniform(values: &[f64], x: f64) -> f64 {
    let n = values.len();
    debug_assert!(n >= 2);
    if n < 4 {
        let i = (x.floor() as usize).min(n - 2);
        let t = (x - i as f64).clamp(0.0, 1.0);
        return values[i] * (1.0 - t) + values[i + 1] * t;
    }
    let i = (x.floor() as isize).clamp(0, n as isize - 2);
    let lo = (i - 1).clamp(0, n as isize - 4) as usize;
    let r = x - lo as f64;
    let y = &values[lo..lo + 4];
    let l0 = -(r - 1.0) * (r - 2.0) * (r - 3.0) / 6.0;
    let l1 = r * (r - 2.0) * (r - 3.0) / 2.0;
    let l2 = -r * (r - 1.0) * (r - 3.0) / 2.0;
    let l3 = r * (r - 1.0) * (r - 2.0) / 6.0;
    y[0] * l0 + y[1] * l1 + y[2] * l2 + y[3] * l3
}

/// Crank-Nicolson for the parabolic line of loop A with the relaxation line
/// folded in through a trapezoidal integrating factor, which keeps the step
/// a single tridiagonal solve.
pub fn fd_loop_a(
    params: &LoopAParams,
    u1_0: &dyn Fn(f64) -> f64,
    u2_0: &dyn Fn(f64) -> f64,
    d: &DisturbanceSignal,
    grid: &Grid,
    opts: &SolverOptions,
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
    let n = grid.n_z;
    let h = grid.spacing();
    let dt = grid.dt;
    let k = params.reaction_k;
    let rb = params.r * params.b_tilde;
    let e = (-params.b_tilde * dt).exp();
    let half_a_dt = 0.5 * params.a_tilde * dt;

    let mut u1: Vec<f64> = nodes.iter().map(|&z| u1_0(z)).collect();
    let mut u2: Vec<f64> = nodes.iter().map(|&z| u2_0(z)).collect();

    // interior unknowns i = 1 .. n-2; the relaxation substitution
    // u2^{m+1} = E u2^m + (a dt / 2)(E u1^m + u1^{m+1}) adds
    // -rb (dt/2)(a dt/2) to the diagonal
    let m = n - 2;
    let theta = dt / (2.0 * h * h);
    let alpha = rb * 0.5 * dt * half_a_dt;
    let diag = vec![1.0 + 2.0 * theta + 0.5 * dt * k - alpha; m];
    let lower = vec![-theta; m];
    let upper = vec![-theta; m];

    let mut traj = Trajectory::new(
        nodes.clone(),
        opts.weight.clone(),
        TrajectoryMeta {
            solver: "fd-loop-a".into(),
            model: serde_json::to_string(params)?,
            disturbance: d.describe(),
        },
    );
    traj.push(0.0, u1.clone(), u2.clone())?;

    for step in 0..grid.n_steps() {
        let t1 = (step + 1) as f64 * dt;
        let d1 = d.eval(t1);
        let mut rhs = vec![0.0; m];
        for i in 1..n - 1 {
            let lap = (u1[i + 1] - 2.0 * u1[i] + u1[i - 1]) / (h * h);
            rhs[i - 1] = u1[i]
                + 0.5 * dt * (lap - k * u1[i])
                + 0.5 * dt * rb * ((1.0 + e) * u2[i] + half_a_dt * e * u1[i]);
        }
        // Dirichlet boundary contributions at the new level
        rhs[0] += theta * d1;
        // u1(1) = 0 contributes nothing
        let interior = thomas(&lower, &diag, &upper, rhs);
        let mut u1_next = vec![0.0; n];
        u1_next[0] = d1;
        u1_next[n - 1] = 0.0;
        u1_next[1..n - 1].copy_from_slice(&interior);
        for i in 0..n {
            u2[i] = e * u2[i] + half_a_dt * (e * u1[i] + u1_next[i]);
        }
        u1 = u1_next;
        traj.push(t1, u1.clone(), u2.clone())?;
    }
    Ok(traj)
}

/// Crank-Nicolson for the parabolic line of loop B (ghost-node Robin closure
/// at z = 1) with the transport line advanced along characteristics by
/// semi-Lagrangian cubic interpolation.
pub fn fd_loop_b(
    params: &LoopBParams,
    u1_0: &dyn Fn(f64) -> f64,
    u2_0: &dyn Fn(f64) -> f64,
    grid: &Grid,
    opts: &SolverOptions,
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
    let n = grid.n_z;
    let h = grid.spacing();
    let dt = grid.dt;
    let p = params.diffusion;
    let a = params.reaction;
    let q = params.robin_q;
    let c = params.transport_speed;
    let kgain = params.boundary_gain;

    // kernel samples on the tensor grid for trapezoidal forcing
    let kernel_rows: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&z| nodes.iter().map(|&s| params.kernel.eval(z, s)).collect())
        .collect();
    let trapz = |values: &[f64]| -> f64 {
        let mut acc = 0.5 * (values[0] + values[n - 1]);
        for v in &values[1..n - 1] {
            acc += v;
        }
        acc * h
    };
    let forcing = |u2: &[f64]| -> Vec<f64> {
        kernel_rows
            .iter()
            .map(|row| {
                let prod: Vec<f64> = row.iter().zip(u2).map(|(&b, &v)| b * v).collect();
                trapz(&prod)
            })
            .collect()
    };

    // unknowns i = 1 .. n-1 (the Robin node included via ghost elimination)
    let m = n - 1;
    let theta = p * dt / (2.0 * h * h);
    let mut diag = vec![1.0 + 2.0 * theta - 0.5 * dt * a; m];
    let mut lower = vec![-theta; m];
    let upper = vec![-theta; m];
    // ghost closure at z = 1: u_zz ~ (2 u_{n-2} - (2 - 2 h q) u_{n-1}) / h^2
    diag[m - 1] = 1.0 + (2.0 - 2.0 * h * q) * theta - 0.5 * dt * a;
    lower[m - 1] = -2.0 * theta;

    let mut u1: Vec<f64> = nodes.iter().map(|&z| u1_0(z)).collect();
    let mut u2: Vec<f64> = nodes.iter().map(|&z| u2_0(z)).collect();

    let mut traj = Trajectory::new(
        nodes.clone(),
        opts.weight.clone(),
        TrajectoryMeta {
            solver: "fd-loop-b".into(),
            model: serde_json::to_string(params)?,
            disturbance: "none".into(),
        },
    );
    traj.push(0.0, u1.clone(), u2.clone())?;
    let robin_res =
        |u: &[f64]| (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h) - q * u[n - 1];
    let mut robin = vec![robin_res(&u1)];

    // explicit CN application of the diffusion-reaction operator
    let apply_explicit = |u: &[f64], rhs: &mut [f64]| {
        for i in 1..n - 1 {
            let lap = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
            rhs[i - 1] = u[i] + 0.5 * dt * (p * lap + a * u[i]);
        }
        let lap_end = (2.0 * u[n - 2] - (2.0 - 2.0 * h * q) * u[n - 1]) / (h * h);
        rhs[m - 1] = u[n - 1] + 0.5 * dt * (p * lap_end + a * u[n - 1]);
    };

    for step in 0..grid.n_steps() {
        let t0 = step as f64 * dt;
        let t1 = t0 + dt;
        let f0 = forcing(&u2);
        let trace0 = u1[n - 1];

        let mut base = vec![0.0; m];
        apply_explicit(&u1, &mut base);

        let solve_with = |f1: &[f64], base: &[f64]| -> Vec<f64> {
            let mut rhs = base.to_vec();
            for i in 1..n {
                rhs[i - 1] += 0.5 * dt * (f0[i] + f1[i]);
            }
            let interior = thomas(&lower, &diag, &upper, rhs);
            let mut u_next = vec![0.0; n];
            u_next[1..n].copy_from_slice(&interior);
            u_next
        };

        // predictor: reuse the old forcing, then correct the transport foot
        let mut u1_next = solve_with(&f0, &base);
        let mut u2_next = u2.clone();
        for _ in 0..=opts.corrector_sweeps {
            let trace1 = u1_next[n - 1];
            for (i, &z) in nodes.iter().enumerate() {
                let foot = z - c * dt;
                u2_next[i] = if foot >= 0.0 {
                    cubic_uniform(&u2, foot / h)
                } else {
                    // inflow: boundary trace at t* = t1 - z / c, linear in time
                    let tstar = t1 - z / c;
                    let w = (tstar - t0) / dt;
                    kgain * (trace0 * (1.0 - w) + trace1 * w)
                };
            }
            let f1 = forcing(&u2_next);
            u1_next = solve_with(&f1, &base);
        }
        u1 = u1_next;
        u2 = u2_next;
        robin.push(robin_res(&u1));
        traj.push(t1, u1.clone(), u2.clone())?;
    }
    traj.robin_residuals = Some(robin);
    Ok(traj)
}
