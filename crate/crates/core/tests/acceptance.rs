//! Acceptance suite: every release criterion as one test, each printing a
//! pass/fail line with its elapsed time (visible with `--nocapture`).
//!
//! Run with
//!
//! ```text
//! cargo test -p pdeloopgain-core --test acceptance -- --nocapture
//! ```

use std::f64::consts::PI;
use std::time::Instant;

use pdeloopgain_core::certify::{
    check_diffusion_robustness, check_loop_a, check_positive_spectrum, check_wave_kv,
    delay_certificate_at, find_theta_omega_for, gain_curve, gain_g, optimize_gamma_loop_a,
    KernelRowBound,
};
use pdeloopgain_core::config::{CommandKind, RunConfig};
use pdeloopgain_core::grid::Grid;
use pdeloopgain_core::params::{
    BacksteppingParams, Kernel, LoopAParams, LoopBParams, WaveKVParams,
};
use pdeloopgain_core::quadrature::GaussRule;
use pdeloopgain_core::runner::execute;
use pdeloopgain_core::signal::DisturbanceSignal;
use pdeloopgain_core::solvers::{
    fd_loop_a, fd_loop_b, picard_loop_a, picard_loop_b, simulate_loop_a, simulate_loop_b,
    SolverOptions,
};
use pdeloopgain_core::spectral::{orthonormality_residual, robin_offsets, EigenSystem};
use pdeloopgain_core::transforms::kv_wave_to_loop_a;
use pdeloopgain_core::verify::{
    check_iss_bound, check_parabolic_weighted_bound, fit_decay, sharpness_mode, sharpness_probe,
    NormSeries,
};

fn finish(name: &str, limit_s: f64, started: Instant) {
    let elapsed = started.elapsed().as_secs_f64();
    println!("criterion {name}: PASS ({elapsed:.2} s, limit {limit_s} s)");
    assert!(
        elapsed < limit_s,
        "{name} exceeded its runtime budget: {elapsed:.2} s"
    );
}

#[test]
fn criterion_01_gain_anchor() {
    let t0 = Instant::now();
    let at_zero = gain_g(0.0);
    assert!(
        (at_zero.g_value - 1.0).abs() <= 1e-6,
        "g(0) = {} should be 1 within 1e-6",
        at_zero.g_value
    );
    // the sampled curve must dip exactly at the grid point nearest zero and
    // rise monotonically on both flanks; gain_curve checks both properties
    let s_min = -PI * PI / 2.0 + 0.1;
    let rows = gain_curve(s_min, 3.0, 158).expect("curve properties hold");
    assert_eq!(rows.len(), 158);
    assert!(rows.iter().all(|&(_, g)| g >= 1.0));
    finish("01 gain anchor", 5.0, t0);
}

#[test]
fn criterion_02_eigen_anchors() {
    let t0 = Instant::now();
    // q = 0: offsets vanish exactly and eigenvalues are closed form
    let (p, a) = (1.3, 0.4);
    let offs = robin_offsets(0.0, 20).unwrap();
    assert!(offs.iter().all(|&b| b == 0.0));
    let es = EigenSystem::dirichlet_robin(p, a, 0.0, 20).unwrap();
    for n in 1..=20usize {
        let w = (2 * n - 1) as f64 * PI / 2.0;
        let exact = p * w * w - a;
        assert!(
            (es.lambdas[n - 1] - exact).abs() <= 1e-10 * exact.abs().max(1.0),
            "lambda_{n}"
        );
    }
    // orthonormality for a genuinely Robin case
    let es = EigenSystem::dirichlet_robin(1.0, 0.3, 0.5, 20).unwrap();
    let residual = orthonormality_residual(&es, 20, &GaussRule::for_modes(20));
    assert!(residual <= 1e-8, "orthonormality residual {residual}");
    // eigen-residual drops at second order under one grid refinement
    let resid = |h: f64| -> f64 {
        let n = (1.0 / h).round() as usize;
        let mut worst = 0.0f64;
        for idx in 0..6 {
            for i in 1..n {
                let z = i as f64 * h;
                let lap = (es.eigenfunction(idx, z + h) - 2.0 * es.eigenfunction(idx, z)
                    + es.eigenfunction(idx, z - h))
                    / (h * h);
                let app = -lap - 0.3 * es.eigenfunction(idx, z);
                worst = worst.max((app - es.lambdas[idx] * es.eigenfunction(idx, z)).abs());
            }
        }
        worst
    };
    let order = (resid(1e-3) / resid(5e-4)).log2();
    assert!(order >= 1.8, "eigen-residual refinement order {order}");
    finish("02 eigen anchors", 5.0, t0);
}

#[test]
fn criterion_03_single_mode_decay() {
    let t0 = Instant::now();
    let params = LoopAParams {
        reaction_k: 1.0,
        r: 0.0,
        a_tilde: 0.0,
        b_tilde: 1.0,
    };
    let rate = 1.0 + PI * PI;
    let expected = (-rate * 0.1f64).exp();
    // spectral: exact modal decay to rounding
    let grid = Grid::new(101, 1e-3, 0.1).unwrap();
    let traj = simulate_loop_a(
        &params,
        &|z| (PI * z).sin(),
        &|_| 0.0,
        &DisturbanceSignal::Zero,
        &grid,
        &SolverOptions::with_modes(16),
    )
    .unwrap();
    let got = *traj.sup_u1.last().unwrap();
    assert!(
        (got - expected).abs() <= 1e-6,
        "spectral {got} vs {expected}"
    );
    // finite differences: within 1 % at the stated resolution
    let grid = Grid::new(201, 1e-3, 0.1).unwrap();
    let traj = fd_loop_a(
        &params,
        &|z| (PI * z).sin(),
        &|_| 0.0,
        &DisturbanceSignal::Zero,
        &grid,
        &SolverOptions::default(),
    )
    .unwrap();
    let got = *traj.sup_u1.last().unwrap();
    assert!(
        (got - expected).abs() <= 0.01 * expected,
        "fd {got} vs {expected}"
    );
    finish("03 single-mode decay", 10.0, t0);
}

#[test]
fn criterion_04_sharpness_boundary() {
    let t0 = Instant::now();
    let k = 1.0;
    let b_tilde = 1.0;
    // stationary mode exactly at the loop-gain boundary
    let a_tilde = k + PI * PI;
    let params = LoopAParams {
        reaction_k: k,
        r: 1.0,
        a_tilde,
        b_tilde,
    };
    let grid = Grid::new(101, 1e-3, 1.0).unwrap();
    let report = sharpness_probe(&params, &grid, &SolverOptions::with_modes(16)).unwrap();
    assert!(report.mode.mu.abs() <= 1e-12);
    assert!(
        report.max_rel_deviation <= 0.01,
        "stationary drift {}",
        report.max_rel_deviation
    );
    // one unit beyond the boundary: fitted growth matches the dispersion root
    let a_tilde = k + PI * PI + 1.0;
    let params = LoopAParams {
        reaction_k: k,
        r: 1.0,
        a_tilde,
        b_tilde,
    };
    let mode = sharpness_mode(&params).unwrap();
    assert!(mode.mu > 0.0);
    let ratio = mode.mode_ratio;
    let traj = simulate_loop_a(
        &params,
        &|z| (PI * z).sin(),
        &move |z| ratio * (PI * z).sin(),
        &DisturbanceSignal::Zero,
        &grid,
        &SolverOptions::with_modes(16),
    )
    .unwrap();
    let fit = fit_decay(&traj, NormSeries::U1Sup, None).unwrap();
    let grown = -fit.delta_hat;
    assert!(
        (grown - mode.mu).abs() <= 0.02 * mode.mu,
        "fitted growth {grown} vs mu {}",
        mode.mu
    );
    finish("04 sharpness boundary", 30.0, t0);
}

#[test]
fn criterion_05_small_gain_soundness_sweep() {
    let t0 = Instant::now();
    let ks = [0.5, 1.0, 2.0, 4.0, 8.0];
    let fracs = [0.1, 0.3, 0.5, 0.7, 0.9];
    let bts = [0.5, 1.0, 2.0, 1.5, 0.8];
    let grid = Grid::new(101, 2e-3, 3.0).unwrap();
    let opts = SolverOptions::with_modes(32);
    let d = DisturbanceSignal::Sinusoid {
        amplitude: 0.2,
        omega: 2.0,
        phase: 0.0,
    };
    let mut checked = 0usize;
    for (i, &k) in ks.iter().enumerate() {
        for (j, &frac) in fracs.iter().enumerate() {
            let b_tilde = bts[(i + j) % bts.len()];
            let a_tilde = frac * (k + PI * PI);
            let params = LoopAParams {
                reaction_k: k,
                r: 1.0,
                a_tilde,
                b_tilde,
            };
            let cert = check_loop_a(&params);
            assert!(cert.pass, "parameter set must be certified: {params:?}");
            let u1_0 = |z: f64| (PI * z).sin();
            let u2_0 = |z: f64| 0.4 * z * z * (1.0 - z);
            let free = simulate_loop_a(
                &params,
                &u1_0,
                &u2_0,
                &DisturbanceSignal::Zero,
                &grid,
                &opts,
            )
            .unwrap();
            let fit = fit_decay(&free, NormSeries::SumSup, None).unwrap();
            assert!(
                fit.delta_hat > 0.0,
                "certified set must decay: {params:?}, delta {}",
                fit.delta_hat
            );
            let constants = optimize_gamma_loop_a(
                &params,
                pdeloopgain_core::certify::default_epsilon(&params),
                None,
            )
            .unwrap();
            let driven = simulate_loop_a(&params, &u1_0, &u2_0, &d, &grid, &opts).unwrap();
            let check = check_iss_bound(&driven, fit.m_hat, fit.delta_hat, constants.gamma, &d);
            assert_eq!(
                check.violations, 0,
                "ISS bound violated for {params:?}: max excess {}",
                check.max_excess
            );
            checked += 1;
        }
    }
    assert_eq!(checked, 25);
    finish("05 small-gain soundness sweep", 300.0, t0);
}

#[test]
fn criterion_06_delay_independence() {
    let t0 = Instant::now();
    let params = LoopBParams {
        diffusion: 1.0,
        transport_speed: 1.0,
        robin_q: 0.3,
        reaction: 0.2,
        boundary_gain: 0.3,
        kernel: Kernel::SineProduct { amplitude: 0.5 },
    };
    let grid = Grid::new(101, 1e-3, 2.0).unwrap();
    let report = pdeloopgain_core::verify::delay_independence_sweep(
        &params,
        &[0.25, 1.0, 4.0],
        &grid,
        &SolverOptions::with_modes(32),
    )
    .unwrap();
    assert!(report.certificate.pass, "instance must be certified");
    assert!(!report.falsified);
    assert_eq!(report.rows.len(), 3);
    for row in &report.rows {
        assert!(
            row.fit_u1.delta_hat > 0.0 && row.fit_sum.delta_hat > 0.0,
            "decay must be observed at c = {}",
            row.transport_speed
        );
    }
    // sign consistency across the sweep
    let signs: Vec<bool> = report
        .rows
        .iter()
        .map(|r| r.fit_sum.delta_hat > 0.0)
        .collect();
    assert!(signs.windows(2).all(|w| w[0] == w[1]));
    finish("06 delay independence", 120.0, t0);
}

#[test]
fn criterion_07_transform_consistency() {
    let t0 = Instant::now();
    // damped wave vs mapped loop A on a 10 x 10 x 10 grid
    let (mut pass_count, mut fail_count) = (0usize, 0usize);
    for i in 0..10 {
        for j in 0..10 {
            for l in 0..10 {
                let wp = WaveKVParams {
                    kv_sigma: 0.25 + 0.25 * i as f64,
                    wave_speed: 0.3 + 0.28 * j as f64,
                    viscous_mu: 0.13 * l as f64,
                };
                let direct = check_wave_kv(&wp).pass;
                let mapped = check_loop_a(&kv_wave_to_loop_a(&wp).unwrap().params).pass;
                assert_eq!(direct, mapped, "disagreement at {wp:?}");
                if direct {
                    pass_count += 1;
                } else {
                    fail_count += 1;
                }
            }
        }
    }
    assert!(
        pass_count > 0 && fail_count > 0,
        "grid must straddle the boundary"
    );
    // diffusion robustness vs the fixed-witness trace condition on 100
    // transport-pair instances (kernels peak at the inflow end, where the
    // two conditions coincide)
    let (mut pass_count, mut fail_count) = (0usize, 0usize);
    for vi in 0..5 {
        for pi in 0..5 {
            for ki in 0..4 {
                let bp = BacksteppingParams {
                    transport_v: 0.4 + 0.45 * vi as f64,
                    diffusion: 0.05 + 0.11 * pi as f64,
                    transport_c: 1.0,
                    gain: [0.5, 1.0, 2.0, 4.0][ki],
                    kernel: Kernel::Constant(1.0),
                };
                let (cert28, _) = check_diffusion_robustness(&bp).unwrap();
                let lb = pdeloopgain_core::transforms::backstepping_to_loop_b(&bp).unwrap();
                let rows = KernelRowBound::new(&lb.kernel, lb.boundary_gain.abs(), 401);
                let at_witness = delay_certificate_at(
                    lb.diffusion,
                    lb.reaction,
                    lb.robin_q,
                    &rows,
                    PI / 2.0,
                    0.0,
                );
                assert_eq!(cert28.pass, at_witness.pass, "disagreement at {bp:?}");
                if cert28.pass {
                    pass_count += 1;
                } else {
                    fail_count += 1;
                }
            }
        }
    }
    assert_eq!(pass_count + fail_count, 100);
    assert!(
        pass_count > 0 && fail_count > 0,
        "instances must straddle the boundary"
    );
    finish("07 transform consistency", 60.0, t0);
}

#[test]
fn criterion_08_cross_solver_agreement() {
    let t0 = Instant::now();
    // loop A benchmark
    let params = LoopAParams {
        reaction_k: 1.0,
        r: 0.5,
        a_tilde: 0.4,
        b_tilde: 1.0,
    };
    let grid = Grid::new(201, 1e-3, 1.0).unwrap();
    let u1_0 = |z: f64| (PI * z).sin();
    let u2_0 = |z: f64| 0.3 * z * (1.0 - z);
    let d = DisturbanceSignal::Zero;
    let spectral = simulate_loop_a(
        &params,
        &u1_0,
        &u2_0,
        &d,
        &grid,
        &SolverOptions::with_modes(48),
    )
    .unwrap();
    let fd = fd_loop_a(&params, &u1_0, &u2_0, &d, &grid, &SolverOptions::default()).unwrap();
    let picard = picard_loop_a(
        &params,
        &u1_0,
        &u2_0,
        &d,
        &grid,
        &SolverOptions::with_modes(48),
        None,
    )
    .unwrap();
    let scale = spectral
        .sup_u1
        .iter()
        .zip(&spectral.sup_u2)
        .map(|(a, b)| a + b)
        .fold(0.0f64, f64::max);
    let pairwise =
        |a: &pdeloopgain_core::grid::Trajectory, b: &pdeloopgain_core::grid::Trajectory| -> f64 {
            let mut worst = 0.0f64;
            for j in 0..a.len() {
                for i in 0..a.nodes.len() {
                    worst = worst.max((a.u1[j][i] - b.u1[j][i]).abs());
                    worst = worst.max((a.u2[j][i] - b.u2[j][i]).abs());
                }
            }
            worst / scale
        };
    assert!(
        pairwise(&spectral, &fd) <= 1e-3,
        "loop A spectral/fd {}",
        pairwise(&spectral, &fd)
    );
    assert!(
        pairwise(&spectral, &picard) <= 1e-3,
        "loop A spectral/picard {}",
        pairwise(&spectral, &picard)
    );
    assert!(
        pairwise(&fd, &picard) <= 1e-3,
        "loop A fd/picard {}",
        pairwise(&fd, &picard)
    );

    // loop B benchmark; the initial data meet the first-order trace
    // compatibility u2_0'(0) = -k theta_1(1) / c (theta_1 is the initial
    // time derivative of the parabolic line; the kernel row vanishes at
    // z = 1), so the transported profile is C^1 and every solver sees a
    // smooth field
    let params = LoopBParams {
        diffusion: 1.0,
        transport_speed: 1.0,
        robin_q: 0.3,
        reaction: 0.2,
        boundary_gain: 0.4,
        kernel: Kernel::SineProduct { amplitude: 0.5 },
    };
    let es = EigenSystem::dirichlet_robin(1.0, 0.2, 0.3, 1).unwrap();
    let lambda1 = es.lambdas[0];
    let slope = lambda1 / params.transport_speed;
    let u1_0 = move |z: f64| es.eigenfunction(0, z);
    let trace0 = params.boundary_gain * u1_0(1.0);
    let u2_0 = move |z: f64| trace0 * (1.0 + slope * z * (1.0 - z) * (1.0 - z));
    let spectral =
        simulate_loop_b(&params, &u1_0, &u2_0, &grid, &SolverOptions::with_modes(48)).unwrap();
    let fd = fd_loop_b(&params, &u1_0, &u2_0, &grid, &SolverOptions::default()).unwrap();
    let picard = picard_loop_b(
        &params,
        &u1_0,
        &u2_0,
        &grid,
        &SolverOptions::with_modes(48),
        None,
    )
    .unwrap();
    let scale = spectral
        .sup_u1
        .iter()
        .zip(&spectral.sup_u2)
        .map(|(a, b)| a + b)
        .fold(0.0f64, f64::max);
    let pairwise =
        |a: &pdeloopgain_core::grid::Trajectory, b: &pdeloopgain_core::grid::Trajectory| -> f64 {
            let mut worst = 0.0f64;
            for j in 0..a.len() {
                for i in 0..a.nodes.len() {
                    worst = worst.max((a.u1[j][i] - b.u1[j][i]).abs());
                    worst = worst.max((a.u2[j][i] - b.u2[j][i]).abs());
                }
            }
            worst / scale
        };
    assert!(
        pairwise(&spectral, &fd) <= 1e-3,
        "loop B spectral/fd {}",
        pairwise(&spectral, &fd)
    );
    assert!(
        pairwise(&spectral, &picard) <= 1e-3,
        "loop B spectral/picard {}",
        pairwise(&spectral, &picard)
    );
    assert!(
        pairwise(&fd, &picard) <= 1e-3,
        "loop B fd/picard {}",
        pairwise(&fd, &picard)
    );
    finish("08 cross-solver agreement", 120.0, t0);
}

#[test]
fn criterion_09_weighted_parabolic_bound() {
    let t0 = Instant::now();
    // pure parabolic line (r = 0) driven at the boundary: the constructive
    // weighted estimate holds pointwise with all constants explicit
    let params = LoopAParams {
        reaction_k: 1.0,
        r: 0.0,
        a_tilde: 0.0,
        b_tilde: 1.0,
    };
    let d = DisturbanceSignal::Sinusoid {
        amplitude: 0.1,
        omega: 2.0 * PI,
        phase: 0.0,
    };
    let grid = Grid::new(101, 1e-3, 2.0).unwrap();
    let traj = simulate_loop_a(
        &params,
        &|z| (PI * z).sin(),
        &|_| 0.0,
        &d,
        &grid,
        &SolverOptions::with_modes(32),
    )
    .unwrap();
    let report = check_parabolic_weighted_bound(&traj, 0.3, params.reaction_k, 0.0, &d).unwrap();
    assert_eq!(
        report.violations, 0,
        "weighted bound violated: max excess {}",
        report.max_excess
    );
    finish("09 weighted parabolic bound", 30.0, t0);
}

#[test]
fn criterion_10_determinism() {
    let t0 = Instant::now();
    let configs = [
        (
            CommandKind::Certify,
            r#"{"model": {"family": "chemical", "porosity": 0.5, "velocity": 0.4,
                "diffusion": 1.0, "sorption_rate": 1.0, "desorption_rate": 1.0,
                "length": 1.0, "source_conc": 1.0}}"#,
        ),
        (
            CommandKind::GainCurve,
            r#"{"model": {"family": "wave_kv", "kv_sigma": 1.0, "wave_speed": 1.0, "viscous_mu": 1.0},
                "gain_curve": {"s_min": -1.0, "s_max": 1.0, "n_points": 101}}"#,
        ),
        (
            CommandKind::Verify,
            r#"{
              "model": {"family": "loop_a", "k": 1.0, "r": 0.5, "a_tilde": 0.4, "b_tilde": 1.0},
              "grid": {"n_z": 61, "dt": 0.002, "t_end": 1.5, "modes": 24},
              "disturbance": {"kind": "sinusoid", "amplitude": 0.1, "omega": 3.0, "phase": 0.0},
              "initial": {"u1": {"kind": "sine", "amplitude": 1.0, "half_waves": 1},
                           "u2": {"kind": "zero"}},
              "output": {"full_profiles": true}
            }"#,
        ),
        (
            CommandKind::Sweep,
            r#"{"model": {"family": "wave_kv", "kv_sigma": 1.0, "wave_speed": 1.0, "viscous_mu": 0.2},
                "sweep": {"axis": "wave_speed", "values": [0.5, 1.0, 2.0, 3.0]}}"#,
        ),
    ];
    for (i, (kind, text)) in configs.iter().enumerate() {
        let config = RunConfig::from_json(text).unwrap();
        let base = std::env::temp_dir().join(format!(
            "pdeloopgain-acceptance-det-{}-{i}",
            std::process::id()
        ));
        let (dir_a, dir_b) = (base.join("a"), base.join("b"));
        let _ = std::fs::remove_dir_all(&base);
        let out_a = execute(*kind, &config, &dir_a).unwrap();
        let out_b = execute(*kind, &config, &dir_b).unwrap();
        assert_eq!(out_a.exit_code, out_b.exit_code);
        assert_eq!(out_a.artifacts.len(), out_b.artifacts.len());
        for (pa, pb) in out_a.artifacts.iter().zip(&out_b.artifacts) {
            let ba = std::fs::read(pa).unwrap();
            let bb = std::fs::read(pb).unwrap();
            assert_eq!(
                ba,
                bb,
                "artifacts differ: {} vs {}",
                pa.display(),
                pb.display()
            );
        }
        let _ = std::fs::remove_dir_all(&base);
    }
    finish("10 determinism", 120.0, t0);
}

#[test]
fn supporting_certificate_cross_checks() {
    // positive-spectrum certificate agrees with the first eigenvalue on a
    // small parameter sweep (kept alongside the acceptance criteria because
    // the delay-independence criterion builds on it)
    let t0 = Instant::now();
    for &q in &[-2.0, -0.5, 0.0, 0.5, 0.9] {
        for &a in &[-1.0, 0.5, 2.0, 6.0] {
            let cert = check_positive_spectrum(1.0, a, q).unwrap();
            let es = EigenSystem::dirichlet_robin(1.0, a, q, 1).unwrap();
            assert_eq!(cert.pass, es.lambdas[0] > 0.0, "q = {q}, a = {a}");
        }
    }
    // the searched witness is never worse than the fixed one
    let params = LoopBParams {
        diffusion: 1.0,
        transport_speed: 1.0,
        robin_q: -0.5,
        reaction: -0.5,
        boundary_gain: 0.5,
        kernel: Kernel::Constant(0.4),
    };
    let (_, _, best) = find_theta_omega_for(&params).unwrap();
    let rows = KernelRowBound::new(&params.kernel, 0.5, 401);
    let fixed = delay_certificate_at(1.0, -0.5, -0.5, &rows, PI / 2.0, 0.0);
    assert!(best.margin >= fixed.margin - 1e-9);
    finish("supporting cross-checks", 60.0, t0);
}
