//! Browser demo bindings: three interactive views onto the core library.
//!
//! Every export takes plain numbers and returns a JSON string, so the page
//! needs no serde glue on the JavaScript side. The functions are ordinary
//! Rust functions as well, which keeps them testable on the host target.

// `!(a < b)`-style guards intentionally reject NaN together with the
// excluded range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use wasm_bindgen::prelude::*;

use pdeloopgain_core::certify::{
    check_loop_a, check_wave_kv, gain_g, minimize_kv_gain, optimize_gamma_loop_a,
};
use pdeloopgain_core::grid::Grid;
use pdeloopgain_core::params::{LoopAParams, WaveKVParams};
use pdeloopgain_core::signal::DisturbanceSignal;
use pdeloopgain_core::solvers::{simulate_loop_a, SolverOptions};
use pdeloopgain_core::transforms::kv_wave_to_loop_a;
use pdeloopgain_core::verify::{fit_decay, NormSeries};

fn err_json(message: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": message.to_string() }).to_string()
}

/// Samples the magnification lower-bound curve g(s) on [s_min, s_max].
///
/// Returns `{"rows": [{"s": .., "g": ..}], "min_s": .., "min_g": ..}`;
/// points outside the domain of g report `"g": null`.
#[wasm_bindgen]
pub fn gain_curve_json(s_min: f64, s_max: f64, n_points: usize) -> String {
    if !(s_min < s_max) || !(3..=5000).contains(&n_points) {
        return err_json("need s_min < s_max and 3 <= n_points <= 5000");
    }
    let mut rows = Vec::with_capacity(n_points);
    let mut min_s = f64::NAN;
    let mut min_g = f64::INFINITY;
    for i in 0..n_points {
        let s = s_min + (s_max - s_min) * i as f64 / (n_points - 1) as f64;
        let rep = gain_g(s);
        if rep.domain_empty {
            rows.push(serde_json::json!({ "s": s, "g": null }));
        } else {
            if rep.g_value < min_g {
                min_g = rep.g_value;
                min_s = s;
            }
            rows.push(serde_json::json!({ "s": s, "g": rep.g_value }));
        }
    }
    serde_json::json!({ "rows": rows, "min_s": min_s, "min_g": min_g }).to_string()
}

/// Evaluates the damped-wave stability condition and its mapped loop form.
///
/// Returns the condition sides, the dimensionless parameters after the time
/// rescale, the curve value g(s) at s = (c^2 - mu sigma)/sigma^2, and (when
/// certified) the minimized boundary-amplification gain.
#[wasm_bindgen]
pub fn wave_certificate_json(kv_sigma: f64, wave_speed: f64, viscous_mu: f64) -> String {
    let wp = WaveKVParams {
        kv_sigma,
        wave_speed,
        viscous_mu,
    };
    if let Err(e) = wp.validate() {
        return err_json(e);
    }
    let cert = check_wave_kv(&wp);
    let mapped = match kv_wave_to_loop_a(&wp) {
        Ok(m) => m,
        Err(e) => return err_json(e),
    };
    let mapped_cert = check_loop_a(&mapped.params);
    let s = (wave_speed * wave_speed - viscous_mu * kv_sigma) / (kv_sigma * kv_sigma);
    let g = gain_g(s);
    let min_gain = if cert.pass {
        minimize_kv_gain(&wp)
            .ok()
            .map(|(theta, _, gain)| serde_json::json!({ "theta": theta, "gain": gain }))
    } else {
        None
    };
    serde_json::json!({
        "condition": { "lhs": cert.lhs, "rhs": cert.rhs, "margin": cert.margin, "pass": cert.pass },
        "mapped": {
            "k": mapped.params.reaction_k,
            "coupling": mapped.params.coupling_product(),
            "b_tilde": mapped.params.b_tilde,
            "time_scale": mapped.time_scale,
            "pass": mapped_cert.pass,
        },
        "s": s,
        "gain_bound": if g.domain_empty { serde_json::Value::Null } else { g.g_value.into() },
        "min_amplification": min_gain,
    })
    .to_string()
}

/// Simulates loop A from a first-mode initial profile under a boundary
/// sinusoid and returns the per-step sup norms together with the loop
/// certificate, the fitted decay rate of the undriven system, and (when the
/// loop is certified) the explicit disturbance gain.
#[wasm_bindgen]
pub fn loop_a_response_json(
    reaction_k: f64,
    coupling: f64,
    b_tilde: f64,
    amplitude: f64,
    omega: f64,
    t_end: f64,
) -> String {
    let params = LoopAParams {
        reaction_k,
        r: 1.0,
        a_tilde: coupling,
        b_tilde,
    };
    if let Err(e) = params.validate() {
        return err_json(e);
    }
    if !(t_end > 0.2 && t_end <= 30.0) {
        return err_json("t_end must lie in (0.2, 30]");
    }
    let cert = check_loop_a(&params);
    let steps = ((t_end / 4e-3).round() as usize).clamp(50, 7500);
    let dt = t_end / steps as f64;
    let grid = match Grid::new(61, dt, t_end) {
        Ok(g) => g,
        Err(e) => return err_json(e),
    };
    let opts = SolverOptions::with_modes(24);
    let pi = std::f64::consts::PI;
    let u1_0 = move |z: f64| (pi * z).sin();
    let u2_0 = move |z: f64| 0.3 * z * (1.0 - z);
    let d = DisturbanceSignal::Sinusoid {
        amplitude,
        omega,
        phase: 0.0,
    };
    let driven = match simulate_loop_a(&params, &u1_0, &u2_0, &d, &grid, &opts) {
        Ok(t) => t,
        Err(e) => return err_json(e),
    };
    let free = match simulate_loop_a(
        &params,
        &u1_0,
        &u2_0,
        &DisturbanceSignal::Zero,
        &grid,
        &opts,
    ) {
        Ok(t) => t,
        Err(e) => return err_json(e),
    };
    let fit = fit_decay(&free, NormSeries::SumSup, None).ok();
    let gamma = if cert.pass {
        optimize_gamma_loop_a(
            &params,
            pdeloopgain_core::certify::default_epsilon(&params),
            None,
        )
        .ok()
        .map(|c| c.gamma)
    } else {
        None
    };
    // thin the series for plotting
    let stride = (driven.len() / 400).max(1);
    let sample = |traj: &pdeloopgain_core::grid::Trajectory| -> Vec<serde_json::Value> {
        (0..traj.len())
            .step_by(stride)
            .map(|j| {
                serde_json::json!({
                    "t": traj.times[j],
                    "sum": traj.sup_u1[j] + traj.sup_u2[j],
                })
            })
            .collect()
    };
    serde_json::json!({
        "certificate": { "lhs": cert.lhs, "rhs": cert.rhs, "margin": cert.margin, "pass": cert.pass },
        "driven": sample(&driven),
        "free": sample(&free),
        "delta_hat": fit.as_ref().map(|f| f.delta_hat),
        "m_hat": fit.as_ref().map(|f| f.m_hat),
        "gamma": gamma,
        "final_profile": driven.u1.last().cloned().unwrap_or_default(),
        "nodes": driven.nodes,
    })
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gain_curve_has_unit_minimum() {
        let text = gain_curve_json(-1.0, 1.0, 101);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!((v["min_g"].as_f64().unwrap() - 1.0).abs() < 1e-5);
        assert!(v["min_s"].as_f64().unwrap().abs() < 1e-9);
        assert_eq!(v["rows"].as_array().unwrap().len(), 101);
    }

    #[test]
    fn gain_curve_rejects_bad_input() {
        let v: serde_json::Value = serde_json::from_str(&gain_curve_json(1.0, -1.0, 10)).unwrap();
        assert!(v["error"].is_string());
    }

    #[test]
    fn wave_certificate_matched_damping() {
        let v: serde_json::Value =
            serde_json::from_str(&wave_certificate_json(1.0, 1.0, 1.0)).unwrap();
        assert_eq!(v["condition"]["pass"], true);
        assert_eq!(v["mapped"]["pass"], true);
        assert!((v["s"].as_f64().unwrap()).abs() < 1e-12);
        assert!((v["gain_bound"].as_f64().unwrap() - 1.0).abs() < 1e-6);
        let gain = v["min_amplification"]["gain"].as_f64().unwrap();
        assert!((1.0..1.001).contains(&gain));
    }

    #[test]
    fn wave_certificate_reports_failure() {
        let v: serde_json::Value =
            serde_json::from_str(&wave_certificate_json(0.1, 3.0, 0.0)).unwrap();
        assert_eq!(v["condition"]["pass"], false);
        assert!(v["min_amplification"].is_null());
    }

    #[test]
    fn loop_a_response_decays_when_certified() {
        let v: serde_json::Value =
            serde_json::from_str(&loop_a_response_json(1.0, 0.4, 1.0, 0.1, 3.0, 2.0)).unwrap();
        assert_eq!(v["certificate"]["pass"], true);
        assert!(v["delta_hat"].as_f64().unwrap() > 0.0);
        assert!(v["gamma"].as_f64().unwrap() > 1.0);
        assert!(!v["driven"].as_array().unwrap().is_empty());
        assert_eq!(v["nodes"].as_array().unwrap().len(), 61);
    }

    #[test]
    fn loop_a_response_rejects_invalid() {
        let v: serde_json::Value =
            serde_json::from_str(&loop_a_response_json(1.0, 0.4, -1.0, 0.1, 3.0, 2.0)).unwrap();
        assert!(v["error"].is_string());
    }
}
