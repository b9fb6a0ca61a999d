//! Closed-form transformations between the model families.

use crate::error::{Error, Result};
use crate::params::LoopBParams;
use crate::params::{BacksteppingParams, ChemicalParams, Kernel, LoopAParams, WaveKVParams};

/// Dimensionless loop-A parameters of the chemical-transport model:
///
/// ```text
/// a_tilde = a L^2 phi / D,   b_tilde = b L^2 phi / D,
/// r = 1 / phi,               k = L^2 (v^2 phi^2 + 4 a D) / (4 D^2)
/// ```
///
/// For every valid parameter set `r * a_tilde = a L^2 / D <= k`, so the
/// loop-gain condition `|r a_tilde| < k + pi^2` holds automatically.
pub fn chemical_to_loop_a(cp: &ChemicalParams) -> Result<LoopAParams> {
    cp.validate()?;
    let scale = cp.length * cp.length * cp.porosity / cp.diffusion;
    let a_tilde = cp.sorption_rate * scale;
    let b_tilde = cp.desorption_rate * scale;
    let r = 1.0 / cp.porosity;
    let reaction_k = cp.length
        * cp.length
        * (cp.velocity * cp.velocity * cp.porosity * cp.porosity
            + 4.0 * cp.sorption_rate * cp.diffusion)
        / (4.0 * cp.diffusion * cp.diffusion);
    Ok(LoopAParams {
        reaction_k,
        r,
        a_tilde,
        b_tilde,
    })
}

/// Equilibrium concentration pair (c_eq, n_eq) at position xi in [0, L].
///
/// For v > 0:
///
/// ```text
/// c_eq(xi) = c0 (exp(phi v L / D) - exp(phi v xi / D)) / (exp(phi v L / D) - 1)
/// ```
///
/// and n_eq = (a / b) c_eq. The v = 0 limit of the quotient is the linear
/// profile c0 (1 - xi / L).
pub fn equilibrium_profile(cp: &ChemicalParams, xi: f64) -> Result<(f64, f64)> {
    cp.validate()?;
    if !(0.0..=cp.length).contains(&xi) {
        return Err(Error::Domain(format!(
            "xi = {xi} outside [0, {}]",
            cp.length
        )));
    }
    let c_eq = if cp.velocity == 0.0 {
        cp.source_conc * (1.0 - xi / cp.length)
    } else {
        let g = cp.porosity * cp.velocity / cp.diffusion;
        // exp_m1 keeps the quotient accurate for small g L
        let num = (g * cp.length).exp_m1() - (g * xi).exp_m1();
        let den = (g * cp.length).exp_m1();
        cp.source_conc * num / den
    };
    let n_eq = cp.sorption_rate / cp.desorption_rate * c_eq;
    Ok((c_eq, n_eq))
}

/// Result of rewriting the damped wave equation as loop A.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveTransform {
    pub params: LoopAParams,
    /// Loop time tau relates to wave time t by tau = time_scale * t.
    pub time_scale: f64,
}

/// Rewrites the wave equation with Kelvin-Voigt damping sigma, speed c and
/// viscous damping mu as a loop-A system in the rescaled time tau = sigma t:
///
/// ```text
/// k = (mu sigma - c^2) / sigma^2,   b_tilde = c^2 / sigma^2,   r a_tilde = k.
/// ```
///
/// The product `r a_tilde` is what the dynamics determine; the individual
/// split is fixed as r = 1, a_tilde = k when k != 0, and r = 0, a_tilde = 1
/// when k = 0 (the coupling vanishes; a_tilde = 0 is rejected because the
/// relaxation line must stay well-posed in the estimates).
///
/// Under this map the loop-gain condition `|r a_tilde| < k + pi^2` is
/// equivalent to `2 c^2 < 2 mu sigma + sigma^2 pi^2`.
pub fn kv_wave_to_loop_a(wp: &WaveKVParams) -> Result<WaveTransform> {
    wp.validate()?;
    let s2 = wp.kv_sigma * wp.kv_sigma;
    let reaction_k = (wp.viscous_mu * wp.kv_sigma - wp.wave_speed * wp.wave_speed) / s2;
    let b_tilde = wp.wave_speed * wp.wave_speed / s2;
    let (r, a_tilde) = if reaction_k == 0.0 {
        (0.0, 1.0)
    } else {
        (1.0, reaction_k)
    };
    if a_tilde == 0.0 {
        return Err(Error::InvalidParameter(
            "degenerate split a_tilde = 0 rejected".into(),
        ));
    }
    Ok(WaveTransform {
        params: LoopAParams {
            reaction_k,
            r,
            a_tilde,
            b_tilde,
        },
        time_scale: wp.kv_sigma,
    })
}

/// Change of variables u1 = exp(-v z / (2p)) w1 taking the transport pair
/// with diffusion p into loop-B form:
///
/// ```text
/// q = -v / (2p),  a = -v^2 / (4p),  b(z,s) = p exp(-v z / (2p)) l(z,s),
/// ```
///
/// with transport speed and boundary gain carried over.
pub fn backstepping_to_loop_b(bp: &BacksteppingParams) -> Result<LoopBParams> {
    bp.validate()?;
    let rate = bp.transport_v / (2.0 * bp.diffusion);
    let kernel = if bp.kernel.is_zero() {
        Kernel::Zero
    } else {
        Kernel::ExpZWeighted {
            coef: bp.diffusion,
            rate,
            inner: Box::new(bp.kernel.clone()),
        }
    };
    Ok(LoopBParams {
        diffusion: bp.diffusion,
        transport_speed: bp.transport_c,
        robin_q: -rate,
        reaction: -bp.transport_v * bp.transport_v / (4.0 * bp.diffusion),
        boundary_gain: bp.gain,
        kernel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn chem(
        porosity: f64,
        velocity: f64,
        diffusion: f64,
        a: f64,
        b: f64,
        length: f64,
    ) -> ChemicalParams {
        ChemicalParams {
            porosity,
            velocity,
            diffusion,
            sorption_rate: a,
            desorption_rate: b,
            length,
            source_conc: 1.0,
        }
    }

    #[test]
    fn chemical_example_hand_evaluated() {
        // phi = 0.5, v = 0, D = a = b = L = 1:
        //   a_tilde = 1*1*0.5/1 = 0.5, b_tilde = 0.5, r = 2,
        //   k = 1*(0 + 4*1*1)/(4*1) = 1, and r*a_tilde = 1 <= k.
        let p = chemical_to_loop_a(&chem(0.5, 0.0, 1.0, 1.0, 1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(p.reaction_k, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.r, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.a_tilde, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.b_tilde, 0.5, epsilon = 1e-15);
        assert!(p.coupling_product() <= p.reaction_k + 1e-15);
    }

    #[test]
    fn chemical_second_evaluator_agreement() {
        // Independent re-evaluation: k split as L^2 v^2 phi^2/(4D^2) + a L^2/D.
        let cp = chem(0.9, 2.0, 0.5, 0.1, 0.3, 2.0);
        let p = chemical_to_loop_a(&cp).unwrap();
        let scale = cp.length * cp.length * cp.porosity / cp.diffusion;
        let k_alt = cp.length * cp.length * cp.velocity * cp.velocity * cp.porosity * cp.porosity
            / (4.0 * cp.diffusion * cp.diffusion)
            + cp.sorption_rate * cp.length * cp.length / cp.diffusion;
        assert_abs_diff_eq!(p.reaction_k, k_alt, epsilon = 1e-12);
        assert_abs_diff_eq!(p.reaction_k, 13.76, epsilon = 1e-12);
        assert_abs_diff_eq!(p.a_tilde, cp.sorption_rate * scale, epsilon = 1e-15);
        assert_abs_diff_eq!(p.a_tilde, 0.72, epsilon = 1e-12);
        assert_abs_diff_eq!(p.b_tilde, 2.16, epsilon = 1e-12);
        assert_abs_diff_eq!(p.r, 1.0 / 0.9, epsilon = 1e-15);
    }

    #[test]
    fn chemical_rejects_invalid() {
        assert!(chemical_to_loop_a(&chem(0.0, 0.0, 1.0, 1.0, 1.0, 1.0)).is_err());
    }

    proptest! {
        // r * a_tilde <= k < k + pi^2 for every valid chemical parameter set
        #[test]
        fn loop_gain_condition_automatic(
            porosity in 0.01f64..0.99,
            velocity in 0.0f64..10.0,
            diffusion in 0.01f64..10.0,
            a in 0.01f64..10.0,
            b in 0.01f64..10.0,
            length in 0.05f64..5.0,
        ) {
            let p = chemical_to_loop_a(&chem(porosity, velocity, diffusion, a, b, length)).unwrap();
            let product = p.coupling_product();
            prop_assert!(product <= p.reaction_k * (1.0 + 1e-12));
            prop_assert!(product.abs() < p.reaction_k + std::f64::consts::PI.powi(2));
        }
    }

    #[test]
    fn equilibrium_endpoints() {
        let cp = chem(0.4, 1.5, 0.8, 0.6, 0.9, 2.0);
        let (c0, _) = equilibrium_profile(&cp, 0.0).unwrap();
        assert_abs_diff_eq!(c0, cp.source_conc, epsilon = 1e-12);
        let (c_l, n_l) = equilibrium_profile(&cp, cp.length).unwrap();
        assert_abs_diff_eq!(c_l, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(n_l, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn equilibrium_zero_velocity_limit() {
        // the analytic limit is the linear profile; a tiny v must agree
        let cp0 = chem(0.4, 0.0, 0.8, 0.6, 0.9, 2.0);
        let cp_eps = chem(0.4, 1e-9, 0.8, 0.6, 0.9, 2.0);
        for xi in [0.0, 0.3, 1.0, 1.7, 2.0] {
            let (c_lim, _) = equilibrium_profile(&cp0, xi).unwrap();
            let (c_eps, _) = equilibrium_profile(&cp_eps, xi).unwrap();
            assert_abs_diff_eq!(
                c_lim,
                cp0.source_conc * (1.0 - xi / cp0.length),
                epsilon = 1e-14
            );
            assert_abs_diff_eq!(c_eps, c_lim, epsilon = 1e-8);
        }
    }

    #[test]
    fn equilibrium_strictly_decreasing() {
        let cp = chem(0.5, 2.0, 1.0, 1.0, 1.0, 1.0);
        let mut prev = f64::INFINITY;
        for i in 0..=20 {
            let xi = i as f64 / 20.0;
            let (c, n) = equilibrium_profile(&cp, xi).unwrap();
            assert!(c < prev, "profile must strictly decrease");
            assert_abs_diff_eq!(
                n,
                cp.sorption_rate / cp.desorption_rate * c,
                epsilon = 1e-14
            );
            prev = c;
        }
    }

    #[test]
    fn equilibrium_rejects_outside_domain() {
        let cp = chem(0.5, 1.0, 1.0, 1.0, 1.0, 1.0);
        assert!(equilibrium_profile(&cp, -0.1).is_err());
        assert!(equilibrium_profile(&cp, 1.1).is_err());
    }

    #[test]
    fn kv_unit_parameters() {
        // sigma = c = mu = 1: k = 0, b_tilde = 1, r a_tilde = 0
        let wt = kv_wave_to_loop_a(&WaveKVParams {
            kv_sigma: 1.0,
            wave_speed: 1.0,
            viscous_mu: 1.0,
        })
        .unwrap();
        assert_eq!(wt.params.reaction_k, 0.0);
        assert_eq!(wt.params.b_tilde, 1.0);
        assert_eq!(wt.params.coupling_product(), 0.0);
        assert_eq!(wt.time_scale, 1.0);
        // a_tilde = 0 split is rejected by construction
        assert!(wt.params.a_tilde != 0.0);
    }

    #[test]
    fn kv_condition_equivalence_on_grid() {
        // |r a_tilde| < k + pi^2 under the map <=> 2 c^2 < 2 mu sigma + sigma^2 pi^2
        let pi2 = std::f64::consts::PI.powi(2);
        for i in 0..10 {
            for j in 0..10 {
                for l in 0..10 {
                    let wp = WaveKVParams {
                        kv_sigma: 0.2 + 0.35 * i as f64,
                        wave_speed: 0.3 + 0.5 * j as f64,
                        viscous_mu: 0.11 * l as f64,
                    };
                    let wt = kv_wave_to_loop_a(&wp).unwrap();
                    let lhs_a = wt.params.coupling_product().abs();
                    let rhs_a = wt.params.reaction_k + pi2;
                    let wave_ok = 2.0 * wp.wave_speed.powi(2)
                        < 2.0 * wp.viscous_mu * wp.kv_sigma + wp.kv_sigma.powi(2) * pi2;
                    assert_eq!(lhs_a < rhs_a, wave_ok, "disagreement at {wp:?}");
                }
            }
        }
    }

    #[test]
    fn backstepping_example() {
        // v = 2, p = 1, l = 1: q = -1, a = -1, b(z,s) = exp(-z)
        let bp = BacksteppingParams {
            transport_v: 2.0,
            diffusion: 1.0,
            transport_c: 1.0,
            gain: 0.5,
            kernel: Kernel::Constant(1.0),
        };
        let lb = backstepping_to_loop_b(&bp).unwrap();
        assert_abs_diff_eq!(lb.robin_q, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(lb.reaction, -1.0, epsilon = 1e-15);
        assert_eq!(lb.boundary_gain, 0.5);
        assert_eq!(lb.transport_speed, 1.0);
        for &(z, s) in &[(0.0, 0.0), (0.5, 0.7), (1.0, 0.2)] {
            assert_abs_diff_eq!(lb.kernel.eval(z, s), (-z).exp(), epsilon = 1e-14);
        }
        // q < 1 always, and a < 0 so the spectrum condition holds at omega = 0
        assert!(lb.robin_q < 1.0);
        assert!(lb.reaction < 0.0);
    }

    #[test]
    fn backstepping_zero_kernel_decouples() {
        let bp = BacksteppingParams {
            transport_v: 1.0,
            diffusion: 0.25,
            transport_c: 2.0,
            gain: 3.0,
            kernel: Kernel::Zero,
        };
        let lb = backstepping_to_loop_b(&bp).unwrap();
        assert!(lb.kernel.is_zero());
    }
}
