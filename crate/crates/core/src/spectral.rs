//! Sturm-Liouville eigensystems for the two boundary-condition families, the
//! positive weight functions eta(z) = sin(theta + omega z), and the weighted
//! sup norm they induce.
//!
//! Only the two constant-coefficient families used by the solvers are built:
//!
//! * Dirichlet-Dirichlet: A u = -u'' + k u on u(0) = u(1) = 0, with
//!   lambda_n = k + n^2 pi^2 and phi_n = sqrt(2) sin(n pi z);
//! * Dirichlet-Robin: A u = -p u'' - a u on u(0) = u'(1) - q u(1) = 0, with
//!   phi_n = A_n sin(omega_n z) where omega_n solves omega cot(omega) = q on
//!   ((n-1) pi, n pi) and lambda_n = p omega_n^2 - a.

use crate::certify::{Certificate, ConditionId, Witness};
use crate::error::{Error, Result};
use crate::quadrature::GaussRule;
use crate::root::brent;

/// Root omega_n of omega cot(omega) = q on ((n-1) pi, n pi), expressed as the
/// offset b_n = (2n-1) pi/2 - omega_n, which lies in (-pi/2, pi/2).
///
/// q = 0 short-circuits to b_n = 0 exactly. The map omega -> omega cot(omega)
/// is strictly decreasing on every branch, so each root is unique; roots are
/// bracketed by ((n-1) pi + eps, n pi - eps) and polished by Brent to 1e-12.
pub fn robin_offsets(q: f64, count: usize) -> Result<Vec<f64>> {
    if !(q < 1.0) {
        return Err(Error::Domain(format!(
            "robin coefficient must satisfy q < 1 (no first-branch root otherwise), got {q}"
        )));
    }
    if count == 0 {
        return Err(Error::Domain("need count >= 1".into()));
    }
    let pi = std::f64::consts::PI;
    let mut offsets = Vec::with_capacity(count);
    for n in 1..=count {
        if q == 0.0 {
            offsets.push(0.0);
            continue;
        }
        let eps = 1e-9;
        let lo = (n - 1) as f64 * pi + eps;
        let hi = n as f64 * pi - eps;
        let f = |w: f64| w * (w.cos() / w.sin()) - q;
        let omega = brent(f, lo, hi, 1e-12, 200)?;
        offsets.push((2 * n - 1) as f64 * pi / 2.0 - omega);
    }
    Ok(offsets)
}

/// Which operator family an eigensystem diagonalizes.
#[derive(Clone, Debug, PartialEq)]
pub enum EigenFamily {
    /// -u'' + k u with u(0) = u(1) = 0.
    DirichletDirichlet { reaction_k: f64 },
    /// -p u'' - a u with u(0) = u'(1) - q u(1) = 0.
    DirichletRobin { p: f64, a: f64, q: f64 },
}

/// Truncated eigensystem. Both families share the representation
/// phi_n(z) = A_n sin(omega_n z).
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub family: EigenFamily,
    /// Eigenvalues, strictly increasing.
    pub lambdas: Vec<f64>,
    /// Frequencies omega_n of phi_n(z) = A_n sin(omega_n z).
    pub omegas: Vec<f64>,
    /// L^2-normalizers A_n > 0.
    pub normalizers: Vec<f64>,
    /// Offsets b_n = (2n-1) pi/2 - omega_n (zero for the Dirichlet-Dirichlet
    /// family, where the parameterization is omega_n = n pi).
    pub offsets: Vec<f64>,
    /// Largest relative disagreement between the closed-form normalizer and
    /// the alternative quotient-form expression; recorded as a diagnostic.
    pub normalizer_form_mismatch: f64,
}

impl EigenSystem {
    /// Eigensystem of -u'' + k u with homogeneous Dirichlet conditions.
    pub fn dirichlet_dirichlet(reaction_k: f64, count: usize) -> Self {
        let pi = std::f64::consts::PI;
        let sqrt2 = std::f64::consts::SQRT_2;
        let mut lambdas = Vec::with_capacity(count);
        let mut omegas = Vec::with_capacity(count);
        for n in 1..=count {
            let w = n as f64 * pi;
            omegas.push(w);
            lambdas.push(reaction_k + w * w);
        }
        EigenSystem {
            family: EigenFamily::DirichletDirichlet { reaction_k },
            lambdas,
            omegas,
            normalizers: vec![sqrt2; count],
            offsets: vec![0.0; count],
            normalizer_form_mismatch: 0.0,
        }
    }

    /// Eigensystem of -p u'' - a u with u(0) = 0 and u'(1) = q u(1).
    ///
    /// Normalizers are fixed by the unit-L^2-norm requirement,
    /// A_n = (int_0^1 sin^2(omega_n z) dz)^{-1/2} = sqrt(4 omega_n /
    /// (2 omega_n - sin 2 omega_n)); the equivalent quotient form
    /// sqrt((4 omega_n) / (2 omega_n - sin(2 omega_n))) written through the
    /// offsets is evaluated as well and any disagreement is recorded.
    pub fn dirichlet_robin(p: f64, a: f64, q: f64, count: usize) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("p must be > 0, got {p}")));
        }
        let pi = std::f64::consts::PI;
        let offsets = robin_offsets(q, count)?;
        let mut lambdas = Vec::with_capacity(count);
        let mut omegas = Vec::with_capacity(count);
        let mut normalizers = Vec::with_capacity(count);
        let mut mismatch: f64 = 0.0;
        for (i, &b) in offsets.iter().enumerate() {
            let n = i + 1;
            let w = (2 * n - 1) as f64 * pi / 2.0 - b;
            let lam = p * w * w - a;
            // unit L^2 norm on [0, 1]
            let a_n = (4.0 * w / (2.0 * w - (2.0 * w).sin())).sqrt();
            // quotient form through the offsets
            let num = 2.0 * (2 * n - 1) as f64 * pi - 4.0 * b;
            let den = (2 * n - 1) as f64 * pi - 2.0 * b - ((2 * n - 1) as f64 * pi - 2.0 * b).sin();
            let a_alt = (num / den).sqrt();
            mismatch = mismatch.max((a_n - a_alt).abs() / a_n);
            omegas.push(w);
            lambdas.push(lam);
            normalizers.push(a_n);
        }
        Ok(EigenSystem {
            family: EigenFamily::DirichletRobin { p, a, q },
            lambdas,
            omegas,
            normalizers,
            offsets,
            normalizer_form_mismatch: mismatch,
        })
    }

    pub fn count(&self) -> usize {
        self.lambdas.len()
    }

    /// phi_n at z (0-based mode index).
    pub fn eigenfunction(&self, idx: usize, z: f64) -> f64 {
        self.normalizers[idx] * (self.omegas[idx] * z).sin()
    }

    /// phi_n'(z).
    pub fn eigenfunction_deriv(&self, idx: usize, z: f64) -> f64 {
        self.normalizers[idx] * self.omegas[idx] * (self.omegas[idx] * z).cos()
    }

    /// CSV dump with columns `n, b_n, lambda_n, A_n`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,b_n,lambda_n,A_n\n");
        for i in 0..self.count() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                i + 1,
                crate::report::fmt_float(self.offsets[i]),
                crate::report::fmt_float(self.lambdas[i]),
                crate::report::fmt_float(self.normalizers[i]),
            ));
        }
        out
    }
}

/// Positive weight eta(z) = sin(theta + omega z) with its decay constant.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WeightFunction {
    pub theta: f64,
    pub omega: f64,
    /// Decay constant sigma of the weighted parabolic estimate this weight
    /// certifies: k + (pi - 2 theta)^2 for loop A, p omega^2 - a for loop B.
    pub decay_sigma: f64,
}

impl WeightFunction {
    /// Loop-A weight: omega = pi - 2 theta, sigma = k + (pi - 2 theta)^2.
    pub fn loop_a(theta: f64, reaction_k: f64) -> Result<Self> {
        let pi = std::f64::consts::PI;
        if !(theta > 0.0 && theta < pi / 2.0) {
            return Err(Error::Domain(format!(
                "loop-A weight needs theta in (0, pi/2), got {theta}"
            )));
        }
        let omega = pi - 2.0 * theta;
        let decay_sigma = reaction_k + omega * omega;
        if decay_sigma <= 0.0 {
            return Err(Error::Domain(format!(
                "decay constant k + (pi - 2 theta)^2 = {decay_sigma} must be positive"
            )));
        }
        Ok(WeightFunction {
            theta,
            omega,
            decay_sigma,
        })
    }

    /// Loop-B weight: sigma = p omega^2 - a.
    pub fn loop_b(theta: f64, omega: f64, p: f64, a: f64) -> Result<Self> {
        let w = WeightFunction {
            theta,
            omega,
            decay_sigma: p * omega * omega - a,
        };
        w.validate()?;
        if w.decay_sigma <= 0.0 {
            return Err(Error::Domain(format!(
                "decay constant p omega^2 - a = {} must be positive",
                w.decay_sigma
            )));
        }
        Ok(w)
    }

    /// eta > 0 on [0, 1]: theta in (0, pi) and omega in [0, pi - theta).
    pub fn validate(&self) -> Result<()> {
        let pi = std::f64::consts::PI;
        if !(self.theta > 0.0
            && self.theta < pi
            && self.omega >= 0.0
            && self.theta + self.omega < pi)
        {
            return Err(Error::Domain(format!(
                "weight requires theta in (0, pi) and omega in [0, pi - theta), got theta = {}, omega = {}",
                self.theta, self.omega
            )));
        }
        Ok(())
    }

    pub fn eval(&self, z: f64) -> f64 {
        (self.theta + self.omega * z).sin()
    }

    pub fn deriv(&self, z: f64) -> f64 {
        self.omega * (self.theta + self.omega * z).cos()
    }

    pub fn second_deriv(&self, z: f64) -> f64 {
        -self.omega * self.omega * (self.theta + self.omega * z).sin()
    }

    /// eta is concave on its positive arc, so the minimum sits at an endpoint.
    pub fn min_on_unit(&self) -> f64 {
        self.eval(0.0).min(self.eval(1.0))
    }
}

/// Weighted sup norm max_z |u(z)| / eta(z) over the sampled profile.
pub fn weighted_sup_norm(values: &[f64], nodes: &[f64], eta: &WeightFunction) -> Result<f64> {
    debug_assert_eq!(values.len(), nodes.len());
    let mut best = 0.0f64;
    for (&u, &z) in values.iter().zip(nodes) {
        let e = eta.eval(z);
        if e <= 0.0 {
            return Err(Error::Domain(format!("weight is not positive at z = {z}")));
        }
        best = best.max(u.abs() / e);
    }
    Ok(best)
}

/// Sup norm over the profile (the eta = 1 case).
pub fn sup_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Sturm-Liouville problem description used by the weighted-estimate check:
/// operator -(p u')' + q u with separated boundary forms
/// b1 u(0) + b2 u'(0) and a1 u(1) + a2 u'(1).
#[derive(Clone)]
pub struct SlSpec {
    pub p_coef: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub p_prime: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub q_coef: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Left boundary coefficients (b1, b2).
    pub left: (f64, f64),
    /// Right boundary coefficients (a1, a2).
    pub right: (f64, f64),
}

impl std::fmt::Debug for SlSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SlSpec")
            .field("left", &self.left)
            .field("right", &self.right)
            .finish_non_exhaustive()
    }
}

impl SlSpec {
    /// Constant-coefficient operator -p u'' + q u.
    pub fn constant(p: f64, q: f64, left: (f64, f64), right: (f64, f64)) -> Result<Self> {
        let spec = SlSpec {
            p_coef: std::sync::Arc::new(move |_| p),
            p_prime: std::sync::Arc::new(|_| 0.0),
            q_coef: std::sync::Arc::new(move |_| q),
            left,
            right,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Loop-A operator -u'' + k u with Dirichlet conditions encoded with the
    /// sign convention (b1, b2) = (-1, 0), (a1, a2) = (1, 0).
    pub fn loop_a(reaction_k: f64) -> Self {
        SlSpec::constant(1.0, reaction_k, (-1.0, 0.0), (1.0, 0.0)).expect("valid by construction")
    }

    /// Loop-B operator -p u'' - a u with Dirichlet left and Robin right
    /// u'(1) - q u(1) = 0 encoded as (a1, a2) = (-q, 1).
    pub fn loop_b(p: f64, a: f64, q: f64) -> Result<Self> {
        SlSpec::constant(p, -a, (-1.0, 0.0), (-q, 1.0))
    }

    /// Sign normalization: b2 > 0, or b2 = 0 and b1 < 0; a2 > 0, or a2 = 0
    /// and a1 > 0; and neither boundary form vanishes identically.
    pub fn validate(&self) -> Result<()> {
        let (b1, b2) = self.left;
        let (a1, a2) = self.right;
        if b1.abs() + b2.abs() == 0.0 || a1.abs() + a2.abs() == 0.0 {
            return Err(Error::InvalidParameter(
                "boundary coefficient pairs must not both vanish".into(),
            ));
        }
        if !(b2 > 0.0 || (b2 == 0.0 && b1 < 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "left boundary signs must satisfy b2 > 0, or b2 = 0 and b1 < 0; got ({b1}, {b2})"
            )));
        }
        if !(a2 > 0.0 || (a2 == 0.0 && a1 > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "right boundary signs must satisfy a2 > 0, or a2 = 0 and a1 > 0; got ({a1}, {a2})"
            )));
        }
        Ok(())
    }
}

/// Checks the weighted-decay inequality
/// `p eta'' + p' eta' - q eta <= -sigma eta` at every grid node together with
/// the boundary sign conditions `b1 eta(0) + b2 eta'(0) < 0` and
/// `a1 eta(1) + a2 eta'(1) > 0`.
///
/// The interior inequality is non-strict (the canonical weights achieve it
/// with equality), so the certificate passes when the worst interior margin
/// is above -1e-12 and both boundary margins are strictly positive. The
/// reported lhs/rhs pair is the worst interior node normalized by eta.
pub fn check_h4(sl: &SlSpec, eta: &WeightFunction, sigma: f64, grid: &[f64]) -> Certificate {
    let mut worst_interior = f64::INFINITY;
    for &z in grid {
        let e = eta.eval(z);
        let lhs = (sl.p_coef)(z) * eta.second_deriv(z) + (sl.p_prime)(z) * eta.deriv(z)
            - (sl.q_coef)(z) * e;
        let rhs = -sigma * e;
        // normalized margin so the tolerance is scale-free
        worst_interior = worst_interior.min((rhs - lhs) / e);
    }
    let (b1, b2) = sl.left;
    let (a1, a2) = sl.right;
    let left_margin = -(b1 * eta.eval(0.0) + b2 * eta.deriv(0.0));
    let right_margin = a1 * eta.eval(1.0) + a2 * eta.deriv(1.0);
    let pass = worst_interior >= -1e-12 && left_margin > 0.0 && right_margin > 0.0;
    let mut notes = vec![
        format!("interior margin (normalized): {worst_interior:e}"),
        format!("left boundary margin: {left_margin:e}"),
        format!("right boundary margin: {right_margin:e}"),
    ];
    if worst_interior.abs() <= 1e-12 {
        notes.push("interior inequality holds with equality (canonical weight)".into());
    }
    Certificate {
        condition_id: ConditionId::WeightedDecay,
        lhs: -worst_interior,
        rhs: 0.0,
        margin: worst_interior.min(left_margin).min(right_margin),
        witnesses: Witness {
            theta: Some(eta.theta),
            omega: Some(eta.omega),
            epsilon: None,
            zeta: None,
        },
        pass,
        notes,
    }
}

/// Orthonormality residual max_{n,m <= count} |<phi_n, phi_m> - delta_nm|
/// under the rule `quad`.
pub fn orthonormality_residual(es: &EigenSystem, count: usize, quad: &GaussRule) -> f64 {
    let count = count.min(es.count());
    let mut worst = 0.0f64;
    // cache eigenfunction samples at the quadrature nodes
    let samples: Vec<Vec<f64>> = (0..count)
        .map(|i| {
            quad.nodes()
                .iter()
                .map(|&z| es.eigenfunction(i, z))
                .collect()
        })
        .collect();
    for i in 0..count {
        for j in i..count {
            let mut acc = 0.0;
            for ((&w, si), sj) in quad.weights().iter().zip(&samples[i]).zip(&samples[j]) {
                acc += w * si * sj;
            }
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc - target).abs());
        }
    }
    worst
}
