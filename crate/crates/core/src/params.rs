//! Parameter sets of the four model families and the kernel representation.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Physical parameters of the underground chemical-transport model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChemicalParams {
    /// Soil porosity phi, in (0, 1).
    pub porosity: f64,
    /// Bulk groundwater velocity v >= 0.
    pub velocity: f64,
    /// Diffusion coefficient D > 0.
    pub diffusion: f64,
    /// Sorption rate a > 0.
    pub sorption_rate: f64,
    /// Desorption rate b > 0.
    pub desorption_rate: f64,
    /// Domain length L > 0.
    pub length: f64,
    /// Nominal source concentration c0 > 0.
    pub source_conc: f64,
}

impl ChemicalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.porosity > 0.0 && self.porosity < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "porosity must lie in (0, 1), got {}",
                self.porosity
            )));
        }
        if self.velocity < 0.0 || !self.velocity.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "velocity must be finite and >= 0, got {}",
                self.velocity
            )));
        }
        for (name, v) in [
            ("diffusion", self.diffusion),
            ("sorption_rate", self.sorption_rate),
            ("desorption_rate", self.desorption_rate),
            ("length", self.length),
            ("source_conc", self.source_conc),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Dimensionless parameters of loop A: a reaction-diffusion line coupled to a
/// zero-speed hyperbolic line.
///
/// The parabolic equation carries reaction coefficient `k` and receives
/// `r * b_tilde * u2`; the hyperbolic line relaxes at rate `b_tilde` and is
/// driven by `a_tilde * u1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopAParams {
    /// Dimensionless reaction coefficient of the parabolic equation.
    #[serde(rename = "k")]
    pub reaction_k: f64,
    /// Dimensionless coupling factor.
    pub r: f64,
    /// Dimensionless sorption coefficient.
    pub a_tilde: f64,
    /// Dimensionless desorption coefficient; the stability theory requires
    /// b_tilde > 0.
    pub b_tilde: f64,
}

impl LoopAParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("k", self.reaction_k),
            ("r", self.r),
            ("a_tilde", self.a_tilde),
            ("b_tilde", self.b_tilde),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite, got {v}"
                )));
            }
        }
        if self.b_tilde <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "b_tilde must be > 0, got {}",
                self.b_tilde
            )));
        }
        Ok(())
    }

    /// Product of the coupling coefficients, the quantity the loop-gain
    /// condition bounds.
    pub fn coupling_product(&self) -> f64 {
        self.r * self.a_tilde
    }
}

/// Wave equation with Kelvin-Voigt damping `kv_sigma`, wave speed `wave_speed`
/// and viscous damping `viscous_mu`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveKVParams {
    /// Kelvin-Voigt damping coefficient sigma > 0.
    pub kv_sigma: f64,
    /// Wave speed c > 0.
    pub wave_speed: f64,
    /// Viscous damping coefficient mu >= 0.
    pub viscous_mu: f64,
}

impl WaveKVParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kv_sigma > 0.0 && self.kv_sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kv_sigma must be finite and > 0, got {}",
                self.kv_sigma
            )));
        }
        if !(self.wave_speed > 0.0 && self.wave_speed.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "wave_speed must be finite and > 0, got {}",
                self.wave_speed
            )));
        }
        if !(self.viscous_mu >= 0.0 && self.viscous_mu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "viscous_mu must be finite and >= 0, got {}",
                self.viscous_mu
            )));
        }
        Ok(())
    }
}

/// Parameters of loop B: a reaction-diffusion line with a Robin condition at
/// z = 1, coupled to a transport line of speed `transport_speed` through the
/// non-local kernel and the boundary trace gain.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopBParams {
    /// Diffusion coefficient p > 0.
    pub diffusion: f64,
    /// Transport speed c > 0 of the hyperbolic line.
    pub transport_speed: f64,
    /// Robin coefficient q < 1 in u1'(t,1) = q u1(t,1).
    pub robin_q: f64,
    /// Reaction coefficient a of the parabolic line.
    pub reaction: f64,
    /// Boundary trace gain k in u2(t,0) = k u1(t,1).
    pub boundary_gain: f64,
    /// In-domain coupling kernel b(z, s).
    pub kernel: Kernel,
}

impl LoopBParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.diffusion > 0.0 && self.diffusion.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "diffusion must be finite and > 0, got {}",
                self.diffusion
            )));
        }
        if !(self.transport_speed > 0.0 && self.transport_speed.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "transport_speed must be finite and > 0, got {}",
                self.transport_speed
            )));
        }
        if !(self.robin_q < 1.0 && self.robin_q.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "robin_q must be finite and < 1, got {}",
                self.robin_q
            )));
        }
        for (name, v) in [
            ("reaction", self.reaction),
            ("boundary_gain", self.boundary_gain),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite, got {v}"
                )));
            }
        }
        self.kernel.validate()
    }
}

/// Parameters of the transport pair with small diffusion, before the
/// exponential change of variables that brings it into loop-B form.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BacksteppingParams {
    /// Transport speed v > 0 of the diffusive line.
    pub transport_v: f64,
    /// Diffusion coefficient p > 0.
    pub diffusion: f64,
    /// Transport speed c > 0 of the second line.
    pub transport_c: f64,
    /// Boundary feedback gain k.
    pub gain: f64,
    /// Feedback kernel l(z, s).
    pub kernel: Kernel,
}

impl BacksteppingParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("transport_v", self.transport_v),
            ("diffusion", self.diffusion),
            ("transport_c", self.transport_c),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if !self.gain.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gain must be finite, got {}",
                self.gain
            )));
        }
        self.kernel.validate()
    }
}

/// A coupling kernel on [0, 1]^2.
///
/// Closed forms come from a small named catalog; arbitrary kernels are
/// supplied as uniform-grid tables with bilinear interpolation. Tables are
/// only piecewise smooth; responsibility for supplying data of adequate
/// smoothness rests with the caller.
#[derive(Clone, Debug, PartialEq)]
pub enum Kernel {
    /// b(z, s) = 0.
    Zero,
    /// b(z, s) = value.
    Constant(f64),
    /// b(z, s) = amplitude * sin(pi z) sin(pi s).
    SineProduct { amplitude: f64 },
    /// b(z, s) = coef * exp(-rate * z).
    ExpZ { coef: f64, rate: f64 },
    /// b(z, s) = coef * exp(-rate * z) * inner(z, s). Produced by the
    /// change of variables on the transport pair; serializes as a sampled
    /// table.
    ExpZWeighted {
        coef: f64,
        rate: f64,
        inner: Box<Kernel>,
    },
    /// Row-major samples on the uniform (grid_n x grid_n) tensor grid,
    /// bilinearly interpolated.
    Table { grid_n: usize, values: Vec<f64> },
}

impl Kernel {
    pub fn eval(&self, z: f64, s: f64) -> f64 {
        match self {
            Kernel::Zero => 0.0,
            Kernel::Constant(v) => *v,
            Kernel::SineProduct { amplitude } => {
                amplitude * (std::f64::consts::PI * z).sin() * (std::f64::consts::PI * s).sin()
            }
            Kernel::ExpZ { coef, rate } => coef * (-rate * z).exp(),
            Kernel::ExpZWeighted { coef, rate, inner } => {
                coef * (-rate * z).exp() * inner.eval(z, s)
            }
            Kernel::Table { grid_n, values } => bilinear(*grid_n, values, z, s),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Kernel::Zero => true,
            Kernel::Constant(v) => *v == 0.0,
            Kernel::SineProduct { amplitude } => *amplitude == 0.0,
            Kernel::ExpZ { coef, .. } => *coef == 0.0,
            Kernel::ExpZWeighted { coef, inner, .. } => *coef == 0.0 || inner.is_zero(),
            Kernel::Table { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Kernel::Table { grid_n, values } => {
                if *grid_n < 2 {
                    return Err(Error::InvalidParameter(format!(
                        "kernel table needs grid_n >= 2, got {grid_n}"
                    )));
                }
                if values.len() != grid_n * grid_n {
                    return Err(Error::InvalidParameter(format!(
                        "kernel table expects {} values, got {}",
                        grid_n * grid_n,
                        values.len()
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "kernel table contains non-finite values".into(),
                    ));
                }
                Ok(())
            }
            Kernel::ExpZWeighted { coef, rate, inner } => {
                if !(coef.is_finite() && rate.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "kernel weights must be finite".into(),
                    ));
                }
                inner.validate()
            }
            Kernel::Constant(v) => {
                if v.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(
                        "kernel constant must be finite".into(),
                    ))
                }
            }
            Kernel::SineProduct { amplitude } => {
                if amplitude.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(
                        "kernel amplitude must be finite".into(),
                    ))
                }
            }
            Kernel::ExpZ { coef, rate } => {
                if coef.is_finite() && rate.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(
                        "kernel parameters must be finite".into(),
                    ))
                }
            }
            Kernel::Zero => Ok(()),
        }
    }

    /// Sample to a uniform table (used when a composite form must serialize).
    pub fn sample_table(&self, grid_n: usize) -> Kernel {
        let h = 1.0 / (grid_n - 1) as f64;
        let mut values = Vec::with_capacity(grid_n * grid_n);
        for i in 0..grid_n {
            for j in 0..grid_n {
                values.push(self.eval(i as f64 * h, j as f64 * h));
            }
        }
        Kernel::Table { grid_n, values }
    }
}

fn bilinear(n: usize, values: &[f64], z: f64, s: f64) -> f64 {
    let h = 1.0 / (n - 1) as f64;
    let zi = ((z / h).floor() as usize).min(n - 2);
    let sj = ((s / h).floor() as usize).min(n - 2);
    let tz = (z - zi as f64 * h) / h;
    let ts = (s - sj as f64 * h) / h;
    let v00 = values[zi * n + sj];
    let v01 = values[zi * n + sj + 1];
    let v10 = values[(zi + 1) * n + sj];
    let v11 = values[(zi + 1) * n + sj + 1];
    v00 * (1.0 - tz) * (1.0 - ts) + v01 * (1.0 - tz) * ts + v10 * tz * (1.0 - ts) + v11 * tz * ts
}

// Wire format: {"kind":"table","grid_n":N,"values":[...]} or
// {"kind":"expr","name":<catalog id>}. Catalog ids: "zero", "one",
// "sine_product", "exp_z". Parameterized or composite kernels serialize as
// sampled 65x65 tables.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum KernelWire {
    Expr { name: String },
    Table { grid_n: usize, values: Vec<f64> },
}

impl Serialize for Kernel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let wire = match self {
            Kernel::Zero => KernelWire::Expr {
                name: "zero".into(),
            },
            Kernel::Constant(v) if *v == 1.0 => KernelWire::Expr { name: "one".into() },
            Kernel::SineProduct { amplitude } if *amplitude == 1.0 => KernelWire::Expr {
                name: "sine_product".into(),
            },
            Kernel::ExpZ { coef, rate } if *coef == 1.0 && *rate == 1.0 => KernelWire::Expr {
                name: "exp_z".into(),
            },
            Kernel::Table { grid_n, values } => KernelWire::Table {
                grid_n: *grid_n,
                values: values.clone(),
            },
            other => match other.sample_table(65) {
                Kernel::Table { grid_n, values } => KernelWire::Table { grid_n, values },
                _ => unreachable!(),
            },
        };
        wire.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Kernel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        match KernelWire::deserialize(deserializer)? {
            KernelWire::Expr { name } => match name.as_str() {
                "zero" => Ok(Kernel::Zero),
                "one" => Ok(Kernel::Constant(1.0)),
                "sine_product" => Ok(Kernel::SineProduct { amplitude: 1.0 }),
                "exp_z" => Ok(Kernel::ExpZ {
                    coef: 1.0,
                    rate: 1.0,
                }),
                other => Err(D::Error::custom(format!(
                    "unknown kernel catalog id {other:?} (known: zero, one, sine_product, exp_z)"
                ))),
            },
            KernelWire::Table { grid_n, values } => {
                let k = Kernel::Table { grid_n, values };
                k.validate().map_err(D::Error::custom)?;
                Ok(k)
            }
        }
    }
}

impl PartialEq for LoopBParams {
    fn eq(&self, other: &Self) -> bool {
        self.diffusion == other.diffusion
            && self.transport_speed == other.transport_speed
            && self.robin_q == other.robin_q
            && self.reaction == other.reaction
            && self.boundary_gain == other.boundary_gain
            && self.kernel == other.kernel
    }
}
