//! Space-time grid and stored trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{fmt_float, parse_float};
use crate::spectral::{sup_norm, weighted_sup_norm, WeightFunction};

/// Uniform grid on [0, 1] with a fixed time step and horizon. The schemes
/// built on it are unconditionally stable or exact in time, so `dt` carries
/// no stability restriction; the horizon must be an integer number of steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n_z: usize,
    pub dt: f64,
    pub t_end: f64,
}

impl Grid {
    pub fn new(n_z: usize, dt: f64, t_end: f64) -> Result<Self> {
        let g = Grid { n_z, dt, t_end };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_z < 3 {
            return Err(Error::InvalidParameter(format!(
                "n_z must be >= 3, got {}",
                self.n_z
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dt must be > 0, got {}",
                self.dt
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "t_end must be > 0, got {}",
                self.t_end
            )));
        }
        let steps = self.t_end / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "t_end = {} is not an integer multiple of dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = 1.0 / (self.n_z - 1) as f64;
        (0..self.n_z).map(|i| i as f64 * h).collect()
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.n_z - 1) as f64
    }
}

/// Metadata stored with a trajectory.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub solver: String,
    pub model: String,
    pub disturbance: String,
}

/// Time-indexed pair of spatial profiles with per-step norms.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Spatial nodes the profiles are stored on.
    pub nodes: Vec<f64>,
    pub u1: Vec<Vec<f64>>,
    pub u2: Vec<Vec<f64>>,
    pub sup_u1: Vec<f64>,
    pub sup_u2: Vec<f64>,
    pub wnorm_u1: Vec<f64>,
    pub wnorm_u2: Vec<f64>,
    /// Weight behind the weighted norms; `None` means the plain sup norm.
    pub weight: Option<WeightFunction>,
    /// Per-step residual of the Robin closure u1'(1) - q u1(1), when the
    /// model has one. Spectral solvers fill this from the analytic modal
    /// derivative.
    pub robin_residuals: Option<Vec<f64>>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn new(nodes: Vec<f64>, weight: Option<WeightFunction>, meta: TrajectoryMeta) -> Self {
        Trajectory {
            times: Vec::new(),
            nodes,
            u1: Vec::new(),
            u2: Vec::new(),
            sup_u1: Vec::new(),
            sup_u2: Vec::new(),
            wnorm_u1: Vec::new(),
            wnorm_u2: Vec::new(),
            weight,
            robin_residuals: None,
            meta,
        }
    }

    /// Appends one stored step, computing sup and weighted norms.
    pub fn push(&mut self, t: f64, u1: Vec<f64>, u2: Vec<f64>) -> Result<()> {
        let s1 = sup_norm(&u1);
        let s2 = sup_norm(&u2);
        let (w1, w2) = match &self.weight {
            Some(eta) => (
                weighted_sup_norm(&u1, &self.nodes, eta)?,
                weighted_sup_norm(&u2, &self.nodes, eta)?,
            ),
            None => (s1, s2),
        };
        self.times.push(t);
        self.sup_u1.push(s1);
        self.sup_u2.push(s2);
        self.wnorm_u1.push(w1);
        self.wnorm_u2.push(w2);
        self.u1.push(u1);
        self.u2.push(u2);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `t, sup_u1, sup_u2, wnorm_u1, wnorm_u2` CSV.
    pub fn to_norms_csv(&self) -> String {
        let mut out = String::from("t,sup_u1,sup_u2,wnorm_u1,wnorm_u2\n");
        for j in 0..self.len() {
            out.push_str(&fmt_float(self.times[j]));
            for v in [
                self.sup_u1[j],
                self.sup_u2[j],
                self.wnorm_u1[j],
                self.wnorm_u2[j],
            ] {
                out.push(',');
                out.push_str(&fmt_float(v));
            }
            out.push('\n');
        }
        out
    }

    /// Full-profile CSV `t, z, u1, u2`.
    pub fn to_profiles_csv(&self) -> String {
        let mut out = String::from("t,z,u1,u2\n");
        for j in 0..self.len() {
            for (i, &z) in self.nodes.iter().enumerate() {
                out.push_str(&fmt_float(self.times[j]));
                out.push(',');
                out.push_str(&fmt_float(z));
                out.push(',');
                out.push_str(&fmt_float(self.u1[j][i]));
                out.push(',');
                out.push_str(&fmt_float(self.u2[j][i]));
                out.push('\n');
            }
        }
        out
    }
}

/// Norm table of a trajectory, as written to and read from `trajectory.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySummary {
    pub times: Vec<f64>,
    pub sup_u1: Vec<f64>,
    pub sup_u2: Vec<f64>,
    pub wnorm_u1: Vec<f64>,
    pub wnorm_u2: Vec<f64>,
}

impl TrajectorySummary {
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Config("empty trajectory CSV".into()))?;
        if header != "t,sup_u1,sup_u2,wnorm_u1,wnorm_u2" {
            return Err(Error::Config(format!(
                "unexpected trajectory header {header:?}"
            )));
        }
        let mut out = TrajectorySummary {
            times: Vec::new(),
            sup_u1: Vec::new(),
            sup_u2: Vec::new(),
            wnorm_u1: Vec::new(),
            wnorm_u2: Vec::new(),
        };
        for (ln, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::Config(format!(
                    "line {}: expected 5 fields, got {}",
                    ln + 2,
                    fields.len()
                )));
            }
            out.times.push(parse_float(fields[0])?);
            out.sup_u1.push(parse_float(fields[1])?);
            out.sup_u2.push(parse_float(fields[2])?);
            out.wnorm_u1.push(parse_float(fields[3])?);
            out.wnorm_u2.push(parse_float(fields[4])?);
        }
        Ok(out)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,sup_u1,sup_u2,wnorm_u1,wnorm_u2\n");
        for j in 0..self.times.len() {
            out.push_str(&fmt_float(self.times[j]));
            for v in [
                self.sup_u1[j],
                self.sup_u2[j],
                self.wnorm_u1[j],
                self.wnorm_u2[j],
            ] {
                out.push(',');
                out.push_str(&fmt_float(v));
            }
            out.push('\n');
        }
        out
    }
}
