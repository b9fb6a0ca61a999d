//! Run configuration: a single JSON document describing the model, grid,
//! disturbance, initial data and command-specific blocks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::params::{BacksteppingParams, ChemicalParams, LoopAParams, LoopBParams, WaveKVParams};
use crate::signal::DisturbanceSignal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Certify,
    Simulate,
    Verify,
    GainCurve,
    Sweep,
}

impl std::fmt::Display for CommandKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CommandKind::Certify => "certify",
            CommandKind::Simulate => "simulate",
            CommandKind::Verify => "verify",
            CommandKind::GainCurve => "gain-curve",
            CommandKind::Sweep => "sweep",
        };
        f.write_str(s)
    }
}

/// Model block: one of the four families (plus the transport pair that maps
/// onto loop B).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelConfig {
    Chemical(ChemicalParams),
    LoopA(LoopAParams),
    WaveKv(WaveKVParams),
    LoopB(LoopBParams),
    Backstepping(BacksteppingParams),
}

impl ModelConfig {
    pub fn family_name(&self) -> &'static str {
        match self {
            ModelConfig::Chemical(_) => "chemical",
            ModelConfig::LoopA(_) => "loop_a",
            ModelConfig::WaveKv(_) => "wave_kv",
            ModelConfig::LoopB(_) => "loop_b",
            ModelConfig::Backstepping(_) => "backstepping",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelConfig::Chemical(p) => p.validate(),
            ModelConfig::LoopA(p) => p.validate(),
            ModelConfig::WaveKv(p) => p.validate(),
            ModelConfig::LoopB(p) => p.validate(),
            ModelConfig::Backstepping(p) => p.validate(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    #[default]
    Spectral,
    Fd,
    Picard,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_z: usize,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default)]
    pub solver: SolverKind,
}

fn default_modes() -> usize {
    64
}

impl GridConfig {
    pub fn to_grid(&self) -> Result<Grid> {
        Grid::new(self.n_z, self.dt, self.t_end)
    }
}

/// Catalog of closed-form initial profiles.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    /// amplitude * sin(half_waves * pi * z).
    Sine {
        amplitude: f64,
        half_waves: u32,
    },
    Linear {
        from: f64,
        to: f64,
    },
    Quadratic {
        c0: f64,
        c1: f64,
        c2: f64,
    },
}

impl ProfileSpec {
    pub fn eval(&self, z: f64) -> f64 {
        match *self {
            ProfileSpec::Zero => 0.0,
            ProfileSpec::Constant { value } => value,
            ProfileSpec::Sine {
                amplitude,
                half_waves,
            } => amplitude * (half_waves as f64 * std::f64::consts::PI * z).sin(),
            ProfileSpec::Linear { from, to } => from + (to - from) * z,
            ProfileSpec::Quadratic { c0, c1, c2 } => c0 + c1 * z + c2 * z * z,
        }
    }

    pub fn to_fn(&self) -> impl Fn(f64) -> f64 + '_ {
        move |z| self.eval(z)
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub u1: ProfileSpec,
    #[serde(default)]
    pub u2: ProfileSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessConfig {
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default = "default_eps")]
    pub epsilon: f64,
    #[serde(default = "default_eps")]
    pub zeta: f64,
}

fn default_eps() -> f64 {
    0.05
}

impl Default for WitnessConfig {
    fn default() -> Self {
        WitnessConfig {
            theta: None,
            omega: None,
            epsilon: 0.05,
            zeta: 0.05,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainCurveConfig {
    pub s_min: f64,
    pub s_max: f64,
    pub n_points: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Model field swept over: one of the numeric fields of the chosen
    /// family (for example "transport_speed" for loop B).
    pub axis: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub full_profiles: bool,
    /// Timestamps are off by default so artifacts are byte-reproducible.
    #[serde(default)]
    pub timestamp: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandKind>,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disturbance: Option<DisturbanceSignal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_curve: Option<GainCurveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// One validation finding, pointing at the config field it concerns.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Validates invariants of every referenced block, the compatibility
    /// conditions of the initial data, and command/model coherence. An empty
    /// list means the configuration is runnable for `command`.
    pub fn validate(&self, command: CommandKind) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut push = |field: &str, message: String| {
            out.push(Diagnostic {
                field: field.into(),
                message,
            });
        };
        if let Some(declared) = self.command {
            if declared != command {
                push(
                    "command",
                    format!("config declares command {declared} but {command} was requested"),
                );
            }
        }
        if let Err(e) = self.model.validate() {
            push("model", e.to_string());
        }
        if let Some(grid) = &self.grid {
            if let Err(e) = grid.to_grid() {
                push("grid", e.to_string());
            }
            if grid.modes == 0 {
                push("grid.modes", "series truncation must be at least 1".into());
            }
        }
        if let Some(d) = &self.disturbance {
            if let Err(e) = d.validate() {
                push("disturbance", e.to_string());
            }
        }
        let needs_simulation = matches!(command, CommandKind::Simulate | CommandKind::Verify);
        if needs_simulation && self.grid.is_none() {
            push("grid", format!("command {command} requires a grid block"));
        }
        if command == CommandKind::GainCurve {
            match &self.gain_curve {
                None => push(
                    "gain_curve",
                    "command gain-curve requires a gain_curve block".into(),
                ),
                Some(gc) => {
                    if !(gc.s_min < gc.s_max) || gc.n_points < 3 {
                        push("gain_curve", "need s_min < s_max and n_points >= 3".into());
                    }
                }
            }
        }
        if command == CommandKind::Sweep {
            match &self.sweep {
                None => push("sweep", "command sweep requires a sweep block".into()),
                Some(sw) => {
                    if sw.values.is_empty() {
                        push("sweep.values", "sweep needs at least one value".into());
                    }
                    if !sweep_axis_valid(&self.model, &sw.axis) {
                        push(
                            "sweep.axis",
                            format!(
                                "axis {:?} is not a numeric field of family {}",
                                sw.axis,
                                self.model.family_name()
                            ),
                        );
                    }
                }
            }
        }
        // hypothesis checks that the certificates rely on
        if let ModelConfig::LoopA(p) = &self.model {
            if p.b_tilde <= 0.0 {
                push(
                    "model.b_tilde",
                    format!(
                        "the loop-A stability theory requires b_tilde > 0, got {}",
                        p.b_tilde
                    ),
                );
            }
        }
        // initial-data compatibility at the boundaries
        if needs_simulation {
            let init = self.initial.clone().unwrap_or_default();
            let d0 = self
                .disturbance
                .as_ref()
                .map(|d| d.eval(0.0))
                .unwrap_or(0.0);
            match &self.model {
                ModelConfig::Chemical(_) | ModelConfig::LoopA(_) | ModelConfig::WaveKv(_) => {
                    if (init.u1.eval(0.0) - d0).abs() > 1e-8 {
                        push(
                            "initial.u1",
                            format!(
                                "compatibility u1(0) = d(0) violated: u1(0) = {}, d(0) = {d0}",
                                init.u1.eval(0.0)
                            ),
                        );
                    }
                    if init.u1.eval(1.0).abs() > 1e-8 {
                        push(
                            "initial.u1",
                            format!(
                                "compatibility u1(1) = 0 violated: u1(1) = {}",
                                init.u1.eval(1.0)
                            ),
                        );
                    }
                }
                ModelConfig::LoopB(p) => {
                    if init.u1.eval(0.0).abs() > 1e-8 {
                        push(
                            "initial.u1",
                            format!(
                                "compatibility u1(0) = 0 violated: u1(0) = {}",
                                init.u1.eval(0.0)
                            ),
                        );
                    }
                    let want = p.boundary_gain * init.u1.eval(1.0);
                    if (init.u2.eval(0.0) - want).abs() > 1e-8 {
                        push(
                            "initial.u2",
                            format!(
                                "trace compatibility u2(0) = k u1(1) violated: u2(0) = {}, k u1(1) = {want}",
                                init.u2.eval(0.0)
                            ),
                        );
                    }
                    if self
                        .disturbance
                        .as_ref()
                        .map(|d| !d.is_zero())
                        .unwrap_or(false)
                    {
                        push(
                            "disturbance",
                            "loop B carries no boundary disturbance input".into(),
                        );
                    }
                }
                ModelConfig::Backstepping(p) => {
                    if init.u1.eval(0.0).abs() > 1e-8 {
                        push(
                            "initial.u1",
                            "compatibility u1(0) = 0 violated for the transport pair".into(),
                        );
                    }
                    let want = p.gain * init.u1.eval(1.0);
                    if (init.u2.eval(0.0) - want).abs() > 1e-8 {
                        push(
                            "initial.u2",
                            format!(
                                "trace compatibility u2(0) = k u1(1) violated: u2(0) = {}, k u1(1) = {want}",
                                init.u2.eval(0.0)
                            ),
                        );
                    }
                }
            }
        }
        out
    }
}

pub(crate) fn sweep_axis_valid(model: &ModelConfig, axis: &str) -> bool {
    let fields: &[&str] = match model {
        ModelConfig::Chemical(_) => &[
            "porosity",
            "velocity",
            "diffusion",
            "sorption_rate",
            "desorption_rate",
            "length",
            "source_conc",
        ],
        ModelConfig::LoopA(_) => &["k", "r", "a_tilde", "b_tilde"],
        ModelConfig::WaveKv(_) => &["kv_sigma", "wave_speed", "viscous_mu"],
        ModelConfig::LoopB(_) => &[
            "diffusion",
            "transport_speed",
            "robin_q",
            "reaction",
            "boundary_gain",
        ],
        ModelConfig::Backstepping(_) => &["transport_v", "diffusion", "transport_c", "gain"],
    };
    fields.contains(&axis)
}
