//! Scenario files.
//!
//! A scenario is a TOML document with a `schema_version` key and the sections
//! `subsystems`, `controller`, `switching`, `trajectory` and `sim`. Units are
//! SI, angles are radians and mode numbers start at 1. Every validation error
//! carries the dotted path of the offending field.

use std::fmt;

use quadswitch_core::controller::{AdaptiveGains, ModeConfig};
use quadswitch_core::disturbance::{DisturbanceSpec, DisturbanceTerm};
use quadswitch_core::dynamics::{PlantState, SubsystemParams, STANDARD_GRAVITY};
use quadswitch_core::switching::{generate_schedule, AdtParams, SchedulePattern, SwitchEvent, SwitchSchedule};
use quadswitch_core::trajectory::{ChannelTrajectory, DesiredTrajectory};
use quadswitch_core::{sim::Scenario, Matrix4, Matrix8, Vector2, Vector4};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

const REFERENCE_PRESET: &str = include_str!("../presets/paper_s5.toml");

/// Bundled scenario files by name.
pub fn preset(name: &str) -> Option<&'static str> {
    match name {
        "paper_s5" => Some(REFERENCE_PRESET),
        _ => None,
    }
}

pub const PRESETS: &[&str] = &["paper_s5"];

/// A rejected field, with its dotted path.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl SchemaError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for SchemaError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    pub subsystems: Vec<SubsystemConfig>,
    pub controller: Vec<ControllerConfig>,
    pub switching: SwitchingConfig,
    pub trajectory: TrajectoryConfig,
    pub sim: SimConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsystemConfig {
    pub mass: f64,
    pub ixx: f64,
    pub iyy: f64,
    pub izz: f64,
    pub arm_length: f64,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub disturbance: Vec<DisturbanceConfig>,
}

fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Thrust,
    Roll,
    Pitch,
    Yaw,
}

impl Channel {
    fn index(self) -> usize {
        match self {
            Channel::Thrust => 0,
            Channel::Roll => 1,
            Channel::Pitch => 2,
            Channel::Yaw => 3,
        }
    }
}

/// One disturbance term on one actuated channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DisturbanceConfig {
    Sinusoid {
        channel: Channel,
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    Pulse {
        channel: Channel,
        amplitude: f64,
        start: f64,
        width: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        period: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        count: Option<u32>,
    },
}

/// A square matrix given as a scalar (times identity), a diagonal, or in full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixConfig {
    Scalar(f64),
    Diagonal(Vec<f64>),
    Full(Vec<Vec<f64>>),
}

impl MatrixConfig {
    fn build<const N: usize>(&self, path: &str) -> Result<nalgebra::SMatrix<f64, N, N>, SchemaError> {
        let m = match self {
            MatrixConfig::Scalar(s) => nalgebra::SMatrix::<f64, N, N>::identity() * *s,
            MatrixConfig::Diagonal(d) => {
                if d.len() != N {
                    return Err(SchemaError::new(
                        path,
                        format!("expected {N} diagonal entries, found {}", d.len()),
                    ));
                }
                nalgebra::SMatrix::<f64, N, N>::from_diagonal(&nalgebra::SVector::<f64, N>::from_column_slice(d))
            }
            MatrixConfig::Full(rows) => {
                if rows.len() != N || rows.iter().any(|r| r.len() != N) {
                    return Err(SchemaError::new(path, format!("expected a {N}x{N} matrix")));
                }
                nalgebra::SMatrix::<f64, N, N>::from_fn(|i, j| rows[i][j])
            }
        };
        if m.iter().any(|v| !v.is_finite()) {
            return Err(SchemaError::new(path, "entries must be finite"));
        }
        Ok(m)
    }
}

/// A 4-vector given as one repeated scalar or four entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Vector4Config {
    Scalar(f64),
    Entries(Vec<f64>),
}

impl Vector4Config {
    fn build(&self, path: &str) -> Result<Vector4, SchemaError> {
        match self {
            Vector4Config::Scalar(s) => Ok(Vector4::repeat(*s)),
            Vector4Config::Entries(v) => fixed::<4>(v, path).map(Vector4::from),
        }
    }
}

fn fixed<const N: usize>(v: &[f64], path: &str) -> Result<[f64; N], SchemaError> {
    v.try_into()
        .map_err(|_| SchemaError::new(path, format!("expected {N} entries, found {}", v.len())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    #[serde(rename = "K1")]
    pub k1: MatrixConfig,
    #[serde(rename = "K2")]
    pub k2: MatrixConfig,
    /// 8x8 weight of the Lyapunov equation.
    #[serde(rename = "Q")]
    pub q: MatrixConfig,
    /// Diagonal of the input gain.
    #[serde(rename = "D")]
    pub d: Vec<f64>,
    pub alpha: Vector4Config,
    pub eps: f64,
    pub eps_bar: f64,
    pub initial_theta: Vec<f64>,
    pub initial_zeta: f64,
    pub initial_gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventConfig {
    pub t: f64,
    pub sigma: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PatternConfig {
    Periodic {
        period: f64,
        modes: Vec<usize>,
    },
    BurstThenSlow {
        burst_start: f64,
        burst: usize,
        burst_span: f64,
        gap: f64,
        modes: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchingConfig {
    pub vartheta: f64,
    #[serde(rename = "N0", default = "default_n0")]
    pub n0: f64,
    #[serde(default = "default_kappa_fraction")]
    pub kappa_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<EventConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<PatternConfig>,
}

fn default_n0() -> f64 {
    3.0
}

fn default_kappa_fraction() -> f64 {
    0.9
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum TrajectoryConfig {
    /// Hold `q = (z, roll, pitch, yaw)`.
    Constant { q: Vec<f64> },
    /// `offset + amplitude sin(frequency t + phase)` per channel; omitted channels are zero.
    Sinusoidal {
        #[serde(default)]
        z: ChannelConfig,
        #[serde(default)]
        roll: ChannelConfig,
        #[serde(default)]
        pitch: ChannelConfig,
        #[serde(default)]
        yaw: ChannelConfig,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub q: Vec<f64>,
    pub q_u: Vec<f64>,
    #[serde(default = "zeros4")]
    pub q_dot: Vec<f64>,
    #[serde(default = "zeros2")]
    pub q_u_dot: Vec<f64>,
}

fn zeros4() -> Vec<f64> {
    vec![0.0; 4]
}

fn zeros2() -> Vec<f64> {
    vec![0.0; 2]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub step: f64,
    pub horizon: f64,
    pub varpi: f64,
    pub initial: InitialConfig,
}

/// A validated scenario plus the ADT settings it was declared with.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub kappa_fraction: f64,
}

impl ScenarioSpec {
    pub fn adt(&self) -> AdtParams {
        self.scenario
            .schedule
            .adt
            .expect("config schedules always carry ADT parameters")
    }
}

fn positive(path: &str, v: f64) -> Result<(), SchemaError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(SchemaError::new(path, "must be finite and positive"))
    }
}

fn path_of(err: &serde_path_to_error::Error<toml::de::Error>) -> String {
    let mut path = err.path().to_string();
    let message = err.inner().message();
    if let Some(rest) = message.strip_prefix("missing field `") {
        let field = rest.trim_end_matches('`');
        path = if path == "." {
            field.to_string()
        } else {
            format!("{path}.{field}")
        };
    }
    path
}

impl ConfigFile {
    pub fn from_toml_str(text: &str) -> Result<Self, SchemaError> {
        let de = toml::Deserializer::parse(text).map_err(|e| SchemaError::new(".", e.message().to_string()))?;
        let cfg: ConfigFile = serde_path_to_error::deserialize(de)
            .map_err(|e| SchemaError::new(path_of(&e), e.inner().message().to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(SchemaError::new(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", cfg.schema_version),
            ));
        }
        Ok(cfg)
    }

    pub fn preset(name: &str) -> Result<Self, SchemaError> {
        let text = preset(name).ok_or_else(|| SchemaError::new("preset", format!("unknown preset `{name}`")))?;
        Self::from_toml_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config types always serialise")
    }

    /// Replaces the step and/or horizon; switches at or after a shortened horizon are dropped.
    pub fn with_overrides(mut self, step: Option<f64>, horizon: Option<f64>) -> Self {
        if let Some(h) = step {
            self.sim.step = h;
        }
        if let Some(t) = horizon {
            self.sim.horizon = t;
            if let Some(events) = &mut self.switching.schedule {
                let first = events.first().cloned();
                events.retain(|e| e.t < t);
                if events.is_empty() {
                    events.extend(first);
                }
            }
        }
        self
    }

    fn subsystem(&self, i: usize) -> Result<SubsystemParams, SchemaError> {
        let s = &self.subsystems[i];
        let at = |field: &str| format!("subsystems[{i}].{field}");
        for (field, v) in [
            ("mass", s.mass),
            ("ixx", s.ixx),
            ("iyy", s.iyy),
            ("izz", s.izz),
            ("arm_length", s.arm_length),
        ] {
            positive(&at(field), v)?;
        }
        if !(s.gravity.is_finite() && s.gravity >= 0.0) {
            return Err(SchemaError::new(at("gravity"), "must be finite and non-negative"));
        }
        let mut spec = DisturbanceSpec::none();
        for (k, d) in s.disturbance.iter().enumerate() {
            let (channel, term) = match *d {
                DisturbanceConfig::Sinusoid {
                    channel,
                    amplitude,
                    frequency,
                    phase,
                } => (
                    channel,
                    DisturbanceTerm::Sinusoid {
                        amplitude,
                        frequency,
                        phase,
                    },
                ),
                DisturbanceConfig::Pulse {
                    channel,
                    amplitude,
                    start,
                    width,
                    period,
                    count,
                } => (
                    channel,
                    DisturbanceTerm::PulseTrain {
                        amplitude,
                        start,
                        width,
                        period,
                        count,
                    },
                ),
            };
            let single = DisturbanceSpec::none().with_term(0, term);
            single
                .validate()
                .map_err(|e| SchemaError::new(format!("subsystems[{i}].disturbance[{k}]"), e.to_string()))?;
            spec = spec.with_term(channel.index(), term);
        }
        let mut params = SubsystemParams::new(s.mass, s.ixx, s.iyy, s.izz, s.arm_length)
            .map_err(|e| SchemaError::new(format!("subsystems[{i}]"), e.to_string()))?
            .with_disturbance(spec);
        params.gravity = s.gravity;
        Ok(params)
    }

    fn mode(&self, i: usize) -> Result<(ModeConfig, AdaptiveGains), SchemaError> {
        let c = &self.controller[i];
        let at = |field: &str| format!("controller[{i}].{field}");
        let k1: Matrix4 = c.k1.build(&at("K1"))?;
        let k2: Matrix4 = c.k2.build(&at("K2"))?;
        let q: Matrix8 = c.q.build(&at("Q"))?;
        let d_gain = Vector4::from(fixed::<4>(&c.d, &at("D"))?);
        if d_gain.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(SchemaError::new(at("D"), "entries must be finite and positive"));
        }
        let alpha = c.alpha.build(&at("alpha"))?;
        if alpha.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(SchemaError::new(at("alpha"), "entries must be finite and positive"));
        }
        positive(&at("eps"), c.eps)?;
        positive(&at("eps_bar"), c.eps_bar)?;
        let cfg = ModeConfig {
            k1,
            k2,
            q,
            d_gain,
            alpha,
            eps: c.eps,
            eps_bar: c.eps_bar,
        };
        let theta = Vector4::from(fixed::<4>(&c.initial_theta, &at("initial_theta"))?);
        let gains = AdaptiveGains::new(theta, c.initial_zeta, c.initial_gamma);
        gains
            .check_initial(&cfg)
            .map_err(|e| SchemaError::new(format!("controller[{i}]"), e.to_string()))?;
        Ok((cfg, gains))
    }

    fn mode_index(&self, sigma: usize, path: String) -> Result<usize, SchemaError> {
        if sigma == 0 || sigma > self.controller.len() {
            return Err(SchemaError::new(
                path,
                format!("mode {sigma} outside 1..={}", self.controller.len()),
            ));
        }
        Ok(sigma - 1)
    }

    fn pattern_modes(&self, modes: &[usize], path: &str) -> Result<Vec<usize>, SchemaError> {
        modes
            .iter()
            .enumerate()
            .map(|(k, &m)| self.mode_index(m, format!("{path}.modes[{k}]")))
            .collect()
    }

    /// Builds the schedule. Explicit schedules are not certified here; generated
    /// ones are, since generation fails on an uncertifiable pattern.
    fn schedule(&self) -> Result<Result<SwitchSchedule, quadswitch_core::Error>, SchemaError> {
        let sw = &self.switching;
        positive("switching.vartheta", sw.vartheta)?;
        positive("switching.N0", sw.n0)?;
        if !(sw.kappa_fraction > 0.0 && sw.kappa_fraction < 1.0) {
            return Err(SchemaError::new("switching.kappa_fraction", "must lie in (0, 1)"));
        }
        let horizon = self.sim.horizon;
        let adt = AdtParams {
            vartheta: sw.vartheta,
            chatter_bound: sw.n0,
        };
        match (&sw.schedule, &sw.pattern) {
            (Some(_), Some(_)) => Err(SchemaError::new(
                "switching",
                "give either `schedule` or `pattern`, not both",
            )),
            (None, None) => Err(SchemaError::new("switching", "missing field `schedule` or `pattern`")),
            (Some(list), None) => {
                // An empty list means no switching: mode 1 throughout.
                if list.is_empty() {
                    return SwitchSchedule::new(0.0, horizon, vec![SwitchEvent { time: 0.0, mode: 0 }], Some(adt))
                        .map(Ok)
                        .map_err(|e| SchemaError::new("switching.schedule", e.to_string()));
                }
                let events = list
                    .iter()
                    .enumerate()
                    .map(|(k, e)| {
                        Ok(SwitchEvent {
                            time: e.t,
                            mode: self.mode_index(e.sigma, format!("switching.schedule[{k}].sigma"))?,
                        })
                    })
                    .collect::<Result<Vec<_>, SchemaError>>()?;
                SwitchSchedule::new(0.0, horizon, events, Some(adt))
                    .map(Ok)
                    .map_err(|e| SchemaError::new("switching.schedule", e.to_string()))
            }
            (None, Some(p)) => {
                let pattern = match p {
                    PatternConfig::Periodic { period, modes } => SchedulePattern::Periodic {
                        period: *period,
                        modes: self.pattern_modes(modes, "switching.pattern")?,
                    },
                    PatternConfig::BurstThenSlow {
                        burst_start,
                        burst,
                        burst_span,
                        gap,
                        modes,
                    } => SchedulePattern::BurstThenSlow {
                        burst_start: *burst_start,
                        burst: *burst,
                        burst_span: *burst_span,
                        gap: *gap,
                        modes: self.pattern_modes(modes, "switching.pattern")?,
                    },
                };
                match generate_schedule(&pattern, sw.vartheta, sw.n0, horizon) {
                    Ok(s) => Ok(Ok(s)),
                    Err(e @ quadswitch_core::Error::AdtViolation(_)) => Ok(Err(e)),
                    Err(e) => Err(SchemaError::new("switching.pattern", e.to_string())),
                }
            }
        }
    }

    fn trajectory(&self) -> Result<DesiredTrajectory, SchemaError> {
        let traj = match &self.trajectory {
            TrajectoryConfig::Constant { q } => {
                DesiredTrajectory::constant(Vector4::from(fixed::<4>(q, "trajectory.q")?))
            }
            TrajectoryConfig::Sinusoidal { z, roll, pitch, yaw } => {
                let ch = |c: &ChannelConfig| ChannelTrajectory::sinusoid(c.offset, c.amplitude, c.frequency, c.phase);
                DesiredTrajectory {
                    channels: [ch(z), ch(roll), ch(pitch), ch(yaw)],
                }
            }
        };
        traj.validate()
            .map_err(|e| SchemaError::new("trajectory", e.to_string()))?;
        Ok(traj)
    }

    fn initial_state(&self) -> Result<PlantState, SchemaError> {
        let init = &self.sim.initial;
        let state = PlantState {
            q: Vector4::from(fixed::<4>(&init.q, "sim.initial.q")?),
            q_u: Vector2::from(fixed::<2>(&init.q_u, "sim.initial.q_u")?),
            q_dot: Vector4::from(fixed::<4>(&init.q_dot, "sim.initial.q_dot")?),
            q_u_dot: Vector2::from(fixed::<2>(&init.q_u_dot, "sim.initial.q_u_dot")?),
            ..PlantState::default()
        };
        state
            .check()
            .map_err(|e| SchemaError::new("sim.initial", e.to_string()))?;
        Ok(state)
    }

    /// Validates every section and assembles the scenario.
    ///
    /// The outer error is a schema problem; the inner one is an ADT violation
    /// found while generating a pattern schedule.
    pub fn scenario(&self) -> Result<Result<ScenarioSpec, quadswitch_core::Error>, SchemaError> {
        if self.subsystems.is_empty() {
            return Err(SchemaError::new("subsystems", "at least one subsystem is required"));
        }
        if self.controller.len() != self.subsystems.len() {
            return Err(SchemaError::new(
                "controller",
                format!(
                    "{} controller entries for {} subsystems",
                    self.controller.len(),
                    self.subsystems.len()
                ),
            ));
        }
        positive("sim.step", self.sim.step)?;
        positive("sim.horizon", self.sim.horizon)?;
        positive("sim.varpi", self.sim.varpi)?;
        let steps = (self.sim.horizon / self.sim.step).round();
        if (steps * self.sim.step - self.sim.horizon).abs() > 1e-9 * self.sim.horizon {
            return Err(SchemaError::new("sim.horizon", "must be a whole number of steps"));
        }
        let subsystems = (0..self.subsystems.len())
            .map(|i| self.subsystem(i))
            .collect::<Result<Vec<_>, _>>()?;
        let (modes, initial_gains): (Vec<_>, Vec<_>) = (0..self.controller.len())
            .map(|i| self.mode(i))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .unzip();
        let trajectory = self.trajectory()?;
        let initial_state = self.initial_state()?;
        let schedule = match self.schedule()? {
            Ok(s) => s,
            Err(e) => return Ok(Err(e)),
        };
        Ok(Ok(ScenarioSpec {
            scenario: Scenario {
                subsystems,
                modes,
                initial_gains,
                varpi: self.sim.varpi,
                schedule,
                trajectory,
                initial_state,
                step: self.sim.step,
                horizon: self.sim.horizon,
            },
            kappa_fraction: self.switching.kappa_fraction,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_parses_and_builds() {
        let cfg = ConfigFile::preset("paper_s5").unwrap();
        let spec = cfg.scenario().unwrap().unwrap();
        let sc = &spec.scenario;
        assert_eq!(sc.modes.len(), 3);
        assert_eq!(sc.schedule.switch_count(), 7);
        assert_eq!(sc.subsystems[1].ixx, 0.011);
        assert_eq!(sc.modes[2].k1, Matrix4::identity() * 200.0);
        assert_eq!(sc.modes[0].q, Matrix8::identity() * 2.0);
        assert_eq!(sc.initial_gains[0].theta_hat, Vector4::new(1.2, 1.3, 1.4, 1.5));
        assert_eq!(
            sc.subsystems[0].disturbance.eval(std::f64::consts::PI)[0],
            0.05 * (0.5 * std::f64::consts::PI).sin()
        );
        assert_eq!(spec.kappa_fraction, 0.9);
    }

    #[test]
    fn preset_matches_core_reference() {
        let spec = ConfigFile::preset("paper_s5").unwrap().scenario().unwrap().unwrap();
        assert_eq!(spec.scenario, quadswitch_core::reference::scenario());
        assert_eq!(spec.kappa_fraction, quadswitch_core::reference::KAPPA_FRACTION);
    }

    #[test]
    fn round_trip_is_exact() {
        let cfg = ConfigFile::preset("paper_s5").unwrap();
        let again = ConfigFile::from_toml_str(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.scenario().unwrap().unwrap(), again.scenario().unwrap().unwrap());
    }

    #[test]
    fn missing_section_names_its_path() {
        let text = REFERENCE_PRESET.replace("[[controller]]", "[[ctrl_removed]]");
        let err = ConfigFile::from_toml_str(&text).unwrap_err();
        assert!(err.path.contains("ctrl_removed") || err.path == "controller", "{err}");
        let stripped: String = REFERENCE_PRESET
            .split("\n\n")
            .filter(|block| !block.trim_start().starts_with("[[controller]]"))
            .collect::<Vec<_>>()
            .join("\n\n");
        let err = ConfigFile::from_toml_str(&stripped).unwrap_err();
        assert_eq!(err.path, "controller");
    }

    #[test]
    fn nested_errors_carry_index() {
        let text = REFERENCE_PRESET.replacen("mass = 1.6", "mass = -1.6", 1);
        let err = ConfigFile::from_toml_str(&text).unwrap().scenario().unwrap_err();
        assert_eq!(err.path, "subsystems[1].mass");
        let text = REFERENCE_PRESET.replacen("{ t = 4.0, sigma = 2 }", "{ t = 4.0, sigma = 7 }", 1);
        let err = ConfigFile::from_toml_str(&text).unwrap().scenario().unwrap_err();
        assert_eq!(err.path, "switching.schedule[1].sigma");
        let text = REFERENCE_PRESET.replacen("D = [2.0, 1e-4, 1e-4, 1e-4]", "D = [2.0, 1e-4]", 1);
        let err = ConfigFile::from_toml_str(&text).unwrap().scenario().unwrap_err();
        assert_eq!(err.path, "controller[0].D");
    }

    #[test]
    fn type_errors_carry_path() {
        let text = REFERENCE_PRESET.replacen("varpi = 0.1", "varpi = \"wide\"", 1);
        let err = ConfigFile::from_toml_str(&text).unwrap_err();
        assert_eq!(err.path, "sim.varpi");
    }

    #[test]
    fn overrides_trim_schedule() {
        let cfg = ConfigFile::preset("paper_s5")
            .unwrap()
            .with_overrides(Some(5e-4), Some(12.0));
        let spec = cfg.scenario().unwrap().unwrap();
        assert_eq!(spec.scenario.step, 5e-4);
        assert_eq!(spec.scenario.schedule.switch_count(), 3);
    }

    #[test]
    fn matrix_forms() {
        let full = MatrixConfig::Full(
            (0..4)
                .map(|i| (0..4).map(|j| if i == j { 3.0 } else { 0.0 }).collect())
                .collect(),
        );
        let m: Matrix4 = full.build("K1").unwrap();
        assert_eq!(m, Matrix4::identity() * 3.0);
        let diag: Matrix4 = MatrixConfig::Diagonal(vec![1.0, 2.0, 3.0, 4.0]).build("K1").unwrap();
        assert_eq!(diag[(3, 3)], 4.0);
        assert!(MatrixConfig::Diagonal(vec![1.0]).build::<4>("K1").is_err());
    }
}
