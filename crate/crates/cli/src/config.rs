//! Scenario files.
//!
//! A scenario file is TOML with five sections. Every key is checked: an
//! unknown or misspelt key is an error that names the key and its line.
//!
//! ```toml
//! [path]
//! kind = "circle"          # "line" | "circle" | "sinusoid"
//! center = [0.0, 0.0]
//! radius = 50.0
//! sense = "ccw"            # "ccw" | "cw"
//! altitude = 10.0
//!
//! [vehicle]
//! start = [45.0, 0.0, 10.0]
//! f_min = 1.0              # m/s², mass-normalised thrust
//! f_max = 20.0
//! gravity = 9.81           # optional
//!
//! [controller]
//! lookahead = 10.0
//! dt = 0.08                # optional
//! horizon = 5              # optional
//! cost_mode = "track_target"   # optional: "track_target" | "min_jerk_norm"
//! jerk_max = 50.0          # optional
//! terminal_vel = 0.0       # optional terminal equality
//! terminal_acc = 0.0       # optional terminal equality
//!
//! [limits]
//! vel_fraction = 0.85      # horizontal thrust share reserved for the acceleration box
//! vel_max = 5.0
//! pos_max = 1e6            # optional
//!
//! [sim]
//! duration = 60.0
//! stop_tolerance = 0.01    # optional early stop on small cross-track error
//! ```

use std::path::Path;

use quadmpc::dynamics::{GravityModel, Vec3, VehicleState, STANDARD_GRAVITY};
use quadmpc::feasibility::{derive_bounds, ThrustLimits};
use quadmpc::guidance::{CirclePath, LinePath, ParametricCurve, Point2, ReferencePath, Sense};
use quadmpc::mpc::{ControllerConfig, CostMode, DEFAULT_POS_MAX};
use quadmpc::predictor::{HorizonConfig, DEFAULT_DT, DEFAULT_STEPS};
use quadmpc::sim::{Disturbance, Scenario};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Parse(#[from] toml::de::Error),

    #[error("invalid scenario: {0}")]
    Invalid(#[from] quadmpc::Error),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub path: PathSection,
    pub vehicle: VehicleSection,
    pub controller: ControllerSection,
    pub limits: LimitsSection,
    pub sim: SimSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SenseName {
    Ccw,
    Cw,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PathSection {
    Line {
        point: [f64; 2],
        direction: [f64; 2],
        altitude: f64,
    },
    Circle {
        center: [f64; 2],
        radius: f64,
        sense: SenseName,
        altitude: f64,
    },
    /// `y = origin.y + amplitude · sin(2π (x − origin.x) / wavelength)` for
    /// `x − origin.x ∈ [0, length]`, sampled every `step` metres.
    Sinusoid {
        origin: [f64; 2],
        amplitude: f64,
        wavelength: f64,
        length: f64,
        step: f64,
        altitude: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSection {
    pub start: [f64; 3],
    pub f_min: f64,
    pub f_max: f64,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostModeName {
    #[default]
    TrackTarget,
    MinJerkNorm,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub lookahead: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub cost_mode: CostModeName,
    pub jerk_max: Option<f64>,
    pub terminal_vel: Option<f64>,
    pub terminal_acc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsSection {
    pub vel_fraction: f64,
    pub vel_max: f64,
    #[serde(default = "default_pos_max")]
    pub pos_max: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub duration: f64,
    pub stop_tolerance: Option<f64>,
}

fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_horizon() -> usize {
    DEFAULT_STEPS
}

fn default_pos_max() -> f64 {
    DEFAULT_POS_MAX
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn reference_path(&self) -> Result<ReferencePath, ConfigError> {
        let path = match self.path {
            PathSection::Line {
                point,
                direction,
                altitude,
            } => ReferencePath::line(LinePath::new(point.into(), direction.into())?, altitude),
            PathSection::Circle {
                center,
                radius,
                sense,
                altitude,
            } => {
                let sense = match sense {
                    SenseName::Ccw => Sense::Ccw,
                    SenseName::Cw => Sense::Cw,
                };
                ReferencePath::circle(CirclePath::new(center.into(), radius, sense)?, altitude)
            }
            PathSection::Sinusoid {
                origin,
                amplitude,
                wavelength,
                length,
                step,
                altitude,
            } => ReferencePath::parametric(
                ParametricCurve::sinusoid(Point2::from(origin), amplitude, wavelength, length, step)?,
                altitude,
            ),
        };
        Ok(path)
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        let thrust = ThrustLimits::new(self.vehicle.f_min, self.vehicle.f_max)?;
        let gravity = GravityModel::new(self.vehicle.gravity)?;
        let bounds = derive_bounds(&thrust, &gravity, self.limits.vel_fraction)?;
        let c = &self.controller;
        let horizon = HorizonConfig::new(c.horizon, c.dt)?;
        let cost_mode = match c.cost_mode {
            CostModeName::TrackTarget => CostMode::TrackTarget,
            CostModeName::MinJerkNorm => CostMode::MinJerkNorm,
        };
        let controller = ControllerConfig::from_bounds(horizon, &bounds, self.limits.vel_max)?
            .with_pos_max(self.limits.pos_max)?
            .with_jerk_max(c.jerk_max)?
            .with_terminal(c.terminal_vel, c.terminal_acc)?
            .with_cost_mode(cost_mode)?;
        let scenario = Scenario {
            path: self.reference_path()?,
            initial_state: VehicleState::at_rest(Vec3::from(self.vehicle.start)),
            lookahead: c.lookahead,
            controller,
            thrust,
            gravity,
            duration: self.sim.duration,
            stop_tolerance: self.sim.stop_tolerance,
            disturbance: Disturbance::None,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}
