//! Closed-loop scenario engine.
//!
//! Every tick: locate the VTP, solve the three axis QPs, log, then advance
//! the plant with the first jerk over `dt`. The plant is the same exact
//! triple integrator the controller predicts with, so in the absence of a
//! disturbance the next state equals the first predicted state.

use std::fmt;
use std::sync::Arc;

use crate::dynamics::{integrate_vehicle, thrust_magnitude, GravityModel, Vec3, VehicleState};
use crate::feasibility::ThrustLimits;
use crate::guidance::{Point2, ReferencePath, VtpQuery, VtpResult};
use crate::mpc::{step_vehicle, ControllerConfig, HorizonSolution};
use crate::qpsolver::QpStatus;
use crate::{Error, Result};

/// Consecutive ticks under `stop_tolerance` needed for an early stop.
pub const SETTLE_TICKS: usize = 25;

/// Additive acceleration disturbance acting on the plant.
#[derive(Clone, Default)]
pub enum Disturbance {
    #[default]
    None,
    Constant(Vec3),
    /// Evaluated once per tick at the tick's start time.
    Custom(Arc<dyn Fn(f64) -> Vec3 + Send + Sync>),
}

impl Disturbance {
    pub fn at(&self, t: f64) -> Vec3 {
        match self {
            Disturbance::None => Vec3::zeros(),
            Disturbance::Constant(v) => *v,
            Disturbance::Custom(f) => f(t),
        }
    }
}

impl fmt::Debug for Disturbance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Disturbance::None => f.write_str("None"),
            Disturbance::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            Disturbance::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub path: ReferencePath,
    pub initial_state: VehicleState,
    pub lookahead: f64,
    pub controller: ControllerConfig,
    pub thrust: ThrustLimits,
    pub gravity: GravityModel,
    pub duration: f64,
    pub stop_tolerance: Option<f64>,
    pub disturbance: Disturbance,
}

impl Scenario {
    pub fn dt(&self) -> f64 {
        self.controller.horizon().dt()
    }

    /// Number of ticks for the configured duration.
    pub fn tick_count(&self) -> usize {
        ((self.duration / self.dt()) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::InvalidParameter {
                name: "duration",
                reason: format!("must be positive, got {}", self.duration),
            });
        }
        if !(self.lookahead.is_finite() && self.lookahead > 0.0) {
            return Err(Error::InvalidParameter {
                name: "lookahead",
                reason: format!("must be positive, got {}", self.lookahead),
            });
        }
        if !self.initial_state.is_finite() || !self.path.altitude.is_finite() {
            return Err(Error::NonFinite("initial state or altitude"));
        }
        if let Some(tol) = self.stop_tolerance {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "stop_tolerance",
                    reason: format!("must be positive, got {tol}"),
                });
            }
        }
        self.controller.validate()?;

        // The acceleration boxes must sit inside the thrust-safe region.
        let g = self.gravity.g();
        let l = &self.controller.limits;
        let h1 = l[0].acc_min.abs().max(l[0].acc_max.abs());
        let h2 = l[1].acc_min.abs().max(l[1].acc_max.abs());
        let top = l[2].acc_max + g;
        let f_max = self.thrust.f_max();
        if h1 * h1 + h2 * h2 + top * top > f_max * f_max * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter {
                name: "acc_bounds",
                reason: "acceleration box admits thrust above f_max".into(),
            });
        }
        if l[2].acc_min + g < self.thrust.f_min() * (1.0 - 1e-12) {
            return Err(Error::InvalidParameter {
                name: "acc_bounds",
                reason: "vertical acceleration floor admits thrust below f_min".into(),
            });
        }
        Ok(())
    }
}

/// One control tick: the state at `time`, the VTP chosen from it, and the
/// jerk applied over `[time, time + dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub time: f64,
    pub state: VehicleState,
    pub vtp: VtpResult,
    pub jerk: Vec3,
    /// Thrust implied by the state's (commanded) acceleration.
    pub thrust: f64,
    pub cross_track: f64,
    pub costs: [f64; 3],
    pub statuses: [QpStatus; 3],
    /// Summed QP wall time of the three axes, seconds.
    pub solve_time: f64,
    pub plans: [HorizonSolution; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    /// Cross-track stayed below the stop tolerance for [`SETTLE_TICKS`].
    Settled,
    SolverFailure(String),
    GuidanceFailure(String),
}

impl Termination {
    pub fn is_failure(&self) -> bool {
        matches!(self, Termination::SolverFailure(_) | Termination::GuidanceFailure(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub dt: f64,
    pub records: Vec<TickRecord>,
    pub termination: Termination,
    /// State after the last applied jerk.
    pub final_state: VehicleState,
}

impl TrajectoryLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Shortest planar distance from `pos` to the path.
pub fn cross_track_error(path: &ReferencePath, pos: &Point2) -> f64 {
    path.distance(pos)
}

fn planar(state: &VehicleState) -> Point2 {
    Point2::new(state.axes[0].pos, state.axes[1].pos)
}

/// Runs `scenario` to completion, early settle, or the first failure.
///
/// Invalid scenarios are rejected up front; failures during the run end it
/// early and are reported in [`TrajectoryLog::termination`] alongside every
/// tick completed so far.
pub fn run(scenario: &Scenario) -> Result<TrajectoryLog> {
    scenario.validate()?;
    let dt = scenario.dt();
    let ticks = scenario.tick_count();
    let mut state = scenario.initial_state;
    let t0 = state.time;
    let mut hint = scenario.path.closest_param(&planar(&state));
    let mut records = Vec::with_capacity(ticks);
    let mut settled = 0usize;
    let mut termination = Termination::Completed;

    for k in 0..ticks {
        let time = t0 + k as f64 * dt;
        state.time = time;
        let pos = planar(&state);
        let vtp = match VtpQuery::new(pos, scenario.lookahead, hint).and_then(|q| scenario.path.vtp(&q)) {
            Ok(v) => v,
            Err(e) => {
                termination = Termination::GuidanceFailure(format!("t = {time:.3} s: {e}"));
                break;
            }
        };
        hint = vtp.path_param;

        let step = match step_vehicle(&scenario.controller, &state, &vtp, scenario.path.altitude) {
            Ok(s) => s,
            Err(e) => {
                termination = Termination::SolverFailure(format!("t = {time:.3} s: {e}"));
                break;
            }
        };

        let cross_track = cross_track_error(&scenario.path, &pos);
        let plans = step.solutions;
        records.push(TickRecord {
            time,
            state,
            vtp,
            jerk: step.jerk,
            thrust: thrust_magnitude(&state.acceleration(), &scenario.gravity),
            cross_track,
            costs: std::array::from_fn(|i| plans[i].cost),
            statuses: std::array::from_fn(|i| plans[i].status),
            solve_time: plans.iter().map(|p| p.solve_time).sum(),
            plans,
        });

        state = integrate_vehicle(&state, &step.jerk, &scenario.disturbance.at(time), dt)?;
        state.time = t0 + (k + 1) as f64 * dt;

        if let Some(tol) = scenario.stop_tolerance {
            settled = if cross_track < tol { settled + 1 } else { 0 };
            if settled >= SETTLE_TICKS {
                termination = Termination::Settled;
                break;
            }
        }
    }

    Ok(TrajectoryLog {
        dt,
        records,
        termination,
        final_state: state,
    })
}
