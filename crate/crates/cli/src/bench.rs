//! Controller timing on the bundled circle scenario.
//!
//! Two measurements are reported because "an iteration" can mean either a
//! full closed-loop tick (guidance, three QP solves, plant update) or a
//! repeated solve of one fixed problem instance.

use std::time::{Duration, Instant};

use quadmpc::dynamics::integrate_vehicle;
use quadmpc::guidance::{Point2, VtpQuery};
use quadmpc::mpc::step_vehicle;
use quadmpc::sim::Scenario;

use crate::config::{ConfigError, ScenarioFile};

pub const CIRCLE_CONFIG: &str = include_str!("../configs/circle_r50.cfg");

/// Step times of the sweep, seconds.
pub const SWEEP_DTS: [f64; 7] = [0.08, 0.1, 0.2, 0.4, 0.8, 1.2, 2.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingStats {
    pub samples: usize,
    pub mean: Duration,
    pub median: Duration,
    pub p99: Duration,
    pub max: Duration,
}

impl TimingStats {
    /// `None` for an empty sample.
    pub fn from_samples(samples: &[Duration]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut sorted = samples.to_vec();
        sorted.sort_unstable();
        let n = sorted.len();
        let rank = |q: f64| sorted[((q * n as f64).ceil() as usize).clamp(1, n) - 1];
        Some(Self {
            samples: n,
            mean: sorted.iter().sum::<Duration>() / n as u32,
            median: rank(0.5),
            p99: rank(0.99),
            max: sorted[n - 1],
        })
    }
}

/// The bundled circle scenario, from rest, at step time `dt`.
pub fn circle_scenario(dt: f64) -> Result<Scenario, ConfigError> {
    let mut file = ScenarioFile::parse(CIRCLE_CONFIG)?;
    file.controller.dt = dt;
    file.scenario()
}

/// Wall time of `n` consecutive closed-loop ticks.
pub fn closed_loop_ticks(scenario: &Scenario, n: usize) -> quadmpc::Result<Vec<Duration>> {
    let dt = scenario.dt();
    let mut state = scenario.initial_state;
    let mut hint = scenario.path.closest_param(&Point2::new(state.axes[0].pos, state.axes[1].pos));
    let mut times = Vec::with_capacity(n);
    for _ in 0..n {
        let start = Instant::now();
        let query = VtpQuery::new(Point2::new(state.axes[0].pos, state.axes[1].pos), scenario.lookahead, hint)?;
        let vtp = scenario.path.vtp(&query)?;
        hint = vtp.path_param;
        let step = step_vehicle(&scenario.controller, &state, &vtp, scenario.path.altitude)?;
        state = integrate_vehicle(&state, &step.jerk, &scenario.disturbance.at(state.time), dt)?;
        state.time += dt;
        times.push(start.elapsed());
    }
    Ok(times)
}

/// Wall time of `n` solves of the scenario's first tick.
pub fn repeated_first_tick(scenario: &Scenario, n: usize) -> quadmpc::Result<Vec<Duration>> {
    let state = scenario.initial_state;
    let pos = Point2::new(state.axes[0].pos, state.axes[1].pos);
    let query = VtpQuery::new(pos, scenario.lookahead, scenario.path.closest_param(&pos))?;
    let vtp = scenario.path.vtp(&query)?;
    let mut times = Vec::with_capacity(n);
    for _ in 0..n {
        let start = Instant::now();
        let step = step_vehicle(&scenario.controller, &state, &vtp, scenario.path.altitude)?;
        times.push(start.elapsed());
        std::hint::black_box(step);
    }
    Ok(times)
}

/// Mean closed-loop tick time for each step time in [`SWEEP_DTS`].
pub fn dt_sweep(n: usize) -> anyhow::Result<Vec<(f64, TimingStats)>> {
    SWEEP_DTS
        .iter()
        .map(|&dt| {
            let times = closed_loop_ticks(&circle_scenario(dt)?, n)?;
            Ok((dt, TimingStats::from_samples(&times).expect("n ≥ 1")))
        })
        .collect()
}

pub fn millis(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}
