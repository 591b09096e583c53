//! Per-axis receding-horizon controller.
//!
//! Each axis solves its own QP over the jerk sequence `u ∈ ℝᴺ`. With
//! `P = pos_from_jerk` and `d` the zero-input position response, the
//! tracking cost `Σₖ (target − posₖ)²` condenses to
//!
//! ```text
//! H = 2 PᵀP,   c = 2 Pᵀ(d − target·1)
//! ```
//!
//! (the constant term is dropped). Position, velocity and acceleration boxes
//! are imposed at every step `k = 1..N`; only `u₁` is applied.

use std::fmt;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{AxisState, Vec3, VehicleState};
use crate::feasibility::FeasibilityBounds;
use crate::guidance::VtpResult;
use crate::predictor::{HorizonConfig, JerkSequence, Prediction, PredictionMatrices};
use crate::qpsolver::{self, KktResiduals, QpStatus, QuadraticProgram, SolverOptions};
use crate::{Error, Result};

/// Position bound used when a scenario does not set one; large enough never
/// to bind.
pub const DEFAULT_POS_MAX: f64 = 1e6;

/// Tightening applied to the acceleration box inside the QP so that solver
/// round-off cannot push the commanded acceleration past the thrust box.
pub const DEFAULT_ACC_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostMode {
    /// `Σ (target − posₖ)²`
    TrackTarget,
    /// `Σ uₖ²`
    MinJerkNorm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisTarget {
    pub target_pos: f64,
    pub terminal_vel: Option<f64>,
    pub terminal_acc: Option<f64>,
}

impl AxisTarget {
    pub fn position(target_pos: f64) -> Self {
        Self {
            target_pos,
            terminal_vel: None,
            terminal_acc: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateBoxLimits {
    pub pos_max: f64,
    pub vel_max: f64,
    pub acc_min: f64,
    pub acc_max: f64,
}

impl StateBoxLimits {
    fn validate(&self) -> Result<()> {
        let positive = |name, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                })
            }
        };
        positive("pos_max", self.pos_max)?;
        positive("vel_max", self.vel_max)?;
        if !(self.acc_min.is_finite() && self.acc_max.is_finite() && self.acc_min <= self.acc_max) {
            return Err(Error::InvalidParameter {
                name: "acc_bounds",
                reason: format!("need acc_min ≤ acc_max, got [{}, {}]", self.acc_min, self.acc_max),
            });
        }
        Ok(())
    }

    pub fn contains(&self, s: &AxisState, tol: f64) -> bool {
        s.pos.abs() <= self.pos_max + tol
            && s.vel.abs() <= self.vel_max + tol
            && s.acc >= self.acc_min - tol
            && s.acc <= self.acc_max + tol
    }
}

#[derive(Debug, Clone)]
pub struct ControllerConfig {
    matrices: PredictionMatrices,
    pub limits: [StateBoxLimits; 3],
    pub jerk_max: Option<f64>,
    pub cost_mode: CostMode,
    pub terminal_vel: Option<f64>,
    pub terminal_acc: Option<f64>,
    pub acc_margin: f64,
    pub solver: SolverOptions,
    /// Solve the three axis QPs on scoped threads.
    pub parallel_axes: bool,
}

impl ControllerConfig {
    /// Tracking controller with acceleration boxes taken from `bounds`, the
    /// same `vel_max` on every axis and an inactive position box.
    pub fn from_bounds(horizon: HorizonConfig, bounds: &FeasibilityBounds, vel_max: f64) -> Result<Self> {
        let limits = std::array::from_fn(|i| StateBoxLimits {
            pos_max: DEFAULT_POS_MAX,
            vel_max,
            acc_min: bounds.acc_min[i],
            acc_max: bounds.acc_max[i],
        });
        Self::new(horizon, limits)
    }

    pub fn new(horizon: HorizonConfig, limits: [StateBoxLimits; 3]) -> Result<Self> {
        let cfg = Self {
            matrices: PredictionMatrices::new(&horizon),
            limits,
            jerk_max: None,
            cost_mode: CostMode::TrackTarget,
            terminal_vel: None,
            terminal_acc: None,
            acc_margin: DEFAULT_ACC_MARGIN,
            solver: SolverOptions::default(),
            parallel_axes: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for l in &self.limits {
            l.validate()?;
            if 2.0 * self.acc_margin > l.acc_max - l.acc_min && l.acc_max > l.acc_min {
                return Err(Error::InvalidParameter {
                    name: "acc_margin",
                    reason: format!("margin {} swallows the acceleration box", self.acc_margin),
                });
            }
        }
        if let Some(j) = self.jerk_max {
            if !(j.is_finite() && j > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "jerk_max",
                    reason: format!("must be positive, got {j}"),
                });
            }
        }
        if !(self.acc_margin.is_finite() && self.acc_margin >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "acc_margin",
                reason: format!("must be non-negative, got {}", self.acc_margin),
            });
        }
        if self.cost_mode == CostMode::MinJerkNorm
            && self.jerk_max.is_none()
            && self.terminal_vel.is_none()
            && self.terminal_acc.is_none()
        {
            return Err(Error::InvalidParameter {
                name: "cost_mode",
                reason: "min_jerk_norm needs jerk_max or a terminal constraint".into(),
            });
        }
        Ok(())
    }

    pub fn with_cost_mode(mut self, mode: CostMode) -> Result<Self> {
        self.cost_mode = mode;
        self.validate()?;
        Ok(self)
    }

    pub fn with_jerk_max(mut self, jerk_max: Option<f64>) -> Result<Self> {
        self.jerk_max = jerk_max;
        self.validate()?;
        Ok(self)
    }

    pub fn with_terminal(mut self, vel: Option<f64>, acc: Option<f64>) -> Result<Self> {
        self.terminal_vel = vel;
        self.terminal_acc = acc;
        self.validate()?;
        Ok(self)
    }

    pub fn with_pos_max(mut self, pos_max: f64) -> Result<Self> {
        for l in &mut self.limits {
            l.pos_max = pos_max;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn horizon(&self) -> HorizonConfig {
        self.matrices.config
    }

    pub fn matrices(&self) -> &PredictionMatrices {
        &self.matrices
    }

    pub fn target_for(&self, target_pos: f64) -> AxisTarget {
        AxisTarget {
            target_pos,
            terminal_vel: self.terminal_vel,
            terminal_acc: self.terminal_acc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintClass {
    Position,
    Velocity,
    Acceleration,
    Jerk,
    Terminal,
}

impl fmt::Display for ConstraintClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintClass::Position => "position",
            ConstraintClass::Velocity => "velocity",
            ConstraintClass::Acceleration => "acceleration",
            ConstraintClass::Jerk => "jerk",
            ConstraintClass::Terminal => "terminal",
        })
    }
}

/// Condensed QP for one axis, with the class of every inequality row.
#[derive(Debug, Clone)]
pub struct AxisProblem {
    pub qp: QuadraticProgram,
    pub row_classes: Vec<ConstraintClass>,
}

pub fn build_axis_qp(cfg: &ControllerConfig, axis: usize, initial: &AxisState, target: &AxisTarget) -> AxisProblem {
    let mats = cfg.matrices();
    let n = mats.steps();
    let limits = &cfg.limits[axis];
    let (d_pos, d_vel, d_acc) = mats.free_response(initial);
    let p = &mats.pos_from_jerk;

    let (h, c) = match cfg.cost_mode {
        CostMode::TrackTarget => {
            let offset = d_pos.add_scalar(-target.target_pos);
            (p.transpose() * p * 2.0, p.transpose() * offset * 2.0)
        }
        CostMode::MinJerkNorm => (DMatrix::identity(n, n) * 2.0, DVector::zeros(n)),
    };

    let mut rows: Vec<(DVector<f64>, f64, ConstraintClass)> = Vec::with_capacity(8 * n);
    let mut push_box = |mat: &DMatrix<f64>, free: &DVector<f64>, lo: f64, hi: f64, class| {
        for k in 0..n {
            let r = mat.row(k).transpose();
            rows.push((r.clone(), hi - free[k], class));
            rows.push((-r, free[k] - lo, class));
        }
    };
    push_box(p, &d_pos, -limits.pos_max, limits.pos_max, ConstraintClass::Position);
    push_box(&mats.vel_from_jerk, &d_vel, -limits.vel_max, limits.vel_max, ConstraintClass::Velocity);
    let margin = cfg.acc_margin.min(0.5 * (limits.acc_max - limits.acc_min));
    push_box(
        &mats.acc_from_jerk,
        &d_acc,
        limits.acc_min + margin,
        limits.acc_max - margin,
        ConstraintClass::Acceleration,
    );
    if let Some(j) = cfg.jerk_max {
        for k in 0..n {
            let mut e = DVector::zeros(n);
            e[k] = 1.0;
            rows.push((e.clone(), j, ConstraintClass::Jerk));
            rows.push((-e, j, ConstraintClass::Jerk));
        }
    }

    let a = DMatrix::from_fn(rows.len(), n, |i, j| rows[i].0[j]);
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    let row_classes = rows.iter().map(|r| r.2).collect();

    let mut eq_rows: Vec<(DVector<f64>, f64)> = Vec::new();
    if let Some(v) = target.terminal_vel {
        eq_rows.push((mats.vel_from_jerk.row(n - 1).transpose(), v - d_vel[n - 1]));
    }
    if let Some(acc) = target.terminal_acc {
        eq_rows.push((mats.acc_from_jerk.row(n - 1).transpose(), acc - d_acc[n - 1]));
    }
    let a_eq = DMatrix::from_fn(eq_rows.len(), n, |i, j| eq_rows[i].0[j]);
    let b_eq = DVector::from_iterator(eq_rows.len(), eq_rows.iter().map(|r| r.1));

    AxisProblem {
        qp: QuadraticProgram::new(h, c)
            .with_inequalities(a, b)
            .with_equalities(a_eq, b_eq),
        row_classes,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HorizonSolution {
    pub jerks: JerkSequence,
    pub prediction: Prediction,
    /// Tracking cost `Σ (target − posₖ)²`, or `Σ uₖ²` in jerk-norm mode.
    pub cost: f64,
    pub status: QpStatus,
    pub iterations: usize,
    pub kkt: KktResiduals,
    /// Wall-clock time of the QP solve in seconds.
    pub solve_time: f64,
}

impl HorizonSolution {
    pub fn first_jerk(&self) -> f64 {
        self.jerks.first()
    }
}

/// Why one axis failed to produce a jerk command.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisFailure {
    pub axis: usize,
    pub status: Option<QpStatus>,
    /// Constraint class with the largest violation at the best iterate.
    pub binding: Option<ConstraintClass>,
    pub max_violation: f64,
    pub reason: String,
}

impl fmt::Display for AxisFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "axis {}: {}", self.axis + 1, self.reason)?;
        if let Some(class) = self.binding {
            write!(f, " (binding: {class}, violation {:.3e})", self.max_violation)?;
        }
        Ok(())
    }
}

fn tracking_cost(mode: CostMode, prediction: &Prediction, jerks: &[f64], target: f64) -> f64 {
    match mode {
        CostMode::TrackTarget => prediction.pos.iter().map(|x| (target - x).powi(2)).sum(),
        CostMode::MinJerkNorm => jerks.iter().map(|u| u * u).sum(),
    }
}

fn binding_class(problem: &AxisProblem, u: &DVector<f64>) -> (Option<ConstraintClass>, f64) {
    let qp = &problem.qp;
    let au = &qp.a * u;
    let mut worst: (Option<ConstraintClass>, f64) = (None, 0.0);
    for i in 0..qp.num_inequalities() {
        let scale = qp.a.row(i).amax().max(1e-300);
        let violation = (au[i] - qp.b[i]) / scale;
        if violation > worst.1 {
            worst = (Some(problem.row_classes[i]), violation);
        }
    }
    if qp.num_equalities() > 0 {
        let gu = &qp.a_eq * u;
        for j in 0..qp.num_equalities() {
            let v = (gu[j] - qp.b_eq[j]).abs();
            if v > worst.1 {
                worst = (Some(ConstraintClass::Terminal), v);
            }
        }
    }
    worst
}

/// Solves one axis and returns the jerk to apply now plus the full plan.
pub fn step_axis(
    cfg: &ControllerConfig,
    axis: usize,
    initial: &AxisState,
    target: &AxisTarget,
) -> std::result::Result<(f64, HorizonSolution), AxisFailure> {
    let fail = |status, binding, max_violation, reason: String| AxisFailure {
        axis,
        status,
        binding,
        max_violation,
        reason,
    };
    if !initial.is_finite() || !target.target_pos.is_finite() {
        return Err(fail(None, None, 0.0, "non-finite state or target".into()));
    }
    let problem = build_axis_qp(cfg, axis, initial, target);
    let started = Instant::now();
    let sol = qpsolver::solve(&problem.qp, &cfg.solver)
        .map_err(|e| fail(None, None, 0.0, e.to_string()))?;
    let solve_time = started.elapsed().as_secs_f64();

    if sol.status != QpStatus::Optimal {
        let (binding, violation) = binding_class(&problem, &sol.u);
        return Err(fail(
            Some(sol.status),
            binding,
            violation,
            format!("QP solver returned {}", sol.status),
        ));
    }

    let jerks = JerkSequence(sol.u.as_slice().to_vec());
    let prediction = cfg
        .matrices()
        .predict(initial, &jerks)
        .map_err(|e| fail(Some(sol.status), None, 0.0, e.to_string()))?;
    let cost = tracking_cost(cfg.cost_mode, &prediction, jerks.as_slice(), target.target_pos);
    let first = jerks.first();
    Ok((
        first,
        HorizonSolution {
            jerks,
            prediction,
            cost,
            status: sol.status,
            iterations: sol.iterations,
            kkt: sol.kkt,
            solve_time,
        },
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleStep {
    pub jerk: Vec3,
    pub solutions: [HorizonSolution; 3],
}

/// Runs the three decoupled axis controllers toward `(vtp, altitude)`.
pub fn step_vehicle(
    cfg: &ControllerConfig,
    state: &VehicleState,
    vtp: &VtpResult,
    path_altitude: f64,
) -> Result<VehicleStep> {
    let targets = [
        cfg.target_for(vtp.point.x),
        cfg.target_for(vtp.point.y),
        cfg.target_for(path_altitude),
    ];
    let results: Vec<_> = if cfg.parallel_axes {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..3)
                .map(|i| {
                    let (axis_state, target) = (&state.axes[i], &targets[i]);
                    scope.spawn(move || step_axis(cfg, i, axis_state, target))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("axis solver thread panicked"))
                .collect()
        })
    } else {
        (0..3)
            .map(|i| step_axis(cfg, i, &state.axes[i], &targets[i]))
            .collect()
    };

    let mut solved = Vec::with_capacity(3);
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok((_, s)) => solved.push(s),
            Err(f) => failures.push(f),
        }
    }
    if !failures.is_empty() {
        return Err(Error::ControllerFailed(failures));
    }
    let solutions: [HorizonSolution; 3] = solved.try_into().expect("three axes");
    let jerk = Vec3::new(
        solutions[0].first_jerk(),
        solutions[1].first_jerk(),
        solutions[2].first_jerk(),
    );
    Ok(VehicleStep { jerk, solutions })
}
