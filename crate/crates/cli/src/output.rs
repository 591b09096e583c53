//! Run artifacts: `trajectory.csv`, `summary.txt` and `plot.py`.

use std::fmt::Write as _;
use std::io::{Read, Write};

use quadmpc::feasibility::check_thrust_feasible;
use quadmpc::guidance::{PathShape, ReferencePath};
use quadmpc::qpsolver::QpStatus;
use quadmpc::sim::{Scenario, TickRecord, TrajectoryLog};
use serde::Deserialize;

/// Column order of `trajectory.csv`.
pub const COLUMNS: [&str; 23] = [
    "t", "x1", "x2", "x3", "v1", "v2", "v3", "a1", "a2", "a3", "j1", "j2", "j3", "vtp_x", "vtp_y", "vtp_mode", "f",
    "xtrack", "cost_x", "cost_y", "cost_z", "solve_ms", "status",
];

/// Tolerance for counting a logged state as outside its box.
pub const BOX_TOLERANCE: f64 = 1e-7;

/// How the `solve_ms` column is filled. Wall-clock times differ from run to
/// run, so by default the column is written as zero to keep the file a
/// deterministic function of the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Timing {
    #[default]
    Zeroed,
    Measured,
}

/// One row of `trajectory.csv`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
    pub vtp_x: f64,
    pub vtp_y: f64,
    pub vtp_mode: String,
    pub f: f64,
    pub xtrack: f64,
    pub cost_x: f64,
    pub cost_y: f64,
    pub cost_z: f64,
    pub solve_ms: f64,
    pub status: String,
}

impl TrajectoryRow {
    pub fn from_record(r: &TickRecord, timing: Timing) -> Self {
        let [x, y, z] = r.state.axes;
        Self {
            t: r.time,
            x1: x.pos,
            x2: y.pos,
            x3: z.pos,
            v1: x.vel,
            v2: y.vel,
            v3: z.vel,
            a1: x.acc,
            a2: y.acc,
            a3: z.acc,
            j1: r.jerk.x,
            j2: r.jerk.y,
            j3: r.jerk.z,
            vtp_x: r.vtp.point.x,
            vtp_y: r.vtp.point.y,
            vtp_mode: r.vtp.mode.as_str().to_owned(),
            f: r.thrust,
            xtrack: r.cross_track,
            cost_x: r.costs[0],
            cost_y: r.costs[1],
            cost_z: r.costs[2],
            solve_ms: match timing {
                Timing::Zeroed => 0.0,
                Timing::Measured => r.solve_time * 1e3,
            },
            status: status_label(&r.statuses),
        }
    }

    /// The same row with every real rounded to the precision written to the
    /// file.
    pub fn rounded(&self) -> Self {
        let q = |v: f64| format_real(v).parse::<f64>().expect("formatted real parses");
        Self {
            t: q(self.t),
            x1: q(self.x1),
            x2: q(self.x2),
            x3: q(self.x3),
            v1: q(self.v1),
            v2: q(self.v2),
            v3: q(self.v3),
            a1: q(self.a1),
            a2: q(self.a2),
            a3: q(self.a3),
            j1: q(self.j1),
            j2: q(self.j2),
            j3: q(self.j3),
            vtp_x: q(self.vtp_x),
            vtp_y: q(self.vtp_y),
            vtp_mode: self.vtp_mode.clone(),
            f: q(self.f),
            xtrack: q(self.xtrack),
            cost_x: q(self.cost_x),
            cost_y: q(self.cost_y),
            cost_z: q(self.cost_z),
            solve_ms: q(self.solve_ms),
            status: self.status.clone(),
        }
    }

    fn fields(&self) -> [String; 23] {
        let r = format_real;
        [
            r(self.t),
            r(self.x1),
            r(self.x2),
            r(self.x3),
            r(self.v1),
            r(self.v2),
            r(self.v3),
            r(self.a1),
            r(self.a2),
            r(self.a3),
            r(self.j1),
            r(self.j2),
            r(self.j3),
            r(self.vtp_x),
            r(self.vtp_y),
            self.vtp_mode.clone(),
            r(self.f),
            r(self.xtrack),
            r(self.cost_x),
            r(self.cost_y),
            r(self.cost_z),
            r(self.solve_ms),
            self.status.clone(),
        ]
    }
}

/// Twelve significant digits in scientific notation.
pub fn format_real(v: f64) -> String {
    format!("{v:.11e}")
}

/// `optimal` when all three axes agree, otherwise `x:…|y:…|z:…`.
fn status_label(statuses: &[QpStatus; 3]) -> String {
    if statuses.iter().all(|s| *s == statuses[0]) {
        statuses[0].as_str().to_owned()
    } else {
        format!(
            "x:{}|y:{}|z:{}",
            statuses[0].as_str(),
            statuses[1].as_str(),
            statuses[2].as_str()
        )
    }
}

pub fn trajectory_rows(log: &TrajectoryLog, timing: Timing) -> Vec<TrajectoryRow> {
    log.records.iter().map(|r| TrajectoryRow::from_record(r, timing)).collect()
}

pub fn write_trajectory<W: Write>(out: W, rows: &[TrajectoryRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory<R: Read>(input: R) -> csv::Result<Vec<TrajectoryRow>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

/// Aggregate figures for `summary.txt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub ticks: usize,
    pub termination: String,
    pub final_cross_track: f64,
    pub max_cross_track_second_half: f64,
    pub mean_solve_ms: f64,
    pub max_solve_ms: f64,
    pub thrust_min: f64,
    pub thrust_max: f64,
    pub thrust_violations: usize,
    pub box_violations: usize,
    pub non_optimal_solves: usize,
}

impl Summary {
    pub fn new(scenario: &Scenario, log: &TrajectoryLog) -> Self {
        let records = &log.records;
        let solve_ms: Vec<f64> = records.iter().map(|r| r.solve_time * 1e3).collect();
        let thrust_violations = records
            .iter()
            .filter(|r| !check_thrust_feasible(&r.state.acceleration(), &scenario.thrust, &scenario.gravity).feasible)
            .count();
        let box_violations = records
            .iter()
            .map(|r| {
                (0..3)
                    .filter(|&i| !scenario.controller.limits[i].contains(&r.state.axes[i], BOX_TOLERANCE))
                    .count()
            })
            .sum();
        let non_optimal_solves = records
            .iter()
            .map(|r| r.statuses.iter().filter(|s| **s != QpStatus::Optimal).count())
            .sum();
        Self {
            ticks: records.len(),
            termination: format!("{:?}", log.termination),
            final_cross_track: records.last().map_or(f64::NAN, |r| r.cross_track),
            max_cross_track_second_half: records[records.len() / 2..]
                .iter()
                .map(|r| r.cross_track)
                .fold(0.0, f64::max),
            mean_solve_ms: if solve_ms.is_empty() {
                0.0
            } else {
                solve_ms.iter().sum::<f64>() / solve_ms.len() as f64
            },
            max_solve_ms: solve_ms.iter().copied().fold(0.0, f64::max),
            thrust_min: records.iter().map(|r| r.thrust).fold(f64::INFINITY, f64::min),
            thrust_max: records.iter().map(|r| r.thrust).fold(f64::NEG_INFINITY, f64::max),
            thrust_violations,
            box_violations,
            non_optimal_solves,
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "ticks: {}", self.ticks);
        let _ = writeln!(s, "termination: {}", self.termination);
        let _ = writeln!(s, "final_cross_track_m: {:.6e}", self.final_cross_track);
        let _ = writeln!(s, "max_cross_track_second_half_m: {:.6e}", self.max_cross_track_second_half);
        let _ = writeln!(s, "mean_solve_ms: {:.4}", self.mean_solve_ms);
        let _ = writeln!(s, "max_solve_ms: {:.4}", self.max_solve_ms);
        let _ = writeln!(s, "thrust_range: [{:.4}, {:.4}]", self.thrust_min, self.thrust_max);
        let _ = writeln!(s, "thrust_violations: {}", self.thrust_violations);
        let _ = writeln!(s, "box_violations: {}", self.box_violations);
        let _ = writeln!(s, "non_optimal_solves: {}", self.non_optimal_solves);
        s
    }
}

/// Samples of the reference path covering the flown part of it.
fn path_samples(path: &ReferencePath, log: &TrajectoryLog, lookahead: f64) -> Vec<[f64; 2]> {
    const SAMPLES: usize = 400;
    let (lo, hi) = match &path.shape {
        PathShape::Circle(c) => (0.0, c.circumference()),
        PathShape::Parametric(p) => p.s_range(),
        PathShape::Line(l) => {
            let params = log.records.iter().map(|r| l.project(&r.state.position().xy()));
            let (lo, hi) = params.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s), b.max(s)));
            if lo.is_finite() {
                (lo - lookahead, hi + lookahead)
            } else {
                (-lookahead, lookahead)
            }
        }
    };
    (0..=SAMPLES)
        .map(|i| {
            let p = path.at(lo + (hi - lo) * i as f64 / SAMPLES as f64);
            [p.x, p.y]
        })
        .collect()
}

/// A matplotlib script that reads `trajectory.csv` from its own directory
/// and draws the ground track against the reference path, plus the x-axis
/// position–velocity and position–acceleration phase portraits.
pub fn plot_script(scenario: &Scenario, log: &TrajectoryLog) -> String {
    let samples = path_samples(&scenario.path, log, scenario.lookahead);
    let xs: Vec<String> = samples.iter().map(|p| format!("{:.6}", p[0])).collect();
    let ys: Vec<String> = samples.iter().map(|p| format!("{:.6}", p[1])).collect();
    format!(
        r#"#!/usr/bin/env python3
"""Plots for one quadmpc run. Usage: python3 plot.py [--save]"""
import csv
import os
import sys

import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
PATH_X = [{path_x}]
PATH_Y = [{path_y}]

with open(os.path.join(HERE, "trajectory.csv"), newline="") as fh:
    rows = list(csv.DictReader(fh))
col = lambda name: [float(r[name]) for r in rows]

fig, ax = plt.subplots(figsize=(7, 7))
ax.plot(PATH_X, PATH_Y, "k--", lw=1, label="reference path")
ax.plot(col("x1"), col("x2"), "b-", lw=1.5, label="vehicle")
ax.plot(col("vtp_x"), col("vtp_y"), "r.", ms=2, label="virtual target")
ax.set_xlabel("x [m]")
ax.set_ylabel("y [m]")
ax.set_aspect("equal", adjustable="datalim")
ax.legend()
ax.set_title("Ground track")

fig2, (pv, pa) = plt.subplots(1, 2, figsize=(12, 5))
pv.plot(col("x1"), col("v1"), "b-")
pv.set_xlabel("x position [m]")
pv.set_ylabel("x velocity [m/s]")
pv.set_title("Decoupled x-axis: position vs velocity")
pa.plot(col("x1"), col("a1"), "g-")
pa.set_xlabel("x position [m]")
pa.set_ylabel("x acceleration [m/s^2]")
pa.set_title("Decoupled x-axis: position vs acceleration")

if "--save" in sys.argv:
    fig.savefig(os.path.join(HERE, "track.png"), dpi=150)
    fig2.savefig(os.path.join(HERE, "phase_x.png"), dpi=150)
else:
    plt.show()
"#,
        path_x = xs.join(", "),
        path_y = ys.join(", "),
    )
}
