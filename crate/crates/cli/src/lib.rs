//! Scenario runner and benchmark front end for the `quadmpc` controller.
//!
//! `run` turns a scenario file into `trajectory.csv`, `summary.txt` and
//! `plot.py` in an output directory; `bench` times controller ticks.

pub mod bench;
pub mod config;
pub mod output;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use quadmpc::sim::{run, Scenario, Termination, TrajectoryLog};
use thiserror::Error;

use crate::config::{ConfigError, ScenarioFile};
use crate::output::{plot_script, trajectory_rows, write_trajectory, Summary, Timing};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const PLOT_FILE: &str = "plot.py";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },

    /// The run stopped early; whatever was logged has been written.
    #[error("run aborted after {ticks} ticks: {reason}")]
    Aborted { ticks: usize, reason: String },
}

impl RunError {
    /// Process exit code: 1 for configuration problems, 2 for a run that
    /// failed part-way, 3 for output errors.
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 1,
            RunError::Aborted { .. } => 2,
            RunError::Output { .. } => 3,
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub scenario: Scenario,
    pub log: TrajectoryLog,
    pub summary: Summary,
}

/// Runs the scenario in `config` and writes the artifacts to `out_dir`.
///
/// A run that fails part-way still writes every completed tick and then
/// returns [`RunError::Aborted`].
pub fn run_config(config: &Path, out_dir: &Path, timing: Timing) -> Result<RunOutcome, RunError> {
    let scenario = ScenarioFile::load(config)?.scenario()?;
    let log = run(&scenario).map_err(|e| RunError::Aborted {
        ticks: 0,
        reason: e.to_string(),
    })?;
    let summary = Summary::new(&scenario, &log);
    write_artifacts(out_dir, &scenario, &log, &summary, timing)?;
    if let Termination::SolverFailure(reason) | Termination::GuidanceFailure(reason) = &log.termination {
        return Err(RunError::Aborted {
            ticks: log.len(),
            reason: reason.clone(),
        });
    }
    Ok(RunOutcome { scenario, log, summary })
}

pub fn write_artifacts(
    out_dir: &Path,
    scenario: &Scenario,
    log: &TrajectoryLog,
    summary: &Summary,
    timing: Timing,
) -> Result<(), RunError> {
    let fail = |path: &Path, e: &dyn std::fmt::Display| RunError::Output {
        path: path.to_owned(),
        message: e.to_string(),
    };
    std::fs::create_dir_all(out_dir).map_err(|e| fail(out_dir, &e))?;

    let csv_path = out_dir.join(TRAJECTORY_FILE);
    let file = File::create(&csv_path).map_err(|e| fail(&csv_path, &e))?;
    write_trajectory(BufWriter::new(file), &trajectory_rows(log, timing)).map_err(|e| fail(&csv_path, &e))?;

    let summary_path = out_dir.join(SUMMARY_FILE);
    std::fs::write(&summary_path, summary.render()).map_err(|e| fail(&summary_path, &e))?;

    let plot_path = out_dir.join(PLOT_FILE);
    std::fs::write(&plot_path, plot_script(scenario, log)).map_err(|e| fail(&plot_path, &e))?;
    Ok(())
}
