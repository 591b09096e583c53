//! Receding-horizon trajectory tracking for a quadrotor modeled as three
//! decoupled triple integrators.
//!
//! The pipeline per control tick:
//!
//! ```text
//! guidance::vtp     -> virtual target point on the reference path
//! mpc::step_vehicle -> one jerk QP per axis (qpsolver), first jerk applied
//! dynamics          -> exact constant-jerk plant update over dt
//! ```
//!
//! Acceleration boxes come from [`feasibility::derive_bounds`], which
//! guarantees that any acceleration inside the box keeps the mass-normalized
//! thrust within `[f_min, f_max]`.

pub mod dynamics;
pub mod error;
pub mod feasibility;
pub mod guidance;
pub mod mpc;
pub mod predictor;
pub mod qpsolver;
pub mod sim;

pub use error::{Error, Result};
