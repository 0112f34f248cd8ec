//! Reference-free sampling-based model predictive control for legged locomotion.
//!
//! The controller samples perturbations of dual-space (position and velocity)
//! Hermite spline nodes, rolls every candidate out through a simulated
//! environment under joint PD control, and keeps both a softmax-weighted
//! nominal and the best fully simulated trajectory. Commands are always taken
//! from the best trajectory.
//!
//! Modules:
//! - [`spline`]: Hermite and baseline interpolation, bound-preserving node clamps.
//! - [`schedule`]: annealed noise factors.
//! - [`planner`]: the sampling loop, best-trajectory tracking and warm starts.
//! - [`env`]: planar contact environments and rollouts.
//! - [`costs`]: running and terminal costs with task presets.
//! - [`harness`]: closed-loop experiments, ablations and log export.

pub mod costs;
pub mod env;
pub mod error;
pub mod harness;
pub mod planner;
pub mod schedule;
pub mod spline;
pub mod trajectory;

pub use error::{Error, Result};
