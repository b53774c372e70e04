//! Planar target tracking with a coordinated-turn extended Kalman filter.
//!
//! The turn rate and curvature center that drive the filter are estimated
//! online from a sliding window of positions by a two-parameter least-squares
//! fit of the rotation between consecutive increments. The same fit, applied
//! to filtered positions, extrapolates the track over a prediction horizon.
//!
//! Modules, bottom up:
//! - [`linalg`]: `Vec2`/`Mat2`
//! - [`model`]: process and measurement models with Jacobians
//! - [`evolution`]: observation window, turn estimate, curvature center
//! - [`ekf`]: predict/update/dropout handling
//! - [`predictor`]: horizon extrapolation
//! - [`simulator`]: circle and figure-eight scenarios with seeded noise
//! - [`tracker`]: per-sample orchestration of the above
//! - [`pipeline`]: configs, CSV files, metrics

pub mod ekf;
pub mod error;
pub mod evolution;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod predictor;
pub mod simulator;
pub mod tracker;

pub use error::{Error, Result};
pub use linalg::{Mat2, Vec2};
