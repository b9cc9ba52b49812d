//! Robust sparse regression by least squares of depth-trimmed residuals.

pub mod data;
pub mod data_io;
pub mod error;
pub mod estimators;
pub mod evaluation;
pub mod linalg;
pub mod model_selection;
pub mod objectives;
pub mod seed;
pub mod simulation;
pub mod solvers;
pub mod stats;

pub use data::Dataset;
pub use error::{Error, Result};
pub use objectives::{ObjectiveValue, PenaltySpec};
pub use stats::{RealVector, TrimState};
