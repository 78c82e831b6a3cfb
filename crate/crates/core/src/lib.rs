//! Battery scheduling, degradation accounting and rental pricing for energy
//! communities that share a battery with the day-ahead market.

pub mod degradation;
pub mod error;
pub mod inputs;
pub mod market;
pub mod parallel;
pub mod pricing;
pub mod scheduler;
mod spline;
pub mod synth;
pub mod tariffs;
pub mod timeseries;
pub mod wind;

pub use error::{ConstraintFamily, Error, Result};
