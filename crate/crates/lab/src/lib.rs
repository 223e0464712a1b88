//! File formats, run configuration and batch runner around `polysweep-core`.

pub mod config;
mod error;
pub mod json;
pub mod runner;
pub mod table;

pub use error::{LabError, EXIT_CONFIG, EXIT_DEGENERATE_GAIT, EXIT_INADMISSIBLE_START};
