//! Experiment harness around the `agekin` solvers: settings, fits, CSV output,
//! the reference studies and the three-way comparison.

// `!(x > 0.0)` also rejects NaN, which is the point
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compare;
pub mod config;
pub mod experiment;
pub mod fit;
pub mod output;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Solver(#[from] agekin::Error),
    #[error("fit failed: {0}")]
    Fit(#[from] fit::FitError),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

pub const EXIT_INVALID: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_TOLERANCE: i32 = 4;

impl LabError {
    /// Process exit code: 2 for bad input, 3 for solver failures.
    pub fn exit_code(&self) -> i32 {
        use agekin::Error as E;
        match self {
            Self::Config(_) => EXIT_INVALID,
            Self::Solver(E::InvalidParameter(_) | E::Geometry(_) | E::DegenerateShear(_) | E::OutOfRange { .. }) => {
                EXIT_INVALID
            }
            _ => EXIT_SOLVER,
        }
    }
}
