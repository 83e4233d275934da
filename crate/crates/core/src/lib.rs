//! Kinetic model of aging yield-stress fluids.
//!
//! The stress distribution `p(t, σ)` of mesoscopic elements is sheared at
//! rate `γ̇(t)`; elements beyond the threshold `σ_c` relax at unit rate and are
//! reinjected at zero stress. This crate solves that transport equation on a
//! grid, along characteristics and by Monte Carlo on the jump process, and
//! provides the delay-equation decay rates and macroscopic closures.

// `!(x > 0.0)` also rejects NaN, which is the point
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod characteristics;
pub mod dde;
pub mod error;
pub mod grid;
pub mod initial;
pub mod macro_ode;
pub mod model;
pub mod pdmp;
pub mod quadrature;
pub mod regression;

pub use error::{Error, Result};
pub use initial::InitialDensity;
pub use model::{ModelParams, ShearProfile, SteadyObservables};
