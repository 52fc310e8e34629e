//! Departure-time and mode-choice equilibria of a CBD shared by cars and
//! flexible-route transit, modelled as a bathtub with hypercongestion.
//!
//! [`equilibrium_ue::solve_ue`] solves the uncontrolled equilibrium,
//! [`equilibrium_pc::solve_pc`] the one under perimeter control with transit
//! priority, and [`oracle::verify`] re-checks either solution numerically.

pub mod cli;
pub mod dynamics;
pub mod equilibrium_pc;
pub mod equilibrium_ue;
pub mod error;
pub mod experiments;
pub mod format;
pub mod oracle;
pub mod profile;
pub mod root;
pub mod scenario;
pub mod solution;
pub mod timeline;

pub use error::{Error, Result};
pub use scenario::{derive_params, DerivedParams, Model, ScenarioParams};
