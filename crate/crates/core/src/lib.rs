//! Morning-commute departure-time equilibria for mixed gasoline/electric fleets.
//!
//! The crate computes user-equilibrium congestion profiles as the share of
//! electric vehicles grows, measures the extra congestion that follows, and
//! derives the time-varying toll that restores the system optimum.

pub mod error;
pub mod exec;
pub mod model;
pub mod pattern;
pub mod quadrature;
pub mod roots;
pub mod equilibrium;
pub mod dynamics;
pub mod toll;
pub mod metrics;
pub mod sweep;
pub mod scenario_file;
pub mod report;
pub mod commands;

pub use error::{Error, Result};
pub use model::{CostComponents, CostMap, EnergyModel, Numerics, Scenario, VehicleClass};
