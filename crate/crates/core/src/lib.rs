//! Finite-blocklength bounds for channels with input cost constraints.
//!
//! Quantities are in nats throughout; [`units::Units`] converts for display.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod bounds;
pub mod dmc;
pub mod error;
pub mod jscc;
pub mod lattice;
pub mod report;
pub mod special;
pub mod units;

pub use dmc::{CostCapacitySolution, DmcChannel};
pub use error::{Error, Result};
pub use lattice::LatticeDistribution;
pub use units::Units;
