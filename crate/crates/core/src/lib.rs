//! Simulation and verification engine for first- and second-order alignment
//! dynamics (opinion consensus and velocity flocking) on strongly connected
//! digraphs with pair-dependent time-varying delays and intermittent,
//! persistently exciting communication.
//!
//! The crate integrates the delayed systems by the method of steps with dense
//! (cubic Hermite) output, computes the constructive constants behind the
//! exponential consensus/flocking certificates, and checks every certified
//! inequality against the simulated trajectories.

pub mod analysis;
pub mod io;
pub mod pipeline;
pub mod dynamics;
pub mod signals;
pub mod topology;

use serde::{Deserialize, Serialize};

/// Whether a scenario is a first-order (opinion) or second-order
/// (position/velocity) model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelOrder {
    First,
    Second,
}

impl ModelOrder {
    pub fn is_second(self) -> bool {
        matches!(self, ModelOrder::Second)
    }
}
