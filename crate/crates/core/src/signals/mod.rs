//! Time-dependent ingredients of a scenario: pairwise delays, on/off weight
//! schedules with the persistent-excitation machinery, and influence
//! functions with their derived constants.

mod delay;
mod influence;
mod pe;
mod schedule;

pub use delay::DelaySpec;
pub use influence::{DivergenceClass, InfluenceFamily, InfluenceFunction};
pub use pe::{normalization_holds, verify_pe, PeDeclaration, PeWitness};
pub use schedule::{Extent, PeMargin, WeightSchedule};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("invalid signal: {0}")]
    InvalidSpec(String),
    #[error("schedule undefined at t = {t}: defined only up to {end} and no terminal value declared")]
    HorizonExceeded { t: f64, end: f64 },
    #[error("persistence excitation violated for pair ({to} <- {from}): window at t = {window_start} integrates to {margin}, below the declared level")]
    PeViolation {
        to: usize,
        from: usize,
        window_start: f64,
        margin: f64,
    },
    #[error("influence function is not positive over the required range: minimum {value} at r = {at}")]
    NonPositiveFloor { value: f64, at: f64 },
}
