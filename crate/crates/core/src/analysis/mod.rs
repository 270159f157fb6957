//! Diameters, interval quantities, constructive constants and the
//! inequality checks that turn the decay certificates into executable form.

mod checks;
mod constants;
mod fit;
mod intervals;

pub use checks::{
    check_first_order, check_second_order, direction_set, BoundReport, CheckRecord, CheckStatus,
    ToleranceSettings,
};
pub use constants::{
    contraction_gain, contraction_scale, decay_rate, first_order_constants, history_cloud_spread,
    history_radius, history_swing, second_order_constants, FirstOrderConstants, RunningFloor,
    SecondOrderConstants,
};
pub use fit::fit_decay;
pub use intervals::{
    diameter, diameters_xv, interval_count, interval_quantities, sample_times, DirectionExtrema,
    IntervalQuantities, IntervalSpec,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("interval {index} spans [{lo}, {hi}], outside the trajectory domain")]
    OutOfRange { index: usize, lo: f64, hi: f64 },
    #[error("degenerate contraction: gain {gain} lies outside (0, 1), no decay rate is certified")]
    DegenerateContraction { gain: f64 },
    #[error("decay fit needs positive values, found {0}")]
    NonPositiveValue(f64),
    #[error("decay fit needs at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("analysis requires {0}")]
    Missing(String),
    #[error(transparent)]
    Signal(#[from] crate::signals::SignalError),
    #[error(transparent)]
    Trajectory(#[from] crate::dynamics::TrajectoryError),
}
