//! Delayed dynamics: initial histories, scenario assembly, method-of-steps
//! integration and dense-output trajectories.

mod history;
mod integrator;
mod scenario;
#[cfg(test)]
pub(crate) mod tests;
mod trajectory;

pub use history::{AgentHistory, HistoryShape};
pub use integrator::{integrate, rederive_derivatives, rhs_first_order, rhs_second_order, weights_at};
pub use scenario::{Scenario, ScenarioError, ScenarioParts};
pub use trajectory::{RunMeta, Trajectory, TrajectoryError};
