//! Dense-output trajectories: cubic Hermite interpolation between grid
//! nodes, history evaluation for times before zero.

use thiserror::Error;

use super::AgentHistory;
use crate::ModelOrder;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("time {t} outside the trajectory domain [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },
}

/// Integration metadata carried alongside the solution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunMeta {
    /// Grid spacing requested for the uniform part of the grid.
    pub step: f64,
    /// Steps in which a delayed lookup landed inside the step being
    /// computed (delay shorter than the step). Those lookups start from an
    /// extrapolated interpolant and the step is re-run a fixed number of
    /// corrector passes, which degrades the formal order locally.
    pub short_delay_steps: usize,
}

/// Cubic Hermite evaluation on `[t0, t1]` from endpoint values and
/// derivatives, written into `out`. Evaluating outside the interval
/// extrapolates the polynomial.
pub(crate) fn hermite_into(
    t0: f64,
    t1: f64,
    y0: &[f64],
    f0: &[f64],
    y1: &[f64],
    f1: &[f64],
    t: f64,
    out: &mut [f64],
) {
    let dt = t1 - t0;
    let s = (t - t0) / dt;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    for k in 0..out.len() {
        out[k] = h00 * y0[k] + h10 * dt * f0[k] + h01 * y1[k] + h11 * dt * f1[k];
    }
}

/// A solved trajectory, queryable at any time in `[-tau, horizon]`.
///
/// States are stored at every grid node together with per-segment endpoint
/// derivatives (right limit at the left node, left limit at the right node,
/// so weight discontinuities at segment boundaries stay on the correct
/// side). For second-order scenarios each agent's state block is
/// `[position, velocity]`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub(crate) order: ModelOrder,
    pub(crate) dim: usize,
    pub(crate) n_agents: usize,
    pub(crate) tau_max: f64,
    pub(crate) times: Vec<f64>,
    /// `times.len()` rows of `n_agents * state_dim` values.
    pub(crate) states: Vec<Vec<f64>>,
    /// Per segment `k`: derivative at `times[k]` (right limit).
    pub(crate) derivs_start: Vec<Vec<f64>>,
    /// Per segment `k`: derivative at `times[k + 1]` (left limit).
    pub(crate) derivs_end: Vec<Vec<f64>>,
    pub(crate) histories: Vec<AgentHistory>,
    pub(crate) vel_histories: Option<Vec<AgentHistory>>,
    pub meta: RunMeta,
}

impl Trajectory {
    pub fn order(&self) -> ModelOrder {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn state_dim(&self) -> usize {
        match self.order {
            ModelOrder::First => self.dim,
            ModelOrder::Second => 2 * self.dim,
        }
    }

    pub fn tau_max(&self) -> f64 {
        self.tau_max
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn state_rows(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn histories(&self) -> &[AgentHistory] {
        &self.histories
    }

    pub fn vel_histories(&self) -> Option<&[AgentHistory]> {
        self.vel_histories.as_deref()
    }

    fn check_domain(&self, t: f64) -> Result<(), TrajectoryError> {
        let lo = -self.tau_max;
        let hi = self.horizon();
        let grace = 1e-9 * (1.0 + hi.abs());
        if t < lo - grace || t > hi + grace {
            return Err(TrajectoryError::OutOfRange { t, lo, hi });
        }
        Ok(())
    }

    /// Full flattened state at `t` (all agents).
    pub fn state_into(&self, t: f64, out: &mut [f64]) -> Result<(), TrajectoryError> {
        self.check_domain(t)?;
        let sd = self.state_dim();
        if t <= 0.0 {
            for (i, h) in self.histories.iter().enumerate() {
                h.eval_into(t, &mut out[i * sd..i * sd + self.dim]);
            }
            if let Some(vh) = &self.vel_histories {
                for (i, h) in vh.iter().enumerate() {
                    h.eval_into(t, &mut out[i * sd + self.dim..(i + 1) * sd]);
                }
            }
            return Ok(());
        }
        if self.derivs_start.is_empty() {
            // history-only trajectory: the single node at t = 0
            out.copy_from_slice(&self.states[0]);
            return Ok(());
        }
        let t = t.min(self.horizon());
        // Segment containing t; exact node hits return the stored state.
        let idx = self.times.partition_point(|&b| b <= t);
        if idx > 0 && self.times[idx - 1] == t {
            out.copy_from_slice(&self.states[idx - 1]);
            return Ok(());
        }
        let seg = (idx - 1).min(self.derivs_start.len() - 1);
        hermite_into(
            self.times[seg],
            self.times[seg + 1],
            &self.states[seg],
            &self.derivs_start[seg],
            &self.states[seg + 1],
            &self.derivs_end[seg],
            t,
            out,
        );
        Ok(())
    }

    /// Single agent's state block at `t`.
    pub fn agent_state(&self, i: usize, t: f64) -> Result<Vec<f64>, TrajectoryError> {
        let sd = self.state_dim();
        let mut full = vec![0.0; self.n_agents * sd];
        self.state_into(t, &mut full)?;
        Ok(full[i * sd..(i + 1) * sd].to_vec())
    }

    /// Position (first-order: the state itself) of agent `i` at `t`.
    pub fn position(&self, i: usize, t: f64) -> Result<Vec<f64>, TrajectoryError> {
        Ok(self.agent_state(i, t)?[..self.dim].to_vec())
    }

    /// Velocity of agent `i` at `t`; second-order trajectories only.
    pub fn velocity(&self, i: usize, t: f64) -> Result<Vec<f64>, TrajectoryError> {
        debug_assert!(self.order.is_second());
        Ok(self.agent_state(i, t)?[self.dim..].to_vec())
    }

    /// Sample times covering the history span `[-tau, 0)`: every history
    /// node plus a uniform grid at the trajectory's step.
    pub fn history_sample_times(&self) -> Vec<f64> {
        let tau = self.tau_max;
        if tau == 0.0 {
            return vec![];
        }
        let mut ts: Vec<f64> = Vec::new();
        for h in &self.histories {
            ts.extend(h.nodes());
        }
        if let Some(vh) = &self.vel_histories {
            for h in vh {
                ts.extend(h.nodes());
            }
        }
        let step = if self.meta.step > 0.0 { self.meta.step } else { tau / 16.0 };
        let mut k = 0usize;
        loop {
            let t = -tau + k as f64 * step;
            if t >= 0.0 {
                break;
            }
            ts.push(t);
            k += 1;
        }
        ts.push(-tau);
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + tau));
        ts.retain(|&t| t < 0.0);
        ts
    }
}
