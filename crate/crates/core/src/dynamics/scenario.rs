//! A fully resolved problem instance: digraph, signals, histories and
//! integrator settings.

use thiserror::Error;

use super::AgentHistory;
use crate::signals::{DelaySpec, InfluenceFunction, PeDeclaration, SignalError, WeightSchedule};
use crate::topology::{Digraph, NeighborSummary, TopologyError};
use crate::ModelOrder;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("invalid history: {0}")]
    InvalidHistory(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

/// A complete simulation instance. Immutable once built; safe to share
/// across concurrent runs.
#[derive(Debug, Clone)]
pub struct Scenario {
    digraph: Digraph,
    summary: NeighborSummary,
    dim: usize,
    order: ModelOrder,
    tau_max: f64,
    delays: Vec<DelaySpec>,
    schedules: Vec<WeightSchedule>,
    influence: InfluenceFunction,
    histories: Vec<AgentHistory>,
    vel_histories: Option<Vec<AgentHistory>>,
    pe: Option<PeDeclaration>,
    step: f64,
    horizon: f64,
    seed: u64,
}

pub struct ScenarioParts {
    pub digraph: Digraph,
    pub dim: usize,
    pub order: ModelOrder,
    pub tau_max: f64,
    /// Row-major `n * n` tables; diagonal entries are ignored.
    pub delays: Vec<DelaySpec>,
    pub schedules: Vec<WeightSchedule>,
    pub influence: InfluenceFunction,
    pub histories: Vec<AgentHistory>,
    pub vel_histories: Option<Vec<AgentHistory>>,
    pub pe: Option<PeDeclaration>,
    pub step: f64,
    pub horizon: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn new(parts: ScenarioParts) -> Result<Self, ScenarioError> {
        let n = parts.digraph.n_agents();
        if parts.dim == 0 {
            return Err(ScenarioError::Invalid("dimension must be at least 1".into()));
        }
        if !(parts.tau_max >= 0.0 && parts.tau_max.is_finite()) {
            return Err(ScenarioError::Invalid(format!(
                "delay bound must be finite and nonnegative, got {}",
                parts.tau_max
            )));
        }
        if !(parts.step > 0.0 && parts.step.is_finite()) {
            return Err(ScenarioError::Invalid(format!(
                "step size must be positive, got {}",
                parts.step
            )));
        }
        if !(parts.horizon >= 0.0 && parts.horizon.is_finite()) {
            return Err(ScenarioError::Invalid(format!(
                "horizon must be finite and nonnegative, got {}",
                parts.horizon
            )));
        }
        if parts.delays.len() != n * n || parts.schedules.len() != n * n {
            return Err(ScenarioError::Invalid(format!(
                "delay/schedule tables must have {} entries, got {}/{}",
                n * n,
                parts.delays.len(),
                parts.schedules.len()
            )));
        }
        for (idx, d) in parts.delays.iter().enumerate() {
            if idx / n != idx % n {
                d.validate(parts.tau_max)?;
            }
        }
        for (idx, s) in parts.schedules.iter().enumerate() {
            if idx / n != idx % n && !s.defined_through(parts.horizon) {
                return Err(ScenarioError::Invalid(format!(
                    "weight schedule for pair ({} <- {}) is not defined through the horizon {}",
                    idx / n,
                    idx % n,
                    parts.horizon
                )));
            }
        }
        if parts.histories.len() != n {
            return Err(ScenarioError::InvalidHistory(format!(
                "need {n} histories, got {}",
                parts.histories.len()
            )));
        }
        for h in &parts.histories {
            if h.dim() != parts.dim || h.tau() != parts.tau_max {
                return Err(ScenarioError::InvalidHistory(format!(
                    "history has dim {} span {}, expected dim {} span {}",
                    h.dim(),
                    h.tau(),
                    parts.dim,
                    parts.tau_max
                )));
            }
        }
        match (&parts.order, &parts.vel_histories) {
            (ModelOrder::First, None) => {}
            (ModelOrder::Second, Some(vh)) => {
                if vh.len() != n {
                    return Err(ScenarioError::InvalidHistory(format!(
                        "need {n} velocity histories, got {}",
                        vh.len()
                    )));
                }
                for h in vh {
                    if h.dim() != parts.dim || h.tau() != parts.tau_max {
                        return Err(ScenarioError::InvalidHistory(
                            "velocity history dimension/span mismatch".into(),
                        ));
                    }
                }
            }
            (ModelOrder::First, Some(_)) => {
                return Err(ScenarioError::Invalid(
                    "first-order scenario must not carry velocity histories".into(),
                ))
            }
            (ModelOrder::Second, None) => {
                return Err(ScenarioError::Invalid(
                    "second-order scenario needs velocity histories".into(),
                ))
            }
        }
        if parts.influence.order != parts.order {
            return Err(ScenarioError::Invalid(
                "influence function order tag does not match the scenario order".into(),
            ));
        }
        if let Some(pe) = &parts.pe {
            if !(pe.window > 0.0 && pe.level > 0.0) {
                return Err(ScenarioError::Invalid(format!(
                    "persistence excitation declaration needs positive window and level, got {} / {}",
                    pe.window, pe.level
                )));
            }
        }
        let summary = parts.digraph.neighbor_summary().ok();
        let summary = match summary {
            Some(s) => s,
            None => {
                // Depth is undefined; keep a placeholder so plain runs on
                // disconnected graphs can still integrate. Verification
                // rejects these scenarios before ever reading the summary.
                NeighborSummary {
                    neighbor_sets: (0..n).map(|i| parts.digraph.influencers(i).collect()).collect(),
                    cardinalities: (0..n)
                        .map(|i| parts.digraph.influencers(i).count())
                        .collect(),
                    depth: 0,
                    dist: vec![],
                }
            }
        };
        Ok(Scenario {
            digraph: parts.digraph,
            summary,
            dim: parts.dim,
            order: parts.order,
            tau_max: parts.tau_max,
            delays: parts.delays,
            schedules: parts.schedules,
            influence: parts.influence,
            histories: parts.histories,
            vel_histories: parts.vel_histories,
            pe: parts.pe,
            step: parts.step,
            horizon: parts.horizon,
            seed: parts.seed,
        })
    }

    pub fn digraph(&self) -> &Digraph {
        &self.digraph
    }

    pub fn summary(&self) -> &NeighborSummary {
        &self.summary
    }

    pub fn n_agents(&self) -> usize {
        self.digraph.n_agents()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Per-agent state width: `d` for first order, `2d` (position then
    /// velocity) for second order.
    pub fn state_dim(&self) -> usize {
        match self.order {
            ModelOrder::First => self.dim,
            ModelOrder::Second => 2 * self.dim,
        }
    }

    pub fn order(&self) -> ModelOrder {
        self.order
    }

    pub fn tau_max(&self) -> f64 {
        self.tau_max
    }

    pub fn delay(&self, i: usize, j: usize) -> &DelaySpec {
        &self.delays[i * self.n_agents() + j]
    }

    pub fn schedule(&self, i: usize, j: usize) -> &WeightSchedule {
        &self.schedules[i * self.n_agents() + j]
    }

    pub fn influence(&self) -> &InfluenceFunction {
        &self.influence
    }

    pub fn histories(&self) -> &[AgentHistory] {
        &self.histories
    }

    pub fn vel_histories(&self) -> Option<&[AgentHistory]> {
        self.vel_histories.as_deref()
    }

    pub fn pe(&self) -> Option<PeDeclaration> {
        self.pe
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Length `depth * (window + tau) + tau` of one contraction interval.
    /// Requires a persistence-excitation declaration and a strongly
    /// connected digraph.
    pub fn interval_length(&self) -> Option<f64> {
        let pe = self.pe?;
        if self.summary.dist.is_empty() {
            return None;
        }
        Some(self.summary.depth as f64 * (pe.window + self.tau_max) + self.tau_max)
    }
}
