//! The constructive constants behind the decay certificates.

use serde::{Deserialize, Serialize};

use super::intervals::{interval_count, sample_times, IntervalSpec};
use super::AnalysisError;
use crate::dynamics::{AgentHistory, Scenario, Trajectory};
use crate::signals::{normalization_holds, InfluenceFamily, InfluenceFunction};

/// Largest norm any history curve reaches; the invariant-ball radius.
pub fn history_radius(histories: &[AgentHistory]) -> f64 {
    let mut best = 0.0f64;
    for h in histories {
        let mut buf = vec![0.0; h.dim()];
        for t in h.nodes() {
            h.eval_into(t, &mut buf);
            let norm = buf.iter().map(|v| v * v).sum::<f64>().sqrt();
            best = best.max(norm);
        }
    }
    best
}

/// Largest distance any single agent's history travels within its span.
pub fn history_swing(histories: &[AgentHistory]) -> f64 {
    let mut best = 0.0f64;
    for h in histories {
        let nodes = h.nodes();
        let d = h.dim();
        let mut vals = vec![0.0; nodes.len() * d];
        for (k, &t) in nodes.iter().enumerate() {
            h.eval_into(t, &mut vals[k * d..(k + 1) * d]);
        }
        for p in 0..nodes.len() {
            for q in (p + 1)..nodes.len() {
                let acc: f64 = (0..d)
                    .map(|c| {
                        let dlt = vals[p * d + c] - vals[q * d + c];
                        dlt * dlt
                    })
                    .sum();
                best = best.max(acc.sqrt());
            }
        }
    }
    best
}

/// Largest distance between any two (agent, time) history samples: the
/// initial spread that seeds the contraction estimates. Histories are
/// piecewise linear, so node values realize the maximum.
pub fn history_cloud_spread(histories: &[AgentHistory]) -> f64 {
    let d = match histories.first() {
        Some(h) => h.dim(),
        None => return 0.0,
    };
    let mut pts: Vec<f64> = Vec::new();
    let mut buf = vec![0.0; d];
    for h in histories {
        for t in h.nodes() {
            h.eval_into(t, &mut buf);
            pts.extend_from_slice(&buf);
        }
    }
    let count = pts.len() / d;
    let mut best = 0.0f64;
    for p in 0..count {
        for q in (p + 1)..count {
            let acc: f64 = (0..d)
                .map(|c| {
                    let dlt = pts[p * d + c] - pts[q * d + c];
                    dlt * dlt
                })
                .sum();
            best = best.max(acc);
        }
    }
    best.sqrt()
}

/// Per-interval contraction gain
/// `exp(-K (((depth^2 + 3 depth) / 2) (window + tau) + tau)) * (floor * level / (N - 1))^depth`.
pub fn contraction_gain(
    sup_norm: f64,
    depth: usize,
    window: f64,
    tau: f64,
    floor: f64,
    level: f64,
    n_agents: usize,
) -> f64 {
    let g = depth as f64;
    let exponent = sup_norm * (0.5 * (g * g + 3.0 * g) * (window + tau) + tau);
    (-exponent).exp() * (floor * level / (n_agents as f64 - 1.0)).powi(depth as i32)
}

/// The gain with the influence floor factored out:
/// `exp(-K (((depth^2 + 3 depth) / 2) (window + tau) + tau)) * (level / (N - 1))^depth`,
/// so that the n-th gain is this scale times the running floor to the depth.
pub fn contraction_scale(
    sup_norm: f64,
    depth: usize,
    window: f64,
    tau: f64,
    level: f64,
    n_agents: usize,
) -> f64 {
    contraction_gain(sup_norm, depth, window, tau, 1.0, level, n_agents)
}

/// Decay rate `ln(1 / (1 - gain)) / interval_length`, positive for gains in
/// (0, 1). Uses `ln_1p` so tiny gains do not round the rate to zero.
pub fn decay_rate(gain: f64, interval_length: f64) -> Result<f64, AnalysisError> {
    if !(gain > 0.0 && gain < 1.0) {
        return Err(AnalysisError::DegenerateContraction { gain });
    }
    Ok(-(-gain).ln_1p() / interval_length)
}

fn table_adjusted_floor(influence: &InfluenceFunction, raw: f64, slack: f64) -> f64 {
    match influence.family {
        InfluenceFamily::Table { .. } => raw * (1.0 - slack),
        _ => raw,
    }
}

/// Everything the first-order certificate needs; derivable from the
/// scenario alone, no integration required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderConstants {
    pub n_agents: usize,
    pub graph_depth: usize,
    pub pe_window: f64,
    pub pe_level: f64,
    pub max_delay: f64,
    pub interval_length: f64,
    pub influence_sup: f64,
    /// Minimum of the kernel over the invariant ball (table families carry
    /// the configured safety slack).
    pub influence_floor: f64,
    /// Radius of the ball all states stay in.
    pub state_bound: f64,
    /// Worst initial pairwise gap, including cross-time history pairs.
    pub initial_spread: f64,
    pub contraction_gain: f64,
    /// Certified exponential decay rate; absent when the gain degenerates.
    pub decay_rate: Option<f64>,
    /// Whether the normalization `level * sup <= 1` holds; the gain is only
    /// guaranteed inside (0, 1) when it does.
    pub normalization_ok: bool,
}

impl FirstOrderConstants {
    pub fn interval_spec(&self) -> IntervalSpec {
        IntervalSpec {
            length: self.interval_length,
            tau: self.max_delay,
        }
    }

    pub fn require_rate(&self) -> Result<f64, AnalysisError> {
        self.decay_rate.ok_or(AnalysisError::DegenerateContraction {
            gain: self.contraction_gain,
        })
    }
}

pub fn first_order_constants(
    scn: &Scenario,
    table_floor_slack: f64,
) -> Result<FirstOrderConstants, AnalysisError> {
    let pe = scn
        .pe()
        .ok_or_else(|| AnalysisError::Missing("a persistence-excitation declaration".into()))?;
    let interval_length = scn
        .interval_length()
        .ok_or_else(|| AnalysisError::Missing("a strongly connected digraph".into()))?;
    let depth = scn.summary().depth;
    let n = scn.n_agents();
    let sup = scn.influence().sup_norm();
    let state_bound = history_radius(scn.histories());
    let raw_floor = scn.influence().floor_over_ball(state_bound)?;
    let floor = table_adjusted_floor(scn.influence(), raw_floor, table_floor_slack);
    let gain = contraction_gain(sup, depth, pe.window, scn.tau_max(), floor, pe.level, n);
    let rate = decay_rate(gain, interval_length).ok();
    Ok(FirstOrderConstants {
        n_agents: n,
        graph_depth: depth,
        pe_window: pe.window,
        pe_level: pe.level,
        max_delay: scn.tau_max(),
        interval_length,
        influence_sup: sup,
        influence_floor: floor,
        state_bound,
        initial_spread: history_cloud_spread(scn.histories()),
        contraction_gain: gain,
        decay_rate: rate,
        normalization_ok: normalization_holds(pe.level, sup),
    })
}

/// Running lower bound on the interaction kernel along a trajectory:
/// the kernel minimized over `[0, base + running_max d_X]`, where `base`
/// collects the delay-induced slack `tau * velocity_bound + history swing`.
#[derive(Debug, Clone)]
pub struct RunningFloor {
    base: f64,
    times: Vec<f64>,
    running_max_spread: Vec<f64>,
}

impl RunningFloor {
    pub fn build(traj: &Trajectory, base: f64) -> Result<Self, AnalysisError> {
        let times = sample_times(traj, -traj.tau_max(), traj.horizon());
        let mut running_max_spread = Vec::with_capacity(times.len());
        let mut acc = 0.0f64;
        for &t in &times {
            let (dx, _) = super::intervals::diameters_xv(traj, t)?;
            acc = acc.max(dx);
            running_max_spread.push(acc);
        }
        Ok(RunningFloor {
            base,
            times,
            running_max_spread,
        })
    }

    /// Radius `base + max_{s <= t} d_X(s)` (grid approximation).
    pub fn radius_at(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&b| b <= t);
        if idx == 0 {
            self.base
        } else {
            self.base + self.running_max_spread[idx - 1]
        }
    }

    pub fn value_at(&self, influence: &InfluenceFunction, t: f64) -> f64 {
        influence.running_min(self.radius_at(t))
    }

    /// `base + sup d_X` over the whole checked horizon: the empirical
    /// surrogate for the bounded-spread constant.
    pub fn spread_bound(&self) -> f64 {
        self.base + self.running_max_spread.last().copied().unwrap_or(0.0)
    }
}

/// Constants behind the flocking certificate. The interval gains depend on
/// the simulated position spread, so a trajectory is required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderConstants {
    pub n_agents: usize,
    pub graph_depth: usize,
    pub pe_window: f64,
    pub pe_level: f64,
    pub max_delay: f64,
    pub interval_length: f64,
    pub influence_sup: f64,
    /// Largest velocity norm over the histories; bounds all velocities.
    pub velocity_bound: f64,
    /// Largest in-history travel of a single agent's position.
    pub history_swing: f64,
    /// Worst initial pairwise velocity gap.
    pub initial_velocity_spread: f64,
    /// Worst initial pairwise position gap (sets distance-check scales).
    pub initial_position_spread: f64,
    /// Gain with the kernel floor factored out.
    pub contraction_scale: f64,
    /// Per-interval gains: scale times the running floor at the interval's
    /// right endpoint, to the depth.
    pub contraction_gains: Vec<f64>,
    /// Empirical bound on `tau * velocity_bound + swing + sup d_X`.
    pub spread_bound: f64,
    /// Kernel minimized over separations up to the empirical spread bound
    /// (table families carry the configured safety slack).
    pub influence_floor_empirical: f64,
    /// Certified velocity decay rate; absent when the uniform gain
    /// degenerates.
    pub velocity_decay_rate: Option<f64>,
    pub normalization_ok: bool,
}

impl SecondOrderConstants {
    pub fn interval_spec(&self) -> IntervalSpec {
        IntervalSpec {
            length: self.interval_length,
            tau: self.max_delay,
        }
    }

    pub fn uniform_gain(&self) -> f64 {
        self.contraction_scale
            * self
                .influence_floor_empirical
                .powi(self.graph_depth as i32)
    }

    pub fn require_rate(&self) -> Result<f64, AnalysisError> {
        self.velocity_decay_rate
            .ok_or(AnalysisError::DegenerateContraction {
                gain: self.uniform_gain(),
            })
    }
}

pub fn second_order_constants(
    scn: &Scenario,
    traj: &Trajectory,
    table_floor_slack: f64,
) -> Result<SecondOrderConstants, AnalysisError> {
    let pe = scn
        .pe()
        .ok_or_else(|| AnalysisError::Missing("a persistence-excitation declaration".into()))?;
    let interval_length = scn
        .interval_length()
        .ok_or_else(|| AnalysisError::Missing("a strongly connected digraph".into()))?;
    let vel_histories = scn
        .vel_histories()
        .ok_or_else(|| AnalysisError::Missing("velocity histories".into()))?;
    let depth = scn.summary().depth;
    let n = scn.n_agents();
    let sup = scn.influence().sup_norm();
    let velocity_bound = history_radius(vel_histories);
    let swing = history_swing(scn.histories());
    let base = scn.tau_max() * velocity_bound + swing;
    let floor = RunningFloor::build(traj, base)?;
    let scale = contraction_scale(sup, depth, pe.window, scn.tau_max(), pe.level, n);
    let spec = IntervalSpec {
        length: interval_length,
        tau: scn.tau_max(),
    };
    let n_complete = interval_count(spec, traj.horizon());
    let mut gains = Vec::with_capacity(n_complete);
    for n_idx in 0..n_complete {
        let t_end = (n_idx as f64 + 1.0) * interval_length;
        let phi = floor.value_at(scn.influence(), t_end);
        gains.push(scale * phi.powi(depth as i32));
    }
    let spread_bound = floor.spread_bound();
    let raw_hat = scn.influence().running_min(spread_bound);
    let hat = table_adjusted_floor(scn.influence(), raw_hat, table_floor_slack);
    let uniform_gain = scale * hat.powi(depth as i32);
    let rate = decay_rate(uniform_gain, interval_length).ok();
    Ok(SecondOrderConstants {
        n_agents: n,
        graph_depth: depth,
        pe_window: pe.window,
        pe_level: pe.level,
        max_delay: scn.tau_max(),
        interval_length,
        influence_sup: sup,
        velocity_bound,
        history_swing: swing,
        initial_velocity_spread: history_cloud_spread(vel_histories),
        initial_position_spread: history_cloud_spread(scn.histories()),
        contraction_scale: scale,
        contraction_gains: gains,
        spread_bound,
        influence_floor_empirical: hat,
        velocity_decay_rate: rate,
        normalization_ok: normalization_holds(pe.level, sup),
    })
}
