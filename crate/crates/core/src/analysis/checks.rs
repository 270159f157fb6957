//! Inequality checks against simulated trajectories, reported with worst
//! margins (right-hand side minus left-hand side, minimized over all
//! evaluation points). A check passes when its worst margin stays above
//! minus its tolerance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::constants::{FirstOrderConstants, RunningFloor, SecondOrderConstants};
use super::intervals::{
    interval_count, interval_quantities, sample_times, IntervalQuantities, IntervalSpec,
};
use super::AnalysisError;
use crate::dynamics::{Scenario, Trajectory};

/// Fraction of the horizon treated as the "settled" tail when testing that
/// the position spread has stopped growing.
const STABILIZATION_TAIL: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub status: CheckStatus,
    /// Worst margin over all evaluation points; absent for skipped checks
    /// or empty evaluation sets.
    pub margin: Option<f64>,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub checks: Vec<CheckRecord>,
}

impl BoundReport {
    fn push(&mut self, id: &str, margin: f64, tolerance: f64) {
        if margin.is_infinite() {
            self.checks.push(CheckRecord {
                id: id.into(),
                status: CheckStatus::Pass,
                margin: None,
                tolerance,
                note: Some("no evaluation points".into()),
            });
            return;
        }
        let status = if margin >= -tolerance {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        self.checks.push(CheckRecord {
            id: id.into(),
            status,
            margin: Some(margin),
            tolerance,
            note: None,
        });
    }

    fn push_skipped(&mut self, id: &str, note: &str) {
        self.checks.push(CheckRecord {
            id: id.into(),
            status: CheckStatus::Skipped,
            margin: None,
            tolerance: 0.0,
            note: Some(note.into()),
        });
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }

    pub fn get(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.id == id)
    }
}

/// Tolerances used by the verification stage. Contraction-type checks use
/// `contraction_slack` times the initial spread; pointwise lemma-type
/// bounds use the absolute `interp_tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSettings {
    pub contraction_slack: f64,
    pub interp_tolerance: f64,
    pub stabilization_rel: f64,
    pub table_floor_slack: f64,
}

impl Default for ToleranceSettings {
    fn default() -> Self {
        ToleranceSettings {
            contraction_slack: 1e-6,
            interp_tolerance: 1e-9,
            stabilization_rel: 1e-3,
            table_floor_slack: 0.01,
        }
    }
}

/// Deterministic direction bundle for projection checks: axis directions
/// and their negations first (low dimensions), then seeded random unit
/// vectors.
pub fn direction_set(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(count);
    if dim <= 3 {
        for a in 0..dim {
            for sign in [1.0, -1.0] {
                let mut v = vec![0.0; dim];
                v[a] = sign;
                dirs.push(v);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD19E_C710);
    while dirs.len() < count {
        let v: Vec<f64> = (0..dim)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            dirs.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    dirs.truncate(count);
    dirs
}

/// Shared evaluation data: cached states, diameters and projections at
/// every analysis time (grid nodes, history samples, interval endpoints).
struct EvalCache {
    times: Vec<f64>,
    /// Flattened full states, one row per time.
    states: Vec<Vec<f64>>,
    /// Position diameter per time, and velocity diameter for second order.
    diam_x: Vec<f64>,
    diam_v: Vec<f64>,
    /// Projections `[time][agent * n_dirs + dir]` of the checked component.
    proj: Vec<Vec<f64>>,
}

fn build_cache(
    traj: &Trajectory,
    spec: IntervalSpec,
    n_complete: usize,
    directions: &[Vec<f64>],
    project_velocity: bool,
) -> Result<EvalCache, AnalysisError> {
    let mut times = sample_times(traj, -traj.tau_max(), traj.horizon());
    for n in 0..=n_complete {
        let (a, b) = spec.window(n);
        times.push(a.max(-traj.tau_max()));
        times.push(b.min(traj.horizon()));
    }
    times.sort_by(|x, y| x.partial_cmp(y).unwrap());
    times.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * (1.0 + y.abs()));

    let n = traj.n_agents();
    let d = traj.dim();
    let sd = traj.state_dim();
    let second = traj.order().is_second();
    let offset = if project_velocity { d } else { 0 };
    let mut states = Vec::with_capacity(times.len());
    let mut diam_x = Vec::with_capacity(times.len());
    let mut diam_v = Vec::with_capacity(times.len());
    let mut proj = Vec::with_capacity(times.len());
    for &t in &times {
        let mut row = vec![0.0; n * sd];
        traj.state_into(t, &mut row)?;
        let dx = cloud_diameter(&row, n, sd, 0, d);
        diam_x.push(dx);
        if second {
            diam_v.push(cloud_diameter(&row, n, sd, d, d));
        }
        let mut p = vec![0.0; n * directions.len()];
        for i in 0..n {
            let block = &row[i * sd + offset..i * sd + offset + d];
            for (k, v) in directions.iter().enumerate() {
                p[i * directions.len() + k] = block.iter().zip(v).map(|(a, b)| a * b).sum();
            }
        }
        proj.push(p);
        states.push(row);
    }
    Ok(EvalCache {
        times,
        states,
        diam_x,
        diam_v,
        proj,
    })
}

fn cloud_diameter(row: &[f64], n: usize, sd: usize, offset: usize, d: usize) -> f64 {
    let mut best = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let mut acc = 0.0;
            for c in 0..d {
                let dlt = row[i * sd + offset + c] - row[j * sd + offset + c];
                acc += dlt * dlt;
            }
            best = best.max(acc);
        }
    }
    best.sqrt()
}

fn norm_of(block: &[f64]) -> f64 {
    block.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn in_window(t: f64, w: (f64, f64)) -> bool {
    let grace = 1e-12 * (1.0 + w.1.abs());
    t >= w.0 - grace && t <= w.1 + grace
}

/// Run every first-order certificate check against the trajectory.
pub fn check_first_order(
    scn: &Scenario,
    traj: &Trajectory,
    consts: &FirstOrderConstants,
    directions: &[Vec<f64>],
    tol: &ToleranceSettings,
    max_intervals: Option<usize>,
) -> Result<BoundReport, AnalysisError> {
    let rate = consts.require_rate()?;
    let spec = consts.interval_spec();
    let mut n_complete = interval_count(spec, traj.horizon());
    if let Some(cap) = max_intervals {
        n_complete = n_complete.min(cap);
    }
    let ivals: Vec<IntervalQuantities> = (0..=n_complete)
        .map(|n| interval_quantities(traj, spec, n, directions, false))
        .collect::<Result<_, _>>()?;
    let cache = build_cache(traj, spec, n_complete, directions, false)?;
    let d0 = consts.initial_spread;
    let tol_c = tol.contraction_slack * d0;
    let gain = consts.contraction_gain;
    let n_agents = traj.n_agents();
    let n_dirs = directions.len();
    let mut report = BoundReport::default();

    // Certified envelope: the diameter never exceeds the initial spread
    // decayed at the certified rate (shifted by one interval length).
    let mut margin = f64::INFINITY;
    for (idx, &t) in cache.times.iter().enumerate() {
        if t < 0.0 {
            continue;
        }
        let envelope = d0 * (-rate * (t - spec.length)).exp();
        margin = margin.min(envelope - cache.diam_x[idx]);
    }
    report.push("diameter_decay_envelope", margin, tol_c);

    // Geometric interval contraction.
    if n_complete < 1 {
        report.push_skipped(
            "interval_contraction",
            "horizon covers fewer than two contraction intervals",
        );
    } else {
        let mut margin = f64::INFINITY;
        for n in 0..n_complete {
            margin = margin.min((1.0 - gain) * ivals[n].spread - ivals[n + 1].spread);
        }
        report.push("interval_contraction", margin, tol_c);
    }

    // Projection refinement: inside the next interval every agent has
    // pulled away from the previous interval's extremes by the gain.
    if n_complete < 1 {
        report.push_skipped(
            "projection_refinement",
            "horizon covers fewer than two contraction intervals",
        );
    } else {
        let mut margin = f64::INFINITY;
        for n in 0..n_complete {
            let window = spec.window(n + 1);
            for (idx, &t) in cache.times.iter().enumerate() {
                if !in_window(t, window) {
                    continue;
                }
                for (k, ext) in ivals[n].directions.iter().enumerate() {
                    let lower = ext.min + gain * (ext.end_max - ext.min);
                    let upper = ext.max - gain * (ext.max - ext.end_min);
                    for i in 0..n_agents {
                        let p = cache.proj[idx][i * n_dirs + k];
                        margin = margin.min(p - lower).min(upper - p);
                    }
                }
            }
        }
        report.push("projection_refinement", margin, tol_c);
    }

    // Invariant ball: no state ever leaves the history's radius.
    let sd = traj.state_dim();
    let mut margin = f64::INFINITY;
    for row in &cache.states {
        for i in 0..n_agents {
            margin = margin.min(consts.state_bound - norm_of(&row[i * sd..(i + 1) * sd]));
        }
    }
    report.push("state_bound", margin, tol.interp_tolerance);

    // The diameter never exceeds the spread of any interval it follows.
    let mut margin = f64::INFINITY;
    for n in 0..=n_complete {
        let from = spec.window(n).0;
        for (idx, &t) in cache.times.iter().enumerate() {
            if t >= from {
                margin = margin.min(ivals[n].spread - cache.diam_x[idx]);
            }
        }
    }
    report.push("interval_diameter_bound", margin, tol.interp_tolerance);

    // Kernel floor along the trajectory: every realized interaction weight
    // stays above the ball floor.
    let mut margin = f64::INFINITY;
    let mut row = vec![0.0; n_agents * sd];
    let mut full = vec![0.0; n_agents * sd];
    for &t in traj.times() {
        traj.state_into(t, &mut row)?;
        for i in 0..n_agents {
            let xi = &row[i * sd..(i + 1) * sd];
            for j in 0..n_agents {
                if i == j {
                    continue;
                }
                let td = t - scn.delay(i, j).eval(t);
                traj.state_into(td, &mut full)?;
                let value = scn.influence().eval_pair(xi, &full[j * sd..(j + 1) * sd]);
                margin = margin.min(value - consts.influence_floor);
            }
        }
    }
    report.push("influence_floor_bound", margin, tol.interp_tolerance);

    // Containment: projections after an interval stay inside that
    // interval's extremes.
    let mut margin = f64::INFINITY;
    for n in 0..=n_complete {
        let from = spec.window(n).0;
        for (idx, &t) in cache.times.iter().enumerate() {
            if t < from {
                continue;
            }
            for (k, ext) in ivals[n].directions.iter().enumerate() {
                for i in 0..n_agents {
                    let p = cache.proj[idx][i * n_dirs + k];
                    margin = margin.min(p - ext.min).min(ext.max - p);
                }
            }
        }
    }
    report.push("projection_containment", margin, tol.interp_tolerance);

    Ok(report)
}

/// Run every second-order certificate check against the trajectory.
pub fn check_second_order(
    scn: &Scenario,
    traj: &Trajectory,
    consts: &SecondOrderConstants,
    directions: &[Vec<f64>],
    tol: &ToleranceSettings,
    max_intervals: Option<usize>,
) -> Result<BoundReport, AnalysisError> {
    let rate = consts.require_rate()?;
    let spec = consts.interval_spec();
    let mut n_complete = interval_count(spec, traj.horizon());
    if let Some(cap) = max_intervals {
        n_complete = n_complete.min(cap.min(consts.contraction_gains.len()));
    }
    let ivals: Vec<IntervalQuantities> = (0..=n_complete)
        .map(|n| interval_quantities(traj, spec, n, directions, true))
        .collect::<Result<_, _>>()?;
    let cache = build_cache(traj, spec, n_complete, directions, true)?;
    let f0 = consts.initial_velocity_spread;
    let tol_v = tol.contraction_slack * f0;
    let base = consts.max_delay * consts.velocity_bound + consts.history_swing;
    let tol_dist = tol.contraction_slack * (base + consts.initial_position_spread);
    let n_agents = traj.n_agents();
    let d = traj.dim();
    let sd = traj.state_dim();
    let n_dirs = directions.len();
    let mut report = BoundReport::default();

    // Position spread must stop growing: the supremum gained over the last
    // quarter of the horizon stays below the stabilization threshold,
    // relatively.
    {
        let cut = traj.horizon() * (1.0 - STABILIZATION_TAIL);
        let mut sup_full = 0.0f64;
        let mut sup_head = 0.0f64;
        for (idx, &t) in cache.times.iter().enumerate() {
            sup_full = sup_full.max(cache.diam_x[idx]);
            if t <= cut {
                sup_head = sup_head.max(cache.diam_x[idx]);
            }
        }
        let growth = (sup_full - sup_head) / sup_full.max(1e-300);
        report.push(
            "position_spread_stabilizes",
            tol.stabilization_rel - growth,
            0.0,
        );
    }

    // Certified velocity-decay envelope.
    let mut margin = f64::INFINITY;
    for (idx, &t) in cache.times.iter().enumerate() {
        if t < 0.0 {
            continue;
        }
        let envelope = f0 * (-rate * (t - spec.length)).exp();
        margin = margin.min(envelope - cache.diam_v[idx]);
    }
    report.push("velocity_decay_envelope", margin, tol_v);

    // Per-interval contraction with the interval-dependent gains.
    if n_complete < 1 {
        report.push_skipped(
            "velocity_interval_contraction",
            "horizon covers fewer than two contraction intervals",
        );
    } else {
        let mut margin = f64::INFINITY;
        for n in 0..n_complete {
            let gain = consts.contraction_gains[n];
            margin = margin.min((1.0 - gain) * ivals[n].spread - ivals[n + 1].spread);
        }
        report.push("velocity_interval_contraction", margin, tol_v);
    }

    // Delayed-distance bound: a delayed separation exceeds the current
    // diameter by at most the slack a delay can accumulate.
    let floor = RunningFloor::build(traj, base)?;
    let mut margin_dist = f64::INFINITY;
    let mut margin_rate = f64::INFINITY;
    let inv = 1.0 / (n_agents as f64 - 1.0);
    let mut row = vec![0.0; n_agents * sd];
    let mut full = vec![0.0; n_agents * sd];
    for &t in traj.times() {
        traj.state_into(t, &mut row)?;
        let dx = cloud_diameter(&row, n_agents, sd, 0, d);
        let phi = floor.value_at(scn.influence(), t);
        for i in 0..n_agents {
            let xi = &row[i * sd..i * sd + d];
            for j in 0..n_agents {
                if i == j {
                    continue;
                }
                let td = t - scn.delay(i, j).eval(t);
                traj.state_into(td, &mut full)?;
                let xj = &full[j * sd..j * sd + d];
                let sep = xi
                    .iter()
                    .zip(xj)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                margin_dist = margin_dist.min(base + dx - sep);
                let c = scn.influence().eval_radial(sep) * inv;
                margin_rate = margin_rate.min(c - phi * inv);
            }
        }
    }
    report.push("delayed_distance_bound", margin_dist, tol_dist);
    report.push("rate_floor_bound", margin_rate, tol.interp_tolerance);

    // Velocity ball.
    let mut margin = f64::INFINITY;
    for row in &cache.states {
        for i in 0..n_agents {
            margin = margin.min(consts.velocity_bound - norm_of(&row[i * sd + d..(i + 1) * sd]));
        }
    }
    report.push("velocity_bound", margin, tol.interp_tolerance);

    // Velocity projection containment after each interval.
    let mut margin = f64::INFINITY;
    for n in 0..=n_complete {
        let from = spec.window(n).0;
        for (idx, &t) in cache.times.iter().enumerate() {
            if t < from {
                continue;
            }
            for (k, ext) in ivals[n].directions.iter().enumerate() {
                for i in 0..n_agents {
                    let p = cache.proj[idx][i * n_dirs + k];
                    margin = margin.min(p - ext.min).min(ext.max - p);
                }
            }
        }
    }
    report.push("velocity_projection_containment", margin, tol.interp_tolerance);

    Ok(report)
}
