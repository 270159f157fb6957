//! Method-of-steps integration with a fixed-step classical 4-stage scheme.
//!
//! The time grid is the union of uniform steps and every weight-schedule
//! breakpoint, so the piecewise-constant weights never switch inside a step.
//! Delayed lookups are served by the history function (times before zero),
//! by the cubic Hermite dense output (completed steps), or — when a delay is
//! shorter than the step — by an extrapolated interpolant refined with a
//! fixed number of corrector passes over the step.

use super::history::AgentHistory;
use super::scenario::{Scenario, ScenarioError};
use super::trajectory::{hermite_into, RunMeta, Trajectory};
use crate::ModelOrder;

/// Corrector passes applied to a step whose delayed lookups land inside the
/// step itself. Each pass re-runs the step with the freshly built
/// interpolant, restoring the scheme's order for vanishing delays.
const IN_STEP_PASSES: usize = 3;

/// Per-pair weights at time `t` (left-closed segment semantics), row-major.
pub fn weights_at(scn: &Scenario, t: f64) -> Result<Vec<f64>, ScenarioError> {
    let n = scn.n_agents();
    let mut alpha = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j && scn.digraph().chi(i, j) == 1 {
                alpha[i * n + j] = scn.schedule(i, j).value_at(t)?;
            }
        }
    }
    Ok(alpha)
}

/// First-order right-hand side: each agent relaxes toward the delayed
/// states of its influencers, weighted by the on/off signal and the
/// influence kernel normalized by `1/(N-1)`.
///
/// `delayed` must provide the flattened state block of an agent at any time
/// in `[-tau, t)`; lookups at exactly `t` (zero delay) read `states`.
pub fn rhs_first_order(
    scn: &Scenario,
    t: f64,
    states: &[f64],
    alpha: &[f64],
    delayed: &mut dyn FnMut(usize, f64, &mut [f64]),
    out: &mut [f64],
) {
    let n = scn.n_agents();
    let d = scn.dim();
    let inv = 1.0 / (n as f64 - 1.0);
    out.fill(0.0);
    let mut buf = vec![0.0; d];
    for i in 0..n {
        for j in scn.digraph().influencers(i) {
            let a = alpha[i * n + j];
            if a == 0.0 {
                continue;
            }
            let td = t - scn.delay(i, j).eval(t);
            if td >= t {
                buf.copy_from_slice(&states[j * d..(j + 1) * d]);
            } else {
                delayed(j, td, &mut buf);
            }
            let xi = &states[i * d..(i + 1) * d];
            let w = a * scn.influence().eval_pair(xi, &buf) * inv;
            for c in 0..d {
                out[i * d + c] += w * (buf[c] - xi[c]);
            }
        }
    }
}

/// Second-order right-hand side: positions integrate the velocities, and
/// velocities relax toward the delayed velocities of the influencers with a
/// rate read off the position separation.
pub fn rhs_second_order(
    scn: &Scenario,
    t: f64,
    states: &[f64],
    alpha: &[f64],
    delayed: &mut dyn FnMut(usize, f64, &mut [f64]),
    out: &mut [f64],
) {
    let n = scn.n_agents();
    let d = scn.dim();
    let sd = 2 * d;
    let inv = 1.0 / (n as f64 - 1.0);
    out.fill(0.0);
    let mut buf = vec![0.0; sd];
    for i in 0..n {
        let (xi, vi) = states[i * sd..(i + 1) * sd].split_at(d);
        out[i * sd..i * sd + d].copy_from_slice(vi);
        for j in scn.digraph().influencers(i) {
            let a = alpha[i * n + j];
            if a == 0.0 {
                continue;
            }
            let td = t - scn.delay(i, j).eval(t);
            if td >= t {
                buf.copy_from_slice(&states[j * sd..(j + 1) * sd]);
            } else {
                delayed(j, td, &mut buf);
            }
            let (xj, vj) = buf.split_at(d);
            let sep = xi
                .iter()
                .zip(xj)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let w = a * scn.influence().eval_radial(sep) * inv;
            for c in 0..d {
                out[i * sd + d + c] += w * (vj[c] - vi[c]);
            }
        }
    }
}

fn rhs(
    scn: &Scenario,
    t: f64,
    states: &[f64],
    alpha: &[f64],
    delayed: &mut dyn FnMut(usize, f64, &mut [f64]),
    out: &mut [f64],
) {
    match scn.order() {
        ModelOrder::First => rhs_first_order(scn, t, states, alpha, delayed, out),
        ModelOrder::Second => rhs_second_order(scn, t, states, alpha, delayed, out),
    }
}

/// Provisional data for the segment currently being integrated.
struct ProvisionalSegment<'a> {
    f_start: &'a [f64],
    y_end: &'a [f64],
    f_end: &'a [f64],
}

struct LookupCtx<'a> {
    times: &'a [f64],
    states: &'a [Vec<f64>],
    derivs_start: &'a [Vec<f64>],
    derivs_end: &'a [Vec<f64>],
    histories: &'a [AgentHistory],
    vel_histories: Option<&'a [AgentHistory]>,
    dim: usize,
    state_dim: usize,
    /// Number of fully integrated segments; node `completed` is the last
    /// committed state.
    completed: usize,
    seg_end: f64,
    provisional: Option<ProvisionalSegment<'a>>,
}

impl LookupCtx<'_> {
    fn block<'b>(&self, row: &'b [f64], j: usize) -> &'b [f64] {
        &row[j * self.state_dim..(j + 1) * self.state_dim]
    }

    fn hermite_segment(&self, seg: usize, j: usize, t: f64, out: &mut [f64]) {
        hermite_into(
            self.times[seg],
            self.times[seg + 1],
            self.block(&self.states[seg], j),
            self.block(&self.derivs_start[seg], j),
            self.block(&self.states[seg + 1], j),
            self.block(&self.derivs_end[seg], j),
            t,
            out,
        );
    }

    fn history_into(&self, j: usize, t: f64, extended: bool, out: &mut [f64]) {
        let d = self.dim;
        if extended {
            self.histories[j].eval_extended_into(t, &mut out[..d]);
        } else {
            self.histories[j].eval_into(t, &mut out[..d]);
        }
        if let Some(vh) = self.vel_histories {
            if extended {
                vh[j].eval_extended_into(t, &mut out[d..]);
            } else {
                vh[j].eval_into(t, &mut out[d..]);
            }
        }
    }

    /// Delayed state of agent `j` at `td < stage time`; sets
    /// `used_in_step` when the lookup lands past the last committed node.
    fn delayed_state(&self, j: usize, td: f64, out: &mut [f64], used_in_step: &mut bool) {
        if td <= 0.0 {
            self.history_into(j, td, false, out);
            return;
        }
        let t_done = self.times[self.completed];
        if td <= t_done {
            let idx = self.times[..=self.completed].partition_point(|&b| b <= td);
            if self.times[idx - 1] == td {
                out.copy_from_slice(self.block(&self.states[idx - 1], j));
            } else {
                self.hermite_segment(idx - 1, j, td, out);
            }
            return;
        }
        *used_in_step = true;
        if let Some(prov) = &self.provisional {
            hermite_into(
                t_done,
                self.seg_end,
                self.block(&self.states[self.completed], j),
                self.block(prov.f_start, j),
                self.block(prov.y_end, j),
                self.block(prov.f_end, j),
                td,
                out,
            );
        } else if self.completed == 0 {
            self.history_into(j, td, true, out);
        } else {
            self.hermite_segment(self.completed - 1, j, td, out);
        }
    }
}

/// Time grid: uniform steps of the scenario's step size merged with every
/// weight-schedule breakpoint inside the horizon.
fn build_grid(scn: &Scenario) -> Result<Vec<f64>, ScenarioError> {
    let horizon = scn.horizon();
    let h = scn.step();
    let mut ts = Vec::new();
    let m = (horizon / h).ceil() as usize;
    for k in 0..=m {
        ts.push((k as f64 * h).min(horizon));
    }
    let n = scn.n_agents();
    for i in 0..n {
        for j in 0..n {
            if i == j || scn.digraph().chi(i, j) == 0 {
                continue;
            }
            ts.extend(scn.schedule(i, j).breakpoints_within(horizon));
        }
    }
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    if let Some(last) = ts.last_mut() {
        if (*last - horizon).abs() <= 1e-12 * (1.0 + horizon) {
            *last = horizon;
        }
    }
    if ts.len() < 2 && horizon > 0.0 {
        return Err(ScenarioError::Invalid(
            "degenerate time grid".into(),
        ));
    }
    Ok(ts)
}

fn initial_state(scn: &Scenario) -> Vec<f64> {
    let n = scn.n_agents();
    let d = scn.dim();
    let sd = scn.state_dim();
    let mut y = vec![0.0; n * sd];
    for i in 0..n {
        scn.histories()[i].eval_into(0.0, &mut y[i * sd..i * sd + d]);
        if let Some(vh) = scn.vel_histories() {
            vh[i].eval_into(0.0, &mut y[i * sd + d..(i + 1) * sd]);
        }
    }
    y
}

/// Integrate the scenario over `[0, horizon]`, producing a dense-output
/// trajectory queryable on `[-tau, horizon]`.
pub fn integrate(scn: &Scenario) -> Result<Trajectory, ScenarioError> {
    let grid = build_grid(scn)?;
    let n = scn.n_agents();
    let sd = scn.state_dim();
    let total = n * sd;
    let n_segs = grid.len() - 1;

    let mut states: Vec<Vec<f64>> = Vec::with_capacity(grid.len());
    let mut derivs_start: Vec<Vec<f64>> = Vec::with_capacity(n_segs);
    let mut derivs_end: Vec<Vec<f64>> = Vec::with_capacity(n_segs);
    states.push(initial_state(scn));
    let mut short_delay_steps = 0usize;

    let mut k1 = vec![0.0; total];
    let mut k2 = vec![0.0; total];
    let mut k3 = vec![0.0; total];
    let mut k4 = vec![0.0; total];
    let mut stage = vec![0.0; total];

    for k in 0..n_segs {
        let t0 = grid[k];
        let t1 = grid[k + 1];
        let h = t1 - t0;
        let alpha = weights_at(scn, t0)?;
        let y0 = states[k].clone();

        // Derivative at the left node; its lookups never leave the
        // completed region.
        {
            let ctx = LookupCtx {
                times: &grid,
                states: &states,
                derivs_start: &derivs_start,
                derivs_end: &derivs_end,
                histories: scn.histories(),
                vel_histories: scn.vel_histories(),
                dim: scn.dim(),
                state_dim: sd,
                completed: k,
                seg_end: t1,
                provisional: None,
            };
            let mut unused = false;
            let mut lk = |j: usize, td: f64, out: &mut [f64]| {
                ctx.delayed_state(j, td, out, &mut unused)
            };
            rhs(scn, t0, &y0, &alpha, &mut lk, &mut k1);
        }

        let mut y1 = vec![0.0; total];
        let mut f1 = vec![0.0; total];
        let mut prov_y: Vec<f64> = Vec::new();
        let mut prov_f: Vec<f64> = Vec::new();
        let mut step_used = false;
        for pass in 0..=IN_STEP_PASSES {
            let mut used = false;
            {
                let prov = if prov_y.is_empty() {
                    None
                } else {
                    Some(ProvisionalSegment {
                        f_start: &k1,
                        y_end: &prov_y,
                        f_end: &prov_f,
                    })
                };
                let ctx = LookupCtx {
                    times: &grid,
                    states: &states,
                    derivs_start: &derivs_start,
                    derivs_end: &derivs_end,
                    histories: scn.histories(),
                    vel_histories: scn.vel_histories(),
                    dim: scn.dim(),
                    state_dim: sd,
                    completed: k,
                    seg_end: t1,
                    provisional: prov,
                };
                let mut lk =
                    |j: usize, td: f64, out: &mut [f64]| ctx.delayed_state(j, td, out, &mut used);
                let th = t0 + 0.5 * h;
                for c in 0..total {
                    stage[c] = y0[c] + 0.5 * h * k1[c];
                }
                rhs(scn, th, &stage, &alpha, &mut lk, &mut k2);
                for c in 0..total {
                    stage[c] = y0[c] + 0.5 * h * k2[c];
                }
                rhs(scn, th, &stage, &alpha, &mut lk, &mut k3);
                for c in 0..total {
                    stage[c] = y0[c] + h * k3[c];
                }
                rhs(scn, t1, &stage, &alpha, &mut lk, &mut k4);
                for c in 0..total {
                    y1[c] = y0[c] + h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
                }
                rhs(scn, t1, &y1, &alpha, &mut lk, &mut f1);
            }
            if !used {
                break;
            }
            step_used = true;
            if pass == IN_STEP_PASSES {
                break;
            }
            prov_y.clear();
            prov_y.extend_from_slice(&y1);
            prov_f.clear();
            prov_f.extend_from_slice(&f1);
        }
        if step_used {
            short_delay_steps += 1;
        }
        derivs_start.push(k1.clone());
        derivs_end.push(f1);
        states.push(y1);
    }

    Ok(Trajectory {
        order: scn.order(),
        dim: scn.dim(),
        n_agents: n,
        tau_max: scn.tau_max(),
        times: grid,
        states,
        derivs_start,
        derivs_end,
        histories: scn.histories().to_vec(),
        vel_histories: scn.vel_histories().map(|v| v.to_vec()),
        meta: RunMeta {
            step: scn.step(),
            short_delay_steps,
        },
    })
}

/// Rebuild dense output for externally supplied states on a known grid by
/// re-deriving the endpoint derivatives from the right-hand side. Lookups
/// that land inside the segment whose end derivative is being computed are
/// resolved with the same fixed number of corrector passes the integrator
/// uses.
pub fn rederive_derivatives(
    scn: &Scenario,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    histories: Vec<AgentHistory>,
    vel_histories: Option<Vec<AgentHistory>>,
) -> Result<Trajectory, ScenarioError> {
    let n = scn.n_agents();
    let sd = scn.state_dim();
    let total = n * sd;
    if times.len() != states.len() || times.is_empty() {
        return Err(ScenarioError::Invalid(format!(
            "need matching nonempty times/states, got {}/{}",
            times.len(),
            states.len()
        )));
    }
    if states.iter().any(|row| row.len() != total) {
        return Err(ScenarioError::Invalid(format!(
            "state rows must have {total} entries"
        )));
    }
    let n_segs = times.len() - 1;
    let mut derivs_start: Vec<Vec<f64>> = Vec::with_capacity(n_segs);
    let mut derivs_end: Vec<Vec<f64>> = Vec::with_capacity(n_segs);
    for k in 0..n_segs {
        let t0 = times[k];
        let t1 = times[k + 1];
        let alpha = weights_at(scn, t0)?;
        let mut f0 = vec![0.0; total];
        {
            let ctx = LookupCtx {
                times: &times,
                states: &states,
                derivs_start: &derivs_start,
                derivs_end: &derivs_end,
                histories: &histories,
                vel_histories: vel_histories.as_deref(),
                dim: scn.dim(),
                state_dim: sd,
                completed: k,
                seg_end: t1,
                provisional: None,
            };
            let mut unused = false;
            let mut lk =
                |j: usize, td: f64, out: &mut [f64]| ctx.delayed_state(j, td, out, &mut unused);
            rhs(scn, t0, &states[k], &alpha, &mut lk, &mut f0);
        }
        let mut f1 = f0.clone();
        for _ in 0..=IN_STEP_PASSES {
            let mut next = vec![0.0; total];
            {
                let ctx = LookupCtx {
                    times: &times,
                    states: &states,
                    derivs_start: &derivs_start,
                    derivs_end: &derivs_end,
                    histories: &histories,
                    vel_histories: vel_histories.as_deref(),
                    dim: scn.dim(),
                    state_dim: sd,
                    completed: k,
                    seg_end: t1,
                    provisional: Some(ProvisionalSegment {
                        f_start: &f0,
                        y_end: &states[k + 1],
                        f_end: &f1,
                    }),
                };
                let mut used = false;
                let mut lk =
                    |j: usize, td: f64, out: &mut [f64]| ctx.delayed_state(j, td, out, &mut used);
                rhs(scn, t1, &states[k + 1], &alpha, &mut lk, &mut next);
            }
            f1 = next;
        }
        derivs_start.push(f0);
        derivs_end.push(f1);
    }
    Ok(Trajectory {
        order: scn.order(),
        dim: scn.dim(),
        n_agents: n,
        tau_max: scn.tau_max(),
        times,
        states,
        derivs_start,
        derivs_end,
        histories,
        vel_histories,
        meta: RunMeta {
            step: scn.step(),
            short_delay_steps: 0,
        },
    })
}
