//! Contraction intervals and the extremal quantities measured on them.
//!
//! The n-th interval is `[n * L - tau, n * L]` with `L = depth * (window +
//! tau) + tau`; the zeroth one is exactly the history span. Continuous
//! extrema are approximated by grid maxima over trajectory nodes plus the
//! interval endpoints; the grid already contains every weight breakpoint.

use super::AnalysisError;
use crate::dynamics::Trajectory;

/// Interval geometry: contraction-interval length and delay bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalSpec {
    pub length: f64,
    pub tau: f64,
}

impl IntervalSpec {
    pub fn window(&self, n: usize) -> (f64, f64) {
        let right = n as f64 * self.length;
        (right - self.tau, right)
    }
}

/// Number of complete intervals a trajectory covers beyond the zeroth one:
/// the largest `n` with `n * L <= horizon`.
pub fn interval_count(spec: IntervalSpec, horizon: f64) -> usize {
    let grace = 1e-9 * (1.0 + horizon);
    ((horizon + grace) / spec.length).floor() as usize
}

/// Projection extrema over one interval for a single direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionExtrema {
    /// Minimum over agents and interval samples.
    pub min: f64,
    /// Maximum over agents and interval samples.
    pub max: f64,
    /// Minimum over agents at the interval's right endpoint only.
    pub end_min: f64,
    /// Maximum over agents at the interval's right endpoint only.
    pub end_max: f64,
}

#[derive(Debug, Clone)]
pub struct IntervalQuantities {
    pub index: usize,
    pub window: (f64, f64),
    /// Largest distance between any two (agent, time) samples in the
    /// interval: the worst pairwise gap, including cross-time pairs.
    pub spread: f64,
    pub directions: Vec<DirectionExtrema>,
}

/// Times used to approximate continuous extrema over `[a, b]`: both
/// endpoints, the trajectory grid nodes strictly inside, and — for the part
/// before zero — the history sample times.
pub fn sample_times(traj: &Trajectory, a: f64, b: f64) -> Vec<f64> {
    let mut ts = vec![a, b];
    for &t in traj.times() {
        if t > a && t < b {
            ts.push(t);
        }
    }
    if a < 0.0 {
        let hi = b.min(0.0);
        for t in traj.history_sample_times() {
            if t > a && t < hi {
                ts.push(t);
            }
        }
    }
    ts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ts.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * (1.0 + y.abs()));
    ts
}

fn cloud_spread(points: &[f64], dim: usize) -> f64 {
    let count = points.len() / dim;
    if count < 2 {
        return 0.0;
    }
    if dim == 1 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &p in points {
            lo = lo.min(p);
            hi = hi.max(p);
        }
        return hi - lo;
    }
    let mut best = 0.0f64;
    for p in 0..count {
        for q in (p + 1)..count {
            let mut acc = 0.0;
            for c in 0..dim {
                let d = points[p * dim + c] - points[q * dim + c];
                acc += d * d;
            }
            best = best.max(acc);
        }
    }
    best.sqrt()
}

/// Max pairwise distance between agent positions at time `t`.
pub fn diameter(traj: &Trajectory, t: f64) -> Result<f64, AnalysisError> {
    let n = traj.n_agents();
    let d = traj.dim();
    let sd = traj.state_dim();
    let mut full = vec![0.0; n * sd];
    traj.state_into(t, &mut full)?;
    let mut pts = vec![0.0; n * d];
    for i in 0..n {
        pts[i * d..(i + 1) * d].copy_from_slice(&full[i * sd..i * sd + d]);
    }
    Ok(cloud_spread(&pts, d))
}

/// Position and velocity diameters at time `t` (second order).
pub fn diameters_xv(traj: &Trajectory, t: f64) -> Result<(f64, f64), AnalysisError> {
    let n = traj.n_agents();
    let d = traj.dim();
    let sd = traj.state_dim();
    let mut full = vec![0.0; n * sd];
    traj.state_into(t, &mut full)?;
    let mut xs = vec![0.0; n * d];
    let mut vs = vec![0.0; n * d];
    for i in 0..n {
        xs[i * d..(i + 1) * d].copy_from_slice(&full[i * sd..i * sd + d]);
        vs[i * d..(i + 1) * d].copy_from_slice(&full[i * sd + d..(i + 1) * sd]);
    }
    Ok((cloud_spread(&xs, d), cloud_spread(&vs, d)))
}

/// Extremal quantities of the n-th interval. With `velocity` set the
/// velocity components are measured instead of positions (second order).
pub fn interval_quantities(
    traj: &Trajectory,
    spec: IntervalSpec,
    n: usize,
    directions: &[Vec<f64>],
    velocity: bool,
) -> Result<IntervalQuantities, AnalysisError> {
    let (a, b) = spec.window(n);
    let grace = 1e-9 * (1.0 + traj.horizon().abs());
    if a < -traj.tau_max() - grace || b > traj.horizon() + grace {
        return Err(AnalysisError::OutOfRange {
            index: n,
            lo: a,
            hi: b,
        });
    }
    let a = a.max(-traj.tau_max());
    let b = b.min(traj.horizon());
    let ts = sample_times(traj, a, b);
    let n_agents = traj.n_agents();
    let d = traj.dim();
    let sd = traj.state_dim();
    let offset = if velocity { d } else { 0 };

    let mut full = vec![0.0; n_agents * sd];
    let mut pts: Vec<f64> = Vec::with_capacity(ts.len() * n_agents * d);
    for &t in &ts {
        traj.state_into(t, &mut full)?;
        for i in 0..n_agents {
            pts.extend_from_slice(&full[i * sd + offset..i * sd + offset + d]);
        }
    }
    let spread = cloud_spread(&pts, d);

    traj.state_into(b, &mut full)?;
    let mut dirs = Vec::with_capacity(directions.len());
    for v in directions {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for chunk in pts.chunks_exact(d) {
            let p: f64 = chunk.iter().zip(v).map(|(a, b)| a * b).sum();
            min = min.min(p);
            max = max.max(p);
        }
        let mut end_min = f64::INFINITY;
        let mut end_max = f64::NEG_INFINITY;
        for i in 0..n_agents {
            let block = &full[i * sd + offset..i * sd + offset + d];
            let p: f64 = block.iter().zip(v).map(|(a, b)| a * b).sum();
            end_min = end_min.min(p);
            end_max = end_max.max(p);
        }
        dirs.push(DirectionExtrema {
            min,
            max,
            end_min,
            end_max,
        });
    }
    Ok(IntervalQuantities {
        index: n,
        window: (a, b),
        spread,
        directions: dirs,
    })
}
