//! Continuous initial histories on `[-tau, 0]`.

use super::ScenarioError;

/// Shape of one agent's history curve.
#[derive(Debug, Clone, PartialEq)]
pub enum HistoryShape {
    Constant { point: Vec<f64> },
    /// Linear from `from` at `-tau` to `to` at `0`.
    Linear { from: Vec<f64>, to: Vec<f64> },
    /// Piecewise-linear through `(times, values)` samples spanning
    /// `[-tau, 0]`.
    Sampled { times: Vec<f64>, values: Vec<Vec<f64>> },
}

/// One agent's continuous history on `[-tau, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentHistory {
    tau: f64,
    dim: usize,
    shape: HistoryShape,
}

impl AgentHistory {
    pub fn new(tau: f64, dim: usize, shape: HistoryShape) -> Result<Self, ScenarioError> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(ScenarioError::InvalidHistory(format!(
                "history span must be finite and nonnegative, got {tau}"
            )));
        }
        match &shape {
            HistoryShape::Constant { point } => {
                if point.len() != dim {
                    return Err(ScenarioError::InvalidHistory(format!(
                        "constant history has dimension {}, expected {dim}",
                        point.len()
                    )));
                }
            }
            HistoryShape::Linear { from, to } => {
                if from.len() != dim || to.len() != dim {
                    return Err(ScenarioError::InvalidHistory(format!(
                        "linear history has dimensions {}/{}, expected {dim}",
                        from.len(),
                        to.len()
                    )));
                }
            }
            HistoryShape::Sampled { times, values } => {
                if times.len() != values.len() || times.is_empty() {
                    return Err(ScenarioError::InvalidHistory(
                        "sampled history needs matching nonempty times/values".into(),
                    ));
                }
                if values.iter().any(|v| v.len() != dim) {
                    return Err(ScenarioError::InvalidHistory(format!(
                        "sampled history value dimension mismatch, expected {dim}"
                    )));
                }
                if times.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(ScenarioError::InvalidHistory(
                        "sampled history times must be strictly increasing".into(),
                    ));
                }
                let eps = 1e-12 * (1.0 + tau);
                if (times[0] + tau).abs() > eps || times.last().unwrap().abs() > eps {
                    return Err(ScenarioError::InvalidHistory(format!(
                        "sampled history must span [-{tau}, 0], got [{}, {}]",
                        times[0],
                        times.last().unwrap()
                    )));
                }
            }
        }
        Ok(AgentHistory { tau, dim, shape })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn shape(&self) -> &HistoryShape {
        &self.shape
    }

    /// Evaluate at `s` in `[-tau, 0]`. Values slightly outside are clamped,
    /// callers guarantee the domain up to rounding.
    pub fn eval_into(&self, s: f64, out: &mut [f64]) {
        let s = s.clamp(-self.tau, 0.0);
        self.eval_unchecked(s, out);
    }

    /// Evaluate the history's natural extension at `s > 0`: constant
    /// histories stay constant, linear ones extend their line, sampled ones
    /// extend the last segment.
    pub fn eval_extended_into(&self, s: f64, out: &mut [f64]) {
        if s <= 0.0 {
            self.eval_into(s, out);
        } else {
            self.eval_unchecked(s, out);
        }
    }

    fn eval_unchecked(&self, s: f64, out: &mut [f64]) {
        match &self.shape {
            HistoryShape::Constant { point } => out.copy_from_slice(point),
            HistoryShape::Linear { from, to } => {
                if self.tau == 0.0 {
                    out.copy_from_slice(to);
                } else {
                    let w = (s + self.tau) / self.tau;
                    for (o, (a, b)) in out.iter_mut().zip(from.iter().zip(to)) {
                        *o = a + w * (b - a);
                    }
                }
            }
            HistoryShape::Sampled { times, values } => {
                let m = times.len();
                if m == 1 {
                    out.copy_from_slice(&values[0]);
                    return;
                }
                // segment index, extending the first/last segment outward
                let k = if s <= times[0] {
                    0
                } else if s >= times[m - 1] {
                    m - 2
                } else {
                    times.partition_point(|&b| b <= s) - 1
                };
                let w = (s - times[k]) / (times[k + 1] - times[k]);
                for (idx, o) in out.iter_mut().enumerate() {
                    *o = values[k][idx] + w * (values[k + 1][idx] - values[k][idx]);
                }
            }
        }
    }

    /// Times at which extrema of this history (and of norms/projections of
    /// it) are attained: the curve is piecewise linear, so its nodes.
    pub fn nodes(&self) -> Vec<f64> {
        match &self.shape {
            HistoryShape::Constant { .. } | HistoryShape::Linear { .. } => {
                if self.tau == 0.0 {
                    vec![0.0]
                } else {
                    vec![-self.tau, 0.0]
                }
            }
            HistoryShape::Sampled { times, .. } => times.clone(),
        }
    }
}
