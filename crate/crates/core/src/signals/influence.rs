//! Influence functions: positive bounded continuous kernels weighting the
//! pairwise interaction, together with their derived constants (sup norm,
//! ball floor, running minimum, integral divergence class).

use super::SignalError;
use crate::ModelOrder;

/// Number of subdivisions used when minimizing a table family over an
/// interval. Analytic families are handled exactly.
const TABLE_MIN_GRID: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub enum InfluenceFamily {
    /// `phi(r) = k0`.
    Constant { k0: f64 },
    /// `phi(r) = k0 * (1 + r^2)^(-beta/2)`.
    RadialRational { k0: f64, beta: f64 },
    /// `phi(r) = k0 * exp(-lambda * r)`.
    RadialExponential { k0: f64, lambda: f64 },
    /// Piecewise-linear interpolation of `(radii, values)` samples, clamped
    /// to the last value beyond the sampled range.
    Table { radii: Vec<f64>, values: Vec<f64> },
}

/// Classification of the integral of the depth-powered running minimum of
/// the influence function over an infinite horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceClass {
    Diverges,
    Converges,
    Unknown,
}

/// An influence kernel. For first-order models the bivariate kernel is
/// radial: `psi(y, z) = phi(|y - z|)`; second-order models use `phi`
/// directly on the position separation.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceFunction {
    pub order: ModelOrder,
    pub family: InfluenceFamily,
}

impl InfluenceFunction {
    pub fn new(order: ModelOrder, family: InfluenceFamily) -> Result<Self, SignalError> {
        match &family {
            InfluenceFamily::Constant { k0 } => {
                if !(k0.is_finite() && *k0 > 0.0) {
                    return Err(SignalError::InvalidSpec(format!(
                        "constant influence needs k0 > 0, got {k0}"
                    )));
                }
            }
            InfluenceFamily::RadialRational { k0, beta } => {
                if !(k0.is_finite() && *k0 > 0.0) || !(beta.is_finite() && *beta >= 0.0) {
                    return Err(SignalError::InvalidSpec(format!(
                        "radial_rational needs k0 > 0 and beta >= 0, got k0 = {k0}, beta = {beta}"
                    )));
                }
            }
            InfluenceFamily::RadialExponential { k0, lambda } => {
                if !(k0.is_finite() && *k0 > 0.0) || !(lambda.is_finite() && *lambda >= 0.0) {
                    return Err(SignalError::InvalidSpec(format!(
                        "radial_exponential needs k0 > 0 and lambda >= 0, got k0 = {k0}, lambda = {lambda}"
                    )));
                }
            }
            InfluenceFamily::Table { radii, values } => {
                if radii.is_empty() || radii.len() != values.len() {
                    return Err(SignalError::InvalidSpec(format!(
                        "table needs matching nonempty radii/values, got {}/{}",
                        radii.len(),
                        values.len()
                    )));
                }
                if radii[0] != 0.0 {
                    return Err(SignalError::InvalidSpec(format!(
                        "table radii must start at 0, got {}",
                        radii[0]
                    )));
                }
                if radii.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(SignalError::InvalidSpec(
                        "table radii must be strictly increasing".into(),
                    ));
                }
                // Zero values are accepted here; they surface later as
                // NonPositiveFloor when a floor constant is requested.
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(SignalError::InvalidSpec(
                        "table values must be finite and nonnegative".into(),
                    ));
                }
            }
        }
        Ok(InfluenceFunction { order, family })
    }

    /// Radial profile `phi(r)`, `r >= 0`.
    pub fn eval_radial(&self, r: f64) -> f64 {
        match &self.family {
            InfluenceFamily::Constant { k0 } => *k0,
            InfluenceFamily::RadialRational { k0, beta } => {
                k0 * (1.0 + r * r).powf(-beta / 2.0)
            }
            InfluenceFamily::RadialExponential { k0, lambda } => k0 * (-lambda * r).exp(),
            InfluenceFamily::Table { radii, values } => {
                if r <= radii[0] {
                    return values[0];
                }
                let last = radii.len() - 1;
                if r >= radii[last] {
                    return values[last];
                }
                let k = radii.partition_point(|&b| b <= r) - 1;
                let w = (r - radii[k]) / (radii[k + 1] - radii[k]);
                values[k] + w * (values[k + 1] - values[k])
            }
        }
    }

    /// Bivariate first-order kernel on the separation of the two states.
    pub fn eval_pair(&self, y: &[f64], z: &[f64]) -> f64 {
        let r = y
            .iter()
            .zip(z)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        self.eval_radial(r)
    }

    /// Sup norm over the whole domain. All analytic families peak at zero
    /// separation; for tables the piecewise-linear maximum sits at a sample.
    pub fn sup_norm(&self) -> f64 {
        match &self.family {
            InfluenceFamily::Constant { k0 }
            | InfluenceFamily::RadialRational { k0, .. }
            | InfluenceFamily::RadialExponential { k0, .. } => *k0,
            InfluenceFamily::Table { values, .. } => {
                values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    /// Grid scan over `[0, hi]` including both endpoints. For tables the
    /// sample radii in range are scanned as well, which makes the minimum of
    /// the piecewise-linear interpolant exact.
    fn grid_min(&self, hi: f64) -> (f64, f64) {
        let mut best = self.eval_radial(0.0);
        let mut at = 0.0;
        let consider = |r: f64, best: &mut f64, at: &mut f64| {
            let v = self.eval_radial(r);
            if v < *best {
                *best = v;
                *at = r;
            }
        };
        for k in 0..=TABLE_MIN_GRID {
            consider(hi * (k as f64) / (TABLE_MIN_GRID as f64), &mut best, &mut at);
        }
        if let InfluenceFamily::Table { radii, .. } = &self.family {
            for &r in radii.iter().filter(|&&r| r <= hi) {
                consider(r, &mut best, &mut at);
            }
        }
        (best, at)
    }

    /// Minimum of the kernel over all state pairs inside the ball of radius
    /// `c0`, i.e. over separations in `[0, 2 c0]`. Exact for nonincreasing
    /// analytic families; a grid lower-bound estimate for tables.
    pub fn floor_over_ball(&self, c0: f64) -> Result<f64, SignalError> {
        if c0 < 0.0 {
            return Err(SignalError::InvalidSpec(format!(
                "ball radius must be nonnegative, got {c0}"
            )));
        }
        self.min_over_radii(2.0 * c0)
    }

    fn min_over_radii(&self, hi: f64) -> Result<f64, SignalError> {
        let (value, at) = match &self.family {
            InfluenceFamily::Constant { k0 } => (*k0, 0.0),
            InfluenceFamily::RadialRational { .. } | InfluenceFamily::RadialExponential { .. } => {
                (self.eval_radial(hi), hi)
            }
            InfluenceFamily::Table { .. } => self.grid_min(hi),
        };
        if value <= 0.0 {
            return Err(SignalError::NonPositiveFloor { value, at });
        }
        Ok(value)
    }

    /// Running minimum `min { phi(r) : r in [0, radius] }`. Exact for
    /// monotone families (value at the right endpoint); grid-based for
    /// tables. Unlike the floor constants this may legitimately reach zero.
    pub fn running_min(&self, radius: f64) -> f64 {
        let radius = radius.max(0.0);
        match &self.family {
            InfluenceFamily::Constant { k0 } => *k0,
            InfluenceFamily::RadialRational { .. } | InfluenceFamily::RadialExponential { .. } => {
                self.eval_radial(radius)
            }
            InfluenceFamily::Table { .. } => self.grid_min(radius).0,
        }
    }

    /// Whether the integral over `[0, inf)` of the depth-th power of the
    /// running minimum diverges.
    ///
    /// `constant` always diverges; `radial_rational` behaves like
    /// `t^(-beta*depth)`, so it diverges iff `beta * depth <= 1`;
    /// `radial_exponential` always converges; tables carry no asymptotic
    /// information.
    pub fn divergence_class(&self, depth: usize) -> DivergenceClass {
        match &self.family {
            InfluenceFamily::Constant { .. } => DivergenceClass::Diverges,
            InfluenceFamily::RadialRational { beta, .. } => {
                if beta * depth as f64 <= 1.0 {
                    DivergenceClass::Diverges
                } else {
                    DivergenceClass::Converges
                }
            }
            InfluenceFamily::RadialExponential { lambda, .. } => {
                if *lambda == 0.0 {
                    DivergenceClass::Diverges
                } else {
                    DivergenceClass::Converges
                }
            }
            InfluenceFamily::Table { .. } => DivergenceClass::Unknown,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match &self.family {
            InfluenceFamily::Constant { .. } => "constant",
            InfluenceFamily::RadialRational { .. } => "radial_rational",
            InfluenceFamily::RadialExponential { .. } => "radial_exponential",
            InfluenceFamily::Table { .. } => "table",
        }
    }
}
