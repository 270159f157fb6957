//! Empirical exponential-rate extraction.

use super::AnalysisError;

/// Least-squares slope of `log(value)` against `t`, negated: the empirical
/// exponential decay rate of a positive series.
pub fn fit_decay(series: &[(f64, f64)]) -> Result<f64, AnalysisError> {
    if series.len() < 3 {
        return Err(AnalysisError::TooFewSamples(series.len()));
    }
    for &(_, v) in series {
        if !(v > 0.0) {
            return Err(AnalysisError::NonPositiveValue(v));
        }
    }
    let n = series.len() as f64;
    let mean_t = series.iter().map(|&(t, _)| t).sum::<f64>() / n;
    let mean_l = series.iter().map(|&(_, v)| v.ln()).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(t, v) in series {
        let dt = t - mean_t;
        num += dt * (v.ln() - mean_l);
        den += dt * dt;
    }
    if den == 0.0 {
        return Err(AnalysisError::TooFewSamples(series.len()));
    }
    Ok(-num / den)
}
