//! Persistence-excitation declarations and certification across all
//! connected pairs of a digraph.

use super::{SignalError, WeightSchedule};
use crate::topology::Digraph;

/// Declared persistence-excitation parameters: every connected pair's weight
/// must integrate to at least `level` over every window of length `window`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeDeclaration {
    pub window: f64,
    pub level: f64,
}

/// Certificate produced by [`verify_pe`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeWitness {
    pub window: f64,
    pub level: f64,
    /// Tightest window integral found over all connected pairs.
    pub margin: f64,
    /// Window starts were checked up to this time.
    pub verified_horizon: f64,
    /// True when every pair's schedule is periodic, so the bound holds for
    /// all window starts, not only those inside the horizon.
    pub certified_all_t: bool,
}

/// The normalization `level * sup_norm <= 1` assumed by the contraction
/// constants; callers warn when it fails.
pub fn normalization_holds(level: f64, sup_norm: f64) -> bool {
    level * sup_norm <= 1.0
}

/// Check the declared excitation level against every pair `(i, j)` with
/// `chi(i, j) = 1`, using exact window-integral minimization.
pub fn verify_pe(
    digraph: &Digraph,
    schedule_of: &dyn Fn(usize, usize) -> WeightSchedule,
    decl: PeDeclaration,
    horizon: f64,
) -> Result<PeWitness, SignalError> {
    if !(decl.window > 0.0) || !(decl.level > 0.0) {
        return Err(SignalError::InvalidSpec(format!(
            "persistence excitation needs positive window and level, got window = {}, level = {}",
            decl.window, decl.level
        )));
    }
    let n = digraph.n_agents();
    let mut tightest = f64::INFINITY;
    let mut certified = true;
    for i in 0..n {
        for j in 0..n {
            if i == j || digraph.chi(i, j) == 0 {
                continue;
            }
            let sched = schedule_of(i, j);
            let m = sched.pe_margin(decl.window, horizon)?;
            if m.value < decl.level {
                return Err(SignalError::PeViolation {
                    to: i,
                    from: j,
                    window_start: m.window_start,
                    margin: m.value,
                });
            }
            tightest = tightest.min(m.value);
            certified &= m.certified_all_t;
        }
    }
    Ok(PeWitness {
        window: decl.window,
        level: decl.level,
        margin: tightest,
        verified_horizon: horizon,
        certified_all_t: certified,
    })
}
