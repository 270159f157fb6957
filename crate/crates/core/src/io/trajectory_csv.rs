//! Trajectory CSV persistence.
//!
//! One row per (time, agent): `t,agent,component_0..component_{d-1}` plus
//! `v_component_*` columns for second-order runs. Times are fixed-point
//! decimals with 12 significant digits; state values use the shortest exact
//! representation so they round-trip bit-for-bit. Rows at negative times
//! carry the history samples.

use std::fs;
use std::path::Path;

use super::IoError;
use crate::dynamics::{
    rederive_derivatives, AgentHistory, HistoryShape, Scenario, Trajectory,
};

/// Fixed-point decimal with 12 significant digits.
fn format_time(t: f64) -> String {
    if t == 0.0 {
        return "0".into();
    }
    let exp = t.abs().log10().floor() as i32;
    let prec = (11 - exp).clamp(0, 30) as usize;
    format!("{t:.prec$}")
}

fn format_value(v: f64) -> String {
    format!("{v:e}")
}

/// Write the trajectory (history samples at negative times, then every grid
/// node) to `path`.
pub fn write_trajectory(traj: &Trajectory, path: &Path) -> Result<(), IoError> {
    let d = traj.dim();
    let second = traj.order().is_second();
    let mut header = String::from("t,agent");
    for c in 0..d {
        header.push_str(&format!(",component_{c}"));
    }
    if second {
        for c in 0..d {
            header.push_str(&format!(",v_component_{c}"));
        }
    }
    let mut out = header;
    out.push('\n');
    let sd = traj.state_dim();
    let n = traj.n_agents();
    let mut full = vec![0.0; n * sd];
    let mut times = traj.history_sample_times();
    times.extend_from_slice(traj.times());
    for t in times {
        traj.state_into(t, &mut full)
            .map_err(|e| IoError::Invalid(e.to_string()))?;
        let ts = format_time(t);
        for (i, block) in full.chunks_exact(sd).enumerate() {
            out.push_str(&ts);
            out.push(',');
            out.push_str(&i.to_string());
            for v in block {
                out.push(',');
                out.push_str(&format_value(*v));
            }
            out.push('\n');
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Read a trajectory produced by [`write_trajectory`] (or by an external
/// tool following the same format), rebuilding histories from the
/// negative-time rows and re-deriving dense-output derivatives from the
/// scenario's right-hand side.
pub fn read_trajectory(path: &Path, scn: &Scenario) -> Result<Trajectory, IoError> {
    let text = fs::read_to_string(path)?;
    let n = scn.n_agents();
    let d = scn.dim();
    let sd = scn.state_dim();
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(IoError::Format {
        line: 1,
        message: "empty file".into(),
    })?;
    let expected_cols = 2 + sd;
    if header.split(',').count() != expected_cols {
        return Err(IoError::Format {
            line: 1,
            message: format!(
                "header has {} columns, expected {expected_cols}",
                header.split(',').count()
            ),
        });
    }

    // (time, per-agent state blocks)
    let mut blocks: Vec<(f64, Vec<f64>)> = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected_cols {
            return Err(IoError::Format {
                line: lineno,
                message: format!("row has {} columns, expected {expected_cols}", fields.len()),
            });
        }
        let parse = |s: &str| -> Result<f64, IoError> {
            s.trim().parse::<f64>().map_err(|e| IoError::Format {
                line: lineno,
                message: format!("bad number `{s}`: {e}"),
            })
        };
        let t = parse(fields[0])?;
        let agent: usize = fields[1].trim().parse().map_err(|_| IoError::Format {
            line: lineno,
            message: format!("bad agent index `{}`", fields[1]),
        })?;
        if agent >= n {
            return Err(IoError::Format {
                line: lineno,
                message: format!("agent index {agent} out of range (n = {n})"),
            });
        }
        if agent == 0 {
            blocks.push((t, vec![0.0; n * sd]));
        }
        let (bt, row) = blocks.last_mut().ok_or(IoError::Format {
            line: lineno,
            message: "rows must start with agent 0".into(),
        })?;
        if *bt != t {
            return Err(IoError::Format {
                line: lineno,
                message: format!("agent {agent} carries time {t}, block has {bt}"),
            });
        }
        for c in 0..sd {
            row[agent * sd + c] = parse(fields[2 + c])?;
        }
    }

    let mut hist_rows: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut times: Vec<f64> = Vec::new();
    let mut states: Vec<Vec<f64>> = Vec::new();
    for (t, row) in blocks {
        if t < 0.0 {
            hist_rows.push((t, row));
        } else {
            times.push(t);
            states.push(row);
        }
    }
    if times.is_empty() {
        return Err(IoError::Format {
            line: 1,
            message: "no rows at nonnegative times".into(),
        });
    }

    let tau = scn.tau_max();
    let build_histories = |offset: usize| -> Result<Vec<AgentHistory>, IoError> {
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let shape = if hist_rows.is_empty() {
                HistoryShape::Constant {
                    point: states[0][i * sd + offset..i * sd + offset + d].to_vec(),
                }
            } else {
                let mut ts: Vec<f64> = hist_rows.iter().map(|(t, _)| *t).collect();
                let mut vals: Vec<Vec<f64>> = hist_rows
                    .iter()
                    .map(|(_, row)| row[i * sd + offset..i * sd + offset + d].to_vec())
                    .collect();
                ts.push(0.0);
                vals.push(states[0][i * sd + offset..i * sd + offset + d].to_vec());
                HistoryShape::Sampled {
                    times: ts,
                    values: vals,
                }
            };
            out.push(
                AgentHistory::new(tau, d, shape).map_err(|e| IoError::Invalid(e.to_string()))?,
            );
        }
        Ok(out)
    };
    let histories = build_histories(0)?;
    let vel_histories = if scn.order().is_second() {
        Some(build_histories(d)?)
    } else {
        None
    };
    rederive_derivatives(scn, times, states, histories, vel_histories)
        .map_err(|e| IoError::Invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_formatting_has_twelve_significant_digits() {
        assert_eq!(format_time(0.0), "0");
        assert_eq!(format_time(0.5), "0.500000000000");
        assert_eq!(format_time(12.0), "12.0000000000");
        assert_eq!(format_time(-0.004), "-0.00400000000000");
        // idempotent through a parse cycle
        let t = 1.2345678901234567;
        let s = format_time(t);
        assert_eq!(format_time(s.parse::<f64>().unwrap()), s);
    }

    #[test]
    fn values_round_trip_exactly() {
        for v in [1.0 / 3.0, -2.7182818284590455e-13, 0.1 + 0.2, 1e300] {
            let s = format_value(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }
}
