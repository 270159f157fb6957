//! Parameter sweeps: one verification per grid cell, results in a CSV
//! table, per-cell artifacts in their own directories.

use std::path::Path;

use alignment_core::io::{self, ScenarioConfig, ScheduleConfig};
use alignment_core::pipeline::{self, PipelineError, EXIT_CHECK_FAILED};

const MAX_CELLS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Param {
    Tau,
    Window,
    Duty,
    Beta,
    Agents,
}

impl Param {
    fn parse(name: &str) -> Result<Self, PipelineError> {
        match name {
            "tau" => Ok(Param::Tau),
            "window" => Ok(Param::Window),
            "duty" => Ok(Param::Duty),
            "beta" => Ok(Param::Beta),
            "agents" => Ok(Param::Agents),
            other => Err(PipelineError::Io(io::IoError::Invalid(format!(
                "unknown sweep parameter `{other}`; expected tau, window, duty, beta or agents"
            )))),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Param::Tau => "tau",
            Param::Window => "window",
            Param::Duty => "duty",
            Param::Beta => "beta",
            Param::Agents => "agents",
        }
    }
}

fn parse_grid(spec: &str) -> Result<Vec<(Param, Vec<f64>)>, PipelineError> {
    let mut axes = Vec::new();
    for part in spec.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (name, values) = part.split_once('=').ok_or_else(|| {
            PipelineError::Io(io::IoError::Invalid(format!(
                "bad grid axis `{part}`; expected name=v1,v2,..."
            )))
        })?;
        let param = Param::parse(name.trim())?;
        let mut vals = Vec::new();
        for v in values.split(',') {
            let v = v.trim();
            vals.push(v.parse::<f64>().map_err(|e| {
                PipelineError::Io(io::IoError::Invalid(format!("bad grid value `{v}`: {e}")))
            })?);
        }
        if vals.is_empty() {
            return Err(PipelineError::Io(io::IoError::Invalid(format!(
                "grid axis `{name}` has no values"
            ))));
        }
        axes.push((param, vals));
    }
    if axes.is_empty() {
        return Err(PipelineError::Io(io::IoError::Invalid(
            "empty grid specification".into(),
        )));
    }
    let cells: usize = axes.iter().map(|(_, v)| v.len()).product();
    if cells > MAX_CELLS {
        return Err(PipelineError::Io(io::IoError::Invalid(format!(
            "grid has {cells} cells, maximum is {MAX_CELLS}"
        ))));
    }
    Ok(axes)
}

fn apply_override(
    cfg: &mut ScenarioConfig,
    param: Param,
    value: f64,
) -> Result<(), PipelineError> {
    let invalid = |msg: String| PipelineError::Io(io::IoError::Invalid(msg));
    match param {
        Param::Tau => {
            cfg.delay.tau_max = value;
            cfg.delay.default =
                io::DelaySpecConfig::Constant(io::ConstantDelay { value });
            cfg.delay.pairs.clear();
        }
        Param::Window => {
            let pe = cfg
                .pe
                .as_mut()
                .ok_or_else(|| invalid("window sweep needs a [pe] section".into()))?;
            pe.window = value;
        }
        Param::Duty => {
            if !(value > 0.0 && value <= 1.0) {
                return Err(invalid(format!("duty must lie in (0, 1], got {value}")));
            }
            let pe = cfg
                .pe
                .as_mut()
                .ok_or_else(|| invalid("duty sweep needs a [pe] section".into()))?;
            let period = pe.window;
            cfg.weights.pairs.clear();
            if value >= 1.0 {
                cfg.weights.default =
                    ScheduleConfig::Constant(io::ConstantSchedule { value: 1.0 });
            } else {
                cfg.weights.default = ScheduleConfig::Blink(io::BlinkSchedule {
                    on: value * period,
                    period,
                });
            }
            // every window of one period integrates to exactly the on-time
            pe.level = value * period * (1.0 - 1e-9);
        }
        Param::Beta => match &mut cfg.influence {
            io::InfluenceConfig::RadialRational(r) => r.beta = value,
            _ => {
                return Err(invalid(
                    "beta sweep needs a radial_rational influence family".into(),
                ))
            }
        },
        Param::Agents => {
            let n = value as usize;
            if n as f64 != value || n < 2 {
                return Err(invalid(format!("agents must be an integer >= 2, got {value}")));
            }
            if matches!(cfg.topology, io::TopologyConfig::Custom(_)) {
                return Err(invalid(
                    "agents sweep cannot resize a custom adjacency matrix".into(),
                ));
            }
            if matches!(cfg.histories, io::HistoriesConfig::Explicit(_)) {
                return Err(invalid(
                    "agents sweep needs seeded random histories".into(),
                ));
            }
            cfg.n_agents = n;
        }
    }
    Ok(())
}

pub fn cmd_sweep(
    config: &Path,
    grid: &str,
    out: &Path,
    tolerance: Option<f64>,
    seed: Option<u64>,
) -> Result<i32, PipelineError> {
    let text = std::fs::read_to_string(config).map_err(io::IoError::from)?;
    let mut base = io::parse_config(&text)?;
    if let Some(s) = seed {
        base.seed = s;
    }
    let axes = parse_grid(grid)?;
    std::fs::create_dir_all(out).map_err(io::IoError::from)?;

    let mut header = String::from("cell");
    for (p, _) in &axes {
        header.push(',');
        header.push_str(p.name());
    }
    header.push_str(",empirical_rate,certified_rate,status,note\n");
    let mut table = header;

    let cells: Vec<Vec<usize>> = cartesian(&axes.iter().map(|(_, v)| v.len()).collect::<Vec<_>>());
    let mut any_fail = false;
    let mut any_error = false;
    for (cell_idx, combo) in cells.iter().enumerate() {
        let mut cfg = base.clone();
        // deterministic per-cell seed so cells are order-independent;
        // masked to 63 bits to stay serializable as a TOML integer
        cfg.seed = io::derive_seed(base.seed, 0x5EED ^ cell_idx as u64) & (u64::MAX >> 1);
        let mut row = format!("{cell_idx}");
        let mut cell_err: Option<String> = None;
        for (axis, &vi) in axes.iter().zip(combo) {
            let value = axis.1[vi];
            row.push_str(&format!(",{value}"));
            if cell_err.is_none() {
                if let Err(e) = apply_override(&mut cfg, axis.0, value) {
                    cell_err = Some(e.to_string());
                }
            }
        }
        match cell_err {
            Some(msg) => {
                any_error = true;
                table.push_str(&format!("{row},,,error,\"{msg}\"\n"));
                continue;
            }
            None => {}
        }
        match pipeline::verify_scenario(&cfg, tolerance) {
            Ok(outcome) => {
                let cell_dir = out.join(format!("cell_{cell_idx:04}"));
                std::fs::create_dir_all(&cell_dir).map_err(io::IoError::from)?;
                io::write_report(&outcome.report, &cell_dir.join("report.json"))?;
                let empirical = pipeline::empirical_rate(&outcome.scenario, &outcome.trajectory)
                    .map(|r| format!("{r:.6e}"))
                    .unwrap_or_default();
                let certified = outcome
                    .report
                    .constants
                    .first_order
                    .as_ref()
                    .and_then(|c| c.decay_rate)
                    .or_else(|| {
                        outcome
                            .report
                            .constants
                            .second_order
                            .as_ref()
                            .and_then(|c| c.velocity_decay_rate)
                    })
                    .map(|r| format!("{r:.6e}"))
                    .unwrap_or_default();
                let status = if outcome.all_pass() {
                    "pass"
                } else {
                    any_fail = true;
                    "fail"
                };
                table.push_str(&format!("{row},{empirical},{certified},{status},\n"));
            }
            Err(e) => {
                any_error = true;
                table.push_str(&format!("{row},,,error,\"{e}\"\n"));
            }
        }
    }
    let table_path = out.join("sweep.csv");
    std::fs::write(&table_path, table).map_err(io::IoError::from)?;
    println!("sweep table written to {}", table_path.display());
    if any_error {
        Ok(pipeline::EXIT_RUNTIME)
    } else if any_fail {
        Ok(EXIT_CHECK_FAILED)
    } else {
        Ok(0)
    }
}

fn cartesian(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![vec![]];
    for &s in sizes {
        let mut next = Vec::with_capacity(out.len() * s);
        for combo in &out {
            for v in 0..s {
                let mut c = combo.clone();
                c.push(v);
                next.push(c);
            }
        }
        out = next;
    }
    out
}
