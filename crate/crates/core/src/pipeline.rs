//! Orchestration shared by the command-line tool and the acceptance suite:
//! hypothesis validation, simulation, constant computation, checking and
//! artifact writing, with a stable exit-code contract.

use std::path::Path;
use std::time::Instant;

use thiserror::Error;

use crate::analysis::{
    check_first_order, check_second_order, diameter, diameters_xv, direction_set, fit_decay,
    first_order_constants, second_order_constants, AnalysisError,
};
use crate::dynamics::{integrate, Scenario, ScenarioError, Trajectory};
use crate::io::{
    build_scenario, config_hash, serialize_config, write_bundle, write_report, write_trajectory,
    ApplicabilityNote, ConstantsBlock, IoError, Report, RunBundle, ScenarioConfig,
    DIRECTION_SEED_STREAM, REPORT_SCHEMA_VERSION,
};
use crate::io::derive_seed;
use crate::signals::{normalization_holds, verify_pe, DivergenceClass, PeWitness, SignalError};
use crate::ModelOrder;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit-code contract: 0 pass, 2 configuration or hypothesis error, 3
/// runtime error, 4 bound-check failure or degenerate constants.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Io(IoError::Io(_)) => EXIT_RUNTIME,
            PipelineError::Io(_) => EXIT_CONFIG,
            PipelineError::Hypothesis(_) => EXIT_CONFIG,
            PipelineError::Scenario(_) => EXIT_CONFIG,
            PipelineError::Signal(_) => EXIT_CONFIG,
            PipelineError::Analysis(AnalysisError::DegenerateContraction { .. }) => {
                EXIT_CHECK_FAILED
            }
            PipelineError::Analysis(AnalysisError::Signal(_)) => EXIT_CONFIG,
            PipelineError::Analysis(_) => EXIT_RUNTIME,
        }
    }
}

/// Validate the hypotheses behind the decay certificates. `check_pe`
/// additionally certifies the excitation level of every arc's schedule over
/// the simulation horizon plus one window (periodic schedules certify all
/// window starts).
pub fn validate_hypotheses(
    scn: &Scenario,
    check_pe: bool,
) -> Result<(Option<PeWitness>, Vec<String>), PipelineError> {
    if !scn.digraph().strongly_connected() {
        return Err(PipelineError::Hypothesis(
            "the interaction digraph must be strongly connected".into(),
        ));
    }
    let mut warnings = Vec::new();
    let mut witness = None;
    if check_pe {
        let pe = scn.pe().ok_or_else(|| {
            PipelineError::Hypothesis(
                "verification needs a persistence-excitation declaration ([pe] section)".into(),
            )
        })?;
        let horizon = scn.horizon() + pe.window;
        let w = verify_pe(
            scn.digraph(),
            &|i, j| scn.schedule(i, j).clone(),
            pe,
            horizon,
        )
        .map_err(|e| PipelineError::Hypothesis(e.to_string()))?;
        if !w.certified_all_t {
            warnings.push(format!(
                "persistence excitation certified only for window starts up to {:.3}; \
                 use periodic schedules for an unconditional certificate",
                w.verified_horizon - pe.window
            ));
        }
        let interval = scn.interval_length().ok_or_else(|| {
            PipelineError::Hypothesis("the interaction digraph must be strongly connected".into())
        })?;
        if scn.horizon() < interval {
            return Err(PipelineError::Hypothesis(format!(
                "bound checking needs horizon >= one contraction interval ({interval:.6}), got {}",
                scn.horizon()
            )));
        }
        if !normalization_holds(pe.level, scn.influence().sup_norm()) {
            warnings.push(format!(
                "normalization violated: excitation level {} times kernel sup {} exceeds 1; \
                 the contraction gain is not guaranteed to stay below 1",
                pe.level,
                scn.influence().sup_norm()
            ));
        }
        witness = Some(w);
    }
    if scn.order().is_second() {
        let class = scn.influence().divergence_class(scn.summary().depth);
        if class != DivergenceClass::Diverges {
            warnings.push(format!(
                "the kernel's running-minimum integral does not certify bounded spread \
                 (classification: {class:?}); the flocking certificate is checked against \
                 the empirical spread only"
            ));
        }
    }
    Ok((witness, warnings))
}

/// Outcome of a full verification: the trajectory, the constants-bearing
/// report and any warnings.
pub struct VerifyOutcome {
    pub scenario: Scenario,
    pub trajectory: Trajectory,
    pub report: Report,
    pub warnings: Vec<String>,
}

impl VerifyOutcome {
    pub fn all_pass(&self) -> bool {
        self.report.all_pass()
    }
}

/// Simulate without bound checking (the `run` command).
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<(Scenario, Trajectory), PipelineError> {
    let scn = build_scenario(cfg)?;
    validate_hypotheses(&scn, false)?;
    let traj = integrate(&scn)?;
    Ok((scn, traj))
}

/// Simulate and check every certified inequality (the `verify` command).
/// `slack_override` replaces the configured contraction slack coefficient.
pub fn verify_scenario(
    cfg: &ScenarioConfig,
    slack_override: Option<f64>,
) -> Result<VerifyOutcome, PipelineError> {
    let scn = build_scenario(cfg)?;
    let (_witness, mut warnings) = validate_hypotheses(&scn, true)?;
    let traj = integrate(&scn)?;
    if traj.meta.short_delay_steps > 0 {
        warnings.push(format!(
            "{} of {} steps contained delayed lookups shorter than the step size; those \
             steps used corrector passes over an extrapolated interpolant",
            traj.meta.short_delay_steps,
            traj.times().len() - 1
        ));
    }
    let mut tol = cfg.analysis.tolerances();
    if let Some(slack) = slack_override {
        tol.contraction_slack = slack;
    }
    let dirs = direction_set(
        cfg.dimension,
        cfg.analysis.directions,
        derive_seed(cfg.seed, DIRECTION_SEED_STREAM),
    );
    let (constants, checks, applicability) = match scn.order() {
        ModelOrder::First => {
            let consts = first_order_constants(&scn, tol.table_floor_slack)?;
            let report = check_first_order(
                &scn,
                &traj,
                &consts,
                &dirs,
                &tol,
                cfg.analysis.max_intervals,
            )?;
            (
                ConstantsBlock {
                    first_order: Some(consts),
                    second_order: None,
                },
                report,
                None,
            )
        }
        ModelOrder::Second => {
            let consts = second_order_constants(&scn, &traj, tol.table_floor_slack)?;
            let report = check_second_order(
                &scn,
                &traj,
                &consts,
                &dirs,
                &tol,
                cfg.analysis.max_intervals,
            )?;
            let class = scn.influence().divergence_class(scn.summary().depth);
            (
                ConstantsBlock {
                    first_order: None,
                    second_order: Some(consts),
                },
                report,
                Some(ApplicabilityNote {
                    divergence: class,
                    certificate_applicable: class == DivergenceClass::Diverges,
                }),
            )
        }
    };
    let report = Report {
        schema_version: REPORT_SCHEMA_VERSION,
        tool_version: TOOL_VERSION.into(),
        config_hash: config_hash(&serialize_config(cfg)),
        order: cfg.order,
        warnings: warnings.clone(),
        applicability,
        constants,
        checks: checks.checks,
    };
    Ok(VerifyOutcome {
        scenario: scn,
        trajectory: traj,
        report,
        warnings,
    })
}

/// Constants printable without integration (the `bounds` command). Second
/// order scenarios print the trajectory-free subset; interval gains and the
/// decay rate need a simulated spread, which `verify` supplies.
pub enum BoundsOutput {
    First(crate::analysis::FirstOrderConstants),
    SecondPartial {
        graph_depth: usize,
        interval_length: f64,
        influence_sup: f64,
        velocity_bound: f64,
        history_swing: f64,
        initial_velocity_spread: f64,
        contraction_scale: f64,
        divergence: DivergenceClass,
        normalization_ok: bool,
    },
}

pub fn bounds_constants(
    cfg: &ScenarioConfig,
) -> Result<(BoundsOutput, Vec<String>), PipelineError> {
    let scn = build_scenario(cfg)?;
    let (_w, warnings) = validate_hypotheses(&scn, false)?;
    let pe = scn.pe().ok_or_else(|| {
        PipelineError::Hypothesis(
            "bounds need a persistence-excitation declaration ([pe] section)".into(),
        )
    })?;
    let mut warnings = warnings;
    if !normalization_holds(pe.level, scn.influence().sup_norm()) {
        warnings.push(format!(
            "normalization violated: excitation level {} times kernel sup {} exceeds 1",
            pe.level,
            scn.influence().sup_norm()
        ));
    }
    match scn.order() {
        ModelOrder::First => {
            let consts = first_order_constants(&scn, cfg.analysis.table_floor_slack)?;
            Ok((BoundsOutput::First(consts), warnings))
        }
        ModelOrder::Second => {
            let vel = scn
                .vel_histories()
                .expect("second-order scenario always carries velocity histories");
            let depth = scn.summary().depth;
            Ok((
                BoundsOutput::SecondPartial {
                    graph_depth: depth,
                    interval_length: scn.interval_length().expect("validated strongly connected"),
                    influence_sup: scn.influence().sup_norm(),
                    velocity_bound: crate::analysis::history_radius(vel),
                    history_swing: crate::analysis::history_swing(scn.histories()),
                    initial_velocity_spread: crate::analysis::history_cloud_spread(vel),
                    contraction_scale: crate::analysis::contraction_scale(
                        scn.influence().sup_norm(),
                        depth,
                        pe.window,
                        scn.tau_max(),
                        pe.level,
                        scn.n_agents(),
                    ),
                    divergence: scn.influence().divergence_class(depth),
                    normalization_ok: normalization_holds(pe.level, scn.influence().sup_norm()),
                },
                warnings,
            ))
        }
    }
}

/// Diameter summary at contraction-interval endpoints (falling back to
/// horizon quarters without a PE declaration).
pub fn summary_times(scn: &Scenario) -> Vec<f64> {
    let horizon = scn.horizon();
    let mut ts = vec![0.0];
    match scn.interval_length() {
        Some(interval) if interval > 0.0 => {
            let mut t = interval;
            while t < horizon {
                ts.push(t);
                t += interval;
            }
        }
        _ => {
            for q in 1..4 {
                ts.push(horizon * q as f64 / 4.0);
            }
        }
    }
    if horizon > 0.0 {
        ts.push(horizon);
    }
    ts
}

pub struct SummaryLine {
    pub t: f64,
    pub position_diameter: f64,
    pub velocity_diameter: Option<f64>,
}

pub fn summarize(traj: &Trajectory, scn: &Scenario) -> Result<Vec<SummaryLine>, PipelineError> {
    let mut out = Vec::new();
    for t in summary_times(scn) {
        let line = match traj.order() {
            ModelOrder::First => SummaryLine {
                t,
                position_diameter: diameter(traj, t)?,
                velocity_diameter: None,
            },
            ModelOrder::Second => {
                let (dx, dv) = diameters_xv(traj, t)?;
                SummaryLine {
                    t,
                    position_diameter: dx,
                    velocity_diameter: Some(dv),
                }
            }
        };
        out.push(line);
    }
    Ok(out)
}

/// Empirical decay rate of the relevant diameter over the tail
/// `[interval_length, horizon]`, for sweep tables.
pub fn empirical_rate(scn: &Scenario, traj: &Trajectory) -> Result<f64, PipelineError> {
    let from = scn.interval_length().unwrap_or(0.0);
    let mut series = Vec::new();
    for &t in traj.times() {
        if t < from {
            continue;
        }
        let v = match traj.order() {
            ModelOrder::First => diameter(traj, t)?,
            ModelOrder::Second => diameters_xv(traj, t)?.1,
        };
        series.push((t, v));
    }
    Ok(fit_decay(&series)?)
}

/// Artifacts written by `run`/`verify`: trajectory, optional report, and a
/// bundle with the exact configuration snapshot.
pub struct WrittenBundle {
    pub bundle_path: std::path::PathBuf,
    pub trajectory_path: std::path::PathBuf,
    pub report_path: Option<std::path::PathBuf>,
}

pub fn write_artifacts(
    cfg: &ScenarioConfig,
    traj: &Trajectory,
    report: Option<&Report>,
    out_dir: &Path,
    started: Instant,
) -> Result<WrittenBundle, PipelineError> {
    std::fs::create_dir_all(out_dir).map_err(IoError::from)?;
    let trajectory_path = out_dir.join("trajectory.csv");
    write_trajectory(traj, &trajectory_path)?;
    let report_path = match report {
        Some(r) => {
            let p = out_dir.join("report.json");
            write_report(r, &p)?;
            Some(p)
        }
        None => None,
    };
    let canonical = serialize_config(cfg);
    let bundle = RunBundle {
        schema_version: REPORT_SCHEMA_VERSION,
        tool_version: TOOL_VERSION.into(),
        config_hash: config_hash(&canonical),
        config: canonical,
        trajectory_file: "trajectory.csv".into(),
        report_file: report_path.as_ref().map(|_| "report.json".into()),
        wall_clock_ms: started.elapsed().as_millis() as u64,
    };
    let bundle_path = out_dir.join("bundle.json");
    write_bundle(&bundle, &bundle_path)?;
    Ok(WrittenBundle {
        bundle_path,
        trajectory_path,
        report_path,
    })
}

/// Format a number with 12 significant digits for constant printouts.
pub fn sig12(v: f64) -> String {
    format!("{v:.11e}")
}

pub fn render_bounds(output: &BoundsOutput) -> String {
    let mut s = String::new();
    match output {
        BoundsOutput::First(c) => {
            s.push_str("order               first\n");
            s.push_str(&format!("agents              {}\n", c.n_agents));
            s.push_str(&format!("graph_depth         {}\n", c.graph_depth));
            s.push_str(&format!("interval_length     {}\n", sig12(c.interval_length)));
            s.push_str(&format!("influence_sup       {}\n", sig12(c.influence_sup)));
            s.push_str(&format!("influence_floor     {}\n", sig12(c.influence_floor)));
            s.push_str(&format!("state_bound         {}\n", sig12(c.state_bound)));
            s.push_str(&format!("initial_spread      {}\n", sig12(c.initial_spread)));
            s.push_str(&format!("contraction_gain    {}\n", sig12(c.contraction_gain)));
            match c.decay_rate {
                Some(r) => s.push_str(&format!("decay_rate          {}\n", sig12(r))),
                None => s.push_str("decay_rate          degenerate (gain outside (0, 1))\n"),
            }
            s.push_str(&format!("normalization_ok    {}\n", c.normalization_ok));
        }
        BoundsOutput::SecondPartial {
            graph_depth,
            interval_length,
            influence_sup,
            velocity_bound,
            history_swing,
            initial_velocity_spread,
            contraction_scale,
            divergence,
            normalization_ok,
        } => {
            s.push_str("order               second\n");
            s.push_str(&format!("graph_depth         {graph_depth}\n"));
            s.push_str(&format!("interval_length     {}\n", sig12(*interval_length)));
            s.push_str(&format!("influence_sup       {}\n", sig12(*influence_sup)));
            s.push_str(&format!("velocity_bound      {}\n", sig12(*velocity_bound)));
            s.push_str(&format!("history_swing       {}\n", sig12(*history_swing)));
            s.push_str(&format!(
                "initial_velocity_spread {}\n",
                sig12(*initial_velocity_spread)
            ));
            s.push_str(&format!("contraction_scale   {}\n", sig12(*contraction_scale)));
            s.push_str(&format!("divergence_class    {divergence:?}\n"));
            s.push_str(&format!("normalization_ok    {normalization_ok}\n"));
            s.push_str(
                "interval gains, spread bound and decay rate need a trajectory: run `verify`\n",
            );
        }
    }
    s
}

/// Convenience used by tests and the sweep: verify and report whether every
/// check passed, separating check failure from pipeline errors.
pub fn verify_passes(cfg: &ScenarioConfig) -> Result<(VerifyOutcome, bool), PipelineError> {
    let outcome = verify_scenario(cfg, None)?;
    let ok = outcome.all_pass();
    Ok((outcome, ok))
}
