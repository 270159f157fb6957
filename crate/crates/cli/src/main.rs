//! `alignsim`: simulate and verify delayed alignment dynamics on digraphs.
//!
//! Exit codes: 0 success, 2 configuration or hypothesis error, 3 runtime
//! error, 4 bound-check failure or degenerate constants.

mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use alignment_core::io::{self, ScenarioConfig};
use alignment_core::pipeline::{
    self, render_bounds, sig12, PipelineError, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_RUNTIME,
};

#[derive(Parser)]
#[command(
    name = "alignsim",
    version,
    about = "Simulation and verification of first/second-order alignment models with \
             pair-dependent delays and intermittent communication on digraphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write the trajectory plus run metadata.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the configured seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Integrate and check every certified inequality; exit 4 on failures.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the contraction slack coefficient (default 1e-6 of the
        /// initial spread).
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the theoretical constants without integrating.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Verify over a parameter grid and write a summary table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Grid specification, e.g. `tau=0,0.5,1;beta=0.5,1`. Parameters:
        /// tau, window, duty, beta, agents.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the summary of a previously written run bundle.
    Report {
        /// Path to a bundle.json produced by run/verify.
        bundle: PathBuf,
    },
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(io::IoError::from)?;
    let mut cfg = io::parse_config(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn print_summary(
    traj: &alignment_core::dynamics::Trajectory,
    scn: &alignment_core::dynamics::Scenario,
) -> Result<(), PipelineError> {
    for line in pipeline::summarize(traj, scn)? {
        match line.velocity_diameter {
            Some(dv) => println!(
                "t = {:>12.6}  position_diameter = {}  velocity_diameter = {}",
                line.t,
                sig12(line.position_diameter),
                sig12(dv)
            ),
            None => println!(
                "t = {:>12.6}  diameter = {}",
                line.t,
                sig12(line.position_diameter)
            ),
        }
    }
    Ok(())
}

fn cmd_run(config: &Path, out: &Path, seed: Option<u64>) -> Result<i32, PipelineError> {
    let started = Instant::now();
    let cfg = load_config(config, seed)?;
    let (scn, traj) = pipeline::run_scenario(&cfg)?;
    let written = pipeline::write_artifacts(&cfg, &traj, None, out, started)?;
    print_summary(&traj, &scn)?;
    println!("trajectory written to {}", written.trajectory_path.display());
    println!("bundle written to {}", written.bundle_path.display());
    Ok(0)
}

fn cmd_verify(
    config: &Path,
    out: &Path,
    tolerance: Option<f64>,
    seed: Option<u64>,
) -> Result<i32, PipelineError> {
    let started = Instant::now();
    let cfg = load_config(config, seed)?;
    let outcome = pipeline::verify_scenario(&cfg, tolerance)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    let written = pipeline::write_artifacts(
        &cfg,
        &outcome.trajectory,
        Some(&outcome.report),
        out,
        started,
    )?;
    print_summary(&outcome.trajectory, &outcome.scenario)?;
    for c in &outcome.report.checks {
        let status = match c.status {
            alignment_core::analysis::CheckStatus::Pass => "PASS",
            alignment_core::analysis::CheckStatus::Fail => "FAIL",
            alignment_core::analysis::CheckStatus::Skipped => "SKIP",
        };
        match c.margin {
            Some(m) => println!(
                "[{status}] {:<34} margin = {:+.6e}  tolerance = {:.1e}",
                c.id, m, c.tolerance
            ),
            None => println!(
                "[{status}] {:<34} {}",
                c.id,
                c.note.as_deref().unwrap_or("")
            ),
        }
    }
    println!("report written to {}", written.report_path.unwrap().display());
    if outcome.all_pass() {
        Ok(0)
    } else {
        Ok(EXIT_CHECK_FAILED)
    }
}

fn cmd_bounds(config: &Path, seed: Option<u64>) -> Result<i32, PipelineError> {
    let cfg = load_config(config, seed)?;
    let (output, warnings) = pipeline::bounds_constants(&cfg)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    print!("{}", render_bounds(&output));
    if let pipeline::BoundsOutput::First(c) = &output {
        if c.decay_rate.is_none() {
            return Ok(EXIT_CHECK_FAILED);
        }
    }
    Ok(0)
}

fn cmd_report(bundle: &Path) -> Result<i32, PipelineError> {
    let b = io::read_bundle(bundle)?;
    println!("tool_version   {}", b.tool_version);
    println!("config_hash    {}", b.config_hash);
    println!("wall_clock_ms  {}", b.wall_clock_ms);
    println!("trajectory     {}", b.trajectory_file);
    let dir = bundle.parent().unwrap_or_else(|| Path::new("."));
    if let Some(report_file) = &b.report_file {
        let report = io::read_report(&dir.join(report_file))?;
        println!("report         {report_file}");
        for w in &report.warnings {
            println!("warning        {w}");
        }
        if let Some(a) = &report.applicability {
            println!(
                "applicability  divergence = {:?}, certificate_applicable = {}",
                a.divergence, a.certificate_applicable
            );
        }
        if let Some(c) = &report.constants.first_order {
            println!("contraction_gain {}", sig12(c.contraction_gain));
            if let Some(r) = c.decay_rate {
                println!("decay_rate       {}", sig12(r));
            }
        }
        if let Some(c) = &report.constants.second_order {
            println!("contraction_scale {}", sig12(c.contraction_scale));
            if let Some(r) = c.velocity_decay_rate {
                println!("velocity_decay_rate {}", sig12(r));
            }
        }
        let mut failures = 0;
        for c in &report.checks {
            let status = match c.status {
                alignment_core::analysis::CheckStatus::Pass => "PASS",
                alignment_core::analysis::CheckStatus::Fail => {
                    failures += 1;
                    "FAIL"
                }
                alignment_core::analysis::CheckStatus::Skipped => "SKIP",
            };
            println!(
                "[{status}] {:<34} margin = {:?}  tolerance = {:.1e}",
                c.id, c.margin, c.tolerance
            );
        }
        if failures > 0 {
            return Ok(EXIT_CHECK_FAILED);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, out, seed } => cmd_run(config, out, *seed),
        Command::Verify {
            config,
            out,
            tolerance,
            seed,
        } => cmd_verify(config, out, *tolerance, *seed),
        Command::Bounds { config, seed } => cmd_bounds(config, *seed),
        Command::Sweep {
            config,
            grid,
            out,
            tolerance,
            seed,
        } => sweep::cmd_sweep(config, grid, out, *tolerance, *seed),
        Command::Report { bundle } => cmd_report(bundle),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            let code = err.exit_code();
            debug_assert!(code == EXIT_CONFIG || code == EXIT_RUNTIME || code == EXIT_CHECK_FAILED);
            ExitCode::from(code as u8)
        }
    }
}
