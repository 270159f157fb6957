//! Acceptance suite: one test per criterion, each printing a pass line with
//! its measured numbers. Run with `cargo test --test acceptance -- --nocapture`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use alignment_core::analysis::{diameter, diameters_xv, CheckStatus};
use alignment_core::dynamics::integrate;
use alignment_core::io::{
    build_scenario, parse_config, serialize_config, AgentHistoryConfig, AnalysisConfig,
    ConstantDelay, ConstantHistory, ConstantInfluence, DelayConfig, DelaySpecConfig,
    ExplicitHistories, HistoriesConfig, HistoryShapeConfig, InfluenceConfig, IntegratorConfig,
    NoParams, PiecewiseSchedule, RadialRationalInfluence, RandomHistories, RandomTopology,
    ScenarioConfig, ScheduleConfig, SinusoidDelay, TopologyConfig, WeightsConfig,
};
use alignment_core::pipeline::{empirical_rate, verify_scenario, write_artifacts};
use alignment_core::signals::{Extent, PeDeclaration, WeightSchedule};
use alignment_core::topology::Digraph;
use alignment_core::ModelOrder;

/// Pointwise lemma checks pinned at the interpolation tolerance.
const LEMMA_CHECKS: &[&str] = &[
    "state_bound",
    "projection_containment",
    "velocity_bound",
    "velocity_projection_containment",
];
const LEMMA_TOL: f64 = 1e-9;

fn two_agent_config(order: ModelOrder, step: f64, horizon: f64) -> ScenarioConfig {
    let velocity = |p: f64| HistoryShapeConfig::Constant(ConstantHistory { point: vec![p] });
    let agents = match order {
        ModelOrder::First => vec![
            AgentHistoryConfig {
                position: velocity(0.0),
                velocity: None,
            },
            AgentHistoryConfig {
                position: velocity(1.0),
                velocity: None,
            },
        ],
        ModelOrder::Second => vec![
            AgentHistoryConfig {
                position: velocity(0.0),
                velocity: Some(velocity(-0.5)),
            },
            AgentHistoryConfig {
                position: velocity(0.0),
                velocity: Some(velocity(0.5)),
            },
        ],
    };
    ScenarioConfig {
        schema_version: 1,
        order,
        n_agents: 2,
        dimension: 1,
        seed: 0,
        topology: TopologyConfig::Complete(NoParams {}),
        delay: DelayConfig::default(),
        weights: WeightsConfig::default(),
        pe: Some(PeDeclaration {
            window: 1.0,
            level: 1.0,
        }),
        influence: InfluenceConfig::Constant(ConstantInfluence { k0: 1.0 }),
        histories: HistoriesConfig::Explicit(ExplicitHistories { agents }),
        integrator: IntegratorConfig {
            step: Some(step),
            horizon,
        },
        analysis: AnalysisConfig::default(),
    }
}

/// Max error of the simulated two-agent gap against `e^{-2t}`.
fn two_agent_gap_error(order: ModelOrder, step: f64, horizon: f64) -> f64 {
    let cfg = two_agent_config(order, step, horizon);
    let scn = build_scenario(&cfg).unwrap();
    let traj = integrate(&scn).unwrap();
    let mut worst = 0.0f64;
    for &t in &[0.5, 1.0, 2.0] {
        let gap = match order {
            ModelOrder::First => diameter(&traj, t).unwrap(),
            ModelOrder::Second => diameters_xv(&traj, t).unwrap().1,
        };
        worst = worst.max((gap - (-2.0 * t).exp()).abs());
    }
    worst
}

#[test]
fn criterion_1_first_order_closed_form() {
    let started = Instant::now();
    let err = two_agent_gap_error(ModelOrder::First, 1e-3, 2.5);
    let elapsed = started.elapsed();
    assert!(err < 1e-6, "gap error {err}");
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "[criterion 1] PASS first-order closed form: max error {err:.3e} (tol 1e-6), {:.0} ms",
        elapsed.as_secs_f64() * 1e3
    );
}

#[test]
fn criterion_2_second_order_closed_form() {
    let started = Instant::now();
    let horizon = 6.0;
    let err = two_agent_gap_error(ModelOrder::Second, 1e-3, horizon);
    assert!(err < 1e-6, "velocity gap error {err}");
    // position spread must stabilize: compare the sup over the full horizon
    // with the sup up to three quarters of it
    let cfg = two_agent_config(ModelOrder::Second, 1e-3, horizon);
    let scn = build_scenario(&cfg).unwrap();
    let traj = integrate(&scn).unwrap();
    let mut sup_full = 0.0f64;
    let mut sup_head = 0.0f64;
    for &t in traj.times() {
        let dx = diameters_xv(&traj, t).unwrap().0;
        sup_full = sup_full.max(dx);
        if t <= horizon * 0.75 {
            sup_head = sup_head.max(dx);
        }
    }
    let growth = (sup_full - sup_head) / sup_full;
    assert!(growth <= 1e-3, "late spread growth {growth}");
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "[criterion 2] PASS second-order closed form: max velocity error {err:.3e}, \
         late spread growth {growth:.3e}, {:.0} ms",
        elapsed.as_secs_f64() * 1e3
    );
}

/// Periodic on/off telegraph over `slots` equal slots of one window; every
/// full-window integral is exactly `on_slots * window / slots`.
fn telegraph_schedule(
    rng: &mut ChaCha8Rng,
    window: f64,
    slots: usize,
    min_on: usize,
) -> (ScheduleConfig, f64) {
    let on_slots = rng.gen_range(min_on..=slots - 1);
    let mut on = vec![false; slots];
    let mut placed = 0;
    while placed < on_slots {
        let k = rng.gen_range(0..slots);
        if !on[k] {
            on[k] = true;
            placed += 1;
        }
    }
    let starts: Vec<f64> = (0..slots).map(|k| k as f64 * window / slots as f64).collect();
    let values: Vec<f64> = on.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let exact = on_slots as f64 * window / slots as f64;
    (
        ScheduleConfig::Piecewise(PiecewiseSchedule {
            starts,
            values,
            period: Some(window),
            until: None,
        }),
        exact,
    )
}

fn blink_schedule(rng: &mut ChaCha8Rng, window: f64) -> (ScheduleConfig, f64) {
    let duty = 0.5 + 0.4 * rng.gen::<f64>();
    let on = duty * window;
    (
        ScheduleConfig::Piecewise(PiecewiseSchedule {
            starts: vec![0.0, on],
            values: vec![1.0, 0.0],
            period: Some(window),
            until: None,
        }),
        on,
    )
}

fn random_delay(rng: &mut ChaCha8Rng, tau: f64, sinusoidal: bool) -> DelaySpecConfig {
    if tau == 0.0 {
        return DelaySpecConfig::Constant(ConstantDelay { value: 0.0 });
    }
    if sinusoidal {
        let base = tau * (0.3 + 0.4 * rng.gen::<f64>());
        let amplitude = base.min(tau - base) * rng.gen::<f64>();
        DelaySpecConfig::Sinusoid(SinusoidDelay {
            base,
            amplitude,
            angular_freq: 0.5 + 2.0 * rng.gen::<f64>(),
            phase: rng.gen::<f64>() * std::f64::consts::TAU,
        })
    } else {
        DelaySpecConfig::Constant(ConstantDelay {
            value: tau * rng.gen::<f64>(),
        })
    }
}

/// Randomized first-order scenario for the executable-theorem sweep.
fn random_first_order_config(idx: u64) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC3_0000 + idx);
    let n_agents = 2 + (idx as usize) % 5;
    let dimension = 1 + (idx as usize) % 3;
    let tau = if idx % 10 == 0 {
        0.0
    } else {
        0.05 + 0.95 * rng.gen::<f64>()
    };
    let window = 0.8 + 0.8 * rng.gen::<f64>();
    let (schedule, exact_margin) = if idx % 2 == 0 {
        blink_schedule(&mut rng, window)
    } else {
        telegraph_schedule(&mut rng, window, 8, 5)
    };
    let level = exact_margin * (1.0 - 1e-9);
    let k0 = (0.3 + 0.7 * rng.gen::<f64>()).min(0.99 / level);
    let beta = 0.2 + 1.3 * rng.gen::<f64>();
    let mut cfg = ScenarioConfig {
        schema_version: 1,
        order: ModelOrder::First,
        n_agents,
        dimension,
        seed: 7000 + idx,
        topology: TopologyConfig::Random(RandomTopology {
            edge_prob: 0.35 + 0.45 * rng.gen::<f64>(),
        }),
        delay: DelayConfig {
            tau_max: tau,
            default: random_delay(&mut rng, tau, idx % 4 >= 2),
            pairs: vec![],
        },
        weights: WeightsConfig {
            default: schedule,
            pairs: vec![],
        },
        pe: Some(PeDeclaration { window, level }),
        influence: InfluenceConfig::RadialRational(RadialRationalInfluence { k0, beta }),
        histories: HistoriesConfig::RandomLinear(RandomHistories {
            position_box: 1.0,
            velocity_box: None,
        }),
        integrator: IntegratorConfig {
            step: Some(1e-2),
            horizon: 1.0,
        },
        analysis: AnalysisConfig::default(),
    };
    // horizon: a bit over two contraction intervals, known once the seeded
    // digraph's depth is
    let draft = build_scenario(&cfg).unwrap();
    cfg.integrator.horizon = 2.2 * draft.interval_length().unwrap();
    cfg
}

/// Randomized second-order scenario; the kernel exponent is tied to the
/// depth so the running-minimum integral diverges.
fn random_second_order_config(idx: u64) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF10C_0000 + idx);
    let n_agents = 2 + (idx as usize) % 5;
    let dimension = 1 + (idx as usize) % 3;
    let tau = if idx % 5 == 0 {
        0.0
    } else {
        0.05 + 0.45 * rng.gen::<f64>()
    };
    let window = 0.8 + 0.4 * rng.gen::<f64>();
    let duty = 0.6 + 0.3 * rng.gen::<f64>();
    let level = duty * window * (1.0 - 1e-9);
    let k0 = (0.5 + 0.5 * rng.gen::<f64>()).min(0.99 / level);
    let mut cfg = ScenarioConfig {
        schema_version: 1,
        order: ModelOrder::Second,
        n_agents,
        dimension,
        seed: 9000 + idx,
        topology: TopologyConfig::Random(RandomTopology {
            edge_prob: 0.5 + 0.4 * rng.gen::<f64>(),
        }),
        delay: DelayConfig {
            tau_max: tau,
            default: random_delay(&mut rng, tau, idx % 2 == 1),
            pairs: vec![],
        },
        weights: WeightsConfig {
            default: ScheduleConfig::Piecewise(PiecewiseSchedule {
                starts: vec![0.0, duty * window],
                values: vec![1.0, 0.0],
                period: Some(window),
                until: None,
            }),
            pairs: vec![],
        },
        pe: Some(PeDeclaration { window, level }),
        influence: InfluenceConfig::RadialRational(RadialRationalInfluence {
            k0,
            beta: 0.5, // rewritten below once the depth is known
        }),
        histories: HistoriesConfig::RandomLinear(RandomHistories {
            position_box: 0.4,
            velocity_box: Some(0.3),
        }),
        integrator: IntegratorConfig {
            step: Some(1e-2),
            horizon: 1.0,
        },
        analysis: AnalysisConfig::default(),
    };
    let draft = build_scenario(&cfg).unwrap();
    let depth = draft.summary().depth;
    // divergence condition: beta * depth <= 1
    let beta = 0.8 / depth as f64;
    cfg.influence = InfluenceConfig::RadialRational(RadialRationalInfluence { k0, beta });
    cfg.integrator.horizon = (8.0 * draft.interval_length().unwrap()).max(120.0);
    cfg
}

/// Collect the worst margin of every lemma-type check and assert it passed.
fn lemma_margins(report: &alignment_core::io::Report, worst: &mut f64, violations: &mut usize) {
    for c in &report.checks {
        if LEMMA_CHECKS.contains(&c.id.as_str()) {
            assert_eq!(c.tolerance, LEMMA_TOL, "check {} tolerance", c.id);
            if let Some(m) = c.margin {
                *worst = worst.min(m);
                if m < -LEMMA_TOL {
                    *violations += 1;
                }
            }
        }
    }
}

#[test]
fn criterion_3_first_order_theorem_executable() {
    let started = Instant::now();
    let mut worst_lemma = f64::INFINITY;
    let mut lemma_violations = 0usize;
    for idx in 0..50u64 {
        let cfg = random_first_order_config(idx);
        let outcome = verify_scenario(&cfg, None)
            .unwrap_or_else(|e| panic!("scenario {idx} failed to verify: {e}"));
        assert!(
            outcome.all_pass(),
            "scenario {idx} has failing checks: {:?}",
            outcome
                .report
                .checks
                .iter()
                .filter(|c| c.status == CheckStatus::Fail)
                .collect::<Vec<_>>()
        );
        // the decay envelope and interval contraction are present, checked
        // and not skipped
        for id in ["diameter_decay_envelope", "interval_contraction"] {
            let c = outcome.report.checks.iter().find(|c| c.id == id).unwrap();
            assert_eq!(c.status, CheckStatus::Pass, "scenario {idx} check {id}");
        }
        // the empirical decay rate dominates the certified one
        let consts = outcome.report.constants.first_order.as_ref().unwrap();
        let certified = consts.decay_rate.unwrap();
        let empirical = empirical_rate(&outcome.scenario, &outcome.trajectory).unwrap();
        assert!(
            empirical >= certified - 1e-3,
            "scenario {idx}: empirical {empirical} vs certified {certified}"
        );
        lemma_margins(&outcome.report, &mut worst_lemma, &mut lemma_violations);
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 300.0,
        "runtime budget exceeded: {elapsed:?}"
    );
    assert_eq!(lemma_violations, 0);
    println!(
        "[criterion 3] PASS 50 randomized first-order scenarios verified \
         (worst lemma margin {worst_lemma:.3e}), {:.1} s",
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_4_second_order_theorem_executable() {
    let started = Instant::now();
    let mut worst_lemma = f64::INFINITY;
    let mut lemma_violations = 0usize;
    for idx in 0..25u64 {
        let cfg = random_second_order_config(idx);
        let outcome = verify_scenario(&cfg, None)
            .unwrap_or_else(|e| panic!("scenario {idx} failed to verify: {e}"));
        // the divergence condition holds by construction, so the
        // certificate is applicable and no warning is emitted about it
        let app = outcome.report.applicability.as_ref().unwrap();
        assert!(app.certificate_applicable, "scenario {idx}");
        assert!(
            outcome.all_pass(),
            "scenario {idx} has failing checks: {:?}",
            outcome
                .report
                .checks
                .iter()
                .filter(|c| c.status == CheckStatus::Fail)
                .collect::<Vec<_>>()
        );
        for id in [
            "velocity_decay_envelope",
            "velocity_interval_contraction",
            "delayed_distance_bound",
        ] {
            let c = outcome.report.checks.iter().find(|c| c.id == id).unwrap();
            assert_eq!(c.status, CheckStatus::Pass, "scenario {idx} check {id}");
        }
        lemma_margins(&outcome.report, &mut worst_lemma, &mut lemma_violations);
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 600.0,
        "runtime budget exceeded: {elapsed:?}"
    );
    assert_eq!(lemma_violations, 0);
    println!(
        "[criterion 4] PASS 25 randomized second-order scenarios verified \
         (worst lemma margin {worst_lemma:.3e}), {:.1} s",
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_5_lemma_suite_across_the_sweeps() {
    // Boundedness and projection sandwiches at the interpolation tolerance,
    // re-run on a thinned slice of the criterion 3/4 scenario families so
    // this criterion reports its own accounting.
    let started = Instant::now();
    let mut worst = f64::INFINITY;
    let mut violations = 0usize;
    let mut checked = 0usize;
    for idx in (0..50u64).step_by(5) {
        let outcome = verify_scenario(&random_first_order_config(idx), None).unwrap();
        lemma_margins(&outcome.report, &mut worst, &mut violations);
        checked += 1;
    }
    for idx in (0..25u64).step_by(5) {
        let outcome = verify_scenario(&random_second_order_config(idx), None).unwrap();
        lemma_margins(&outcome.report, &mut worst, &mut violations);
        checked += 1;
    }
    assert_eq!(violations, 0, "worst lemma margin {worst}");
    println!(
        "[criterion 5] PASS boundedness and projection sandwiches on {checked} scenarios: \
         zero violations beyond {LEMMA_TOL:.0e} (worst margin {worst:.3e}), {:.1} s",
        started.elapsed().as_secs_f64()
    );
}

/// Independent reachability closure.
fn closure_oracle(g: &Digraph) -> Vec<Vec<bool>> {
    let n = g.n_agents();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        reach[i][i] = true;
        for j in 0..n {
            if g.chi(i, j) == 1 {
                reach[i][j] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                reach[i][j] = reach[i][j] || (reach[i][k] && reach[k][j]);
            }
        }
    }
    reach
}

fn depth_oracle(g: &Digraph) -> Option<usize> {
    let n = g.n_agents();
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for i in 0..n {
        d[i][i] = 0;
        for j in 0..n {
            if g.chi(i, j) == 1 {
                d[i][j] = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    let mut depth = 0;
    for row in &d {
        for &v in row {
            if v >= inf {
                return None;
            }
            depth = depth.max(v);
        }
    }
    Some(depth)
}

#[test]
fn criterion_6_graph_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6AAF);
    let mut connected = 0;
    for trial in 0..200 {
        let n = 2 + rng.gen_range(0..5usize); // up to 6
        let rows: Vec<Vec<u8>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i != j && rng.gen::<f64>() < 0.45 { 1 } else { 0 })
                    .collect()
            })
            .collect();
        let g = Digraph::from_matrix(rows).unwrap();
        let reach = closure_oracle(&g);
        let sc = reach.iter().all(|r| r.iter().all(|&b| b));
        assert_eq!(g.strongly_connected(), sc, "trial {trial}");
        match (g.neighbor_summary(), depth_oracle(&g)) {
            (Ok(s), Some(depth)) => {
                assert_eq!(s.depth, depth, "trial {trial}");
                connected += 1;
            }
            (Err(_), None) => {}
            (a, b) => panic!("trial {trial}: summary {a:?} vs oracle {b:?}"),
        }
    }
    for n in 2..=10 {
        let g = Digraph::ring(n).unwrap();
        assert_eq!(g.neighbor_summary().unwrap().depth, n - 1, "ring {n}");
    }
    println!(
        "[criterion 6] PASS connectivity and depth agree with the closure oracle on 200 \
         instances ({connected} strongly connected); ring depths 2..10 exact"
    );
}

/// Independent exact window integral for a periodic piecewise-constant
/// schedule described by slot starts/values on one period.
fn oracle_window_integral(starts: &[f64], values: &[f64], period: f64, t0: f64, t1: f64) -> f64 {
    let mut acc = 0.0;
    let mut s = t0;
    let eps = 1e-15 * (1.0 + t1.abs());
    while s < t1 - eps {
        let m = s - (s / period).floor() * period;
        let idx = match starts.iter().rposition(|&b| b <= m + eps) {
            Some(i) => i,
            None => 0,
        };
        let seg_end = if idx + 1 < starts.len() {
            starts[idx + 1]
        } else {
            period
        };
        let end = (s + (seg_end - m)).min(t1);
        acc += values[idx] * (end - s);
        s = end;
    }
    acc
}

#[test]
fn criterion_7_pe_margin_exactness() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9E77);
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let period = 0.5 + 2.5 * rng.gen::<f64>();
        let lattice = period / 1000.0;
        // distinct lattice breakpoints, first at 0
        let n_segs = 1 + rng.gen_range(0..6usize);
        let mut ticks = vec![0usize];
        while ticks.len() < n_segs + 1 {
            let t = rng.gen_range(1..1000usize);
            if !ticks.contains(&t) {
                ticks.push(t);
            }
        }
        ticks.sort_unstable();
        let starts: Vec<f64> = ticks.iter().map(|&k| k as f64 * lattice).collect();
        let values: Vec<f64> = (0..starts.len()).map(|_| rng.gen::<f64>()).collect();
        let window = rng.gen_range(100..900usize) as f64 * lattice;
        let sched = WeightSchedule::piecewise(
            starts.clone(),
            values.clone(),
            Extent::Periodic(period),
        )
        .unwrap();
        let margin = sched.pe_margin(window, 10.0 * period).unwrap();
        // dense-grid minimization at one-thousandth of the period
        let mut dense = f64::INFINITY;
        for i in 0..=1000 {
            let t = i as f64 * lattice;
            dense = dense.min(oracle_window_integral(&starts, &values, period, t, t + window));
        }
        let diff = (margin.value - dense).abs();
        worst = worst.max(diff);
        assert!(diff < 1e-9, "trial {trial}: margin {} vs dense {dense}", margin.value);
        assert!(margin.certified_all_t);
    }
    println!(
        "[criterion 7] PASS exact window minimization matches dense-grid scans on 100 \
         schedules (worst gap {worst:.2e}, tol 1e-9)"
    );
}

#[test]
fn criterion_8_convergence_order() {
    let errs: Vec<f64> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&h| two_agent_gap_error(ModelOrder::First, h, 2.5))
        .collect();
    let r1 = errs[0] / errs[1];
    let r2 = errs[1] / errs[2];
    assert!(
        (8.0..=32.0).contains(&r1),
        "halving 4e-3 -> 2e-3 shrank the error by {r1}, errors {errs:?}"
    );
    assert!(
        (8.0..=32.0).contains(&r2),
        "halving 2e-3 -> 1e-3 shrank the error by {r2}, errors {errs:?}"
    );
    println!(
        "[criterion 8] PASS fourth-order convergence: errors {errs:?}, ratios {r1:.1} and {r2:.1}"
    );
}

#[test]
fn criterion_9_determinism() {
    let cfg = random_first_order_config(0);
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for run in 0..2 {
        let started = Instant::now();
        let outcome = verify_scenario(&cfg, None).unwrap();
        assert!(outcome.all_pass());
        let out = dir.path().join(format!("run{run}"));
        write_artifacts(
            &cfg,
            &outcome.trajectory,
            Some(&outcome.report),
            &out,
            started,
        )
        .unwrap();
        bytes.push((
            std::fs::read(out.join("trajectory.csv")).unwrap(),
            std::fs::read(out.join("report.json")).unwrap(),
        ));
    }
    assert_eq!(bytes[0].0, bytes[1].0, "trajectory bytes differ");
    assert_eq!(bytes[0].1, bytes[1].1, "report bytes differ");
    // the round-trip of the config itself is also exact
    let text = serialize_config(&cfg);
    assert_eq!(parse_config(&text).unwrap(), cfg);
    println!(
        "[criterion 9] PASS repeated verification produced byte-identical trajectory \
         ({} bytes) and report ({} bytes)",
        bytes[0].0.len(),
        bytes[0].1.len()
    );
}


