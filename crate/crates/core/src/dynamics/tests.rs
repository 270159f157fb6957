use super::*;
use crate::dynamics::scenario::ScenarioParts;
use crate::signals::{
    DelaySpec, Extent, InfluenceFamily, InfluenceFunction, PeDeclaration, WeightSchedule,
};
use crate::topology::Digraph;
use crate::ModelOrder;

#[allow(clippy::too_many_arguments)]
pub(crate) fn uniform_parts(
    digraph: Digraph,
    dim: usize,
    order: ModelOrder,
    tau_max: f64,
    delay: DelaySpec,
    schedule: WeightSchedule,
    influence: InfluenceFamily,
    histories: Vec<AgentHistory>,
    vel_histories: Option<Vec<AgentHistory>>,
    step: f64,
    horizon: f64,
) -> ScenarioParts {
    let n = digraph.n_agents();
    ScenarioParts {
        digraph,
        dim,
        order,
        tau_max,
        delays: vec![delay; n * n],
        schedules: vec![schedule; n * n],
        influence: InfluenceFunction::new(order, influence).unwrap(),
        histories,
        vel_histories,
        pe: Some(PeDeclaration {
            window: 1.0,
            level: 0.5,
        }),
        step,
        horizon,
        seed: 0,
    }
}

fn const_hist(tau: f64, point: Vec<f64>) -> AgentHistory {
    let d = point.len();
    AgentHistory::new(tau, d, HistoryShape::Constant { point }).unwrap()
}

fn two_agent_first_order(h: f64, horizon: f64) -> Scenario {
    let parts = uniform_parts(
        Digraph::complete(2).unwrap(),
        1,
        ModelOrder::First,
        0.0,
        DelaySpec::zero(),
        WeightSchedule::constant(1.0).unwrap(),
        InfluenceFamily::Constant { k0: 1.0 },
        vec![const_hist(0.0, vec![0.0]), const_hist(0.0, vec![1.0])],
        None,
        h,
        horizon,
    );
    Scenario::new(parts).unwrap()
}

#[test]
fn rhs_two_agent_direct_substitution() {
    let scn = two_agent_first_order(1e-2, 1.0);
    let states = [0.25, 0.75];
    let alpha = weights_at(&scn, 0.0).unwrap();
    let mut out = [0.0; 2];
    let mut lk = |_j: usize, _td: f64, _o: &mut [f64]| panic!("no delayed lookup expected");
    rhs_first_order(&scn, 0.0, &states, &alpha, &mut lk, &mut out);
    assert!((out[0] - 0.5).abs() < 1e-15);
    assert!((out[1] + 0.5).abs() < 1e-15);
}

#[test]
fn coincident_agents_have_zero_derivative() {
    let g = Digraph::complete(3).unwrap();
    let parts = uniform_parts(
        g,
        2,
        ModelOrder::First,
        0.5,
        DelaySpec::Constant { value: 0.25 },
        WeightSchedule::constant(1.0).unwrap(),
        InfluenceFamily::RadialRational { k0: 1.0, beta: 1.0 },
        vec![const_hist(0.5, vec![0.3, -0.2]); 3],
        None,
        1e-2,
        2.0,
    );
    let scn = Scenario::new(parts).unwrap();
    let traj = integrate(&scn).unwrap();
    for &t in &[0.5, 1.0, 2.0] {
        for i in 0..3 {
            let x = traj.position(i, t).unwrap();
            assert!((x[0] - 0.3).abs() < 1e-12 && (x[1] + 0.2).abs() < 1e-12);
        }
    }
}

#[test]
fn dark_weights_freeze_the_motion() {
    let parts = uniform_parts(
        Digraph::complete(2).unwrap(),
        1,
        ModelOrder::First,
        0.0,
        DelaySpec::zero(),
        WeightSchedule::constant(0.0).unwrap(),
        InfluenceFamily::Constant { k0: 1.0 },
        vec![const_hist(0.0, vec![0.0]), const_hist(0.0, vec![1.0])],
        None,
        1e-2,
        1.0,
    );
    let scn = Scenario::new(parts).unwrap();
    let traj = integrate(&scn).unwrap();
    let x0 = traj.position(0, 1.0).unwrap();
    let x1 = traj.position(1, 1.0).unwrap();
    assert_eq!(x0[0], 0.0);
    assert_eq!(x1[0], 1.0);
}

#[test]
fn two_agent_gap_matches_the_closed_form() {
    let scn = two_agent_first_order(1e-3, 2.0);
    let traj = integrate(&scn).unwrap();
    for &t in &[0.5, 1.0, 2.0] {
        let gap = traj.position(1, t).unwrap()[0] - traj.position(0, t).unwrap()[0];
        assert!(
            (gap - (-2.0 * t).exp()).abs() < 1e-8,
            "t = {t}, gap = {gap}"
        );
    }
}

#[test]
fn translation_shifts_the_whole_trajectory() {
    let g = Digraph::ring(3).unwrap();
    let mk = |shift: f64| {
        let hist = |p: Vec<f64>| {
            AgentHistory::new(
                0.4,
                2,
                HistoryShape::Linear {
                    from: p.iter().map(|v| v + shift).collect(),
                    to: p.iter().map(|v| v + shift + 0.1).collect(),
                },
            )
            .unwrap()
        };
        let parts = uniform_parts(
            g.clone(),
            2,
            ModelOrder::First,
            0.4,
            DelaySpec::Sinusoid {
                base: 0.2,
                amplitude: 0.15,
                angular_freq: 2.0,
                phase: 0.5,
            },
            WeightSchedule::blink(0.6, 1.0).unwrap(),
            InfluenceFamily::RadialRational { k0: 0.8, beta: 1.0 },
            vec![
                hist(vec![0.0, 0.0]),
                hist(vec![1.0, -0.5]),
                hist(vec![-0.3, 0.7]),
            ],
            None,
            1e-2,
            3.0,
        );
        integrate(&Scenario::new(parts).unwrap()).unwrap()
    };
    let base = mk(0.0);
    let shifted = mk(10.0);
    for (row_a, row_b) in base.state_rows().iter().zip(shifted.state_rows()) {
        for (a, b) in row_a.iter().zip(row_b) {
            assert!((b - a - 10.0).abs() < 1e-12);
        }
    }
}

#[test]
fn first_order_states_stay_inside_the_history_ball() {
    let g = Digraph::ring(4).unwrap();
    let hist = |p: f64, q: f64| {
        AgentHistory::new(
            0.5,
            1,
            HistoryShape::Linear {
                from: vec![p],
                to: vec![q],
            },
        )
        .unwrap()
    };
    let parts = uniform_parts(
        g,
        1,
        ModelOrder::First,
        0.5,
        DelaySpec::Constant { value: 0.5 },
        WeightSchedule::blink(1.0, 2.0).unwrap(),
        InfluenceFamily::RadialRational { k0: 1.0, beta: 0.5 },
        vec![hist(1.0, 0.8), hist(-1.0, -0.9), hist(0.2, 0.4), hist(-0.5, 0.3)],
        None,
        1e-2,
        8.0,
    );
    let scn = Scenario::new(parts).unwrap();
    let traj = integrate(&scn).unwrap();
    let c0 = 1.0; // max |history|
    for (ti, row) in traj.times().iter().enumerate() {
        for i in 0..4 {
            let x = traj.state_rows()[ti][i];
            assert!(x.abs() <= c0 + 1e-6, "t = {row}, x_{i} = {x}");
        }
    }
}

fn two_agent_second_order(h: f64, horizon: f64) -> Scenario {
    let parts = uniform_parts(
        Digraph::complete(2).unwrap(),
        1,
        ModelOrder::Second,
        0.0,
        DelaySpec::zero(),
        WeightSchedule::constant(1.0).unwrap(),
        InfluenceFamily::Constant { k0: 1.0 },
        vec![const_hist(0.0, vec![0.0]), const_hist(0.0, vec![0.0])],
        Some(vec![const_hist(0.0, vec![-0.5]), const_hist(0.0, vec![0.5])]),
        h,
        horizon,
    );
    Scenario::new(parts).unwrap()
}

#[test]
fn equal_velocities_travel_in_straight_lines() {
    let parts = uniform_parts(
        Digraph::complete(3).unwrap(),
        2,
        ModelOrder::Second,
        0.0,
        DelaySpec::zero(),
        WeightSchedule::constant(1.0).unwrap(),
        InfluenceFamily::RadialRational { k0: 1.0, beta: 1.0 },
        vec![
            const_hist(0.0, vec![0.0, 0.0]),
            const_hist(0.0, vec![1.0, 0.0]),
            const_hist(0.0, vec![0.0, 1.0]),
        ],
        Some(vec![const_hist(0.0, vec![0.5, -0.25]); 3]),
        1e-2,
        2.0,
    );
    let scn = Scenario::new(parts).unwrap();
    let traj = integrate(&scn).unwrap();
    for i in 0..3 {
        let v = traj.velocity(i, 2.0).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-12 && (v[1] + 0.25).abs() < 1e-12);
        let x = traj.position(i, 2.0).unwrap();
        let x0 = traj.position(i, 0.0).unwrap();
        assert!((x[0] - (x0[0] + 1.0)).abs() < 1e-10);
        assert!((x[1] - (x0[1] - 0.5)).abs() < 1e-10);
    }
}

#[test]
fn two_agent_velocity_gap_matches_the_closed_form() {
    let scn = two_agent_second_order(1e-3, 2.0);
    let traj = integrate(&scn).unwrap();
    for &t in &[0.5, 1.0, 2.0] {
        let gap = traj.velocity(1, t).unwrap()[0] - traj.velocity(0, t).unwrap()[0];
        assert!(
            (gap - (-2.0 * t).exp()).abs() < 1e-8,
            "t = {t}, gap = {gap}"
        );
    }
}

#[test]
fn single_arc_only_contributes_that_arc() {
    // only 0 <- 1 is active
    let g = Digraph::from_matrix(vec![vec![0, 1], vec![1, 0]]).unwrap();
    let parts = uniform_parts(
        g,
        1,
        ModelOrder::Second,
        0.0,
        DelaySpec::zero(),
        WeightSchedule::constant(1.0).unwrap(),
        InfluenceFamily::Constant { k0: 2.0 },
        vec![const_hist(0.0, vec![0.0]); 2],
        Some(vec![const_hist(0.0, vec![0.0]), const_hist(0.0, vec![1.0])]),
        1e-2,
        0.5,
    );
    let scn = Scenario::new(parts).unwrap();
    let alpha = weights_at(&scn, 0.0).unwrap();
    let states = [0.0, 0.0, 0.0, 1.0];
    let mut out = [0.0; 4];
    let mut lk = |_j: usize, _td: f64, _o: &mut [f64]| unreachable!();
    rhs_second_order(&scn, 0.0, &states, &alpha, &mut lk, &mut out);
    // dv_0 = chi_01 * psi * (v_1 - v_0) = 2, dv_1 = 2 * (v_0 - v_1) = -2
    assert!((out[1] - 2.0).abs() < 1e-15);
    assert!((out[3] + 2.0).abs() < 1e-15);
}

#[test]
fn galilean_boost_zero_delay() {
    let boost = 3.0;
    let mk = |w: f64| {
        let parts = uniform_parts(
            Digraph::complete(2).unwrap(),
            1,
            ModelOrder::Second,
            0.0,
            DelaySpec::zero(),
            WeightSchedule::constant(1.0).unwrap(),
            InfluenceFamily::RadialRational { k0: 1.0, beta: 1.0 },
            vec![const_hist(0.0, vec![0.0]), const_hist(0.0, vec![0.7])],
            Some(vec![
                const_hist(0.0, vec![-0.5 + w]),
                const_hist(0.0, vec![0.5 + w]),
            ]),
            1e-2,
            2.0,
        );
        integrate(&Scenario::new(parts).unwrap()).unwrap()
    };
    let base = mk(0.0);
    let boosted = mk(boost);
    for (k, &t) in base.times().iter().enumerate() {
        for i in 0..2 {
            let xb = boosted.state_rows()[k][i * 2];
            let x = base.state_rows()[k][i * 2];
            assert!((xb - x - boost * t).abs() < 1e-10, "t = {t}");
            let vb = boosted.state_rows()[k][i * 2 + 1];
            let v = base.state_rows()[k][i * 2 + 1];
            assert!((vb - v - boost).abs() < 1e-10, "t = {t}");
        }
    }
}

#[test]
fn galilean_boost_with_delay_and_flat_influence() {
    // With a constant influence the rates ignore positions, so the boost
    // symmetry survives genuine delays.
    let boost = 2.0;
    let tau = 0.3;
    let mk = |w: f64| {
        let pos = |p: f64| {
            AgentHistory::new(
                tau,
                1,
                HistoryShape::Linear {
                    from: vec![p + w * 0.0],
                    to: vec![p + w * tau],
                },
            )
            .unwrap()
        };
        let vel = |v: f64| const_hist(tau, vec![v + w]);
        let parts = uniform_parts(
            Digraph::complete(2).unwrap(),
            1,
            ModelOrder::Second,
            tau,
            DelaySpec::Constant { value: tau },
            WeightSchedule::blink(0.7, 1.0).unwrap(),
            InfluenceFamily::Constant { k0: 1.0 },
            vec![pos(0.0), pos(0.7)],
            Some(vec![vel(-0.5), vel(0.5)]),
            1e-2,
            2.0,
        );
        integrate(&Scenario::new(parts).unwrap()).unwrap()
    };
    let base = mk(0.0);
    let boosted = mk(boost);
    for (k, &t) in base.times().iter().enumerate() {
        for i in 0..2 {
            let xb = boosted.state_rows()[k][i * 2];
            let x = base.state_rows()[k][i * 2];
            assert!((xb - x - boost * (t + tau)).abs() < 1e-10, "t = {t}");
            let vb = boosted.state_rows()[k][i * 2 + 1];
            let v = base.state_rows()[k][i * 2 + 1];
            assert!((vb - v - boost).abs() < 1e-10, "t = {t}");
        }
    }
}

#[test]
fn grid_contains_schedule_breakpoints() {
    let parts = uniform_parts(
        Digraph::complete(2).unwrap(),
        1,
        ModelOrder::First,
        0.0,
        DelaySpec::zero(),
        WeightSchedule::blink(0.37, 1.1).unwrap(),
        InfluenceFamily::Constant { k0: 1.0 },
        vec![const_hist(0.0, vec![0.0]), const_hist(0.0, vec![1.0])],
        None,
        1e-2,
        3.0,
    );
    let scn = Scenario::new(parts).unwrap();
    let traj = integrate(&scn).unwrap();
    for b in [0.37, 1.1, 1.47, 2.2, 2.57] {
        assert!(
            traj.times().iter().any(|&t| (t - b).abs() < 1e-12),
            "missing breakpoint {b}"
        );
    }
    assert_eq!(*traj.times().last().unwrap(), 3.0);
}

#[test]
fn dense_output_matches_nodes_exactly_and_interpolates() {
    let scn = two_agent_first_order(1e-2, 1.0);
    let traj = integrate(&scn).unwrap();
    let k = traj.times().len() / 2;
    let t = traj.times()[k];
    let mut out = [0.0; 2];
    traj.state_into(t, &mut out).unwrap();
    assert_eq!(out.to_vec(), traj.state_rows()[k]);
    // interpolated gap between nodes still tracks the closed form
    let tm = t + 0.5e-2 * 0.5;
    traj.state_into(tm, &mut out).unwrap();
    assert!(((out[1] - out[0]) - (-2.0 * tm).exp()).abs() < 1e-8);
}

#[test]
fn rederive_reproduces_integrator_derivatives() {
    let g = Digraph::ring(3).unwrap();
    let hist = |p: f64| {
        AgentHistory::new(
            0.2,
            1,
            HistoryShape::Linear {
                from: vec![p],
                to: vec![p + 0.1],
            },
        )
        .unwrap()
    };
    let parts = uniform_parts(
        g,
        1,
        ModelOrder::First,
        0.2,
        DelaySpec::Constant { value: 0.15 },
        WeightSchedule::blink(0.5, 0.8).unwrap(),
        InfluenceFamily::RadialRational { k0: 0.9, beta: 1.0 },
        vec![hist(0.0), hist(1.0), hist(-0.5)],
        None,
        1e-2,
        2.0,
    );
    let scn = Scenario::new(parts).unwrap();
    let traj = integrate(&scn).unwrap();
    let re = rederive_derivatives(
        &scn,
        traj.times().to_vec(),
        traj.state_rows().to_vec(),
        traj.histories().to_vec(),
        None,
    )
    .unwrap();
    for (a, b) in traj.derivs_start.iter().zip(&re.derivs_start) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
    for (a, b) in traj.derivs_end.iter().zip(&re.derivs_end) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}
