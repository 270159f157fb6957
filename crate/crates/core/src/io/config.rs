//! The scenario configuration format: a strict TOML schema in which unknown
//! keys are errors and all defaults are resolved at parse time, so
//! `parse(serialize(c)) == c`.

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::analysis::ToleranceSettings;
use crate::dynamics::{AgentHistory, HistoryShape, Scenario, ScenarioError, ScenarioParts};
use crate::signals::{
    DelaySpec, Extent, InfluenceFamily, InfluenceFunction, PeDeclaration, WeightSchedule,
};
use crate::topology::{make_digraph, Digraph, DigraphKind};
use crate::ModelOrder;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;
pub const TOPOLOGY_SEED_STREAM: u64 = 1;
pub const HISTORY_SEED_STREAM: u64 = 2;
pub const DIRECTION_SEED_STREAM: u64 = 3;

/// Default integration step: `1e-2`, refined to a tenth of the delay bound
/// when delays are present.
pub fn default_step(tau_max: f64) -> f64 {
    if tau_max > 0.0 {
        (tau_max / 10.0).min(1e-2)
    } else {
        1e-2
    }
}

/// splitmix64-style stream derivation, so each randomized ingredient gets
/// an independent deterministic seed.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub order: ModelOrder,
    pub n_agents: usize,
    pub dimension: usize,
    #[serde(default)]
    pub seed: u64,
    pub topology: TopologyConfig,
    #[serde(default)]
    pub delay: DelayConfig,
    #[serde(default)]
    pub weights: WeightsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pe: Option<PeDeclaration>,
    pub influence: InfluenceConfig,
    pub histories: HistoriesConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TopologyConfig {
    Complete(NoParams),
    Ring(NoParams),
    Random(RandomTopology),
    Custom(CustomTopology),
}

/// Empty parameter block; exists so unknown keys under parameter-free
/// variants are still rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoParams {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomTopology {
    pub edge_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomTopology {
    pub matrix: Vec<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayConfig {
    pub tau_max: f64,
    pub default: DelaySpecConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<PairDelay>,
}

impl Default for DelayConfig {
    fn default() -> Self {
        DelayConfig {
            tau_max: 0.0,
            default: DelaySpecConfig::Constant(ConstantDelay { value: 0.0 }),
            pairs: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairDelay {
    pub to: usize,
    pub from: usize,
    pub delay: DelaySpecConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DelaySpecConfig {
    Constant(ConstantDelay),
    Sinusoid(SinusoidDelay),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantDelay {
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinusoidDelay {
    pub base: f64,
    pub amplitude: f64,
    pub angular_freq: f64,
    pub phase: f64,
}

impl DelaySpecConfig {
    fn build(&self) -> DelaySpec {
        match self {
            DelaySpecConfig::Constant(c) => DelaySpec::Constant { value: c.value },
            DelaySpecConfig::Sinusoid(s) => DelaySpec::Sinusoid {
                base: s.base,
                amplitude: s.amplitude,
                angular_freq: s.angular_freq,
                phase: s.phase,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    pub default: ScheduleConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<PairSchedule>,
}

impl Default for WeightsConfig {
    fn default() -> Self {
        WeightsConfig {
            default: ScheduleConfig::Constant(ConstantSchedule { value: 1.0 }),
            pairs: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSchedule {
    pub to: usize,
    pub from: usize,
    pub schedule: ScheduleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleConfig {
    Constant(ConstantSchedule),
    Blink(BlinkSchedule),
    Piecewise(PiecewiseSchedule),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantSchedule {
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlinkSchedule {
    pub on: f64,
    pub period: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseSchedule {
    pub starts: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub until: Option<f64>,
}

impl ScheduleConfig {
    fn build(&self) -> Result<WeightSchedule, IoError> {
        let sched = match self {
            ScheduleConfig::Constant(c) => WeightSchedule::constant(c.value),
            ScheduleConfig::Blink(b) => WeightSchedule::blink(b.on, b.period),
            ScheduleConfig::Piecewise(p) => {
                let extent = match (p.period, p.until) {
                    (Some(_), Some(_)) => {
                        return Err(IoError::Invalid(
                            "a piecewise schedule cannot be both periodic and bounded".into(),
                        ))
                    }
                    (Some(period), None) => Extent::Periodic(period),
                    (None, Some(end)) => Extent::Bounded(end),
                    (None, None) => Extent::Unbounded,
                };
                WeightSchedule::piecewise(p.starts.clone(), p.values.clone(), extent)
            }
        };
        sched.map_err(|e| IoError::Invalid(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InfluenceConfig {
    Constant(ConstantInfluence),
    RadialRational(RadialRationalInfluence),
    RadialExponential(RadialExponentialInfluence),
    Table(TableInfluence),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantInfluence {
    pub k0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialRationalInfluence {
    pub k0: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialExponentialInfluence {
    pub k0: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableInfluence {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

impl InfluenceConfig {
    fn build(&self, order: ModelOrder) -> Result<InfluenceFunction, IoError> {
        let family = match self {
            InfluenceConfig::Constant(c) => InfluenceFamily::Constant { k0: c.k0 },
            InfluenceConfig::RadialRational(c) => InfluenceFamily::RadialRational {
                k0: c.k0,
                beta: c.beta,
            },
            InfluenceConfig::RadialExponential(c) => InfluenceFamily::RadialExponential {
                k0: c.k0,
                lambda: c.lambda,
            },
            InfluenceConfig::Table(c) => InfluenceFamily::Table {
                radii: c.radii.clone(),
                values: c.values.clone(),
            },
        };
        InfluenceFunction::new(order, family).map_err(|e| IoError::Invalid(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HistoriesConfig {
    /// Every agent gets a constant history at a seeded random point in the
    /// centered box.
    RandomConstant(RandomHistories),
    /// Every agent gets a seeded random linear history inside the box.
    RandomLinear(RandomHistories),
    Explicit(ExplicitHistories),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomHistories {
    pub position_box: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity_box: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitHistories {
    pub agents: Vec<AgentHistoryConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentHistoryConfig {
    pub position: HistoryShapeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<HistoryShapeConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HistoryShapeConfig {
    Constant(ConstantHistory),
    Linear(LinearHistory),
    Sampled(SampledHistory),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantHistory {
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearHistory {
    pub from: Vec<f64>,
    pub to: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampledHistory {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl HistoryShapeConfig {
    fn build(&self, tau: f64, dim: usize) -> Result<AgentHistory, ScenarioError> {
        let shape = match self {
            HistoryShapeConfig::Constant(c) => HistoryShape::Constant {
                point: c.point.clone(),
            },
            HistoryShapeConfig::Linear(c) => HistoryShape::Linear {
                from: c.from.clone(),
                to: c.to.clone(),
            },
            HistoryShapeConfig::Sampled(c) => HistoryShape::Sampled {
                times: c.times.clone(),
                values: c.values.clone(),
            },
        };
        AgentHistory::new(tau, dim, shape)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    /// Resolved at parse time when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    pub horizon: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            step: None,
            horizon: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Number of deterministic projection directions.
    pub directions: usize,
    /// Cap on the number of contraction intervals analyzed; absent means
    /// every complete interval within the horizon.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_intervals: Option<usize>,
    pub contraction_slack: f64,
    pub interp_tolerance: f64,
    pub stabilization_rel: f64,
    pub table_floor_slack: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let tol = ToleranceSettings::default();
        AnalysisConfig {
            directions: 32,
            max_intervals: None,
            contraction_slack: tol.contraction_slack,
            interp_tolerance: tol.interp_tolerance,
            stabilization_rel: tol.stabilization_rel,
            table_floor_slack: tol.table_floor_slack,
        }
    }
}

impl AnalysisConfig {
    pub fn tolerances(&self) -> ToleranceSettings {
        ToleranceSettings {
            contraction_slack: self.contraction_slack,
            interp_tolerance: self.interp_tolerance,
            stabilization_rel: self.stabilization_rel,
            table_floor_slack: self.table_floor_slack,
        }
    }
}

/// Parse, validate and resolve a scenario configuration from TOML text.
/// Unknown keys are errors; error messages carry the offending field path.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, IoError> {
    let de = toml::de::Deserializer::new(text);
    let mut cfg: ScenarioConfig =
        serde_path_to_error::deserialize(de).map_err(|e| IoError::Schema {
            path: e.path().to_string(),
            message: e.inner().message().to_string(),
        })?;
    validate_config(&cfg)?;
    if cfg.integrator.step.is_none() {
        cfg.integrator.step = Some(default_step(cfg.delay.tau_max));
    }
    Ok(cfg)
}

pub fn serialize_config(cfg: &ScenarioConfig) -> String {
    toml::to_string_pretty(cfg).expect("config serialization cannot fail")
}

fn validate_config(cfg: &ScenarioConfig) -> Result<(), IoError> {
    if cfg.schema_version != CONFIG_SCHEMA_VERSION {
        return Err(IoError::Schema {
            path: "schema_version".into(),
            message: format!(
                "unsupported schema version {}, expected {CONFIG_SCHEMA_VERSION}",
                cfg.schema_version
            ),
        });
    }
    if cfg.n_agents < 2 {
        return Err(IoError::Schema {
            path: "n_agents".into(),
            message: format!("need at least 2 agents, got {}", cfg.n_agents),
        });
    }
    if cfg.dimension == 0 {
        return Err(IoError::Schema {
            path: "dimension".into(),
            message: "dimension must be at least 1".into(),
        });
    }
    if !(cfg.integrator.horizon >= 0.0) {
        return Err(IoError::Schema {
            path: "integrator.horizon".into(),
            message: format!("horizon must be nonnegative, got {}", cfg.integrator.horizon),
        });
    }
    if let Some(step) = cfg.integrator.step {
        if !(step > 0.0) {
            return Err(IoError::Schema {
                path: "integrator.step".into(),
                message: format!("step must be positive, got {step}"),
            });
        }
    }
    for (idx, p) in cfg.delay.pairs.iter().enumerate() {
        if p.to == p.from || p.to >= cfg.n_agents || p.from >= cfg.n_agents {
            return Err(IoError::Schema {
                path: format!("delay.pairs[{idx}]"),
                message: format!("invalid pair ({} <- {})", p.to, p.from),
            });
        }
    }
    for (idx, p) in cfg.weights.pairs.iter().enumerate() {
        if p.to == p.from || p.to >= cfg.n_agents || p.from >= cfg.n_agents {
            return Err(IoError::Schema {
                path: format!("weights.pairs[{idx}]"),
                message: format!("invalid pair ({} <- {})", p.to, p.from),
            });
        }
    }
    if let HistoriesConfig::Explicit(e) = &cfg.histories {
        if e.agents.len() != cfg.n_agents {
            return Err(IoError::Schema {
                path: "histories.agents".into(),
                message: format!(
                    "need {} agent histories, got {}",
                    cfg.n_agents,
                    e.agents.len()
                ),
            });
        }
    }
    Ok(())
}

fn build_digraph(cfg: &ScenarioConfig) -> Result<Digraph, IoError> {
    let kind = match &cfg.topology {
        TopologyConfig::Complete(_) => DigraphKind::Complete { n: cfg.n_agents },
        TopologyConfig::Ring(_) => DigraphKind::Ring { n: cfg.n_agents },
        TopologyConfig::Random(r) => DigraphKind::Random {
            n: cfg.n_agents,
            edge_prob: r.edge_prob,
            seed: derive_seed(cfg.seed, TOPOLOGY_SEED_STREAM),
        },
        TopologyConfig::Custom(c) => {
            if c.matrix.len() != cfg.n_agents {
                return Err(IoError::Schema {
                    path: "topology.matrix".into(),
                    message: format!(
                        "matrix has {} rows, expected {}",
                        c.matrix.len(),
                        cfg.n_agents
                    ),
                });
            }
            DigraphKind::Custom {
                matrix: c.matrix.clone(),
            }
        }
    };
    make_digraph(kind).map_err(|e| IoError::Invalid(e.to_string()))
}

fn random_point(rng: &mut impl rand::Rng, dim: usize, half_width: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * half_width)
        .collect()
}

fn build_histories(
    cfg: &ScenarioConfig,
) -> Result<(Vec<AgentHistory>, Option<Vec<AgentHistory>>), IoError> {
    use rand::SeedableRng;
    let tau = cfg.delay.tau_max;
    let d = cfg.dimension;
    let second = cfg.order.is_second();
    let as_io = |e: ScenarioError| IoError::Invalid(e.to_string());
    match &cfg.histories {
        HistoriesConfig::Explicit(e) => {
            let mut pos = Vec::with_capacity(cfg.n_agents);
            let mut vel = Vec::with_capacity(cfg.n_agents);
            for (idx, a) in e.agents.iter().enumerate() {
                pos.push(a.position.build(tau, d).map_err(as_io)?);
                match (&a.velocity, second) {
                    (Some(v), true) => vel.push(v.build(tau, d).map_err(as_io)?),
                    (None, false) => {}
                    (Some(_), false) => {
                        return Err(IoError::Schema {
                            path: format!("histories.agents[{idx}].velocity"),
                            message: "first-order scenarios take no velocity history".into(),
                        })
                    }
                    (None, true) => {
                        return Err(IoError::Schema {
                            path: format!("histories.agents[{idx}].velocity"),
                            message: "second-order scenarios need a velocity history".into(),
                        })
                    }
                }
            }
            Ok((pos, if second { Some(vel) } else { None }))
        }
        HistoriesConfig::RandomConstant(r) | HistoriesConfig::RandomLinear(r) => {
            let linear = matches!(cfg.histories, HistoriesConfig::RandomLinear(_));
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(
                cfg.seed,
                HISTORY_SEED_STREAM,
            ));
            let vbox = r.velocity_box.unwrap_or(r.position_box);
            let mut pos = Vec::with_capacity(cfg.n_agents);
            let mut vel = Vec::with_capacity(cfg.n_agents);
            for _ in 0..cfg.n_agents {
                let shape = |rng: &mut rand_chacha::ChaCha8Rng, half: f64| {
                    if linear && tau > 0.0 {
                        HistoryShape::Linear {
                            from: random_point(rng, d, half),
                            to: random_point(rng, d, half),
                        }
                    } else {
                        HistoryShape::Constant {
                            point: random_point(rng, d, half),
                        }
                    }
                };
                let p = shape(&mut rng, r.position_box);
                pos.push(AgentHistory::new(tau, d, p).map_err(as_io)?);
                if second {
                    let v = shape(&mut rng, vbox);
                    vel.push(AgentHistory::new(tau, d, v).map_err(as_io)?);
                }
            }
            Ok((pos, if second { Some(vel) } else { None }))
        }
    }
}

/// Build the runnable scenario a configuration describes. Randomized
/// ingredients (topology, histories) are resolved deterministically from
/// the configured seed.
pub fn build_scenario(cfg: &ScenarioConfig) -> Result<Scenario, IoError> {
    let digraph = build_digraph(cfg)?;
    let n = cfg.n_agents;
    let default_delay = cfg.delay.default.build();
    let mut delays = vec![default_delay; n * n];
    for p in &cfg.delay.pairs {
        delays[p.to * n + p.from] = p.delay.build();
    }
    let default_schedule = cfg.weights.default.build()?;
    let mut schedules = vec![default_schedule; n * n];
    for (idx, p) in cfg.weights.pairs.iter().enumerate() {
        if digraph.chi(p.to, p.from) == 0 {
            return Err(IoError::Schema {
                path: format!("weights.pairs[{idx}]"),
                message: format!(
                    "pair ({} <- {}) is not an arc of the interaction digraph",
                    p.to, p.from
                ),
            });
        }
        schedules[p.to * n + p.from] = p.schedule.build()?;
    }
    let influence = cfg.influence.build(cfg.order)?;
    let (histories, vel_histories) = build_histories(cfg)?;
    let step = cfg.integrator.step.unwrap_or(default_step(cfg.delay.tau_max));
    Scenario::new(ScenarioParts {
        digraph,
        dim: cfg.dimension,
        order: cfg.order,
        tau_max: cfg.delay.tau_max,
        delays,
        schedules,
        influence,
        histories,
        vel_histories,
        pe: cfg.pe,
        step,
        horizon: cfg.integrator.horizon,
        seed: cfg.seed,
    })
    .map_err(|e| IoError::Invalid(e.to_string()))
}
