//! Declarative scenario configuration, trajectory/report persistence and
//! re-ingestion of externally produced trajectories.

mod config;
mod report;
mod trajectory_csv;

pub use config::{
    build_scenario, default_step, derive_seed, parse_config, serialize_config, AgentHistoryConfig,
    AnalysisConfig, BlinkSchedule, ConstantDelay, ConstantHistory, ConstantInfluence,
    ConstantSchedule, CustomTopology, DelayConfig, DelaySpecConfig, ExplicitHistories,
    HistoriesConfig, HistoryShapeConfig, InfluenceConfig, IntegratorConfig, LinearHistory,
    NoParams, PairDelay, PairSchedule, PiecewiseSchedule, RadialExponentialInfluence,
    RadialRationalInfluence, RandomHistories, RandomTopology, SampledHistory, ScenarioConfig,
    ScheduleConfig, SinusoidDelay, TableInfluence, TopologyConfig, WeightsConfig,
    DIRECTION_SEED_STREAM, HISTORY_SEED_STREAM, TOPOLOGY_SEED_STREAM,
};
pub use report::{
    config_hash, read_bundle, read_report, write_bundle, write_report, ApplicabilityNote,
    ConstantsBlock, Report, RunBundle, REPORT_SCHEMA_VERSION,
};
pub use trajectory_csv::{read_trajectory, write_trajectory};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}
