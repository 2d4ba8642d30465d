//! Task catalog, schedule prompts, and parsing of model schedules.

mod catalog;
mod generate;
mod schedule;

use thiserror::Error;

use crate::gateway::GatewayError;

pub use catalog::{TaskCatalog, TaskCategory, TaskDef};
pub use generate::{
    build_bootstrap_prompt, generate_sample, generate_samples, randomise_task_order, BootstrapConfig,
    GenerationCondition, RejectRecord, SampleOutcome, SampleSet, DEFAULT_AGENT_PROFILE, DEFAULT_SYSTEM_MESSAGE,
};
pub use schedule::{hhmm, parse_schedule, RejectReason, Schedule, ScheduleEntry, ScheduleReject, MINUTES_PER_DAY};

#[derive(Debug, Error)]
pub enum SchedulerError {
    #[error("invalid task catalog: {0}")]
    InvalidCatalog(String),
    #[error("invalid schedule file: {0}")]
    Format(String),
    #[error("at least one sample is required")]
    NoSamples,
    #[error("provider error: {0}")]
    Provider(GatewayError),
}
