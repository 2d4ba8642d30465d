//! Descriptive statistics, two-sample t-tests, chi-square independence,
//! Pearson correlation and the expected-schedule tally.
//!
//! Everything here is pure and allocation-light. The Student-t and chi-square
//! distributions are evaluated in-house through the regularised incomplete beta
//! and gamma functions in [`special`].

mod correlation;
mod distributions;
mod expected;
mod hypothesis;
pub mod special;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use correlation::{pearson_correlation, CorrelationResult};
pub use distributions::{chi_square_cdf, chi_square_sf, student_t_cdf, student_t_two_tailed};
pub use expected::{expected_schedule, ExpectedSchedule, ExpectedSlot, END_OF_DAY};
pub use hypothesis::{chi_square_independence, two_sample_t_test, welch_t_test, ContingencyTable, TTestKind};

/// Significance level used throughout reports.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("degenerate contingency table: {0}")]
    DegenerateTable(String),
    #[error("invalid contingency table: {0}")]
    InvalidTable(String),
    #[error("correlation undefined for constant input")]
    UndefinedCorrelation,
    #[error("paired inputs differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("domain error: {0}")]
    Domain(String),
}

/// Mean, sample standard deviation (n − 1 denominator) and count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub mean: f64,
    pub std_dev: f64,
    pub n: usize,
}

impl SampleStats {
    pub fn variance(&self) -> f64 {
        self.std_dev * self.std_dev
    }
}

pub fn describe(samples: &[f64]) -> Result<SampleStats, StatsError> {
    let n = samples.len();
    if n == 0 {
        return Err(StatsError::EmptySample);
    }
    let first = samples[0];
    if samples.iter().all(|&x| x == first) {
        return Ok(SampleStats { mean: first, std_dev: 0.0, n });
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
    Ok(SampleStats { mean, std_dev: (ss / (n - 1) as f64).sqrt(), n })
}

/// Test statistic, degrees of freedom and two-sided p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    pub statistic: f64,
    pub dof: f64,
    pub p_value: f64,
    pub significant: bool,
}

impl StatResult {
    pub fn new(statistic: f64, dof: f64, p_value: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self { statistic, dof, p_value, significant: p_value <= ALPHA }
    }
}
