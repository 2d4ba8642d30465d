use serde::{Deserialize, Serialize};

use super::distributions::{chi_square_sf, student_t_two_tailed};
use super::{describe, StatResult, StatsError};

/// Variance assumption for the two-sample t-test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TTestKind {
    /// Unequal variances with Welch–Satterthwaite degrees of freedom.
    #[default]
    Welch,
    /// Student's pooled-variance test, `na + nb - 2` degrees of freedom.
    Pooled,
}

/// Welch's unequal-variance two-sample t-test, two-tailed.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<StatResult, StatsError> {
    two_sample_t_test(a, b, TTestKind::Welch)
}

/// Two-sample t-test of `mean(a) - mean(b)`.
///
/// When both samples have zero variance the statistic is 0 (equal means,
/// p = 1) or signed infinity (different means, p = 0).
pub fn two_sample_t_test(a: &[f64], b: &[f64], kind: TTestKind) -> Result<StatResult, StatsError> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(StatsError::InsufficientData { needed: 2, got: s.len() });
        }
    }
    let sa = describe(a)?;
    let sb = describe(b)?;
    let (na, nb) = (sa.n as f64, sb.n as f64);
    let (va, vb) = (sa.variance(), sb.variance());
    let diff = sa.mean - sb.mean;

    let (se2, dof) = match kind {
        TTestKind::Welch => {
            let qa = va / na;
            let qb = vb / nb;
            let se2 = qa + qb;
            let denom = qa * qa / (na - 1.0) + qb * qb / (nb - 1.0);
            let dof = if denom > 0.0 { se2 * se2 / denom } else { na + nb - 2.0 };
            (se2, dof)
        }
        TTestKind::Pooled => {
            let dof = na + nb - 2.0;
            let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / dof;
            (pooled * (1.0 / na + 1.0 / nb), dof)
        }
    };

    if se2 == 0.0 {
        return Ok(if diff == 0.0 {
            StatResult::new(0.0, dof, 1.0)
        } else {
            StatResult::new(diff.signum() * f64::INFINITY, dof, 0.0)
        });
    }
    let t = diff / se2.sqrt();
    let p = student_t_two_tailed(t, dof)?;
    Ok(StatResult::new(t, dof, p))
}

/// Rectangular table of observed counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ContingencyTable {
    pub fn new(row_labels: Vec<String>, col_labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self, StatsError> {
        if counts.len() != row_labels.len() {
            return Err(StatsError::InvalidTable("row label count does not match rows".into()));
        }
        if counts.iter().any(|r| r.len() != col_labels.len()) {
            return Err(StatsError::InvalidTable("ragged rows or column label mismatch".into()));
        }
        if counts.len() < 2 || col_labels.len() < 2 {
            return Err(StatsError::InvalidTable(format!(
                "need at least 2x2, got {}x{}",
                counts.len(),
                col_labels.len()
            )));
        }
        Ok(Self { row_labels, col_labels, counts })
    }

    /// Unlabelled table, rows and columns numbered from zero.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self, StatsError> {
        let rows = (0..counts.len()).map(|i| i.to_string()).collect();
        let cols = (0..counts.first().map_or(0, Vec::len)).map(|i| i.to_string()).collect();
        Self::new(rows, cols, counts)
    }

    pub fn rows(&self) -> usize {
        self.counts.len()
    }

    pub fn cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        (0..self.cols()).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }

    /// Drops all-zero rows and columns. Returns `None` when fewer than two rows
    /// or two columns survive, i.e. there is nothing left to test.
    pub fn without_empty_margins(&self) -> Option<Self> {
        let rt = self.row_totals();
        let ct = self.col_totals();
        let keep_r: Vec<usize> = (0..self.rows()).filter(|&i| rt[i] > 0).collect();
        let keep_c: Vec<usize> = (0..self.cols()).filter(|&j| ct[j] > 0).collect();
        if keep_r.len() < 2 || keep_c.len() < 2 {
            return None;
        }
        Some(Self {
            row_labels: keep_r.iter().map(|&i| self.row_labels[i].clone()).collect(),
            col_labels: keep_c.iter().map(|&j| self.col_labels[j].clone()).collect(),
            counts: keep_r.iter().map(|&i| keep_c.iter().map(|&j| self.counts[i][j]).collect()).collect(),
        })
    }
}

/// Pearson's chi-square test of independence.
pub fn chi_square_independence(table: &ContingencyTable) -> Result<StatResult, StatsError> {
    let rt = table.row_totals();
    let ct = table.col_totals();
    let total: u64 = rt.iter().sum();
    if let Some(i) = rt.iter().position(|&t| t == 0) {
        return Err(StatsError::DegenerateTable(format!("row {} is all zero", table.row_labels[i])));
    }
    if let Some(j) = ct.iter().position(|&t| t == 0) {
        return Err(StatsError::DegenerateTable(format!("column {} is all zero", table.col_labels[j])));
    }
    let total_f = total as f64;
    let mut chi2 = 0.0;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &obs) in row.iter().enumerate() {
            let expected = rt[i] as f64 * ct[j] as f64 / total_f;
            let d = obs as f64 - expected;
            chi2 += d * d / expected;
        }
    }
    let dof = ((table.rows() - 1) * (table.cols() - 1)) as f64;
    let p = chi_square_sf(chi2, dof)?;
    Ok(StatResult::new(chi2, dof, p))
}
