use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ExperimentError, RecordOutcome, RunStore};
use crate::persona::{parse_condition_label, OceanFactor, TraitDirection};
use crate::psychometrics::{compare_traits, PsychometricsError, TraitScoreReport};
use crate::scheduler::{GenerationCondition, RejectReason, Schedule, TaskCatalog};
use crate::stats::{
    chi_square_independence, describe, expected_schedule, pearson_correlation, two_sample_t_test, ContingencyTable,
    CorrelationResult, ExpectedSchedule, SampleStats, StatResult, TTestKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AnalysisOptions {
    /// Average task frequency over all samples, counting rejects as
    /// schedules without the task, instead of over accepted samples only.
    pub frequency_over_total: bool,
    pub t_test: TTestKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcceptedSample {
    pub index: usize,
    /// Order the tasks were listed in the prompt.
    pub task_order: Vec<String>,
    pub schedule: Schedule,
}

/// Analysis input for one condition, independent of how it was stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionData {
    pub condition: GenerationCondition,
    pub accepted: Vec<AcceptedSample>,
    pub rejects: Vec<(usize, RejectReason)>,
}

impl ConditionData {
    pub fn total(&self) -> usize {
        self.accepted.len() + self.rejects.len()
    }

    pub fn from_store(store: &RunStore, condition: &GenerationCondition) -> Self {
        let mut data = Self { condition: condition.clone(), accepted: Vec::new(), rejects: Vec::new() };
        for (rec, schedule) in store.samples(&condition.label) {
            match (&rec.outcome, schedule) {
                (RecordOutcome::Accepted { .. }, Some(s)) => data.accepted.push(AcceptedSample {
                    index: rec.index,
                    task_order: rec.task_order.clone(),
                    schedule: s.clone(),
                }),
                (RecordOutcome::Rejected { reason, .. }, _) => data.rejects.push((rec.index, *reason)),
                (RecordOutcome::Accepted { .. }, None) => unreachable!("store loads every accepted schedule"),
            }
        }
        data
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskLabel {
    pub name: String,
    pub abbreviation: String,
}

/// μ(σ) of a population plus its test against control. `stats` is `None`
/// when the population is empty.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Cell {
    pub stats: Option<SampleStats>,
    pub test: Option<StatResult>,
}

impl Cell {
    pub fn significant(&self) -> bool {
        self.test.is_some_and(|t| t.significant)
    }
}

/// One task across all conditions, cells in condition order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRow {
    pub task: String,
    pub cells: Vec<Cell>,
}

/// Slot of a task's first occurrence, and its correlation with where the
/// task was listed in the prompt.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PositionCell {
    pub stats: Option<SampleStats>,
    pub correlation: Option<CorrelationResult>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectCounts {
    pub label: String,
    pub accepted: usize,
    pub total: usize,
    pub by_reason: BTreeMap<RejectReason, usize>,
}

impl RejectCounts {
    pub fn rejected(&self) -> usize {
        self.total - self.accepted
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpiCell {
    pub mean: f64,
    pub std_dev: f64,
    pub n: usize,
    pub test: Option<StatResult>,
    /// The factor this row's persona was induced on.
    pub target: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpiRow {
    pub label: String,
    pub factor: Option<OceanFactor>,
    pub direction: TraitDirection,
    /// O, C, E, A, N.
    pub cells: Vec<MpiCell>,
}

/// Induced conditions by OCEAN factor, each tested against the control row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpiTable {
    pub rows: Vec<MpiRow>,
    pub control: MpiRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTables {
    pub control: String,
    /// Condition labels, column order for every table.
    pub conditions: Vec<String>,
    pub tasks: Vec<TaskLabel>,
    pub rejects: Vec<RejectCounts>,
    /// Minutes per occurrence.
    pub durations: Vec<TaskRow>,
    /// Occurrences per schedule.
    pub frequencies: Vec<TaskRow>,
    /// Labels of the randomised-order conditions, column order of `positions`.
    pub position_conditions: Vec<String>,
    pub positions: Vec<(String, Vec<PositionCell>)>,
    /// `None` for conditions without accepted schedules.
    pub expected: Vec<(String, Option<ExpectedSchedule>)>,
    pub mpi: Option<MpiTable>,
}

impl ReportTables {
    pub fn abbreviation<'a>(&'a self, task: &'a str) -> &'a str {
        self.tasks.iter().find(|t| t.name == task).map_or(task, |t| t.abbreviation.as_str())
    }
}

/// Analysis of a loaded store against `control`.
pub fn analyze(store: &RunStore, control: &str, options: AnalysisOptions) -> Result<ReportTables, ExperimentError> {
    let data: Vec<ConditionData> = store.conditions().iter().map(|c| ConditionData::from_store(store, c)).collect();
    analyze_conditions(&data, &store.catalog()?, control, options)
}

fn occurrences<'a>(s: &'a Schedule, task: &'a str) -> impl Iterator<Item = &'a crate::scheduler::ScheduleEntry> {
    s.entries().iter().filter(move |e| e.task == task)
}

fn stats_of(xs: &[f64]) -> Option<SampleStats> {
    describe(xs).ok()
}

fn count_table(cond: &[f64], control: &[f64]) -> Option<ContingencyTable> {
    let bucket = |xs: &[f64]| {
        let mut b = vec![0u64; 3];
        for &x in xs {
            b[(x as usize).min(2)] += 1;
        }
        b
    };
    ContingencyTable::new(
        vec!["condition".into(), "control".into()],
        vec!["0".into(), "1".into(), "2+".into()],
        vec![bucket(cond), bucket(control)],
    )
    .ok()?
    .without_empty_margins()
}

/// Analysis over in-memory condition data. Pure: the same input always
/// gives the same tables.
pub fn analyze_conditions(
    data: &[ConditionData],
    catalog: &TaskCatalog,
    control: &str,
    options: AnalysisOptions,
) -> Result<ReportTables, ExperimentError> {
    let ctrl = data
        .iter()
        .position(|d| d.condition.label == control)
        .ok_or_else(|| ExperimentError::ControlMissing(control.to_string()))?;
    if data[ctrl].accepted.len() < 2 {
        return Err(ExperimentError::InsufficientControl {
            label: control.to_string(),
            accepted: data[ctrl].accepted.len(),
        });
    }
    let names = catalog.names();

    let durations_of = |d: &ConditionData, task: &str| -> Vec<f64> {
        d.accepted.iter().flat_map(|a| occurrences(&a.schedule, task).map(|e| f64::from(e.duration))).collect()
    };
    let frequencies_of = |d: &ConditionData, task: &str| -> Vec<f64> {
        let mut xs: Vec<f64> = d.accepted.iter().map(|a| occurrences(&a.schedule, task).count() as f64).collect();
        if options.frequency_over_total {
            xs.resize(xs.len() + d.rejects.len(), 0.0);
        }
        xs
    };

    let mut durations = Vec::with_capacity(names.len());
    let mut frequencies = Vec::with_capacity(names.len());
    for &task in &names {
        let ctrl_dur = durations_of(&data[ctrl], task);
        let ctrl_freq = frequencies_of(&data[ctrl], task);
        let mut dcells = Vec::with_capacity(data.len());
        let mut fcells = Vec::with_capacity(data.len());
        for (i, d) in data.iter().enumerate() {
            let dur = durations_of(d, task);
            let freq = frequencies_of(d, task);
            let (dtest, ftest) = if i == ctrl {
                (None, None)
            } else {
                (
                    two_sample_t_test(&dur, &ctrl_dur, options.t_test).ok(),
                    count_table(&freq, &ctrl_freq).and_then(|t| chi_square_independence(&t).ok()),
                )
            };
            dcells.push(Cell { stats: stats_of(&dur), test: dtest });
            fcells.push(Cell { stats: stats_of(&freq), test: ftest });
        }
        durations.push(TaskRow { task: task.to_string(), cells: dcells });
        frequencies.push(TaskRow { task: task.to_string(), cells: fcells });
    }

    let randomised: Vec<&ConditionData> = data.iter().filter(|d| d.condition.randomise_order).collect();
    let positions = names
        .iter()
        .map(|&task| {
            let cells = randomised
                .iter()
                .map(|d| {
                    let (listed, slot): (Vec<f64>, Vec<f64>) = d
                        .accepted
                        .iter()
                        .filter_map(|a| {
                            let slot = a.schedule.entries().iter().position(|e| e.task == task)?;
                            let listed = a.task_order.iter().position(|t| t == task)?;
                            Some(((listed + 1) as f64, (slot + 1) as f64))
                        })
                        .unzip();
                    PositionCell { stats: stats_of(&slot), correlation: pearson_correlation(&listed, &slot).ok() }
                })
                .collect();
            (task.to_string(), cells)
        })
        .collect();

    let expected = data
        .iter()
        .map(|d| {
            let seqs: Vec<Vec<&str>> = d.accepted.iter().map(|a| a.schedule.task_names()).collect();
            (d.condition.label.clone(), expected_schedule(&seqs, &names).ok())
        })
        .collect();

    let rejects = data
        .iter()
        .map(|d| {
            let mut by_reason = BTreeMap::new();
            for (_, r) in &d.rejects {
                *by_reason.entry(*r).or_insert(0) += 1;
            }
            RejectCounts { label: d.condition.label.clone(), accepted: d.accepted.len(), total: d.total(), by_reason }
        })
        .collect();

    Ok(ReportTables {
        control: control.to_string(),
        conditions: data.iter().map(|d| d.condition.label.clone()).collect(),
        tasks: catalog
            .tasks()
            .iter()
            .map(|t| TaskLabel { name: t.name.clone(), abbreviation: t.abbreviation.clone() })
            .collect(),
        rejects,
        durations,
        frequencies,
        position_conditions: randomised.iter().map(|d| d.condition.label.clone()).collect(),
        positions,
        expected,
        mpi: None,
    })
}

impl MpiRow {
    /// Factor and direction come from the label (`E+`); anything that does
    /// not parse is treated as a control row.
    pub fn labelled(label: &str, cells: Vec<MpiCell>) -> Self {
        let (factor, direction) = match parse_condition_label(label) {
            Ok((f, d)) => (Some(f), d),
            Err(_) => (None, TraitDirection::Neutral),
        };
        Self { label: label.to_string(), factor, direction, cells }
    }

    fn order_key(&self) -> (usize, TraitDirection, String) {
        (self.factor.map_or(OceanFactor::ALL.len(), |f| f.index()), self.direction, self.label.clone())
    }
}

/// Builds the inventory table from per-condition reports. Rows are sorted
/// O, C, E, A, N and positive before negative; the control row comes last.
pub fn mpi_table(reports: &[TraitScoreReport], control: &str) -> Result<MpiTable, ExperimentError> {
    let ctrl = reports
        .iter()
        .find(|r| r.label == control)
        .ok_or_else(|| ExperimentError::ControlMissing(control.to_string()))?;
    let plain = |r: &TraitScoreReport| -> Vec<MpiCell> {
        r.factors
            .iter()
            .map(|f| MpiCell { mean: f.mean, std_dev: f.std_dev, n: f.n, test: None, target: false })
            .collect()
    };
    let mut rows = Vec::new();
    for r in reports.iter().filter(|r| r.label != control) {
        let comparisons = compare_traits(r, ctrl).map_err(|e| match e {
            PsychometricsError::InsufficientData { factor, .. } => ExperimentError::InsufficientControl {
                label: format!("{} / {control} on {}", r.label, factor.name()),
                accepted: r.factor(factor).n.min(ctrl.factor(factor).n),
            },
            other => ExperimentError::Format(other.to_string()),
        })?;
        let mut row = MpiRow::labelled(&r.label, plain(r));
        for (cell, cmp) in row.cells.iter_mut().zip(&comparisons) {
            cell.test = Some(cmp.result);
            cell.target = row.factor == Some(cmp.factor);
        }
        rows.push(row);
    }
    rows.sort_by_key(MpiRow::order_key);
    Ok(MpiTable { rows, control: MpiRow::labelled(control, plain(ctrl)) })
}
