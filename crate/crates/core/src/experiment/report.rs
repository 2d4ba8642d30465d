use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::analysis::{Cell, MpiCell, MpiRow, MpiTable, PositionCell, RejectCounts, ReportTables, TaskLabel, TaskRow};
use super::ExperimentError;
use crate::persona::{OceanFactor, TraitDirection};
use crate::scheduler::RejectReason;
use crate::stats::{CorrelationResult, ExpectedSchedule, ExpectedSlot, SampleStats, StatResult, END_OF_DAY};

fn mu_sigma(s: &SampleStats, decimals: usize) -> String {
    format!("{:.d$} ({:.d$})", s.mean, s.std_dev, d = decimals)
}

fn bold_if(text: String, on: bool) -> String {
    if on {
        format!("**{text}**")
    } else {
        text
    }
}

fn cell_text(c: &Cell, decimals: usize) -> String {
    match &c.stats {
        None => "n=0".to_string(),
        Some(s) => bold_if(mu_sigma(s, decimals), c.significant()),
    }
}

fn table_header(out: &mut String, first: &str, columns: &[String]) {
    let _ = writeln!(out, "| {first} | {} |", columns.join(" | "));
    let _ = writeln!(out, "|---|{}", "---|".repeat(columns.len()));
}

fn task_table(out: &mut String, t: &ReportTables, rows: &[TaskRow], decimals: usize) {
    table_header(out, "Task", &t.conditions);
    for row in rows {
        let cells: Vec<String> = row.cells.iter().map(|c| cell_text(c, decimals)).collect();
        let _ = writeln!(out, "| {} | {} |", row.task, cells.join(" | "));
    }
    let rejected: Vec<String> = t.rejects.iter().map(|r| r.rejected().to_string()).collect();
    let _ = writeln!(out, "| Reject | {} |", rejected.join(" | "));
}

fn direction_text(d: TraitDirection) -> &'static str {
    match d {
        TraitDirection::Positive => "Pos",
        TraitDirection::Negative => "Neg",
        TraitDirection::Neutral => "N/A",
    }
}

fn mpi_cell_text(c: &MpiCell) -> String {
    if c.n == 0 {
        return "n=0".to_string();
    }
    let mut s = format!("{:.2}", c.mean);
    if c.target {
        s.push_str("\\*");
    }
    bold_if(s, c.test.is_some_and(|t| t.significant))
}

/// The inventory table on its own: one row per induced condition, columns
/// O, C, E, A, N, control row `B` last. Significant cells are bold and the
/// induced factor carries `*`.
pub fn render_mpi_markdown(table: &MpiTable) -> String {
    let mut out = String::new();
    let factors: Vec<String> = OceanFactor::ALL.iter().map(|f| f.letter().to_string()).collect();
    let _ = writeln!(out, "| Factor | Dir | {} |", factors.join(" | "));
    let _ = writeln!(out, "|---|---|{}", "---|".repeat(factors.len()));
    let line = |out: &mut String, head: &str, dir: &str, row: &MpiRow| {
        let cells: Vec<String> = row.cells.iter().map(mpi_cell_text).collect();
        let _ = writeln!(out, "| {head} | {dir} | {} |", cells.join(" | "));
    };
    for row in &table.rows {
        let head = row.factor.map_or(row.label.clone(), |f| f.letter().to_string());
        line(&mut out, &head, direction_text(row.direction), row);
    }
    line(&mut out, "B", "N/A", &table.control);
    let _ = writeln!(out, "\nB: control condition `{}`.", table.control.label);
    out
}

/// Markdown report. Durations use one decimal, everything else two; σ is
/// parenthesised and cells that differ from control at p <= 0.05 are bold.
pub fn render_markdown(t: &ReportTables) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Schedule experiment report\n");
    let _ = writeln!(
        out,
        "Control condition: {}. Bold cells differ from control at p <= 0.05. Values are mean (std. dev.).\n",
        t.control
    );

    let _ = writeln!(out, "## Samples\n");
    let mut cols = vec!["Accepted".to_string(), "Rejected".to_string()];
    cols.extend(RejectReason::ALL.iter().map(|r| r.to_string()));
    table_header(&mut out, "Condition", &cols);
    for r in &t.rejects {
        let mut cells = vec![r.accepted.to_string(), r.rejected().to_string()];
        cells.extend(RejectReason::ALL.iter().map(|k| r.by_reason.get(k).copied().unwrap_or(0).to_string()));
        let _ = writeln!(out, "| {} | {} |", r.label, cells.join(" | "));
    }

    let _ = writeln!(out, "\n## Task durations (minutes)\n");
    task_table(&mut out, t, &t.durations, 1);

    if !t.frequencies.is_empty() {
        let _ = writeln!(out, "\n## Task frequency (occurrences per schedule)\n");
        task_table(&mut out, t, &t.frequencies, 2);
    }

    if !t.position_conditions.is_empty() {
        let _ = writeln!(out, "\n## Schedule positions\n");
        let _ = writeln!(
            out,
            "Slot of each task's first occurrence, and its correlation rho with the task's place in the prompt list.\n"
        );
        let mut cols = Vec::new();
        for c in &t.position_conditions {
            cols.push(format!("{c} mean (sd)"));
            cols.push(format!("{c} rho"));
        }
        table_header(&mut out, "Task", &cols);
        for (task, cells) in &t.positions {
            let mut parts = Vec::new();
            for c in cells {
                parts.push(c.stats.as_ref().map_or("n=0".to_string(), |s| mu_sigma(s, 2)));
                parts.push(c.correlation.map_or("n/a".to_string(), |r| format!("{:.2}", r.rho)));
            }
            let _ = writeln!(out, "| {task} | {} |", parts.join(" | "));
        }
    }

    if !t.expected.is_empty() {
        let _ = writeln!(out, "\n## Expected schedule\n");
        let _ = writeln!(
            out,
            "Most frequent task per slot. `(tie)` marks slots where several tasks share the top count.\n"
        );
        table_header(&mut out, "n", &t.conditions);
        let slots = t.expected.iter().filter_map(|(_, e)| e.as_ref()).map(|e| e.slots.len()).max().unwrap_or(0);
        for i in 0..slots {
            let cells: Vec<String> = t
                .expected
                .iter()
                .map(|(_, e)| match e {
                    None => "n=0".to_string(),
                    Some(e) => e.slots.get(i).map_or(String::new(), |s| {
                        let abbr = if s.task == END_OF_DAY { "End." } else { t.abbreviation(&s.task) };
                        if s.tie {
                            format!("{abbr} (tie)")
                        } else {
                            abbr.to_string()
                        }
                    }),
                })
                .collect();
            let _ = writeln!(out, "| {} | {} |", i + 1, cells.join(" | "));
        }
        let keys: Vec<String> = t.tasks.iter().map(|k| format!("{} {}", k.abbreviation, k.name)).collect();
        let _ = writeln!(out, "\nKey: {}.", keys.join(", "));
    }

    if let Some(mpi) = &t.mpi {
        let _ = writeln!(out, "\n## Personality inventory\n");
        out.push_str(&render_mpi_markdown(mpi));
    }
    out
}

/// One line of the long-format CSV. Numbers are written at full precision.
#[derive(Debug, Default, Serialize, Deserialize)]
struct CsvRow {
    table: String,
    row: String,
    column: String,
    value: String,
    mean: String,
    std_dev: String,
    n: String,
    statistic: String,
    dof: String,
    p_value: String,
    significant: String,
    flag: String,
}

impl CsvRow {
    fn new(table: &str, row: &str, column: &str) -> Self {
        Self { table: table.into(), row: row.into(), column: column.into(), ..Self::default() }
    }

    fn value(mut self, v: impl ToString) -> Self {
        self.value = v.to_string();
        self
    }

    fn stats(mut self, s: Option<&SampleStats>) -> Self {
        match s {
            Some(s) => {
                self.mean = s.mean.to_string();
                self.std_dev = s.std_dev.to_string();
                self.n = s.n.to_string();
            }
            None => self.n = "0".into(),
        }
        self
    }

    fn test(mut self, t: Option<&StatResult>) -> Self {
        if let Some(t) = t {
            self.statistic = t.statistic.to_string();
            self.dof = t.dof.to_string();
            self.p_value = t.p_value.to_string();
            self.significant = t.significant.to_string();
        }
        self
    }

    fn flag(mut self, f: &str) -> Self {
        self.flag = f.into();
        self
    }
}

fn mpi_rows(out: &mut Vec<CsvRow>, row: &MpiRow, control: bool) {
    for (f, c) in OceanFactor::ALL.iter().zip(&row.cells) {
        let mut r = CsvRow::new("mpi", &row.label, &f.letter().to_string()).test(c.test.as_ref());
        r.mean = c.mean.to_string();
        r.std_dev = c.std_dev.to_string();
        r.n = c.n.to_string();
        out.push(r.flag(if control {
            "control"
        } else if c.target {
            "target"
        } else {
            ""
        }));
    }
}

fn csv_rows(t: &ReportTables) -> Vec<CsvRow> {
    let mut out = vec![CsvRow::new("meta", "control", "").value(&t.control)];
    for c in &t.conditions {
        out.push(CsvRow::new("meta", "condition", c));
    }
    for k in &t.tasks {
        out.push(CsvRow::new("meta", "task", &k.name).value(&k.abbreviation));
    }
    for c in &t.position_conditions {
        out.push(CsvRow::new("meta", "position_condition", c));
    }
    for r in &t.rejects {
        out.push(CsvRow::new("rejects", &r.label, "accepted").value(r.accepted));
        out.push(CsvRow::new("rejects", &r.label, "total").value(r.total));
        for (reason, n) in &r.by_reason {
            out.push(CsvRow::new("rejects", &r.label, &reason.to_string()).value(n));
        }
    }
    for (name, rows) in [("durations", &t.durations), ("frequencies", &t.frequencies)] {
        for row in rows {
            for (label, c) in t.conditions.iter().zip(&row.cells) {
                out.push(CsvRow::new(name, &row.task, label).stats(c.stats.as_ref()).test(c.test.as_ref()));
            }
        }
    }
    for (task, cells) in &t.positions {
        for (label, c) in t.position_conditions.iter().zip(cells) {
            let mut r = CsvRow::new("positions", task, label).stats(c.stats.as_ref());
            if let Some(corr) = c.correlation {
                r.statistic = corr.rho.to_string();
                r.p_value = corr.p_value.to_string();
            }
            out.push(r);
        }
    }
    for (label, e) in &t.expected {
        for s in e.iter().flat_map(|e| &e.slots) {
            let mut r = CsvRow::new("expected", &s.index.to_string(), label).value(&s.task);
            r.n = s.frequency.to_string();
            out.push(r.flag(if s.tie { "tie" } else { "" }));
        }
    }
    if let Some(m) = &t.mpi {
        for row in &m.rows {
            mpi_rows(&mut out, row, false);
        }
        mpi_rows(&mut out, &m.control, true);
    }
    out
}

fn write_csv(rows: &[CsvRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
}

/// Long-format CSV carrying every statistic behind the markdown tables.
/// [`from_csv`] reads it back into identical tables.
pub fn render_csv(t: &ReportTables) -> String {
    write_csv(&csv_rows(t))
}

/// CSV of the inventory table alone.
pub fn render_mpi_csv(table: &MpiTable) -> String {
    let mut rows = Vec::new();
    for row in &table.rows {
        mpi_rows(&mut rows, row, false);
    }
    mpi_rows(&mut rows, &table.control, true);
    write_csv(&rows)
}

fn bad(r: &CsvRow, what: &str) -> ExperimentError {
    ExperimentError::Format(format!("report csv: {what} in {}/{}/{}", r.table, r.row, r.column))
}

fn num<T: std::str::FromStr>(r: &CsvRow, s: &str, what: &str) -> Result<T, ExperimentError> {
    s.parse().map_err(|_| bad(r, what))
}

fn read_stats(r: &CsvRow) -> Result<Option<SampleStats>, ExperimentError> {
    if r.mean.is_empty() {
        return Ok(None);
    }
    Ok(Some(SampleStats {
        mean: num(r, &r.mean, "mean")?,
        std_dev: num(r, &r.std_dev, "std_dev")?,
        n: num(r, &r.n, "n")?,
    }))
}

fn read_test(r: &CsvRow) -> Result<Option<StatResult>, ExperimentError> {
    if r.statistic.is_empty() {
        return Ok(None);
    }
    Ok(Some(StatResult {
        statistic: num(r, &r.statistic, "statistic")?,
        dof: num(r, &r.dof, "dof")?,
        p_value: num(r, &r.p_value, "p_value")?,
        significant: num(r, &r.significant, "significant")?,
    }))
}

fn index_of(list: &[String], key: &str, r: &CsvRow) -> Result<usize, ExperimentError> {
    list.iter().position(|x| x == key).ok_or_else(|| bad(r, "unknown label"))
}

fn read_mpi_cell(r: &CsvRow) -> Result<MpiCell, ExperimentError> {
    Ok(MpiCell {
        mean: num(r, &r.mean, "mean")?,
        std_dev: num(r, &r.std_dev, "std_dev")?,
        n: num(r, &r.n, "n")?,
        test: read_test(r)?,
        target: r.flag == "target",
    })
}

/// Reads tables written by [`render_csv`].
pub fn from_csv(s: &str) -> Result<ReportTables, ExperimentError> {
    let mut reader = csv::Reader::from_reader(s.as_bytes());
    let rows: Vec<CsvRow> = reader
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| ExperimentError::Format(format!("report csv: {e}")))?;

    let mut t = ReportTables {
        control: String::new(),
        conditions: vec![],
        tasks: vec![],
        rejects: vec![],
        durations: vec![],
        frequencies: vec![],
        position_conditions: vec![],
        positions: vec![],
        expected: vec![],
        mpi: None,
    };
    for r in rows.iter().filter(|r| r.table == "meta") {
        match r.row.as_str() {
            "control" => t.control = r.value.clone(),
            "condition" => t.conditions.push(r.column.clone()),
            "task" => t.tasks.push(TaskLabel { name: r.column.clone(), abbreviation: r.value.clone() }),
            "position_condition" => t.position_conditions.push(r.column.clone()),
            _ => return Err(bad(r, "unknown meta row")),
        }
    }
    let blank_rows = |n: usize| -> Vec<TaskRow> {
        t.tasks.iter().map(|k| TaskRow { task: k.name.clone(), cells: vec![Cell::default(); n] }).collect()
    };
    t.durations = blank_rows(t.conditions.len());
    t.frequencies = blank_rows(t.conditions.len());
    t.positions =
        t.tasks.iter().map(|k| (k.name.clone(), vec![PositionCell::default(); t.position_conditions.len()])).collect();
    t.rejects = t
        .conditions
        .iter()
        .map(|c| RejectCounts { label: c.clone(), accepted: 0, total: 0, by_reason: BTreeMap::new() })
        .collect();
    let mut expected: Vec<Option<ExpectedSchedule>> = vec![None; t.conditions.len()];
    let mut mpi_rows: Vec<(String, Vec<MpiCell>, bool)> = Vec::new();
    let task_names: Vec<String> = t.tasks.iter().map(|k| k.name.clone()).collect();

    for r in rows.iter().filter(|r| r.table != "meta") {
        match r.table.as_str() {
            "rejects" => {
                let rc = &mut t.rejects[index_of(&t.conditions, &r.row, r)?];
                let n: usize = num(r, &r.value, "count")?;
                match r.column.as_str() {
                    "accepted" => rc.accepted = n,
                    "total" => rc.total = n,
                    reason => {
                        let reason: RejectReason = serde_json::from_value(serde_json::Value::String(reason.into()))
                            .map_err(|_| bad(r, "reason"))?;
                        rc.by_reason.insert(reason, n);
                    }
                }
            }
            "durations" | "frequencies" => {
                let ti = index_of(&task_names, &r.row, r)?;
                let ci = index_of(&t.conditions, &r.column, r)?;
                let target = if r.table == "durations" { &mut t.durations } else { &mut t.frequencies };
                target[ti].cells[ci] = Cell { stats: read_stats(r)?, test: read_test(r)? };
            }
            "positions" => {
                let ti = index_of(&task_names, &r.row, r)?;
                let ci = index_of(&t.position_conditions, &r.column, r)?;
                let stats = read_stats(r)?;
                let correlation = if r.statistic.is_empty() {
                    None
                } else {
                    Some(CorrelationResult {
                        rho: num(r, &r.statistic, "rho")?,
                        n: stats.map_or(0, |s| s.n),
                        p_value: num(r, &r.p_value, "p_value")?,
                    })
                };
                t.positions[ti].1[ci] = PositionCell { stats, correlation };
            }
            "expected" => {
                let ci = index_of(&t.conditions, &r.column, r)?;
                expected[ci].get_or_insert_with(ExpectedSchedule::default).slots.push(ExpectedSlot {
                    index: num(r, &r.row, "slot")?,
                    task: r.value.clone(),
                    frequency: num(r, &r.n, "frequency")?,
                    tie: r.flag == "tie",
                });
            }
            "mpi" => {
                let cell = read_mpi_cell(r)?;
                let control = r.flag == "control";
                match mpi_rows.last_mut() {
                    Some((label, cells, _)) if *label == r.row && cells.len() < OceanFactor::ALL.len() => {
                        cells.push(cell)
                    }
                    _ => mpi_rows.push((r.row.clone(), vec![cell], control)),
                }
            }
            _ => return Err(bad(r, "unknown table")),
        }
    }
    t.expected = t.conditions.iter().cloned().zip(expected).collect();
    if !mpi_rows.is_empty() {
        let mut control = None;
        let mut rows = Vec::new();
        for (label, cells, is_control) in mpi_rows {
            let row = MpiRow::labelled(&label, cells);
            if is_control {
                control = Some(row);
            } else {
                rows.push(row);
            }
        }
        let control =
            control.ok_or_else(|| ExperimentError::Format("report csv: inventory has no control row".into()))?;
        t.mpi = Some(MpiTable { rows, control });
    }
    Ok(t)
}

/// Writes `report.md` and `report.csv` into `dir`.
pub fn write_report(dir: &Path, t: &ReportTables) -> Result<(PathBuf, PathBuf), ExperimentError> {
    std::fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
    let md = dir.join("report.md");
    let csv = dir.join("report.csv");
    std::fs::write(&md, render_markdown(t)).map_err(|e| ExperimentError::io(&md, e))?;
    std::fs::write(&csv, render_csv(t)).map_err(|e| ExperimentError::io(&csv, e))?;
    Ok((md, csv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::analysis::{analyze_conditions, mpi_table, AcceptedSample, AnalysisOptions, ConditionData};
    use crate::persona::PersonaPrompt;
    use crate::psychometrics::TraitScoreReport;
    use crate::scheduler::{randomise_task_order, GenerationCondition, Schedule, ScheduleEntry, TaskCatalog};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tables() -> ReportTables {
        let cat = TaskCatalog::builtin();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut data = Vec::new();
        for (label, rand, shift) in
            [("Neutral", false, 0u32), ("C+", false, 25), ("Rand", true, 0), ("Empty", false, 0)]
        {
            let mut accepted = Vec::new();
            let n = if label == "Empty" { 0 } else { 30 };
            for index in 0..n {
                let order = if rand {
                    randomise_task_order(&cat, rng.random())
                } else {
                    cat.names().iter().map(|s| s.to_string()).collect()
                };
                let mut t = 480;
                let mut entries = Vec::new();
                let picked = std::iter::once(&order[order.len() - 1]).chain(order.iter().take(rng.random_range(2..8)));
                for task in picked {
                    let d = if task == "Work" { 60 + shift } else { 30 } + rng.random_range(0..40);
                    entries.push(ScheduleEntry { task: task.clone(), start: t, duration: d });
                    t += d;
                }
                accepted.push(AcceptedSample { index, task_order: order, schedule: Schedule::new(entries).unwrap() });
            }
            let mut cond = GenerationCondition::new(label, PersonaPrompt::neutral()).with_randomised_order(rand);
            cond.label = label.into();
            let rejects =
                if label == "C+" { vec![(30, RejectReason::UnknownTask), (31, RejectReason::Overlap)] } else { vec![] };
            data.push(ConditionData { condition: cond, accepted, rejects });
        }
        let mut t = analyze_conditions(&data, &cat, "Neutral", AnalysisOptions::default()).unwrap();
        let report = |label: &str, high: bool| {
            let scored = OceanFactor::ALL.iter().flat_map(|&f| {
                (0..24u8).map(move |k| {
                    let s = if high && f == OceanFactor::Conscientiousness { 4 + k % 2 } else { 1 + k % 5 };
                    (f, s)
                })
            });
            TraitScoreReport::from_scores(label, 5, scored.collect::<Vec<_>>(), 0)
        };
        t.mpi = Some(mpi_table(&[report("Neutral", false), report("C+", true)], "Neutral").unwrap());
        t
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let t = tables();
        let csv = render_csv(&t);
        let back = from_csv(&csv).unwrap();
        assert_eq!(back, t);
        assert_eq!(render_markdown(&back), render_markdown(&t));
        assert_eq!(render_csv(&back), csv);
    }

    #[test]
    fn bold_cells_are_backed_by_significant_tests() {
        let t = tables();
        let md = render_markdown(&t);
        let dur = md.split("## Task durations").nth(1).unwrap().split("\n## ").next().unwrap();
        for row in &t.durations {
            let line = dur.lines().find(|l| l.starts_with(&format!("| {} |", row.task))).unwrap();
            let cells: Vec<&str> = line.trim_matches('|').split('|').skip(1).map(str::trim).collect();
            for (c, text) in row.cells.iter().zip(cells) {
                assert_eq!(text.starts_with("**"), c.significant(), "{line}");
            }
        }
        let work = t.durations.iter().find(|r| r.task == "Work").unwrap();
        assert!(work.cells[1].significant());
        assert!(md.contains("| Reject | 0 | 2 | 0 | 0 |"));
        // empty condition renders n=0 markers
        assert!(dur
            .lines()
            .filter(|l| l.starts_with("| ") && !l.starts_with("| Task") && !l.starts_with("| Reject"))
            .all(|l| l.trim_end().ends_with("| n=0 |")));
    }

    #[test]
    fn mpi_rows_render() {
        let t = tables();
        let md = render_mpi_markdown(t.mpi.as_ref().unwrap());
        let c_row = md.lines().find(|l| l.starts_with("| C | Pos |")).unwrap();
        assert!(c_row.contains("\\***"), "{c_row}");
        assert!(md.lines().any(|l| l.starts_with("| B | N/A | 2.92 | 2.92 |")), "{md}");
    }
}
