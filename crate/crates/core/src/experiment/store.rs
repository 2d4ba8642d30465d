use std::collections::HashSet;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{slug, ExperimentError, ExperimentPlan};
use crate::concurrency::fan_out;
use crate::gateway::{ChatProvider, ChatRequest};
use crate::scheduler::{
    generate_sample, BootstrapConfig, GenerationCondition, RejectReason, Schedule, TaskCatalog, TaskDef,
};
use crate::seeding::derive_seed;

pub const SCHEMA_VERSION: u32 = 1;

const MANIFEST: &str = "manifest.json";
const RECORDS: &str = "records.jsonl";
const SCHEDULES: &str = "schedules";

/// Describes what a store was generated from. Runs may only be resumed with
/// a plan that produces the same fingerprint; the sample count is excluded so
/// a run can be extended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub fingerprint: String,
    pub seed: u64,
    pub samples_per_condition: usize,
    pub control: String,
    pub conditions: Vec<GenerationCondition>,
    pub bootstrap: BootstrapConfig,
    pub catalog: Vec<TaskDef>,
}

impl Manifest {
    fn for_plan(plan: &ExperimentPlan, catalog: &TaskCatalog) -> Self {
        let mut h = Sha256::new();
        let part = |h: &mut Sha256, v: serde_json::Value| {
            let s = v.to_string();
            h.update((s.len() as u64).to_le_bytes());
            h.update(s.as_bytes());
        };
        part(&mut h, serde_json::json!(SCHEMA_VERSION));
        part(&mut h, serde_json::json!(plan.seed));
        part(&mut h, serde_json::to_value(&plan.conditions).expect("conditions serialise"));
        part(&mut h, serde_json::to_value(&plan.bootstrap).expect("config serialises"));
        part(&mut h, serde_json::to_value(catalog.tasks()).expect("catalog serialises"));
        let fingerprint = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
        Self {
            schema_version: SCHEMA_VERSION,
            fingerprint,
            seed: plan.seed,
            samples_per_condition: plan.samples_per_condition,
            control: plan.control.clone(),
            conditions: plan.conditions.clone(),
            bootstrap: plan.bootstrap.clone(),
            catalog: catalog.tasks().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RecordOutcome {
    /// Path of the schedule file, relative to the condition directory.
    Accepted {
        schedule_file: String,
    },
    Rejected {
        reason: RejectReason,
        detail: String,
    },
}

/// One sample as persisted: the full request, the raw reply and what became
/// of it. Written once, never edited.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema: u32,
    pub label: String,
    pub index: usize,
    /// `derive_seed(master, label, index)`.
    pub seed: u64,
    pub request: ChatRequest,
    pub task_order: Vec<String>,
    pub raw: String,
    pub outcome: RecordOutcome,
    pub latency_ms: u64,
}

/// A loaded store: manifest, records per condition (in plan order) and the
/// accepted schedules they reference.
#[derive(Debug, Clone)]
pub struct RunStore {
    root: PathBuf,
    manifest: Manifest,
    records: Vec<Vec<RunRecord>>,
    schedules: Vec<Vec<Option<Schedule>>>,
}

fn read_manifest(root: &Path) -> Result<Option<Manifest>, ExperimentError> {
    let path = root.join(MANIFEST);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(ExperimentError::io(&path, e)),
    };
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| ExperimentError::Format(format!("{}: {e}", path.display())))?;
    let version = value.get("schema_version").and_then(|v| v.as_u64());
    if version != Some(u64::from(SCHEMA_VERSION)) {
        return Err(ExperimentError::Version(format!(
            "{} has schema {version:?}, this build reads {SCHEMA_VERSION}",
            path.display()
        )));
    }
    serde_json::from_value(value).map(Some).map_err(|e| ExperimentError::Format(format!("{}: {e}", path.display())))
}

fn write_manifest(root: &Path, m: &Manifest) -> Result<(), ExperimentError> {
    let path = root.join(MANIFEST);
    let mut s = serde_json::to_string_pretty(m).expect("manifest serialises");
    s.push('\n');
    fs::write(&path, s).map_err(|e| ExperimentError::io(&path, e))
}

/// Reads a condition's records. A trailing partial line (from a killed
/// writer) is cut off the file; anything else malformed is an error.
fn read_records(dir: &Path, label: &str) -> Result<Vec<RunRecord>, ExperimentError> {
    let path = dir.join(RECORDS);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(ExperimentError::io(&path, e)),
    };
    let complete = text.rfind('\n').map_or(0, |i| i + 1);
    if complete < text.len() {
        tracing::warn!(path = %path.display(), "dropping torn trailing record");
        let f = OpenOptions::new().write(true).open(&path).map_err(|e| ExperimentError::io(&path, e))?;
        f.set_len(complete as u64).map_err(|e| ExperimentError::io(&path, e))?;
    }
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text[..complete].lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: RunRecord = serde_json::from_str(line)
            .map_err(|e| ExperimentError::Format(format!("{} line {}: {e}", path.display(), i + 1)))?;
        if rec.schema != SCHEMA_VERSION {
            return Err(ExperimentError::Version(format!(
                "{} line {} has schema {}, expected {SCHEMA_VERSION}",
                path.display(),
                i + 1,
                rec.schema
            )));
        }
        if rec.label != label {
            return Err(ExperimentError::Format(format!(
                "{} line {}: record for `{}` in `{label}`",
                path.display(),
                i + 1,
                rec.label
            )));
        }
        if !seen.insert(rec.index) {
            return Err(ExperimentError::Format(format!("{}: sample {} recorded twice", path.display(), rec.index)));
        }
        out.push(rec);
    }
    Ok(out)
}

fn schedule_file(index: usize) -> String {
    format!("{SCHEDULES}/{index:05}.jsonl")
}

/// Generates every missing (condition, index) sample of `plan` into
/// `plan.output`, skipping those already recorded.
///
/// Samples are generated in parallel chunks but written strictly in index
/// order, schedule file before record, so a killed run leaves a prefix that a
/// restart completes into the same store an uninterrupted run would produce.
/// An unrecoverable provider error stops the run after writing everything
/// that preceded it.
pub fn run_experiment<P: ChatProvider + ?Sized>(
    plan: &ExperimentPlan,
    provider: &P,
    catalog: &TaskCatalog,
) -> Result<RunStore, ExperimentError> {
    plan.validate()?;
    let root = &plan.output;
    fs::create_dir_all(root).map_err(|e| ExperimentError::io(root, e))?;
    let mut manifest = Manifest::for_plan(plan, catalog);
    if let Some(existing) = read_manifest(root)? {
        if existing.fingerprint != manifest.fingerprint {
            return Err(ExperimentError::Version(format!(
                "{} was generated by a different plan (seed, conditions, prompts or catalog changed)",
                root.display()
            )));
        }
        manifest.samples_per_condition = manifest.samples_per_condition.max(existing.samples_per_condition);
    }
    write_manifest(root, &manifest)?;

    let parallelism = plan.bootstrap.parallelism.max(1).min(provider.max_parallelism());
    let chunk = parallelism * 4;
    for cond in &plan.conditions {
        let dir = root.join(slug(&cond.label));
        fs::create_dir_all(dir.join(SCHEDULES)).map_err(|e| ExperimentError::io(&dir, e))?;
        let done: HashSet<usize> = read_records(&dir, &cond.label)?.iter().map(|r| r.index).collect();
        let missing: Vec<usize> = (0..plan.samples_per_condition).filter(|i| !done.contains(i)).collect();
        if missing.is_empty() {
            continue;
        }
        tracing::info!(label = %cond.label, missing = missing.len(), "generating samples");
        let records_path = dir.join(RECORDS);
        let mut records = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&records_path)
            .map_err(|e| ExperimentError::io(&records_path, e))?;
        for batch in missing.chunks(chunk) {
            let outcomes = fan_out(batch.len(), parallelism, |k| {
                let index = batch[k];
                let seed = derive_seed(plan.seed, &cond.label, index as u64);
                generate_sample(provider, cond, catalog, index, seed, &plan.bootstrap)
            });
            for outcome in outcomes {
                let o = outcome?;
                let result = match o.result {
                    Ok(schedule) => {
                        let rel = schedule_file(o.index);
                        let path = dir.join(&rel);
                        fs::write(&path, schedule.to_jsonl()).map_err(|e| ExperimentError::io(&path, e))?;
                        RecordOutcome::Accepted { schedule_file: rel }
                    }
                    Err(r) => RecordOutcome::Rejected { reason: r.reason, detail: r.detail },
                };
                let rec = RunRecord {
                    schema: SCHEMA_VERSION,
                    label: cond.label.clone(),
                    index: o.index,
                    seed: o.seed,
                    request: o.request,
                    task_order: o.task_order,
                    raw: o.raw,
                    outcome: result,
                    latency_ms: o.latency_ms,
                };
                let mut line = serde_json::to_string(&rec).expect("record serialises");
                line.push('\n');
                records.write_all(line.as_bytes()).map_err(|e| ExperimentError::io(&records_path, e))?;
            }
            records.flush().map_err(|e| ExperimentError::io(&records_path, e))?;
        }
    }
    RunStore::load(root)
}

impl RunStore {
    pub fn load(root: &Path) -> Result<Self, ExperimentError> {
        let manifest = read_manifest(root)?
            .ok_or_else(|| ExperimentError::Format(format!("{} has no {MANIFEST}", root.display())))?;
        let mut records = Vec::with_capacity(manifest.conditions.len());
        let mut schedules = Vec::with_capacity(manifest.conditions.len());
        for cond in &manifest.conditions {
            let dir = root.join(slug(&cond.label));
            let mut recs = read_records(&dir, &cond.label)?;
            recs.sort_by_key(|r| r.index);
            let mut scheds = Vec::with_capacity(recs.len());
            for r in &recs {
                scheds.push(match &r.outcome {
                    RecordOutcome::Accepted { schedule_file } => {
                        let path = dir.join(schedule_file);
                        let text = fs::read_to_string(&path).map_err(|e| ExperimentError::io(&path, e))?;
                        Some(
                            Schedule::from_jsonl(&text)
                                .map_err(|e| ExperimentError::Format(format!("{}: {e}", path.display())))?,
                        )
                    }
                    RecordOutcome::Rejected { .. } => None,
                });
            }
            records.push(recs);
            schedules.push(scheds);
        }
        Ok(Self { root: root.to_path_buf(), manifest, records, schedules })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn conditions(&self) -> &[GenerationCondition] {
        &self.manifest.conditions
    }

    pub fn catalog(&self) -> Result<TaskCatalog, ExperimentError> {
        TaskCatalog::new(self.manifest.catalog.clone()).map_err(|e| ExperimentError::Format(e.to_string()))
    }

    fn position(&self, label: &str) -> Option<usize> {
        self.manifest.conditions.iter().position(|c| c.label == label)
    }

    /// Records of one condition, by index.
    pub fn records(&self, label: &str) -> &[RunRecord] {
        self.position(label).map_or(&[], |i| &self.records[i])
    }

    /// Records paired with their parsed schedule (`None` for rejects).
    pub fn samples(&self, label: &str) -> impl Iterator<Item = (&RunRecord, Option<&Schedule>)> {
        let i = self.position(label);
        let recs = i.map_or(&[][..], |i| &self.records[i][..]);
        let scheds = i.map_or(&[][..], |i| &self.schedules[i][..]);
        recs.iter().zip(scheds.iter().map(Option::as_ref))
    }

    pub fn total_records(&self) -> usize {
        self.records.iter().map(Vec::len).sum()
    }
}
