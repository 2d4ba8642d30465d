use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SchedulerError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskCategory {
    Work,
    NonWork,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskDef {
    pub name: String,
    pub abbreviation: String,
    pub category: TaskCategory,
    /// Extra names accepted when parsing.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
}

#[derive(Debug, Deserialize, Serialize)]
struct CatalogFile {
    #[serde(rename = "task")]
    tasks: Vec<TaskDef>,
}

/// Ordered task list. The order is the presentation order when tasks are not
/// shuffled, and the tie-break order for expected schedules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskCatalog {
    tasks: Vec<TaskDef>,
    lookup: HashMap<String, usize>,
}

const BUILTIN: &str = include_str!("../../data/catalog.toml");

/// Lowercased, whitespace-collapsed, trailing `.` dropped, so `Collab.`,
/// `collab` and `COLLAB .` all match.
fn normalise(name: &str) -> String {
    let collapsed = name.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    collapsed.trim_end_matches('.').trim_end().to_string()
}

impl TaskCatalog {
    pub fn new(tasks: Vec<TaskDef>) -> Result<Self, SchedulerError> {
        if tasks.is_empty() {
            return Err(SchedulerError::InvalidCatalog("catalog is empty".into()));
        }
        let mut lookup = HashMap::new();
        for (i, t) in tasks.iter().enumerate() {
            if t.name.trim().is_empty() || t.abbreviation.trim().is_empty() {
                return Err(SchedulerError::InvalidCatalog(format!("task {i} has a blank name or abbreviation")));
            }
            for key in std::iter::once(&t.name).chain(std::iter::once(&t.abbreviation)).chain(&t.aliases) {
                let k = normalise(key);
                match lookup.insert(k, i) {
                    Some(j) if j != i => {
                        return Err(SchedulerError::InvalidCatalog(format!(
                            "`{key}` is claimed by both {} and {}",
                            tasks[j].name, t.name
                        )))
                    }
                    _ => {}
                }
            }
        }
        Ok(Self { tasks, lookup })
    }

    /// The sixteen default tasks.
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN).expect("bundled catalog is valid")
    }

    pub fn from_toml_str(s: &str) -> Result<Self, SchedulerError> {
        let file: CatalogFile = toml::from_str(s).map_err(|e| SchedulerError::InvalidCatalog(e.to_string()))?;
        Self::new(file.tasks)
    }

    pub fn load(path: &Path) -> Result<Self, SchedulerError> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| SchedulerError::InvalidCatalog(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&CatalogFile { tasks: self.tasks.clone() }).expect("catalog serialises")
    }

    pub fn tasks(&self) -> &[TaskDef] {
        &self.tasks
    }

    pub fn names(&self) -> Vec<&str> {
        self.tasks.iter().map(|t| t.name.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    /// Case-insensitive lookup by name, abbreviation or alias.
    pub fn resolve(&self, name: &str) -> Option<&TaskDef> {
        self.lookup.get(&normalise(name)).map(|&i| &self.tasks[i])
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.lookup.get(&normalise(name)).copied()
    }

    pub fn abbreviation(&self, name: &str) -> Option<&str> {
        self.resolve(name).map(|t| t.abbreviation.as_str())
    }
}
