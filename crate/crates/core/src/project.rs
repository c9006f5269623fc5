//! Annotation project: corpus, annotators, annotations and adjudication
//! records, persisted as one JSON file.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agreement::{CrossCheck, Resolution};
use crate::annotation::{EarAnnotation, RelationKey};
use crate::catalog::RelationType;
use crate::corpus::Microtext;
use crate::reporting::ClueTag;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Dev,
    Test,
}

/// Which texts a statistic covers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitFilter {
    #[default]
    All,
    Dev,
    Test,
}

impl SplitFilter {
    pub fn admits(self, split: Split) -> bool {
        match self {
            SplitFilter::All => true,
            SplitFilter::Dev => split == Split::Dev,
            SplitFilter::Test => split == Split::Test,
        }
    }
}

impl fmt::Display for SplitFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitFilter::All => "all",
            SplitFilter::Dev => "dev",
            SplitFilter::Test => "test",
        })
    }
}

impl FromStr for SplitFilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(SplitFilter::All),
            "dev" => Ok(SplitFilter::Dev),
            "test" => Ok(SplitFilter::Test),
            other => Err(format!("unknown split `{other}` (expected all, dev or test)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Project {
    pub id: String,
    /// Bumped on every accepted write.
    #[serde(default)]
    pub revision: u64,
    #[serde(default)]
    pub rng_seed: u64,
    pub corpus: Vec<Microtext>,
    pub annotators: Vec<String>,
    #[serde(default)]
    pub annotations: Vec<EarAnnotation>,
    #[serde(default)]
    pub cross_checks: Vec<CrossCheck>,
    /// Stage-3 discussion outcomes.
    #[serde(default)]
    pub resolutions: Vec<Resolution>,
    /// Texts absent from the map belong to the test split.
    #[serde(default)]
    pub split: BTreeMap<String, Split>,
    #[serde(default)]
    pub clue_tags: Vec<ClueTag>,
}

impl Project {
    pub fn new(id: impl Into<String>, corpus: Vec<Microtext>, annotators: Vec<String>) -> Self {
        Project {
            id: id.into(),
            revision: 0,
            rng_seed: 0,
            corpus,
            annotators,
            annotations: Vec::new(),
            cross_checks: Vec::new(),
            resolutions: Vec::new(),
            split: BTreeMap::new(),
            clue_tags: Vec::new(),
        }
    }

    pub fn text(&self, id: &str) -> Option<&Microtext> {
        self.corpus.iter().find(|t| t.id == id)
    }

    pub fn split_of(&self, text_id: &str) -> Split {
        self.split.get(text_id).copied().unwrap_or(Split::Test)
    }

    /// Relations of texts in the split, in corpus order.
    pub fn relations(&self, filter: SplitFilter) -> impl Iterator<Item = (RelationKey, RelationType)> + '_ {
        self.corpus
            .iter()
            .filter(move |t| filter.admits(self.split_of(&t.id)))
            .flat_map(|t| {
                t.relations
                    .iter()
                    .map(move |r| (RelationKey::new(&t.id, &r.id), r.rel_type))
            })
    }

    pub fn relation_type(&self, key: &RelationKey) -> Option<RelationType> {
        self.text(&key.text_id)?
            .relation(&key.relation_id)
            .map(|r| r.rel_type)
    }

    /// Inserts or replaces the annotation by the same annotator, relation
    /// and stage.
    pub fn upsert_annotation(&mut self, a: EarAnnotation) {
        match self
            .annotations
            .iter_mut()
            .find(|x| x.key() == a.key() && x.annotator == a.annotator && x.stage == a.stage)
        {
            Some(slot) => *slot = a,
            None => self.annotations.push(a),
        }
    }

    pub fn upsert_cross_check(&mut self, c: CrossCheck) {
        match self
            .cross_checks
            .iter_mut()
            .find(|x| x.key() == c.key() && x.annotator == c.annotator)
        {
            Some(slot) => *slot = c,
            None => self.cross_checks.push(c),
        }
    }

    pub fn upsert_resolution(&mut self, r: Resolution) {
        match self
            .resolutions
            .iter_mut()
            .find(|x| x.key() == r.key() && x.stage == r.stage)
        {
            Some(slot) => *slot = r,
            None => self.resolutions.push(r),
        }
    }
}

#[derive(Debug, Error)]
pub enum ProjectError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Format {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: schema version {found} is not supported (expected {SCHEMA_VERSION})")]
    SchemaVersion { path: PathBuf, found: u64 },
}

#[derive(Serialize)]
struct EnvelopeOut<'a> {
    schema_version: u32,
    #[serde(flatten)]
    project: &'a Project,
}

#[derive(Deserialize)]
struct EnvelopeIn {
    schema_version: u64,
    #[serde(flatten)]
    project: Project,
}

pub fn project_to_json(project: &Project) -> String {
    serde_json::to_string_pretty(&EnvelopeOut {
        schema_version: SCHEMA_VERSION,
        project,
    })
    .expect("project serializes")
}

pub fn project_from_json(source: &str, path: &Path) -> Result<Project, ProjectError> {
    let value: serde_json::Value =
        serde_json::from_str(source).map_err(|source| ProjectError::Format {
            path: path.to_path_buf(),
            source,
        })?;
    let found = value.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0);
    if found != u64::from(SCHEMA_VERSION) {
        return Err(ProjectError::SchemaVersion {
            path: path.to_path_buf(),
            found,
        });
    }
    let env: EnvelopeIn = serde_json::from_value(value).map_err(|source| ProjectError::Format {
        path: path.to_path_buf(),
        source,
    })?;
    debug_assert_eq!(env.schema_version, u64::from(SCHEMA_VERSION));
    Ok(env.project)
}

pub fn load_project(path: &Path) -> Result<Project, ProjectError> {
    let source = fs::read_to_string(path).map_err(|source| ProjectError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    project_from_json(&source, path)
}

/// Writes to a sibling temp file, syncs it and renames it over `path`, so
/// a crash leaves either the old or the new file.
pub fn save_project(project: &Project, path: &Path) -> Result<(), ProjectError> {
    let io = |source| ProjectError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(project_to_json(project).as_bytes()).map_err(io)?;
        f.sync_all().map_err(io)?;
    }
    fs::rename(&tmp, path).map_err(io)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        if let Ok(d) = fs::File::open(dir) {
            let _ = d.sync_all();
        }
    }
    Ok(())
}
