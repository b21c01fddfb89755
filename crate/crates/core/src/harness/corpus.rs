//! Corpus of (process, type) pairs with expected verdicts.
//!
//! A corpus is a directory holding `manifest.toml` and the `.st`, `.proc`
//! and `.mon` files it names:
//!
//! ```toml
//! [[entry]]
//! name = "auth"
//! type = "auth.st"
//! process = "auth_client.proc"
//! expected = "well-typed"
//! dead_code_free = true
//! ```
//!
//! Ill-typed entries may pin `root_rule`, `leaf_rule` and the stuck `class`
//! their witness should show; any entry may replace the synthesized monitor
//! with a hand-written `monitor` file.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::model::{Monitor, Process, SessionType};
use crate::parser::{parse_monitor, parse_process, parse_type, SourceError};
use crate::semantics::StuckClass;
use crate::typecheck::{explain_failure, NegRule, TypingEnvs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expected {
    WellTyped,
    IllTyped,
}

impl fmt::Display for Expected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Expected::WellTyped => "well-typed",
            Expected::IllTyped => "ill-typed",
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    #[serde(default)]
    entry: Vec<RawEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    name: String,
    #[serde(rename = "type")]
    type_file: String,
    process: String,
    expected: Expected,
    #[serde(default)]
    dead_code_free: bool,
    monitor: Option<String>,
    root_rule: Option<String>,
    leaf_rule: Option<String>,
    class: Option<String>,
    #[serde(default)]
    note: String,
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub process: Process,
    pub session_type: SessionType,
    pub expected: Expected,
    pub dead_code_free: bool,
    /// Replaces the synthesized monitor when present.
    pub monitor: Option<Monitor>,
    pub root_rule: Option<NegRule>,
    pub leaf_rule: Option<NegRule>,
    pub class: Option<StuckClass>,
    pub note: String,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub entries: Vec<CorpusEntry>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Manifest { path: PathBuf, source: toml::de::Error },
    #[error("{}:{source}", path.display())]
    Parse { path: PathBuf, source: SourceError },
    #[error("entry `{entry}`: unknown {what} `{value}`")]
    Unknown { entry: String, what: &'static str, value: String },
    #[error("duplicate entry `{0}`")]
    Duplicate(String),
    #[error("self-validation failed:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

impl Corpus {
    /// Loads and self-validates the corpus in `dir`.
    pub fn load(dir: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
        let dir = dir.as_ref();
        let manifest_path = dir.join("manifest.toml");
        let text = read(&manifest_path)?;
        let manifest: Manifest =
            toml::from_str(&text).map_err(|source| CorpusError::Manifest { path: manifest_path.clone(), source })?;
        let mut corpus = Corpus::default();
        for raw in manifest.entry {
            if corpus.get(&raw.name).is_some() {
                return Err(CorpusError::Duplicate(raw.name));
            }
            corpus.entries.push(load_entry(dir, raw)?);
        }
        let issues = corpus.validate();
        if issues.is_empty() {
            Ok(corpus)
        } else {
            Err(CorpusError::Invalid(issues))
        }
    }

    pub fn get(&self, name: &str) -> Option<&CorpusEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn well_typed(&self) -> impl Iterator<Item = &CorpusEntry> {
        self.entries.iter().filter(|e| e.expected == Expected::WellTyped)
    }

    pub fn ill_typed(&self) -> impl Iterator<Item = &CorpusEntry> {
        self.entries.iter().filter(|e| e.expected == Expected::IllTyped)
    }

    /// Disagreements between annotations and the typechecker.
    pub fn validate(&self) -> Vec<String> {
        let mut issues = Vec::new();
        for e in &self.entries {
            let report = explain_failure(&TypingEnvs::empty(), &e.process, &e.session_type);
            match (e.expected, &report) {
                (Expected::WellTyped, Some(r)) => issues.push(format!("{}: expected well-typed, but {r}", e.name)),
                (Expected::IllTyped, None) => issues.push(format!("{}: expected ill-typed, but it typechecks", e.name)),
                _ => {}
            }
            let Some(r) = report else { continue };
            if let Some(root) = e.root_rule.filter(|&root| root != r.rule) {
                issues.push(format!("{}: expected root {root}, got {}", e.name, r.rule));
            }
            if let Some(leaf) = e.leaf_rule.filter(|&leaf| leaf != r.leaf()) {
                issues.push(format!("{}: expected leaf {leaf}, got {}", e.name, r.leaf()));
            }
        }
        issues
    }
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_owned(), source })
}

fn load_entry(dir: &Path, raw: RawEntry) -> Result<CorpusEntry, CorpusError> {
    fn parsed<T>(dir: &Path, file: &str, f: fn(&str) -> Result<T, SourceError>) -> Result<T, CorpusError> {
        let path = dir.join(file);
        let text = read(&path)?;
        f(&text).map_err(|source| CorpusError::Parse { path, source })
    }
    let rule = |what, v: Option<String>| -> Result<Option<NegRule>, CorpusError> {
        v.map(|s| NegRule::from_name(&s).ok_or(CorpusError::Unknown { entry: raw.name.clone(), what, value: s }))
            .transpose()
    };
    let root_rule = rule("rule", raw.root_rule.clone())?;
    let leaf_rule = rule("rule", raw.leaf_rule.clone())?;
    let class = raw
        .class
        .clone()
        .map(|s| StuckClass::from_name(&s).ok_or(CorpusError::Unknown { entry: raw.name.clone(), what: "class", value: s }))
        .transpose()?;
    Ok(CorpusEntry {
        session_type: parsed(dir, &raw.type_file, parse_type)?,
        process: parsed(dir, &raw.process, parse_process)?,
        monitor: raw.monitor.as_deref().map(|m| parsed(dir, m, parse_monitor)).transpose()?,
        name: raw.name,
        expected: raw.expected,
        dead_code_free: raw.dead_code_free,
        root_rule,
        leaf_rule,
        class,
        note: raw.note,
    })
}
