//! Input files: skills to ingest and task splits.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adaptation::Query;
use crate::evolution::Task;
use crate::graph::{Layer, SkillUnit};
use crate::text::Substitution;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },
}

/// One entry of a skills file. `layer` is 1 to 4 or a layer name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkillRecord {
    pub id: String,
    pub layer: LayerSpec,
    pub content: String,
    #[serde(default)]
    pub children: Vec<String>,
    #[serde(default)]
    pub tags: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LayerSpec {
    Number(u8),
    Name(String),
}

impl LayerSpec {
    /// Unknown names map to layer 0, which graph validation rejects by name.
    pub fn layer(&self) -> Layer {
        match self {
            Self::Number(n) => Layer(*n),
            Self::Name(s) => Layer(match s.to_ascii_lowercase().as_str() {
                "policy" => 1,
                "strategy" => 2,
                "procedure" => 3,
                "primitive" => 4,
                _ => 0,
            }),
        }
    }
}

impl From<SkillRecord> for SkillUnit {
    fn from(r: SkillRecord) -> Self {
        SkillUnit::new(r.id, r.layer.layer(), r.content)
            .with_children(r.children)
            .with_tags(r.tags)
    }
}

/// One entry of a split file. Missing ids become `task0000`, `task0001`, ...
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskRecord {
    #[serde(default)]
    pub id: Option<String>,
    pub query: String,
    pub ground_truth: String,
    #[serde(default)]
    pub required_tags: BTreeSet<String>,
    #[serde(default)]
    pub substitutions: Vec<Substitution>,
}

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|source| InputError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, InputError> {
    serde_json::from_str(text).map_err(|e| InputError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn parse_skills(text: &str) -> Result<Vec<SkillUnit>, InputError> {
    let records: Vec<SkillRecord> = parse(Path::new("<skills>"), text)?;
    Ok(records.into_iter().map(SkillUnit::from).collect())
}

pub fn read_skills(path: &Path) -> Result<Vec<SkillUnit>, InputError> {
    let records: Vec<SkillRecord> = parse(path, &read(path)?)?;
    Ok(records.into_iter().map(SkillUnit::from).collect())
}

fn to_tasks(records: Vec<TaskRecord>) -> Vec<Task> {
    records
        .into_iter()
        .enumerate()
        .map(|(i, r)| Task {
            id: r.id.unwrap_or_else(|| format!("task{i:04}")),
            query: Query::new(r.query).with_substitutions(r.substitutions),
            ground_truth: r.ground_truth,
            required_tags: r.required_tags,
        })
        .collect()
}

pub fn parse_split(text: &str) -> Result<Vec<Task>, InputError> {
    parse(Path::new("<split>"), text).map(to_tasks)
}

pub fn read_split(path: &Path) -> Result<Vec<Task>, InputError> {
    parse(path, &read(path)?).map(to_tasks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skills_accept_numbers_and_names() {
        let units = parse_skills(
            r#"[{"id":"a","layer":"strategy","content":"x","children":["b"]},
                {"id":"b","layer":3,"content":"y","tags":["t"]}]"#,
        )
        .unwrap();
        assert_eq!(units[0].layer, Layer::STRATEGY);
        assert_eq!(units[0].children, ["b"]);
        assert_eq!(units[1].layer, Layer::PROCEDURE);
        assert!(units[1].tags.contains("t"));
        assert_eq!(parse_skills(r#"[{"id":"a","layer":"other","content":""}]"#).unwrap()[0].layer, Layer(0));
    }

    #[test]
    fn split_defaults() {
        let tasks = parse_split(
            r#"[{"query":"q","ground_truth":"g"},
                {"id":"named","query":"r","ground_truth":"h","substitutions":[{"from":"a","to":"b"}]}]"#,
        )
        .unwrap();
        assert_eq!(tasks[0].id, "task0000");
        assert!(tasks[0].required_tags.is_empty());
        assert_eq!(tasks[1].id, "named");
        assert_eq!(tasks[1].query.substitutions, [Substitution::new("a", "b")]);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(parse_split(r#"[{"query":"q","ground_truth":"g","extra":1}]"#).is_err());
    }
}
