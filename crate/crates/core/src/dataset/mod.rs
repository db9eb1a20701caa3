//! Annotated corpora: JSONL ingestion, batch simplification, length
//! statistics and execution equivalence between the two annotation styles.

mod equivalence;
mod stats;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::rewrite::{Purity, Rewriter, RuleSet};
use crate::syntax::{parse_sexp, print_pexp};

pub use equivalence::{execution_equivalence, EquivalenceReport, TurnVerdict, Verdict};
pub use stats::{length_quantiles, nearest_rank_quantiles, token_length, LengthStats, StatsError, Style};

/// One annotated user turn.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetTurn {
    pub dialogue_id: String,
    pub turn_index: usize,
    pub utterance: String,
    /// S-expression annotation.
    pub original: String,
    /// Call-style annotation, once simplified.
    pub simplified: Option<String>,
}

impl DatasetTurn {
    pub fn turn_id(&self) -> String {
        format!("{}/{}", self.dialogue_id, self.turn_index)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
}

#[derive(Deserialize)]
struct DialogueRecord {
    dialogue_id: String,
    turns: Vec<TurnRecord>,
}

#[derive(Deserialize)]
struct TurnRecord {
    #[serde(default)]
    utterance: Utterance,
    lispress: String,
    #[serde(default)]
    simplified: Option<String>,
}

// The released corpus nests the text under `original_text`.
#[derive(Deserialize)]
#[serde(untagged)]
enum Utterance {
    Plain(String),
    Nested { original_text: String },
}

impl Default for Utterance {
    fn default() -> Self {
        Utterance::Plain(String::new())
    }
}

#[derive(Serialize)]
struct DialogueOut<'a> {
    dialogue_id: &'a str,
    turns: Vec<TurnOut<'a>>,
}

#[derive(Serialize)]
struct TurnOut<'a> {
    utterance: &'a str,
    lispress: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    simplified: Option<&'a str>,
}

pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Vec<DatasetTurn>, DatasetError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| DatasetError::Io { path: path.display().to_string(), source })?;
    parse_jsonl(&text)
}

/// Flattens one-dialogue-per-line JSONL into turns. Blank lines are skipped.
pub fn parse_jsonl(text: &str) -> Result<Vec<DatasetTurn>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: DialogueRecord = serde_json::from_str(line)
            .map_err(|e| DatasetError::MalformedRecord { line: i + 1, message: e.to_string() })?;
        for (turn_index, t) in record.turns.into_iter().enumerate() {
            let utterance = match t.utterance {
                Utterance::Plain(s) => s,
                Utterance::Nested { original_text } => original_text,
            };
            out.push(DatasetTurn {
                dialogue_id: record.dialogue_id.clone(),
                turn_index,
                utterance,
                original: t.lispress,
                simplified: t.simplified,
            });
        }
    }
    Ok(out)
}

/// Inverse of `parse_jsonl`: consecutive turns of a dialogue share a line.
pub fn to_jsonl(turns: &[DatasetTurn]) -> String {
    let mut out = String::new();
    for group in turns.chunk_by(|a, b| a.dialogue_id == b.dialogue_id) {
        let record = DialogueOut {
            dialogue_id: &group[0].dialogue_id,
            turns: group
                .iter()
                .map(|t| TurnOut {
                    utterance: &t.utterance,
                    lispress: &t.original,
                    simplified: t.simplified.as_deref(),
                })
                .collect(),
        };
        out.push_str(&serde_json::to_string(&record).expect("plain strings serialize"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurnFailure {
    pub turn_id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplifyReport {
    pub turns: Vec<DatasetTurn>,
    pub failures: Vec<TurnFailure>,
}

/// Rewrites every original annotation to fixpoint and prints it call-style.
/// A turn that fails to parse or diverges keeps `simplified: None` and is
/// recorded; the batch carries on.
pub fn simplify_dataset(turns: &[DatasetTurn], rules: &RuleSet, purity: &dyn Purity) -> SimplifyReport {
    let rewriter = Rewriter::new(rules).with_purity(purity);
    let mut failures = Vec::new();
    let turns = turns
        .iter()
        .map(|t| {
            let simplified = parse_sexp(&t.original)
                .map_err(|e| e.to_string())
                .and_then(|e| rewriter.rewrite(&e).map_err(|e| e.to_string()));
            let mut t = t.clone();
            match simplified {
                Ok(e) => t.simplified = Some(print_pexp(&e)),
                Err(message) => {
                    failures.push(TurnFailure { turn_id: t.turn_id(), message });
                    t.simplified = None;
                }
            }
            t
        })
        .collect();
    SimplifyReport { turns, failures }
}
