use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use super::messages::{MessageRecord, RawMessage, TaggedWord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum LabeledInput {
    /// A whole message, segmented on use.
    Message(RawMessage),
    /// A pre-segmented argument pair (e.g. PDTB). `section` is the PDTB
    /// section number when known.
    Pair {
        arg1: Vec<String>,
        arg2: Vec<String>,
        connective: Option<String>,
        section: Option<u32>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledItem {
    pub id: String,
    pub input: LabeledInput,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub items: Vec<LabeledItem>,
    /// Labels in first-seen order.
    pub label_set: Vec<String>,
}

impl LabeledDataset {
    pub fn new(items: Vec<LabeledItem>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::Invalid("labeled dataset is empty".into()));
        }
        let mut label_set: Vec<String> = Vec::new();
        for item in &items {
            if !label_set.contains(&item.label) {
                label_set.push(item.label.clone());
            }
        }
        Ok(LabeledDataset { items, label_set })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.items.iter().map(|i| i.label.as_str()).collect()
    }
}

#[derive(Debug, Deserialize)]
struct LabeledRecord {
    id: Option<String>,
    label: Option<String>,
    arg1: Option<Vec<String>>,
    arg2: Option<Vec<String>>,
    #[serde(default)]
    connective: Option<String>,
    section: Option<u32>,
    text: Option<String>,
    tokens: Option<Vec<TaggedWord>>,
}

/// Reads labeled JSON lines: pair records (`arg1`, `arg2`, `connective`,
/// `label`) or message records (`text` or `tokens`, `label`). Missing ids
/// default to the 1-based line number.
pub fn load_labeled_dataset(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut items = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LabeledRecord = serde_json::from_str(&line)
            .map_err(|e| Error::format(path, lineno, format!("malformed JSON: {e}")))?;
        let id = rec.id.clone().unwrap_or_else(|| lineno.to_string());
        let label = rec
            .label
            .clone()
            .ok_or_else(|| Error::format(path, lineno, "missing \"label\""))?;
        let input = match (rec.arg1, rec.arg2) {
            (Some(arg1), Some(arg2)) => {
                let lower = |v: Vec<String>| v.into_iter().map(|t| t.to_lowercase()).collect();
                LabeledInput::Pair {
                    arg1: lower(arg1),
                    arg2: lower(arg2),
                    connective: rec.connective.map(|c| super::normalize_connective(&c)),
                    section: rec.section,
                }
            }
            (None, None) => {
                let record = MessageRecord {
                    id: Some(id.clone()),
                    text: rec.text,
                    tokens: rec.tokens,
                    label: Some(label.clone()),
                };
                LabeledInput::Message(
                    record
                        .into_message(id.clone())
                        .map_err(|m| Error::format(path, lineno, m))?,
                )
            }
            _ => return Err(Error::format(path, lineno, "pair record needs both \"arg1\" and \"arg2\"")),
        };
        items.push(LabeledItem { id, input, label });
    }
    LabeledDataset::new(items).map_err(|_| Error::format(path, 0, "no labeled records"))
}
