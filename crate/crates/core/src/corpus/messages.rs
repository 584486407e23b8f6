use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::posteriors::normalize_connective;
use crate::error::{Error, Result};
use crate::segment::{message_tokens, Tag};

/// The keyword connectives used to collect the training corpus, one or more
/// per PDTB sense type.
pub const DEFAULT_KEYWORDS: [&str; 14] = [
    "after",
    "before",
    "when",
    "but",
    "though",
    "nevertheless",
    "however",
    "because",
    "if",
    "and",
    "for example",
    "or",
    "except",
    "also",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedWord {
    pub text: String,
    pub pos: Tag,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MessageContent {
    Text(String),
    /// Pre-tagged tokens; the fallback tagger is skipped.
    Tagged(Vec<TaggedWord>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawMessage {
    pub id: String,
    pub content: MessageContent,
    pub label: Option<String>,
}

impl RawMessage {
    pub fn text(id: impl Into<String>, text: impl Into<String>) -> Self {
        RawMessage {
            id: id.into(),
            content: MessageContent::Text(text.into()),
            label: None,
        }
    }

    pub fn is_tagged(&self) -> bool {
        matches!(self.content, MessageContent::Tagged(_))
    }
}

#[derive(Debug, Deserialize)]
pub(crate) struct MessageRecord {
    pub id: Option<String>,
    pub text: Option<String>,
    pub tokens: Option<Vec<TaggedWord>>,
    pub label: Option<String>,
}

impl MessageRecord {
    pub(crate) fn into_message(self, fallback_id: String) -> std::result::Result<RawMessage, String> {
        let content = match (self.text, self.tokens) {
            (_, Some(tokens)) => MessageContent::Tagged(tokens),
            (Some(text), None) => MessageContent::Text(text),
            (None, None) => return Err("record has neither \"text\" nor \"tokens\"".into()),
        };
        Ok(RawMessage {
            id: self.id.unwrap_or(fallback_id),
            content,
            label: self.label,
        })
    }
}

/// Reads a JSON-lines corpus. Blank lines are skipped.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<RawMessage>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: MessageRecord = serde_json::from_str(&line)
            .map_err(|e| Error::format(path, lineno, format!("malformed JSON: {e}")))?;
        if record.id.is_none() {
            return Err(Error::format(path, lineno, "missing \"id\""));
        }
        let message = record
            .into_message(String::new())
            .map_err(|m| Error::format(path, lineno, m))?;
        out.push(message);
    }
    Ok(out)
}

/// Keeps messages that contain a keyword connective as a standalone token
/// sequence, at most `cap` per keyword. Each message counts only for the
/// leftmost keyword it contains (longest keyword on ties).
pub fn build_training_corpus<S: AsRef<str>>(
    corpus: &[RawMessage],
    keyword_lexicon: &[S],
    cap: usize,
) -> Result<Vec<RawMessage>> {
    if keyword_lexicon.is_empty() {
        return Err(Error::Invalid("keyword lexicon is empty".into()));
    }
    if cap == 0 {
        return Err(Error::Invalid("cap must be positive".into()));
    }
    let keywords: Vec<(String, Vec<String>)> = keyword_lexicon
        .iter()
        .map(|k| {
            let k = normalize_connective(k.as_ref());
            let words = k.split_whitespace().map(str::to_string).collect();
            (k, words)
        })
        .filter(|(k, _)| !k.is_empty())
        .collect();

    let mut counts: HashMap<&str, usize> = HashMap::new();
    let mut kept = Vec::new();
    for message in corpus {
        let tokens: Vec<String> = message_tokens(message).into_iter().map(|t| t.text).collect();
        let Some(keyword) = first_keyword(&tokens, &keywords) else {
            continue;
        };
        let n = counts.entry(keyword).or_insert(0);
        if *n < cap {
            *n += 1;
            kept.push(message.clone());
        }
    }
    Ok(kept)
}

fn first_keyword<'k>(tokens: &[String], keywords: &'k [(String, Vec<String>)]) -> Option<&'k str> {
    for i in 0..tokens.len() {
        let best = keywords
            .iter()
            .filter(|(_, words)| {
                i + words.len() <= tokens.len()
                    && tokens[i..i + words.len()].iter().zip(words).all(|(t, w)| t == w)
            })
            .max_by_key(|(_, words)| words.len());
        if let Some((k, _)) = best {
            return Some(k);
        }
    }
    None
}
