use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::PosteriorTable;
use crate::error::Result;
use crate::model::Model;
use crate::segment::SegmentedMessage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WordGroup {
    /// Connectives used as training keywords.
    KeyDc,
    /// Other connectives from the posterior table.
    NonKeyDc,
    Other,
}

impl WordGroup {
    pub fn name(self) -> &'static str {
        match self {
            WordGroup::KeyDc => "key-dc",
            WordGroup::NonKeyDc => "non-key-dc",
            WordGroup::Other => "other",
        }
    }

    pub fn is_connective(self) -> bool {
        self != WordGroup::Other
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordAttention {
    pub word: String,
    pub group: WordGroup,
    pub occurrences: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: WordGroup,
    pub types: usize,
    pub occurrences: usize,
    /// Mean weight over every occurrence of the group's words.
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionStats {
    pub words: Vec<WordAttention>,
    pub groups: Vec<GroupSummary>,
}

impl AttentionStats {
    pub fn group(&self, group: WordGroup) -> Option<&GroupSummary> {
        self.groups.iter().find(|g| g.group == group)
    }

    /// Occurrence-weighted mean over a set of groups.
    pub fn pooled_mean(&self, groups: &[WordGroup]) -> Option<f64> {
        let (mut sum, mut n) = (0.0, 0usize);
        for g in self.groups.iter().filter(|g| groups.contains(&g.group)) {
            sum += g.mean * g.occurrences as f64;
            n += g.occurrences;
        }
        (n > 0).then(|| sum / n as f64)
    }

    /// Per-word rows, then `#`-prefixed group summaries.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("word\tgroup\toccurrences\tmean_attention\n");
        for w in &self.words {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", w.word, w.group.name(), w.occurrences, w.mean);
        }
        for g in &self.groups {
            let _ = writeln!(out, "#group\t{}\t{}\t{}\t{}", g.group.name(), g.types, g.occurrences, g.mean);
        }
        out
    }
}

fn word_pieces<S: AsRef<str>>(phrases: impl IntoIterator<Item = S>) -> HashSet<String> {
    phrases
        .into_iter()
        .flat_map(|p| p.as_ref().split_whitespace().map(str::to_string).collect::<Vec<_>>())
        .collect()
}

/// Mean attention weight per word type over every argument of the corpus.
///
/// A word is Key DC if it is (part of) a keyword, Non-Key DC if it is
/// (part of) another connective in `table`, and Other otherwise.
pub fn attention_stats<S: AsRef<str>>(
    corpus: &[SegmentedMessage],
    model: &Model,
    keywords: &[S],
    table: Option<&PosteriorTable>,
) -> Result<AttentionStats> {
    let key = word_pieces(keywords.iter().map(AsRef::as_ref));
    let non_key: HashSet<String> = table
        .map(|t| word_pieces(t.connectives().iter()))
        .unwrap_or_default()
        .into_iter()
        .filter(|w| !key.contains(w))
        .collect();
    let group_of = |w: &str| {
        if key.contains(w) {
            WordGroup::KeyDc
        } else if non_key.contains(w) {
            WordGroup::NonKeyDc
        } else {
            WordGroup::Other
        }
    };

    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for message in corpus {
        for arg in message.arguments.iter().filter(|a| !a.is_empty()) {
            let (_, alpha) = model.encode_argument(arg)?;
            for (w, a) in arg.iter().zip(alpha) {
                let e = acc.entry(w.clone()).or_insert((0.0, 0));
                e.0 += a;
                e.1 += 1;
            }
        }
    }

    let mut words: Vec<WordAttention> = acc
        .into_iter()
        .map(|(word, (sum, n))| WordAttention {
            group: group_of(&word),
            mean: sum / n as f64,
            occurrences: n,
            word,
        })
        .collect();
    words.sort_by(|a, b| a.group.cmp(&b.group).then_with(|| a.word.cmp(&b.word)));

    let mut groups = Vec::new();
    for g in [WordGroup::KeyDc, WordGroup::NonKeyDc, WordGroup::Other] {
        let members: Vec<&WordAttention> = words.iter().filter(|w| w.group == g).collect();
        let occurrences: usize = members.iter().map(|w| w.occurrences).sum();
        let total: f64 = members.iter().map(|w| w.mean * w.occurrences as f64).sum();
        groups.push(GroupSummary {
            group: g,
            types: members.len(),
            occurrences,
            mean: if occurrences == 0 { 0.0 } else { total / occurrences as f64 },
        });
    }
    Ok(AttentionStats { words, groups })
}
