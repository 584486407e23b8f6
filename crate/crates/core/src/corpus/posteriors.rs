use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One level of the relation sense hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Class,
    Type,
    Subtype,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Class, Level::Type, Level::Subtype];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Level::Class => "class",
            Level::Type => "type",
            Level::Subtype => "subtype",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "class" => Ok(Level::Class),
            "type" => Ok(Level::Type),
            "subtype" => Ok(Level::Subtype),
            other => Err(Error::Posterior(format!("unknown level {other:?}"))),
        }
    }
}

/// Label vocabularies for the three levels. The position of a label is the
/// index of the corresponding output unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVocab {
    pub class: Vec<String>,
    #[serde(rename = "type")]
    pub type_: Vec<String>,
    pub subtype: Vec<String>,
}

impl LabelVocab {
    pub fn level(&self, level: Level) -> &[String] {
        match level {
            Level::Class => &self.class,
            Level::Type => &self.type_,
            Level::Subtype => &self.subtype,
        }
    }

    fn level_mut(&mut self, level: Level) -> &mut Vec<String> {
        match level {
            Level::Class => &mut self.class,
            Level::Type => &mut self.type_,
            Level::Subtype => &mut self.subtype,
        }
    }

    /// `[N_Class, N_Type, N_Subtype]`.
    pub fn sizes(&self) -> [usize; 3] {
        [self.class.len(), self.type_.len(), self.subtype.len()]
    }
}

/// Relation posteriors `P_level(label | connective)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorTable {
    labels: LabelVocab,
    // Stored normalized; levels absent for a connective are `None`.
    posteriors: BTreeMap<String, [Option<Vec<f64>>; 3]>,
    connectives: Vec<String>,
}

impl PosteriorTable {
    pub fn labels(&self) -> &LabelVocab {
        &self.labels
    }

    /// Connectives in first-seen order.
    pub fn connectives(&self) -> &[String] {
        &self.connectives
    }

    pub fn contains(&self, connective: &str) -> bool {
        self.posteriors.contains_key(connective)
    }

    /// Normalized distribution over `labels().level(level)`, if the table has
    /// an entry for this connective and level.
    pub fn posterior(&self, connective: &str, level: Level) -> Option<&[f64]> {
        self.posteriors
            .get(connective)
            .and_then(|levels| levels[level.index()].as_deref())
    }

    /// Probability of one named label, 0 when the label or entry is absent.
    pub fn probability(&self, connective: &str, level: Level, label: &str) -> f64 {
        let Some(dist) = self.posterior(connective, level) else {
            return 0.0;
        };
        self.labels
            .level(level)
            .iter()
            .position(|l| l == label)
            .map_or(0.0, |j| dist[j])
    }

    /// Parses the 4-column TSV layout. `origin` is used in error messages.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut labels = LabelVocab {
            class: Vec::new(),
            type_: Vec::new(),
            subtype: Vec::new(),
        };
        // Raw weights keyed by label index; the index space grows as labels appear.
        let mut raw: BTreeMap<String, [Option<Vec<f64>>; 3]> = BTreeMap::new();
        let mut connectives = Vec::new();

        for (lineno, line) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() != 4 {
                return Err(Error::format(
                    origin,
                    lineno,
                    format!("expected 4 tab-separated columns, found {}", cols.len()),
                ));
            }
            let level: Level = cols[0]
                .parse()
                .map_err(|e: Error| Error::format(origin, lineno, e.to_string()))?;
            let connective = normalize_connective(cols[1]);
            if connective.is_empty() {
                return Err(Error::format(origin, lineno, "empty connective"));
            }
            let label = cols[2];
            if label.is_empty() {
                return Err(Error::format(origin, lineno, "empty label"));
            }
            let weight: f64 = cols[3]
                .parse()
                .map_err(|_| Error::format(origin, lineno, format!("bad weight {:?}", cols[3])))?;
            if !weight.is_finite() || weight < 0.0 {
                return Err(Error::format(
                    origin,
                    lineno,
                    format!("weight must be finite and nonnegative, got {weight}"),
                ));
            }

            let vocab = labels.level_mut(level);
            let j = match vocab.iter().position(|l| l == label) {
                Some(j) => j,
                None => {
                    vocab.push(label.to_string());
                    vocab.len() - 1
                }
            };
            let entry = raw.entry(connective.clone()).or_insert_with(|| {
                connectives.push(connective.clone());
                [None, None, None]
            });
            let weights = entry[level.index()].get_or_insert_with(Vec::new);
            if weights.len() <= j {
                weights.resize(j + 1, 0.0);
            }
            // Repeated (connective, level, label) rows accumulate.
            weights[j] += weight;
        }

        if connectives.is_empty() {
            return Err(Error::Posterior(format!("{}: no rows", origin.display())));
        }

        let sizes = labels.sizes();
        for (connective, levels) in raw.iter_mut() {
            if levels[Level::Class.index()].is_none() {
                return Err(Error::Posterior(format!(
                    "connective {connective:?} has no class-level entry"
                )));
            }
            for level in Level::ALL {
                if let Some(weights) = levels[level.index()].as_mut() {
                    weights.resize(sizes[level.index()], 0.0);
                    let total: f64 = weights.iter().sum();
                    if total <= 0.0 {
                        return Err(Error::Posterior(format!(
                            "all-zero weights for connective {connective:?} at level {level}"
                        )));
                    }
                    for w in weights.iter_mut() {
                        *w /= total;
                    }
                }
            }
        }
        for level in Level::ALL {
            if labels.level(level).is_empty() {
                return Err(Error::Posterior(format!("no labels at level {level}")));
            }
        }

        Ok(PosteriorTable {
            labels,
            posteriors: raw,
            connectives,
        })
    }
}

/// Lowercases and collapses internal whitespace ("For  Example" → "for example").
pub fn normalize_connective(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn load_posterior_table(path: impl AsRef<Path>) -> Result<PosteriorTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    PosteriorTable::parse(&text, path)
}

/// The illustrative table shipped with the crate (4 classes, 16 types, 23 subtypes).
pub fn default_posterior_table() -> PosteriorTable {
    PosteriorTable::parse(DEFAULT_TABLE, Path::new("<builtin posteriors.tsv>"))
        .expect("builtin posterior table is well formed")
}

pub(crate) const DEFAULT_TABLE: &str = include_str!("../../data/posteriors.tsv");
