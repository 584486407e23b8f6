//! Weakly labeled training instances.
//!
//! Every explicit `(Arg1, Arg2, connective)` pair becomes an explicit
//! instance whose targets are the connective's sense posteriors, and an
//! implicit twin with the connective deleted from Arg2. Both carry the
//! whole message as context.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use log::debug;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{LabelVocab, Level, PosteriorTable};
use crate::error::{Error, Result};
use crate::segment::{ArgPair, SegmentedMessage};

/// Per-level soft targets `w`; the support indicator is `y_j = [w_j > 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetDistribution {
    pub levels: [Vec<f64>; 3],
}

impl TargetDistribution {
    pub fn level(&self, level: Level) -> &[f64] {
        &self.levels[level.index()]
    }

    pub fn support(&self, level: Level) -> Vec<bool> {
        self.level(level).iter().map(|&w| w > 0.0).collect()
    }

    pub fn sizes(&self) -> [usize; 3] {
        [self.levels[0].len(), self.levels[1].len(), self.levels[2].len()]
    }

    /// `Σ_levels H(w_level)`, the minimum of the soft-target cross-entropy.
    pub fn entropy(&self) -> f64 {
        self.levels
            .iter()
            .flatten()
            .filter(|&&w| w > 0.0)
            .map(|&w| -w * w.ln())
            .sum()
    }

    /// Index of the largest weight per level (first on ties).
    pub fn argmax(&self) -> [usize; 3] {
        let am = |v: &[f64]| {
            v.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (j, &w)| if w > best.1 { (j, w) } else { best })
                .0
        };
        [am(&self.levels[0]), am(&self.levels[1]), am(&self.levels[2])]
    }
}

#[derive(Serialize, Deserialize)]
struct LevelTargetRecord {
    w: Vec<f64>,
    y: Vec<u8>,
}

#[derive(Serialize, Deserialize)]
struct TargetsRecord {
    class: LevelTargetRecord,
    #[serde(rename = "type")]
    type_: LevelTargetRecord,
    subtype: LevelTargetRecord,
}

impl Serialize for TargetDistribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rec = |l: Level| LevelTargetRecord {
            w: self.level(l).to_vec(),
            y: self.support(l).into_iter().map(u8::from).collect(),
        };
        TargetsRecord {
            class: rec(Level::Class),
            type_: rec(Level::Type),
            subtype: rec(Level::Subtype),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TargetDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = TargetsRecord::deserialize(d)?;
        Ok(TargetDistribution {
            levels: [rec.class.w, rec.type_.w, rec.subtype.w],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Explicit,
    Implicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingInstance {
    pub message_id: String,
    /// Every argument of the message, in order.
    pub context: Vec<Vec<String>>,
    pub arg1_idx: usize,
    pub arg2_idx: usize,
    pub targets: TargetDistribution,
    pub kind: InstanceKind,
    pub connective: String,
}

impl TrainingInstance {
    pub fn arg1(&self) -> &[String] {
        &self.context[self.arg1_idx]
    }

    pub fn arg2(&self) -> &[String] {
        &self.context[self.arg2_idx]
    }
}

/// Targets for one connective. Levels the table lacks for this connective
/// get a uniform distribution.
pub fn pseudo_label(connective: &str, table: &PosteriorTable) -> Result<TargetDistribution> {
    if table.posterior(connective, Level::Class).is_none() {
        return Err(Error::Invalid(format!(
            "connective {connective:?} has no class-level posterior"
        )));
    }
    let sizes = table.labels().sizes();
    let levels = Level::ALL.map(|level| match table.posterior(connective, level) {
        Some(p) => p.to_vec(),
        None => {
            let n = sizes[level.index()];
            vec![1.0 / n as f64; n]
        }
    });
    Ok(TargetDistribution { levels })
}

pub fn make_explicit_instance(
    message: &SegmentedMessage,
    pair: &ArgPair,
    table: &PosteriorTable,
) -> Result<TrainingInstance> {
    let connective = pair
        .connective
        .as_deref()
        .ok_or_else(|| Error::Invalid("pair has no connective".into()))?;
    let n = message.arguments.len();
    if pair.arg1 >= n || pair.arg2 >= n || pair.arg1 == pair.arg2 {
        return Err(Error::Invalid(format!(
            "pair ({}, {}) invalid for {n} arguments in message {:?}",
            pair.arg1, pair.arg2, message.id
        )));
    }
    Ok(TrainingInstance {
        message_id: message.id.clone(),
        context: message.arguments.clone(),
        arg1_idx: pair.arg1,
        arg2_idx: pair.arg2,
        targets: pseudo_label(connective, table)?,
        kind: InstanceKind::Explicit,
        connective: connective.to_string(),
    })
}

/// Why an implicit twin was not produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImplicitSkip {
    NotExplicit,
    ConnectiveAbsent,
    EmptyArg2,
}

/// Removes every occurrence of the connective's token sequence from Arg2.
pub fn make_implicit_instance(
    explicit: &TrainingInstance,
) -> std::result::Result<TrainingInstance, ImplicitSkip> {
    if explicit.kind != InstanceKind::Explicit {
        return Err(ImplicitSkip::NotExplicit);
    }
    let words: Vec<&str> = explicit.connective.split_whitespace().collect();
    let arg2 = explicit.arg2();
    let mut kept = Vec::with_capacity(arg2.len());
    let mut removed = false;
    let mut i = 0;
    while i < arg2.len() {
        let end = i + words.len();
        if end <= arg2.len() && arg2[i..end].iter().zip(&words).all(|(t, w)| t == w) {
            removed = true;
            i = end;
        } else {
            kept.push(arg2[i].clone());
            i += 1;
        }
    }
    if !removed {
        return Err(ImplicitSkip::ConnectiveAbsent);
    }
    if kept.is_empty() {
        return Err(ImplicitSkip::EmptyArg2);
    }
    let mut implicit = explicit.clone();
    implicit.context[explicit.arg2_idx] = kept;
    implicit.kind = InstanceKind::Implicit;
    Ok(implicit)
}

/// Stable development-split membership from the message id alone.
pub fn is_dev_message(id: &str, dev_fraction: f64) -> bool {
    let digest = Sha256::digest(id.as_bytes());
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    let x = u64::from_le_bytes(head) as f64 / (u64::MAX as f64 + 1.0);
    x < dev_fraction
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSet {
    pub train: Vec<TrainingInstance>,
    pub dev: Vec<TrainingInstance>,
    /// Explicit pairs whose connective is missing from the table.
    pub unknown_connectives: usize,
    /// Explicit instances without an implicit twin.
    pub implicit_skipped: usize,
}

pub const DEV_FRACTION: f64 = 0.1;

/// Explicit and implicit instances for every explicit pair, in corpus
/// order, split into train and development sets by message id.
pub fn build_training_set(corpus: &[SegmentedMessage], table: &PosteriorTable) -> TrainingSet {
    build_training_set_with(corpus, table, DEV_FRACTION)
}

pub fn build_training_set_with(
    corpus: &[SegmentedMessage],
    table: &PosteriorTable,
    dev_fraction: f64,
) -> TrainingSet {
    let mut set = TrainingSet::default();
    for message in corpus {
        let dev = is_dev_message(&message.id, dev_fraction);
        for pair in &message.pairs {
            let Some(connective) = pair.connective.as_deref() else {
                continue;
            };
            if !table.contains(connective) {
                set.unknown_connectives += 1;
                continue;
            }
            let explicit = match make_explicit_instance(message, pair, table) {
                Ok(x) => x,
                Err(e) => {
                    debug!("skipping pair in {}: {e}", message.id);
                    set.unknown_connectives += 1;
                    continue;
                }
            };
            let implicit = make_implicit_instance(&explicit);
            let out = if dev { &mut set.dev } else { &mut set.train };
            out.push(explicit);
            match implicit {
                Ok(x) => out.push(x),
                Err(_) => set.implicit_skipped += 1,
            }
        }
    }
    set
}

/// One line of an instance file. The label vocabulary travels with every
/// record so the file alone fixes the head layout.
#[derive(Serialize, Deserialize)]
struct InstanceRecord {
    #[serde(flatten)]
    instance: TrainingInstance,
    labels: LabelVocab,
}

pub fn write_instances(path: impl AsRef<Path>, instances: &[TrainingInstance], labels: &LabelVocab) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for instance in instances {
        let rec = InstanceRecord {
            instance: instance.clone(),
            labels: labels.clone(),
        };
        serde_json::to_writer(&mut w, &rec).map_err(|e| Error::Invalid(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads an instance file. Returns `None` for the vocabulary when the file
/// has no records.
pub fn read_instances(path: impl AsRef<Path>) -> Result<(Vec<TrainingInstance>, Option<LabelVocab>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut labels: Option<LabelVocab> = None;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: InstanceRecord = serde_json::from_str(&line)
            .map_err(|e| Error::format(path, lineno, format!("malformed instance: {e}")))?;
        if rec.instance.targets.sizes() != rec.labels.sizes() {
            return Err(Error::format(path, lineno, "target sizes disagree with label vocabulary"));
        }
        if rec.instance.arg1_idx >= rec.instance.context.len()
            || rec.instance.arg2_idx >= rec.instance.context.len()
        {
            return Err(Error::format(path, lineno, "argument index out of range"));
        }
        match &labels {
            None => labels = Some(rec.labels),
            Some(l) if *l != rec.labels => {
                return Err(Error::format(path, lineno, "label vocabulary differs from earlier records"))
            }
            Some(_) => {}
        }
        out.push(rec.instance);
    }
    Ok((out, labels))
}
