use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledInput, LabeledItem, PosteriorTable};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::segment::{segment_message, SegmentedMessage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    /// One DiscRE vector per argument pair.
    Pair,
    /// Mean DiscRE vector over a message's adjacent pairs.
    Message,
}

impl std::str::FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pair" => Ok(FeatureKind::Pair),
            "message" => Ok(FeatureKind::Message),
            other => Err(Error::Config(format!("unknown feature kind {other:?} (pair or message)"))),
        }
    }
}

/// DiscRE vector of a pair treated as a standalone two-argument message.
pub fn pair_features(arg1: &[String], arg2: &[String], model: &Model) -> Result<Vec<f64>> {
    if arg1.is_empty() || arg2.is_empty() {
        return Err(Error::Invalid("pair features need two nonempty arguments".into()));
    }
    model.discre_vector(&[arg1.to_vec(), arg2.to_vec()], 0, 1)
}

/// Mean DiscRE vector over the message's adjacent argument pairs. Errors
/// when the message has fewer than two arguments.
pub fn message_features(message: &SegmentedMessage, model: &Model) -> Result<Vec<f64>> {
    let pairs = message.adjacent_pairs();
    if pairs.is_empty() {
        return Err(Error::Invalid(format!(
            "message {:?} has {} argument(s) and no pair",
            message.id,
            message.arguments.len()
        )));
    }
    let mut sum = vec![0.0; model.config.discre_dim()];
    for pair in &pairs {
        let v = model.extract_discre(message, pair)?;
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
    }
    let n = pairs.len() as f64;
    Ok(sum.into_iter().map(|s| s / n).collect())
}

/// `message_features`, backing off to the self-pair `[a; a]` for a
/// single-argument message.
pub fn message_features_or_self_pair(message: &SegmentedMessage, model: &Model) -> Result<Vec<f64>> {
    match message.arguments.as_slice() {
        [] => Err(Error::Invalid(format!("message {:?} has no arguments", message.id))),
        [only] => pair_features(only, only, model),
        _ => message_features(message, model),
    }
}

/// Features for one labeled item under the given protocol. Pair records
/// whose Arg2 lacks the annotated connective get it prepended, matching the
/// explicit training instances.
pub fn item_features(item: &LabeledItem, kind: FeatureKind, model: &Model, table: &PosteriorTable) -> Result<Vec<f64>> {
    match (&item.input, kind) {
        (LabeledInput::Pair { arg1, arg2, connective, .. }, _) => {
            let arg2 = with_connective(arg2, connective.as_deref());
            pair_features(arg1, &arg2, model)
        }
        (LabeledInput::Message(msg), FeatureKind::Message) => {
            message_features_or_self_pair(&segment_message(msg, table), model)
        }
        (LabeledInput::Message(_), FeatureKind::Pair) => Err(Error::Invalid(format!(
            "item {:?} is a message record; pair features need arg1/arg2",
            item.id
        ))),
    }
}

fn with_connective(arg2: &[String], connective: Option<&str>) -> Vec<String> {
    let Some(c) = connective else {
        return arg2.to_vec();
    };
    let words: Vec<String> = c.split_whitespace().map(str::to_string).collect();
    if words.is_empty() || arg2.windows(words.len()).any(|w| w == words.as_slice()) {
        return arg2.to_vec();
    }
    words.into_iter().chain(arg2.iter().cloned()).collect()
}
