use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold occurrences.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_class: Vec<ClassMetrics>,
    pub micro_f1: f64,
    pub macro_f1: f64,
}

impl MetricsReport {
    pub fn class(&self, label: &str) -> Option<&ClassMetrics> {
        self.per_class.iter().find(|c| c.label == label)
    }
}

/// Harmonic mean with the `0 when P + R = 0` convention.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class, micro and macro F1 over `label_set`.
pub fn f1_metrics<S: AsRef<str>>(gold: &[S], predicted: &[S], label_set: &[S]) -> Result<MetricsReport> {
    if gold.len() != predicted.len() {
        return Err(Error::Invalid(format!(
            "{} gold labels but {} predictions",
            gold.len(),
            predicted.len()
        )));
    }
    if label_set.is_empty() {
        return Err(Error::Invalid("empty label set".into()));
    }
    let index = |l: &str| {
        label_set
            .iter()
            .position(|x| x.as_ref() == l)
            .ok_or_else(|| Error::Invalid(format!("label {l:?} is not in the label set")))
    };
    let n = label_set.len();
    let (mut tp, mut fp, mut fne) = (vec![0usize; n], vec![0usize; n], vec![0usize; n]);
    for (g, p) in gold.iter().zip(predicted) {
        let (gi, pi) = (index(g.as_ref())?, index(p.as_ref())?);
        if gi == pi {
            tp[gi] += 1;
        } else {
            fp[pi] += 1;
            fne[gi] += 1;
        }
    }
    let per_class: Vec<ClassMetrics> = (0..n)
        .map(|i| {
            let precision = ratio(tp[i], tp[i] + fp[i]);
            let recall = ratio(tp[i], tp[i] + fne[i]);
            ClassMetrics {
                label: label_set[i].as_ref().to_string(),
                precision,
                recall,
                f1: f1_score(precision, recall),
                support: tp[i] + fne[i],
            }
        })
        .collect();
    let macro_f1 = per_class.iter().map(|c| c.f1).sum::<f64>() / n as f64;
    let (stp, sfp, sfn) = (tp.iter().sum(), fp.iter().sum::<usize>(), fne.iter().sum::<usize>());
    let micro_f1 = f1_score(ratio(stp, stp + sfp), ratio(stp, stp + sfn));
    Ok(MetricsReport {
        per_class,
        micro_f1,
        macro_f1,
    })
}
