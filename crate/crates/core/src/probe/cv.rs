use log::warn;
use sha2::{Digest, Sha256};

use super::linear::{train_linear, FeatureMatrix, LinearConfig};
use super::metrics::{f1_metrics, MetricsReport};
use crate::error::{Error, Result};

fn id_hash(seed: u64, id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(id.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

/// Stratified fold per item. Within each class, items are ordered by a
/// seeded hash of their id and dealt round-robin; a class with fewer than
/// `k` items falls back to `hash % k`.
pub fn assign_folds(ids: &[String], labels: &[String], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Config(format!("k-fold needs k >= 2, got {k}")));
    }
    if ids.len() != labels.len() {
        return Err(Error::Shape(format!("{} ids but {} labels", ids.len(), labels.len())));
    }
    if ids.len() < k {
        return Err(Error::Invalid(format!("{} items cannot fill {k} folds", ids.len())));
    }
    let mut classes: Vec<&String> = Vec::new();
    for l in labels {
        if !classes.contains(&l) {
            classes.push(l);
        }
    }
    let mut folds = vec![0; ids.len()];
    for class in classes {
        let mut members: Vec<(u64, usize)> = labels
            .iter()
            .enumerate()
            .filter(|(_, l)| *l == class)
            .map(|(i, _)| (id_hash(seed, &ids[i]), i))
            .collect();
        members.sort();
        if members.len() < k {
            warn!("class {class:?} has {} items, fewer than {k} folds; assigning by hash", members.len());
            for (h, i) in members {
                folds[i] = (h % k as u64) as usize;
            }
        } else {
            for (rank, (_, i)) in members.into_iter().enumerate() {
                folds[i] = rank % k;
            }
        }
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub report: MetricsReport,
    /// Held-out prediction for every item.
    pub predictions: Vec<String>,
    pub folds: Vec<usize>,
}

/// Trains on `k − 1` folds and predicts the held-out fold, for each fold;
/// metrics are computed over the pooled held-out predictions.
pub fn kfold_cv(data: &FeatureMatrix, ids: &[String], k: usize, config: LinearConfig) -> Result<CvResult> {
    let folds = assign_folds(ids, &data.labels, k, config.seed)?;
    let mut predictions = vec![String::new(); data.len()];
    for f in 0..k {
        let train_idx: Vec<usize> = (0..data.len()).filter(|&i| folds[i] != f).collect();
        let test_idx: Vec<usize> = (0..data.len()).filter(|&i| folds[i] == f).collect();
        if test_idx.is_empty() {
            continue;
        }
        let model = train_linear(&data.subset(&train_idx), config)?;
        for i in test_idx {
            predictions[i] = model.predict(&data.rows[i]).to_string();
        }
    }
    let report = f1_metrics(&data.labels, &predictions, &data.label_set())?;
    Ok(CvResult {
        report,
        predictions,
        folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("id{i}")).collect()
    }

    #[test]
    fn two_folds_over_four_items_hold_each_out_once() {
        let labels: Vec<String> = ["a", "a", "b", "b"].iter().map(|s| s.to_string()).collect();
        let f = assign_folds(&ids(4), &labels, 2, 1).unwrap();
        assert_eq!(f.iter().filter(|&&x| x == 0).count(), 2);
        assert_ne!(f[0], f[1]);
        assert_ne!(f[2], f[3]);
    }

    #[test]
    fn same_seed_same_folds() {
        let labels: Vec<String> = (0..30).map(|i| format!("c{}", i % 3)).collect();
        assert_eq!(
            assign_folds(&ids(30), &labels, 5, 9).unwrap(),
            assign_folds(&ids(30), &labels, 5, 9).unwrap()
        );
    }

    #[test]
    fn rare_class_still_assigned() {
        let mut labels: Vec<String> = (0..10).map(|_| "big".to_string()).collect();
        labels.push("rare".into());
        let f = assign_folds(&ids(11), &labels, 5, 0).unwrap();
        assert!(f.iter().all(|&x| x < 5));
    }

    #[test]
    fn bad_k_errors() {
        let labels = vec!["a".to_string(); 3];
        assert!(assign_folds(&ids(3), &labels, 1, 0).is_err());
        assert!(assign_folds(&ids(3), &labels, 4, 0).is_err());
    }

    #[test]
    fn pooled_report_matches_metrics_over_predictions() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![(i % 2) as f64 * 2.0 - 1.0, (i as f64).sin()]).collect();
        let labels: Vec<String> = (0..20).map(|i| if i % 2 == 0 { "n" } else { "p" }.to_string()).collect();
        let data = FeatureMatrix::new(rows, labels).unwrap();
        let r = kfold_cv(&data, &ids(20), 4, LinearConfig::default()).unwrap();
        let again = f1_metrics(&data.labels, &r.predictions, &data.label_set()).unwrap();
        assert_eq!(r.report, again);
        assert_eq!(r.report.macro_f1, 1.0);
    }
}
