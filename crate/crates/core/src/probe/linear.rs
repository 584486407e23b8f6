use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Instances as rows with aligned labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Shape(format!("{} rows but {} labels", rows.len(), labels.len())));
        }
        if let Some(first) = rows.first() {
            let d = first.len();
            for (i, r) in rows.iter().enumerate() {
                if r.len() != d {
                    return Err(Error::Shape(format!("row {i} has {} features, expected {d}", r.len())));
                }
                if r.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Invalid(format!("row {i} has a non-finite feature")));
                }
            }
        }
        Ok(FeatureMatrix { rows, labels })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Distinct labels in first-seen order.
    pub fn label_set(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for l in &self.labels {
            if !out.contains(l) {
                out.push(l.clone());
            }
        }
        out
    }

    pub fn subset(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i].clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearConfig {
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig {
            c: 1.0,
            epochs: 200,
            seed: 7,
        }
    }
}

/// One-vs-rest linear SVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub classes: Vec<String>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    /// Training frequency per class, used to break score ties.
    pub class_counts: Vec<usize>,
    pub config: LinearConfig,
}

impl LinearModel {
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| b + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    /// Highest-scoring class; ties go to the more frequent class, then the
    /// earlier one.
    pub fn predict(&self, x: &[f64]) -> &str {
        let s = self.scores(x);
        let mut best = 0;
        for k in 1..s.len() {
            let better = s[k] > s[best] || (s[k] == s[best] && self.class_counts[k] > self.class_counts[best]);
            if better {
                best = k;
            }
        }
        &self.classes[best]
    }

    pub fn predict_all(&self, rows: &[Vec<f64>]) -> Vec<String> {
        rows.iter().map(|r| self.predict(r).to_string()).collect()
    }
}

/// Minimizes `½‖w‖² + C Σ_i max(0, 1 − y_i (w·x_i + b))` per class with the
/// Pegasos schedule (`λ = 1 / (n C)`, step `1 / (λ t)`). The bias is an
/// extra constant feature. Visiting order is reshuffled each epoch from `seed`.
pub fn train_linear(data: &FeatureMatrix, config: LinearConfig) -> Result<LinearModel> {
    let classes = data.label_set();
    if classes.len() < 2 {
        return Err(Error::Invalid(format!(
            "linear probe needs at least two classes, found {}",
            classes.len()
        )));
    }
    if !(config.c > 0.0 && config.c.is_finite()) {
        return Err(Error::Config(format!("C must be positive, got {}", config.c)));
    }
    let n = data.len();
    let d = data.dim();
    let targets: Vec<usize> = data
        .labels
        .iter()
        .map(|l| classes.iter().position(|c| c == l).unwrap())
        .collect();
    let class_counts: Vec<usize> = (0..classes.len())
        .map(|k| targets.iter().filter(|&&t| t == k).count())
        .collect();
    let lambda = 1.0 / (n as f64 * config.c);

    let mut weights = Vec::with_capacity(classes.len());
    let mut biases = Vec::with_capacity(classes.len());
    for k in 0..classes.len() {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(k as u64);
        let mut order: Vec<usize> = (0..n).collect();
        let mut w = vec![0.0; d];
        let mut b = 0.0;
        let mut t = 0u64;
        for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let y = if targets[i] == k { 1.0 } else { -1.0 };
                let x = &data.rows[i];
                let margin = y * (b + w.iter().zip(x).map(|(a, c)| a * c).sum::<f64>());
                let shrink = 1.0 - eta * lambda;
                for wj in w.iter_mut() {
                    *wj *= shrink;
                }
                b *= shrink;
                if margin < 1.0 {
                    for (wj, xj) in w.iter_mut().zip(x) {
                        *wj += eta * y * xj;
                    }
                    b += eta * y;
                }
            }
        }
        weights.push(w);
        biases.push(b);
    }
    Ok(LinearModel {
        classes,
        weights,
        biases,
        class_counts,
        config,
    })
}
