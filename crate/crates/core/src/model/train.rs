use std::collections::HashMap;

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::params::ModelParams;
use super::Model;
use crate::error::{Error, Result};
use crate::instances::TrainingInstance;

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean instance loss seen during the epoch (dropout on).
    pub train_loss: f64,
    pub dev_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
}

struct Adam {
    m: ModelParams,
    v: ModelParams,
    t: i32,
}

impl Adam {
    fn new(params: &ModelParams) -> Self {
        Adam {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }

    fn step(&mut self, model: &mut Model, grad: &ModelParams) {
        let c = &model.config;
        let (b1, b2, lr, eps) = (c.beta1, c.beta2, c.learning_rate, c.epsilon);
        self.t += 1;
        let bc1 = 1.0 - b1.powi(self.t);
        let bc2 = 1.0 - b2.powi(self.t);
        let tensors = model.params.tensors_mut();
        let ms = self.m.tensors_mut();
        let vs = self.v.tensors_mut();
        for (((p, g), m), v) in tensors.into_iter().zip(grad.tensors()).zip(ms).zip(vs) {
            for i in 0..p.data.len() {
                let gi = g.data[i];
                m.data[i] = b1 * m.data[i] + (1.0 - b1) * gi;
                v.data[i] = b2 * v.data[i] + (1.0 - b2) * gi * gi;
                let mh = m.data[i] / bc1;
                let vh = v.data[i] / bc2;
                p.data[i] -= lr * mh / (vh.sqrt() + eps);
            }
        }
    }
}

/// Groups instance indices by message, in first-seen order.
fn by_message(instances: &[TrainingInstance]) -> Vec<Vec<usize>> {
    let mut slot: HashMap<&str, usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, inst) in instances.iter().enumerate() {
        let g = *slot.entry(inst.message_id.as_str()).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }
    groups
}

/// Trains `model` in place: one Adam step per message with the gradients
/// of its instances summed, message order reshuffled each epoch. The
/// parameters of the epoch with the lowest mean dev loss are kept, or the
/// last epoch's when `dev` is empty.
pub fn train(model: &mut Model, train: &[TrainingInstance], dev: &[TrainingInstance]) -> Result<TrainReport> {
    if train.is_empty() {
        return Err(Error::Invalid("training set is empty".into()));
    }
    model.config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(model.config.seed);
    rng.set_stream(1);
    let mut groups = by_message(train);
    let mut adam = Adam::new(&model.params);
    let mut grad = model.params.zeros_like();
    let mut best: Option<(f64, usize, ModelParams)> = None;
    let mut report = TrainReport {
        epochs: Vec::new(),
        best_epoch: 0,
    };

    for epoch in 1..=model.config.epochs {
        groups.shuffle(&mut rng);
        let mut total = 0.0;
        for (step, group) in groups.iter().enumerate() {
            for t in grad.tensors_mut() {
                t.data.iter_mut().for_each(|v| *v = 0.0);
            }
            for &i in group {
                let l = model.accumulate_gradients(&train[i], Some(&mut rng), &mut grad)?;
                if !l.is_finite() {
                    return Err(Error::Diverged { epoch, step: step + 1 });
                }
                total += l;
            }
            if !grad.is_finite() {
                return Err(Error::Diverged { epoch, step: step + 1 });
            }
            adam.step(model, &grad);
        }
        let train_loss = total / train.len() as f64;
        let dev_loss = if dev.is_empty() { None } else { Some(model.mean_loss(dev)?) };
        if let Some(d) = dev_loss {
            if !d.is_finite() {
                return Err(Error::Diverged { epoch, step: groups.len() });
            }
            if best.as_ref().is_none_or(|(b, _, _)| d < *b) {
                best = Some((d, epoch, model.params.clone()));
            }
        }
        match dev_loss {
            Some(d) => info!("epoch {epoch}: train loss {train_loss:.6}, dev loss {d:.6}"),
            None => info!("epoch {epoch}: train loss {train_loss:.6}"),
        }
        report.epochs.push(EpochStats {
            epoch,
            train_loss,
            dev_loss,
        });
    }

    report.best_epoch = match best {
        Some((_, epoch, params)) => {
            model.params = params;
            epoch
        }
        None => model.config.epochs,
    };
    Ok(report)
}
