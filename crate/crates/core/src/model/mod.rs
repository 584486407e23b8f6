//! The hierarchical encoder: a word-level BiLSTM with attention pools each
//! argument, an argument-level BiLSTM contextualizes the pooled vectors, and
//! three heads predict Class, Type and Subtype distributions.
//!
//! Gradients are computed analytically; `tests` checks them against
//! central finite differences.

mod checkpoint;
mod lstm;
mod network;
mod params;
mod tensor;
mod train;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use lstm::Lstm;
pub use network::{loss, LevelOutputs, LOG_EPS};
pub use params::{LossKind, ModelConfig, ModelParams, TENSOR_NAMES};
pub use tensor::Tensor;
pub use train::{train, EpochStats, TrainReport};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{LabelVocab, WordVectorTable};
use crate::error::{Error, Result};
use crate::instances::{TargetDistribution, TrainingInstance};
use crate::segment::{ArgPair, SegmentedMessage};

/// Parameters together with everything needed to apply them: the config,
/// the label order of each head and the (frozen) word vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ModelParams,
    pub labels: LabelVocab,
    pub vectors: WordVectorTable,
}

impl Model {
    /// Fresh parameters drawn from `config.seed`.
    pub fn new(config: ModelConfig, labels: LabelVocab, vectors: WordVectorTable) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let params = ModelParams::init(&config, &mut rng);
        Self::from_parts(config, params, labels, vectors)
    }

    pub fn from_parts(
        config: ModelConfig,
        params: ModelParams,
        labels: LabelVocab,
        vectors: WordVectorTable,
    ) -> Result<Self> {
        config.validate()?;
        if labels.sizes() != config.levels {
            return Err(Error::Shape(format!(
                "label vocabulary sizes {:?} disagree with config levels {:?}",
                labels.sizes(),
                config.levels
            )));
        }
        if vectors.dim() != config.d_word {
            return Err(Error::Shape(format!(
                "word vectors have dimension {}, config expects {}",
                vectors.dim(),
                config.d_word
            )));
        }
        let shapes = ModelParams::expected_shapes(&config);
        for ((t, s), name) in params.tensors().iter().zip(shapes).zip(TENSOR_NAMES) {
            if (t.rows, t.cols) != s {
                return Err(Error::Shape(format!("tensor {name} has shape {}×{}", t.rows, t.cols)));
            }
        }
        Ok(Model {
            config,
            params,
            labels,
            vectors,
        })
    }

    fn embed<'a>(&'a self, context: &[Vec<String>]) -> Vec<Vec<&'a [f64]>> {
        context
            .iter()
            .map(|arg| arg.iter().map(|w| self.vectors.lookup(w)).collect())
            .collect()
    }

    /// Inference-mode forward pass (no dropout).
    pub fn forward(&self, context: &[Vec<String>], arg1: usize, arg2: usize) -> Result<LevelOutputs> {
        let inputs = self.embed(context);
        Ok(network::forward(&self.params, &self.config, &inputs, arg1, arg2, None)?.0)
    }

    /// Which attention ReLUs are active for this context. Finite-difference
    /// checks compare patterns to skip steps that cross the kink.
    pub fn relu_pattern(&self, context: &[Vec<String>]) -> Result<Vec<bool>> {
        network::relu_pattern(&self.params, &self.embed(context))
    }

    /// Pooled vector and attention weights of one argument, no dropout.
    pub fn encode_argument(&self, tokens: &[String]) -> Result<(Vec<f64>, Vec<f64>)> {
        let words: Vec<&[f64]> = tokens.iter().map(|w| self.vectors.lookup(w)).collect();
        network::encode_argument(&self.params, &words)
    }

    pub fn loss(&self, outputs: &LevelOutputs, targets: &TargetDistribution) -> Result<f64> {
        loss(outputs, targets, self.config.loss, self.config.level_weights)
    }

    /// Inference-mode loss of one instance.
    pub fn instance_loss(&self, instance: &TrainingInstance) -> Result<f64> {
        let out = self.forward(&instance.context, instance.arg1_idx, instance.arg2_idx)?;
        self.loss(&out, &instance.targets)
    }

    pub fn mean_loss(&self, instances: &[TrainingInstance]) -> Result<f64> {
        if instances.is_empty() {
            return Err(Error::Invalid("mean loss of no instances".into()));
        }
        let mut total = 0.0;
        for inst in instances {
            total += self.instance_loss(inst)?;
        }
        Ok(total / instances.len() as f64)
    }

    /// Loss and exact gradients for one instance with dropout disabled.
    pub fn gradients(&self, instance: &TrainingInstance) -> Result<(f64, ModelParams)> {
        let mut grad = self.params.zeros_like();
        let l = self.accumulate_gradients(instance, None, &mut grad)?;
        Ok((l, grad))
    }

    pub(crate) fn accumulate_gradients(
        &self,
        instance: &TrainingInstance,
        rng: Option<&mut dyn rand::RngCore>,
        grad: &mut ModelParams,
    ) -> Result<f64> {
        let inputs = self.embed(&instance.context);
        let (out, cache) = network::forward(
            &self.params,
            &self.config,
            &inputs,
            instance.arg1_idx,
            instance.arg2_idx,
            rng,
        )?;
        let l = self.loss(&out, &instance.targets)?;
        network::backward(&self.params, &self.config, &out, &cache, &instance.targets, grad)?;
        Ok(l)
    }

    /// DiscRE vector for arguments `arg1`, `arg2` of an arbitrary context.
    pub fn discre_vector(&self, context: &[Vec<String>], arg1: usize, arg2: usize) -> Result<Vec<f64>> {
        Ok(self.forward(context, arg1, arg2)?.discre_vector())
    }

    /// DiscRE vector of one pair of a segmented message, with the whole
    /// message as context.
    pub fn extract_discre(&self, message: &SegmentedMessage, pair: &ArgPair) -> Result<Vec<f64>> {
        let n = message.arguments.len();
        if pair.arg1 >= n || pair.arg2 >= n {
            return Err(Error::Invalid(format!(
                "pair ({}, {}) out of range for message {:?} with {n} arguments",
                pair.arg1, pair.arg2, message.id
            )));
        }
        if let Some(i) = message.arguments.iter().position(Vec::is_empty) {
            return Err(Error::Invalid(format!("message {:?} has empty argument {i}", message.id)));
        }
        self.discre_vector(&message.arguments, pair.arg1, pair.arg2)
    }
}
