use rand::Rng;
use serde::{Deserialize, Serialize};

use super::lstm::Lstm;
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    /// Per-level softmax with soft-target cross-entropy.
    #[default]
    SoftmaxCe,
    /// Independent sigmoids with weighted binary cross-entropy.
    SigmoidBce,
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "softmax-ce" => Ok(LossKind::SoftmaxCe),
            "sigmoid-bce" => Ok(LossKind::SigmoidBce),
            other => Err(Error::Config(format!(
                "unknown loss {other:?} (expected softmax-ce or sigmoid-bce)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub d_word: usize,
    pub d_hidden: usize,
    pub dropout_rate: f64,
    /// `[N_Class, N_Type, N_Subtype]`.
    pub levels: [usize; 3],
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub seed: u64,
    #[serde(default)]
    pub loss: LossKind,
    /// Multiplier on each level's loss term.
    #[serde(default = "unit_weights")]
    pub level_weights: [f64; 3],
}

fn unit_weights() -> [f64; 3] {
    [1.0; 3]
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d_word: 200,
            d_hidden: 200,
            dropout_rate: 0.3,
            levels: [4, 16, 23],
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 50,
            seed: 7,
            loss: LossKind::SoftmaxCe,
            level_weights: unit_weights(),
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.d_word == 0 || self.d_hidden == 0 {
            return bad("d_word and d_hidden must be positive".into());
        }
        if self.levels.iter().any(|&n| n == 0) {
            return bad(format!("every level needs at least one label, got {:?}", self.levels));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout_rate must be in [0, 1), got {}", self.dropout_rate));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.epsilon <= 0.0 {
            return bad("Adam requires 0 <= beta < 1 and epsilon > 0".into());
        }
        if self.level_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return bad(format!("level weights must be nonnegative, got {:?}", self.level_weights));
        }
        Ok(())
    }

    /// Length of a DiscRE vector: `4·d_hidden + ΣN`.
    pub fn discre_dim(&self) -> usize {
        4 * self.d_hidden + self.levels.iter().sum::<usize>()
    }
}

/// Every trainable tensor of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub word_fwd: Lstm,
    pub word_bwd: Lstm,
    pub attn_w: Tensor,
    pub attn_b: Tensor,
    pub attn_u: Tensor,
    pub arg_fwd: Lstm,
    pub arg_bwd: Lstm,
    pub class_w: Tensor,
    pub class_b: Tensor,
    pub type_w: Tensor,
    pub type_b: Tensor,
    pub subtype_w: Tensor,
    pub subtype_b: Tensor,
}

pub const TENSOR_NAMES: [&str; 17] = [
    "word_fwd.w",
    "word_fwd.b",
    "word_bwd.w",
    "word_bwd.b",
    "attn.w",
    "attn.b",
    "attn.u",
    "arg_fwd.w",
    "arg_fwd.b",
    "arg_bwd.w",
    "arg_bwd.b",
    "class.w",
    "class.b",
    "type.w",
    "type.b",
    "subtype.w",
    "subtype.b",
];

impl ModelParams {
    pub fn init<R: Rng>(config: &ModelConfig, rng: &mut R) -> Self {
        let h = config.d_hidden;
        let h2 = 2 * h;
        let [nc, nt, ns] = config.levels;
        let s = 0.08;
        ModelParams {
            word_fwd: Lstm::init(config.d_word, h, rng),
            word_bwd: Lstm::init(config.d_word, h, rng),
            attn_w: Tensor::uniform(h2, h2, s, rng),
            attn_b: Tensor::zeros(h2, 1),
            attn_u: Tensor::uniform(h2, 1, s, rng),
            arg_fwd: Lstm::init(h2, h, rng),
            arg_bwd: Lstm::init(h2, h, rng),
            class_w: Tensor::uniform(nc, 2 * h2, s, rng),
            class_b: Tensor::zeros(nc, 1),
            type_w: Tensor::uniform(nt, 2 * h2, s, rng),
            type_b: Tensor::zeros(nt, 1),
            subtype_w: Tensor::uniform(ns, h2, s, rng),
            subtype_b: Tensor::zeros(ns, 1),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.data.iter_mut().for_each(|v| *v = 0.0);
        }
        z
    }

    /// Tensors in `TENSOR_NAMES` order.
    pub fn tensors(&self) -> [&Tensor; 17] {
        [
            &self.word_fwd.w,
            &self.word_fwd.b,
            &self.word_bwd.w,
            &self.word_bwd.b,
            &self.attn_w,
            &self.attn_b,
            &self.attn_u,
            &self.arg_fwd.w,
            &self.arg_fwd.b,
            &self.arg_bwd.w,
            &self.arg_bwd.b,
            &self.class_w,
            &self.class_b,
            &self.type_w,
            &self.type_b,
            &self.subtype_w,
            &self.subtype_b,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Tensor; 17] {
        [
            &mut self.word_fwd.w,
            &mut self.word_fwd.b,
            &mut self.word_bwd.w,
            &mut self.word_bwd.b,
            &mut self.attn_w,
            &mut self.attn_b,
            &mut self.attn_u,
            &mut self.arg_fwd.w,
            &mut self.arg_fwd.b,
            &mut self.arg_bwd.w,
            &mut self.arg_bwd.b,
            &mut self.class_w,
            &mut self.class_b,
            &mut self.type_w,
            &mut self.type_b,
            &mut self.subtype_w,
            &mut self.subtype_b,
        ]
    }

    /// Expected `(rows, cols)` per tensor for a config.
    pub fn expected_shapes(config: &ModelConfig) -> [(usize, usize); 17] {
        let (d, h) = (config.d_word, config.d_hidden);
        let h2 = 2 * h;
        let [nc, nt, ns] = config.levels;
        [
            (4 * h, d + h),
            (4 * h, 1),
            (4 * h, d + h),
            (4 * h, 1),
            (h2, h2),
            (h2, 1),
            (h2, 1),
            (4 * h, h2 + h),
            (4 * h, 1),
            (4 * h, h2 + h),
            (4 * h, 1),
            (nc, 2 * h2),
            (nc, 1),
            (nt, 2 * h2),
            (nt, 1),
            (ns, h2),
            (ns, 1),
        ]
    }

    /// Rebuilds parameters from tensors in `TENSOR_NAMES` order.
    pub fn from_tensors(config: &ModelConfig, tensors: Vec<Tensor>) -> Result<Self> {
        let shapes = Self::expected_shapes(config);
        if tensors.len() != shapes.len() {
            return Err(Error::Shape(format!("expected {} tensors, got {}", shapes.len(), tensors.len())));
        }
        for ((t, &(r, c)), name) in tensors.iter().zip(&shapes).zip(TENSOR_NAMES) {
            if (t.rows, t.cols) != (r, c) || t.data.len() != r * c {
                return Err(Error::Shape(format!(
                    "tensor {name} is {}×{}, config requires {r}×{c}",
                    t.rows, t.cols
                )));
            }
        }
        let mut it = tensors.into_iter();
        let mut next = || it.next().unwrap();
        let lstm = |next: &mut dyn FnMut() -> Tensor| Lstm { w: next(), b: next() };
        let word_fwd = lstm(&mut next);
        let word_bwd = lstm(&mut next);
        let (attn_w, attn_b, attn_u) = (next(), next(), next());
        let arg_fwd = lstm(&mut next);
        let arg_bwd = lstm(&mut next);
        Ok(ModelParams {
            word_fwd,
            word_bwd,
            attn_w,
            attn_b,
            attn_u,
            arg_fwd,
            arg_bwd,
            class_w: next(),
            class_b: next(),
            type_w: next(),
            type_b: next(),
            subtype_w: next(),
            subtype_b: next(),
        })
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    pub fn add_assign(&mut self, other: &ModelParams) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.add_assign(b);
        }
    }
}
