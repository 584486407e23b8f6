use rand::Rng;

use super::lstm::{bidirectional, LstmTrace};
use super::params::{LossKind, ModelConfig, ModelParams};
use super::tensor::{dot, sigmoid, softmax, softmax_backward};
use crate::corpus::Level;
use crate::error::{Error, Result};
use crate::instances::TargetDistribution;

/// Floor applied to probabilities before taking logs.
pub const LOG_EPS: f64 = 1e-12;

/// Head outputs plus the intermediate values callers inspect.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelOutputs {
    /// `[p_Class, p_Type, p_Subtype]`.
    pub probs: [Vec<f64>; 3],
    /// Word attention weights, one vector per context argument.
    pub attention: Vec<Vec<f64>>,
    /// Argument-level BiLSTM outputs, one per context argument.
    pub contextual: Vec<Vec<f64>>,
    pub arg1_idx: usize,
    pub arg2_idx: usize,
}

impl LevelOutputs {
    pub fn level(&self, level: Level) -> &[f64] {
        &self.probs[level.index()]
    }

    /// `[h(Arg1); h(Arg2); p_Class; p_Type; p_Subtype]`.
    pub fn discre_vector(&self) -> Vec<f64> {
        let mut v = Vec::new();
        v.extend_from_slice(&self.contextual[self.arg1_idx]);
        v.extend_from_slice(&self.contextual[self.arg2_idx]);
        for p in &self.probs {
            v.extend_from_slice(p);
        }
        v
    }
}

struct ArgumentCache {
    fwd: LstmTrace,
    bwd: LstmTrace,
    states: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    scores_in: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    mask: Option<Vec<f64>>,
}

pub(crate) struct ForwardCache {
    args: Vec<ArgumentCache>,
    arg_fwd: LstmTrace,
    arg_bwd: LstmTrace,
    logits: [Vec<f64>; 3],
}

/// Word-level BiLSTM and attention for one argument. Returns the pooled
/// vector (after dropout when `rng` is given) and the cache.
fn encode(
    params: &ModelParams,
    words: &[&[f64]],
    dropout: f64,
    rng: &mut Option<&mut dyn rand::RngCore>,
) -> Result<(Vec<f64>, ArgumentCache)> {
    if words.is_empty() {
        return Err(Error::Invalid("cannot encode an empty argument".into()));
    }
    let fwd = params.word_fwd.run(words, false);
    let bwd = params.word_bwd.run(words, true);
    let states = bidirectional(&fwd, &bwd);
    let mut pre = Vec::with_capacity(states.len());
    let mut scores_in = Vec::with_capacity(states.len());
    let mut scores = Vec::with_capacity(states.len());
    for h in &states {
        let a = params.attn_w.affine(h, &params.attn_b.data);
        let u: Vec<f64> = a.iter().map(|&x| x.max(0.0)).collect();
        scores.push(dot(&u, &params.attn_u.data));
        pre.push(a);
        scores_in.push(u);
    }
    let alpha = softmax(&scores);
    let dim = states[0].len();
    let mut v = vec![0.0; dim];
    for (a, h) in alpha.iter().zip(&states) {
        for (vi, hi) in v.iter_mut().zip(h) {
            *vi += a * hi;
        }
    }
    let mask = match rng.as_mut() {
        Some(rng) if dropout > 0.0 => {
            let keep = 1.0 / (1.0 - dropout);
            let m: Vec<f64> = (0..dim)
                .map(|_| if rng.gen::<f64>() < dropout { 0.0 } else { keep })
                .collect();
            for (vi, mi) in v.iter_mut().zip(&m) {
                *vi *= mi;
            }
            Some(m)
        }
        _ => None,
    };
    Ok((
        v,
        ArgumentCache {
            fwd,
            bwd,
            states,
            pre,
            scores_in,
            alpha,
            mask,
        },
    ))
}

/// Argument vector and attention weights for one token sequence, dropout off.
pub(crate) fn encode_argument(params: &ModelParams, words: &[&[f64]]) -> Result<(Vec<f64>, Vec<f64>)> {
    let (v, cache) = encode(params, words, 0.0, &mut None)?;
    Ok((v, cache.alpha))
}

/// Sign of every attention pre-activation `W_a h_t + b_a` across a context.
pub(crate) fn relu_pattern(params: &ModelParams, context: &[Vec<&[f64]>]) -> Result<Vec<bool>> {
    let mut out = Vec::new();
    for words in context {
        let (_, cache) = encode(params, words, 0.0, &mut None)?;
        out.extend(cache.pre.iter().flatten().map(|&a| a > 0.0));
    }
    Ok(out)
}

pub(crate) fn forward(
    params: &ModelParams,
    config: &ModelConfig,
    context: &[Vec<&[f64]>],
    arg1: usize,
    arg2: usize,
    mut rng: Option<&mut dyn rand::RngCore>,
) -> Result<(LevelOutputs, ForwardCache)> {
    if context.is_empty() {
        return Err(Error::Invalid("empty context".into()));
    }
    if arg1 >= context.len() || arg2 >= context.len() {
        return Err(Error::Invalid(format!(
            "argument index ({arg1}, {arg2}) out of range for {} arguments",
            context.len()
        )));
    }
    let mut vs = Vec::with_capacity(context.len());
    let mut args = Vec::with_capacity(context.len());
    for words in context {
        let (v, cache) = encode(params, words, config.dropout_rate, &mut rng)?;
        vs.push(v);
        args.push(cache);
    }
    let v_refs: Vec<&[f64]> = vs.iter().map(Vec::as_slice).collect();
    let arg_fwd = params.arg_fwd.run(&v_refs, false);
    let arg_bwd = params.arg_bwd.run(&v_refs, true);
    let contextual = bidirectional(&arg_fwd, &arg_bwd);

    let pair_in = [contextual[arg1].as_slice(), contextual[arg2].as_slice()].concat();
    let logits = [
        params.class_w.affine(&pair_in, &params.class_b.data),
        params.type_w.affine(&pair_in, &params.type_b.data),
        params.subtype_w.affine(&contextual[arg2], &params.subtype_b.data),
    ];
    let activate = |z: &Vec<f64>| match config.loss {
        LossKind::SoftmaxCe => softmax(z),
        LossKind::SigmoidBce => z.iter().map(|&x| sigmoid(x)).collect(),
    };
    let probs = [activate(&logits[0]), activate(&logits[1]), activate(&logits[2])];
    let outputs = LevelOutputs {
        probs,
        attention: args.iter().map(|a| a.alpha.clone()).collect(),
        contextual,
        arg1_idx: arg1,
        arg2_idx: arg2,
    };
    Ok((
        outputs,
        ForwardCache {
            args,
            arg_fwd,
            arg_bwd,
            logits,
        },
    ))
}

fn check_sizes(outputs: &LevelOutputs, targets: &TargetDistribution) -> Result<()> {
    for level in Level::ALL {
        let (p, w) = (outputs.level(level), targets.level(level));
        if p.len() != w.len() {
            return Err(Error::Shape(format!(
                "{level} output has {} units, target has {}",
                p.len(),
                w.len()
            )));
        }
    }
    Ok(())
}

/// Training objective for one instance, summed over levels.
///
/// With `SoftmaxCe` this is `−Σ_i Σ_j w_ij y_ij log f_ij`; `SigmoidBce`
/// adds the `(1 − w) log(1 − f)` term per unit.
pub fn loss(
    outputs: &LevelOutputs,
    targets: &TargetDistribution,
    kind: LossKind,
    level_weights: [f64; 3],
) -> Result<f64> {
    check_sizes(outputs, targets)?;
    let mut total = 0.0;
    for level in Level::ALL {
        let lw = level_weights[level.index()];
        if lw == 0.0 {
            continue;
        }
        let p = outputs.level(level);
        let w = targets.level(level);
        let mut l = 0.0;
        for (&pj, &wj) in p.iter().zip(w) {
            if wj > 0.0 {
                l -= wj * pj.max(LOG_EPS).ln();
            }
            if kind == LossKind::SigmoidBce && wj < 1.0 {
                l -= (1.0 - wj) * (1.0 - pj).max(LOG_EPS).ln();
            }
        }
        total += lw * l;
    }
    Ok(total)
}

fn head_gradient(p: &[f64], w: &[f64], kind: LossKind, scale: f64) -> Vec<f64> {
    match kind {
        LossKind::SoftmaxCe => {
            let dp: Vec<f64> = p
                .iter()
                .zip(w)
                .map(|(&pj, &wj)| if wj > 0.0 && pj > LOG_EPS { -scale * wj / pj } else { 0.0 })
                .collect();
            softmax_backward(p, &dp)
        }
        LossKind::SigmoidBce => p
            .iter()
            .zip(w)
            .map(|(&pj, &wj)| {
                let mut dp = 0.0;
                if wj > 0.0 && pj > LOG_EPS {
                    dp -= wj / pj;
                }
                if wj < 1.0 && 1.0 - pj > LOG_EPS {
                    dp += (1.0 - wj) / (1.0 - pj);
                }
                scale * dp * pj * (1.0 - pj)
            })
            .collect(),
    }
}

/// Gradients of `loss` for the pass recorded in `cache`, accumulated into `grad`.
pub(crate) fn backward(
    params: &ModelParams,
    config: &ModelConfig,
    outputs: &LevelOutputs,
    cache: &ForwardCache,
    targets: &TargetDistribution,
    grad: &mut ModelParams,
) -> Result<()> {
    check_sizes(outputs, targets)?;
    let h2 = 2 * config.d_hidden;
    let (a1, a2) = (outputs.arg1_idx, outputs.arg2_idx);
    let k = outputs.contextual.len();
    let mut dctx = vec![vec![0.0; h2]; k];

    let pair_in = [outputs.contextual[a1].as_slice(), outputs.contextual[a2].as_slice()].concat();
    let heads = [
        (&params.class_w, Level::Class),
        (&params.type_w, Level::Type),
        (&params.subtype_w, Level::Subtype),
    ];
    for (w, level) in heads {
        let i = level.index();
        let scale = config.level_weights[i];
        if scale == 0.0 {
            continue;
        }
        debug_assert_eq!(cache.logits[i].len(), outputs.probs[i].len());
        let dz = head_gradient(&outputs.probs[i], targets.level(level), config.loss, scale);
        let (gw, gb) = match level {
            Level::Class => (&mut grad.class_w, &mut grad.class_b),
            Level::Type => (&mut grad.type_w, &mut grad.type_b),
            Level::Subtype => (&mut grad.subtype_w, &mut grad.subtype_b),
        };
        gb.add_slice(&dz);
        if level == Level::Subtype {
            gw.add_outer(&dz, &outputs.contextual[a2]);
            w.add_transpose_mul(&dz, &mut dctx[a2]);
        } else {
            gw.add_outer(&dz, &pair_in);
            let mut dpair = vec![0.0; 2 * h2];
            w.add_transpose_mul(&dz, &mut dpair);
            for (d, g) in dctx[a1].iter_mut().zip(&dpair[..h2]) {
                *d += g;
            }
            for (d, g) in dctx[a2].iter_mut().zip(&dpair[h2..]) {
                *d += g;
            }
        }
    }

    let h = config.d_hidden;
    let dh_f: Vec<Vec<f64>> = dctx.iter().map(|d| d[..h].to_vec()).collect();
    let dh_b: Vec<Vec<f64>> = dctx.iter().map(|d| d[h..].to_vec()).collect();
    let dv_f = params.arg_fwd.backward(&cache.arg_fwd, &dh_f, &mut grad.arg_fwd);
    let dv_b = params.arg_bwd.backward(&cache.arg_bwd, &dh_b, &mut grad.arg_bwd);

    for (idx, arg) in cache.args.iter().enumerate() {
        let mut dv: Vec<f64> = dv_f[idx].iter().zip(&dv_b[idx]).map(|(a, b)| a + b).collect();
        if let Some(mask) = &arg.mask {
            for (d, m) in dv.iter_mut().zip(mask) {
                *d *= m;
            }
        }
        let n = arg.states.len();
        let mut dstates: Vec<Vec<f64>> = arg
            .alpha
            .iter()
            .map(|&a| dv.iter().map(|d| a * d).collect())
            .collect();
        let dalpha: Vec<f64> = arg.states.iter().map(|s| dot(s, &dv)).collect();
        let ds = softmax_backward(&arg.alpha, &dalpha);
        for t in 0..n {
            grad.attn_u.add_slice(&arg.scores_in[t].iter().map(|u| ds[t] * u).collect::<Vec<_>>());
            let da: Vec<f64> = arg.pre[t]
                .iter()
                .zip(&params.attn_u.data)
                .map(|(&a, &uw)| if a > 0.0 { ds[t] * uw } else { 0.0 })
                .collect();
            grad.attn_w.add_outer(&da, &arg.states[t]);
            grad.attn_b.add_slice(&da);
            params.attn_w.add_transpose_mul(&da, &mut dstates[t]);
        }
        let df: Vec<Vec<f64>> = dstates.iter().map(|d| d[..h].to_vec()).collect();
        let db: Vec<Vec<f64>> = dstates.iter().map(|d| d[h..].to_vec()).collect();
        params.word_fwd.backward(&arg.fwd, &df, &mut grad.word_fwd);
        params.word_bwd.backward(&arg.bwd, &db, &mut grad.word_bwd);
    }
    Ok(())
}
