use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::{sigmoid, Tensor};

/// Weights of one LSTM direction. `w` is `4H × (I + H)` acting on
/// `[x_t; h_{t-1}]`, gate blocks ordered input, forget, cell, output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lstm {
    pub w: Tensor,
    pub b: Tensor,
}

impl Lstm {
    pub fn init<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let w = Tensor::uniform(4 * hidden, input + hidden, 0.08, rng);
        let mut b = Tensor::zeros(4 * hidden, 1);
        for v in &mut b.data[hidden..2 * hidden] {
            *v = 1.0;
        }
        Lstm { w, b }
    }

    pub fn zeros_like(&self) -> Self {
        Lstm {
            w: self.w.zeros_like(),
            b: self.b.zeros_like(),
        }
    }

    pub fn hidden(&self) -> usize {
        self.b.rows / 4
    }

    pub fn input(&self) -> usize {
        self.w.cols - self.hidden()
    }

    /// Runs the cell over `xs` in order (or reversed when `reverse`).
    /// Returned states are indexed by input position either way.
    pub fn run(&self, xs: &[&[f64]], reverse: bool) -> LstmTrace {
        let h = self.hidden();
        let n = xs.len();
        let mut steps = Vec::with_capacity(n);
        let mut h_prev = vec![0.0; h];
        let mut c_prev = vec![0.0; h];
        for k in 0..n {
            let t = if reverse { n - 1 - k } else { k };
            let mut xh = Vec::with_capacity(self.w.cols);
            xh.extend_from_slice(xs[t]);
            xh.extend_from_slice(&h_prev);
            let z = self.w.affine(&xh, &self.b.data);
            let mut gates = vec![0.0; 4 * h];
            let mut c = vec![0.0; h];
            let mut tanh_c = vec![0.0; h];
            let mut hs = vec![0.0; h];
            for j in 0..h {
                let i = sigmoid(z[j]);
                let f = sigmoid(z[h + j]);
                let g = z[2 * h + j].tanh();
                let o = sigmoid(z[3 * h + j]);
                gates[j] = i;
                gates[h + j] = f;
                gates[2 * h + j] = g;
                gates[3 * h + j] = o;
                c[j] = f * c_prev[j] + i * g;
                tanh_c[j] = c[j].tanh();
                hs[j] = o * tanh_c[j];
            }
            h_prev.copy_from_slice(&hs);
            steps.push(Step {
                t,
                xh,
                gates,
                c_prev: std::mem::replace(&mut c_prev, c),
                tanh_c,
                h: hs,
            });
        }
        LstmTrace { steps, hidden: h }
    }

    /// Accumulates parameter gradients into `grad` given `dh[t]`, the loss
    /// gradient with respect to the state at input position `t`, and returns
    /// the gradients with respect to each input.
    pub fn backward(&self, trace: &LstmTrace, dh: &[Vec<f64>], grad: &mut Lstm) -> Vec<Vec<f64>> {
        let h = trace.hidden;
        let i_dim = self.input();
        let n = trace.steps.len();
        let mut dxs = vec![Vec::new(); n];
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut dz = vec![0.0; 4 * h];
        for step in trace.steps.iter().rev() {
            let g = &step.gates;
            for j in 0..h {
                let dhj = dh[step.t][j] + dh_next[j];
                let (i, f, gg, o) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                let tc = step.tanh_c[j];
                let dc = dhj * o * (1.0 - tc * tc) + dc_next[j];
                dz[j] = dc * gg * i * (1.0 - i);
                dz[h + j] = dc * step.c_prev[j] * f * (1.0 - f);
                dz[2 * h + j] = dc * i * (1.0 - gg * gg);
                dz[3 * h + j] = dhj * tc * o * (1.0 - o);
                dc_next[j] = dc * f;
            }
            grad.w.add_outer(&dz, &step.xh);
            grad.b.add_slice(&dz);
            let mut dxh = vec![0.0; self.w.cols];
            self.w.add_transpose_mul(&dz, &mut dxh);
            dh_next.copy_from_slice(&dxh[i_dim..]);
            dxh.truncate(i_dim);
            dxs[step.t] = dxh;
        }
        dxs
    }
}

#[derive(Debug, Clone)]
struct Step {
    t: usize,
    xh: Vec<f64>,
    gates: Vec<f64>,
    c_prev: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LstmTrace {
    steps: Vec<Step>,
    hidden: usize,
}

impl LstmTrace {
    /// Hidden states in input order.
    pub fn states(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![&[]; self.steps.len()];
        for s in &self.steps {
            out[s.t] = &s.h;
        }
        out
    }
}

/// Concatenated forward and backward states `[→h_t; ←h_t]`.
pub(crate) fn bidirectional(fwd: &LstmTrace, bwd: &LstmTrace) -> Vec<Vec<f64>> {
    fwd.states()
        .into_iter()
        .zip(bwd.states())
        .map(|(a, b)| [a, b].concat())
        .collect()
}
