use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;

use super::Matrix;

/// Probabilities below this are clamped before taking the log.
pub const NLL_FLOOR: f64 = 1e-30;

static CLAMPED_NLL: AtomicU64 = AtomicU64::new(0);

/// Output layer `softmax(h W + b)` with `W: m×|V_out|`, `b: 1×|V_out|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxParams {
    pub w: Matrix,
    pub b: Matrix,
}

impl SoftmaxParams {
    pub fn zeros(hidden: usize, outputs: usize) -> Self {
        SoftmaxParams {
            w: Matrix::zeros(hidden, outputs),
            b: Matrix::zeros(1, outputs),
        }
    }

    pub fn uniform<R: Rng + ?Sized>(hidden: usize, outputs: usize, range: f64, rng: &mut R) -> Self {
        SoftmaxParams {
            w: Matrix::uniform(hidden, outputs, range, rng),
            b: Matrix::uniform(1, outputs, range, rng),
        }
    }

    pub fn outputs(&self) -> usize {
        self.w.cols()
    }

    pub fn logits(&self, h: &[f64]) -> Vec<f64> {
        let mut z = self.b.row(0).to_vec();
        self.w.add_vec_mul(h, &mut z);
        z
    }
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= total);
    out
}

pub fn softmax_layer(h: &[f64], params: &SoftmaxParams) -> Vec<f64> {
    softmax(&params.logits(h))
}

/// `-ln dist[target]`, with the probability floored at [`NLL_FLOOR`].
pub fn nll_loss(dist: &[f64], target: usize) -> f64 {
    let p = dist[target];
    if p < NLL_FLOOR {
        if CLAMPED_NLL.fetch_add(1, Ordering::Relaxed) == 0 {
            log::warn!("probability {p:e} of target {target} clamped to {NLL_FLOOR:e}");
        }
        return -NLL_FLOOR.ln();
    }
    -p.ln()
}

/// Number of times [`nll_loss`] has clamped a probability in this process.
pub fn clamped_nll_count() -> u64 {
    CLAMPED_NLL.load(Ordering::Relaxed)
}
