use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Embeddings, ModelError, Perturbation, PrnsfmModel, Token};
use crate::frames::EncodedSequence;
use crate::nn::{
    adadelta_update, backward, forward_sequence, AdaDelta, AdaDeltaState, DoubleDouble, GradientCheckable, Matrix,
    NnError,
};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub shuffle_seed: u64,
    pub optimizer: AdaDelta,
    /// Rescale the whole gradient when its L2 norm exceeds this.
    pub max_grad_norm: Option<f64>,
    /// Keep the word table fixed (separate mode).
    pub freeze_word_embeddings: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 120,
            shuffle_seed: 1,
            optimizer: AdaDelta::default(),
            max_grad_norm: None,
            freeze_word_embeddings: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-frame summed NLL, one entry per completed epoch.
    pub epoch_mean_nll: Vec<f64>,
    pub epochs: usize,
    pub frames_seen: u64,
    pub wall_time_secs: f64,
}

impl PrnsfmModel {
    /// Summed NLL of one encoded frame and its gradient for every tensor.
    pub fn frame_gradient(&self, frame: &EncodedSequence) -> Result<(f64, Vec<Matrix>), ModelError> {
        let tokens = self.tokens_for_encoded(frame)?;
        let units = frame.units();
        if units.len() < 2 {
            return Err(ModelError::InvalidPrefix("frame shorter than two units".into()));
        }
        let n = units.len() - 1;
        let inputs: Vec<Vec<f64>> = tokens[..n].iter().map(|&t| self.embed(t)).collect();
        let cache = forward_sequence(&self.lstm, &self.softmax, inputs, &units[1..])?;
        let grads = backward(&self.lstm, &self.softmax, &cache);

        let mut out: Vec<Matrix> = Vec::new();
        match &self.embeddings {
            Embeddings::Joint(table) => {
                let mut g = Matrix::zeros(table.rows(), table.cols());
                for (token, dx) in tokens[..n].iter().zip(&grads.inputs) {
                    if let Token::Joint(u) = *token {
                        g.row_mut(u).iter_mut().zip(dx).for_each(|(a, b)| *a += b);
                    }
                }
                out.push(g);
            }
            Embeddings::Separate { words, labels } => {
                let dw = words.cols();
                let mut gw = Matrix::zeros(words.rows(), dw);
                let mut gl = Matrix::zeros(labels.rows(), labels.cols());
                for (token, dx) in tokens[..n].iter().zip(&grads.inputs) {
                    if let Token::Separate { word, label } = *token {
                        gw.row_mut(word).iter_mut().zip(&dx[..dw]).for_each(|(a, b)| *a += b);
                        gl.row_mut(label).iter_mut().zip(&dx[dw..]).for_each(|(a, b)| *a += b);
                    }
                }
                out.push(gw);
                out.push(gl);
            }
        }
        out.extend(grads.lstm.tensors().into_iter().cloned());
        out.push(grads.softmax.w);
        out.push(grads.softmax.b);
        Ok((cache.loss, out))
    }

    /// Summed NLL of one encoded frame.
    pub fn frame_loss(&self, frame: &EncodedSequence) -> Result<f64, ModelError> {
        let tokens = self.tokens_for_encoded(frame)?;
        let units = frame.units();
        let n = units.len().saturating_sub(1);
        let inputs: Vec<Vec<f64>> = tokens[..n].iter().map(|&t| self.embed(t)).collect();
        Ok(forward_sequence(&self.lstm, &self.softmax, inputs, &units[1..])?.loss)
    }
}

/// Per-frame AdaDelta training over all parameters, embeddings included.
/// Frame order is reshuffled every epoch from `shuffle_seed`.
pub fn train(
    model: &mut PrnsfmModel,
    frames: &[EncodedSequence],
    cfg: &TrainConfig,
) -> Result<TrainReport, ModelError> {
    let start = Instant::now();
    let mut report = TrainReport {
        epoch_mean_nll: Vec::with_capacity(cfg.epochs),
        epochs: 0,
        frames_seen: 0,
        wall_time_secs: 0.0,
    };
    if cfg.epochs == 0 || frames.is_empty() {
        return Ok(report);
    }
    if let Some(bad) = frames.iter().find(|f| f.mode() != model.mode()) {
        return Err(ModelError::Config(format!(
            "frame encoded for {} mode, model is {}",
            bad.mode(),
            model.mode()
        )));
    }
    let frozen = match (&model.embeddings, cfg.freeze_word_embeddings) {
        (Embeddings::Separate { .. }, true) => Some(0),
        _ => None,
    };
    let mut states: Vec<AdaDeltaState> = model.tensors().iter().map(|t| AdaDeltaState::for_matrix(t)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
    let mut order: Vec<usize> = (0..frames.len()).collect();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let (loss, mut grads) = model.frame_gradient(&frames[i])?;
            if !loss.is_finite() {
                return Err(ModelError::NonFiniteLoss { epoch, frame: i });
            }
            if let Some(max_norm) = cfg.max_grad_norm {
                let norm = grads.iter().map(Matrix::squared_norm).sum::<f64>().sqrt();
                if norm > max_norm {
                    grads.iter_mut().for_each(|g| g.scale(max_norm / norm));
                }
            }
            for (k, ((param, grad), state)) in model
                .tensors_mut()
                .into_iter()
                .zip(&grads)
                .zip(states.iter_mut())
                .enumerate()
            {
                if Some(k) == frozen {
                    continue;
                }
                adadelta_update(param.as_mut_slice(), grad.as_slice(), state, cfg.optimizer)?;
            }
            total += loss;
            report.frames_seen += 1;
        }
        let mean = total / frames.len() as f64;
        log::info!("epoch {}: mean NLL {mean:.6}", epoch + 1);
        report.epoch_mean_nll.push(mean);
        report.epochs += 1;
    }
    report.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// A model paired with one frame, as a finite-difference target.
#[derive(Debug, Clone)]
pub struct FrameObjective {
    pub model: PrnsfmModel,
    pub frame: EncodedSequence,
}

impl GradientCheckable for FrameObjective {
    fn tensor_names(&self) -> Vec<String> {
        self.model.tensor_names()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        self.model.tensors_mut()
    }

    fn loss(&self) -> Result<f64, NnError> {
        self.model.frame_loss(&self.frame).map_err(to_nn)
    }

    fn analytic_gradient(&self) -> Result<Vec<Matrix>, NnError> {
        self.model.frame_gradient(&self.frame).map(|(_, g)| g).map_err(to_nn)
    }

    fn extended_central_difference(&self, tensor: usize, index: usize, epsilon: f64) -> Option<Result<f64, NnError>> {
        let at = |delta| {
            self.model
                .frame_loss_precise(&self.frame, Some(Perturbation { tensor, index, delta }))
                .map_err(to_nn)
        };
        Some(at(epsilon).and_then(|plus| {
            let minus = at(-epsilon)?;
            Ok(((plus - minus) / DoubleDouble::new(2.0 * epsilon)).to_f64())
        }))
    }
}

fn to_nn(e: ModelError) -> NnError {
    match e {
        ModelError::Nn(e) => e,
        other => NnError::InvalidArgument(other.to_string()),
    }
}
