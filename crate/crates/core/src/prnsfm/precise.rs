//! Frame loss in double-double precision, for gradient checking.

use super::{Embeddings, ModelError, PrnsfmModel, Token};
use crate::frames::EncodedSequence;
use crate::nn::{DoubleDouble, Gate, Matrix};

type Dd = DoubleDouble;

/// Adds `delta` to one coordinate of one tensor before evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    /// Index into [`PrnsfmModel::tensors`].
    pub tensor: usize,
    pub index: usize,
    pub delta: f64,
}

struct Lifted {
    cols: usize,
    data: Vec<Dd>,
}

impl Lifted {
    fn new(m: &Matrix, delta: Option<(usize, f64)>) -> Self {
        let mut data: Vec<Dd> = m.as_slice().iter().map(|&x| Dd::new(x)).collect();
        if let Some((i, d)) = delta {
            data[i] = data[i] + Dd::new(d);
        }
        Lifted { cols: m.cols(), data }
    }

    fn row(&self, r: usize) -> &[Dd] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `acc += x M`
    fn accumulate(&self, x: &[Dd], acc: &mut [Dd]) {
        for (k, &xk) in x.iter().enumerate() {
            for (a, &w) in acc.iter_mut().zip(self.row(k)) {
                *a = *a + xk * w;
            }
        }
    }
}

struct LiftedGate {
    w: Lifted,
    u: Lifted,
    b: Lifted,
}

impl LiftedGate {
    fn pre_activation(&self, x: &[Dd], h: &[Dd]) -> Vec<Dd> {
        let mut a = self.b.row(0).to_vec();
        self.w.accumulate(x, &mut a);
        self.u.accumulate(h, &mut a);
        a
    }
}

impl PrnsfmModel {
    /// Summed NLL of an encoded frame, optionally with one coordinate
    /// perturbed, computed entirely in double-double arithmetic.
    pub fn frame_loss_precise(
        &self,
        frame: &EncodedSequence,
        perturbation: Option<Perturbation>,
    ) -> Result<DoubleDouble, ModelError> {
        let tokens = self.tokens_for_encoded(frame)?;
        let targets = &frame.units()[1..];
        let mut next = 0;
        let mut lift = |m: &Matrix| {
            let delta = perturbation.filter(|p| p.tensor == next).map(|p| (p.index, p.delta));
            next += 1;
            Lifted::new(m, delta)
        };
        let embeddings: Vec<Lifted> = match &self.embeddings {
            Embeddings::Joint(m) => vec![lift(m)],
            Embeddings::Separate { words, labels } => vec![lift(words), lift(labels)],
        };
        let mut lift_gate = |g: &Gate| LiftedGate {
            w: lift(&g.w),
            u: lift(&g.u),
            b: lift(&g.b),
        };
        let input_gate = lift_gate(&self.lstm.input_gate);
        let candidate = lift_gate(&self.lstm.candidate);
        let forget_gate = lift_gate(&self.lstm.forget_gate);
        let output_gate = lift_gate(&self.lstm.output_gate);
        let out_w = lift(&self.softmax.w);
        let out_b = lift(&self.softmax.b);

        let hidden = self.lstm.hidden_size();
        let mut h = vec![Dd::ZERO; hidden];
        let mut c = vec![Dd::ZERO; hidden];
        let mut total = Dd::ZERO;
        for (token, &target) in tokens.iter().zip(targets) {
            let x: Vec<Dd> = match *token {
                Token::Joint(u) => embeddings[0].row(u).to_vec(),
                Token::Separate { word, label } => embeddings[0]
                    .row(word)
                    .iter()
                    .chain(embeddings[1].row(label))
                    .copied()
                    .collect(),
            };
            let i = input_gate.pre_activation(&x, &h);
            let g = candidate.pre_activation(&x, &h);
            let f = forget_gate.pre_activation(&x, &h);
            let o = output_gate.pre_activation(&x, &h);
            for j in 0..hidden {
                c[j] = i[j].sigmoid() * g[j].tanh() + f[j].sigmoid() * c[j];
                h[j] = o[j].sigmoid() * c[j].tanh();
            }
            let mut logits = out_b.row(0).to_vec();
            out_w.accumulate(&h, &mut logits);
            let max = logits.iter().map(|z| z.hi()).fold(f64::NEG_INFINITY, f64::max);
            let shift = Dd::new(max);
            let partition = logits.iter().fold(Dd::ZERO, |acc, &z| acc + (z - shift).exp());
            total = total + partition.ln() + shift - logits[target];
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{build_vocabularies, encode_frame, ArgumentUnit, FrameSequence, WordForm};
    use crate::prnsfm::ModelConfig;

    fn setup(cfg: ModelConfig) -> (PrnsfmModel, EncodedSequence) {
        let frames = vec![
            FrameSequence::new(
                "a",
                "eat",
                vec![ArgumentUnit::new("kid", "A0"), ArgumentUnit::new("pie", "A1")],
            )
            .unwrap(),
            FrameSequence::new("b", "bake", vec![ArgumentUnit::new("cook", "A0")]).unwrap(),
        ];
        let vocab = build_vocabularies(&frames, 1, WordForm::Surface);
        let enc = encode_frame(&frames[0], &vocab, cfg.mode);
        (PrnsfmModel::new(cfg.with_init_range(0.5), vocab, None).unwrap(), enc)
    }

    #[test]
    fn agrees_with_f64_loss() {
        for cfg in [ModelConfig::joint(5), ModelConfig::separate(3, 2)] {
            let (m, enc) = setup(cfg);
            let precise = m.frame_loss_precise(&enc, None).unwrap().to_f64();
            let plain = m.frame_loss(&enc).unwrap();
            assert!((precise - plain).abs() < 1e-14 * plain.max(1.0), "{precise} vs {plain}");
        }
    }

    #[test]
    fn perturbation_moves_the_right_coordinate() {
        let (m, enc) = setup(ModelConfig::joint(4));
        let last = m.tensors().len() - 1;
        let p = Perturbation {
            tensor: last,
            index: 0,
            delta: 1e-3,
        };
        let mut shifted = m.clone();
        shifted.tensors_mut()[last].as_mut_slice()[0] += 1e-3;
        let precise = m.frame_loss_precise(&enc, Some(p)).unwrap().to_f64();
        assert!((precise - shifted.frame_loss(&enc).unwrap()).abs() < 1e-13);
    }
}
