//! Double-double arithmetic (about 32 significant digits) and an
//! extended-precision forward pass used as the finite-difference oracle.
//! With plain f64 losses near 10, roundoff alone puts about 1e-10 of noise
//! into a central difference at eps = 1e-5, which swamps gradients below
//! roughly 1e-6.

use std::ops::{Add, Div, Mul, Neg, Sub};

use isrl::frames::EncodedSequence;
use isrl::prnsfm::PrnsfmModel;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    const LN2: Dd = Dd {
        hi: std::f64::consts::LN_2,
        lo: 2.319_046_813_846_299_6e-17,
    };

    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn norm(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn mul_pow2(self, k: i32) -> Self {
        let f = 2f64.powi(k);
        Dd {
            hi: self.hi * f,
            lo: self.lo * f,
        }
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        let k = (self.hi / std::f64::consts::LN_2).round();
        // r in [-ln2/2, ln2/2], then shrunk by 2^10 so the series converges fast.
        let r = (self - Dd::LN2 * Dd::from_f64(k)).mul_pow2(-10);
        let mut term = Dd::ONE;
        let mut sum = Dd::ONE;
        for n in 1..=14 {
            term = term * r / Dd::from_f64(n as f64);
            sum = sum + term;
        }
        for _ in 0..10 {
            sum = sum * sum;
        }
        sum.mul_pow2(k as i32)
    }

    /// One Newton step on `exp(y) = x` from the f64 logarithm.
    pub fn ln(self) -> Self {
        let y = Dd::from_f64(self.hi.ln());
        y + self * (-y).exp() - Dd::ONE
    }

    pub fn tanh(self) -> Self {
        if self.hi < 0.0 {
            return -(-self).tanh();
        }
        if self.hi > 354.0 {
            return Dd::ONE;
        }
        let e = (self + self).exp();
        Dd::ONE - Dd::from_f64(2.0) / (e + Dd::ONE)
    }

    pub fn sigmoid(self) -> Self {
        if self.hi < -709.0 {
            return Dd::ZERO;
        }
        Dd::ONE / (Dd::ONE + (-self).exp())
    }

    /// Worst `|exp(x) exp(-x) - 1|` and `|ln(exp(x)) - x|` over a grid.
    pub fn self_check() -> f64 {
        (0..400)
            .map(|i| Dd::from_f64(-10.0 + 0.05 * i as f64) + Dd::from_f64(1e-18 * i as f64))
            .map(|x| {
                let round_trip = (x.exp() * (-x).exp() - Dd::ONE).to_f64().abs();
                round_trip.max((x.exp().ln() - x).to_f64().abs())
            })
            .fold(0.0, f64::max)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Dd::norm(s, e + f)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + -o
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Dd::norm(p, e + (self.hi * o.lo + self.lo * o.hi))
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from_f64(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::from_f64(q2);
        let q3 = r.hi / o.hi;
        Dd::norm(q1, q2) + Dd::from_f64(q3)
    }
}

/// Row-major parameter tensor in extended precision.
#[derive(Clone)]
struct Tensor {
    cols: usize,
    data: Vec<Dd>,
}

impl Tensor {
    fn at(&self, r: usize, c: usize) -> Dd {
        self.data[r * self.cols + c]
    }

    fn row(&self, r: usize) -> &[Dd] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// `x M` for a row vector `x`.
fn vec_mat(x: &[Dd], m: &Tensor, acc: &mut [Dd]) {
    for (k, &xk) in x.iter().enumerate() {
        for (j, a) in acc.iter_mut().enumerate() {
            *a = *a + xk * m.at(k, j);
        }
    }
}

/// The model's parameters copied into double-double, in the model's
/// tensor order, with the frame it is evaluated on.
#[derive(Clone)]
pub struct ExactObjective {
    tensors: Vec<Tensor>,
    separate: bool,
    inputs: Vec<(usize, usize)>,
    targets: Vec<usize>,
}

impl ExactObjective {
    pub fn new(model: &PrnsfmModel, frame: &EncodedSequence) -> Self {
        let tensors = model
            .tensors()
            .iter()
            .map(|m| Tensor {
                cols: m.cols(),
                data: m.as_slice().iter().map(|&x| Dd::from_f64(x)).collect(),
            })
            .collect();
        let (separate, inputs) = match frame {
            EncodedSequence::Joint { units } => (false, units.iter().map(|&u| (u, 0)).collect::<Vec<_>>()),
            EncodedSequence::Separate { words, labels, .. } => {
                (true, words.iter().copied().zip(labels.iter().copied()).collect())
            }
        };
        let units = frame.units();
        ExactObjective {
            tensors,
            separate,
            inputs: inputs[..units.len() - 1].to_vec(),
            targets: units[1..].to_vec(),
        }
    }

    pub fn coordinates(&self) -> Vec<(usize, usize)> {
        self.tensors
            .iter()
            .enumerate()
            .flat_map(|(t, m)| (0..m.data.len()).map(move |i| (t, i)))
            .collect()
    }

    /// Summed NLL with `delta` added to one coordinate.
    pub fn loss_perturbed(&self, coordinate: (usize, usize), delta: f64) -> Dd {
        let mut me = self.clone();
        let slot = &mut me.tensors[coordinate.0].data[coordinate.1];
        *slot = *slot + Dd::from_f64(delta);
        me.loss()
    }

    pub fn loss(&self) -> Dd {
        let offset = if self.separate { 2 } else { 1 };
        let gate = |g: usize| &self.tensors[offset + 3 * g..offset + 3 * g + 3];
        let (sw, sb) = (&self.tensors[offset + 12], &self.tensors[offset + 13]);
        let hidden = self.tensors[offset + 1].cols;
        let mut h = vec![Dd::ZERO; hidden];
        let mut c = vec![Dd::ZERO; hidden];
        let mut total = Dd::ZERO;
        for (&(a, b), &target) in self.inputs.iter().zip(&self.targets) {
            let x: Vec<Dd> = if self.separate {
                self.tensors[0]
                    .row(a)
                    .iter()
                    .chain(self.tensors[1].row(b))
                    .copied()
                    .collect()
            } else {
                self.tensors[0].row(a).to_vec()
            };
            let pre = |g: usize| {
                let [w, u, bias] = gate(g) else { unreachable!() };
                let mut acc = bias.row(0).to_vec();
                vec_mat(&x, w, &mut acc);
                vec_mat(&h, u, &mut acc);
                acc
            };
            let input: Vec<Dd> = pre(0).into_iter().map(Dd::sigmoid).collect();
            let cand: Vec<Dd> = pre(1).into_iter().map(Dd::tanh).collect();
            let forget: Vec<Dd> = pre(2).into_iter().map(Dd::sigmoid).collect();
            let output: Vec<Dd> = pre(3).into_iter().map(Dd::sigmoid).collect();
            for j in 0..hidden {
                c[j] = input[j] * cand[j] + forget[j] * c[j];
                h[j] = output[j] * c[j].tanh();
            }
            let mut logits = sb.row(0).to_vec();
            vec_mat(&h, sw, &mut logits);
            let max = logits.iter().map(|z| z.hi).fold(f64::NEG_INFINITY, f64::max);
            let shifted: Vec<Dd> = logits.iter().map(|&z| z - Dd::from_f64(max)).collect();
            let sum = shifted.iter().fold(Dd::ZERO, |acc, &z| acc + z.exp());
            total = total + sum.ln() - shifted[target];
        }
        total
    }
}

/// Largest `|ga - gn| / max(|ga|, |gn|, 1e-8)` against extended-precision
/// central differences.
pub fn exact_grad_check(model: &PrnsfmModel, frame: &EncodedSequence, epsilon: f64) -> (f64, f64) {
    let objective = ExactObjective::new(model, frame);
    let (loss, grads) = model.frame_gradient(frame).expect("analytic gradient");
    let oracle_loss = objective.loss().to_f64();
    let loss_gap = (loss - oracle_loss).abs() / oracle_loss.abs().max(1.0);
    let mut worst: f64 = 0.0;
    for coordinate in objective.coordinates() {
        let plus = objective.loss_perturbed(coordinate, epsilon);
        let minus = objective.loss_perturbed(coordinate, -epsilon);
        let numeric = ((plus - minus) / Dd::from_f64(2.0 * epsilon)).to_f64();
        let exact = grads[coordinate.0].as_slice()[coordinate.1];
        worst = worst.max((exact - numeric).abs() / exact.abs().max(numeric.abs()).max(1e-8));
    }
    (worst, loss_gap)
}
