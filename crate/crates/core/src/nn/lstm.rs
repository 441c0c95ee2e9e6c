use rand::Rng;

use super::{sigmoid, Matrix, NnError};

/// One gate's affine map: `x W + h U + b` with `W: d×m`, `U: m×m`, `b: 1×m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub w: Matrix,
    pub u: Matrix,
    pub b: Matrix,
}

impl Gate {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Gate {
            w: Matrix::zeros(input, hidden),
            u: Matrix::zeros(hidden, hidden),
            b: Matrix::zeros(1, hidden),
        }
    }

    pub fn uniform<R: Rng + ?Sized>(input: usize, hidden: usize, range: f64, rng: &mut R) -> Self {
        Gate {
            w: Matrix::uniform(input, hidden, range, rng),
            u: Matrix::uniform(hidden, hidden, range, rng),
            b: Matrix::uniform(1, hidden, range, rng),
        }
    }

    fn pre_activation(&self, x: &[f64], h_prev: &[f64]) -> Vec<f64> {
        let mut a = self.b.row(0).to_vec();
        self.w.add_vec_mul(x, &mut a);
        self.u.add_vec_mul(h_prev, &mut a);
        a
    }

    fn tensors(&self) -> [&Matrix; 3] {
        [&self.w, &self.u, &self.b]
    }

    fn tensors_mut(&mut self) -> [&mut Matrix; 3] {
        [&mut self.w, &mut self.u, &mut self.b]
    }
}

/// Weights of a single LSTM layer without peepholes.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub input_gate: Gate,
    pub candidate: Gate,
    pub forget_gate: Gate,
    pub output_gate: Gate,
}

impl LstmParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        LstmParams {
            input_gate: Gate::zeros(input, hidden),
            candidate: Gate::zeros(input, hidden),
            forget_gate: Gate::zeros(input, hidden),
            output_gate: Gate::zeros(input, hidden),
        }
    }

    pub fn uniform<R: Rng + ?Sized>(input: usize, hidden: usize, range: f64, rng: &mut R) -> Self {
        LstmParams {
            input_gate: Gate::uniform(input, hidden, range, rng),
            candidate: Gate::uniform(input, hidden, range, rng),
            forget_gate: Gate::uniform(input, hidden, range, rng),
            output_gate: Gate::uniform(input, hidden, range, rng),
        }
    }

    pub fn input_size(&self) -> usize {
        self.input_gate.w.rows()
    }

    pub fn hidden_size(&self) -> usize {
        self.input_gate.w.cols()
    }

    /// Names in the fixed serialization order of [`LstmParams::tensors`].
    pub const TENSOR_NAMES: [&'static str; 12] = [
        "lstm.input.w",
        "lstm.input.u",
        "lstm.input.b",
        "lstm.candidate.w",
        "lstm.candidate.u",
        "lstm.candidate.b",
        "lstm.forget.w",
        "lstm.forget.u",
        "lstm.forget.b",
        "lstm.output.w",
        "lstm.output.u",
        "lstm.output.b",
    ];

    pub fn tensors(&self) -> Vec<&Matrix> {
        let mut v = Vec::with_capacity(12);
        v.extend(self.input_gate.tensors());
        v.extend(self.candidate.tensors());
        v.extend(self.forget_gate.tensors());
        v.extend(self.output_gate.tensors());
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut v = Vec::with_capacity(12);
        v.extend(self.input_gate.tensors_mut());
        v.extend(self.candidate.tensors_mut());
        v.extend(self.forget_gate.tensors_mut());
        v.extend(self.output_gate.tensors_mut());
        v
    }
}

/// Hidden and cell vectors after a step, with the gate activations that
/// produced them (kept for the backward pass).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
    pub input_gate: Vec<f64>,
    pub forget_gate: Vec<f64>,
    pub output_gate: Vec<f64>,
    pub candidate: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        LstmState {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
            input_gate: vec![0.0; hidden],
            forget_gate: vec![0.0; hidden],
            output_gate: vec![0.0; hidden],
            candidate: vec![0.0; hidden],
        }
    }
}

/// Advances the LSTM by one input vector.
pub fn lstm_step(x: &[f64], prev: &LstmState, params: &LstmParams) -> Result<LstmState, NnError> {
    let d = params.input_size();
    let m = params.hidden_size();
    if x.len() != d {
        return Err(NnError::Shape {
            what: "lstm input",
            expected: d,
            got: x.len(),
        });
    }
    if prev.h.len() != m || prev.c.len() != m {
        return Err(NnError::Shape {
            what: "lstm state",
            expected: m,
            got: prev.h.len(),
        });
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(NnError::NonFinite("lstm input"));
    }

    let mut i = params.input_gate.pre_activation(x, &prev.h);
    let mut c_hat = params.candidate.pre_activation(x, &prev.h);
    let mut f = params.forget_gate.pre_activation(x, &prev.h);
    let mut o = params.output_gate.pre_activation(x, &prev.h);
    i.iter_mut().for_each(|v| *v = sigmoid(*v));
    c_hat.iter_mut().for_each(|v| *v = v.tanh());
    f.iter_mut().for_each(|v| *v = sigmoid(*v));
    o.iter_mut().for_each(|v| *v = sigmoid(*v));

    let c: Vec<f64> = (0..m).map(|j| i[j] * c_hat[j] + f[j] * prev.c[j]).collect();
    let h: Vec<f64> = (0..m).map(|j| o[j] * c[j].tanh()).collect();

    if !h.iter().chain(&c).all(|v| v.is_finite()) {
        return Err(NnError::NonFinite("lstm state"));
    }
    Ok(LstmState {
        h,
        c,
        input_gate: i,
        forget_gate: f,
        output_gate: o,
        candidate: c_hat,
    })
}
