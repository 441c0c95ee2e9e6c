use super::{lstm_step, nll_loss, softmax_layer, LstmParams, LstmState, NnError, SoftmaxParams};

/// Everything recorded during a forward pass over one sequence.
#[derive(Debug, Clone)]
pub struct SequenceCache {
    pub inputs: Vec<Vec<f64>>,
    /// `states[0]` is the zero initial state; `states[t + 1]` follows `inputs[t]`.
    pub states: Vec<LstmState>,
    pub distributions: Vec<Vec<f64>>,
    pub targets: Vec<usize>,
    /// Summed negative log-likelihood over all steps.
    pub loss: f64,
}

/// Gradients of the summed NLL.
#[derive(Debug, Clone)]
pub struct SequenceGrads {
    pub lstm: LstmParams,
    pub softmax: SoftmaxParams,
    /// Gradient with respect to each step's input vector.
    pub inputs: Vec<Vec<f64>>,
}

/// Runs the LSTM over `inputs`, predicting `targets[t]` after `inputs[t]`.
pub fn forward_sequence(
    lstm: &LstmParams,
    softmax: &SoftmaxParams,
    inputs: Vec<Vec<f64>>,
    targets: &[usize],
) -> Result<SequenceCache, NnError> {
    if inputs.len() != targets.len() {
        return Err(NnError::Shape {
            what: "targets",
            expected: inputs.len(),
            got: targets.len(),
        });
    }
    let outputs = softmax.outputs();
    if let Some(&bad) = targets.iter().find(|&&t| t >= outputs) {
        return Err(NnError::InvalidArgument(format!(
            "target {bad} outside output vocabulary of {outputs}"
        )));
    }
    let mut states = Vec::with_capacity(inputs.len() + 1);
    states.push(LstmState::zeros(lstm.hidden_size()));
    let mut distributions = Vec::with_capacity(inputs.len());
    let mut loss = 0.0;
    for (x, &target) in inputs.iter().zip(targets) {
        let next = lstm_step(x, states.last().expect("initial state"), lstm)?;
        let dist = softmax_layer(&next.h, softmax);
        loss += nll_loss(&dist, target);
        distributions.push(dist);
        states.push(next);
    }
    if !loss.is_finite() {
        return Err(NnError::NonFinite("sequence loss"));
    }
    Ok(SequenceCache {
        inputs,
        states,
        distributions,
        targets: targets.to_vec(),
        loss,
    })
}

/// Backpropagation through time for a completed forward pass.
pub fn backward(lstm: &LstmParams, softmax: &SoftmaxParams, cache: &SequenceCache) -> SequenceGrads {
    let d = lstm.input_size();
    let m = lstm.hidden_size();
    let mut g_lstm = LstmParams::zeros(d, m);
    let mut g_softmax = SoftmaxParams::zeros(m, softmax.outputs());
    let mut g_inputs = vec![vec![0.0; d]; cache.inputs.len()];

    let mut dh_next = vec![0.0; m];
    let mut dc_next = vec![0.0; m];

    for t in (0..cache.inputs.len()).rev() {
        let prev = &cache.states[t];
        let cur = &cache.states[t + 1];

        let mut dlogits = cache.distributions[t].clone();
        dlogits[cache.targets[t]] -= 1.0;
        g_softmax.w.add_outer(&cur.h, &dlogits);
        g_softmax
            .b
            .row_mut(0)
            .iter_mut()
            .zip(&dlogits)
            .for_each(|(b, g)| *b += g);

        let mut dh = dh_next.clone();
        softmax.w.add_mul_vec(&dlogits, &mut dh);

        let mut da_i = vec![0.0; m];
        let mut da_c = vec![0.0; m];
        let mut da_f = vec![0.0; m];
        let mut da_o = vec![0.0; m];
        for j in 0..m {
            let tanh_c = cur.c[j].tanh();
            let o = cur.output_gate[j];
            let i = cur.input_gate[j];
            let f = cur.forget_gate[j];
            let c_hat = cur.candidate[j];

            let d_o = dh[j] * tanh_c;
            let dc = dh[j] * o * (1.0 - tanh_c * tanh_c) + dc_next[j];

            da_i[j] = dc * c_hat * i * (1.0 - i);
            da_c[j] = dc * i * (1.0 - c_hat * c_hat);
            da_f[j] = dc * prev.c[j] * f * (1.0 - f);
            da_o[j] = d_o * o * (1.0 - o);
            dc_next[j] = dc * f;
        }

        let x = &cache.inputs[t];
        let mut dh_prev = vec![0.0; m];
        for (gate, grad, da) in [
            (&lstm.input_gate, &mut g_lstm.input_gate, &da_i),
            (&lstm.candidate, &mut g_lstm.candidate, &da_c),
            (&lstm.forget_gate, &mut g_lstm.forget_gate, &da_f),
            (&lstm.output_gate, &mut g_lstm.output_gate, &da_o),
        ] {
            grad.w.add_outer(x, da);
            grad.u.add_outer(&prev.h, da);
            grad.b.row_mut(0).iter_mut().zip(da).for_each(|(b, g)| *b += g);
            gate.w.add_mul_vec(da, &mut g_inputs[t]);
            gate.u.add_mul_vec(da, &mut dh_prev);
        }
        dh_next = dh_prev;
    }

    SequenceGrads {
        lstm: g_lstm,
        softmax: g_softmax,
        inputs: g_inputs,
    }
}
