use super::{Matrix, NnError};

/// AdaDelta hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaDelta {
    pub rho: f64,
    pub eps: f64,
}

impl Default for AdaDelta {
    fn default() -> Self {
        AdaDelta { rho: 0.95, eps: 1e-6 }
    }
}

/// Running averages `E[g^2]` and `E[dx^2]` for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaDeltaState {
    pub mean_sq_grad: Vec<f64>,
    pub mean_sq_update: Vec<f64>,
}

impl AdaDeltaState {
    pub fn new(len: usize) -> Self {
        AdaDeltaState {
            mean_sq_grad: vec![0.0; len],
            mean_sq_update: vec![0.0; len],
        }
    }

    pub fn for_matrix(m: &Matrix) -> Self {
        Self::new(m.len())
    }
}

/// One AdaDelta step, in place:
///
/// ```text
/// E[g^2]  <- rho E[g^2] + (1 - rho) g^2
/// dx      <- -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
/// E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2
/// x       <- x + dx
/// ```
pub fn adadelta_update(
    param: &mut [f64],
    grad: &[f64],
    state: &mut AdaDeltaState,
    cfg: AdaDelta,
) -> Result<(), NnError> {
    if grad.len() != param.len() {
        return Err(NnError::Shape {
            what: "adadelta gradient",
            expected: param.len(),
            got: grad.len(),
        });
    }
    if state.mean_sq_grad.len() != param.len() || state.mean_sq_update.len() != param.len() {
        return Err(NnError::Shape {
            what: "adadelta state",
            expected: param.len(),
            got: state.mean_sq_grad.len(),
        });
    }
    let AdaDelta { rho, eps } = cfg;
    for (((x, &g), eg2), edx2) in param
        .iter_mut()
        .zip(grad)
        .zip(state.mean_sq_grad.iter_mut())
        .zip(state.mean_sq_update.iter_mut())
    {
        *eg2 = rho * *eg2 + (1.0 - rho) * g * g;
        let dx = -((*edx2 + eps).sqrt() / (*eg2 + eps).sqrt()) * g;
        *edx2 = rho * *edx2 + (1.0 - rho) * dx * dx;
        *x += dx;
    }
    Ok(())
}
