use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Matrix, NnError};

/// A scalar objective with analytic gradients over a list of tensors.
pub trait GradientCheckable: Clone {
    fn tensor_names(&self) -> Vec<String>;
    fn tensors_mut(&mut self) -> Vec<&mut Matrix>;
    fn loss(&self) -> Result<f64, NnError>;
    /// One gradient matrix per tensor, in the order of [`Self::tensors_mut`].
    fn analytic_gradient(&self) -> Result<Vec<Matrix>, NnError>;

    /// `(L(x + eps) - L(x - eps)) / 2 eps` for one coordinate, evaluated in
    /// extended precision. `None` when the objective has no such path.
    fn extended_central_difference(
        &self,
        _tensor: usize,
        _index: usize,
        _epsilon: f64,
    ) -> Option<Result<f64, NnError>> {
        None
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GradCheckOptions {
    /// Check every coordinate when the model has at most this many,
    /// otherwise a random sample of this size.
    pub max_coordinates: usize,
    pub seed: u64,
    /// Use [`GradientCheckable::extended_central_difference`] when available.
    /// In `f64`, a loss of magnitude `L` leaves about `L * 1e-16 / eps` of
    /// roundoff in every difference, which dominates tiny gradients.
    pub extended_precision: bool,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            max_coordinates: 20_000,
            seed: 0,
            extended_precision: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub coordinates_checked: usize,
    /// Tensor name and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
    /// Whether the differences were taken in extended precision.
    pub extended_precision: bool,
}

/// Compares analytic gradients to central differences
/// `(L(x + eps) - L(x - eps)) / 2 eps`, returning the largest
/// `|ga - gn| / max(|ga|, |gn|, 1e-8)`.
pub fn grad_check<T: GradientCheckable>(
    target: &T,
    epsilon: f64,
    options: GradCheckOptions,
) -> Result<GradCheckReport, NnError> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(NnError::InvalidArgument(format!(
            "finite-difference epsilon must be positive, got {epsilon}"
        )));
    }
    let analytic = target.analytic_gradient()?;
    let names = target.tensor_names();
    let mut probe = target.clone();

    let sizes: Vec<usize> = analytic.iter().map(Matrix::len).collect();
    let total: usize = sizes.iter().sum();
    let coordinates: Vec<usize> = if total <= options.max_coordinates {
        (0..total).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let mut picked = rand::seq::index::sample(&mut rng, total, options.max_coordinates).into_vec();
        picked.sort_unstable();
        picked
    };

    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        coordinates_checked: 0,
        worst: None,
        extended_precision: false,
    };
    for flat in coordinates {
        let (tensor, index) = locate(&sizes, flat);
        let numeric = match options
            .extended_precision
            .then(|| target.extended_central_difference(tensor, index, epsilon))
            .flatten()
        {
            Some(diff) => {
                report.extended_precision = true;
                diff?
            }
            None => {
                let original = probe.tensors_mut()[tensor].as_slice()[index];
                probe.tensors_mut()[tensor].as_mut_slice()[index] = original + epsilon;
                let plus = probe.loss()?;
                probe.tensors_mut()[tensor].as_mut_slice()[index] = original - epsilon;
                let minus = probe.loss()?;
                probe.tensors_mut()[tensor].as_mut_slice()[index] = original;
                (plus - minus) / (2.0 * epsilon)
            }
        };
        let exact = analytic[tensor].as_slice()[index];
        let rel = (exact - numeric).abs() / exact.abs().max(numeric.abs()).max(1e-8);
        report.coordinates_checked += 1;
        if report.worst.is_none() || rel > report.max_relative_error {
            report.max_relative_error = rel;
            report.worst = Some((names[tensor].clone(), index));
        }
    }
    Ok(report)
}

fn locate(sizes: &[usize], mut flat: usize) -> (usize, usize) {
    for (t, &n) in sizes.iter().enumerate() {
        if flat < n {
            return (t, flat);
        }
        flat -= n;
    }
    unreachable!("coordinate outside parameter space")
}
