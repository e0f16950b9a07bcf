use super::{assert_dim, ApproxMeta, GsApproximator};
use crate::norm::NormSpec;

/// The norm itself with its lowest-index subgradient.
///
/// Not gradient-stable in general: for ℓ∞ the gradient jumps between basis
/// vectors under arbitrarily small perturbations. Useful as a baseline and
/// as a negative control for the stability checker.
#[derive(Debug, Clone)]
pub struct ExactNorm {
    spec: NormSpec,
    epsilon: f64,
}

impl ExactNorm {
    /// `epsilon` is only reported in the meta; the norm has no smoothing.
    pub fn new(spec: NormSpec, epsilon: f64) -> Self {
        Self { spec, epsilon }
    }

    pub fn spec(&self) -> &NormSpec {
        &self.spec
    }
}

impl GsApproximator for ExactNorm {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn meta(&self) -> ApproxMeta {
        ApproxMeta::deterministic(self.epsilon, 0.0, 1.0, 0.0)
    }

    fn value(&self, x: &[f64]) -> f64 {
        assert_dim(self.dim(), x);
        self.spec.eval_unchecked(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        assert_dim(self.dim(), x);
        self.spec.subgradient(x).expect("dimension checked")
    }
}
