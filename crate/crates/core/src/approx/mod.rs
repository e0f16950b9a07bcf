//! Gradient-stable approximators `Ψ_ε`.
//!
//! Every approximator carries an [`ApproxMeta`] declaring the constants it
//! claims: stability scale `ε`, slack `δ`, multiplicative error `α` and
//! additive coefficient `γ`. The declarations are upper bounds; the
//! [`crate::verify`] module checks them empirically.

mod compose;
mod exact;
mod shifted_lp;
mod softmax;
mod spec;
mod topk;

use serde::{Deserialize, Serialize};

pub use compose::{
    compose_grad, compose_value, nested_vs_build, symmetric_gs_build, symmetric_gs_build_with,
    Composition, CompositionNode, InnerApprox,
};
pub use exact::ExactNorm;
pub use shifted_lp::{shifted_lp_approx, ShiftedLp};
pub use softmax::{softmax_approx, Softmax};
pub use spec::{ApproxSpec, BuildOptions};
pub use topk::{gs_topk_grad, gs_topk_value, GsTopK, KSampling, TopKGsConfig, TOPK_DELTA};

/// Sample count used by algorithm runs.
pub const DEFAULT_RUN_SAMPLES: usize = 2_000;
/// Sample count used by verification.
pub const DEFAULT_VERIFY_SAMPLES: usize = 100_000;

/// Declared constants of an approximator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxMeta {
    pub epsilon: f64,
    pub delta: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub stochastic: bool,
    pub seed: Option<u64>,
}

impl ApproxMeta {
    pub fn deterministic(epsilon: f64, delta: f64, alpha: f64, gamma: f64) -> Self {
        Self {
            epsilon,
            delta,
            alpha,
            gamma,
            stochastic: false,
            seed: None,
        }
    }
}

/// A point estimate with its standard error (`0` for exact quantities).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn exact(mean: f64) -> Self {
        Self { mean, se: 0.0 }
    }
}

/// A value-and-gradient surrogate of a norm on `ℝ₊^d`.
///
/// `value` and `gradient` panic when `x.len() != self.dim()`.
pub trait GsApproximator: Send + Sync {
    fn dim(&self) -> usize;

    fn meta(&self) -> ApproxMeta;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    fn value_estimate(&self, x: &[f64]) -> Estimate {
        Estimate::exact(self.value(x))
    }

    /// Gradient together with per-coordinate standard errors.
    fn gradient_estimate(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (self.gradient(x), vec![0.0; self.dim()])
    }

    /// For each `y_b`, estimates `∇Ψ(x + y_b) − factor_b · ∇Ψ(x)` per
    /// coordinate. Monte-Carlo approximators override this with a paired
    /// estimator over their frozen sample set.
    fn stability_gaps(&self, x: &[f64], ys: &[Vec<f64>], factors: &[f64]) -> Vec<Vec<Estimate>> {
        let (g0, s0) = self.gradient_estimate(x);
        ys.iter()
            .zip(factors)
            .map(|(y, &f)| {
                let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
                let (g1, s1) = self.gradient_estimate(&xy);
                (0..x.len())
                    .map(|i| Estimate {
                        mean: g1[i] - f * g0[i],
                        se: (s1[i] * s1[i] + f * f * s0[i] * s0[i]).sqrt(),
                    })
                    .collect()
            })
            .collect()
    }
}

pub(crate) fn assert_dim(expected: usize, x: &[f64]) {
    assert_eq!(
        x.len(),
        expected,
        "approximator of dimension {expected} evaluated at a vector of dimension {}",
        x.len()
    );
}
