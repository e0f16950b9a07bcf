use super::{assert_dim, ApproxMeta, GsApproximator};
use crate::error::{Error, Result};

/// Shifted ℓp: `Ψ(x) = (‖x‖_{p′}^{p′} + c^{p′})^{1/p′}` with `c = (p′−1)/ε` and
/// effective exponent `p′ = min(p, 1 + ln m_cap)`.
///
/// `Ψ(x+y)/Ψ(x) ≤ 1 + ‖y‖_{p′}/c`, and the gradient `(x_i/Ψ)^{p′−1}` can only
/// shrink through the denominator, so the gradient ratio is at least
/// `exp(−ε‖y‖_{p′})`. When the exponent is capped, `‖y‖_{p′} ≤ α‖y‖_p` with
/// `α = d^{1/p′−1/p}`; the declared meta therefore reports stability scale
/// `α·ε` and additive coefficient `α(p′−1)`, which keeps the
/// declared guarantee exact against the target ℓp norm.
#[derive(Debug, Clone)]
pub struct ShiftedLp {
    dim: usize,
    p: f64,
    p_eff: f64,
    shift: f64,
    epsilon: f64,
    alpha: f64,
}

pub fn shifted_lp_approx(dim: usize, p: f64, epsilon: f64, m_cap: usize) -> Result<ShiftedLp> {
    ShiftedLp::new(dim, p, epsilon, m_cap)
}

impl ShiftedLp {
    pub fn new(dim: usize, p: f64, epsilon: f64, m_cap: usize) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::InvalidInput(format!("shifted ℓp needs p ≥ 1, got {p}")));
        }
        if dim == 0 || m_cap == 0 {
            return Err(Error::InvalidInput("shifted ℓp needs d, m_cap ≥ 1".into()));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!("shifted ℓp needs ε > 0, got {epsilon}")));
        }
        let p_eff = p.min(1.0 + (m_cap as f64).ln());
        let shift = (p_eff - 1.0) / epsilon;
        let gap = (1.0 / p_eff - 1.0 / p).max(0.0);
        let alpha = (dim as f64).powf(gap);
        Ok(Self {
            dim,
            p,
            p_eff,
            shift,
            epsilon,
            alpha,
        })
    }

    /// The effective exponent `p′`.
    pub fn effective_p(&self) -> f64 {
        self.p_eff
    }

    pub fn target_p(&self) -> f64 {
        self.p
    }

    /// The shift `c = (p′−1)/ε`.
    pub fn shift(&self) -> f64 {
        self.shift
    }
}

impl GsApproximator for ShiftedLp {
    fn dim(&self) -> usize {
        self.dim
    }

    fn meta(&self) -> ApproxMeta {
        ApproxMeta::deterministic(
            self.alpha * self.epsilon,
            0.0,
            self.alpha,
            self.alpha * (self.p_eff - 1.0),
        )
    }

    fn value(&self, x: &[f64]) -> f64 {
        assert_dim(self.dim, x);
        if self.p_eff == 1.0 {
            return x.iter().sum();
        }
        let t = x.iter().copied().fold(self.shift, f64::max);
        if t == 0.0 {
            return 0.0;
        }
        let p = self.p_eff;
        let s: f64 = x.iter().map(|v| (v / t).powf(p)).sum::<f64>() + (self.shift / t).powf(p);
        t * s.powf(1.0 / p)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        assert_dim(self.dim, x);
        if self.p_eff == 1.0 {
            return vec![1.0; self.dim];
        }
        let psi = self.value(x);
        if psi == 0.0 {
            return vec![0.0; self.dim];
        }
        x.iter().map(|v| (v / psi).powf(self.p_eff - 1.0)).collect()
    }
}
