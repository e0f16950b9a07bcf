use super::{assert_dim, ApproxMeta, GsApproximator};
use crate::error::{Error, Result};

/// `SM_ε(x) = (1/ε)·ln Σ_i e^{ε x_i}`, a 0-gradient-stable approximation of
/// ℓ∞ with error `(1, ln d)`.
#[derive(Debug, Clone)]
pub struct Softmax {
    dim: usize,
    epsilon: f64,
}

pub fn softmax_approx(dim: usize, epsilon: f64) -> Result<Softmax> {
    Softmax::new(dim, epsilon)
}

impl Softmax {
    pub fn new(dim: usize, epsilon: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("softmax needs d ≥ 1".into()));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!("softmax needs ε > 0, got {epsilon}")));
        }
        Ok(Self { dim, epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

impl GsApproximator for Softmax {
    fn dim(&self) -> usize {
        self.dim
    }

    fn meta(&self) -> ApproxMeta {
        ApproxMeta::deterministic(self.epsilon, 0.0, 1.0, (self.dim as f64).ln())
    }

    fn value(&self, x: &[f64]) -> f64 {
        assert_dim(self.dim, x);
        let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = x.iter().map(|v| (self.epsilon * (v - m)).exp()).sum();
        m + s.ln() / self.epsilon
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        assert_dim(self.dim, x);
        let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut g: Vec<f64> = x.iter().map(|v| (self.epsilon * (v - m)).exp()).collect();
        let s: f64 = g.iter().sum();
        for v in &mut g {
            *v /= s;
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn value_at_zero_is_ln_d_over_eps() {
        let sm = Softmax::new(5, 0.5).unwrap();
        assert_relative_eq!(sm.value(&[0.0; 5]), 5f64.ln() / 0.5, max_relative = 1e-14);
    }

    #[test]
    fn closed_form_two_dims() {
        let sm = Softmax::new(2, 1.0).unwrap();
        let x = [0.0, 3f64.ln()];
        assert_relative_eq!(sm.value(&x), 4f64.ln(), max_relative = 1e-14);
        let g = sm.gradient(&x);
        assert_relative_eq!(g[0], 0.25, max_relative = 1e-14);
        assert_relative_eq!(g[1], 0.75, max_relative = 1e-14);
    }

    #[test]
    fn shift_equivariant() {
        let sm = Softmax::new(3, 2.0).unwrap();
        let z = [0.3, 1.7, 0.2];
        let c = 4.5;
        let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
        assert_relative_eq!(sm.value(&shifted), sm.value(&z) + c, max_relative = 1e-14);
    }

    #[test]
    fn no_overflow_at_large_inputs() {
        let sm = Softmax::new(3, 10.0).unwrap();
        let v = sm.value(&[1e6, 1e6 - 1.0, 0.0]);
        assert!(v.is_finite() && v >= 1e6);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Softmax::new(0, 1.0).is_err());
        assert!(Softmax::new(2, 0.0).is_err());
    }

    #[test]
    #[should_panic]
    fn dimension_mismatch_panics() {
        Softmax::new(3, 1.0).unwrap().value(&[1.0, 2.0]);
    }
}
