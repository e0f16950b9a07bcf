use super::NormSpec;
use crate::error::{check_dim, Error, Result};

/// The cost function of a load-balancing run: a single norm, or the
/// vector-scheduling objective `max_i ‖x_i‖_i` over resource blocks.
///
/// Nested inputs are resource-major: coordinates `[i·m, (i+1)·m)` hold the
/// machine loads of resource `i`.
#[derive(Debug, Clone)]
pub enum Objective {
    Norm(NormSpec),
    Nested { machines: usize, inner: Vec<NormSpec> },
}

impl Objective {
    pub fn nested(machines: usize, inner: Vec<NormSpec>) -> Result<Self> {
        if machines == 0 || inner.is_empty() {
            return Err(Error::InvalidSpec("nested objective needs m, r ≥ 1".into()));
        }
        if let Some(s) = inner.iter().find(|s| s.dim() != machines) {
            return Err(Error::InvalidSpec(format!(
                "inner norm of dimension {} for {machines} machines",
                s.dim()
            )));
        }
        Ok(Objective::Nested { machines, inner })
    }

    pub fn dim(&self) -> usize {
        match self {
            Objective::Norm(s) => s.dim(),
            Objective::Nested { machines, inner } => machines * inner.len(),
        }
    }

    /// Number of resource blocks (`1` for a plain norm).
    pub fn resources(&self) -> usize {
        match self {
            Objective::Norm(_) => 1,
            Objective::Nested { inner, .. } => inner.len(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            Objective::Norm(s) => s.eval_unchecked(x),
            Objective::Nested { machines, inner } => inner
                .iter()
                .zip(x.chunks(*machines))
                .map(|(s, block)| s.eval_unchecked(block))
                .fold(0.0, f64::max),
        }
    }

    /// `‖1‖` under the objective.
    pub fn ones_norm(&self) -> f64 {
        self.eval_unchecked(&vec![1.0; self.dim()])
    }
}

impl From<NormSpec> for Objective {
    fn from(s: NormSpec) -> Self {
        Objective::Norm(s)
    }
}
