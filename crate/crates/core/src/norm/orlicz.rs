use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Convex, non-decreasing generator `f` with `f(0) = 0` for an Orlicz norm
/// `‖x‖_f = inf{λ > 0 : Σ f(x_i / λ) ≤ 1}`.
#[derive(Clone)]
pub enum Generator {
    /// `f(z) = z^p`, `p ≥ 1`; the Orlicz norm is then exactly ℓp.
    Pow(f64),
    Custom {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Pow(p) => write!(f, "pow:{p}"),
            Generator::Custom { name, .. } => write!(f, "{name}"),
        }
    }
}

const REL_TOL: f64 = 1e-13;
const MAX_HALVINGS: usize = 1100;

impl Generator {
    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Generator::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn apply(&self, z: f64) -> f64 {
        match self {
            Generator::Pow(p) => z.powf(*p),
            Generator::Custom { f, .. } => f(z),
        }
    }

    fn derivative(&self, z: f64) -> f64 {
        match self {
            Generator::Pow(p) => p * z.powf(p - 1.0),
            Generator::Custom { f, .. } => {
                let h = 1e-6 * (1.0 + z);
                if z > h {
                    (f(z + h) - f(z - h)) / (2.0 * h)
                } else {
                    (f(z + h) - f(z)) / h
                }
            }
        }
    }

    /// Spot checks `f(0) = 0`, monotonicity and convexity on a fixed grid.
    pub(crate) fn validate(&self) -> Result<()> {
        if let Generator::Pow(p) = self {
            if !(*p >= 1.0 && p.is_finite()) {
                return Err(Error::InvalidSpec(format!("orlicz pow needs finite p ≥ 1, got {p}")));
            }
            return Ok(());
        }
        let grid = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
        let vals: Vec<f64> = grid.iter().map(|z| self.apply(*z)).collect();
        if vals[0] != 0.0 {
            return Err(Error::InvalidSpec(format!("generator has f(0) = {}", vals[0])));
        }
        for i in 1..grid.len() {
            if vals[i] < vals[i - 1] || !vals[i].is_finite() {
                return Err(Error::InvalidSpec("generator is not non-decreasing".into()));
            }
        }
        for i in 1..grid.len() - 1 {
            let (a, b, c) = (grid[i - 1], grid[i], grid[i + 1]);
            let chord = vals[i - 1] + (vals[i + 1] - vals[i - 1]) * (b - a) / (c - a);
            if vals[i] > chord + 1e-12 * chord.abs().max(1.0) {
                return Err(Error::InvalidSpec("generator is not convex".into()));
            }
        }
        Ok(())
    }

    fn load(&self, x: &[f64], lambda: f64) -> f64 {
        x.iter().map(|v| self.apply(v / lambda)).sum()
    }

    /// Resolves the infimum by doubling/halving to a bracket, then bisection.
    pub(crate) fn norm(&self, x: &[f64]) -> Result<f64> {
        let xmax = x.iter().copied().fold(0.0, f64::max);
        if xmax == 0.0 {
            return Ok(0.0);
        }
        if let Generator::Pow(p) = self {
            if *p == 1.0 {
                return Ok(x.iter().sum());
            }
        }
        let mut hi = xmax.max(x.iter().sum::<f64>() / x.len() as f64);
        let mut steps = 0;
        while self.load(x, hi) > 1.0 {
            hi *= 2.0;
            steps += 1;
            if steps > MAX_HALVINGS {
                return Err(Error::InvalidSpec("generator grows without bound".into()));
            }
        }
        let mut lo = hi;
        steps = 0;
        while self.load(x, lo) <= 1.0 {
            lo /= 2.0;
            steps += 1;
            if steps > MAX_HALVINGS || lo == 0.0 {
                return Err(Error::InvalidSpec(
                    "degenerate generator: Σ f(x/λ) ≤ 1 for every λ in the bracket".into(),
                ));
            }
        }
        while hi - lo > REL_TOL * hi {
            let mid = 0.5 * (lo + hi);
            if self.load(x, mid) <= 1.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Gradient of the norm via implicit differentiation of `Σ f(x_i/λ) = 1`.
    pub(crate) fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let lambda = self.norm(x)?;
        if lambda == 0.0 {
            return Ok(vec![0.0; x.len()]);
        }
        let fp: Vec<f64> = x.iter().map(|v| self.derivative(v / lambda)).collect();
        let denom: f64 = fp.iter().zip(x).map(|(d, v)| d * v).sum();
        if denom <= 0.0 {
            return Ok(vec![0.0; x.len()]);
        }
        Ok(fp.iter().map(|d| lambda * d / denom).collect())
    }
}
