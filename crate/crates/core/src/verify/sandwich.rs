use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::{CheckReport, Witness};
use crate::approx::GsApproximator;
use crate::norm::Objective;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichConfig {
    pub trials: usize,
    /// Relative tolerance for deterministic approximators.
    pub rel_tol: f64,
    pub se_multiplier: f64,
    /// Overrides the meta `ε` in the additive term `γ/ε`.
    pub epsilon: Option<f64>,
    pub seed: u64,
}

impl Default for SandwichConfig {
    fn default() -> Self {
        Self {
            trials: 1000,
            rel_tol: 1e-9,
            se_multiplier: 3.0,
            epsilon: None,
            seed: 0,
        }
    }
}

/// Checks `‖x‖ ≤ Ψ(x) ≤ α‖x‖ + γ/ε` on points spanning several orders of
/// magnitude around `1/ε`, including sparse points and the origin.
///
/// Extras: `max_lower_ratio = max Ψ(x)/‖x‖` over `x ≠ 0` and
/// `max_excess = max (Ψ(x) − ‖x‖)·ε`.
pub fn check_sandwich(
    approx: &dyn GsApproximator,
    norm: &Objective,
    alpha: f64,
    gamma: f64,
    cfg: &SandwichConfig,
) -> CheckReport {
    let meta = approx.meta();
    let eps = cfg.epsilon.unwrap_or(meta.epsilon);
    let d = approx.dim();
    assert_eq!(norm.dim(), d, "norm and approximator dimensions differ");
    let se_mult = if meta.stochastic { cfg.se_multiplier } else { 0.0 };
    let mut report = CheckReport::new("sandwich", cfg.seed, cfg.rel_tol, se_mult);
    let mut max_ratio: f64 = 0.0;
    let mut max_excess: f64 = f64::NEG_INFINITY;
    let (mut lower_viol, mut upper_viol) = (0usize, 0usize);
    const SCALES: [f64; 6] = [0.0, 0.01, 0.1, 1.0, 10.0, 100.0];
    for t in 0..cfg.trials {
        let mut rng = seed::rng(cfg.seed, "sandwich", t as u64);
        let scale = SCALES[t % SCALES.len()] / eps;
        let density = rng.random::<f64>();
        let x: Vec<f64> = (0..d)
            .map(|_| {
                if rng.random::<f64>() < density.max(1.0 / d as f64) {
                    let e: f64 = Exp1.sample(&mut rng);
                    e * scale
                } else {
                    0.0
                }
            })
            .collect();
        let n = norm.eval_unchecked(&x);
        let est = approx.value_estimate(&x);
        let tol = (cfg.rel_tol * est.mean.abs().max(1.0)).max(se_mult * est.se);
        let lower = est.mean - n;
        let upper = alpha * n + gamma / eps - est.mean;
        report.trials += 1;
        if lower + tol < 0.0 {
            lower_viol += 1;
        }
        if upper + tol < 0.0 {
            upper_viol += 1;
        }
        if lower + tol < 0.0 || upper + tol < 0.0 {
            report.violations += 1;
        }
        if n > 0.0 {
            max_ratio = max_ratio.max(est.mean / n);
        }
        max_excess = max_excess.max(lower * eps);
        if report.observe(lower.min(upper)) {
            report.witness = Some(Witness {
                trial: t,
                x: Some(x),
                ..Witness::default()
            });
        }
    }
    report.extras.insert("alpha".into(), alpha);
    report.extras.insert("gamma".into(), gamma);
    report.extras.insert("lower_violations".into(), lower_viol as f64);
    report.extras.insert("upper_violations".into(), upper_viol as f64);
    report.extras.insert("max_lower_ratio".into(), max_ratio);
    if max_excess.is_finite() {
        report.extras.insert("max_excess".into(), max_excess);
    }
    report.finish()
}
