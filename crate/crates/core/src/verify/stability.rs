use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{sample_increment, sample_point, unit_norm, CheckReport, Witness};
use crate::approx::GsApproximator;
use crate::norm::{sorted_order, Objective};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub delta: f64,
    /// Number of base points `x`.
    pub trials: usize,
    /// Perturbations `y` tried against each base point.
    pub probes_per_trial: usize,
    /// Upper bound on `‖y‖`.
    pub y_cap: f64,
    pub abs_tol: f64,
    pub se_multiplier: f64,
    /// Fraction of probes that are single-coordinate spikes.
    pub spike_fraction: f64,
    pub seed: u64,
}

impl StabilityConfig {
    pub fn new(delta: f64) -> Self {
        Self {
            delta,
            trials: 100,
            probes_per_trial: 10,
            y_cap: 1.0,
            abs_tol: 1e-9,
            se_multiplier: 3.0,
            spike_fraction: 0.5,
            seed: 0,
        }
    }
}

/// Checks `∇Ψ(x+y) ≥ exp(−ε‖y‖ − δ)·∇Ψ(x)` coordinate-wise, with `ε` taken
/// from the approximator's meta and `‖y‖` measured in `norm`.
///
/// Each trial draws a mixed-scale `x`, then pulls the coordinate just below
/// a random rank (log-uniform, so top ranks are favoured) up to within a
/// small gap of the one above it. Spike probes push that coordinate past
/// its neighbour; the remaining probes are random with `‖y‖ ≤ y_cap`.
pub fn check_gradient_stability(
    approx: &dyn GsApproximator,
    norm: &Objective,
    cfg: &StabilityConfig,
) -> CheckReport {
    let meta = approx.meta();
    let d = approx.dim();
    assert_eq!(norm.dim(), d, "norm and approximator dimensions differ");
    let se_mult = if meta.stochastic { cfg.se_multiplier } else { 0.0 };
    let mut report = CheckReport::new("stability", cfg.seed, cfg.abs_tol, se_mult);
    let mut spikes = 0usize;
    let mut worst_excess = f64::INFINITY;
    let mut worst_ratio = f64::INFINITY;
    for t in 0..cfg.trials {
        let mut rng = seed::rng(cfg.seed, "stability", t as u64);
        let mut x = sample_point(&mut rng, d, meta.epsilon);
        let boundary = if d >= 2 {
            let order = sorted_order(&x);
            let r = ((d as f64).powf(rng.random::<f64>()) as usize).clamp(1, d - 1) - 1;
            let (hi, lo) = (order[r], order[r + 1]);
            let gap = rng.random::<f64>() * cfg.y_cap / (2.0 * unit_norm(norm, lo));
            x[lo] = (x[hi] - gap).max(0.0);
            Some((lo, x[hi] - x[lo]))
        } else {
            None
        };
        let mut ys = Vec::with_capacity(cfg.probes_per_trial);
        for _ in 0..cfg.probes_per_trial {
            let y = if rng.random_bool(cfg.spike_fraction) {
                spikes += 1;
                let (l, low) = match boundary {
                    Some((lo, gap)) if rng.random_bool(0.5) => (lo, gap * unit_norm(norm, lo)),
                    _ => (rng.random_range(0..d), 0.0),
                };
                let size = low + rng.random::<f64>() * (cfg.y_cap - low).max(0.0);
                let mut y = vec![0.0; d];
                y[l] = size.min(cfg.y_cap) / unit_norm(norm, l);
                y
            } else {
                let target = cfg.y_cap * (1.0 - rng.random::<f64>());
                sample_increment(&mut rng, norm, target)
            };
            ys.push(y);
        }
        let factors: Vec<f64> = ys
            .iter()
            .map(|y| (-meta.epsilon * norm.eval_unchecked(y) - cfg.delta).exp())
            .collect();
        let gaps = approx.stability_gaps(&x, &ys, &factors);
        let base = if meta.stochastic {
            None
        } else {
            Some(approx.gradient(&x))
        };
        for (b, row) in gaps.iter().enumerate() {
            report.trials += 1;
            let mut violated = false;
            for (i, e) in row.iter().enumerate() {
                let tol = cfg.abs_tol.max(se_mult * e.se);
                if e.mean + tol < 0.0 {
                    violated = true;
                }
                worst_excess = worst_excess.min(e.mean + tol);
                if let Some(g) = &base {
                    if g[i] > 0.0 {
                        worst_ratio = worst_ratio.min((e.mean + factors[b] * g[i]) / g[i]);
                    }
                }
                if report.observe(e.mean) {
                    report.witness = Some(Witness {
                        trial: t,
                        x: Some(x.clone()),
                        y: Some(ys[b].clone()),
                        coordinate: Some(i),
                        ..Witness::default()
                    });
                }
            }
            if violated {
                report.violations += 1;
            }
        }
    }
    report.extras.insert("spike_probes".into(), spikes as f64);
    report.extras.insert("delta".into(), cfg.delta);
    report.extras.insert("epsilon".into(), meta.epsilon);
    if worst_excess.is_finite() {
        report.extras.insert("worst_excess".into(), worst_excess);
    }
    if worst_ratio.is_finite() {
        report.extras.insert("worst_gradient_ratio".into(), worst_ratio);
    }
    report.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::{ExactNorm, Softmax};
    use crate::norm::NormSpec;

    #[test]
    fn softmax_passes_with_zero_delta() {
        let sm = Softmax::new(8, 0.5).unwrap();
        let norm = Objective::Norm(NormSpec::linf(8));
        let mut cfg = StabilityConfig::new(0.0);
        cfg.y_cap = 2.0;
        let r = check_gradient_stability(&sm, &norm, &cfg);
        assert!(r.pass, "{r:?}");
        assert!(r.worst_margin >= -1e-9);
        assert_eq!(r.trials, 1000);
    }

    #[test]
    fn exact_linf_fails() {
        let ex = ExactNorm::new(NormSpec::linf(4), 1.0);
        let norm = Objective::Norm(NormSpec::linf(4));
        let r = check_gradient_stability(&ex, &norm, &StabilityConfig::new(0.25));
        assert!(!r.pass);
        assert!(r.worst_margin < -0.5);
    }

    #[test]
    fn report_is_reproducible() {
        let sm = Softmax::new(5, 1.0).unwrap();
        let norm = Objective::Norm(NormSpec::linf(5));
        let cfg = StabilityConfig::new(0.0);
        let a = check_gradient_stability(&sm, &norm, &cfg);
        let b = check_gradient_stability(&sm, &norm, &cfg);
        assert_eq!(a, b);
    }
}
