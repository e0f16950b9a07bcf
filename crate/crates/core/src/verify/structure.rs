use serde::{Deserialize, Serialize};

use super::{sample_point, CheckReport, Witness};
use crate::approx::GsApproximator;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureConfig {
    pub trials: usize,
    pub rel_tol: f64,
    pub se_multiplier: f64,
    pub seed: u64,
}

impl Default for StructureConfig {
    fn default() -> Self {
        Self {
            trials: 1000,
            rel_tol: 1e-9,
            se_multiplier: 3.0,
            seed: 0,
        }
    }
}

/// Random probes of monotonicity (`x ≤ x + y`), midpoint convexity and
/// subadditivity. Each trial runs all three; extras count violations per
/// property.
pub fn check_structure(approx: &dyn GsApproximator, cfg: &StructureConfig) -> CheckReport {
    let meta = approx.meta();
    let d = approx.dim();
    let se_mult = if meta.stochastic { cfg.se_multiplier } else { 0.0 };
    let mut report = CheckReport::new("structure", cfg.seed, cfg.rel_tol, se_mult);
    let mut counts = [0usize; 3];
    for t in 0..cfg.trials {
        let mut rng = seed::rng(cfg.seed, "structure", t as u64);
        let x = sample_point(&mut rng, d, meta.epsilon);
        let y = sample_point(&mut rng, d, meta.epsilon);
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let mid: Vec<f64> = sum.iter().map(|v| v / 2.0).collect();
        let fx = approx.value_estimate(&x);
        let fy = approx.value_estimate(&y);
        let fs = approx.value_estimate(&sum);
        let fm = approx.value_estimate(&mid);
        let margins = [
            (fs.mean - fx.mean, fs.se + fx.se),
            ((fx.mean + fy.mean) / 2.0 - fm.mean, fm.se + (fx.se + fy.se) / 2.0),
            (fx.mean + fy.mean - fs.mean, fx.se + fy.se + fs.se),
        ];
        report.trials += 1;
        let mut bad = false;
        for (p, (m, se)) in margins.iter().enumerate() {
            let tol = (cfg.rel_tol * fs.mean.abs().max(1.0)).max(se_mult * se);
            if m + tol < 0.0 {
                counts[p] += 1;
                bad = true;
            }
            if report.observe(*m) {
                report.witness = Some(Witness {
                    trial: t,
                    x: Some(x.clone()),
                    y: Some(y.clone()),
                    coordinate: Some(p),
                    ..Witness::default()
                });
            }
        }
        if bad {
            report.violations += 1;
        }
    }
    report.extras.insert("monotone_violations".into(), counts[0] as f64);
    report.extras.insert("convexity_violations".into(), counts[1] as f64);
    report.extras.insert("subadditivity_violations".into(), counts[2] as f64);
    report.finish()
}
