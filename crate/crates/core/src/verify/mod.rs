//! Empirical checks of the properties an approximator declares.
//!
//! Every check samples its probes from a per-trial stream derived from
//! `(seed, check name, trial)`, so a report re-runs bit-identically and its
//! witness can be regenerated from the seed alone. Failures are reported,
//! never raised.

mod sandwich;
mod sequences;
mod stability;
mod structure;

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::norm::Objective;

pub use sandwich::{check_sandwich, SandwichConfig};
pub use sequences::{
    check_converse_jensen, check_converse_jensen_sequences, check_smooth_game,
    check_smooth_game_sequences, JensenConfig, SequencePair, SmoothGameParams,
};
pub use stability::{check_gradient_stability, StabilityConfig};
pub use structure::{check_structure, StructureConfig};

/// Inputs that produced the worst observed margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Witness {
    pub trial: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coordinate: Option<usize>,
    /// Increments of the algorithm-side sequence.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sequence: Option<Vec<Vec<f64>>>,
    /// Increments of the benchmark-side sequence (smooth game only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<Vec<f64>>>,
}

/// One `(μ, λ(μ))` point of a measured smooth-game frontier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub mu: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub trials: usize,
    pub violations: usize,
    /// Most negative slack observed (positive when every probe had room).
    pub worst_margin: f64,
    pub witness: Option<Witness>,
    pub tolerance: f64,
    /// Standard errors granted to stochastic estimates.
    pub se_multiplier: f64,
    pub pass: bool,
    pub seed: u64,
    /// Check-specific measurements (fitted constants, counts per probe type).
    pub extras: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frontier: Option<Vec<FrontierPoint>>,
}

impl CheckReport {
    pub(crate) fn new(check: &str, seed: u64, tolerance: f64, se_multiplier: f64) -> Self {
        Self {
            check: check.to_string(),
            trials: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
            witness: None,
            tolerance,
            se_multiplier,
            pass: false,
            seed,
            extras: BTreeMap::new(),
            frontier: None,
        }
    }

    /// Records a slack; returns `true` if it is the new worst.
    pub(crate) fn observe(&mut self, margin: f64) -> bool {
        if margin < self.worst_margin || (margin.is_nan() && !self.worst_margin.is_nan()) {
            self.worst_margin = margin;
            return true;
        }
        false
    }

    pub(crate) fn finish(mut self) -> Self {
        if self.worst_margin.is_infinite() {
            self.worst_margin = 0.0;
        }
        self.pass = self.violations == 0 && !self.worst_margin.is_nan();
        self
    }

    pub fn extra(&self, key: &str) -> Option<f64> {
        self.extras.get(key).copied()
    }
}

/// Gradient of `f` at `x` by finite differences with step `h`: central
/// differences where `x_i ≥ h`, second-order forward differences otherwise,
/// so `f` is never evaluated outside the non-negative orthant.
pub fn finite_diff_grad<F>(f: &F, x: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    assert!(h > 0.0, "finite-difference step must be positive");
    let mut z = x.to_vec();
    let mut g = vec![0.0; x.len()];
    let f0 = if x.iter().any(|v| *v < h) { f(x) } else { 0.0 };
    for i in 0..x.len() {
        let xi = x[i];
        g[i] = if xi >= h {
            z[i] = xi + h;
            let up = f(&z);
            z[i] = xi - h;
            let down = f(&z);
            (up - down) / (2.0 * h)
        } else {
            z[i] = xi + h;
            let f1 = f(&z);
            z[i] = xi + 2.0 * h;
            let f2 = f(&z);
            (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h)
        };
        z[i] = xi;
    }
    g
}

/// Mixed-scale base point: coordinate `i` is exponential with mean drawn
/// from `{0.1, 1, 10}/ε`.
pub(crate) fn sample_point(rng: &mut ChaCha8Rng, d: usize, epsilon: f64) -> Vec<f64> {
    const SCALES: [f64; 3] = [0.1, 1.0, 10.0];
    (0..d)
        .map(|_| {
            let mean = SCALES[rng.random_range(0..3)] / epsilon;
            let e: f64 = Exp1.sample(rng);
            e * mean
        })
        .collect()
}

/// Random non-negative direction on a random non-empty support, rescaled
/// so its norm is exactly `target`.
pub(crate) fn sample_increment(
    rng: &mut ChaCha8Rng,
    norm: &Objective,
    target: f64,
) -> Vec<f64> {
    let d = norm.dim();
    let mut y: Vec<f64> = (0..d)
        .map(|_| {
            if rng.random_bool(0.5) {
                Exp1.sample(rng)
            } else {
                0.0
            }
        })
        .collect();
    if y.iter().all(|v| *v == 0.0) {
        y[rng.random_range(0..d)] = 1.0;
    }
    let n = norm.eval_unchecked(&y);
    if n > 0.0 {
        for v in &mut y {
            *v *= target / n;
        }
    }
    y
}

pub(crate) fn unit_norm(norm: &Objective, i: usize) -> f64 {
    let mut e = vec![0.0; norm.dim()];
    e[i] = 1.0;
    norm.eval_unchecked(&e)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
