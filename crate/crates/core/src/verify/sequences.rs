//! Checks over increasing load sequences: the smooth-game inequality and
//! the approximate converse of Jensen's inequality.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{dot, sample_increment, CheckReport, FrontierPoint, Witness};
use crate::approx::GsApproximator;
use crate::error::{Error, Result};
use crate::norm::Objective;
use crate::seed;

/// Both sequences are given by their increments, starting from `0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequencePair {
    pub alg: Vec<Vec<f64>>,
    pub opt: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothGameParams {
    pub lambda: f64,
    /// Must lie in `[0, 1)`.
    pub mu: f64,
    pub horizon: usize,
    /// Upper bound on the norm of every increment of generated sequences.
    pub step_cap: f64,
    pub trials: usize,
    pub rel_tol: f64,
    pub seed: u64,
}

impl SmoothGameParams {
    pub fn new(lambda: f64, mu: f64) -> Self {
        Self {
            lambda,
            mu,
            horizon: 50,
            step_cap: 1.0,
            trials: 1000,
            rel_tol: 1e-9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JensenConfig {
    /// Multiplier on the linearized increase in the converse direction.
    pub factor: f64,
    pub additive: f64,
    pub step_cap: f64,
    pub horizon: usize,
    pub trials: usize,
    pub rel_tol: f64,
    pub seed: u64,
}

impl JensenConfig {
    pub fn new(factor: f64, step_cap: f64) -> Self {
        Self {
            factor,
            additive: 0.0,
            step_cap,
            horizon: 50,
            trials: 1000,
            rel_tol: 1e-9,
            seed: 0,
        }
    }
}

/// `μ` grid of the measured frontier: `0, 0.05, …, 0.95`.
pub const MU_GRID: usize = 20;

fn validate_increments(incs: &[Vec<f64>], d: usize, cap: Option<(&Objective, f64)>) -> Result<()> {
    for (t, y) in incs.iter().enumerate() {
        if y.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: y.len(),
            });
        }
        if y.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "sequence decreases at step {}",
                t + 1
            )));
        }
        if let Some((norm, cap)) = cap {
            let n = norm.eval_unchecked(y);
            if n > cap * (1.0 + 1e-12) {
                return Err(Error::InvalidInput(format!(
                    "step {} has norm {n} above the cap {cap}",
                    t + 1
                )));
            }
        }
    }
    Ok(())
}

fn add(acc: &mut [f64], y: &[f64]) {
    for (a, b) in acc.iter_mut().zip(y) {
        *a += b;
    }
}

/// `(Σ_t Ψ(Λ^{t−1} + y*_t) − Ψ(Λ^{t−1}), Ψ(Λ*^T), Ψ(Λ^T) − Ψ(0))`.
fn game_terms(approx: &dyn GsApproximator, pair: &SequencePair) -> (f64, f64, f64) {
    let d = approx.dim();
    let mut lam = vec![0.0; d];
    let mut star = vec![0.0; d];
    let psi0 = approx.value(&lam);
    let mut psi_prev = psi0;
    let mut lhs = 0.0;
    let mut probe = vec![0.0; d];
    for (y, ys) in pair.alg.iter().zip(&pair.opt) {
        probe.copy_from_slice(&lam);
        add(&mut probe, ys);
        lhs += approx.value(&probe) - psi_prev;
        add(&mut lam, y);
        add(&mut star, ys);
        psi_prev = approx.value(&lam);
    }
    (lhs, approx.value(&star), psi_prev - psi0)
}

/// `(Ψ(Λ^T) − Ψ(0), Σ_t ⟨∇Ψ(Λ^{t−1}), y_t⟩)`.
fn jensen_terms(approx: &dyn GsApproximator, incs: &[Vec<f64>]) -> (f64, f64) {
    let d = approx.dim();
    let mut lam = vec![0.0; d];
    let psi0 = approx.value(&lam);
    let mut lin = 0.0;
    for y in incs {
        lin += dot(&approx.gradient(&lam), y);
        add(&mut lam, y);
    }
    (approx.value(&lam) - psi0, lin)
}

fn generate(rng: &mut rand_chacha::ChaCha8Rng, norm: &Objective, horizon: usize, cap: f64) -> Vec<Vec<f64>> {
    (0..horizon)
        .map(|_| {
            let target = cap * (1.0 - rng.random::<f64>());
            sample_increment(rng, norm, target)
        })
        .collect()
}

struct GameAcc {
    report: CheckReport,
    lambda: f64,
    mu: f64,
    frontier: Vec<f64>,
}

impl GameAcc {
    fn push(&mut self, t: usize, pair: &SequencePair, (lhs, a, b): (f64, f64, f64), rel_tol: f64) {
        let tol = rel_tol * lhs.abs().max(1.0);
        let margin = self.lambda * a + self.mu * b - lhs;
        self.report.trials += 1;
        if margin + tol < 0.0 {
            self.report.violations += 1;
        }
        if self.report.observe(margin) {
            self.report.witness = Some(Witness {
                trial: t,
                sequence: Some(pair.alg.clone()),
                reference: Some(pair.opt.clone()),
                ..Witness::default()
            });
        }
        for (g, lam) in self.frontier.iter_mut().enumerate() {
            let mu = g as f64 / MU_GRID as f64;
            let need = if a > 0.0 {
                (lhs - mu * b - tol) / a
            } else if lhs - mu * b > tol {
                f64::INFINITY
            } else {
                0.0
            };
            *lam = lam.max(need);
        }
    }

    fn finish(mut self) -> CheckReport {
        let points: Vec<FrontierPoint> = self
            .frontier
            .iter()
            .enumerate()
            .map(|(g, l)| FrontierPoint {
                mu: g as f64 / MU_GRID as f64,
                lambda: *l,
            })
            .collect();
        let best = points
            .iter()
            .min_by(|p, q| (p.lambda / (1.0 - p.mu)).total_cmp(&(q.lambda / (1.0 - q.mu))))
            .copied()
            .expect("non-empty grid");
        let r = &mut self.report;
        r.extras.insert("lambda".into(), self.lambda);
        r.extras.insert("mu".into(), self.mu);
        r.extras.insert("lambda_min".into(), best.lambda);
        r.extras.insert("mu_min".into(), best.mu);
        r.extras.insert("ratio_min".into(), best.lambda / (1.0 - best.mu));
        r.extras.insert("lambda_at_mu0".into(), points[0].lambda);
        r.frontier = Some(points);
        self.report.finish()
    }
}

fn game_acc(params: &SmoothGameParams) -> Result<GameAcc> {
    if !(0.0..1.0).contains(&params.mu) {
        return Err(Error::InvalidInput(format!("μ must lie in [0, 1), got {}", params.mu)));
    }
    Ok(GameAcc {
        report: CheckReport::new("smoothgame", params.seed, params.rel_tol, 0.0),
        lambda: params.lambda,
        mu: params.mu,
        frontier: vec![0.0; MU_GRID],
    })
}

/// Checks `Σ_t Ψ(Λ^{t−1} + y*_t) − Ψ(Λ^{t−1}) ≤ λΨ(Λ*^T) + μ(Ψ(Λ^T) − Ψ(0))`
/// on random increasing pairs whose steps have norm at most `step_cap`.
///
/// Besides pass/fail for `(λ, μ)`, the report carries the measured frontier
/// `λ(μ)` on the grid `μ = 0, 0.05, …, 0.95` and, in its extras, the grid
/// point minimizing `λ/(1−μ)`.
pub fn check_smooth_game(
    approx: &dyn GsApproximator,
    norm: &Objective,
    params: &SmoothGameParams,
) -> Result<CheckReport> {
    let mut acc = game_acc(params)?;
    for t in 0..params.trials {
        let mut rng = seed::rng(params.seed, "smoothgame", t as u64);
        let pair = SequencePair {
            alg: generate(&mut rng, norm, params.horizon, params.step_cap),
            opt: generate(&mut rng, norm, params.horizon, params.step_cap),
        };
        let terms = game_terms(approx, &pair);
        acc.push(t, &pair, terms, params.rel_tol);
    }
    Ok(acc.finish())
}

/// [`check_smooth_game`] on caller-supplied sequences.
pub fn check_smooth_game_sequences(
    approx: &dyn GsApproximator,
    pairs: &[SequencePair],
    params: &SmoothGameParams,
) -> Result<CheckReport> {
    let d = approx.dim();
    let mut acc = game_acc(params)?;
    for (t, pair) in pairs.iter().enumerate() {
        if pair.alg.len() != pair.opt.len() {
            return Err(Error::InvalidInput(format!(
                "sequence pair {t} has horizons {} and {}",
                pair.alg.len(),
                pair.opt.len()
            )));
        }
        validate_increments(&pair.alg, d, None)?;
        validate_increments(&pair.opt, d, None)?;
        let terms = game_terms(approx, pair);
        acc.push(t, pair, terms, params.rel_tol);
    }
    Ok(acc.finish())
}

struct JensenAcc {
    report: CheckReport,
    cfg: JensenConfig,
    min_factor: f64,
    jensen_violations: usize,
    worst_jensen: f64,
}

impl JensenAcc {
    fn new(cfg: &JensenConfig) -> Self {
        Self {
            report: CheckReport::new("jensen", cfg.seed, cfg.rel_tol, 0.0),
            cfg: cfg.clone(),
            min_factor: 0.0,
            jensen_violations: 0,
            worst_jensen: f64::INFINITY,
        }
    }

    fn push(&mut self, t: usize, incs: &[Vec<f64>], (rise, lin): (f64, f64)) {
        let tol = self.cfg.rel_tol * rise.abs().max(lin.abs()).max(1.0);
        let margin = self.cfg.factor * lin + self.cfg.additive - rise;
        let jensen = rise - lin;
        self.report.trials += 1;
        let mut bad = false;
        if margin + tol < 0.0 {
            bad = true;
        }
        if jensen + tol < 0.0 {
            self.jensen_violations += 1;
            bad = true;
        }
        if bad {
            self.report.violations += 1;
        }
        self.worst_jensen = self.worst_jensen.min(jensen);
        if lin > 0.0 {
            self.min_factor = self.min_factor.max((rise - self.cfg.additive) / lin);
        } else if rise - self.cfg.additive > tol {
            self.min_factor = f64::INFINITY;
        }
        if self.report.observe(margin.min(jensen)) {
            self.report.witness = Some(Witness {
                trial: t,
                sequence: Some(incs.to_vec()),
                ..Witness::default()
            });
        }
    }

    fn finish(mut self) -> CheckReport {
        let r = &mut self.report;
        r.extras.insert("factor".into(), self.cfg.factor);
        r.extras.insert("min_factor".into(), self.min_factor);
        r.extras.insert("jensen_violations".into(), self.jensen_violations as f64);
        if self.worst_jensen.is_finite() {
            r.extras.insert("worst_jensen_margin".into(), self.worst_jensen);
        }
        self.report.finish()
    }
}

/// Checks `Ψ(Λ^T) − Ψ(0) ≤ factor·Σ_t ⟨∇Ψ(Λ^{t−1}), y_t⟩ + additive` on random
/// increasing sequences with `‖y_t‖ ≤ step_cap`, together with the convexity
/// direction `Σ_t ⟨∇Ψ(Λ^{t−1}), y_t⟩ ≤ Ψ(Λ^T) − Ψ(0)`. Extras report the
/// smallest factor that would have passed.
pub fn check_converse_jensen(
    approx: &dyn GsApproximator,
    norm: &Objective,
    cfg: &JensenConfig,
) -> CheckReport {
    let mut acc = JensenAcc::new(cfg);
    for t in 0..cfg.trials {
        let mut rng = seed::rng(cfg.seed, "jensen", t as u64);
        let incs = generate(&mut rng, norm, cfg.horizon, cfg.step_cap);
        let terms = jensen_terms(approx, &incs);
        acc.push(t, &incs, terms);
    }
    acc.finish()
}

/// [`check_converse_jensen`] on caller-supplied increment sequences, for
/// example the load increments of a recorded run.
pub fn check_converse_jensen_sequences(
    approx: &dyn GsApproximator,
    norm: &Objective,
    sequences: &[Vec<Vec<f64>>],
    cfg: &JensenConfig,
) -> Result<CheckReport> {
    let mut acc = JensenAcc::new(cfg);
    for (t, incs) in sequences.iter().enumerate() {
        validate_increments(incs, approx.dim(), Some((norm, cfg.step_cap)))?;
        let terms = jensen_terms(approx, incs);
        acc.push(t, incs, terms);
    }
    Ok(acc.finish())
}
