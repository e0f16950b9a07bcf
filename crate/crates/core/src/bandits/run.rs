use serde::{Deserialize, Serialize};

use super::{BanditInstance, Exp3State};
use crate::approx::GsApproximator;
use crate::error::{Error, Result};
use crate::verify::dot;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditTrace {
    pub actions: Vec<usize>,
    /// Loss handed to EXP3 each round (`None` once stopped).
    pub losses: Vec<Option<f64>>,
    pub total_reward: f64,
    pub final_load: Vec<f64>,
    pub final_norm: f64,
    /// First round (0-based) played after the budget rule fired.
    pub stopped_at: Option<usize>,
    /// Rounds whose raw loss fell outside `[0, 1]` and was clamped.
    pub clamped: usize,
    /// `Σ_t ⟨∇Ψ(Λ^{(t−1)}), y^{(t)}⟩` over the played columns.
    pub linearized_cost: f64,
    pub psi_zero: f64,
    pub final_psi: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BwkOptions {
    /// Proceed when `B < 4(α+γ)‖1‖` instead of failing.
    pub allow_small_budget: bool,
}

/// `e^{ε‖1‖+δ}·(Ψ(Λ+1) − Ψ(Λ))`, an upper bound on `⟨∇Ψ(Λ), c⟩` for any
/// `c ∈ [0,1]^d` by gradient stability.
fn normalizer(psi: &dyn GsApproximator, load: &[f64], ones_norm: f64) -> f64 {
    let meta = psi.meta();
    let bumped: Vec<f64> = load.iter().map(|v| v + 1.0).collect();
    (meta.epsilon * ones_norm + meta.delta).exp() * (psi.value(&bumped) - psi.value(load))
}

fn add_column(inst: &BanditInstance, t: usize, a: usize, load: &mut [f64]) -> Vec<f64> {
    let c = inst.rounds[t].costs.column(a);
    for (l, v) in load.iter_mut().zip(&c) {
        *l += v;
    }
    c
}

fn check_psi(inst: &BanditInstance, psi: &dyn GsApproximator) -> Result<()> {
    if psi.dim() != inst.dim() {
        return Err(Error::DimensionMismatch {
            expected: inst.dim(),
            got: psi.dim(),
        });
    }
    Ok(())
}

/// Bandits with vector costs: EXP3 on the linearized loss
/// `⟨∇Ψ(Λ^{(t−1)}), C^{(t)}e_a⟩ / L_t`.
pub fn bvc_run(inst: &BanditInstance, psi: &dyn GsApproximator, seed: u64) -> Result<BanditTrace> {
    if inst.has_rewards() || inst.budget.is_some() {
        return Err(Error::InvalidInput(
            "instance has rewards or a budget; use the knapsack variant".into(),
        ));
    }
    check_psi(inst, psi)?;
    let (d, horizon) = (inst.dim(), inst.horizon());
    let ones = inst.norm.ones_norm();
    let mut exp3 = Exp3State::new(inst.actions(), horizon, seed)?;
    let mut load = vec![0.0; d];
    let psi_zero = psi.value(&load);
    let mut trace = BanditTrace {
        actions: Vec::with_capacity(horizon),
        losses: Vec::with_capacity(horizon),
        total_reward: 0.0,
        final_load: Vec::new(),
        final_norm: 0.0,
        stopped_at: None,
        clamped: 0,
        linearized_cost: 0.0,
        psi_zero,
        final_psi: 0.0,
    };
    for t in 0..horizon {
        let (a, p) = exp3.sample();
        let scale = normalizer(psi, &load, ones);
        let grad = psi.gradient(&load);
        let c = add_column(inst, t, a, &mut load);
        let lin = dot(&grad, &c);
        trace.linearized_cost += lin;
        let raw = if scale > 0.0 { lin / scale } else { 0.0 };
        let loss = raw.clamp(0.0, 1.0);
        if loss != raw {
            trace.clamped += 1;
        }
        exp3.update(a, p, loss).map_err(|e| e.context(format!("round {}", t + 1)))?;
        trace.actions.push(a);
        trace.losses.push(Some(loss));
    }
    trace.final_norm = inst.norm.eval_unchecked(&load);
    trace.final_psi = psi.value(&load);
    trace.final_load = load;
    Ok(trace)
}

/// Bandits with knapsacks with known `OPT_BwK`.
///
/// EXP3 runs on the Lagrangian gain `r_a − (OPT/B)·⟨∇Ψ(Λ), C e_a⟩ / L_t`,
/// mapped to the loss `(1 − clamp(g, −1, 1))/2`. Before each round the run
/// stops for good if `‖Λ‖ + ‖1‖ > B`, after which only the null action is
/// played; the final cost therefore never exceeds `B`.
pub fn bwk_run(
    inst: &BanditInstance,
    psi: &dyn GsApproximator,
    opt_bwk: f64,
    seed: u64,
    opts: BwkOptions,
) -> Result<BanditTrace> {
    let budget = inst
        .budget
        .ok_or_else(|| Error::InvalidInput("knapsack instance needs a budget B".into()))?;
    let null = inst
        .null_action
        .ok_or_else(|| Error::InvalidInput("knapsack instance needs a null action".into()))?;
    if !inst.has_rewards() {
        return Err(Error::InvalidInput("knapsack instance needs rewards".into()));
    }
    if !(budget > 0.0) {
        return Err(Error::InvalidInput(format!("budget must be > 0, got {budget}")));
    }
    if !(opt_bwk > 0.0 && opt_bwk.is_finite()) {
        return Err(Error::InvalidInput(format!("OPT must be > 0, got {opt_bwk}")));
    }
    check_psi(inst, psi)?;
    let meta = psi.meta();
    let ones = inst.norm.ones_norm();
    let required = 4.0 * (meta.alpha + meta.gamma) * ones;
    if budget < required && !opts.allow_small_budget {
        return Err(Error::Contract(format!(
            "budget {budget} below 4(α+γ)‖1‖ = {required}"
        )));
    }
    let (d, horizon) = (inst.dim(), inst.horizon());
    let z = opt_bwk / budget;
    let mut exp3 = Exp3State::new(inst.actions(), horizon, seed)?;
    let mut load = vec![0.0; d];
    let psi_zero = psi.value(&load);
    let mut trace = BanditTrace {
        actions: Vec::with_capacity(horizon),
        losses: Vec::with_capacity(horizon),
        total_reward: 0.0,
        final_load: Vec::new(),
        final_norm: 0.0,
        stopped_at: None,
        clamped: 0,
        linearized_cost: 0.0,
        psi_zero,
        final_psi: 0.0,
    };
    for t in 0..horizon {
        if trace.stopped_at.is_none() && inst.norm.eval_unchecked(&load) + ones > budget {
            trace.stopped_at = Some(t);
        }
        if trace.stopped_at.is_some() {
            trace.actions.push(null);
            trace.losses.push(None);
            continue;
        }
        let (a, p) = exp3.sample();
        let scale = normalizer(psi, &load, ones);
        let grad = psi.gradient(&load);
        let c = add_column(inst, t, a, &mut load);
        let lin = dot(&grad, &c);
        trace.linearized_cost += lin;
        let reward = inst.rounds[t].r.as_ref().expect("rewards checked")[a];
        trace.total_reward += reward;
        let cost = if scale > 0.0 { lin / scale } else { 0.0 };
        if cost > 1.0 {
            trace.clamped += 1;
        }
        let gain = reward - z * cost.min(1.0);
        let loss = (1.0 - gain.clamp(-1.0, 1.0)) / 2.0;
        exp3.update(a, p, loss).map_err(|e| e.context(format!("round {}", t + 1)))?;
        trace.actions.push(a);
        trace.losses.push(Some(loss));
    }
    trace.final_norm = inst.norm.eval_unchecked(&load);
    trace.final_psi = psi.value(&load);
    trace.final_load = load;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::Softmax;
    use crate::bandits::BanditRound;
    use crate::lb::JobMatrix;

    fn rounds(t: usize, r: Option<Vec<f64>>, c: Vec<Vec<f64>>) -> Vec<BanditRound> {
        (0..t)
            .map(|_| BanditRound {
                r: r.clone(),
                costs: JobMatrix::new(c.clone()).unwrap(),
            })
            .collect()
    }

    #[test]
    fn single_action_accumulates_exactly() {
        let inst = BanditInstance::new("linf", 2, rounds(50, None, vec![vec![0.5], vec![0.25]]), None, None).unwrap();
        let sm = Softmax::new(2, 0.1).unwrap();
        let tr = bvc_run(&inst, &sm, 1).unwrap();
        assert!(tr.actions.iter().all(|a| *a == 0));
        assert_eq!(tr.final_load, vec![25.0, 12.5]);
    }

    #[test]
    fn zero_costs_keep_zero_load() {
        let inst = BanditInstance::new("linf", 2, rounds(100, None, vec![vec![0.0; 3]; 2]), None, None).unwrap();
        let sm = Softmax::new(2, 1.0).unwrap();
        let tr = bvc_run(&inst, &sm, 2).unwrap();
        assert_eq!(tr.final_norm, 0.0);
        assert!(tr.losses.iter().all(|l| *l == Some(0.0)));
    }

    #[test]
    fn knapsack_budget_is_hard() {
        let r = Some(vec![1.0, 0.1, 0.0]);
        let c = vec![vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]];
        let inst = BanditInstance::new("linf", 2, rounds(400, r, c), Some(100.0), Some(2)).unwrap();
        let sm = Softmax::new(2, 0.05).unwrap();
        let tr = bwk_run(&inst, &sm, 100.0, 5, BwkOptions::default()).unwrap();
        assert!(tr.final_norm <= 100.0);
        if let Some(s) = tr.stopped_at {
            assert!(tr.actions[s..].iter().all(|a| *a == 2));
        }
        assert!(tr.losses.iter().flatten().all(|l| (0.0..=1.0).contains(l)));
    }

    #[test]
    fn wrong_problem_is_rejected() {
        let r = Some(vec![1.0, 0.0]);
        let inst = BanditInstance::new("linf", 1, rounds(5, r, vec![vec![1.0, 0.0]]), Some(3.0), Some(1)).unwrap();
        let sm = Softmax::new(1, 1.0).unwrap();
        assert!(bvc_run(&inst, &sm, 0).is_err());
        assert!(matches!(
            bwk_run(&inst, &sm, 1.0, 0, BwkOptions::default()),
            Err(Error::Contract(_))
        ));
        assert!(bwk_run(&inst, &sm, 1.0, 0, BwkOptions { allow_small_budget: true }).is_ok());
    }
}
