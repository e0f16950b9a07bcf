//! Best fixed fractional selections `x ∈ Δ_n` in hindsight.

use serde::{Deserialize, Serialize};

use super::BanditInstance;
use crate::error::{Error, Result};
use crate::norm::NormSpec;

/// Grid resolution for small action sets.
pub const GRID_RESOLUTION: usize = 200;
/// Largest `n` solved by grid search.
pub const GRID_MAX_ACTIONS: usize = 4;
pub const SUBGRADIENT_ITERS: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Benchmark {
    pub x: Vec<f64>,
    pub value: f64,
    /// Grid optimum, when the grid ran.
    pub grid: Option<f64>,
    /// Optimum of the iterative solver (subgradient or penalty bisection).
    pub iterative: f64,
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut tau = 0.0;
    for (i, ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|x| (x - tau).max(0.0)).collect()
}

fn mat_vec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

fn mat_t_vec(m: &[Vec<f64>], y: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (row, yi) in m.iter().zip(y) {
        for (o, a) in out.iter_mut().zip(row) {
            *o += a * yi;
        }
    }
    out
}

/// Calls `f` on every point of `{x ∈ Δ_n : x·res ∈ ℕ^n}` in lexicographic order.
fn for_each_grid_point(n: usize, res: usize, f: &mut impl FnMut(&[f64])) {
    fn rec(i: usize, left: usize, res: usize, cur: &mut Vec<f64>, f: &mut impl FnMut(&[f64])) {
        let n = cur.len();
        if i == n - 1 {
            cur[i] = left as f64 / res as f64;
            f(cur);
            return;
        }
        for c in (0..=left).rev() {
            cur[i] = c as f64 / res as f64;
            rec(i + 1, left - c, res, cur, f);
        }
    }
    let mut cur = vec![0.0; n];
    rec(0, res, res, &mut cur, f);
}

fn vertex(n: usize, a: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    x[a] = 1.0;
    x
}

struct Problem<'a> {
    norm: &'a NormSpec,
    m: Vec<Vec<f64>>,
    n: usize,
}

impl Problem<'_> {
    fn cost(&self, x: &[f64]) -> f64 {
        self.norm.eval_unchecked(&mat_vec(&self.m, x))
    }

    fn cost_subgradient(&self, x: &[f64]) -> Vec<f64> {
        let y = mat_vec(&self.m, x);
        let g = self.norm.subgradient(&y).expect("dimension fixed");
        mat_t_vec(&self.m, &g, self.n)
    }

    /// Projected subgradient ascent on `r·x − ζ‖Mx‖`; returns the best
    /// iterate (vertices included as candidates).
    fn ascend(&self, reward: &[f64], zeta: f64, iters: usize) -> Vec<f64> {
        let obj = |x: &[f64]| dot(reward, x) - zeta * self.cost(x);
        let mut best = vertex(self.n, 0);
        let mut best_v = obj(&best);
        for a in 1..self.n {
            let v = vertex(self.n, a);
            let o = obj(&v);
            if o > best_v {
                best_v = o;
                best = v;
            }
        }
        let mut x = vec![1.0 / self.n as f64; self.n];
        for it in 1..=iters {
            let o = obj(&x);
            if o > best_v {
                best_v = o;
                best = x.clone();
            }
            let gc = self.cost_subgradient(&x);
            let g: Vec<f64> = reward.iter().zip(&gc).map(|(r, c)| r - zeta * c).collect();
            let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if gn == 0.0 {
                break;
            }
            let step = 0.5 / (it as f64).sqrt() / gn;
            let moved: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + step * b).collect();
            x = project_simplex(&moved);
        }
        if obj(&x) > best_v {
            best = x;
        }
        best
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `‖Σ_t C^{(t)} x‖` over `Δ_n`: grid search at resolution
/// `1/200` when `n ≤ 4`, projected subgradient descent always; the better
/// of the two is returned with its exact value.
pub fn benchmark_fixed_bvc(inst: &BanditInstance) -> Benchmark {
    let n = inst.actions();
    let p = Problem {
        norm: &inst.norm,
        m: inst.total_cost(),
        n,
    };
    let zero = vec![0.0; n];
    let sub = p.ascend(&zero, 1.0, SUBGRADIENT_ITERS);
    let sub_v = p.cost(&sub);
    let mut out = Benchmark {
        x: sub,
        value: sub_v,
        grid: None,
        iterative: sub_v,
    };
    if n <= GRID_MAX_ACTIONS {
        let mut best = (f64::INFINITY, Vec::new());
        for_each_grid_point(n, GRID_RESOLUTION, &mut |x| {
            let v = p.cost(x);
            if v < best.0 {
                best = (v, x.to_vec());
            }
        });
        out.grid = Some(best.0);
        if best.0 <= out.value {
            out.value = best.0;
            out.x = best.1;
        }
    }
    out
}

/// Maximizes `Σ_t ⟨r^{(t)}, x⟩` subject to `‖Σ_t C^{(t)} x‖ ≤ B` over `Δ_n`.
///
/// The iterative solver bisects a penalty `ζ` on the cost, mixes the two
/// bracketing solutions as far as the budget allows, and scales every
/// candidate into the budget by moving mass to the null action. Every
/// reported point is feasible, so the value is a certified lower bound.
/// For `n ≤ 4` a feasible grid search cross-checks it.
pub fn benchmark_fixed_bwk(inst: &BanditInstance) -> Result<Benchmark> {
    let budget = inst
        .budget
        .ok_or_else(|| Error::InvalidInput("knapsack benchmark needs a budget".into()))?;
    let null = inst
        .null_action
        .ok_or_else(|| Error::InvalidInput("knapsack benchmark needs a null action".into()))?;
    if budget < 0.0 {
        return Err(Error::InvalidInput(format!("budget must be ≥ 0, got {budget}")));
    }
    let n = inst.actions();
    let reward = inst.total_reward();
    let p = Problem {
        norm: &inst.norm,
        m: inst.total_cost(),
        n,
    };
    let mut best = (0.0, vertex(n, null));
    let consider = |x: &[f64], best: &mut (f64, Vec<f64>)| {
        let c = p.cost(x);
        let theta = if c > budget { budget / c } else { 1.0 };
        let mut y: Vec<f64> = x.iter().map(|v| theta * v).collect();
        y[null] += 1.0 - theta;
        let v = dot(&reward, &y);
        if v > best.0 && p.cost(&y) <= budget {
            *best = (v, y);
        }
    };

    let solve = |zeta: f64| p.ascend(&reward, zeta, SUBGRADIENT_ITERS);
    let feasible = |x: &[f64]| p.cost(x) <= budget;
    let mut lo = (0.0, solve(0.0));
    consider(&lo.1, &mut best);
    if !feasible(&lo.1) {
        let mut hi = (1.0 / budget.max(1e-12), Vec::new());
        hi.1 = solve(hi.0);
        let mut doublings = 0;
        while !feasible(&hi.1) && doublings < 60 {
            consider(&hi.1, &mut best);
            lo = hi.clone();
            hi.0 *= 2.0;
            hi.1 = solve(hi.0);
            doublings += 1;
        }
        consider(&hi.1, &mut best);
        for _ in 0..40 {
            let mid = 0.5 * (lo.0 + hi.0);
            let x = solve(mid);
            consider(&x, &mut best);
            if feasible(&x) {
                hi = (mid, x);
            } else {
                lo = (mid, x);
            }
        }
        // Largest feasible mixture of the bracketing solutions.
        let mix = |beta: f64| -> Vec<f64> {
            lo.1.iter().zip(&hi.1).map(|(a, b)| beta * a + (1.0 - beta) * b).collect()
        };
        if feasible(&hi.1) {
            let (mut b_lo, mut b_hi) = (0.0, 1.0);
            for _ in 0..60 {
                let b = 0.5 * (b_lo + b_hi);
                if feasible(&mix(b)) {
                    b_lo = b;
                } else {
                    b_hi = b;
                }
            }
            consider(&mix(b_lo), &mut best);
        }
    }
    let iterative = best.0;
    let mut out = Benchmark {
        x: best.1.clone(),
        value: best.0,
        grid: None,
        iterative,
    };
    if n <= GRID_MAX_ACTIONS {
        let mut g = (0.0, vertex(n, null));
        for_each_grid_point(n, GRID_RESOLUTION, &mut |x| {
            let v = dot(&reward, x);
            if v > g.0 && p.cost(x) <= budget {
                g = (v, x.to_vec());
            }
        });
        out.grid = Some(g.0);
        if g.0 > out.value {
            out.value = g.0;
            out.x = g.1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandits::BanditRound;
    use crate::lb::JobMatrix;

    #[test]
    fn projection_lands_on_simplex() {
        let p = project_simplex(&[0.5, 2.0, -1.0]);
        assert_eq!(p, vec![0.0, 1.0, 0.0]);
        let q = project_simplex(&[0.3, 0.3, 0.4]);
        assert!(q.iter().zip([0.3, 0.3, 0.4]).all(|(a, b)| (a - b).abs() < 1e-15));
        let r = project_simplex(&[1.0, 1.0]);
        assert_eq!(r, vec![0.5, 0.5]);
    }

    #[test]
    fn grid_enumerates_every_point_once() {
        let mut count = 0;
        for_each_grid_point(3, 4, &mut |x| {
            assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            count += 1;
        });
        assert_eq!(count, 15);
    }

    fn swap_instance(t: usize) -> BanditInstance {
        let rounds = (0..t)
            .map(|_| BanditRound {
                r: None,
                costs: JobMatrix::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(),
            })
            .collect();
        BanditInstance::new("linf", 2, rounds, None, None).unwrap()
    }

    #[test]
    fn symmetric_costs_favour_the_midpoint() {
        let b = benchmark_fixed_bvc(&swap_instance(10));
        assert!((b.value - 5.0).abs() < 1e-9);
        assert!((b.x[0] - 0.5).abs() < 1e-9);
        assert!(b.value <= 10.0);
    }

    #[test]
    fn single_arm_scales_linearly() {
        let t = 20;
        let rounds = (0..t)
            .map(|_| BanditRound {
                r: Some(vec![0.5, 0.0]),
                costs: JobMatrix::new(vec![vec![1.0, 0.0]]).unwrap(),
            })
            .collect();
        let inst = BanditInstance::new("l1", 1, rounds, Some(t as f64 / 2.0), Some(1)).unwrap();
        let b = benchmark_fixed_bwk(&inst).unwrap();
        assert!((b.value - 0.5 * t as f64 / 2.0).abs() < 1e-9);
        assert!((b.iterative - b.value).abs() < 1e-9);
        assert!((b.x[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn zero_budget_keeps_only_free_actions() {
        let rounds = (0..5)
            .map(|_| BanditRound {
                r: Some(vec![1.0, 0.25, 0.0]),
                costs: JobMatrix::new(vec![vec![1.0, 0.0, 0.0]]).unwrap(),
            })
            .collect();
        let inst = BanditInstance::new("l1", 1, rounds, Some(0.0), Some(2)).unwrap();
        let b = benchmark_fixed_bwk(&inst).unwrap();
        assert!((b.value - 1.25).abs() < 1e-9);
    }
}
