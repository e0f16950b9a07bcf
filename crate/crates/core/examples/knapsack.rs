//! Bandits with knapsacks: two arms plus a null action under an ℓ∞ budget.

use gradnorm::approx::{ApproxSpec, BuildOptions};
use gradnorm::bandits::{benchmark_fixed_bwk, bwk_run, BanditInstance, BanditRound, BwkOptions};
use gradnorm::lb::JobMatrix;
use gradnorm::norm::Objective;

fn main() -> gradnorm::Result<()> {
    let (t, d) = (20_000, 2);
    // Arm 0: reward 1, cost 1 everywhere. Arm 1: reward 0.1, free. Arm 2: null.
    let rounds = (0..t)
        .map(|_| BanditRound {
            r: Some(vec![1.0, 0.1, 0.0]),
            costs: JobMatrix::new(vec![vec![1.0, 0.0, 0.0]; d]).unwrap(),
        })
        .collect();
    let inst = BanditInstance::new("linf", d, rounds, Some(t as f64 / 4.0), Some(2))?;
    let bench = benchmark_fixed_bwk(&inst)?;
    println!("OPT_BwK = {:.1} at x* = {:.3?}", bench.value, bench.x);

    let objective = Objective::Norm(inst.norm.clone());
    let probe = ApproxSpec::Softmax.build(&objective, &BuildOptions::default())?;
    let m = probe.meta();
    let eps = (m.alpha + m.gamma) / bench.value;
    let psi = ApproxSpec::Softmax.build(&objective, &BuildOptions::new(eps, 1, 0))?;
    for seed in 0..3 {
        let tr = bwk_run(&inst, psi.as_ref(), bench.value, seed, BwkOptions::default())?;
        println!(
            "seed {seed}: reward = {:.1} ({:.3} of OPT)  cost = {} ≤ B = {}  stopped at {:?}",
            tr.total_reward,
            tr.total_reward / bench.value,
            tr.final_norm,
            inst.budget.unwrap(),
            tr.stopped_at
        );
    }
    Ok(())
}
