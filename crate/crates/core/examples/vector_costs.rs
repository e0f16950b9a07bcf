//! Bandits with vector costs on the coordinate-swapping instance.

use gradnorm::approx::{ApproxSpec, BuildOptions};
use gradnorm::bandits::{benchmark_fixed_bvc, bvc_run, BanditInstance, BanditRound};
use gradnorm::lb::JobMatrix;
use gradnorm::norm::Objective;

fn main() -> gradnorm::Result<()> {
    let t = 20_000;
    let rounds = (0..t)
        .map(|_| BanditRound {
            r: None,
            costs: JobMatrix::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(),
        })
        .collect();
    let inst = BanditInstance::new("linf", 2, rounds, None, None)?;
    let bench = benchmark_fixed_bvc(&inst);
    println!("best fixed x* = {:.3?} with cost {:.1}", bench.x, bench.value);

    let objective = Objective::Norm(inst.norm.clone());
    let psi = ApproxSpec::Softmax.build(&objective, &BuildOptions::new(1.0 / bench.value, 1, 0))?;
    for seed in 0..3 {
        let tr = bvc_run(&inst, psi.as_ref(), seed)?;
        println!(
            "seed {seed}: final load = {:?}  ‖Λ‖∞ = {}  ratio = {:.4}",
            tr.final_load,
            tr.final_norm,
            tr.final_norm / bench.value
        );
    }
    Ok(())
}
