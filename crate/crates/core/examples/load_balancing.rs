//! Greedy online load balancing against the exhaustive optimum.

use gradnorm::approx::ApproxSpec;
use gradnorm::harness::{generate, GeneratorSpec};
use gradnorm::lb::{brute_force_opt, run_greedy, LbRunConfig, OptMode, DEFAULT_BRUTE_CAP};

fn main() -> gradnorm::Result<()> {
    for norm in ["linf", "lp:2", "topk:2"] {
        let spec = GeneratorSpec {
            m: 4,
            k: 2,
            t: 10,
            norm: norm.into(),
            seed: 42,
            ..GeneratorSpec::default()
        };
        let inst = generate(&spec)?.into_lb()?;
        let approx = match norm {
            "linf" => ApproxSpec::Softmax,
            "lp:2" => ApproxSpec::ShiftedLp(2.0),
            _ => ApproxSpec::GsTopK(2),
        };
        let cfg = LbRunConfig::new(approx, OptMode::AutoDouble(1.0), 2000, 1);
        let trace = run_greedy(&inst, &cfg)?;
        let (opt, best) = brute_force_opt(&inst, DEFAULT_BRUTE_CAP)?;
        println!(
            "{norm:>7} via {approx:<9} greedy = {:.4}  opt = {opt:.4}  ratio = {:.4}  phases = {}",
            trace.final_norm,
            trace.final_norm / opt,
            trace.phases.len()
        );
        println!("        greedy choices {:?}\n        optimal choices {best:?}", trace.choices());
    }
    Ok(())
}
