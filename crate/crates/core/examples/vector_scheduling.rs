//! Online vector scheduling with one inner norm per resource.

use gradnorm::approx::ApproxSpec;
use gradnorm::harness::{generate, GeneratorSpec, Problem};
use gradnorm::lb::{brute_force_opt, run_vector_scheduling, LbRunConfig, OptMode, DEFAULT_BRUTE_CAP};

fn main() -> gradnorm::Result<()> {
    let spec = GeneratorSpec {
        problem: Problem::Vs,
        m: 3,
        k: 2,
        t: 8,
        inner: Some(vec!["linf".into(), "lp:2".into()]),
        seed: 5,
        ..GeneratorSpec::default()
    };
    let inst = generate(&spec)?.into_lb()?;
    let cfg = LbRunConfig::new(ApproxSpec::Nested(2), OptMode::AutoDouble(1.0), 1000, 9);
    let trace = run_vector_scheduling(&inst, &cfg)?;
    let (opt, _) = brute_force_opt(&inst, DEFAULT_BRUTE_CAP)?;
    println!("machines = 3, resources = 2, jobs = {}", inst.horizon());
    println!("final load (resource-major) = {:.3?}", trace.final_load);
    println!("max_i ‖Λ_i‖_i = {:.4}  opt = {opt:.4}  ratio = {:.4}", trace.final_norm, trace.final_norm / opt);
    Ok(())
}
