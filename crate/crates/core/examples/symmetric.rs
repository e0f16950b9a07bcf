//! Approximate an arbitrary symmetric norm through its ones profile.

use gradnorm::approx::{symmetric_gs_build, GsApproximator};
use gradnorm::norm::{ones_profile, NormSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> gradnorm::Result<()> {
    let d = 32;
    let weights: Vec<f64> = (0..d).map(|i| 1.0 / (1.0 + i as f64).sqrt()).collect();
    let norm = NormSpec::ordered(weights, d)?.normalized()?;
    let profile = ones_profile(&norm)?;
    let eps = 0.2;
    let psi = symmetric_gs_build(&profile, eps, 256, 11)?;
    let m = psi.meta();
    println!("leaves = {}, α = {:.2}, γ = {:.2}", (d as f64).log2() as usize + 1, m.alpha, m.gamma);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 20.0).collect();
        let (n, v) = (norm.eval(&x)?, psi.value(&x));
        println!(
            "‖x‖ = {n:8.3}   Ψ(x) = {v:8.3}   α‖x‖ + γ/ε = {:9.3}",
            m.alpha * n + m.gamma / eps
        );
    }
    Ok(())
}
