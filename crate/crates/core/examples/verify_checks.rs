//! Run the property checkers and print their reports.

use gradnorm::approx::{ApproxSpec, BuildOptions};
use gradnorm::norm::{NormSpec, Objective};
use gradnorm::verify::{
    check_converse_jensen, check_gradient_stability, check_sandwich, check_smooth_game,
    JensenConfig, SandwichConfig, SmoothGameParams, StabilityConfig,
};

fn main() -> gradnorm::Result<()> {
    let d = 16;
    let norm = Objective::Norm(NormSpec::linf(d));
    let psi = ApproxSpec::Softmax.build(&norm, &BuildOptions::new(1.0, 1, 0))?;
    let meta = psi.meta();

    let stab = check_gradient_stability(psi.as_ref(), &norm, &StabilityConfig::new(meta.delta));
    println!("stability: pass = {} worst margin = {:.3e}", stab.pass, stab.worst_margin);

    let sand = check_sandwich(psi.as_ref(), &norm, meta.alpha, meta.gamma, &SandwichConfig::default());
    println!("sandwich:  pass = {} max excess·ε = {:.4}", sand.pass, sand.extra("max_excess").unwrap());

    let mut game = SmoothGameParams::new(2.0, 0.5);
    game.trials = 200;
    let r = check_smooth_game(psi.as_ref(), &norm, &game)?;
    println!(
        "smooth game (λ=2, μ=½): pass = {}  frontier λ(0) = {:.3}",
        r.pass,
        r.extra("lambda_at_mu0").unwrap()
    );

    let mut jensen = JensenConfig::new(std::f64::consts::E, 1.0);
    jensen.trials = 200;
    let j = check_converse_jensen(psi.as_ref(), &norm, &jensen);
    println!("converse Jensen: pass = {} min factor = {:.3}", j.pass, j.extra("min_factor").unwrap());

    // The exact ℓ∞ norm is not gradient stable: a spike flips the argmax.
    let exact = ApproxSpec::Exact.build(&norm, &BuildOptions::new(1.0, 1, 0))?;
    let bad = check_gradient_stability(exact.as_ref(), &norm, &StabilityConfig::new(0.0));
    println!("exact ℓ∞ stability: pass = {} violations = {}", bad.pass, bad.violations);
    if let Some(w) = bad.witness {
        println!("  witness x = {:.3?}", w.x.unwrap_or_default());
    }
    Ok(())
}
