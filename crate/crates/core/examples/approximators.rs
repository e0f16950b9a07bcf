//! Softmax, shifted ℓp and randomized top-k approximators side by side.

use gradnorm::approx::{GsApproximator, GsTopK, ShiftedLp, Softmax, TopKGsConfig};
use gradnorm::norm::NormSpec;

fn show(name: &str, psi: &dyn GsApproximator, norm: &NormSpec, x: &[f64]) {
    let m = psi.meta();
    let v = psi.value_estimate(x);
    println!(
        "{name:>10}: ‖x‖ = {:8.4}  Ψ(x) = {:8.4} ± {:.1e}  α = {:.3} γ = {:.3} δ = {}",
        norm.eval(x).unwrap(),
        v.mean,
        v.se,
        m.alpha,
        m.gamma,
        m.delta
    );
    println!("{:>12}∇Ψ(x) = {:.3?}", "", psi.gradient(x));
}

fn main() -> gradnorm::Result<()> {
    let d = 6;
    let eps = 0.5;
    let x = [4.0, 1.0, 3.5, 0.0, 2.0, 3.9];

    show("softmax", &Softmax::new(d, eps)?, &NormSpec::linf(d), &x);
    show("slp:2", &ShiftedLp::new(d, 2.0, eps, d)?, &NormSpec::lp(2.0, d)?, &x);
    let topk = GsTopK::new(TopKGsConfig::new(d, 2, eps).samples(20_000).seed(7))?;
    show("gstopk:2", &topk, &NormSpec::top_k(2, d)?, &x);

    // Gradient stability: growing x by y shrinks no coordinate of ∇Ψ by
    // more than exp(−ε‖y‖ − δ).
    let sm = Softmax::new(d, eps)?;
    let y = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
    let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
    let (g0, g1) = (sm.gradient(&x), sm.gradient(&xy));
    let worst = g0
        .iter()
        .zip(&g1)
        .map(|(a, b)| b / a)
        .fold(f64::INFINITY, f64::min);
    println!("softmax min ratio ∇Ψ(x+y)/∇Ψ(x) = {worst:.4} ≥ e^(-ε) = {:.4}", (-eps).exp());
    Ok(())
}
