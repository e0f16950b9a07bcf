//! Evaluate monotone norms, their subgradients and ones profiles.

use gradnorm::norm::{ones_profile, Generator, NormSpec};

fn main() -> gradnorm::Result<()> {
    let x = [3.0, 0.5, 2.0, 1.0];
    for text in ["linf", "l1", "lp:2", "topk:2", "ordered:1,0.5,0.25,0", "orlicz:pow:3"] {
        let norm = NormSpec::parse(text, x.len())?;
        println!(
            "{text:>22}  ‖x‖ = {:.6}  subgradient = {:?}",
            norm.eval(&x)?,
            norm.subgradient(&x)?
        );
    }

    // A user-supplied Orlicz generator: the hinge f(z) = max(0, z − 1/2).
    let hinge = Generator::custom("hinge", |z| (z - 0.5).max(0.0));
    let orlicz = NormSpec::orlicz(hinge, x.len())?;
    println!("hinge Orlicz ‖x‖ = {:.6}", orlicz.eval(&x)?);

    let profile = ones_profile(&NormSpec::parse("ordered:1,0.5,0.25,0", 4)?)?;
    println!("ones profile c_k = {:?}", profile.values());

    match NormSpec::parse("topk:", 4) {
        Err(e) => println!("parse error: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
