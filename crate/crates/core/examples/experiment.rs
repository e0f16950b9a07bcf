//! Drive a seeded experiment from a JSON config and print the CSV.

use gradnorm::harness::{run_experiment, ExperimentConfig};

fn main() -> gradnorm::Result<()> {
    let cfg: ExperimentConfig = serde_json::from_str(
        r#"{
            "problem": "bwk",
            "generator": {
                "family": "stochastic-bandit",
                "problem": "bwk",
                "n": 2, "d": 1, "T": 5000,
                "means": [0.6, 0.4],
                "cost_means": [[0.8], [0.1]],
                "budget": 1000
            },
            "approx": "softmax",
            "seeds": 5
        }"#,
    )?;
    let out = run_experiment(&cfg)?;
    print!("{}", out.table);
    println!("{}", serde_json::to_string_pretty(&out.summary)?);
    Ok(())
}
