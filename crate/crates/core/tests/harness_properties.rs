use gradnorm::harness::{run_experiment, ExperimentConfig};
use gradnorm::lb::RunTrace;
use gradnorm::bandits::BanditTrace;

fn config(json: serde_json::Value) -> ExperimentConfig {
    serde_json::from_value(json).unwrap()
}

fn rows(table: &str) -> Vec<Vec<String>> {
    table.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn csv_ratios_match_trace_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(serde_json::json!({
        "problem": "lb",
        "generator": {"problem": "lb", "m": 3, "k": 2, "T": 9, "norm": "topk:2", "seed": 4},
        "approx": "gstopk:2",
        "seeds": 4,
        "trace_dir": dir.path(),
        "out": dir.path().join("lb.csv"),
    }));
    let out = run_experiment(&cfg).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("lb.csv")).unwrap();
    assert_eq!(csv, out.table);
    for row in rows(&csv) {
        let trace: RunTrace = serde_json::from_slice(
            &std::fs::read(dir.path().join(format!("lb-seed-{}.json", row[0]))).unwrap(),
        )
        .unwrap();
        let bench: f64 = row[2].parse().unwrap();
        let ratio: f64 = row[3].parse().unwrap();
        assert_eq!(row[1].parse::<f64>().unwrap(), trace.final_norm);
        assert!((trace.final_norm / bench - ratio).abs() <= 1e-9);
    }
}

#[test]
fn single_round_diagonal_ratio_is_one() {
    let cfg = config(serde_json::json!({
        "problem": "lb",
        "generator": {"family": "diagonal", "problem": "lb", "m": 4, "k": 4, "T": 1},
        "seeds": [1, 2, 3, 4, 5, 6],
    }));
    let out = run_experiment(&cfg).unwrap();
    for row in rows(&out.table) {
        assert_eq!(row[3], "1");
    }
    assert_eq!(out.summary.max_ratio, Some(1.0));
}

#[test]
fn bandit_csv_matches_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(serde_json::json!({
        "problem": "bwk",
        "generator": {"family": "stochastic-bandit", "problem": "bwk", "n": 2, "d": 2, "T": 4000, "seed": 2},
        "seeds": 3,
        "trace_dir": dir.path(),
    }));
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.summary.violations, 0);
    for row in rows(&out.table) {
        let trace: BanditTrace = serde_json::from_slice(
            &std::fs::read(dir.path().join(format!("bwk-seed-{}.json", row[0]))).unwrap(),
        )
        .unwrap();
        assert_eq!(row[1].parse::<f64>().unwrap(), trace.total_reward);
        let ratio: f64 = row[5].parse().unwrap();
        let bench: f64 = row[4].parse().unwrap();
        assert!((trace.total_reward / bench - ratio).abs() <= 1e-9);
    }
}
