use gradnorm::approx::{ApproxSpec, Softmax};
use gradnorm::harness::{generate, Family, GeneratorSpec, Problem};
use gradnorm::lb::{
    brute_force_opt, greedy_step, run_greedy, run_vector_scheduling, JobMatrix, LbInstance,
    LbRunConfig, OptMode, DEFAULT_BRUTE_CAP,
};
use proptest::prelude::*;

fn spec(m: usize, k: usize, t: usize, norm: &str, seed: u64) -> GeneratorSpec {
    GeneratorSpec {
        m,
        k,
        t,
        norm: norm.into(),
        seed,
        ..GeneratorSpec::default()
    }
}

fn lb(s: &GeneratorSpec) -> LbInstance {
    generate(s).unwrap().into_lb().unwrap()
}

const APPROXES: [ApproxSpec; 3] = [ApproxSpec::Softmax, ApproxSpec::ShiftedLp(2.0), ApproxSpec::GsTopK(2)];
const NORMS: [&str; 3] = ["linf", "lp:2", "topk:2"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn traces_are_consistent(seed in 0u64..1000, which in 0usize..3, auto in any::<bool>()) {
        let inst = lb(&spec(3, 3, 15, NORMS[which], seed));
        let opt = if auto { OptMode::AutoDouble(0.25) } else { OptMode::Given(2.0) };
        let tr = run_greedy(&inst, &LbRunConfig::new(APPROXES[which], opt, 300, seed)).unwrap();
        let mut load = vec![0.0; 3];
        for (t, r) in tr.rounds.iter().enumerate() {
            inst.jobs[t].add_column_to(r.choice, &mut load);
            prop_assert_eq!(&r.load, &load);
            // Greedy picks a minimizer of the candidate values.
            let best = r.candidates.iter().copied().fold(f64::INFINITY, f64::min);
            prop_assert_eq!(r.candidates[r.choice], best);
            prop_assert_eq!(r.psi, r.candidates[r.choice]);
        }
        prop_assert_eq!(&tr.final_load, &load);
        prop_assert_eq!(tr.final_norm, inst.objective.eval(&load).unwrap());
        prop_assert!(tr.final_norm <= tr.final_psi * (1.0 + 1e-12));
    }

    #[test]
    fn per_phase_increments_telescope(seed in 0u64..1000) {
        let inst = lb(&spec(4, 2, 20, "linf", seed));
        let tr = run_greedy(&inst, &LbRunConfig::new(ApproxSpec::Softmax, OptMode::Given(3.0), 1, seed)).unwrap();
        let sum: f64 = tr.rounds.iter().map(|r| r.psi - r.psi_prev).sum();
        let total = tr.final_psi - tr.phases[0].psi_zero;
        prop_assert!((sum - total).abs() <= 1e-6 * total.abs().max(1.0));
    }
}

#[test]
fn golden_brute_force_value() {
    let inst = lb(&spec(3, 2, 8, "linf", 42));
    let (opt, choices) = brute_force_opt(&inst, DEFAULT_BRUTE_CAP).unwrap();
    assert_eq!(opt, 3.1961413384044475);
    let mut load = vec![0.0; 3];
    for (t, c) in choices.iter().enumerate() {
        inst.jobs[t].add_column_to(*c, &mut load);
    }
    assert_eq!(inst.objective.eval(&load).unwrap(), opt);
}

#[test]
fn greedy_never_beats_the_optimum() {
    for s in 0..10 {
        let inst = lb(&spec(4, 2, 10, "linf", s));
        let (opt, _) = brute_force_opt(&inst, DEFAULT_BRUTE_CAP).unwrap();
        let tr = run_greedy(&inst, &LbRunConfig::new(ApproxSpec::Softmax, OptMode::Given(opt), 1, s)).unwrap();
        let r = tr.final_norm / opt;
        assert!(r >= 1.0 - 1e-12, "seed {s}: {r}");
        assert!(r <= 2.0, "seed {s}: {r}");
    }
}

#[test]
fn identical_columns_give_ratio_one() {
    let inst = lb(&spec(3, 1, 9, "lp:2", 5));
    let jobs: Vec<JobMatrix> = inst
        .jobs
        .iter()
        .map(|j| JobMatrix::from_columns(&vec![j.column(0); 3]).unwrap())
        .collect();
    let ident = LbInstance::new("lp:2", 3, jobs).unwrap();
    let (opt, _) = brute_force_opt(&ident, DEFAULT_BRUTE_CAP).unwrap();
    let tr = run_greedy(&ident, &LbRunConfig::new(ApproxSpec::ShiftedLp(2.0), OptMode::AutoDouble(1.0), 1, 0)).unwrap();
    assert_eq!(tr.final_norm / opt, 1.0);
}

#[test]
fn single_diagonal_job_is_placed_optimally() {
    for s in 0..5 {
        let g = GeneratorSpec {
            family: Family::Diagonal,
            m: 3,
            k: 3,
            t: 1,
            seed: s,
            ..GeneratorSpec::default()
        };
        let inst = lb(&g);
        let (opt, _) = brute_force_opt(&inst, DEFAULT_BRUTE_CAP).unwrap();
        let tr = run_greedy(&inst, &LbRunConfig::new(ApproxSpec::Softmax, OptMode::AutoDouble(1.0), 1, s)).unwrap();
        assert_eq!(tr.final_norm / opt, 1.0);
    }
}

#[test]
fn single_job_can_miss_the_optimum_under_softmax() {
    // (3,0,0) beats (2.9,2.9,2.9) on the surrogate at ε = 1/2.9 but not on ℓ∞.
    let job = JobMatrix::new(vec![vec![3.0, 2.9], vec![0.0, 2.9], vec![0.0, 2.9]]).unwrap();
    let inst = LbInstance::new("linf", 3, vec![job]).unwrap();
    let (opt, _) = brute_force_opt(&inst, DEFAULT_BRUTE_CAP).unwrap();
    let tr = run_greedy(&inst, &LbRunConfig::new(ApproxSpec::Softmax, OptMode::Given(2.9), 1, 0)).unwrap();
    assert_eq!(tr.rounds[0].choice, 0);
    assert_eq!(opt, 2.9);
    assert!(tr.final_norm / opt > 1.03);
}

#[test]
fn vector_scheduling_against_brute_force() {
    for s in 0..5 {
        let g = GeneratorSpec {
            problem: Problem::Vs,
            m: 3,
            k: 2,
            r: 2,
            t: 6,
            seed: s,
            ..GeneratorSpec::default()
        };
        let inst = lb(&g);
        assert!(inst.is_vector());
        let (opt, _) = brute_force_opt(&inst, DEFAULT_BRUTE_CAP).unwrap();
        let tr = run_vector_scheduling(&inst, &LbRunConfig::new(ApproxSpec::Nested(2), OptMode::Given(opt), 256, s)).unwrap();
        let r = tr.final_norm / opt;
        assert!((1.0 - 1e-12..=3.0).contains(&r), "seed {s}: {r}");
    }
}

#[test]
fn greedy_step_prefers_the_empty_machine() {
    let sm = Softmax::new(3, 1.0).unwrap();
    let job = JobMatrix::new(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
    let (choice, values) = greedy_step(&sm, &[1.0, 0.0, 0.0], &job);
    assert_eq!(choice, 1);
    assert!(values[1] < values[0]);
    // Ties resolve to the lowest index.
    let (tie, _) = greedy_step(&sm, &[0.0, 0.0, 0.0], &job);
    assert_eq!(tie, 0);
}
