use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::generate::{generate, GeneratorSpec};
use super::io::{cell, read_bandit_instance, read_lb_instance, write_atomic, write_json, CsvTable};
use crate::approx::{
    ApproxSpec, BuildOptions, GsApproximator, InnerApprox, KSampling, DEFAULT_RUN_SAMPLES,
    DEFAULT_VERIFY_SAMPLES,
};
use crate::bandits::{
    benchmark_fixed_bvc, benchmark_fixed_bwk, bvc_run, bwk_run, BanditInstance, BwkOptions,
};
use crate::error::{Error, Result};
use crate::lb::{
    brute_force_opt, run_greedy, run_vector_scheduling, LbInstance, LbRunConfig, OptMode,
    DEFAULT_BRUTE_CAP, DEFAULT_THETA,
};
use crate::norm::{NormSpec, Objective};
use crate::seed;
use crate::verify::{
    check_converse_jensen, check_gradient_stability, check_sandwich, check_smooth_game,
    check_structure, CheckReport, JensenConfig, SandwichConfig, SmoothGameParams,
    StabilityConfig, StructureConfig,
};

/// Smooth-game constants checked when a config does not set them.
pub const DEFAULT_SMOOTH_LAMBDA: f64 = 4.0;
pub const DEFAULT_SMOOTH_MU: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    #[default]
    Lb,
    Vs,
    Bwk,
    Bvc,
    Verify,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Problem::Lb => "lb",
            Problem::Vs => "vs",
            Problem::Bwk => "bwk",
            Problem::Bvc => "bvc",
            Problem::Verify => "verify",
        })
    }
}

impl FromStr for Problem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lb" => Ok(Problem::Lb),
            "vs" => Ok(Problem::Vs),
            "bwk" => Ok(Problem::Bwk),
            "bvc" => Ok(Problem::Bvc),
            "verify" => Ok(Problem::Verify),
            _ => Err(Error::Parse {
                pos: 0,
                expected: "lb, vs, bwk, bvc or verify".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    Stability,
    Sandwich,
    #[serde(rename = "smoothgame")]
    SmoothGame,
    Jensen,
    Structure,
}

impl FromStr for Check {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stability" => Ok(Check::Stability),
            "sandwich" => Ok(Check::Sandwich),
            "smoothgame" => Ok(Check::SmoothGame),
            "jensen" => Ok(Check::Jensen),
            "structure" => Ok(Check::Structure),
            _ => Err(Error::Parse {
                pos: 0,
                expected: "stability, sandwich, smoothgame, jensen or structure".into(),
            }),
        }
    }
}

/// A seed count `n` (meaning `seed, seed+1, …, seed+n−1`) or an explicit list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds::Count(1)
    }
}

impl Seeds {
    pub fn expand(&self, base: u64) -> Vec<u64> {
        match self {
            Seeds::Count(n) => (0..*n).map(|i| base.wrapping_add(i)).collect(),
            Seeds::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Absolute slack for deterministic stability checks.
    pub abs_tol: f64,
    /// Relative slack for sandwich, sequence and structure checks.
    pub rel_tol: f64,
    /// Standard errors granted to stochastic approximators.
    pub se_multiplier: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            se_multiplier: 3.0,
        }
    }
}

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: Problem,
    /// Instance file (JSON lines); exclusive with `generator`.
    pub instance: Option<PathBuf>,
    /// Per-seed generated instances; run seed `s` uses generator seed
    /// `derive(generator.seed, "instance", s)`.
    pub generator: Option<GeneratorSpec>,
    pub approx: ApproxSpec,
    /// Norm and dimension checked by `verify`.
    pub norm: Option<String>,
    pub dim: Option<usize>,
    pub check: Option<Check>,
    /// First seed of a seed count.
    pub seed: u64,
    pub seeds: Seeds,
    pub out: Option<PathBuf>,
    /// Directory receiving one JSON trace per run.
    pub trace_dir: Option<PathBuf>,
    pub summary_out: Option<PathBuf>,
    pub epsilon: Option<f64>,
    pub samples: Option<usize>,
    pub inner_approx: InnerApprox,
    pub k_sampling: KSampling,
    /// Load balancing: `given:<v>` or `auto:<v0>`; defaults to `auto:1`.
    pub opt: Option<OptMode>,
    /// Knapsacks: defaults to the benchmark value.
    pub opt_bwk: Option<f64>,
    pub theta: f64,
    pub trials: Option<usize>,
    pub tolerances: Tolerances,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    /// Converse-Jensen factor; defaults to `e^{1+δ}`.
    pub factor: Option<f64>,
    /// Step norm bound of generated sequences; defaults to `1/ε`.
    pub step_cap: Option<f64>,
    pub brute_cap: f64,
    pub allow_small_budget: bool,
    /// Regression bound on cost ratios (lb, vs, bvc).
    pub max_ratio: Option<f64>,
    /// Regression bound on reward ratios (bwk).
    pub min_ratio: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: Problem::Lb,
            instance: None,
            generator: None,
            approx: ApproxSpec::Softmax,
            norm: None,
            dim: None,
            check: None,
            seed: 0,
            seeds: Seeds::default(),
            out: None,
            trace_dir: None,
            summary_out: None,
            epsilon: None,
            samples: None,
            inner_approx: InnerApprox::default(),
            k_sampling: KSampling::default(),
            opt: None,
            opt_bwk: None,
            theta: DEFAULT_THETA,
            trials: None,
            tolerances: Tolerances::default(),
            lambda: None,
            mu: None,
            factor: None,
            step_cap: None,
            brute_cap: DEFAULT_BRUTE_CAP,
            allow_small_budget: false,
            max_ratio: None,
            min_ratio: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.problem == Problem::Verify {
            if self.norm.is_none() || self.dim.is_none() || self.check.is_none() {
                return Err(Error::InvalidInput("verify needs norm, dim and check".into()));
            }
        } else {
            match (&self.instance, &self.generator) {
                (Some(_), Some(_)) => {
                    return Err(Error::InvalidInput("give either instance or generator, not both".into()))
                }
                (None, None) => return Err(Error::InvalidInput("missing instance or generator".into())),
                (Some(p), None) if !p.is_file() => {
                    return Err(Error::InvalidInput(format!("instance file {} not found", p.display())))
                }
                (None, Some(g)) => {
                    if g.problem != self.problem {
                        return Err(Error::InvalidInput(format!(
                            "generator problem {} differs from experiment problem {}",
                            g.problem, self.problem
                        )));
                    }
                    g.validate()?;
                }
                _ => {}
            }
        }
        if self.seeds.expand(self.seed).is_empty() {
            return Err(Error::InvalidInput("no seeds to run".into()));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::OutOfRange {
                    what: "epsilon",
                    detail: format!("must be finite and > 0, got {e}"),
                });
            }
        }
        if self.samples == Some(0) {
            return Err(Error::OutOfRange {
                what: "samples",
                detail: "must be ≥ 1".into(),
            });
        }
        Ok(())
    }

    fn build_options(&self, epsilon: f64, default_samples: usize, seed: u64) -> BuildOptions {
        BuildOptions {
            epsilon,
            samples: self.samples.unwrap_or(default_samples),
            seed,
            inner: self.inner_approx,
            k_sampling: self.k_sampling,
        }
    }
}

/// Aggregate over the runs of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub problem: Problem,
    pub runs: usize,
    /// Ratios are cost over benchmark (lb, vs, bvc) or reward over benchmark
    /// (bwk); absent when no benchmark was available.
    pub mean_ratio: Option<f64>,
    pub std_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
    pub min_ratio: Option<f64>,
    /// Failed checks, regression breaches and budget overruns.
    pub violations: usize,
    pub pass: bool,
}

/// Result of [`run_experiment`]: the summary and the rendered outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub summary: Summary,
    /// CSV for lb, vs, bwk and bvc; JSON report(s) for verify.
    pub table: String,
}

/// `value / benchmark`, with `0/0 = 1`.
pub fn ratio(value: f64, benchmark: f64) -> f64 {
    if benchmark == 0.0 {
        if value == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        value / benchmark
    }
}

/// Runs every seed of `cfg`, writes `out`, `trace_dir` entries and
/// `summary_out` atomically when set, and returns the summary.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let seeds = cfg.seeds.expand(cfg.seed);
    if let Some(dir) = &cfg.trace_dir {
        std::fs::create_dir_all(dir)?;
    }
    let out = match cfg.problem {
        Problem::Verify => run_verify(cfg, &seeds)?,
        Problem::Lb | Problem::Vs => run_lb(cfg, &seeds)?,
        Problem::Bwk | Problem::Bvc => run_bandit(cfg, &seeds)?,
    };
    if let Some(p) = &cfg.out {
        write_atomic(p, out.table.as_bytes())?;
    }
    if let Some(p) = &cfg.summary_out {
        write_json(p, &out.summary)?;
    }
    Ok(out)
}

fn summarize(problem: Problem, ratios: &[f64], violations: usize) -> Summary {
    let finite: Vec<f64> = ratios.iter().copied().filter(|r| r.is_finite()).collect();
    let n = finite.len();
    let (mean, std) = if n == 0 {
        (None, None)
    } else {
        let mean = finite.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            finite.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        (Some(mean), Some(var.sqrt()))
    };
    let max = ratios.iter().copied().fold(None, |m: Option<f64>, r| Some(m.map_or(r, |v| v.max(r))));
    let min = ratios.iter().copied().fold(None, |m: Option<f64>, r| Some(m.map_or(r, |v| v.min(r))));
    Summary {
        problem,
        runs: ratios.len(),
        mean_ratio: mean,
        std_ratio: std,
        max_ratio: max,
        min_ratio: min,
        violations,
        pass: violations == 0,
    }
}

fn trace_path(cfg: &ExperimentConfig, seed: u64) -> Option<PathBuf> {
    cfg.trace_dir
        .as_ref()
        .map(|d| d.join(format!("{}-seed-{seed}.json", cfg.problem)))
}

fn instance_seed(gen: &GeneratorSpec, run_seed: u64) -> u64 {
    seed::derive(gen.seed, "instance", run_seed)
}

enum Source<T> {
    Fixed(T),
    Generated(GeneratorSpec),
}

impl<T: Clone> Source<T> {
    fn get(&self, run_seed: u64, conv: impl Fn(super::Generated) -> Result<T>) -> Result<T> {
        match self {
            Source::Fixed(t) => Ok(t.clone()),
            Source::Generated(g) => {
                let spec = GeneratorSpec {
                    seed: instance_seed(g, run_seed),
                    ..g.clone()
                };
                conv(generate(&spec)?)
            }
        }
    }
}

fn regression_breach(cfg: &ExperimentConfig, r: f64) -> bool {
    cfg.max_ratio.is_some_and(|m| r > m) || cfg.min_ratio.is_some_and(|m| r < m)
}

fn run_lb(cfg: &ExperimentConfig, seeds: &[u64]) -> Result<ExperimentOutput> {
    let source = match &cfg.instance {
        Some(p) => Source::Fixed(read_lb_instance(p)?),
        None => Source::Generated(cfg.generator.clone().expect("validated")),
    };
    let mut table = CsvTable::new(vec!["seed", "final_norm", "benchmark_value", "ratio", "phases"]);
    let mut ratios = Vec::new();
    let mut violations = 0;
    let mut fixed_opt: Option<Option<f64>> = None;
    for &s in seeds {
        let ctx = |e: Error| e.context(format!("seed {s}"));
        let inst: LbInstance = source.get(s, |g| g.into_lb()).map_err(ctx)?;
        if (cfg.problem == Problem::Vs) != inst.is_vector() {
            return Err(Error::InvalidInput(format!(
                "problem {} does not match the instance kind",
                cfg.problem
            )));
        }
        let run_cfg = LbRunConfig {
            approx: cfg.approx,
            opt: cfg.opt.unwrap_or(OptMode::AutoDouble(1.0)),
            build: cfg.build_options(1.0, DEFAULT_RUN_SAMPLES, s),
            theta: cfg.theta,
        };
        let trace = if inst.is_vector() {
            run_vector_scheduling(&inst, &run_cfg)
        } else {
            run_greedy(&inst, &run_cfg)
        }
        .map_err(ctx)?;
        let opt = match (&source, fixed_opt) {
            (Source::Fixed(_), Some(v)) => v,
            _ => {
                let v = match brute_force_opt(&inst, cfg.brute_cap) {
                    Ok((v, _)) => Some(v),
                    Err(Error::CapExceeded { .. }) => None,
                    Err(e) => return Err(ctx(e)),
                };
                if matches!(source, Source::Fixed(_)) {
                    fixed_opt = Some(v);
                }
                v
            }
        };
        let r = opt.map(|o| ratio(trace.final_norm, o));
        if let Some(r) = r {
            ratios.push(r);
            if regression_breach(cfg, r) {
                violations += 1;
            }
        }
        if let Some(p) = trace_path(cfg, s) {
            write_json(&p, &trace)?;
        }
        table.rows.push(vec![
            s.to_string(),
            cell(Some(trace.final_norm)),
            cell(opt),
            cell(r),
            trace.phases.len().to_string(),
        ]);
    }
    Ok(ExperimentOutput {
        summary: summarize(cfg.problem, &ratios, violations),
        table: table.render(),
    })
}

fn build_psi(cfg: &ExperimentConfig, inst: &BanditInstance, epsilon: f64, seed: u64) -> Result<Arc<dyn GsApproximator>> {
    let objective = Objective::Norm(inst.norm.clone());
    cfg.approx.build(&objective, &cfg.build_options(epsilon, DEFAULT_RUN_SAMPLES, seed))
}

fn run_bandit(cfg: &ExperimentConfig, seeds: &[u64]) -> Result<ExperimentOutput> {
    let source = match &cfg.instance {
        Some(p) => Source::Fixed(read_bandit_instance(p)?),
        None => Source::Generated(cfg.generator.clone().expect("validated")),
    };
    let knapsack = cfg.problem == Problem::Bwk;
    let mut table = CsvTable::new(vec![
        "seed",
        "total_reward",
        "final_norm_cost",
        "stopped_at",
        "benchmark_value",
        "ratio",
    ]);
    let mut ratios = Vec::new();
    let mut violations = 0;
    let mut fixed_bench: Option<f64> = None;
    for &s in seeds {
        let ctx = |e: Error| e.context(format!("seed {s}"));
        let inst = source.get(s, |g| g.into_bandit()).map_err(ctx)?;
        let bench = match (&source, fixed_bench) {
            (Source::Fixed(_), Some(v)) => v,
            _ => {
                let v = if knapsack {
                    benchmark_fixed_bwk(&inst).map_err(ctx)?.value
                } else {
                    benchmark_fixed_bvc(&inst).value
                };
                if matches!(source, Source::Fixed(_)) {
                    fixed_bench = Some(v);
                }
                v
            }
        };
        let trace = if knapsack {
            let opt = cfg.opt_bwk.unwrap_or(bench);
            if !(opt > 0.0) {
                return Err(ctx(Error::InvalidInput(
                    "benchmark reward is 0; set opt_bwk explicitly".into(),
                )));
            }
            let epsilon = match cfg.epsilon {
                Some(e) => e,
                None => {
                    let meta = build_psi(cfg, &inst, 1.0, s).map_err(ctx)?.meta();
                    (meta.alpha + meta.gamma) / opt
                }
            };
            let psi = build_psi(cfg, &inst, epsilon, s).map_err(ctx)?;
            let opts = BwkOptions {
                allow_small_budget: cfg.allow_small_budget,
            };
            bwk_run(&inst, psi.as_ref(), opt, s, opts).map_err(ctx)?
        } else {
            let epsilon = cfg.epsilon.unwrap_or(if bench > 0.0 { 1.0 / bench } else { 1.0 });
            let psi = build_psi(cfg, &inst, epsilon, s).map_err(ctx)?;
            bvc_run(&inst, psi.as_ref(), s).map_err(ctx)?
        };
        let r = if knapsack {
            ratio(trace.total_reward, bench)
        } else {
            ratio(trace.final_norm, bench)
        };
        ratios.push(r);
        if regression_breach(cfg, r) {
            violations += 1;
        }
        if knapsack && trace.final_norm > inst.budget.expect("knapsack") {
            violations += 1;
        }
        if let Some(p) = trace_path(cfg, s) {
            write_json(&p, &trace)?;
        }
        table.rows.push(vec![
            s.to_string(),
            cell(Some(trace.total_reward)),
            cell(Some(trace.final_norm)),
            trace.stopped_at.map(|t| t.to_string()).unwrap_or_default(),
            cell(Some(bench)),
            cell(Some(r)),
        ]);
    }
    Ok(ExperimentOutput {
        summary: summarize(cfg.problem, &ratios, violations),
        table: table.render(),
    })
}

/// Runs one check of `approx` against `norm` with the config's settings.
pub fn run_check(
    cfg: &ExperimentConfig,
    check: Check,
    approx: &dyn GsApproximator,
    norm: &Objective,
    seed: u64,
) -> Result<CheckReport> {
    let meta = approx.meta();
    let tol = cfg.tolerances;
    let step_cap = cfg.step_cap.unwrap_or(1.0 / meta.epsilon);
    Ok(match check {
        Check::Stability => {
            let mut c = StabilityConfig::new(meta.delta);
            c.trials = cfg.trials.unwrap_or(c.trials);
            c.abs_tol = tol.abs_tol;
            c.se_multiplier = tol.se_multiplier;
            c.seed = seed;
            check_gradient_stability(approx, norm, &c)
        }
        Check::Sandwich => {
            let c = SandwichConfig {
                trials: cfg.trials.unwrap_or(1000),
                rel_tol: tol.rel_tol,
                se_multiplier: tol.se_multiplier,
                epsilon: None,
                seed,
            };
            check_sandwich(approx, norm, meta.alpha, meta.gamma, &c)
        }
        Check::SmoothGame => {
            let mut p = SmoothGameParams::new(
                cfg.lambda.unwrap_or(DEFAULT_SMOOTH_LAMBDA),
                cfg.mu.unwrap_or(DEFAULT_SMOOTH_MU),
            );
            p.trials = cfg.trials.unwrap_or(p.trials);
            p.step_cap = step_cap;
            p.rel_tol = tol.rel_tol;
            p.seed = seed;
            check_smooth_game(approx, norm, &p)?
        }
        Check::Jensen => {
            let mut c = JensenConfig::new(cfg.factor.unwrap_or((1.0 + meta.delta).exp()), step_cap);
            c.trials = cfg.trials.unwrap_or(c.trials);
            c.rel_tol = tol.rel_tol;
            c.seed = seed;
            check_converse_jensen(approx, norm, &c)
        }
        Check::Structure => {
            let c = StructureConfig {
                trials: cfg.trials.unwrap_or(1000),
                rel_tol: tol.rel_tol,
                se_multiplier: tol.se_multiplier,
                seed,
            };
            check_structure(approx, &c)
        }
    })
}

fn run_verify(cfg: &ExperimentConfig, seeds: &[u64]) -> Result<ExperimentOutput> {
    let dim = cfg.dim.expect("validated");
    let norm = NormSpec::parse(cfg.norm.as_deref().expect("validated"), dim)?;
    let objective = Objective::Norm(norm);
    let check = cfg.check.expect("validated");
    let mut reports = Vec::with_capacity(seeds.len());
    for &s in seeds {
        let opts = cfg.build_options(cfg.epsilon.unwrap_or(1.0), DEFAULT_VERIFY_SAMPLES, s);
        let approx = cfg.approx.build(&objective, &opts)?;
        reports.push(run_check(cfg, check, approx.as_ref(), &objective, s).map_err(|e| e.context(format!("seed {s}")))?);
    }
    let violations = reports.iter().filter(|r| !r.pass).count();
    let mut table = if reports.len() == 1 {
        serde_json::to_string_pretty(&reports[0])?
    } else {
        serde_json::to_string_pretty(&reports)?
    };
    table.push('\n');
    let mut summary = summarize(Problem::Verify, &[], violations);
    summary.runs = reports.len();
    Ok(ExperimentOutput { summary, table })
}

/// Reads an experiment config from a JSON file.
pub fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
    serde_json::from_str(&text).map_err(|e| Error::from(e).context(path.display().to_string()))
}
