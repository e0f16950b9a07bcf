use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use gradnorm::approx::{BuildOptions, DEFAULT_RUN_SAMPLES};
use gradnorm::bandits::{benchmark_fixed_bvc, benchmark_fixed_bwk};
use gradnorm::error::{Error, Result};
use gradnorm::harness::{
    generate, ratio, read_bandit_instance, read_lb_instance, run_experiment, write_atomic,
    write_json, ExperimentConfig, GeneratorSpec, Problem,
};
use gradnorm::lb::{brute_force_opt, run_greedy, LbRunConfig, OptMode, DEFAULT_BRUTE_CAP};

#[derive(Parser)]
#[command(name = "gradnorm", version, about = "Gradient-stable norm approximations and online algorithms")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Property checks of an approximator against a norm.
    Verify(VerifyArgs),
    /// Online generalized load balancing.
    Lb {
        #[command(subcommand)]
        action: LbAction,
    },
    /// Online vector scheduling.
    Vs {
        #[command(subcommand)]
        action: LbAction,
    },
    /// Bandits with knapsacks.
    Bwk {
        #[command(subcommand)]
        action: BanditAction,
    },
    /// Bandits with vector costs.
    Bvc {
        #[command(subcommand)]
        action: BanditAction,
    },
    /// Write a generated instance.
    Gen(GenArgs),
    /// Best fixed distribution in hindsight.
    Bench {
        #[command(subcommand)]
        which: BenchWhich,
    },
}

#[derive(Subcommand)]
enum LbAction {
    Run(LbRunArgs),
    Brute(BruteArgs),
}

#[derive(Subcommand)]
enum BanditAction {
    Run(BanditRunArgs),
}

#[derive(Subcommand)]
enum BenchWhich {
    Bwk(BenchArgs),
    Bvc(BenchArgs),
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    #[arg(long)]
    approx: Option<String>,
    #[arg(long)]
    norm: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    check: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of consecutive seeds starting at --seed.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    factor: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[serde(skip)]
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct LbRunArgs {
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    approx: Option<String>,
    /// given:<v> or auto:<v0>
    #[arg(long)]
    opt: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run an experiment over this many seeds and write a CSV to --out.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    trace_dir: Option<PathBuf>,
    #[arg(long)]
    max_ratio: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[serde(skip)]
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct BruteArgs {
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    brute_cap: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[serde(skip)]
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct BanditRunArgs {
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    approx: Option<String>,
    /// OPT_BwK (knapsacks only); defaults to the benchmark value.
    #[serde(rename = "opt_bwk")]
    #[arg(long = "opt")]
    opt: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    allow_small_budget: bool,
    #[arg(long)]
    max_ratio: Option<f64>,
    #[arg(long)]
    min_ratio: Option<f64>,
    #[arg(long)]
    trace_dir: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[serde(skip)]
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct GenArgs {
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[serde(rename = "T")]
    #[arg(short = 'T', long = "T")]
    t: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    identical: bool,
    #[arg(long)]
    norm: Option<String>,
    /// Inner norm of one resource; repeat once per resource.
    #[arg(long)]
    inner: Option<Vec<String>>,
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[serde(skip)]
    #[arg(long)]
    out: Option<PathBuf>,
    #[serde(skip)]
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct BenchArgs {
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[serde(skip)]
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Serialized flags, minus unset ones, overlaid by the config file.
fn merged(flags: &impl Serialize, config: &Option<PathBuf>) -> Result<Map<String, Value>> {
    let mut map = match serde_json::to_value(flags)? {
        Value::Object(m) => m,
        _ => unreachable!("flag structs serialize to objects"),
    };
    map.retain(|_, v| !v.is_null() && *v != Value::Bool(false));
    if let Some(path) = config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
        match serde_json::from_str::<Value>(&text)? {
            Value::Object(over) => map.extend(over),
            _ => return Err(Error::InvalidInput(format!("{}: config must be a JSON object", path.display()))),
        }
    }
    Ok(map)
}

fn into<T: DeserializeOwned>(map: Map<String, Value>) -> Result<T> {
    Ok(serde_json::from_value(Value::Object(map))?)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// Runs an experiment and prints its summary; `true` when it passed.
fn experiment(problem: Problem, mut map: Map<String, Value>) -> Result<bool> {
    map.insert("problem".into(), serde_json::to_value(problem)?);
    let cfg: ExperimentConfig = into(map)?;
    let to_stdout = cfg.out.is_none();
    let out = run_experiment(&cfg)?;
    if to_stdout {
        print!("{}", out.table);
    } else {
        print!("{}", pretty(&out.summary)?);
    }
    Ok(out.summary.pass)
}

fn lb_run(problem: Problem, args: LbRunArgs) -> Result<bool> {
    let map = merged(&args, &args.config)?;
    if map.contains_key("seeds") || map.contains_key("generator") {
        return experiment(problem, map);
    }
    let out = map.get("out").and_then(Value::as_str).map(PathBuf::from);
    let max_ratio = map.get("max_ratio").and_then(Value::as_f64);
    let cfg: ExperimentConfig = into({
        let mut m = map;
        m.insert("problem".into(), serde_json::to_value(problem)?);
        m
    })?;
    cfg.validate()?;
    let path = cfg.instance.as_ref().expect("validated");
    let inst = read_lb_instance(path)?;
    if (problem == Problem::Vs) != inst.is_vector() {
        return Err(Error::InvalidInput(format!("{problem} run on the wrong instance kind")));
    }
    let run_cfg = LbRunConfig {
        approx: cfg.approx,
        opt: cfg.opt.unwrap_or(OptMode::AutoDouble(1.0)),
        build: BuildOptions {
            epsilon: 1.0,
            samples: cfg.samples.unwrap_or(DEFAULT_RUN_SAMPLES),
            seed: cfg.seed,
            inner: cfg.inner_approx,
            k_sampling: cfg.k_sampling,
        },
        theta: cfg.theta,
    };
    let trace = run_greedy(&inst, &run_cfg)?;
    emit(&out, &pretty(&trace)?)?;
    if let Some(bound) = max_ratio {
        let (opt, _) = brute_force_opt(&inst, cfg.brute_cap)?;
        let r = ratio(trace.final_norm, opt);
        eprintln!("ratio {r} (final {} / opt {opt})", trace.final_norm);
        return Ok(r <= bound);
    }
    Ok(true)
}

fn brute(args: BruteArgs) -> Result<bool> {
    let map = merged(&args, &args.config)?;
    let path: PathBuf = map
        .get("instance")
        .and_then(Value::as_str)
        .map(PathBuf::from)
        .ok_or_else(|| Error::InvalidInput("--instance is required".into()))?;
    let cap = map.get("brute_cap").and_then(Value::as_f64).unwrap_or(DEFAULT_BRUTE_CAP);
    let inst = read_lb_instance(&path)?;
    let (opt, choices) = brute_force_opt(&inst, cap)?;
    let out = map.get("out").and_then(Value::as_str).map(PathBuf::from);
    emit(&out, &pretty(&serde_json::json!({ "opt": opt, "choices": choices }))?)?;
    Ok(true)
}

fn bench(knapsack: bool, args: BenchArgs) -> Result<bool> {
    let map = merged(&args, &args.config)?;
    let path: PathBuf = map
        .get("instance")
        .and_then(Value::as_str)
        .map(PathBuf::from)
        .ok_or_else(|| Error::InvalidInput("--instance is required".into()))?;
    let inst = read_bandit_instance(&path)?;
    let b = if knapsack {
        benchmark_fixed_bwk(&inst)?
    } else {
        benchmark_fixed_bvc(&inst)
    };
    let out = map.get("out").and_then(Value::as_str).map(PathBuf::from);
    match out {
        Some(p) => write_json(&p, &b)?,
        None => print!("{}", pretty(&b)?),
    }
    Ok(true)
}

fn gen(args: GenArgs) -> Result<bool> {
    let map = merged(&args, &args.config)?;
    let spec: GeneratorSpec = into(map)?;
    let inst = generate(&spec)?;
    emit(&args.out, &inst.to_jsonl())?;
    Ok(true)
}

fn dispatch(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::Verify(a) => experiment(Problem::Verify, merged(&a, &a.config)?),
        Cmd::Lb { action: LbAction::Run(a) } => lb_run(Problem::Lb, a),
        Cmd::Vs { action: LbAction::Run(a) } => lb_run(Problem::Vs, a),
        Cmd::Lb { action: LbAction::Brute(a) } | Cmd::Vs { action: LbAction::Brute(a) } => brute(a),
        Cmd::Bwk { action: BanditAction::Run(a) } => experiment(Problem::Bwk, merged(&a, &a.config)?),
        Cmd::Bvc { action: BanditAction::Run(a) } => experiment(Problem::Bvc, merged(&a, &a.config)?),
        Cmd::Gen(a) => gen(a),
        Cmd::Bench { which: BenchWhich::Bwk(a) } => bench(true, a),
        Cmd::Bench { which: BenchWhich::Bvc(a) } => bench(false, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
