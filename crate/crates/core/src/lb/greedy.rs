use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{JobMatrix, LbInstance};
use crate::approx::{ApproxSpec, BuildOptions, GsApproximator};
use crate::error::{Error, Result};
use crate::norm::Objective;
use crate::seed;

/// Default doubling threshold `θ`: the guess doubles once the true norm of
/// the load exceeds `θ·(α + γ)·guess`.
pub const DEFAULT_THETA: f64 = 8.0;

/// How the algorithm learns the scale of the optimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptMode {
    /// The optimum (or an estimate of it) is known up front.
    Given(f64),
    /// Start from a guess and double it whenever the load outgrows it.
    AutoDouble(f64),
}

impl fmt::Display for OptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptMode::Given(v) => write!(f, "given:{v}"),
            OptMode::AutoDouble(v) => write!(f, "auto:{v}"),
        }
    }
}

impl FromStr for OptMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = s.split_once(':').ok_or_else(|| Error::Parse {
            pos: s.len(),
            expected: "':' followed by a value".into(),
        })?;
        let v: f64 = arg.parse().map_err(|_| Error::Parse {
            pos: head.len() + 1,
            expected: "a real number".into(),
        })?;
        match head {
            "given" => Ok(OptMode::Given(v)),
            "auto" => Ok(OptMode::AutoDouble(v)),
            _ => Err(Error::Parse {
                pos: 0,
                expected: "'given' or 'auto'".into(),
            }),
        }
    }
}

impl Serialize for OptMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OptMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LbRunConfig {
    pub approx: ApproxSpec,
    pub opt: OptMode,
    /// `epsilon` is ignored: it is set to `1/guess` by the run.
    pub build: BuildOptions,
    pub theta: f64,
}

impl LbRunConfig {
    pub fn new(approx: ApproxSpec, opt: OptMode, samples: usize, seed: u64) -> Self {
        Self {
            approx,
            opt,
            build: BuildOptions::new(1.0, samples, seed),
            theta: DEFAULT_THETA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub choice: usize,
    /// `Λ^{(t)}` after the round.
    pub load: Vec<f64>,
    /// `Ψ(Λ^{(t−1)})` under the approximator of this round's phase.
    pub psi_prev: f64,
    /// `Ψ(Λ^{(t)})`, equal to `candidates[choice]`.
    pub psi: f64,
    /// `Ψ(Λ^{(t−1)} + C·e_j)` for every option `j`.
    pub candidates: Vec<f64>,
    pub phase: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    /// First round (0-based) played in this phase.
    pub start_round: usize,
    pub guess: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// `Ψ(0)` of the phase's approximator.
    pub psi_zero: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub rounds: Vec<RoundRecord>,
    pub phases: Vec<PhaseRecord>,
    pub final_load: Vec<f64>,
    /// True objective value of the final load.
    pub final_norm: f64,
    /// `Ψ(Λ^{(T)})` under the last phase's approximator.
    pub final_psi: f64,
}

impl RunTrace {
    pub fn choices(&self) -> Vec<usize> {
        self.rounds.iter().map(|r| r.choice).collect()
    }
}

/// `argmin_j Ψ(Λ + C·e_j)`, lowest index on ties, with all candidate values.
pub fn greedy_step(psi: &dyn GsApproximator, load: &[f64], job: &JobMatrix) -> (usize, Vec<f64>) {
    let mut probe = load.to_vec();
    let mut best = 0;
    let mut values = Vec::with_capacity(job.options());
    for j in 0..job.options() {
        probe.copy_from_slice(load);
        job.add_column_to(j, &mut probe);
        let v = psi.value(&probe);
        if v < values.get(best).copied().unwrap_or(f64::INFINITY) {
            best = j;
        }
        values.push(v);
    }
    (best, values)
}

fn build_phase(
    objective: &Objective,
    cfg: &LbRunConfig,
    guess: f64,
    phase: usize,
) -> Result<(Arc<dyn GsApproximator>, PhaseRecord)> {
    let epsilon = 1.0 / guess;
    let seed = seed::derive(cfg.build.seed, "phase", phase as u64);
    let opts = cfg.build.with_epsilon(epsilon).with_seed(seed);
    let psi = cfg.approx.build(objective, &opts)?;
    let psi_zero = psi.value(&vec![0.0; objective.dim()]);
    Ok((
        psi,
        PhaseRecord {
            start_round: 0,
            guess,
            epsilon,
            seed,
            psi_zero,
        },
    ))
}

/// Runs the greedy algorithm with `ε = 1/guess`.
///
/// In [`OptMode::AutoDouble`] the guess doubles (possibly several times)
/// after any round that leaves `‖Λ‖ > θ·(α + γ)·guess`; the approximator of
/// phase `p` is rebuilt with seed `derive(seed, "phase", p)` and the loads
/// carry over.
pub fn run_greedy(instance: &LbInstance, cfg: &LbRunConfig) -> Result<RunTrace> {
    let (mut guess, doubling) = match cfg.opt {
        OptMode::Given(v) => (v, false),
        OptMode::AutoDouble(v) => (v, true),
    };
    if !(guess > 0.0 && guess.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "OPT guess must be finite and > 0, got {guess}"
        )));
    }
    if doubling && !(cfg.theta > 0.0) {
        return Err(Error::InvalidInput(format!("θ must be > 0, got {}", cfg.theta)));
    }
    let objective = &instance.objective;
    let d = objective.dim();
    let (mut psi, first) = build_phase(objective, cfg, guess, 0)?;
    let mut phases = vec![first];
    let mut load = vec![0.0; d];
    let mut psi_prev = phases[0].psi_zero;
    let mut rounds = Vec::with_capacity(instance.horizon());
    for (t, job) in instance.jobs.iter().enumerate() {
        let (choice, candidates) = greedy_step(psi.as_ref(), &load, job);
        job.add_column_to(choice, &mut load);
        let psi_now = candidates[choice];
        rounds.push(RoundRecord {
            choice,
            load: load.clone(),
            psi_prev,
            psi: psi_now,
            candidates,
            phase: phases.len() - 1,
        });
        psi_prev = psi_now;
        if doubling {
            let meta = psi.meta();
            let norm = objective.eval_unchecked(&load);
            if norm > cfg.theta * (meta.alpha + meta.gamma) * guess {
                while norm > cfg.theta * (meta.alpha + meta.gamma) * guess {
                    guess *= 2.0;
                }
                let (next, mut rec) = build_phase(objective, cfg, guess, phases.len())?;
                rec.start_round = t + 1;
                psi = next;
                psi_prev = psi.value(&load);
                phases.push(rec);
            }
        }
    }
    Ok(RunTrace {
        final_norm: objective.eval_unchecked(&load),
        final_psi: psi_prev,
        final_load: load,
        rounds,
        phases,
    })
}

/// Greedy on a vector-scheduling instance with the nested approximator.
pub fn run_vector_scheduling(instance: &LbInstance, cfg: &LbRunConfig) -> Result<RunTrace> {
    if !instance.is_vector() {
        return Err(Error::InvalidInput(
            "vector scheduling needs an instance with inner norms".into(),
        ));
    }
    run_greedy(instance, cfg)
}
