use std::fmt;
use std::str::FromStr;

use rand::distr::{Bernoulli, Distribution};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Problem;
use crate::bandits::{BanditInstance, BanditRound};
use crate::error::{Error, Result};
use crate::lb::{JobMatrix, LbInstance};
use crate::seed;

/// Largest number of matrix entries a generator will emit.
pub const MAX_GENERATED_ENTRIES: f64 = 5e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Independent uniform entries on `[0, scale)`.
    #[default]
    UniformRandom,
    /// Option `j` loads only machine `j mod m` (coordinate `a mod d` for
    /// bandits).
    Diagonal,
    /// One option spikes a single rotating coordinate, the others spread
    /// a similar mass over every coordinate.
    SpikeAdversarial,
    /// Bernoulli rewards and costs with fixed per-arm means.
    StochasticBandit,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::UniformRandom => "uniform-random",
            Family::Diagonal => "diagonal",
            Family::SpikeAdversarial => "spike-adversarial",
            Family::StochasticBandit => "stochastic-bandit",
        })
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-random" => Ok(Family::UniformRandom),
            "diagonal" => Ok(Family::Diagonal),
            "spike-adversarial" => Ok(Family::SpikeAdversarial),
            "stochastic-bandit" => Ok(Family::StochasticBandit),
            _ => Err(Error::Parse {
                pos: 0,
                expected: "uniform-random, diagonal, spike-adversarial or stochastic-bandit".into(),
            }),
        }
    }
}

/// Parameters of a generated instance. Sizes that a problem does not use
/// are ignored (`m, k, r` for load balancing, `n, d` for bandits).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    pub family: Family,
    pub problem: Problem,
    pub m: usize,
    pub k: usize,
    #[serde(rename = "T", alias = "t")]
    pub t: usize,
    /// Bandit arms, excluding the null action appended for knapsacks.
    pub n: usize,
    pub d: usize,
    pub r: usize,
    pub scale: f64,
    /// Diagonal family: every job has size exactly `scale`.
    pub identical: bool,
    pub norm: String,
    /// Inner norms for vector scheduling; defaults to `linf` per resource.
    pub inner: Option<Vec<String>>,
    /// Knapsack budget; defaults to `T/4`.
    pub budget: Option<f64>,
    /// Stochastic family: reward mean per arm.
    pub means: Option<Vec<f64>>,
    /// Stochastic family: cost mean per arm and coordinate.
    pub cost_means: Option<Vec<Vec<f64>>>,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            family: Family::UniformRandom,
            problem: Problem::Lb,
            m: 2,
            k: 2,
            t: 8,
            n: 2,
            d: 2,
            r: 1,
            scale: 1.0,
            identical: false,
            norm: "linf".into(),
            inner: None,
            budget: None,
            means: None,
            cost_means: None,
            seed: 0,
        }
    }
}

/// A generated instance of either kind.
#[derive(Debug, Clone)]
pub enum Generated {
    Lb(LbInstance),
    Bandit(BanditInstance),
}

impl Generated {
    pub fn to_jsonl(&self) -> String {
        match self {
            Generated::Lb(i) => i.to_jsonl(),
            Generated::Bandit(i) => i.to_jsonl(),
        }
    }

    pub fn into_lb(self) -> Result<LbInstance> {
        match self {
            Generated::Lb(i) => Ok(i),
            Generated::Bandit(_) => Err(Error::InvalidInput("expected a load-balancing instance".into())),
        }
    }

    pub fn into_bandit(self) -> Result<BanditInstance> {
        match self {
            Generated::Bandit(i) => Ok(i),
            Generated::Lb(_) => Err(Error::InvalidInput("expected a bandit instance".into())),
        }
    }
}

impl GeneratorSpec {
    fn inner_norms(&self) -> Vec<String> {
        self.inner.clone().unwrap_or_else(|| vec!["linf".into(); self.r])
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = [("m", self.m), ("k", self.k), ("T", self.t), ("n", self.n), ("d", self.d), ("r", self.r)];
        if let Some((name, _)) = sizes.iter().find(|(_, v)| *v == 0) {
            return Err(Error::OutOfRange {
                what: "generator size",
                detail: format!("{name} must be ≥ 1"),
            });
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::OutOfRange {
                what: "generator scale",
                detail: format!("scale must be finite and > 0, got {}", self.scale),
            });
        }
        let bandit = matches!(self.problem, Problem::Bwk | Problem::Bvc);
        if bandit && self.scale > 1.0 {
            return Err(Error::OutOfRange {
                what: "generator scale",
                detail: format!("bandit costs lie in [0, 1]; scale {} > 1", self.scale),
            });
        }
        let entries = match self.problem {
            Problem::Lb => (self.m * self.k) as f64 * self.t as f64,
            Problem::Vs => (self.m * self.inner_norms().len() * self.k) as f64 * self.t as f64,
            Problem::Bwk | Problem::Bvc => (self.d * (self.n + 1)) as f64 * self.t as f64,
            Problem::Verify => {
                return Err(Error::InvalidInput("generators produce lb, vs, bwk or bvc instances".into()))
            }
        };
        if entries > MAX_GENERATED_ENTRIES {
            return Err(Error::CapExceeded {
                size: entries,
                cap: MAX_GENERATED_ENTRIES,
            });
        }
        if self.family == Family::StochasticBandit && !bandit {
            return Err(Error::InvalidInput("stochastic-bandit generates bwk or bvc instances".into()));
        }
        let unit = |v: &f64| (0.0..=1.0).contains(v);
        if let Some(mu) = &self.means {
            if mu.len() != self.n || !mu.iter().all(unit) {
                return Err(Error::OutOfRange {
                    what: "reward means",
                    detail: format!("need {} values in [0, 1]", self.n),
                });
            }
        }
        if let Some(cm) = &self.cost_means {
            if cm.len() != self.n || cm.iter().any(|row| row.len() != self.d || !row.iter().all(unit)) {
                return Err(Error::OutOfRange {
                    what: "cost means",
                    detail: format!("need {}×{} values in [0, 1]", self.n, self.d),
                });
            }
        }
        if let Some(b) = self.budget {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(Error::OutOfRange {
                    what: "budget",
                    detail: format!("must be finite and ≥ 0, got {b}"),
                });
            }
        }
        Ok(())
    }
}

/// Builds the instance described by `spec`; the same spec always yields
/// the same instance.
pub fn generate(spec: &GeneratorSpec) -> Result<Generated> {
    spec.validate()?;
    let mut rng = seed::rng(spec.seed, "generate", 0);
    match spec.problem {
        Problem::Lb => gen_lb(spec, &mut rng).map(Generated::Lb),
        Problem::Vs => gen_vs(spec, &mut rng).map(Generated::Lb),
        Problem::Bwk | Problem::Bvc => gen_bandit(spec, &mut rng).map(Generated::Bandit),
        Problem::Verify => unreachable!("rejected by validate"),
    }
}

fn size(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> f64 {
    if spec.identical {
        spec.scale
    } else {
        spec.scale * (1.0 - rng.random::<f64>())
    }
}

fn gen_lb(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Result<LbInstance> {
    let (m, k) = (spec.m, spec.k);
    let mut jobs = Vec::with_capacity(spec.t);
    for t in 0..spec.t {
        let mut rows = vec![vec![0.0; k]; m];
        match spec.family {
            Family::UniformRandom => {
                for row in rows.iter_mut() {
                    for v in row.iter_mut() {
                        *v = spec.scale * rng.random::<f64>();
                    }
                }
            }
            Family::Diagonal => {
                let p = size(spec, rng);
                for j in 0..k {
                    rows[j % m][j] = p;
                }
            }
            Family::SpikeAdversarial => {
                let p = size(spec, rng);
                rows[t % m][0] = p;
                for j in 1..k {
                    let spread = p * (1.0 + 0.25 * rng.random::<f64>()) / m as f64;
                    for row in rows.iter_mut() {
                        row[j] = spread;
                    }
                }
            }
            Family::StochasticBandit => unreachable!("rejected by validate"),
        }
        jobs.push(JobMatrix::new(rows)?);
    }
    LbInstance::new(&spec.norm, m, jobs)
}

fn gen_vs(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Result<LbInstance> {
    let inner = spec.inner_norms();
    let (m, k, r) = (spec.m, spec.k, inner.len());
    let mut jobs = Vec::with_capacity(spec.t);
    for t in 0..spec.t {
        // [option][machine][resource]
        let mut job = vec![vec![vec![0.0; r]; m]; k];
        for (j, opt) in job.iter_mut().enumerate() {
            match spec.family {
                Family::UniformRandom => {
                    for mach in opt.iter_mut() {
                        for v in mach.iter_mut() {
                            *v = spec.scale * rng.random::<f64>();
                        }
                    }
                }
                Family::Diagonal => {
                    for v in opt[j % m].iter_mut() {
                        *v = size(spec, rng);
                    }
                }
                Family::SpikeAdversarial => {
                    let p = size(spec, rng);
                    if j == 0 {
                        opt[t % m][t % r] = p;
                    } else {
                        let spread = p * (1.0 + 0.25 * rng.random::<f64>()) / (m * r) as f64;
                        for mach in opt.iter_mut() {
                            mach.iter_mut().for_each(|v| *v = spread);
                        }
                    }
                }
                Family::StochasticBandit => unreachable!("rejected by validate"),
            }
        }
        jobs.push(job);
    }
    let refs: Vec<&str> = inner.iter().map(String::as_str).collect();
    LbInstance::vector(&refs, m, jobs)
}

fn gen_bandit(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Result<BanditInstance> {
    let knapsack = spec.problem == Problem::Bwk;
    let (n, d) = (spec.n, spec.d);
    let cols = if knapsack { n + 1 } else { n };
    let means: Vec<f64> = spec
        .means
        .clone()
        .unwrap_or_else(|| (0..n).map(|_| rng.random::<f64>()).collect());
    let cost_means: Vec<Vec<f64>> = spec.cost_means.clone().unwrap_or_else(|| {
        (0..n)
            .map(|_| (0..d).map(|_| spec.scale * rng.random::<f64>()).collect())
            .collect()
    });
    let bern = |p: f64| Bernoulli::new(p).map_err(|e| Error::InvalidInput(e.to_string()));
    let reward_dists = means.iter().map(|p| bern(*p)).collect::<Result<Vec<_>>>()?;
    let cost_dists = cost_means
        .iter()
        .map(|row| row.iter().map(|p| bern(*p)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let mut rounds = Vec::with_capacity(spec.t);
    for t in 0..spec.t {
        let mut c = vec![vec![0.0; cols]; d];
        let mut r = vec![0.0; cols];
        for a in 0..n {
            match spec.family {
                Family::UniformRandom => {
                    r[a] = rng.random::<f64>();
                    for row in c.iter_mut() {
                        row[a] = spec.scale * rng.random::<f64>();
                    }
                }
                Family::Diagonal => {
                    r[a] = rng.random::<f64>();
                    c[a % d][a] = spec.scale * rng.random::<f64>();
                }
                Family::SpikeAdversarial => {
                    r[a] = rng.random::<f64>();
                    if a == 0 {
                        c[t % d][a] = spec.scale;
                    } else {
                        let spread = spec.scale * rng.random::<f64>() / d as f64;
                        c.iter_mut().for_each(|row| row[a] = spread);
                    }
                }
                Family::StochasticBandit => {
                    r[a] = if reward_dists[a].sample(rng) { 1.0 } else { 0.0 };
                    for (i, row) in c.iter_mut().enumerate() {
                        row[a] = if cost_dists[a][i].sample(rng) { 1.0 } else { 0.0 };
                    }
                }
            }
        }
        rounds.push(BanditRound {
            r: knapsack.then_some(r),
            costs: JobMatrix::new(c)?,
        });
    }
    if knapsack {
        let budget = spec.budget.unwrap_or(spec.t as f64 / 4.0);
        BanditInstance::new(&spec.norm, d, rounds, Some(budget), Some(n))
    } else {
        BanditInstance::new(&spec.norm, d, rounds, None, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_square_loads_one_machine_per_option() {
        let spec = GeneratorSpec {
            family: Family::Diagonal,
            m: 3,
            k: 3,
            t: 5,
            seed: 9,
            ..GeneratorSpec::default()
        };
        let inst = generate(&spec).unwrap().into_lb().unwrap();
        for job in &inst.jobs {
            for j in 0..3 {
                let col = job.column(j);
                assert_eq!(col.iter().filter(|v| **v > 0.0).count(), 1);
                assert!(col[j] > 0.0);
            }
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        for problem in [Problem::Lb, Problem::Vs, Problem::Bwk, Problem::Bvc] {
            let spec = GeneratorSpec {
                problem,
                r: 2,
                seed: 4,
                ..GeneratorSpec::default()
            };
            assert_eq!(generate(&spec).unwrap().to_jsonl(), generate(&spec).unwrap().to_jsonl());
            let other = GeneratorSpec { seed: 5, ..spec.clone() };
            assert_ne!(generate(&other).unwrap().to_jsonl(), generate(&spec).unwrap().to_jsonl());
        }
    }

    #[test]
    fn stochastic_knapsack_has_null_arm() {
        let spec = GeneratorSpec {
            family: Family::StochasticBandit,
            problem: Problem::Bwk,
            n: 2,
            d: 1,
            t: 50,
            means: Some(vec![0.7, 0.5]),
            cost_means: Some(vec![vec![0.5], vec![0.0]]),
            ..GeneratorSpec::default()
        };
        let inst = generate(&spec).unwrap().into_bandit().unwrap();
        assert_eq!(inst.actions(), 3);
        assert_eq!(inst.null_action, Some(2));
        assert_eq!(inst.budget, Some(12.5));
        assert_eq!(inst.total_cost()[0][1], 0.0);
    }

    #[test]
    fn rejects_bad_specs() {
        let zero = GeneratorSpec { m: 0, ..GeneratorSpec::default() };
        assert!(generate(&zero).is_err());
        let scale = GeneratorSpec { scale: 0.0, ..GeneratorSpec::default() };
        assert!(generate(&scale).is_err());
        let huge = GeneratorSpec { m: 10_000, k: 100, t: 1000, ..GeneratorSpec::default() };
        assert!(matches!(generate(&huge), Err(Error::CapExceeded { .. })));
        let wrong = GeneratorSpec { family: Family::StochasticBandit, ..GeneratorSpec::default() };
        assert!(generate(&wrong).is_err());
    }

    #[test]
    fn spec_parses_from_json() {
        let s: GeneratorSpec =
            serde_json::from_str(r#"{"family":"spike-adversarial","problem":"lb","m":4,"T":6}"#).unwrap();
        assert_eq!(s.family, Family::SpikeAdversarial);
        assert_eq!((s.m, s.t, s.k), (4, 6, 2));
    }
}
