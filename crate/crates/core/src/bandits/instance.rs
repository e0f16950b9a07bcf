use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lb::JobMatrix;
use crate::norm::NormSpec;

/// One round: rewards (knapsack problems only) and the `d × n` cost matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditRound {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    #[serde(rename = "C")]
    pub costs: JobMatrix,
}

#[derive(Debug, Clone)]
pub struct BanditInstance {
    pub norm: NormSpec,
    pub rounds: Vec<BanditRound>,
    pub budget: Option<f64>,
    pub null_action: Option<usize>,
    norm_text: String,
}

#[derive(Serialize, Deserialize)]
struct Header {
    n: usize,
    d: usize,
    #[serde(rename = "T")]
    t: usize,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    budget: Option<f64>,
    norm: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    null: Option<usize>,
}

fn in_unit(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

impl BanditInstance {
    /// Validates entries in `[0, 1]`, consistent shapes, and a zero-cost,
    /// zero-reward null action when one is declared.
    pub fn new(
        norm: &str,
        d: usize,
        rounds: Vec<BanditRound>,
        budget: Option<f64>,
        null_action: Option<usize>,
    ) -> Result<Self> {
        let spec = NormSpec::parse(norm, d)?;
        let n = rounds
            .first()
            .ok_or_else(|| Error::InvalidInput("instance needs T ≥ 1 rounds".into()))?
            .costs
            .options();
        for (t, round) in rounds.iter().enumerate() {
            let ctx = |msg: String| Error::InvalidInput(format!("round {}: {msg}", t + 1));
            if round.costs.rows() != d || round.costs.options() != n {
                return Err(ctx(format!(
                    "cost matrix is {}×{}, expected {d}×{n}",
                    round.costs.rows(),
                    round.costs.options()
                )));
            }
            if (0..d).any(|i| (0..n).any(|a| !in_unit(round.costs.get(i, a)))) {
                return Err(ctx("costs must lie in [0, 1]".into()));
            }
            if let Some(r) = &round.r {
                if r.len() != n || r.iter().any(|v| !in_unit(*v)) {
                    return Err(ctx(format!("rewards must be {n} values in [0, 1]")));
                }
            }
            if let Some(z) = null_action {
                if z >= n {
                    return Err(ctx(format!("null action {z} out of range")));
                }
                if (0..d).any(|i| round.costs.get(i, z) != 0.0)
                    || round.r.as_ref().is_some_and(|r| r[z] != 0.0)
                {
                    return Err(ctx("null action must have zero cost and zero reward".into()));
                }
            }
        }
        let with_rewards = rounds.iter().filter(|r| r.r.is_some()).count();
        if with_rewards != 0 && with_rewards != rounds.len() {
            return Err(Error::InvalidInput("rewards present on some rounds only".into()));
        }
        Ok(Self {
            norm: spec,
            rounds,
            budget,
            null_action,
            norm_text: norm.to_string(),
        })
    }

    pub fn actions(&self) -> usize {
        self.rounds[0].costs.options()
    }

    pub fn dim(&self) -> usize {
        self.norm.dim()
    }

    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }

    pub fn has_rewards(&self) -> bool {
        self.rounds[0].r.is_some()
    }

    /// `Σ_t C^{(t)}`, row-major `d × n`.
    pub fn total_cost(&self) -> Vec<Vec<f64>> {
        let (d, n) = (self.dim(), self.actions());
        let mut m = vec![vec![0.0; n]; d];
        for round in &self.rounds {
            for (i, row) in m.iter_mut().enumerate() {
                for (a, v) in row.iter_mut().enumerate() {
                    *v += round.costs.get(i, a);
                }
            }
        }
        m
    }

    /// `Σ_t r^{(t)}` (zeros without rewards).
    pub fn total_reward(&self) -> Vec<f64> {
        let mut r = vec![0.0; self.actions()];
        for round in &self.rounds {
            if let Some(rr) = &round.r {
                for (a, v) in r.iter_mut().zip(rr) {
                    *a += v;
                }
            }
        }
        r
    }

    pub fn read_jsonl(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let (_, head) = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("empty instance file".into()))?;
        let h: Header = serde_json::from_str(&head?).map_err(|e| Error::from(e).context("line 1"))?;
        let mut rounds = Vec::with_capacity(h.t);
        for (n, line) in lines {
            let round: BanditRound = serde_json::from_str(&line?)
                .map_err(|e| Error::from(e).context(format!("line {}", n + 1)))?;
            rounds.push(round);
        }
        if rounds.len() != h.t {
            return Err(Error::InvalidInput(format!(
                "header declares T = {} but the file has {} rounds",
                h.t,
                rounds.len()
            )));
        }
        let inst = Self::new(&h.norm, h.d, rounds, h.budget, h.null)?;
        if inst.actions() != h.n {
            return Err(Error::InvalidInput(format!(
                "cost matrices have {} actions, header declares n = {}",
                inst.actions(),
                h.n
            )));
        }
        Ok(inst)
    }

    pub fn to_jsonl(&self) -> String {
        let h = Header {
            n: self.actions(),
            d: self.dim(),
            t: self.horizon(),
            budget: self.budget,
            norm: self.norm_text.clone(),
            null: self.null_action,
        };
        let mut out = serde_json::to_string(&h).expect("header serializes");
        out.push('\n');
        for r in &self.rounds {
            out.push_str(&serde_json::to_string(r).expect("round serializes"));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round(r: Option<Vec<f64>>, c: Vec<Vec<f64>>) -> BanditRound {
        BanditRound {
            r,
            costs: JobMatrix::new(c).unwrap(),
        }
    }

    #[test]
    fn round_trip_and_validation() {
        let rounds = vec![
            round(Some(vec![0.5, 0.0]), vec![vec![1.0, 0.0], vec![0.25, 0.0]]),
            round(Some(vec![1.0, 0.0]), vec![vec![0.0, 0.0], vec![1.0, 0.0]]),
        ];
        let inst = BanditInstance::new("linf", 2, rounds.clone(), Some(3.0), Some(1)).unwrap();
        let text = inst.to_jsonl();
        let back = BanditInstance::read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(back.to_jsonl(), text);
        assert_eq!(back.total_reward(), vec![1.5, 0.0]);
        assert_eq!(back.total_cost(), vec![vec![1.0, 0.0], vec![1.25, 0.0]]);

        assert!(BanditInstance::new("linf", 2, rounds.clone(), Some(3.0), Some(0)).is_err());
        let too_big = vec![round(None, vec![vec![1.5, 0.0], vec![0.0, 0.0]])];
        assert!(BanditInstance::new("linf", 2, too_big, None, None).is_err());
    }
}
