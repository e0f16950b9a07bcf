use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seed;

/// EXP3 with uniform exploration, kept in log-weights.
#[derive(Debug, Clone)]
pub struct Exp3State {
    log_w: Vec<f64>,
    eta: f64,
    phi: f64,
    rounds: u64,
    rng: ChaCha8Rng,
}

impl Exp3State {
    /// Textbook tuning for horizon `T`: `η = √(ln n/(T n))`,
    /// `φ = min(1, √(n ln n/T))`.
    pub fn new(n: usize, horizon: usize, seed: u64) -> Result<Self> {
        let (nf, tf) = (n as f64, horizon.max(1) as f64);
        let ln = nf.ln();
        Self::with_params(n, (ln / (tf * nf)).sqrt(), (nf * ln / tf).sqrt().min(1.0), seed)
    }

    pub fn with_params(n: usize, eta: f64, phi: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("EXP3 needs at least one action".into()));
        }
        if !(eta >= 0.0 && eta.is_finite()) || !(0.0..=1.0).contains(&phi) {
            return Err(Error::InvalidInput(format!("invalid EXP3 parameters η = {eta}, φ = {phi}")));
        }
        Ok(Self {
            log_w: vec![0.0; n],
            eta,
            phi,
            rounds: 0,
            rng: seed::rng(seed, "exp3", 0),
        })
    }

    pub fn actions(&self) -> usize {
        self.log_w.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// `(1−φ)·w/Σw + φ/n`.
    pub fn probabilities(&self) -> Vec<f64> {
        let n = self.log_w.len() as f64;
        let m = self.log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = self.log_w.iter().map(|l| (l - m).exp()).collect();
        let s: f64 = w.iter().sum();
        w.iter()
            .map(|v| (1.0 - self.phi) * v / s + self.phi / n)
            .collect()
    }

    /// Draws an action; returns it with the probability it had.
    pub fn sample(&mut self) -> (usize, f64) {
        let p = self.probabilities();
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        for (a, pa) in p.iter().enumerate() {
            acc += pa;
            if u < acc {
                return (a, *pa);
            }
        }
        let last = p.len() - 1;
        (last, p[last])
    }

    /// Importance-weighted update `w_a ← w_a·exp(−η·loss/p_a)`.
    pub fn update(&mut self, action: usize, prob: f64, loss: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&loss) {
            return Err(Error::Contract(format!("EXP3 loss {loss} outside [0, 1]")));
        }
        if !(prob > 0.0 && prob <= 1.0) || action >= self.log_w.len() {
            return Err(Error::Contract(format!(
                "EXP3 update for action {action} with probability {prob}"
            )));
        }
        self.log_w[action] -= self.eta * loss / prob;
        self.rounds += 1;
        Ok(())
    }
}

/// Free-function form of [`Exp3State::sample`].
pub fn exp3_sample(state: &mut Exp3State) -> (usize, f64) {
    state.sample()
}

/// Free-function form of [`Exp3State::update`].
pub fn exp3_update(state: &mut Exp3State, action: usize, prob: f64, loss: f64) -> Result<()> {
    state.update(action, prob, loss)
}
