//! Randomized top-k smoothing: `Ψ(x) = E_{K,ν} ‖x + ν‖_{top-K}`.
//!
//! Noise coordinates are i.i.d. exponential with mean `1/(kε)`. The rank
//! parameter is `min(K, d)` with `K ~ Geometric(1/k)` on `{1, 2, …}`, so a
//! coordinate at (0-based) rank `r` of `x + ν` belongs to the top-K set with
//! probability exactly `q^r`, `q = 1 − 1/k`. Moving a coordinate down one
//! rank therefore costs a factor of at most `q` in its partial derivative.
//!
//! Two estimators of the same expectation are provided:
//!
//! * [`KSampling::Integrated`] averages over `ν` only and integrates `K` in
//!   closed form; each sample is then the ordered norm of `x + ν` with
//!   weights `q^r`. The realized function is exactly monotone, convex and
//!   subadditive, and `κ·Ψ ≥ ‖x‖_{top-k}` holds for every sample set.
//! * [`KSampling::Sampled`] draws `(K, ν)` pairs, the textbook estimator.
//!
//! Both freeze their samples at construction (common random numbers).

use rand_distr::{Distribution, Exp, Geometric};
use serde::{Deserialize, Serialize};

use super::{assert_dim, ApproxMeta, Estimate, GsApproximator, DEFAULT_RUN_SAMPLES};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KSampling {
    #[default]
    Integrated,
    Sampled,
}

/// Declared stability slack of the top-k construction.
pub const TOPK_DELTA: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKGsConfig {
    pub dim: usize,
    pub k: usize,
    pub epsilon: f64,
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub k_sampling: KSampling,
}

impl TopKGsConfig {
    pub fn new(dim: usize, k: usize, epsilon: f64) -> Self {
        Self {
            dim,
            k,
            epsilon,
            samples: DEFAULT_RUN_SAMPLES,
            seed: 0,
            k_sampling: KSampling::Integrated,
        }
    }

    pub fn samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn k_sampling(mut self, mode: KSampling) -> Self {
        self.k_sampling = mode;
        self
    }

    /// Mean of each noise coordinate, `1/(kε)`.
    pub fn noise_mean(&self) -> f64 {
        1.0 / (self.k as f64 * self.epsilon)
    }

    /// `q = 1 − 1/k`, the per-rank survival probability of `K`.
    pub fn rank_decay(&self) -> f64 {
        1.0 - 1.0 / self.k as f64
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.k == 0 || self.k > self.dim {
            return Err(Error::InvalidInput(format!(
                "top-k approximator needs 1 ≤ k ≤ d, got k = {}, d = {}",
                self.k, self.dim
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!("ε must be > 0, got {}", self.epsilon)));
        }
        if self.samples == 0 {
            return Err(Error::InvalidInput("sample count must be ≥ 1".into()));
        }
        Ok(())
    }
}

pub struct GsTopK {
    cfg: TopKGsConfig,
    /// `S × d`, row-major.
    noise: Vec<f64>,
    /// `min(K, d)` per sample; empty in integrated mode.
    ks: Vec<u32>,
    /// `q^r` for `r = 0..d`.
    rank_weights: Vec<f64>,
    kappa: f64,
    alpha: f64,
    raw_zero: f64,
}

impl std::fmt::Debug for GsTopK {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GsTopK").field("cfg", &self.cfg).finish_non_exhaustive()
    }
}

/// `(1/S)·Σ_s ‖x + ν^{(s)}‖_{top-K^{(s)}}` on the sample set fixed by `cfg`.
pub fn gs_topk_value(cfg: &TopKGsConfig, x: &[f64]) -> Result<f64> {
    let a = GsTopK::new(cfg.clone())?;
    crate::error::check_dim(a.dim(), x.len())?;
    Ok(a.raw_value(x))
}

/// Average top-K membership indicator of each coordinate of `x + ν`.
pub fn gs_topk_grad(cfg: &TopKGsConfig, x: &[f64]) -> Result<Vec<f64>> {
    let a = GsTopK::new(cfg.clone())?;
    crate::error::check_dim(a.dim(), x.len())?;
    Ok(a.raw_gradient(x))
}

/// Sort key: descending value, then ascending index. Entries are ≥ 0, where
/// the IEEE bit pattern is monotone in the value.
#[inline]
fn key(v: f64, i: usize) -> (u64, u32) {
    (!v.to_bits(), i as u32)
}

struct Scratch {
    z: Vec<f64>,
    keys: Vec<(u64, u32)>,
    rank: Vec<u32>,
}

impl Scratch {
    fn new(d: usize) -> Self {
        Self {
            z: vec![0.0; d],
            keys: Vec::with_capacity(d),
            rank: vec![0; d],
        }
    }

    /// Fills `z = x + ν` and its ranks.
    fn rank(&mut self, x: &[f64], nu: &[f64]) {
        for ((z, a), b) in self.z.iter_mut().zip(x).zip(nu) {
            *z = a + b;
        }
        self.rank_current();
    }

    fn rank_current(&mut self) {
        self.keys.clear();
        self.keys.extend(self.z.iter().enumerate().map(|(i, v)| key(*v, i)));
        self.keys.sort_unstable();
        self.fill_ranks();
    }

    /// Ranks the current `z` starting from the order of `base`; cheap when
    /// `z` is a small perturbation of the base point.
    fn rank_near(&mut self, base: &Scratch) {
        self.keys.clear();
        self.keys.extend(base.keys.iter().map(|&(_, i)| key(self.z[i as usize], i as usize)));
        for a in 1..self.keys.len() {
            let cur = self.keys[a];
            let mut b = a;
            while b > 0 && self.keys[b - 1] > cur {
                self.keys[b] = self.keys[b - 1];
                b -= 1;
            }
            self.keys[b] = cur;
        }
        self.fill_ranks();
    }

    fn fill_ranks(&mut self) {
        for (r, &(_, i)) in self.keys.iter().enumerate() {
            self.rank[i as usize] = r as u32;
        }
    }
}

impl GsTopK {
    pub fn new(cfg: TopKGsConfig) -> Result<Self> {
        cfg.validate()?;
        let (d, s) = (cfg.dim, cfg.samples);
        let exp = Exp::new(cfg.k as f64 * cfg.epsilon)
            .map_err(|e| Error::InvalidInput(format!("noise rate: {e}")))?;
        let mut rng = seed::rng(cfg.seed, "gstopk-noise", 0);
        let noise: Vec<f64> = (0..s * d).map(|_| exp.sample(&mut rng)).collect();

        let q = cfg.rank_decay();
        let rank_weights: Vec<f64> = (0..d).map(|r| q.powi(r as i32)).collect();
        let kappa = 1.0 / (1.0 - q.powi(cfg.k as i32));

        let (ks, alpha_raw) = match cfg.k_sampling {
            KSampling::Integrated => (Vec::new(), 1.0),
            KSampling::Sampled => {
                let geo = Geometric::new(1.0 / cfg.k as f64)
                    .map_err(|e| Error::InvalidInput(format!("rank distribution: {e}")))?;
                let mut rng = seed::rng(cfg.seed, "gstopk-k", 0);
                let ks: Vec<u32> = (0..s)
                    .map(|_| (geo.sample(&mut rng).saturating_add(1)).min(d as u64) as u32)
                    .collect();
                let k = cfg.k as f64;
                let a = ks.iter().map(|&kk| (kk as f64 / k).max(1.0)).sum::<f64>() / s as f64;
                (ks, a)
            }
        };

        let mut out = Self {
            cfg,
            noise,
            ks,
            rank_weights,
            kappa,
            alpha: kappa * alpha_raw,
            raw_zero: 0.0,
        };
        out.raw_zero = out.raw_value(&vec![0.0; d]);
        Ok(out)
    }

    pub fn config(&self) -> &TopKGsConfig {
        &self.cfg
    }

    /// Calibration factor `κ = 1/(1 − q^k)` applied by [`GsApproximator::value`]
    /// so that the surrogate dominates the top-k norm.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// The sampled `min(K, d)` values (empty in integrated mode).
    pub fn sampled_ranks(&self) -> &[u32] {
        &self.ks
    }

    /// `E[min(K, d)]` on this sample set: the exact sum of each raw gradient.
    pub fn mean_rank(&self) -> f64 {
        match self.cfg.k_sampling {
            KSampling::Integrated => self.rank_weights.iter().sum(),
            KSampling::Sampled => {
                self.ks.iter().map(|&k| k as f64).sum::<f64>() / self.ks.len() as f64
            }
        }
    }

    fn nu(&self, s: usize) -> &[f64] {
        let d = self.cfg.dim;
        &self.noise[s * d..(s + 1) * d]
    }

    #[inline]
    fn weight(&self, s: usize, r: usize) -> f64 {
        match self.cfg.k_sampling {
            KSampling::Integrated => self.rank_weights[r],
            KSampling::Sampled => {
                if r < self.ks[s] as usize {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn sample_values(&self, x: &[f64]) -> impl Iterator<Item = f64> + '_ {
        let d = self.cfg.dim;
        let mut z = vec![0.0; d];
        let x = x.to_vec();
        (0..self.cfg.samples).map(move |s| {
            for ((zi, a), b) in z.iter_mut().zip(&x).zip(self.nu(s)) {
                *zi = a + b;
            }
            z.sort_unstable_by(|a, b| b.total_cmp(a));
            match self.cfg.k_sampling {
                KSampling::Integrated => {
                    z.iter().zip(&self.rank_weights).map(|(a, w)| a * w).sum()
                }
                KSampling::Sampled => z[..self.ks[s] as usize].iter().sum(),
            }
        })
    }

    /// Uncalibrated sample average of `‖x + ν‖_{top-K}`.
    pub fn raw_value(&self, x: &[f64]) -> f64 {
        assert_dim(self.cfg.dim, x);
        self.sample_values(x).sum::<f64>() / self.cfg.samples as f64
    }

    fn raw_value_estimate(&self, x: &[f64]) -> Estimate {
        assert_dim(self.cfg.dim, x);
        let (mut s1, mut s2) = (0.0, 0.0);
        for v in self.sample_values(x) {
            s1 += v;
            s2 += v * v;
        }
        mean_se(s1, s2, self.cfg.samples)
    }

    /// Uncalibrated gradient: average top-K membership of each coordinate.
    pub fn raw_gradient(&self, x: &[f64]) -> Vec<f64> {
        self.raw_gradient_estimate(x).0
    }

    fn raw_gradient_estimate(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        assert_dim(self.cfg.dim, x);
        let d = self.cfg.dim;
        let mut s1 = vec![0.0; d];
        let mut s2 = vec![0.0; d];
        let mut sc = Scratch::new(d);
        for s in 0..self.cfg.samples {
            sc.rank(x, self.nu(s));
            for i in 0..d {
                let w = self.weight(s, sc.rank[i] as usize);
                s1[i] += w;
                s2[i] += w * w;
            }
        }
        let n = self.cfg.samples;
        s1.iter()
            .zip(&s2)
            .map(|(a, b)| {
                let e = mean_se(*a, *b, n);
                (e.mean, e.se)
            })
            .unzip()
    }
}

fn mean_se(s1: f64, s2: f64, n: usize) -> Estimate {
    let nf = n as f64;
    let mean = s1 / nf;
    let se = if n > 1 {
        ((s2 / nf - mean * mean).max(0.0) / (nf - 1.0)).sqrt()
    } else {
        0.0
    };
    Estimate { mean, se }
}

fn single_spike(y: &[f64]) -> Option<(usize, f64)> {
    let mut found = None;
    for (i, v) in y.iter().enumerate() {
        if *v != 0.0 {
            if found.is_some() {
                return None;
            }
            found = Some((i, *v));
        }
    }
    found
}

impl GsApproximator for GsTopK {
    fn dim(&self) -> usize {
        self.cfg.dim
    }

    fn meta(&self) -> ApproxMeta {
        ApproxMeta {
            epsilon: self.cfg.epsilon,
            delta: TOPK_DELTA,
            alpha: self.alpha,
            gamma: self.kappa * self.cfg.epsilon * self.raw_zero,
            stochastic: true,
            seed: Some(self.cfg.seed),
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.kappa * self.raw_value(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.raw_gradient(x);
        for v in &mut g {
            *v *= self.kappa;
        }
        g
    }

    fn value_estimate(&self, x: &[f64]) -> Estimate {
        let e = self.raw_value_estimate(x);
        Estimate {
            mean: self.kappa * e.mean,
            se: self.kappa * e.se,
        }
    }

    fn gradient_estimate(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (mut g, mut se) = self.raw_gradient_estimate(x);
        for v in g.iter_mut().chain(se.iter_mut()) {
            *v *= self.kappa;
        }
        (g, se)
    }

    /// Paired estimator: ranks of `x + ν` are computed once per sample and
    /// reused for every `y_b`; single-coordinate spikes update the ranks in
    /// `O(d)` instead of re-sorting.
    fn stability_gaps(&self, x: &[f64], ys: &[Vec<f64>], factors: &[f64]) -> Vec<Vec<Estimate>> {
        assert_dim(self.cfg.dim, x);
        let d = self.cfg.dim;
        let nb = ys.len();
        let spikes: Vec<Option<(usize, f64)>> = ys.iter().map(|y| single_spike(y)).collect();
        let mut s1 = vec![0.0; nb * d];
        let mut s2 = vec![0.0; nb * d];
        let mut base = Scratch::new(d);
        let mut moved = Scratch::new(d);
        for s in 0..self.cfg.samples {
            let nu = self.nu(s);
            base.rank(x, nu);
            for (b, y) in ys.iter().enumerate() {
                match spikes[b] {
                    Some((j, amount)) => {
                        let old = key(base.z[j], j);
                        let new = key(base.z[j] + amount, j);
                        let mut rj = 0u32;
                        for l in 0..d {
                            if l == j {
                                continue;
                            }
                            let kl = key(base.z[l], l);
                            let before = (old < kl) as i32;
                            let after = (new < kl) as i32;
                            moved.rank[l] = (base.rank[l] as i32 + after - before) as u32;
                            rj += (kl < new) as u32;
                        }
                        moved.rank[j] = rj;
                    }
                    None => {
                        for ((m, a), b) in moved.z.iter_mut().zip(&base.z).zip(y) {
                            *m = a + b;
                        }
                        moved.rank_near(&base);
                    }
                }
                let f = factors[b];
                let (s1, s2) = (&mut s1[b * d..(b + 1) * d], &mut s2[b * d..(b + 1) * d]);
                match self.cfg.k_sampling {
                    KSampling::Integrated => {
                        let w = &self.rank_weights;
                        for i in 0..d {
                            let diff = w[moved.rank[i] as usize] - f * w[base.rank[i] as usize];
                            s1[i] += diff;
                            s2[i] += diff * diff;
                        }
                    }
                    KSampling::Sampled => {
                        for i in 0..d {
                            let diff = self.weight(s, moved.rank[i] as usize)
                                - f * self.weight(s, base.rank[i] as usize);
                            s1[i] += diff;
                            s2[i] += diff * diff;
                        }
                    }
                }
            }
        }
        let n = self.cfg.samples;
        (0..nb)
            .map(|b| {
                (0..d)
                    .map(|i| {
                        let e = mean_se(s1[b * d + i], s2[b * d + i], n);
                        Estimate {
                            mean: self.kappa * e.mean,
                            se: self.kappa * e.se,
                        }
                    })
                    .collect()
            })
            .collect()
    }
}
