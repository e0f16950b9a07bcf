//! Monotone norms on the non-negative orthant.
//!
//! All built-in norms are symmetric. Values are computed exactly (Orlicz
//! norms up to a bisection tolerance of `1e-13` relative).

mod objective;
mod orlicz;
mod parse;

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

pub use objective::Objective;
pub use orlicz::Generator;
pub use parse::parse_norm_kind;

/// Value oracle for a norm given only through evaluations.
pub type ValueOracle = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A vector with non-negative finite entries and at least one coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct NonNegVector(Vec<f64>);

impl NonNegVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidInput("vector must have dimension ≥ 1".into()));
        }
        if let Some((i, v)) = entries
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidInput(format!(
                "entry {i} is {v}, expected a finite value ≥ 0"
            )));
        }
        Ok(Self(entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for NonNegVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for NonNegVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<NonNegVector> for Vec<f64> {
    fn from(v: NonNegVector) -> Self {
        v.0
    }
}

/// The family a norm belongs to, independent of its dimension.
#[derive(Clone)]
pub enum NormKind {
    LInf,
    /// `p ≥ 1`; `p = ∞` is folded into [`NormKind::LInf`] by the parser.
    Lp(f64),
    TopK(usize),
    /// Non-increasing, non-negative weights applied to the sorted entries.
    Ordered(Vec<f64>),
    Orlicz(Generator),
    /// A symmetric monotone norm known only through its value oracle.
    OracleSym(ValueOracle),
}

impl fmt::Debug for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormKind::LInf => write!(f, "linf"),
            NormKind::Lp(p) if *p == 1.0 => write!(f, "l1"),
            NormKind::Lp(p) => write!(f, "lp:{p}"),
            NormKind::TopK(k) => write!(f, "topk:{k}"),
            NormKind::Ordered(w) => {
                write!(f, "ordered:")?;
                for (i, v) in w.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}")?;
                }
                Ok(())
            }
            NormKind::Orlicz(g) => write!(f, "orlicz:{g}"),
            NormKind::OracleSym(_) => write!(f, "oracle"),
        }
    }
}

/// A norm of a fixed dimension.
///
/// `scale` multiplies every evaluation; it is `1` except after
/// [`NormSpec::normalized`] on Orlicz and oracle norms, where the weights
/// cannot be rescaled in place.
#[derive(Clone, Debug)]
pub struct NormSpec {
    kind: NormKind,
    dim: usize,
    scale: f64,
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)
    }
}

impl NormSpec {
    /// Validates `kind` for dimension `dim`. Ordered weights shorter than
    /// `dim` are padded with zeros.
    pub fn new(kind: NormKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpec("dimension must be ≥ 1".into()));
        }
        let kind = match kind {
            NormKind::Lp(p) if p.is_infinite() && p > 0.0 => NormKind::LInf,
            NormKind::Lp(p) if !(p >= 1.0) => {
                return Err(Error::InvalidSpec(format!("ℓp needs p ≥ 1, got {p}")))
            }
            NormKind::TopK(k) if k == 0 || k > dim => {
                return Err(Error::InvalidSpec(format!(
                    "top-k needs 1 ≤ k ≤ {dim}, got {k}"
                )))
            }
            NormKind::Ordered(mut w) => {
                if w.len() > dim {
                    return Err(Error::InvalidSpec(format!(
                        "{} ordered weights for dimension {dim}",
                        w.len()
                    )));
                }
                if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::InvalidSpec(
                        "ordered weights must be finite and ≥ 0".into(),
                    ));
                }
                if w.windows(2).any(|p| p[0] < p[1]) {
                    return Err(Error::InvalidSpec(
                        "ordered weights must be non-increasing".into(),
                    ));
                }
                if w.first().copied().unwrap_or(0.0) <= 0.0 {
                    return Err(Error::InvalidSpec("first ordered weight must be > 0".into()));
                }
                w.resize(dim, 0.0);
                NormKind::Ordered(w)
            }
            NormKind::Orlicz(g) => {
                g.validate()?;
                NormKind::Orlicz(g)
            }
            other => other,
        };
        Ok(Self {
            kind,
            dim,
            scale: 1.0,
        })
    }

    /// Parses the CLI grammar (`linf`, `l1`, `lp:<p>`, `topk:<k>`,
    /// `ordered:<w1>,...`, `orlicz:pow:<p>`) and normalizes the result.
    pub fn parse(s: &str, dim: usize) -> Result<Self> {
        Self::new(parse_norm_kind(s)?, dim)?.normalized()
    }

    pub fn linf(dim: usize) -> Self {
        Self::new(NormKind::LInf, dim).expect("valid dimension")
    }

    pub fn l1(dim: usize) -> Self {
        Self::new(NormKind::Lp(1.0), dim).expect("valid dimension")
    }

    pub fn lp(p: f64, dim: usize) -> Result<Self> {
        Self::new(NormKind::Lp(p), dim)
    }

    pub fn top_k(k: usize, dim: usize) -> Result<Self> {
        Self::new(NormKind::TopK(k), dim)
    }

    pub fn ordered(weights: Vec<f64>, dim: usize) -> Result<Self> {
        Self::new(NormKind::Ordered(weights), dim)
    }

    pub fn orlicz(generator: Generator, dim: usize) -> Result<Self> {
        Self::new(NormKind::Orlicz(generator), dim)
    }

    /// Wraps a value oracle. The oracle is trusted to be a monotone symmetric
    /// norm; [`ones_profile`] performs the only spot checks.
    pub fn oracle(oracle: ValueOracle, dim: usize) -> Result<Self> {
        Self::new(NormKind::OracleSym(oracle), dim)
    }

    pub fn kind(&self) -> &NormKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_symmetric(&self) -> bool {
        true
    }

    /// Evaluates the norm at `x` (entries assumed non-negative).
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let v = match &self.kind {
            NormKind::LInf => x.iter().copied().fold(0.0, f64::max),
            NormKind::Lp(p) => lp_value(x, *p),
            NormKind::TopK(k) => top_k_unchecked(x, *k),
            NormKind::Ordered(w) => {
                let sorted = sorted_desc(x);
                sorted.iter().zip(w).map(|(a, b)| a * b).sum()
            }
            NormKind::Orlicz(g) => g
                .norm(x)
                .expect("generator validated at construction"),
            NormKind::OracleSym(o) => o(x),
        };
        self.scale * v
    }

    /// A subgradient of the norm at `x`.
    ///
    /// Ties are resolved toward the lowest index, so for ℓ∞ the gradient at
    /// `(1−η, 1)` is `(0, 1)` and at `(1+η, 1)` is `(1, 0)`.
    pub fn subgradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        let d = self.dim;
        let mut g = vec![0.0; d];
        match &self.kind {
            NormKind::LInf => {
                g[argmax(x)] = 1.0;
            }
            NormKind::Lp(p) if *p == 1.0 => g.fill(1.0),
            NormKind::Lp(p) => {
                let n = lp_value(x, *p);
                if n > 0.0 {
                    for (gi, xi) in g.iter_mut().zip(x) {
                        *gi = (xi / n).powf(p - 1.0);
                    }
                }
            }
            NormKind::TopK(k) => {
                for &i in &sorted_order(x)[..*k] {
                    g[i] = 1.0;
                }
            }
            NormKind::Ordered(w) => {
                for (r, &i) in sorted_order(x).iter().enumerate() {
                    g[i] = w[r];
                }
            }
            NormKind::Orlicz(gen) => g = gen.gradient(x)?,
            NormKind::OracleSym(o) => {
                let f = |z: &[f64]| o(z);
                g = crate::verify::finite_diff_grad(&f, x, 1e-6 * (1.0 + o(x)));
                for v in &mut g {
                    *v = v.max(0.0);
                }
            }
        }
        for v in &mut g {
            *v *= self.scale;
        }
        Ok(g)
    }

    /// Returns an equivalent spec scaled so that `‖e₁‖ = 1`.
    pub fn normalized(&self) -> Result<Self> {
        let mut e1 = vec![0.0; self.dim];
        e1[0] = 1.0;
        let n = self.eval_unchecked(&e1);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "‖e₁‖ = {n}; not a norm"
            )));
        }
        let mut out = self.clone();
        match &mut out.kind {
            NormKind::Ordered(w) => {
                for v in w.iter_mut() {
                    *v /= n;
                }
            }
            NormKind::LInf | NormKind::Lp(_) | NormKind::TopK(_) => {}
            _ => out.scale /= n,
        }
        Ok(out)
    }

    /// `‖1‖`, the norm of the all-ones vector.
    pub fn ones_norm(&self) -> f64 {
        self.eval_unchecked(&vec![1.0; self.dim])
    }
}

/// Free-function form of [`NormSpec::eval`].
pub fn eval_norm(spec: &NormSpec, x: &[f64]) -> Result<f64> {
    spec.eval(x)
}

/// Free-function form of [`NormSpec::normalized`].
pub fn normalize_spec(spec: &NormSpec) -> Result<NormSpec> {
    spec.normalized()
}

/// Sum of the `k` largest entries of `x`.
pub fn top_k_norm(x: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k > x.len() {
        return Err(Error::OutOfRange {
            what: "k",
            detail: format!("need 1 ≤ k ≤ {}, got {k}", x.len()),
        });
    }
    Ok(top_k_unchecked(x, k))
}

fn top_k_unchecked(x: &[f64], k: usize) -> f64 {
    if k == 1 {
        return x.iter().copied().fold(0.0, f64::max);
    }
    let mut v = x.to_vec();
    if k < v.len() {
        v.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    }
    v[..k].iter().sum()
}

fn lp_value(x: &[f64], p: f64) -> f64 {
    if p == 1.0 {
        return x.iter().sum();
    }
    let m = x.iter().copied().fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = x.iter().map(|v| (v / m).powf(p)).sum();
    m * s.powf(1.0 / p)
}

fn argmax(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if *v > x[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn sorted_desc(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Indices of `x` by non-increasing value; ties keep index order.
pub(crate) fn sorted_order(x: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[b].total_cmp(&x[a]));
    idx
}

/// `c_k = ‖1^{(k)}‖ / ‖e₁‖` for `k = 1..d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnesProfile {
    c: Vec<f64>,
}

const PROFILE_TOL: f64 = 1e-9;

impl OnesProfile {
    /// Validates a profile: `c₁ = 1`, non-decreasing, `c_k / k` non-increasing.
    pub fn new(c: Vec<f64>) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::InvalidInput("empty profile".into()));
        }
        if (c[0] - 1.0).abs() > PROFILE_TOL {
            return Err(Error::InvalidInput(format!(
                "profile not normalized: c₁ = {}",
                c[0]
            )));
        }
        check_profile_shape(&c).map_err(Error::InvalidInput)?;
        Ok(Self { c })
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    /// `c_k` for `k ≥ 1`.
    pub fn get(&self, k: usize) -> f64 {
        self.c[k - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.c
    }
}

fn check_profile_shape(c: &[f64]) -> std::result::Result<(), String> {
    for k in 1..c.len() {
        let tol = PROFILE_TOL * c[k].abs().max(1.0);
        if c[k] + tol < c[k - 1] {
            return Err(format!("profile decreases at k = {}", k + 1));
        }
        if c[k] / (k + 1) as f64 > c[k - 1] / k as f64 + tol {
            return Err(format!("c_k / k increases at k = {}", k + 1));
        }
    }
    Ok(())
}

/// The ones-vector profile of a symmetric norm.
pub fn ones_profile(spec: &NormSpec) -> Result<OnesProfile> {
    let d = spec.dim;
    let mut x = vec![0.0; d];
    x[0] = 1.0;
    let base = spec.eval_unchecked(&x);
    if !(base.is_finite() && base > 0.0) {
        return Err(Error::InvalidSpec(format!("‖e₁‖ = {base}; not a norm")));
    }
    let mut c = Vec::with_capacity(d);
    c.push(1.0);
    for k in 2..=d {
        x[k - 1] = 1.0;
        c.push(spec.eval_unchecked(&x) / base);
    }
    if let Err(msg) = check_profile_shape(&c) {
        let msg = format!("{msg}; norm is not monotone symmetric");
        return Err(match spec.kind {
            NormKind::OracleSym(_) => Error::InvalidOracle(msg),
            _ => Error::InvalidSpec(msg),
        });
    }
    Ok(OnesProfile { c })
}
