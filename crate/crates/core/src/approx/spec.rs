//! Grammar: `softmax` | `slp:<p>` | `gstopk:<k>` | `sym` | `nested:<r>` | `exact`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    nested_vs_build, symmetric_gs_build_with, ExactNorm, GsApproximator, GsTopK, InnerApprox,
    KSampling, ShiftedLp, Softmax, TopKGsConfig, DEFAULT_RUN_SAMPLES,
};
use crate::error::{Error, Result};
use crate::norm::{ones_profile, NormKind, NormSpec, Objective};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ApproxSpec {
    Softmax,
    ShiftedLp(f64),
    GsTopK(usize),
    Symmetric,
    Nested(usize),
    Exact,
}

/// Parameters shared by every approximator build.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub epsilon: f64,
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub inner: InnerApprox,
    #[serde(default)]
    pub k_sampling: KSampling,
}

impl BuildOptions {
    pub fn new(epsilon: f64, samples: usize, seed: u64) -> Self {
        Self {
            epsilon,
            samples,
            seed,
            inner: InnerApprox::Symmetric,
            k_sampling: KSampling::Integrated,
        }
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Self { epsilon, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self::new(1.0, DEFAULT_RUN_SAMPLES, 0)
    }
}

impl fmt::Display for ApproxSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApproxSpec::Softmax => write!(f, "softmax"),
            ApproxSpec::ShiftedLp(p) if p.is_infinite() => write!(f, "slp:inf"),
            ApproxSpec::ShiftedLp(p) => write!(f, "slp:{p}"),
            ApproxSpec::GsTopK(k) => write!(f, "gstopk:{k}"),
            ApproxSpec::Symmetric => write!(f, "sym"),
            ApproxSpec::Nested(r) => write!(f, "nested:{r}"),
            ApproxSpec::Exact => write!(f, "exact"),
        }
    }
}

impl FromStr for ApproxSpec {
    type Err = Error;

    fn from_str(input: &str) -> Result<Self> {
        let s = input.trim();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let arg_pos = head.len() + 1;
        let err = |pos: usize, what: &str| Error::Parse {
            pos,
            expected: what.to_string(),
        };
        let no_arg = |spec: ApproxSpec| match arg {
            None => Ok(spec),
            Some(_) => Err(err(head.len(), "end of input")),
        };
        let count = |what: &str| -> Result<usize> {
            arg.ok_or_else(|| err(head.len(), &format!("':' followed by {what}")))?
                .parse::<usize>()
                .ok()
                .filter(|v| *v >= 1)
                .ok_or_else(|| err(arg_pos, what))
        };
        match head {
            "softmax" => no_arg(ApproxSpec::Softmax),
            "sym" => no_arg(ApproxSpec::Symmetric),
            "exact" => no_arg(ApproxSpec::Exact),
            "slp" => {
                let a = arg.ok_or_else(|| err(head.len(), "':' followed by p ≥ 1"))?;
                let p = if a == "inf" {
                    f64::INFINITY
                } else {
                    a.parse::<f64>().map_err(|_| err(arg_pos, "p ≥ 1"))?
                };
                if !(p >= 1.0) {
                    return Err(err(arg_pos, "p ≥ 1"));
                }
                Ok(ApproxSpec::ShiftedLp(p))
            }
            "gstopk" => Ok(ApproxSpec::GsTopK(count("a positive integer k")?)),
            "nested" => Ok(ApproxSpec::Nested(count("a positive integer r")?)),
            _ => Err(err(0, "one of softmax, slp, gstopk, sym, nested, exact")),
        }
    }
}

impl Serialize for ApproxSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ApproxSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn mismatch(spec: ApproxSpec, target: impl fmt::Display) -> Error {
    Error::InvalidSpec(format!("approximator {spec} does not approximate {target}"))
}

impl ApproxSpec {
    /// Builds the approximator for `objective`, checking that the family
    /// matches the norm it is meant to approximate.
    pub fn build(&self, objective: &Objective, opts: &BuildOptions) -> Result<Arc<dyn GsApproximator>> {
        let spec = *self;
        let norm = match objective {
            Objective::Norm(n) => n,
            Objective::Nested { machines, inner } => {
                return match spec {
                    ApproxSpec::Symmetric => self.nested(inner, *machines, opts),
                    ApproxSpec::Nested(r) if r == inner.len() => self.nested(inner, *machines, opts),
                    ApproxSpec::Nested(r) => Err(Error::InvalidSpec(format!(
                        "nested:{r} for an objective with {} resources",
                        inner.len()
                    ))),
                    _ if inner.len() == 1 => spec.build(&Objective::Norm(inner[0].clone()), opts),
                    _ => Err(Error::InvalidSpec(format!(
                        "approximator {spec} cannot approximate a nested objective"
                    ))),
                };
            }
        };
        let d = norm.dim();
        let out: Arc<dyn GsApproximator> = match spec {
            ApproxSpec::Softmax => match norm.kind() {
                NormKind::LInf | NormKind::TopK(1) => Arc::new(Softmax::new(d, opts.epsilon)?),
                _ => return Err(mismatch(spec, norm)),
            },
            ApproxSpec::ShiftedLp(p) => {
                let ok = match norm.kind() {
                    NormKind::Lp(q) => *q == p,
                    NormKind::LInf => p.is_infinite(),
                    _ => false,
                };
                if !ok {
                    return Err(mismatch(spec, norm));
                }
                Arc::new(ShiftedLp::new(d, p, opts.epsilon, d)?)
            }
            ApproxSpec::GsTopK(k) => {
                let ok = match norm.kind() {
                    NormKind::TopK(j) => *j == k,
                    NormKind::LInf => k == 1,
                    NormKind::Lp(p) => *p == 1.0 && k == d,
                    _ => false,
                };
                if !ok {
                    return Err(mismatch(spec, norm));
                }
                let cfg = TopKGsConfig::new(d, k, opts.epsilon)
                    .samples(opts.samples)
                    .seed(opts.seed)
                    .k_sampling(opts.k_sampling);
                Arc::new(GsTopK::new(cfg)?)
            }
            ApproxSpec::Symmetric => Arc::new(symmetric_gs_build_with(
                &ones_profile(norm)?,
                opts.epsilon,
                opts.samples,
                opts.seed,
                opts.k_sampling,
            )?),
            ApproxSpec::Nested(1) => self.nested(std::slice::from_ref(norm), d, opts)?,
            ApproxSpec::Nested(r) => {
                return Err(Error::InvalidSpec(format!(
                    "nested:{r} needs a vector-scheduling objective"
                )))
            }
            ApproxSpec::Exact => Arc::new(ExactNorm::new(norm.clone(), opts.epsilon)),
        };
        Ok(out)
    }

    fn nested(&self, inner: &[NormSpec], m: usize, opts: &BuildOptions) -> Result<Arc<dyn GsApproximator>> {
        Ok(Arc::new(nested_vs_build(
            inner,
            m,
            opts.epsilon,
            opts.samples,
            opts.seed,
            opts.inner,
        )?))
    }
}
