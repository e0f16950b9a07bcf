//! Composition trees of approximators.
//!
//! A [`CompositionNode`] is either a scaled leaf approximator reading a
//! subset of the input coordinates, or an outer approximator applied to the
//! vector of its children's values. Gradients follow the chain rule.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    assert_dim, shifted_lp::ShiftedLp, softmax::Softmax, topk::GsTopK, ApproxMeta, Estimate,
    GsApproximator, KSampling, TopKGsConfig,
};
use crate::error::{Error, Result};
use crate::norm::{ones_profile, NormKind, NormSpec, OnesProfile};
use crate::seed;

/// Gradient means and their standard errors.
type GradEstimate = (Vec<f64>, Vec<f64>);

#[derive(Clone)]
pub enum CompositionNode {
    Leaf {
        approx: Arc<dyn GsApproximator>,
        /// Input coordinates read by the leaf, in the leaf's own order.
        coords: Vec<usize>,
        scale: f64,
    },
    Outer {
        outer: Arc<dyn GsApproximator>,
        children: Vec<CompositionNode>,
    },
}

impl std::fmt::Debug for CompositionNode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CompositionNode::Leaf { coords, scale, approx } => f
                .debug_struct("Leaf")
                .field("dim", &approx.dim())
                .field("coords", &coords.len())
                .field("scale", scale)
                .finish(),
            CompositionNode::Outer { children, .. } => {
                f.debug_struct("Outer").field("children", children).finish()
            }
        }
    }
}

impl CompositionNode {
    /// A leaf reading coordinates `0..approx.dim()`.
    pub fn leaf(approx: Arc<dyn GsApproximator>, scale: f64) -> Self {
        let coords = (0..approx.dim()).collect();
        CompositionNode::Leaf {
            approx,
            coords,
            scale,
        }
    }

    /// Checks arities, scales and coordinate ranges against input dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            CompositionNode::Leaf {
                approx,
                coords,
                scale,
            } => {
                if !(*scale > 0.0 && scale.is_finite()) {
                    return Err(Error::InvalidSpec(format!("leaf scale {scale} is not > 0")));
                }
                if coords.len() != approx.dim() {
                    return Err(Error::InvalidSpec(format!(
                        "leaf reads {} coordinates but its approximator has dimension {}",
                        coords.len(),
                        approx.dim()
                    )));
                }
                if let Some(c) = coords.iter().find(|c| **c >= dim) {
                    return Err(Error::InvalidSpec(format!(
                        "leaf coordinate {c} outside input dimension {dim}"
                    )));
                }
                Ok(())
            }
            CompositionNode::Outer { outer, children } => {
                if children.is_empty() || children.len() != outer.dim() {
                    return Err(Error::InvalidSpec(format!(
                        "outer approximator of dimension {} over {} children",
                        outer.dim(),
                        children.len()
                    )));
                }
                children.iter().try_for_each(|c| c.validate(dim))
            }
        }
    }

    fn is_stochastic(&self) -> bool {
        match self {
            CompositionNode::Leaf { approx, .. } => approx.meta().stochastic,
            CompositionNode::Outer { outer, children } => {
                outer.meta().stochastic || children.iter().any(|c| c.is_stochastic())
            }
        }
    }

    /// Value, its standard error, and optionally the gradient with per-entry
    /// standard errors (delta method, outer noise ignored).
    fn eval(&self, x: &[f64], want_grad: bool) -> (Estimate, Option<GradEstimate>) {
        match self {
            CompositionNode::Leaf {
                approx,
                coords,
                scale,
            } => {
                let sub: Vec<f64> = coords.iter().map(|&c| x[c]).collect();
                let v = approx.value_estimate(&sub);
                let est = Estimate {
                    mean: scale * v.mean,
                    se: scale * v.se,
                };
                let grad = want_grad.then(|| {
                    let (g, se) = approx.gradient_estimate(&sub);
                    let mut gx = vec![0.0; x.len()];
                    let mut sx = vec![0.0; x.len()];
                    for (j, &c) in coords.iter().enumerate() {
                        gx[c] += scale * g[j];
                        sx[c] = (sx[c] * sx[c] + (scale * se[j]).powi(2)).sqrt();
                    }
                    (gx, sx)
                });
                (est, grad)
            }
            CompositionNode::Outer { outer, children } => {
                let parts: Vec<_> = children.iter().map(|c| c.eval(x, want_grad)).collect();
                let inner: Vec<f64> = parts.iter().map(|(e, _)| e.mean).collect();
                let v = outer.value_estimate(&inner);
                let go = outer.gradient(&inner);
                let child_var: f64 = parts
                    .iter()
                    .zip(&go)
                    .map(|((e, _), g)| (g * e.se).powi(2))
                    .sum();
                let est = Estimate {
                    mean: v.mean,
                    se: (v.se * v.se + child_var).sqrt(),
                };
                let grad = want_grad.then(|| {
                    let mut gx = vec![0.0; x.len()];
                    let mut vx = vec![0.0; x.len()];
                    for ((_, cg), w) in parts.iter().zip(&go) {
                        let (g, s) = cg.as_ref().expect("child gradients requested");
                        for i in 0..x.len() {
                            gx[i] += w * g[i];
                            vx[i] += (w * s[i]).powi(2);
                        }
                    }
                    (gx, vx.into_iter().map(f64::sqrt).collect())
                });
                (est, grad)
            }
        }
    }
}

/// Recursive value of `node` at `x`.
pub fn compose_value(node: &CompositionNode, x: &[f64]) -> Result<f64> {
    node.validate(x.len())?;
    Ok(node.eval(x, false).0.mean)
}

/// Chain-rule gradient of `node` at `x`.
pub fn compose_grad(node: &CompositionNode, x: &[f64]) -> Result<Vec<f64>> {
    node.validate(x.len())?;
    Ok(node.eval(x, true).1.expect("gradient requested").0)
}

/// A validated composition tree with declared constants.
#[derive(Clone, Debug)]
pub struct Composition {
    root: CompositionNode,
    dim: usize,
    meta: ApproxMeta,
}

impl Composition {
    /// Wraps `root` as an approximator on `ℝ₊^dim`. The caller declares the
    /// constants; the builders below derive them from the composition rule.
    pub fn new(root: CompositionNode, dim: usize, mut meta: ApproxMeta) -> Result<Self> {
        root.validate(dim)?;
        meta.stochastic = root.is_stochastic();
        Ok(Self { root, dim, meta })
    }

    pub fn root(&self) -> &CompositionNode {
        &self.root
    }
}

impl GsApproximator for Composition {
    fn dim(&self) -> usize {
        self.dim
    }

    fn meta(&self) -> ApproxMeta {
        self.meta
    }

    fn value(&self, x: &[f64]) -> f64 {
        assert_dim(self.dim, x);
        self.root.eval(x, false).0.mean
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        assert_dim(self.dim, x);
        self.root.eval(x, true).1.expect("gradient requested").0
    }

    fn value_estimate(&self, x: &[f64]) -> Estimate {
        assert_dim(self.dim, x);
        self.root.eval(x, false).0
    }

    fn gradient_estimate(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        assert_dim(self.dim, x);
        self.root.eval(x, true).1.expect("gradient requested")
    }
}

/// How inner norms of a nested objective are approximated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerApprox {
    /// [`symmetric_gs_build`] of the inner norm's ones profile.
    #[default]
    Symmetric,
    /// Shifted ℓp; requires every inner norm to be ℓp or ℓ∞.
    ShiftedLp,
}

/// Approximates the symmetric norm with ones profile `profile` by a softmax
/// over `L = ⌊log₂ d⌋ + 1` randomized top-`2^j` leaves.
///
/// Leaf `j` is built at `ε·a_j/2` with `a_j = c_{2^j}/2^j` and scaled by
/// `L·a_j`, which makes the largest leaf dominate the norm; the outer
/// softmax runs at `ε/(2L·max α_j)`.
pub fn symmetric_gs_build(
    profile: &OnesProfile,
    epsilon: f64,
    samples: usize,
    seed: u64,
) -> Result<Composition> {
    symmetric_gs_build_with(profile, epsilon, samples, seed, KSampling::Integrated)
}

pub fn symmetric_gs_build_with(
    profile: &OnesProfile,
    epsilon: f64,
    samples: usize,
    seed: u64,
    k_sampling: KSampling,
) -> Result<Composition> {
    if (profile.get(1) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "profile not normalized: c₁ = {}",
            profile.get(1)
        )));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidInput(format!("ε must be > 0, got {epsilon}")));
    }
    let d = profile.dim();
    let levels = (usize::BITS - 1 - d.leading_zeros()) as usize + 1;
    let lf = levels as f64;
    let mut leaves = Vec::with_capacity(levels);
    let mut metas = Vec::with_capacity(levels);
    for j in 0..levels {
        let k = 1usize << j;
        let a = profile.get(k) / k as f64;
        let cfg = TopKGsConfig::new(d, k, epsilon * a / 2.0)
            .samples(samples)
            .seed(seed::derive(seed, "leaf", j as u64))
            .k_sampling(k_sampling);
        let leaf = GsTopK::new(cfg)?;
        metas.push(leaf.meta());
        leaves.push(CompositionNode::leaf(Arc::new(leaf), lf * a));
    }
    let alpha_max = metas.iter().map(|m| m.alpha).fold(1.0, f64::max);
    let gamma_max = metas.iter().map(|m| m.gamma).fold(0.0, f64::max);
    let delta = metas.iter().map(|m| m.delta).fold(0.0, f64::max);
    let outer = Softmax::new(levels, epsilon / (2.0 * lf * alpha_max))?;
    let meta = ApproxMeta {
        epsilon,
        delta,
        alpha: lf * alpha_max,
        gamma: 2.0 * lf * (gamma_max + alpha_max * lf.ln()),
        stochastic: true,
        seed: Some(seed),
    };
    Composition::new(
        CompositionNode::Outer {
            outer: Arc::new(outer),
            children: leaves,
        },
        d,
        meta,
    )
}

fn inner_child(
    spec: &NormSpec,
    epsilon: f64,
    samples: usize,
    seed: u64,
    mode: InnerApprox,
) -> Result<(CompositionNode, ApproxMeta)> {
    match mode {
        InnerApprox::Symmetric => {
            let c = symmetric_gs_build(&ones_profile(spec)?, epsilon, samples, seed)?;
            let meta = c.meta();
            Ok((c.root, meta))
        }
        InnerApprox::ShiftedLp => {
            let p = match spec.kind() {
                NormKind::Lp(p) => *p,
                NormKind::LInf => f64::INFINITY,
                other => {
                    return Err(Error::InvalidSpec(format!(
                        "shifted ℓp inner approximation needs an ℓp norm, got {other}"
                    )))
                }
            };
            let m = spec.dim();
            let alpha = ShiftedLp::new(m, p, 1.0, m)?.meta().alpha;
            let a = ShiftedLp::new(m, p, epsilon / alpha, m)?;
            let meta = a.meta();
            Ok((CompositionNode::leaf(Arc::new(a), 1.0), meta))
        }
    }
}

/// Approximates `max_i ‖x_i‖_i` for `x` laid out resource-major in blocks of
/// `m` machines: a softmax over one child per resource, each built at `ε/2`.
/// With a single resource the child is built at `ε` with the master seed, so
/// the result coincides with the plain single-norm approximator.
pub fn nested_vs_build(
    inner: &[NormSpec],
    m: usize,
    epsilon: f64,
    samples: usize,
    seed: u64,
    mode: InnerApprox,
) -> Result<Composition> {
    let r = inner.len();
    if r == 0 || m == 0 {
        return Err(Error::InvalidInput("nested objective needs r, m ≥ 1".into()));
    }
    if let Some(s) = inner.iter().find(|s| s.dim() != m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: s.dim(),
        });
    }
    if r == 1 {
        let (node, meta) = inner_child(&inner[0], epsilon, samples, seed, mode)?;
        return Composition::new(node, m, meta);
    }
    let mut children = Vec::with_capacity(r);
    let mut metas = Vec::with_capacity(r);
    for (i, spec) in inner.iter().enumerate() {
        let (node, meta) = inner_child(
            spec,
            epsilon / 2.0,
            samples,
            seed::derive(seed, "nested", i as u64),
            mode,
        )?;
        children.push(shift_coords(node, i * m));
        metas.push(meta);
    }
    let alpha = metas.iter().map(|m| m.alpha).fold(1.0, f64::max);
    let gamma_max = metas.iter().map(|m| m.gamma).fold(0.0, f64::max);
    let delta = metas.iter().map(|m| m.delta).fold(0.0, f64::max);
    let outer = Softmax::new(r, epsilon / (2.0 * alpha))?;
    let meta = ApproxMeta {
        epsilon,
        delta,
        alpha,
        gamma: 2.0 * gamma_max + 2.0 * alpha * (r as f64).ln(),
        stochastic: false,
        seed: Some(seed),
    };
    Composition::new(
        CompositionNode::Outer {
            outer: Arc::new(outer),
            children,
        },
        m * r,
        meta,
    )
}

fn shift_coords(node: CompositionNode, offset: usize) -> CompositionNode {
    match node {
        CompositionNode::Leaf {
            approx,
            coords,
            scale,
        } => CompositionNode::Leaf {
            approx,
            coords: coords.into_iter().map(|c| c + offset).collect(),
            scale,
        },
        CompositionNode::Outer { outer, children } => CompositionNode::Outer {
            outer,
            children: children
                .into_iter()
                .map(|c| shift_coords(c, offset))
                .collect(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::ExactNorm;
    use crate::verify::finite_diff_grad;

    #[test]
    fn single_leaf_is_identity() {
        let sm: Arc<dyn GsApproximator> = Arc::new(Softmax::new(3, 0.7).unwrap());
        let node = CompositionNode::leaf(sm.clone(), 1.0);
        let x = [0.2, 1.5, 0.4];
        assert_eq!(compose_value(&node, &x).unwrap(), sm.value(&x));
        assert_eq!(compose_grad(&node, &x).unwrap(), sm.gradient(&x));
    }

    #[test]
    fn blocks_of_l1_have_constant_gradient() {
        let l1: Arc<dyn GsApproximator> = Arc::new(ExactNorm::new(NormSpec::l1(2), 1.0));
        let node = CompositionNode::Outer {
            outer: Arc::new(Softmax::new(2, 1.0).unwrap()),
            children: vec![
                CompositionNode::Leaf {
                    approx: l1.clone(),
                    coords: vec![0, 1],
                    scale: 1.0,
                },
                CompositionNode::Leaf {
                    approx: l1,
                    coords: vec![2, 3],
                    scale: 1.0,
                },
            ],
        };
        let x = [0.5, 2.0, 1.0, 0.25];
        let g = compose_grad(&node, &x).unwrap();
        assert_eq!(g[0], g[1]);
        assert_eq!(g[2], g[3]);
        let expect = Softmax::new(2, 1.0).unwrap().value(&[2.5, 1.25]);
        assert!((compose_value(&node, &x).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn malformed_trees_are_rejected() {
        let sm: Arc<dyn GsApproximator> = Arc::new(Softmax::new(2, 1.0).unwrap());
        let wrong_arity = CompositionNode::Outer {
            outer: sm.clone(),
            children: vec![CompositionNode::leaf(sm.clone(), 1.0)],
        };
        assert!(compose_value(&wrong_arity, &[1.0, 1.0]).is_err());
        let out_of_range = CompositionNode::Leaf {
            approx: sm.clone(),
            coords: vec![0, 5],
            scale: 1.0,
        };
        assert!(compose_value(&out_of_range, &[1.0, 1.0]).is_err());
        let bad_scale = CompositionNode::leaf(sm, 0.0);
        assert!(compose_value(&bad_scale, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn symmetric_build_shape() {
        let profile = ones_profile(&NormSpec::l1(16)).unwrap();
        let c = symmetric_gs_build(&profile, 1.0, 50, 3).unwrap();
        match c.root() {
            CompositionNode::Outer { children, .. } => {
                assert_eq!(children.len(), 5);
                for ch in children {
                    match ch {
                        CompositionNode::Leaf { scale, .. } => assert_eq!(*scale, 5.0),
                        _ => panic!("expected leaves"),
                    }
                }
            }
            _ => panic!("expected an outer node"),
        }
        assert!(c.meta().stochastic);
    }

    #[test]
    fn unnormalized_profile_is_rejected() {
        let ok = OnesProfile::new(vec![1.0, 1.5]).unwrap();
        assert!(symmetric_gs_build(&ok, 1.0, 10, 0).is_ok());
        let raw: OnesProfile = serde_json::from_str(r#"{"c":[2.0,3.0]}"#).unwrap();
        assert!(symmetric_gs_build(&raw, 1.0, 10, 0).is_err());
    }

    #[test]
    fn nested_single_resource_matches_symmetric() {
        let spec = NormSpec::linf(4);
        let a = nested_vs_build(std::slice::from_ref(&spec), 4, 0.5, 40, 9, InnerApprox::Symmetric).unwrap();
        let b = symmetric_gs_build(&ones_profile(&spec).unwrap(), 0.5, 40, 9).unwrap();
        let x = [0.3, 2.0, 1.0, 0.0];
        assert_eq!(a.value(&x), b.value(&x));
        assert_eq!(a.gradient(&x), b.gradient(&x));
    }

    #[test]
    fn nested_gradient_matches_finite_differences() {
        let inner = vec![NormSpec::lp(2.0, 4).unwrap(), NormSpec::linf(4)];
        let c = nested_vs_build(&inner, 4, 0.5, 1, 0, InnerApprox::ShiftedLp).unwrap();
        let x: Vec<f64> = (0..8).map(|i| 0.3 + 0.4 * i as f64).collect();
        let fd = finite_diff_grad(&|z: &[f64]| c.value(z), &x, 1e-5);
        for (a, b) in c.gradient(&x).iter().zip(&fd) {
            assert!((a - b).abs() < 1e-6 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn shifted_inner_requires_lp() {
        let inner = vec![NormSpec::top_k(2, 4).unwrap(), NormSpec::linf(4)];
        assert!(nested_vs_build(&inner, 4, 1.0, 1, 0, InnerApprox::ShiftedLp).is_err());
    }
}
