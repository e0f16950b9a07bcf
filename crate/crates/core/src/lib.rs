//! Gradient-stable approximations of monotone norms.
//!
//! A gradient-stable approximation `Ψ_ε` of a norm `‖·‖` is a monotone,
//! subadditive, convex surrogate with
//!
//! * `∇Ψ_ε(x + y) ≥ exp(−ε‖y‖ − δ) · ∇Ψ_ε(x)` coordinate-wise, and
//! * `‖x‖ ≤ Ψ_ε(x) ≤ α‖x‖ + γ/ε`
//!
//! for all non-negative `x, y`. Such surrogates behave almost linearly, which
//! is what greedy online algorithms and linearized bandit algorithms need.
//!
//! Modules:
//!
//! * [`norm`]: monotone norms (ℓp, top-k, ordered, Orlicz, value oracles)
//!   and the text grammar used on the CLI.
//! * [`approx`]: the approximators and their composition trees.
//! * [`verify`]: empirical checkers for the defining inequalities.
//! * [`lb`]: greedy online load balancing and vector scheduling.
//! * [`bandits`]: EXP3 and the two budgeted bandit problems.
//! * [`harness`]: instance generators, file formats, experiment runner.

pub mod approx;
pub mod bandits;
pub mod error;
pub mod harness;
pub mod lb;
pub mod norm;
pub mod seed;
pub mod verify;

pub use approx::{ApproxMeta, Estimate, GsApproximator};
pub use error::{Error, Result};
pub use norm::{NonNegVector, NormKind, NormSpec, OnesProfile};
