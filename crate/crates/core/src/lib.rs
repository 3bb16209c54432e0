//! Deterministic global optimization of problems with embedded feed-forward
//! neural networks.
//!
//! The solver works in reduced space: only the network inputs are
//! optimization variables, and the networks are evaluated rather than
//! modeled as equality constraints. Lower bounds come from McCormick
//! relaxations propagated through the networks, using the convex and
//! concave envelopes of `tanh` (and of the logistic function through
//! `tanh`) for the activations.
//!
//! The numeric core ([`Interval`], [`McCormick`], [`Dual`], [`Mlp`]) is
//! generic over the floating-point type; the aliases at the crate root fix
//! it to `f64` or `f32`. Problems, the branch-and-bound solver and training
//! work in `f64`.

pub mod bnb;
pub mod dual;
pub mod error;
pub mod expr;
pub mod interval;
pub mod localopt;
pub mod lp;
pub mod mlp;
pub mod problem;
pub mod relax;
pub mod scalar;
pub mod train;

pub use dual::Dual;
pub use error::{Error, Result};
pub use interval::Interval;
pub use mlp::{Activation, Layer, Mlp, Scaling};
pub use relax::{ActivationMode, McCormick, Reformulation, TangentPoints, TanhEnvelope};
pub use scalar::{Arith, Real};

pub type Interval64 = Interval<f64>;
pub type Interval32 = Interval<f32>;
pub type McCormick64 = McCormick<f64>;
pub type McCormick32 = McCormick<f32>;
pub type Dual64 = Dual<f64>;
pub type Dual32 = Dual<f32>;
pub type Mlp64 = Mlp<f64>;
pub type Mlp32 = Mlp<f32>;
