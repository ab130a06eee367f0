//! Anytime constrained online convex optimization.
//!
//! Each round the learner plays a point, then sees a convex cost `f_t` and a
//! convex constraint `g_t`. The goal is low regret against the best fixed
//! point that satisfies every constraint, together with low cumulative
//! constraint violation, at every round and without knowing the horizon.
//!
//! The library is split into:
//! - [`geometry`]: decision sets, projections and function oracles;
//! - [`lyapunov`]: the time-varying exponential potential and virtual queue;
//! - [`base`]: AdaGrad-style projected gradient descent and optimistic mirror
//!   descent;
//! - [`coco`]: the constrained meta-algorithms and baselines;
//! - [`shortest_path`]: the online routing environment;
//! - [`harness`]: benchmarks, adversaries, experiment runner and outputs.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod base;
pub mod coco;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod lyapunov;
pub mod shortest_path;

pub use error::{Error, Result};
