//! Constrained online convex optimization through a time-varying potential.
//!
//! Costs and constraints are rescaled by `alpha = 1 / (2 G D)` and the
//! constraint is clipped at zero. The clipped constraint feeds a virtual
//! queue `Q`, and the base learner sees the surrogate gradient
//! `grad f~ + Phi'_t(Q) grad g~`.

mod anytime;
mod doubling;
mod dynamic;
mod optimistic;
mod problem;

pub use anytime::AnytimePolicy;
pub use doubling::DoublingPolicy;
pub use dynamic::DynamicPolicy;
pub use optimistic::OptimisticPolicy;
pub use problem::{
    preprocess, surrogate_gradient, CocoPolicy, Comparator, ComparatorSolver, ProblemSpec, Round,
    RoundRecord,
};
