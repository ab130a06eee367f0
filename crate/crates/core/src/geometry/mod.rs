//! Points, decision sets, and convex function oracles.

mod function;
mod minnorm;
mod set;

pub use function::{
    subgrad_check, Affine, ConvexFn, FeasibleSet, HalfSquaredDistance, Oracle, PositivePart, Scaled,
};
pub use minnorm::{min_norm_projection, MinNormProjection};
pub use set::{DecisionSet, SetKind, VertexHull, MEMBERSHIP_TOL};

/// A point of the decision space.
pub type Point = Vec<f64>;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `x + scale * d`.
pub fn add_scaled(x: &[f64], scale: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + scale * b).collect()
}

/// `y += scale * x`, in place.
pub fn axpy(y: &mut [f64], scale: f64, x: &[f64]) {
    for (a, b) in y.iter_mut().zip(x) {
        *a += scale * b;
    }
}

pub fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}
