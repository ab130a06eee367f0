use std::fmt::Debug;
use std::sync::Arc;

use super::{dot, norm, DecisionSet, MEMBERSHIP_TOL};

/// Value and subgradient access to one convex function.
///
/// Implementations must be pure: the same point always yields the same value
/// and subgradient.
pub trait ConvexFn: Debug + Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn subgradient(&self, x: &[f64]) -> Vec<f64>;

    /// Upper bound on the subgradient norm over the decision set.
    fn lipschitz(&self) -> f64;

    /// `Some((c, b))` when the function is exactly `<c, x> + b`. Lets callers
    /// collapse long sums of affine functions.
    fn as_affine(&self) -> Option<(&[f64], f64)> {
        None
    }

    /// `Some((center, scale))` when the function is exactly
    /// `(scale / 2) ||x - center||^2`.
    fn as_half_squared(&self) -> Option<(&[f64], f64)> {
        None
    }
}

/// Shared handle to a function oracle.
pub type Oracle = Arc<dyn ConvexFn>;

/// `<coef, x> + offset`.
#[derive(Clone, Debug, PartialEq)]
pub struct Affine {
    pub coef: Vec<f64>,
    pub offset: f64,
}

impl Affine {
    pub fn new(coef: Vec<f64>, offset: f64) -> Self {
        Self { coef, offset }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(vec![0.0; dim], 0.0)
    }
}

impl ConvexFn for Affine {
    fn dim(&self) -> usize {
        self.coef.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        dot(&self.coef, x) + self.offset
    }

    fn subgradient(&self, _x: &[f64]) -> Vec<f64> {
        self.coef.clone()
    }

    fn lipschitz(&self) -> f64 {
        norm(&self.coef)
    }

    fn as_affine(&self) -> Option<(&[f64], f64)> {
        Some((&self.coef, self.offset))
    }
}

/// `(scale / 2) * ||x - center||^2`.
///
/// The Lipschitz bound depends on the domain, so it is supplied by whoever
/// builds the function (`scale * diameter` when the center lies in the set).
#[derive(Clone, Debug, PartialEq)]
pub struct HalfSquaredDistance {
    pub center: Vec<f64>,
    pub scale: f64,
    pub lipschitz: f64,
}

impl HalfSquaredDistance {
    pub fn new(center: Vec<f64>, scale: f64, lipschitz: f64) -> Self {
        Self {
            center,
            scale,
            lipschitz,
        }
    }
}

impl ConvexFn for HalfSquaredDistance {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.scale
            * x.iter()
                .zip(&self.center)
                .map(|(a, c)| (a - c) * (a - c))
                .sum::<f64>()
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.center)
            .map(|(a, c)| self.scale * (a - c))
            .collect()
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn as_half_squared(&self) -> Option<(&[f64], f64)> {
        Some((&self.center, self.scale))
    }
}

/// `max(0, inner(x))`. At the kink (inner(x) == 0) the zero vector is
/// returned as the subgradient.
#[derive(Clone, Debug)]
pub struct PositivePart(pub Oracle);

impl ConvexFn for PositivePart {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.0.value(x).max(0.0)
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        if self.0.value(x) > 0.0 {
            self.0.subgradient(x)
        } else {
            vec![0.0; self.dim()]
        }
    }

    fn lipschitz(&self) -> f64 {
        self.0.lipschitz()
    }
}

/// `factor * inner(x)` with `factor >= 0`.
#[derive(Clone, Debug)]
pub struct Scaled {
    pub factor: f64,
    pub inner: Oracle,
}

impl Scaled {
    pub fn new(factor: f64, inner: Oracle) -> Self {
        debug_assert!(factor >= 0.0);
        Self { factor, inner }
    }
}

impl ConvexFn for Scaled {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.factor * self.inner.value(x)
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.inner.subgradient(x);
        g.iter_mut().for_each(|v| *v *= self.factor);
        g
    }

    fn lipschitz(&self) -> f64 {
        self.factor * self.inner.lipschitz()
    }
}

/// Maximum relative deviation between `oracle.subgradient(x)` and central
/// finite differences with step `h`.
///
/// The deviation is `max_i |fd_i - g_i| / max(||g||_inf, 1)`. Callers assert
/// their own thresholds; `x` should be a point where the oracle is
/// differentiable.
pub fn subgrad_check(oracle: &dyn ConvexFn, x: &[f64], h: f64) -> f64 {
    let g = oracle.subgradient(x);
    let scale = g.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let mut probe = x.to_vec();
    let mut worst = 0.0_f64;
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = oracle.value(&probe);
        probe[i] = x[i] - h;
        let down = oracle.value(&probe);
        probe[i] = x[i];
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((fd - g[i]).abs() / scale);
    }
    worst
}

/// The set of points of `parent` that satisfy every constraint seen so far.
#[derive(Clone, Debug)]
pub struct FeasibleSet {
    pub parent: DecisionSet,
    pub constraints: Vec<Oracle>,
}

impl FeasibleSet {
    pub fn new(parent: DecisionSet) -> Self {
        Self {
            parent,
            constraints: Vec::new(),
        }
    }

    pub fn push(&mut self, g: Oracle) {
        self.constraints.push(g);
    }

    /// `max_t g_t(x)`, or `-inf` with no constraints.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|g| g.value(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.parent.contains(x, MEMBERSHIP_TOL) && self.max_violation(x) <= MEMBERSHIP_TOL
    }
}
