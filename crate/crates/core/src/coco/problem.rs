use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::geometry::{DecisionSet, Oracle, Point, PositivePart, Scaled};

/// The decision set together with the shared Lipschitz bound and the
/// resulting scale factor.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub set: DecisionSet,
    pub lipschitz: f64,
    pub diameter: f64,
    /// `1 / (2 G D)`
    pub alpha: f64,
    /// Projection tolerance handed to the set.
    pub proj_tol: f64,
}

impl ProblemSpec {
    pub fn new(set: DecisionSet, lipschitz: f64, proj_tol: f64) -> Result<Self> {
        let diameter = set.diameter();
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return invalid("Lipschitz bound must be positive and finite");
        }
        if !(diameter > 0.0) {
            return invalid("decision set must have a positive diameter");
        }
        if !(proj_tol > 0.0) {
            return invalid("projection tolerance must be positive");
        }
        Ok(Self {
            set,
            lipschitz,
            diameter,
            alpha: 1.0 / (2.0 * lipschitz * diameter),
            proj_tol,
        })
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }
}

/// `(alpha f, alpha max(0, g))`
pub fn preprocess(spec: &ProblemSpec, f: &Oracle, g: &Oracle) -> (Oracle, Oracle) {
    let ft: Oracle = Arc::new(Scaled::new(spec.alpha, f.clone()));
    let gt: Oracle = Arc::new(Scaled::new(spec.alpha, Arc::new(PositivePart(g.clone()))));
    (ft, gt)
}

/// `grad_f + phi_prime * grad_g`
pub fn surrogate_gradient(grad_f: &[f64], grad_g: &[f64], phi_prime: f64) -> Vec<f64> {
    grad_f
        .iter()
        .zip(grad_g)
        .map(|(a, b)| a + phi_prime * b)
        .collect()
}

/// What the environment reveals after the learner has committed to `x_t`.
#[derive(Clone, Debug)]
pub struct Round {
    pub f: Oracle,
    pub g: Oracle,
    /// Forecast of the next round's `(f, g)`, used by the optimistic policy.
    pub prediction: Option<(Oracle, Oracle)>,
}

impl Round {
    pub fn new(f: Oracle, g: Oracle) -> Self {
        Self {
            f,
            g,
            prediction: None,
        }
    }
}

/// A per-round optimum `min f(x) s.t. g(x) <= 0` with its certified gap.
#[derive(Clone, Debug)]
pub struct Comparator {
    pub point: Point,
    pub value: f64,
    pub gap: f64,
}

pub trait ComparatorSolver: Send + Sync {
    fn solve(&self, f: &Oracle, g: &Oracle, set: &DecisionSet) -> Result<Comparator>;
}

/// Log line for one round. Costs and violations are in original units;
/// queue, step size and gradients are in rescaled units.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RoundRecord {
    pub t: usize,
    pub x: Point,
    /// `f_t(x_t)`
    pub cost: f64,
    /// `max(0, g_t(x_t))`
    pub violation: f64,
    /// Cumulative violation up to and including this round.
    pub ccv: f64,
    /// Queue after this round's update (`Q(t)`, or `Q(t+1)` for the
    /// optimistic policy).
    pub q: f64,
    /// Potential parameter paired with `q`.
    pub lambda: f64,
    /// Step size used this round.
    pub eta: f64,
    /// `Phi'` weight applied to the constraint gradient.
    pub phi_prime: f64,
    /// Surrogate gradient fed to the base learner.
    pub surrogate_grad: Vec<f64>,
    pub grad_norm: f64,
    /// Cumulative regret, filled in by the harness.
    pub regret: Option<f64>,
    pub path_len: Option<f64>,
    /// Value and gap of the per-round comparator (dynamic policy).
    pub comparator: Option<(f64, f64)>,
    pub eps_f: Option<f64>,
    pub eps_g: Option<f64>,
    pub err_f: Option<f64>,
    pub err_g: Option<f64>,
    /// Restart phase (doubling baseline).
    pub phase: Option<usize>,
}

/// A learner that commits to an action, then observes one round.
pub trait CocoPolicy: Send {
    fn current_action(&self) -> &[f64];

    fn step(&mut self, round: &Round) -> Result<RoundRecord>;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{norm, Affine};
    use proptest::prelude::*;

    fn unit_spec() -> ProblemSpec {
        // D = 1, G = 1 -> alpha = 0.5
        ProblemSpec::new(DecisionSet::cube(1, 0.5).unwrap(), 1.0, 1e-9).unwrap()
    }

    #[test]
    fn alpha_times_g_is_inverse_twice_d() {
        let s = ProblemSpec::new(DecisionSet::cube(2, 1.0).unwrap(), 3.0, 1e-9).unwrap();
        assert!((s.alpha * s.lipschitz - 1.0 / (2.0 * s.diameter)).abs() < 1e-15);
    }

    #[test]
    fn preprocess_examples() {
        let spec = unit_spec();
        let f: Oracle = Arc::new(Affine::new(vec![0.0], 4.0));
        let g: Oracle = Arc::new(Affine::new(vec![0.0], -3.0));
        let (ft, gt) = preprocess(&spec, &f, &g);
        assert_eq!(ft.value(&[0.0]), 2.0);
        assert_eq!(gt.value(&[0.0]), 0.0);
        assert_eq!(gt.subgradient(&[0.0]), vec![0.0]);

        let spec2 = ProblemSpec::new(
            DecisionSet::cube(2, 0.5_f64.sqrt() / 2.0).unwrap(),
            1.0,
            1e-9,
        )
        .unwrap();
        assert!((spec2.alpha - 0.5).abs() < 1e-15);
        let g: Oracle = Arc::new(Affine::new(vec![1.0, 0.0], 2.0));
        let (_, gt) = preprocess(&spec2, &f_zero(2), &g);
        assert!((gt.value(&[0.0, 0.0]) - 1.0).abs() < 1e-15);
        let grad = gt.subgradient(&[0.0, 0.0]);
        assert!((grad[0] - 0.5).abs() < 1e-15 && grad[1] == 0.0);
    }

    fn f_zero(d: usize) -> Oracle {
        Arc::new(Affine::zero(d))
    }

    #[test]
    fn surrogate_examples() {
        let s = surrogate_gradient(&[0.1, 0.0], &[0.4, 0.0], 0.25);
        assert!((s[0] - 0.2).abs() < 1e-15 && s[1] == 0.0);
        assert_eq!(
            surrogate_gradient(&[0.3, -0.2], &[0.0, 0.0], 0.7),
            vec![0.3, -0.2]
        );
    }

    proptest! {
        #[test]
        fn surrogate_norm_bound(
            d in 1.0f64..10.0,
            phi in 0.0f64..5.0,
            u in proptest::collection::vec(-1.0f64..1.0, 3),
            v in proptest::collection::vec(-1.0f64..1.0, 3),
        ) {
            let cap = 1.0 / (2.0 * d);
            let clip = |w: &Vec<f64>| -> Vec<f64> {
                let n = norm(w);
                if n > cap { w.iter().map(|x| x * cap / n).collect() } else { w.clone() }
            };
            let (gf, gg) = (clip(&u), clip(&v));
            let s = surrogate_gradient(&gf, &gg, phi);
            prop_assert!(norm(&s) <= cap * (1.0 + phi) + 1e-12);
        }
    }
}
