use super::problem::{
    preprocess, surrogate_gradient, CocoPolicy, ComparatorSolver, ProblemSpec, Round, RoundRecord,
};
use crate::base::OgdState;
use crate::error::{Error, Result};
use crate::geometry::{distance, norm, Point};
use crate::lyapunov::{phi_prime, LambdaSchedule, VirtualQueue};

/// Anytime policy for dynamic regret. After each round it solves that
/// round's constrained problem, adds the comparator's movement to the path
/// length `P_t`, and lets `P_t` shrink `lambda` and widen the step size.
pub struct DynamicPolicy {
    spec: ProblemSpec,
    solver: Box<dyn ComparatorSolver>,
    ogd: OgdState,
    queue: VirtualQueue,
    t: usize,
    ccv: f64,
    path_len: f64,
    last_comparator: Option<Point>,
}

impl DynamicPolicy {
    pub fn new(spec: ProblemSpec, solver: Box<dyn ComparatorSolver>) -> Result<Self> {
        let x1 = spec.set.initial_point()?;
        let ogd = OgdState::new(x1, spec.diameter, spec.proj_tol);
        Ok(Self {
            spec,
            solver,
            ogd,
            queue: VirtualQueue::new(),
            t: 0,
            ccv: 0.0,
            path_len: 0.0,
            last_comparator: None,
        })
    }

    pub fn path_len(&self) -> f64 {
        self.path_len
    }
}

impl CocoPolicy for DynamicPolicy {
    fn current_action(&self) -> &[f64] {
        &self.ogd.x
    }

    fn step(&mut self, round: &Round) -> Result<RoundRecord> {
        self.t += 1;
        let x = self.ogd.x.clone();
        let star = self
            .solver
            .solve(&round.f, &round.g, &self.spec.set)
            .map_err(|e| Error::Solver {
                round: self.t,
                source: Box::new(e),
            })?;
        if let Some(prev) = &self.last_comparator {
            self.path_len += distance(prev, &star.point);
        }
        self.last_comparator = Some(star.point.clone());

        let (ft, gt) = preprocess(&self.spec, &round.f, &round.g);
        let lambda = LambdaSchedule::DynamicPath.lambda_at(self.t as u64, self.path_len)?;
        self.queue.advance(lambda, gt.value(&x))?;
        let pp = phi_prime(lambda, self.queue.q)?;
        let grad = surrogate_gradient(&ft.subgradient(&x), &gt.subgradient(&x), pp);
        self.ogd
            .dynamic_adagrad_step(&grad, self.path_len, &self.spec.set)?;

        let cost = round.f.value(&x);
        let violation = round.g.value(&x).max(0.0);
        self.ccv += violation;
        Ok(RoundRecord {
            t: self.t,
            cost,
            violation,
            ccv: self.ccv,
            q: self.queue.q,
            lambda,
            eta: self.ogd.eta,
            phi_prime: pp,
            grad_norm: norm(&grad),
            surrogate_grad: grad,
            path_len: Some(self.path_len),
            comparator: Some((star.value, star.gap)),
            x,
            ..Default::default()
        })
    }
}
