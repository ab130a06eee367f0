use super::problem::{preprocess, surrogate_gradient, CocoPolicy, ProblemSpec, Round, RoundRecord};
use crate::base::OgdState;
use crate::error::Result;
use crate::geometry::{norm, norm_sq};
use crate::lyapunov::{phi_prime, LambdaSchedule, VirtualQueue};

/// Queue-weighted surrogate fed to AdaGrad. With the static schedule this
/// is the anytime algorithm; with a frozen schedule it is the fixed-horizon
/// baseline (additive queue); with the gradient-adaptive schedule `lambda`
/// shrinks with the observed constraint gradients instead of with `t`.
#[derive(Clone, Debug)]
pub struct AnytimePolicy {
    spec: ProblemSpec,
    schedule: LambdaSchedule,
    ogd: OgdState,
    queue: VirtualQueue,
    t: usize,
    ccv: f64,
    /// `D^-2 + sum ||grad g~||^2`, used by the gradient-adaptive schedule.
    gamma: f64,
}

impl AnytimePolicy {
    pub fn new(spec: ProblemSpec, schedule: LambdaSchedule) -> Result<Self> {
        let x1 = spec.set.initial_point()?;
        let ogd = OgdState::new(x1, spec.diameter, spec.proj_tol);
        let gamma = spec.diameter.powi(-2);
        Ok(Self {
            spec,
            schedule,
            ogd,
            queue: VirtualQueue::new(),
            t: 0,
            ccv: 0.0,
            gamma,
        })
    }

    pub fn anytime(spec: ProblemSpec) -> Result<Self> {
        Self::new(spec, LambdaSchedule::AnytimeStatic)
    }

    pub fn fixed_horizon(spec: ProblemSpec, horizon: u64) -> Result<Self> {
        Self::new(spec, LambdaSchedule::FixedHorizon { horizon })
    }

    pub fn queue(&self) -> &VirtualQueue {
        &self.queue
    }

    pub fn rounds_played(&self) -> usize {
        self.t
    }
}

impl CocoPolicy for AnytimePolicy {
    fn current_action(&self) -> &[f64] {
        &self.ogd.x
    }

    fn step(&mut self, round: &Round) -> Result<RoundRecord> {
        self.t += 1;
        let x = self.ogd.x.clone();
        let (ft, gt) = preprocess(&self.spec, &round.f, &round.g);
        let g_val = gt.value(&x);
        let grad_g = gt.subgradient(&x);
        self.gamma += norm_sq(&grad_g);
        let aux = match self.schedule {
            LambdaSchedule::GradAdaptive => self.gamma,
            _ => 0.0,
        };
        let lambda = self.schedule.lambda_at(self.t as u64, aux)?;
        self.queue.advance(lambda, g_val)?;
        let pp = phi_prime(lambda, self.queue.q)?;
        let grad = surrogate_gradient(&ft.subgradient(&x), &grad_g, pp);
        self.ogd.adagrad_step(&grad, &self.spec.set)?;

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
            x,
            ..Default::default()
        })
    }
}
