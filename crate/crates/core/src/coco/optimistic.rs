use std::sync::Arc;

use super::problem::{preprocess, surrogate_gradient, CocoPolicy, ProblemSpec, Round, RoundRecord};
use crate::base::OomdState;
use crate::error::Result;
use crate::geometry::{norm, norm_sq, sub, Affine, Oracle};
use crate::lyapunov::{phi_prime, LambdaSchedule, VirtualQueue};

/// Optimistic policy: optimistic mirror descent on the surrogate, with a
/// queue delayed by one round so that the next round's surrogate weight is
/// known before the next action is chosen.
pub struct OptimisticPolicy {
    spec: ProblemSpec,
    schedule: LambdaSchedule,
    oomd: OomdState,
    /// `Q(t)` at the start of a round.
    queue: VirtualQueue,
    /// `lambda_t` for the upcoming round.
    lambda: f64,
    /// Rescaled forecast of the upcoming round's functions.
    forecast: (Oracle, Oracle),
    t: usize,
    ccv: f64,
    err_f: f64,
    err_g: f64,
}

impl OptimisticPolicy {
    /// `initial_prediction` forecasts round 1; without one the forecast is
    /// the zero function. Uses `beta = 1` and `B = D^2 / 2`.
    pub fn new(spec: ProblemSpec, initial_prediction: Option<(Oracle, Oracle)>) -> Result<Self> {
        let beta = 1.0;
        let bregman_bound = spec.diameter * spec.diameter / 2.0;
        let schedule = LambdaSchedule::OptimisticError {
            bregman_bound,
            beta,
        };
        let lambda = schedule.lambda_at(1, spec.diameter.powi(-2))?;
        let forecast = rescale_forecast(&spec, initial_prediction);
        let pred_lipschitz = (1.0 + phi_prime(lambda, 0.0)?) / (2.0 * spec.diameter);
        let x1 = spec.set.initial_point()?;
        let mut oomd = OomdState::new(x1, pred_lipschitz, bregman_bound, beta, spec.proj_tol)?;
        // Optimistic step from x~_1 towards the first forecast.
        let pp = phi_prime(lambda, 0.0)?;
        let hint = surrogate_gradient(
            &forecast.0.subgradient(&oomd.x_secondary),
            &forecast.1.subgradient(&oomd.x_secondary),
            pp,
        );
        if hint.iter().any(|v| *v != 0.0) {
            let y = crate::geometry::add_scaled(&oomd.x_secondary, -oomd.eta, &hint);
            oomd.x = spec.set.project(&y, spec.proj_tol)?;
        }
        Ok(Self {
            spec,
            schedule,
            oomd,
            queue: VirtualQueue::new(),
            lambda,
            forecast,
            t: 0,
            ccv: 0.0,
            err_f: 0.0,
            err_g: 0.0,
        })
    }

    pub fn bregman_bound(&self) -> f64 {
        self.oomd.bregman_bound
    }

    pub fn beta(&self) -> f64 {
        self.oomd.beta
    }
}

fn rescale_forecast(spec: &ProblemSpec, pred: Option<(Oracle, Oracle)>) -> (Oracle, Oracle) {
    match pred {
        Some((f, g)) => preprocess(spec, &f, &g),
        None => {
            let zero: Oracle = Arc::new(Affine::zero(spec.dim()));
            (zero.clone(), zero)
        }
    }
}

impl CocoPolicy for OptimisticPolicy {
    fn current_action(&self) -> &[f64] {
        &self.oomd.x
    }

    fn step(&mut self, round: &Round) -> Result<RoundRecord> {
        self.t += 1;
        let x = self.oomd.x.clone();
        let (ft, gt) = preprocess(&self.spec, &round.f, &round.g);
        let (pf, pg) = &self.forecast;

        let grad_f = ft.subgradient(&x);
        let grad_g = gt.subgradient(&x);
        let pred_f = pf.subgradient(&x);
        let pred_g = pg.subgradient(&x);
        let eps_f = norm_sq(&sub(&grad_f, &pred_f));
        let eps_g = norm_sq(&sub(&grad_g, &pred_g));
        self.err_f += eps_f;
        self.err_g += eps_g;

        let pp = phi_prime(self.lambda, self.queue.q)?;
        let grad = surrogate_gradient(&grad_f, &grad_g, pp);
        let pred = surrogate_gradient(&pred_f, &pred_g, pp);
        let eps_hat = norm_sq(&sub(&grad, &pred));

        // Q(t+1) with lambda_{t+1}, known at the end of round t.
        let gamma = self.err_g + self.spec.diameter.powi(-2);
        let next_lambda = self.schedule.lambda_at(self.t as u64 + 1, gamma)?;
        self.queue.update(self.lambda, next_lambda, gt.value(&x))?;
        let next_pp = phi_prime(next_lambda, self.queue.q)?;
        let next_lipschitz = (1.0 + next_pp) / (2.0 * self.spec.diameter);

        self.forecast = rescale_forecast(&self.spec, round.prediction.clone());
        let (nf, ng) = self.forecast.clone();
        let eta = self.oomd.eta;
        self.oomd.oomd_step(
            &grad,
            eps_hat,
            |y| {
                Ok(surrogate_gradient(
                    &nf.subgradient(y),
                    &ng.subgradient(y),
                    next_pp,
                ))
            },
            next_lipschitz,
            &self.spec.set,
        )?;
        self.lambda = next_lambda;

        let cost = round.f.value(&x);
        let violation = round.g.value(&x).max(0.0);
        self.ccv += violation;
        Ok(RoundRecord {
            t: self.t,
            cost,
            violation,
            ccv: self.ccv,
            q: self.queue.q,
            lambda: next_lambda,
            eta,
            phi_prime: pp,
            grad_norm: norm(&grad),
            surrogate_grad: grad,
            eps_f: Some(eps_f),
            eps_g: Some(eps_g),
            err_f: Some(self.err_f),
            err_g: Some(self.err_g),
            x,
            ..Default::default()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DecisionSet;

    fn lin(c: Vec<f64>, b: f64) -> Oracle {
        Arc::new(Affine::new(c, b))
    }

    fn spec() -> ProblemSpec {
        ProblemSpec::new(DecisionSet::cube(2, 1.0).unwrap(), 1.0, 1e-9).unwrap()
    }

    fn rounds(n: usize) -> Vec<(Oracle, Oracle)> {
        (0..n)
            .map(|t| {
                let s = if t % 2 == 0 { 1.0 } else { -1.0 };
                (lin(vec![s * 0.6, 0.8], 0.0), lin(vec![0.0, s], 0.2))
            })
            .collect()
    }

    #[test]
    fn perfect_predictions_have_zero_error() {
        let fs = rounds(40);
        let mut p = OptimisticPolicy::new(spec(), Some(fs[0].clone())).unwrap();
        for t in 0..fs.len() {
            let mut r = Round::new(fs[t].0.clone(), fs[t].1.clone());
            r.prediction = fs.get(t + 1).cloned();
            let rec = p.step(&r).unwrap();
            assert_eq!(rec.err_f, Some(0.0));
            assert_eq!(rec.err_g, Some(0.0));
            assert!(rec.q + 1e-12 >= spec().alpha * rec.ccv);
        }
    }

    #[test]
    fn zero_predictions_error_is_gradient_norm() {
        let fs = rounds(20);
        let mut p = OptimisticPolicy::new(spec(), None).unwrap();
        let cap = (2.0 * spec().diameter).powi(-2);
        for (f, g) in fs {
            let rec = p.step(&Round::new(f.clone(), g)).unwrap();
            let gf = spec().alpha * 1.0;
            assert!((rec.eps_f.unwrap() - gf * gf).abs() < 1e-15);
            assert!(rec.eps_f.unwrap() <= cap + 1e-15);
            assert!(rec.eps_g.unwrap() <= cap + 1e-15);
        }
    }

    #[test]
    fn lambda_q_is_monotone() {
        let fs = rounds(100);
        let mut p = OptimisticPolicy::new(spec(), None).unwrap();
        let mut prev = 0.0;
        for (f, g) in fs {
            let rec = p.step(&Round::new(f, g)).unwrap();
            assert!(rec.lambda * rec.q >= prev - 1e-12);
            prev = rec.lambda * rec.q;
        }
    }
}
