//! Base online learners driven by the constrained meta-algorithms.

use crate::error::{invalid, Result};
use crate::geometry::{add_scaled, all_finite, norm_sq, DecisionSet, Point};

/// Projected online gradient descent with scalar AdaGrad step sizes.
#[derive(Clone, Debug)]
pub struct OgdState {
    pub x: Point,
    pub sum_sq_grad: f64,
    /// `sum (1 + P_tau) ||g_tau||^2`, dynamic variant only.
    pub weighted_sum_sq_grad: f64,
    pub diameter: f64,
    /// Step size used by the most recent step.
    pub eta: f64,
    pub last_path_len: Option<f64>,
    pub proj_tol: f64,
}

impl OgdState {
    pub fn new(x: Point, diameter: f64, proj_tol: f64) -> Self {
        Self {
            x,
            sum_sq_grad: 0.0,
            weighted_sum_sq_grad: 0.0,
            diameter,
            eta: 0.0,
            last_path_len: None,
            proj_tol,
        }
    }

    fn check(&self, gradient: &[f64]) -> Result<()> {
        if gradient.len() != self.x.len() {
            return invalid("gradient dimension does not match the iterate");
        }
        if !all_finite(gradient) {
            return invalid("non-finite gradient");
        }
        Ok(())
    }

    /// `eta = sqrt(2) D / (2 sqrt(sum ||g||^2))`, then a projected step.
    pub fn adagrad_step(&mut self, gradient: &[f64], set: &DecisionSet) -> Result<()> {
        self.check(gradient)?;
        self.sum_sq_grad += norm_sq(gradient);
        self.eta = if self.sum_sq_grad > 0.0 {
            std::f64::consts::SQRT_2 * self.diameter / (2.0 * self.sum_sq_grad.sqrt())
        } else {
            0.0
        };
        self.descend(gradient, set)
    }

    /// `eta = (D + 1)(1 + P_t) / sqrt(2 sum (1 + P_tau) ||g_tau||^2)`.
    pub fn dynamic_adagrad_step(
        &mut self,
        gradient: &[f64],
        path_len: f64,
        set: &DecisionSet,
    ) -> Result<()> {
        self.check(gradient)?;
        if !(path_len >= 0.0) || !path_len.is_finite() {
            return invalid("path length must be finite and >= 0");
        }
        if let Some(prev) = self.last_path_len {
            if path_len < prev {
                return invalid(format!("path length decreased from {prev} to {path_len}"));
            }
        }
        self.last_path_len = Some(path_len);
        let weight = 1.0 + path_len;
        self.weighted_sum_sq_grad += weight * norm_sq(gradient);
        self.eta = if self.weighted_sum_sq_grad > 0.0 {
            (self.diameter + 1.0) * weight / (2.0 * self.weighted_sum_sq_grad).sqrt()
        } else {
            0.0
        };
        self.descend(gradient, set)
    }

    fn descend(&mut self, gradient: &[f64], set: &DecisionSet) -> Result<()> {
        if self.eta > 0.0 {
            self.x = set.project(&add_scaled(&self.x, -self.eta, gradient), self.proj_tol)?;
        }
        Ok(())
    }
}

/// Euclidean Bregman divergence `||x - y||^2 / 2`.
pub fn bregman(x: &[f64], y: &[f64]) -> f64 {
    0.5 * x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
}

/// Optimistic online mirror descent with the Euclidean regularizer.
#[derive(Clone, Debug)]
pub struct OomdState {
    /// Played iterate `x_t`.
    pub x: Point,
    /// Secondary iterate `x~_t`.
    pub x_secondary: Point,
    pub eta: f64,
    /// Cumulative squared prediction error `E_t`.
    pub err_sum: f64,
    /// `E_{t-1}`.
    pub err_prev: f64,
    pub max_pred_lipschitz: f64,
    pub beta: f64,
    pub bregman_bound: f64,
    pub proj_tol: f64,
}

impl OomdState {
    /// Starts at `x1` for both iterates with `eta_1 = beta / L_1`.
    pub fn new(
        x1: Point,
        first_pred_lipschitz: f64,
        bregman_bound: f64,
        beta: f64,
        proj_tol: f64,
    ) -> Result<Self> {
        if !(first_pred_lipschitz > 0.0) {
            return invalid("prediction Lipschitz bound must be positive");
        }
        if !(bregman_bound > 0.0 && beta > 0.0) {
            return invalid("B and beta must be positive");
        }
        Ok(Self {
            x_secondary: x1.clone(),
            x: x1,
            eta: beta / first_pred_lipschitz,
            err_sum: 0.0,
            err_prev: 0.0,
            max_pred_lipschitz: first_pred_lipschitz,
            beta,
            bregman_bound,
            proj_tol,
        })
    }

    /// One round: a mirror step on the secondary iterate with the observed
    /// gradient, a new step size, and an optimistic step towards the
    /// predicted next gradient.
    pub fn oomd_step<F>(
        &mut self,
        grad_at_x: &[f64],
        pred_grad_err: f64,
        next_pred_grad: F,
        next_pred_lipschitz: f64,
        set: &DecisionSet,
    ) -> Result<()>
    where
        F: FnOnce(&[f64]) -> Result<Vec<f64>>,
    {
        if !(next_pred_lipschitz > 0.0) {
            return invalid("prediction Lipschitz bound must be positive");
        }
        if !(pred_grad_err >= 0.0) || !pred_grad_err.is_finite() {
            return invalid("prediction error must be finite and >= 0");
        }
        if grad_at_x.len() != self.x.len() || !all_finite(grad_at_x) {
            return invalid("gradient must be finite with the iterate's dimension");
        }
        self.err_prev = self.err_sum;
        self.err_sum += pred_grad_err;
        self.x_secondary = set.project(
            &add_scaled(&self.x_secondary, -self.eta, grad_at_x),
            self.proj_tol,
        )?;
        self.max_pred_lipschitz = self.max_pred_lipschitz.max(next_pred_lipschitz);
        let cap = self.beta / self.max_pred_lipschitz;
        let denom = self.err_sum.sqrt() + self.err_prev.sqrt();
        self.eta = if denom > 0.0 {
            ((self.beta * self.bregman_bound).sqrt() / denom).min(cap)
        } else {
            cap
        };
        let hint = next_pred_grad(&self.x_secondary)?;
        if hint.len() != self.x.len() || !all_finite(&hint) {
            return invalid("predicted gradient must be finite with the iterate's dimension");
        }
        self.x = set.project(
            &add_scaled(&self.x_secondary, -self.eta, &hint),
            self.proj_tol,
        )?;
        Ok(())
    }
}
