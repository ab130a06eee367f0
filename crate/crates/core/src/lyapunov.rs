//! Time-varying exponential potentials and the multiplicative virtual queue.
//!
//! The potential at round `t` is `Phi_t(x) = exp(lambda_t x) - 1` with a
//! non-increasing parameter sequence. The queue is rescaled by
//! `lambda_{t-1} / lambda_t` before each increment, which keeps
//! `lambda_t * Q(t)` (and therefore `Phi_t(Q(t))`) non-decreasing while
//! `Q(t)` stays an upper bound on the cumulative violation.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest exponent accepted by [`phi`] and [`phi_prime`].
pub const EXP_GUARD: f64 = 700.0;

/// How `lambda_t` is computed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LambdaSchedule {
    /// `1 / (4 sqrt(t) sqrt(ln t + 1) (ln(ln t + 1) + 1))`.
    AnytimeStatic,
    /// The static schedule with `sqrt(t)` replaced by `sqrt(t (1 + P_t))`;
    /// `aux` is the comparator path length `P_t`.
    DynamicPath,
    /// `1 / (20 (sqrt(B/beta) + B/beta) L(gamma + 1))` where `L(s) =
    /// sqrt(s) sqrt(ln s + 1) (ln(ln s + 1) + 1)`; `aux` is `gamma_t`.
    OptimisticError { bregman_bound: f64, beta: f64 },
    /// `1 / (4 L(gamma + 1))` with `aux = gamma_t`, the running sum of squared
    /// constraint gradient norms.
    GradAdaptive,
    /// The static schedule frozen at `t = horizon`.
    FixedHorizon { horizon: u64 },
}

/// `sqrt(s) sqrt(ln s + 1) (ln(ln s + 1) + 1)` for `s >= 1`.
fn log_growth(s: f64) -> f64 {
    let l = s.ln() + 1.0;
    s.sqrt() * l.sqrt() * (l.ln() + 1.0)
}

impl LambdaSchedule {
    pub fn lambda_at(&self, t: u64, aux: f64) -> Result<f64> {
        if t < 1 {
            return invalid("rounds are numbered from 1");
        }
        if !(aux >= 0.0) || !aux.is_finite() {
            return invalid(format!(
                "auxiliary statistic must be finite and >= 0, got {aux}"
            ));
        }
        let tf = t as f64;
        let lambda = match *self {
            Self::AnytimeStatic => 1.0 / (4.0 * log_growth(tf)),
            Self::DynamicPath => {
                let l = tf.ln() + 1.0;
                1.0 / (4.0 * (tf * (1.0 + aux)).sqrt() * l.sqrt() * (l.ln() + 1.0))
            }
            Self::OptimisticError {
                bregman_bound,
                beta,
            } => {
                if !(bregman_bound > 0.0 && beta > 0.0) {
                    return invalid("optimistic schedule needs B > 0 and beta > 0");
                }
                let ratio = bregman_bound / beta;
                1.0 / (20.0 * (ratio.sqrt() + ratio) * log_growth(aux + 1.0))
            }
            Self::GradAdaptive => 1.0 / (4.0 * log_growth(aux + 1.0)),
            Self::FixedHorizon { horizon } => {
                if horizon < 1 {
                    return invalid("fixed horizon must be >= 1");
                }
                1.0 / (4.0 * log_growth(horizon as f64))
            }
        };
        Ok(lambda)
    }
}

/// `exp(lambda x) - 1`.
pub fn phi(lambda: f64, x: f64) -> Result<f64> {
    let e = exponent(lambda, x)?;
    Ok(e.exp_m1())
}

/// `lambda exp(lambda x)`, the derivative of [`phi`] in `x`.
pub fn phi_prime(lambda: f64, x: f64) -> Result<f64> {
    let e = exponent(lambda, x)?;
    Ok(lambda * e.exp())
}

fn exponent(lambda: f64, x: f64) -> Result<f64> {
    if !(lambda > 0.0) || !(x >= 0.0) {
        return invalid(format!(
            "potential needs lambda > 0 and x >= 0 (got {lambda}, {x})"
        ));
    }
    let e = lambda * x;
    if e > EXP_GUARD {
        return Err(Error::Overflow(e));
    }
    Ok(e)
}

/// Multiplicative upper bound on the cumulative (pre-processed) violation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VirtualQueue {
    pub q: f64,
    /// Parameter used by the most recent update; `None` before the first.
    pub last_lambda: Option<f64>,
    pub cumulative_ccv: f64,
}

impl VirtualQueue {
    pub fn new() -> Self {
        Self::default()
    }

    /// `q <- (lambda_prev / lambda_cur) q + gtilde`.
    pub fn update(&mut self, lambda_prev: f64, lambda_cur: f64, gtilde: f64) -> Result<()> {
        if !(lambda_cur > 0.0) || !lambda_prev.is_finite() {
            return invalid("queue update needs positive lambdas");
        }
        // One ulp of slack: adaptive schedules that are monotone in exact
        // arithmetic can round the wrong way.
        if lambda_prev < lambda_cur * (1.0 - 4.0 * f64::EPSILON) {
            return invalid(format!(
                "lambda schedule must be non-increasing ({lambda_prev} -> {lambda_cur})"
            ));
        }
        if !(gtilde >= 0.0) || !gtilde.is_finite() {
            return invalid(format!(
                "clipped violation must be finite and >= 0, got {gtilde}"
            ));
        }
        let ratio = (lambda_prev / lambda_cur).max(1.0);
        self.q = ratio * self.q + gtilde;
        self.cumulative_ccv += gtilde;
        self.last_lambda = Some(lambda_cur);
        Ok(())
    }

    /// Update using the previously stored parameter as `lambda_{t-1}`
    /// (`lambda_0 := lambda_1` on the first call).
    pub fn advance(&mut self, lambda_cur: f64, gtilde: f64) -> Result<()> {
        let prev = self.last_lambda.unwrap_or(lambda_cur);
        self.update(prev, lambda_cur, gtilde)
    }

    /// `lambda * q` for the last parameter used.
    pub fn scaled(&self) -> f64 {
        self.last_lambda.map_or(0.0, |l| l * self.q)
    }
}
