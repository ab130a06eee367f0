//! Closed-form regret and violation envelopes, and the per-round checks run
//! against recorded traces.

use serde::{Deserialize, Serialize};

use super::config::Algorithm;
use super::output::RoundRow;

/// `sqrt(ln t + 1) * (ln(ln t + 1) + 1)`
pub fn log_growth(t: f64) -> f64 {
    let l = t.ln() + 1.0;
    l.sqrt() * (l.ln() + 1.0)
}

/// `2 G D (sqrt t + 1)`
pub fn anytime_regret_bound(g: f64, d: f64, t: f64) -> f64 {
    2.0 * g * d * (t.sqrt() + 1.0)
}

/// `8 G D sqrt(t) sqrt(ln t + 1) (ln(ln t + 1) + 1) ln(4t)`
pub fn anytime_ccv_bound(g: f64, d: f64, t: f64) -> f64 {
    8.0 * g * d * t.sqrt() * log_growth(t) * (4.0 * t).ln()
}

/// `2 G D sqrt(1 + P_t) (sqrt t + 1)`
pub fn dynamic_regret_bound(g: f64, d: f64, t: f64, path_len: f64) -> f64 {
    (1.0 + path_len).sqrt() * anytime_regret_bound(g, d, t)
}

pub fn dynamic_ccv_bound(g: f64, d: f64, t: f64, path_len: f64) -> f64 {
    (1.0 + path_len).sqrt() * anytime_ccv_bound(g, d, t)
}

/// `B / beta` for the optimistic policy (`B = D^2 / 2`, `beta = 1`).
pub fn optimistic_ratio(d: f64) -> f64 {
    d * d / 2.0
}

/// `2 G D (5 sqrt(B/beta) sqrt(2 E_t) + 5/8 + 5 (B/beta) / (2D))`, with
/// `E_t` the cumulative squared gradient prediction error of the rescaled
/// cost.
pub fn optimistic_regret_bound(g: f64, d: f64, err_f: f64) -> f64 {
    let r = optimistic_ratio(d);
    2.0 * g * d * (5.0 * r.sqrt() * (2.0 * err_f).sqrt() + 0.625 + 5.0 * r / (2.0 * d))
}

/// Ceiling on the rescaled queue `Q(t+1)` of the optimistic policy:
/// `ln(40 sqrt(B/beta) sqrt(2 E_t) + 11 + 20 (B/beta) / D + 4t) / lambda_{t+1}`.
pub fn optimistic_queue_bound(d: f64, t: f64, err_f: f64, lambda_next: f64) -> f64 {
    let r = optimistic_ratio(d);
    (40.0 * r.sqrt() * (2.0 * err_f).sqrt() + 11.0 + 20.0 * r / d + 4.0 * t).ln() / lambda_next
}

/// AdaGrad linearized regret ceiling `sqrt(2) D sqrt(sum ||grad||^2)`.
pub fn adagrad_regret_bound(d: f64, sum_sq_grad: f64) -> f64 {
    std::f64::consts::SQRT_2 * d * sum_sq_grad.sqrt()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// Recorded cumulative violation is the running sum of the per-round
    /// violations, bit for bit.
    pub ccv_consistent: bool,
    pub queue_monotone: bool,
    pub ccv_dominated: bool,
    /// `None` when the algorithm has no closed-form guarantee or regret is
    /// unavailable.
    pub regret: Option<bool>,
    pub ccv: Option<bool>,
    pub adagrad: Option<bool>,
    /// First failure of each check, as `check@t`.
    pub violations: Vec<String>,
}

impl BoundReport {
    pub fn all_ok(&self) -> bool {
        self.ccv_consistent
            && self.queue_monotone
            && self.ccv_dominated
            && self.regret != Some(false)
            && self.ccv != Some(false)
            && self.adagrad != Some(false)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundContext {
    pub algorithm: Algorithm,
    pub lipschitz: f64,
    pub diameter: f64,
    pub alpha: f64,
    /// Added to every regret bound: benchmark gap plus tolerance.
    pub regret_slack: f64,
    pub bound_slack: f64,
    pub queue_slack: f64,
    pub dominance_slack: f64,
}

/// Runs every check that applies to `ctx.algorithm` on a recorded trace.
///
/// Doubling restarts its queue at `t = 1, 2, 4, ...`, so its queue checks
/// run per phase against the phase's own violation.
pub fn check_bounds(rows: &[RoundRow], ctx: &BoundContext) -> BoundReport {
    let (g, d) = (ctx.lipschitz, ctx.diameter);
    let mut report = BoundReport {
        ccv_consistent: true,
        queue_monotone: true,
        ccv_dominated: true,
        ..Default::default()
    };
    let has_regret = !rows.is_empty() && rows.iter().all(|r| r.regret.is_some());
    let (mut regret_ok, mut ccv_ok) = match ctx.algorithm {
        Algorithm::Anytime | Algorithm::Dynamic | Algorithm::Optimistic => {
            (has_regret.then_some(true), Some(true))
        }
        _ => (None, None),
    };
    let mut failures: Vec<String> = Vec::new();
    let mut report_push = |name: &str, t: usize| failures.push(format!("{name}@{t}"));

    let mut running = 0.0_f64;
    let mut phase_ccv = 0.0_f64;
    let mut prev_lq = 0.0_f64;
    let mut err_f = 0.0_f64;
    let (mut consistent, mut monotone, mut dominated) = (true, true, true);
    let (mut reg_flag, mut ccv_flag) = (true, true);

    for r in rows {
        let t = r.t as f64;
        running += r.violation;
        if running != r.ccv && consistent {
            consistent = false;
            report_push("ccv-sum", r.t);
        }
        if ctx.algorithm == Algorithm::Doubling && r.t.is_power_of_two() {
            phase_ccv = 0.0;
            prev_lq = 0.0;
        }
        phase_ccv += r.violation;
        let lq = r.lambda * r.q;
        if lq < prev_lq - ctx.queue_slack && monotone {
            monotone = false;
            report_push("queue-monotone", r.t);
        }
        prev_lq = lq;
        let own_ccv = if ctx.algorithm == Algorithm::Doubling {
            phase_ccv
        } else {
            r.ccv
        };
        if ctx.alpha * own_ccv > r.q + ctx.dominance_slack && dominated {
            dominated = false;
            report_push("ccv-dominated", r.t);
        }
        if let Some(e) = r.eps_f {
            err_f += e;
        }

        let (reg_bound, ccv_bound) = match ctx.algorithm {
            Algorithm::Anytime => (anytime_regret_bound(g, d, t), anytime_ccv_bound(g, d, t)),
            Algorithm::Dynamic => {
                let p = r.path_len.unwrap_or(0.0);
                (
                    dynamic_regret_bound(g, d, t, p),
                    dynamic_ccv_bound(g, d, t, p),
                )
            }
            Algorithm::Optimistic => (
                optimistic_regret_bound(g, d, err_f),
                optimistic_queue_bound(d, t, err_f, r.lambda) / ctx.alpha,
            ),
            _ => continue,
        };
        if let (Some(true), Some(regret)) = (regret_ok, r.regret) {
            if regret > reg_bound + ctx.regret_slack + ctx.bound_slack && reg_flag {
                reg_flag = false;
                report_push("regret", r.t);
            }
        }
        if r.ccv > ccv_bound + ctx.bound_slack && ccv_flag {
            ccv_flag = false;
            report_push("ccv", r.t);
        }
    }
    if regret_ok.is_some() {
        regret_ok = Some(reg_flag);
    }
    if ccv_ok.is_some() {
        ccv_ok = Some(ccv_flag);
    }
    report.ccv_consistent = consistent;
    report.queue_monotone = monotone;
    report.ccv_dominated = dominated;
    report.regret = regret_ok;
    report.ccv = ccv_ok;
    report.violations = failures;
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: usize, violation: f64, ccv: f64, q: f64, lambda: f64, regret: f64) -> RoundRow {
        RoundRow {
            t,
            cost: 0.0,
            violation,
            q,
            lambda,
            eta: 0.0,
            grad_norm: 0.0,
            regret: Some(regret),
            ccv,
            path_len: None,
            eps_f: None,
            eps_g: None,
        }
    }

    fn ctx(algorithm: Algorithm) -> BoundContext {
        BoundContext {
            algorithm,
            lipschitz: 1.0,
            diameter: 1.0,
            alpha: 0.5,
            regret_slack: 0.0,
            bound_slack: 1e-6,
            queue_slack: 1e-12,
            dominance_slack: 1e-9,
        }
    }

    #[test]
    fn envelope_values() {
        assert_eq!(anytime_regret_bound(1.0, 1.0, 1.0), 4.0);
        // ln(4) * 8 at t = 1.
        assert!((anytime_ccv_bound(1.0, 1.0, 1.0) - 8.0 * 4f64.ln()).abs() < 1e-12);
        assert_eq!(dynamic_regret_bound(1.0, 1.0, 4.0, 3.0), 12.0);
        assert!(
            (dynamic_ccv_bound(1.0, 1.0, 9.0, 0.0) - anytime_ccv_bound(1.0, 1.0, 9.0)).abs()
                < 1e-12
        );
        // D = 2: B/beta = 2, zero error -> 2*G*D*(5/8 + 5*2/4) = 4 * 3.125.
        assert!((optimistic_regret_bound(1.0, 2.0, 0.0) - 12.5).abs() < 1e-12);
        assert!((adagrad_regret_bound(2.0, 8.0) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn clean_trace_passes() {
        let rows = vec![
            row(1, 0.2, 0.2, 0.1, 0.25, 1.0),
            row(2, 0.0, 0.2, 0.2, 0.2, 2.0),
            row(3, 0.3, 0.5, 0.3, 0.19, 2.5),
        ];
        let rep = check_bounds(&rows, &ctx(Algorithm::Anytime));
        assert!(rep.all_ok(), "{rep:?}");
        assert_eq!(rep.regret, Some(true));
    }

    #[test]
    fn each_failure_is_reported() {
        let rows = vec![
            row(1, 0.2, 0.2, 0.1, 0.25, 1.0),
            // queue drops, ccv not a running sum, regret over 2(sqrt 2 + 1)
            row(2, 0.0, 0.3, 0.01, 0.2, 10.0),
        ];
        let rep = check_bounds(&rows, &ctx(Algorithm::Anytime));
        assert!(!rep.all_ok());
        assert!(!rep.ccv_consistent && !rep.queue_monotone && !rep.ccv_dominated);
        assert_eq!(rep.regret, Some(false));
        assert_eq!(
            rep.violations,
            vec![
                "ccv-sum@2",
                "queue-monotone@2",
                "ccv-dominated@2",
                "regret@2"
            ]
        );
    }

    #[test]
    fn doubling_checks_queue_per_phase() {
        // Queue restarts at t = 2; global ccv exceeds the new queue.
        let rows = vec![
            row(1, 1.0, 1.0, 0.5, 0.25, 0.0),
            row(2, 0.0, 1.0, 0.0, 0.2, 0.0),
            row(3, 0.2, 1.2, 0.1, 0.2, 0.0),
        ];
        let rep = check_bounds(&rows, &ctx(Algorithm::Doubling));
        assert!(rep.all_ok(), "{rep:?}");
        assert_eq!(rep.regret, None);
        assert!(!check_bounds(&rows, &ctx(Algorithm::FixedHorizon)).all_ok());
    }
}
