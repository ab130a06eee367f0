use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::adversary::synthetic_adversary;
use super::benchmark::{compute_static_benchmark, BenchmarkResult, BenchmarkSolver};
use super::bounds::{adagrad_regret_bound, check_bounds, BoundContext, BoundReport};
use super::config::{Algorithm, ExperimentConfig, InstanceSpec, PredictionMode};
use super::output::RoundRow;
use crate::coco::{
    AnytimePolicy, CocoPolicy, DoublingPolicy, DynamicPolicy, OptimisticPolicy, ProblemSpec, Round,
    RoundRecord,
};
use crate::error::{Error, Result};
use crate::geometry::{dot, norm, norm_sq, ConvexFn, DecisionSet, Oracle, Point};
use crate::lyapunov::LambdaSchedule;
use crate::shortest_path::{generate_instance, FlowPolytope};

/// The decision set and the full sequence of rounds an experiment plays.
#[derive(Clone, Debug)]
pub struct Environment {
    pub set: DecisionSet,
    pub rounds: Vec<(Oracle, Oracle)>,
    pub lipschitz: f64,
}

pub fn build_environment(cfg: &ExperimentConfig) -> Result<Environment> {
    match &cfg.instance {
        InstanceSpec::Synthetic {
            family,
            dim,
            path_budget,
        } => {
            let inst = synthetic_adversary(*family, *dim, cfg.horizon, cfg.seed, *path_budget)?;
            Ok(Environment {
                set: inst.set,
                rounds: inst.rounds,
                lipschitz: inst.lipschitz,
            })
        }
        InstanceSpec::ShortestPath(params) => {
            let mut params = params.clone();
            params.horizon = cfg.horizon;
            let inst = generate_instance(cfg.seed, &params)?;
            let lipschitz = inst.lipschitz();
            let rounds = inst
                .rounds
                .iter()
                .map(|r| (r.cost(), r.constraint()))
                .collect();
            Ok(Environment {
                set: DecisionSet::unit_flow(FlowPolytope::new(inst.graph)),
                rounds,
                lipschitz,
            })
        }
    }
}

/// `inner(x) + <shift, x>`: a forecast with a random linear error.
#[derive(Clone, Debug)]
pub struct Perturbed {
    pub inner: Oracle,
    pub shift: Vec<f64>,
}

impl ConvexFn for Perturbed {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(x) + dot(&self.shift, x)
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.inner.subgradient(x);
        g.iter_mut().zip(&self.shift).for_each(|(a, b)| *a += b);
        g
    }

    fn lipschitz(&self) -> f64 {
        self.inner.lipschitz() + norm(&self.shift)
    }
}

/// Forecast for each round index (the forecast of round `i` is revealed at
/// the end of round `i - 1`; index 0 is handed to the policy up front).
fn forecasts(cfg: &ExperimentConfig, env: &Environment) -> Vec<Option<(Oracle, Oracle)>> {
    let mode = cfg.predictions.unwrap_or(PredictionMode::Zero);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x0F0E_CA57_0000_0001);
    let d = env.set.dim();
    let mut perturb = |o: &Oracle, sigma: f64| -> Oracle {
        let shift: Vec<f64> = (0..d)
            .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Arc::new(Perturbed {
            inner: o.clone(),
            shift,
        })
    };
    env.rounds
        .iter()
        .map(|(f, g)| match mode {
            PredictionMode::Zero => None,
            PredictionMode::Perfect => Some((f.clone(), g.clone())),
            PredictionMode::Noisy { sigma } => Some((perturb(f, sigma), perturb(g, sigma))),
        })
        .collect()
}

fn build_policy(
    cfg: &ExperimentConfig,
    spec: ProblemSpec,
    first_forecast: Option<(Oracle, Oracle)>,
) -> Result<Box<dyn CocoPolicy>> {
    Ok(match cfg.algorithm {
        Algorithm::Anytime => Box::new(AnytimePolicy::anytime(spec)?),
        Algorithm::GradAdaptive => {
            Box::new(AnytimePolicy::new(spec, LambdaSchedule::GradAdaptive)?)
        }
        Algorithm::FixedHorizon => {
            Box::new(AnytimePolicy::fixed_horizon(spec, cfg.horizon as u64)?)
        }
        Algorithm::Doubling => Box::new(DoublingPolicy::new(spec)?),
        Algorithm::Dynamic => Box::new(DynamicPolicy::new(
            spec,
            Box::new(BenchmarkSolver {
                options: cfg.tolerances.benchmark.clone(),
            }),
        )?),
        Algorithm::Optimistic => Box::new(OptimisticPolicy::new(spec, first_forecast)?),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub algorithm: Algorithm,
    pub horizon: usize,
    pub seed: u64,
    pub lipschitz: f64,
    pub diameter: f64,
    pub alpha: f64,
    /// `None` when no feasible fixed benchmark exists.
    pub final_regret: Option<f64>,
    pub final_ccv: f64,
    pub max_lambda_q: f64,
    pub final_path_len: Option<f64>,
    /// Cumulative squared prediction error of the rescaled cost.
    pub final_err_f: Option<f64>,
    pub benchmark: Option<BenchmarkResult>,
    pub benchmark_infeasible: bool,
    pub grid_agrees: Option<bool>,
    /// Benchmark gap (summed per-round gaps for dynamic regret), added to
    /// the regret bounds.
    pub regret_slack: f64,
    /// Rounds at which the doubling baseline restarted from its initial
    /// point.
    pub resets: Vec<usize>,
    /// Every applicable bound held at every round.
    pub bound_ok: bool,
    pub bounds: BoundReport,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub records: Vec<RoundRecord>,
    pub summary: Summary,
}

/// A failed run with the rounds that completed before the failure.
#[derive(Debug)]
pub struct RunFailure {
    pub error: Error,
    pub records: Vec<RoundRecord>,
}

impl From<Error> for RunFailure {
    fn from(error: Error) -> Self {
        Self {
            error,
            records: Vec::new(),
        }
    }
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} rounds)", self.error, self.records.len())
    }
}

impl std::error::Error for RunFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Plays every round of the configured instance, then attaches regret
/// against the appropriate benchmark and checks the bounds.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, RunFailure> {
    cfg.validate()?;
    let env = build_environment(cfg)?;
    run_in_environment(cfg, &env)
}

/// As [`run_experiment`] on an already built environment.
pub fn run_in_environment(
    cfg: &ExperimentConfig,
    env: &Environment,
) -> Result<RunOutput, RunFailure> {
    let start = Instant::now();
    let spec = ProblemSpec::new(env.set.clone(), env.lipschitz, cfg.tolerances.proj_tol)?;
    let forecasts = forecasts(cfg, env);
    let mut policy = build_policy(cfg, spec.clone(), forecasts.first().cloned().flatten())?;
    let x1: Point = policy.current_action().to_vec();

    let mut records = Vec::with_capacity(env.rounds.len());
    for (i, (f, g)) in env.rounds.iter().enumerate() {
        let round = Round {
            f: f.clone(),
            g: g.clone(),
            prediction: forecasts.get(i + 1).cloned().flatten(),
        };
        match policy.step(&round) {
            Ok(r) => records.push(r),
            Err(error) => return Err(RunFailure { error, records }),
        }
    }

    let tol = &cfg.tolerances;
    let mut benchmark = None;
    let mut benchmark_infeasible = false;
    let mut regret_slack = 0.0;
    let mut adagrad = None;
    if cfg.algorithm == Algorithm::Dynamic {
        let mut cum = 0.0;
        for r in &mut records {
            let (value, gap) = r.comparator.unwrap_or((f64::NAN, 0.0));
            cum += r.cost - value;
            regret_slack += gap;
            r.regret = Some(cum);
        }
    } else {
        match compute_static_benchmark(&env.rounds, &env.set, &tol.benchmark) {
            Ok(b) => {
                let mut cum = 0.0;
                for (r, (f, _)) in records.iter_mut().zip(&env.rounds) {
                    cum += r.cost - f.value(&b.point);
                    r.regret = Some(cum);
                }
                regret_slack = b.gap;
                if matches!(
                    cfg.algorithm,
                    Algorithm::Anytime | Algorithm::GradAdaptive | Algorithm::FixedHorizon
                ) {
                    adagrad = Some(adagrad_holds(
                        &records,
                        &b.point,
                        spec.diameter,
                        tol.bound_slack,
                    ));
                }
                benchmark = Some(b);
            }
            Err(Error::Infeasible(_)) => benchmark_infeasible = true,
            Err(error) => return Err(RunFailure { error, records }),
        }
    }

    let rows: Vec<RoundRow> = records.iter().map(RoundRow::from).collect();
    let ctx = BoundContext {
        algorithm: cfg.algorithm,
        lipschitz: env.lipschitz,
        diameter: spec.diameter,
        alpha: spec.alpha,
        regret_slack,
        bound_slack: tol.bound_slack,
        queue_slack: tol.queue_slack,
        dominance_slack: tol.dominance_slack,
    };
    let mut bounds = check_bounds(&rows, &ctx);
    bounds.adagrad = adagrad;
    if adagrad == Some(false) {
        bounds.violations.push("adagrad".into());
    }

    let resets = if cfg.algorithm == Algorithm::Doubling {
        records
            .windows(2)
            .filter(|w| w[0].phase != w[1].phase && w[1].x == x1)
            .map(|w| w[1].t)
            .collect()
    } else {
        Vec::new()
    };
    let last = records.last();
    let summary = Summary {
        algorithm: cfg.algorithm,
        horizon: cfg.horizon,
        seed: cfg.seed,
        lipschitz: env.lipschitz,
        diameter: spec.diameter,
        alpha: spec.alpha,
        final_regret: last.and_then(|r| r.regret),
        final_ccv: last.map_or(0.0, |r| r.ccv),
        max_lambda_q: records.iter().map(|r| r.lambda * r.q).fold(0.0, f64::max),
        final_path_len: last.and_then(|r| r.path_len),
        final_err_f: last.and_then(|r| r.err_f),
        grid_agrees: benchmark
            .as_ref()
            .and_then(|b| b.grid_agrees(tol.benchmark.grid_resolution)),
        benchmark,
        benchmark_infeasible,
        regret_slack,
        resets,
        bound_ok: bounds.all_ok(),
        bounds,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok(RunOutput {
        config: cfg.clone(),
        records,
        summary,
    })
}

/// `sum <grad_t, x_t - x*> <= sqrt(2) D sqrt(sum ||grad_t||^2)` at every `t`.
fn adagrad_holds(records: &[RoundRecord], star: &[f64], diameter: f64, slack: f64) -> bool {
    let mut lin = 0.0;
    let mut sq = 0.0;
    records.iter().all(|r| {
        lin += dot(&r.surrogate_grad, &r.x) - dot(&r.surrogate_grad, star);
        sq += norm_sq(&r.surrogate_grad);
        lin <= adagrad_regret_bound(diameter, sq) + slack
    })
}

/// Runs independent configurations on separate threads; results come back
/// in input order.
pub fn run_many(configs: &[ExperimentConfig]) -> Vec<Result<RunOutput, RunFailure>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| s.spawn(move || run_experiment(c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("run thread panicked"))
            .collect()
    })
}
