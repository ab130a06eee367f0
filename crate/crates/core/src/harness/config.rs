use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::adversary::AdversaryKind;
use super::benchmark::BenchmarkOptions;
use crate::error::{invalid, Result};
use crate::shortest_path::GeneratorParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Anytime,
    /// Anytime policy whose `lambda` shrinks with the observed constraint
    /// gradients instead of with `t`.
    GradAdaptive,
    FixedHorizon,
    Doubling,
    Dynamic,
    Optimistic,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Anytime => "anytime",
            Algorithm::GradAdaptive => "grad-adaptive",
            Algorithm::FixedHorizon => "fixed-horizon",
            Algorithm::Doubling => "doubling",
            Algorithm::Dynamic => "dynamic",
            Algorithm::Optimistic => "optimistic",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InstanceSpec {
    /// Bound-stress sequence on `[-1, 1]^dim`.
    Synthetic {
        family: AdversaryKind,
        #[serde(default = "default_dim")]
        dim: usize,
        /// Total comparator movement for the drifting family.
        #[serde(default)]
        path_budget: f64,
    },
    /// Generated routing game. Its `horizon` field is replaced by the
    /// experiment horizon.
    ShortestPath(#[serde(default)] GeneratorParams),
}

fn default_dim() -> usize {
    2
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictionMode {
    /// Next round's functions exactly.
    Perfect,
    /// No forecast; the policy predicts zero gradients.
    Zero,
    /// Next round's functions plus a random linear term with
    /// `N(0, sigma^2)` coefficients.
    Noisy { sigma: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Projection accuracy for oracle-based sets.
    pub proj_tol: f64,
    /// Additive slack on regret and violation bounds.
    pub bound_slack: f64,
    /// Slack on `lambda_t Q(t) >= lambda_{t-1} Q(t-1)`.
    pub queue_slack: f64,
    /// Slack on `alpha CCV_t <= Q(t)`.
    pub dominance_slack: f64,
    pub benchmark: BenchmarkOptions,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            proj_tol: 1e-6,
            bound_slack: 1e-6,
            queue_slack: 1e-12,
            dominance_slack: 1e-9,
            benchmark: BenchmarkOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub instance: InstanceSpec,
    pub horizon: usize,
    pub seed: u64,
    /// Forecasts for the optimistic policy; ignored by the others.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictions: Option<PredictionMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    pub fn synthetic(
        algorithm: Algorithm,
        family: AdversaryKind,
        dim: usize,
        horizon: usize,
        seed: u64,
    ) -> Self {
        Self {
            algorithm,
            instance: InstanceSpec::Synthetic {
                family,
                dim,
                path_budget: 0.0,
            },
            horizon,
            seed,
            predictions: None,
            output_dir: None,
            tolerances: Tolerances::default(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return invalid("horizon must be >= 1");
        }
        if let InstanceSpec::Synthetic {
            dim, path_budget, ..
        } = &self.instance
        {
            if *dim < 1 {
                return invalid("dim must be >= 1");
            }
            if !(*path_budget >= 0.0 && path_budget.is_finite()) {
                return invalid("path_budget must be finite and >= 0");
            }
        }
        if let Some(PredictionMode::Noisy { sigma }) = self.predictions {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return invalid("noise level must be finite and >= 0");
            }
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("proj_tol", t.proj_tol),
            ("bound_slack", t.bound_slack),
            ("queue_slack", t.queue_slack),
            ("dominance_slack", t.dominance_slack),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return invalid(format!("{name} must be finite and >= 0"));
            }
        }
        if !(t.proj_tol > 0.0) {
            return invalid("proj_tol must be positive");
        }
        Ok(())
    }
}
