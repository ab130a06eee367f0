//! Experiment orchestration: instances, benchmarks, bound checks and output.

pub mod adversary;
pub mod benchmark;
pub mod bounds;
pub mod config;
pub mod output;
pub mod runner;

pub use adversary::{synthetic_adversary, AdversaryKind, SyntheticInstance};
pub use benchmark::{
    compute_dynamic_comparator, compute_static_benchmark, BenchmarkMethod, BenchmarkOptions,
    BenchmarkResult, BenchmarkSolver,
};
pub use bounds::{check_bounds, BoundContext, BoundReport};
pub use config::{Algorithm, ExperimentConfig, InstanceSpec, PredictionMode, Tolerances};
pub use output::{
    emit_outputs, emit_partial, find_run_dirs, read_rounds, verify_run_dir, write_rounds, RoundRow,
    SummaryFile, CURVES_FILE, ROUNDS_FILE, SUMMARY_FILE,
};
pub use runner::{
    build_environment, run_experiment, run_in_environment, run_many, Environment, Perturbed,
    RunFailure, RunOutput, Summary,
};
