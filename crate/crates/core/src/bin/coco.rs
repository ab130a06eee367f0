use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anytime_coco::error::Error;
use anytime_coco::harness::{
    emit_outputs, emit_partial, find_run_dirs, run_experiment, run_many, verify_run_dir,
    ExperimentConfig, RunFailure, RunOutput,
};
use anytime_coco::shortest_path::io::write_instance;
use anytime_coco::shortest_path::{generate_instance, GeneratorParams};
use clap::{Parser, Subcommand, ValueEnum};

const EXIT_ERROR: u8 = 1;
const EXIT_BOUND: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_CONVERGENCE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "coco",
    version,
    about = "Anytime constrained online convex optimization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write rounds.csv, summary.json and curves.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several experiments concurrently, one output directory each.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        configs: Vec<PathBuf>,
        /// Parent directory for configs without `output_dir`.
        #[arg(long, default_value = "outputs")]
        out: PathBuf,
    },
    /// Generate an instance and write it to disk.
    GenInstance {
        #[arg(long, value_enum)]
        kind: InstanceKind,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Re-check the bounds of every run under a directory.
    VerifyBounds {
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum InstanceKind {
    ShortestPath,
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::Convergence { .. } | Error::Numerical(_) | Error::Overflow(_) => EXIT_CONVERGENCE,
        Error::Solver { source, .. } => error_code(source),
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        _ => EXIT_ERROR,
    }
}

fn default_dir(cfg: &ExperimentConfig, parent: &Path, index: Option<usize>) -> PathBuf {
    let name = match index {
        Some(i) => format!("{i:02}-{}-seed{}", cfg.algorithm.name(), cfg.seed),
        None => format!("{}-seed{}", cfg.algorithm.name(), cfg.seed),
    };
    parent.join(name)
}

/// Writes the outputs of one finished or failed run and returns its exit code.
fn finish(result: Result<RunOutput, RunFailure>, dir: &Path) -> u8 {
    match result {
        Ok(out) => {
            if let Err(e) = emit_outputs(&out, dir) {
                eprintln!("{}: {e}", dir.display());
                return EXIT_ERROR;
            }
            let s = &out.summary;
            let regret = s
                .final_regret
                .map_or("n/a".to_string(), |r| format!("{r:.6}"));
            println!(
                "{}: {} T={} regret={} ccv={:.6} bounds={} ({:.2}s)",
                dir.display(),
                s.algorithm.name(),
                s.horizon,
                regret,
                s.final_ccv,
                if s.bound_ok { "ok" } else { "VIOLATED" },
                s.wall_time_s
            );
            if s.benchmark_infeasible {
                eprintln!("{}: no feasible fixed benchmark", dir.display());
                EXIT_INFEASIBLE
            } else if !s.bound_ok {
                eprintln!("{}: {}", dir.display(), s.bounds.violations.join(", "));
                EXIT_BOUND
            } else {
                0
            }
        }
        Err(fail) => {
            eprintln!("{}: {fail}", dir.display());
            if let Err(e) = emit_partial(&fail.records, dir) {
                eprintln!("{}: {e}", dir.display());
            }
            error_code(&fail.error)
        }
    }
}

fn run(config: &Path, out: Option<PathBuf>) -> Result<u8, Error> {
    let cfg = ExperimentConfig::from_file(config)?;
    let dir = out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| default_dir(&cfg, Path::new("outputs"), None));
    Ok(finish(run_experiment(&cfg), &dir))
}

fn compare(paths: &[PathBuf], parent: &Path) -> Result<u8, Error> {
    let cfgs = paths
        .iter()
        .map(|p| ExperimentConfig::from_file(p))
        .collect::<Result<Vec<_>, _>>()?;
    let dirs: Vec<PathBuf> = cfgs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            c.output_dir
                .clone()
                .unwrap_or_else(|| default_dir(c, parent, Some(i)))
        })
        .collect();
    for (i, d) in dirs.iter().enumerate() {
        if dirs[..i].contains(d) {
            return Err(Error::InvalidInput(format!(
                "two runs share output directory {}",
                d.display()
            )));
        }
    }
    let codes: Vec<u8> = run_many(&cfgs)
        .into_iter()
        .zip(&dirs)
        .map(|(r, d)| finish(r, d))
        .collect();
    Ok(codes.into_iter().find(|&c| c != 0).unwrap_or(0))
}

fn gen_instance(
    seed: u64,
    out: &Path,
    n: Option<usize>,
    m: Option<usize>,
    horizon: Option<usize>,
) -> Result<u8, Error> {
    let d = GeneratorParams::default();
    let params = GeneratorParams {
        n: n.unwrap_or(d.n),
        m: m.unwrap_or(d.m),
        horizon: horizon.unwrap_or(d.horizon),
        ..d
    };
    let inst = generate_instance(seed, &params)?;
    write_instance(out, &inst)?;
    println!(
        "{}: {} nodes, {} edges, {} rounds",
        out.display(),
        inst.graph.node_count(),
        inst.graph.edge_count(),
        inst.rounds.len()
    );
    Ok(0)
}

fn verify(dir: &Path) -> Result<u8, Error> {
    let mut code = 0;
    for run in find_run_dirs(dir)? {
        let rep = verify_run_dir(&run)?;
        if rep.all_ok() {
            println!("{}: ok", run.display());
        } else {
            println!("{}: VIOLATED {}", run.display(), rep.violations.join(", "));
            code = EXIT_BOUND;
        }
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out } => run(&config, out),
        Command::Compare { configs, out } => compare(&configs, &out),
        Command::GenInstance {
            kind: InstanceKind::ShortestPath,
            seed,
            out,
            n,
            m,
            horizon,
        } => gen_instance(seed, &out, n, m, horizon),
        Command::VerifyBounds { dir } => verify(&dir),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_code(&e))
        }
    }
}
