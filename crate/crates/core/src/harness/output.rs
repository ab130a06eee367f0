use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::bounds::{check_bounds, BoundContext, BoundReport};
use super::config::ExperimentConfig;
use super::runner::{RunOutput, Summary};
use crate::coco::RoundRecord;
use crate::error::{Error, Result};

pub const ROUNDS_FILE: &str = "rounds.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CURVES_FILE: &str = "curves.csv";

/// One line of `rounds.csv`. Columns that do not apply to the algorithm are
/// left empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRow {
    pub t: usize,
    pub cost: f64,
    pub violation: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub lambda: f64,
    pub eta: f64,
    pub grad_norm: f64,
    pub regret: Option<f64>,
    pub ccv: f64,
    pub path_len: Option<f64>,
    pub eps_f: Option<f64>,
    pub eps_g: Option<f64>,
}

impl From<&RoundRecord> for RoundRow {
    fn from(r: &RoundRecord) -> Self {
        Self {
            t: r.t,
            cost: r.cost,
            violation: r.violation,
            q: r.q,
            lambda: r.lambda,
            eta: r.eta,
            grad_norm: r.grad_norm,
            regret: r.regret,
            ccv: r.ccv,
            path_len: r.path_len,
            eps_f: r.eps_f,
            eps_g: r.eps_g,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CurveRow {
    t: usize,
    regret: Option<f64>,
    ccv: f64,
}

/// `summary.json`: the configuration echoed next to the run summary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SummaryFile {
    pub config: ExperimentConfig,
    pub summary: Summary,
}

pub fn write_rounds(records: &[RoundRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(RoundRow::from(r))?;
    }
    if records.is_empty() {
        w.write_record([
            "t",
            "cost",
            "violation",
            "Q",
            "lambda",
            "eta",
            "grad_norm",
            "regret",
            "ccv",
            "path_len",
            "eps_f",
            "eps_g",
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rounds(path: &Path) -> Result<Vec<RoundRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<RoundRow>, _>>()?;
    Ok(rows)
}

fn write_curves(records: &[RoundRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(CurveRow {
            t: r.t,
            regret: r.regret,
            ccv: r.ccv,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `rounds.csv`, `summary.json` and `curves.csv` into `dir`,
/// creating it if needed.
pub fn emit_outputs(out: &RunOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_rounds(&out.records, &dir.join(ROUNDS_FILE))?;
    write_curves(&out.records, &dir.join(CURVES_FILE))?;
    let file = SummaryFile {
        config: out.config.clone(),
        summary: out.summary.clone(),
    };
    fs::write(
        dir.join(SUMMARY_FILE),
        serde_json::to_string_pretty(&file)? + "\n",
    )?;
    Ok(())
}

/// Writes whatever rounds completed before a failure.
pub fn emit_partial(records: &[RoundRecord], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_rounds(records, &dir.join(ROUNDS_FILE))
}

/// Re-checks every bound from the files of one run directory.
pub fn verify_run_dir(dir: &Path) -> Result<BoundReport> {
    let text = fs::read_to_string(dir.join(SUMMARY_FILE))?;
    let file: SummaryFile = serde_json::from_str(&text)?;
    let rows = read_rounds(&dir.join(ROUNDS_FILE))?;
    let s = &file.summary;
    let tol = &file.config.tolerances;
    let ctx = BoundContext {
        algorithm: file.config.algorithm,
        lipschitz: s.lipschitz,
        diameter: s.diameter,
        alpha: s.alpha,
        regret_slack: s.regret_slack,
        bound_slack: tol.bound_slack,
        queue_slack: tol.queue_slack,
        dominance_slack: tol.dominance_slack,
    };
    let mut report = check_bounds(&rows, &ctx);
    // The linearized check needs iterates and gradients that are not
    // written out; carry the in-run verdict.
    report.adagrad = s.bounds.adagrad;
    Ok(report)
}

/// Run directories under `dir`: `dir` itself if it holds a summary,
/// otherwise its immediate subdirectories that do, sorted by name.
pub fn find_run_dirs(dir: &Path) -> Result<Vec<PathBuf>> {
    if dir.join(SUMMARY_FILE).is_file() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let mut found = Vec::new();
    for entry in fs::read_dir(dir)? {
        let p = entry?.path();
        if p.join(SUMMARY_FILE).is_file() {
            found.push(p);
        }
    }
    if found.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no {SUMMARY_FILE} in {} or its subdirectories",
            dir.display()
        )));
    }
    found.sort();
    Ok(found)
}
