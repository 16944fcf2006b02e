//! Runs one experiment per `alpha` and collects the endpoints.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{load_plan, RunPlan};
use super::run::{execute_with, write_outputs, RunSummary};
use super::{CliError, CliResult};
use crate::dynamics::FlowParams;

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub alpha: f64,
    pub outcome: Result<RunSummary, String>,
}

/// Removes repeated values, keeping first occurrences; returns the duplicates.
pub fn dedup_alphas(alphas: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut kept: Vec<f64> = Vec::new();
    let mut dropped = Vec::new();
    for &a in alphas {
        if kept.contains(&a) {
            dropped.push(a);
        } else {
            kept.push(a);
        }
    }
    (kept, dropped)
}

pub fn alpha_dir(root: &Path, alpha: f64) -> PathBuf {
    root.join(format!("alpha_{alpha}"))
}

/// Executes every `alpha` of `plan`, at most `jobs` at a time.
///
/// Each run writes into its own `alpha_<value>` directory; failures are
/// recorded per row and do not stop the other runs.
pub fn execute_sweep(plan: &RunPlan, jobs: usize) -> CliResult<Vec<SweepRow>> {
    let alphas = plan
        .alphas
        .as_ref()
        .ok_or_else(|| CliError::config("field `alphas`: required for sweep"))?;
    if alphas.is_empty() {
        return Err(CliError::config("field `alphas`: list is empty"));
    }
    let (alphas, dropped) = dedup_alphas(alphas);
    for a in &dropped {
        eprintln!("warning: duplicate alpha {a} ignored");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(CliError::runtime)?;
    let rows = pool.install(|| {
        alphas
            .par_iter()
            .map(|&alpha| {
                let params = plan.sys.params();
                let outcome = FlowParams::new(params.variant, alpha, params.power_index)
                    .and_then(|p| plan.sys.with_params(p))
                    .and_then(|sys| execute_with(plan, &sys))
                    .map_err(|e| e.to_string())
                    .and_then(|out| {
                        write_outputs(&alpha_dir(&plan.output, alpha), &out).map_err(|e| e.to_string())?;
                        Ok(out.summary)
                    });
                SweepRow { alpha, outcome }
            })
            .collect()
    });
    Ok(rows)
}

/// Renders `alpha,final_dist,final_fenchel`; failed rows carry `NaN`.
pub fn sweep_csv(rows: &[SweepRow]) -> Vec<u8> {
    let mut out = Vec::new();
    writeln!(out, "alpha,final_dist,final_fenchel").unwrap();
    for r in rows {
        let (d, f) = match &r.outcome {
            Ok(s) => (s.final_dist, s.final_fenchel),
            Err(_) => (f64::NAN, f64::NAN),
        };
        writeln!(out, "{:.16e},{:.16e},{:.16e}", r.alpha, d, f).unwrap();
    }
    out
}

/// `polygame sweep <cfg>`: returns the rows; errors already include per-row failures.
pub fn sweep_command(config: &Path, jobs: usize) -> CliResult<Vec<SweepRow>> {
    let plan = load_plan(config)?;
    let rows = execute_sweep(&plan, jobs)?;
    std::fs::create_dir_all(&plan.output)
        .and_then(|_| std::fs::write(plan.output.join("sweep.csv"), sweep_csv(&rows)))
        .map_err(|e| CliError::runtime(format!("writing {}: {e}", plan.output.display())))?;
    Ok(rows)
}
