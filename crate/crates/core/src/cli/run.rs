//! Single experiment runs: integrate, evaluate observables, write outputs.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::config::RunPlan;
use super::{CliError, CliResult};
use crate::dynamics::FlowSystem;
use crate::integrate::{integrate, write_trajectory_csv, Trajectory};
use crate::observe::{series, write_observables_csv, Observable, ObservableSeries};
use crate::profile::Profile;

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub variant: String,
    pub alpha: f64,
    pub power_index: u32,
    pub final_time: f64,
    pub final_x: Profile,
    pub final_y: Profile,
    pub initial_fenchel: f64,
    pub final_fenchel: f64,
    /// `max |G_F(t) - G_F(0)| / max(1, G_F(0))`.
    pub fenchel_drift: f64,
    /// Largest increase of `G_F` between consecutive records.
    pub fenchel_max_increase: f64,
    pub final_dist: f64,
    pub max_abs_energy: f64,
    pub max_simplex_deviation: f64,
    pub recorded_points: usize,
    pub wall_time_s: f64,
    pub config: serde_json::Value,
}

/// Everything a run produces, rendered in memory.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub observables: Vec<ObservableSeries>,
    pub trajectory_csv: Vec<u8>,
    pub observables_csv: Vec<u8>,
    pub summary: RunSummary,
}

fn find<'a>(all: &'a [ObservableSeries], name: &str) -> &'a ObservableSeries {
    all.iter().find(|s| s.name == name).expect("standard observables present")
}

/// Runs `plan` with its own flow system.
pub fn execute(plan: &RunPlan) -> crate::Result<RunOutput> {
    execute_with(plan, &plan.sys)
}

/// Runs `plan` with an alternative flow system (same game and regularizers).
pub fn execute_with(plan: &RunPlan, sys: &FlowSystem) -> crate::Result<RunOutput> {
    let start = Instant::now();
    let trajectory = integrate(sys, &plan.y0, &plan.integrator)?;
    let observables = Observable::standard(sys.game().n_agents())
        .into_iter()
        .map(|o| series(&trajectory, o, sys, &plan.reference))
        .collect::<crate::Result<Vec<_>>>()?;

    let mut trajectory_csv = Vec::new();
    write_trajectory_csv(&mut trajectory_csv, &trajectory).expect("writing to memory");
    let mut observables_csv = Vec::new();
    write_observables_csv(&mut observables_csv, &observables).expect("writing to memory");

    let fenchel = find(&observables, "fenchel");
    let simplex_dev = observables
        .iter()
        .filter(|s| s.name.starts_with("gs_"))
        .flat_map(|s| s.values.iter())
        .fold(0.0_f64, |m, v| m.max((v - 1.0).abs()));
    let params = sys.params();
    let summary = RunSummary {
        name: plan.name.clone(),
        variant: params.variant.name().to_string(),
        alpha: params.effective_alpha(),
        power_index: params.power_index,
        final_time: *trajectory.times.last().expect("nonempty"),
        final_x: trajectory.final_x().expect("nonempty").clone(),
        final_y: trajectory.final_y().expect("nonempty").clone(),
        initial_fenchel: fenchel.values[0],
        final_fenchel: fenchel.last().expect("nonempty"),
        fenchel_drift: fenchel.relative_drift(),
        fenchel_max_increase: fenchel.max_increase(),
        final_dist: find(&observables, "dist").last().expect("nonempty"),
        max_abs_energy: find(&observables, "energy").max_abs(),
        max_simplex_deviation: simplex_dev,
        recorded_points: trajectory.len(),
        wall_time_s: start.elapsed().as_secs_f64(),
        config: plan.echo.clone(),
    };
    Ok(RunOutput {
        trajectory,
        observables,
        trajectory_csv,
        observables_csv,
        summary,
    })
}

/// Writes `trajectory.csv`, `observables.csv` and `summary.json` into `dir`.
pub fn write_outputs(dir: &Path, out: &RunOutput) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::runtime(format!("writing {}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join("trajectory.csv"), &out.trajectory_csv).map_err(io)?;
    std::fs::write(dir.join("observables.csv"), &out.observables_csv).map_err(io)?;
    let json = serde_json::to_string_pretty(&out.summary).expect("summary serializes");
    std::fs::write(dir.join("summary.json"), json + "\n").map_err(io)?;
    Ok(())
}

/// `polygame run <cfg>`.
pub fn run_command(config: &Path) -> CliResult<RunSummary> {
    let plan = super::config::load_plan(config)?;
    let out = execute(&plan).map_err(CliError::runtime)?;
    write_outputs(&plan.output, &out)?;
    Ok(out.summary)
}
