use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use polygame::cli::plot::{plot_command, PlotKind};
use polygame::cli::run::run_command;
use polygame::cli::sweep::sweep_command;
use polygame::cli::verify::verify_command;
use polygame::cli::CliError;

#[derive(Parser)]
#[command(name = "polygame", version, about = "Learning dynamics in poly-matrix zero-sum games")]
struct Cli {
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write trajectory, observables and summary.
    Run { config: PathBuf },
    /// Run a configuration once per entry of its `alphas` list.
    Sweep { config: PathBuf },
    /// Run a verification suite: conservation, dissipation, equivalence, regularizers, structure or all.
    Verify { suite: String },
    /// Render CSV output as SVG.
    Plot {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = PlotKind::Series)]
        kind: PlotKind,
        #[arg(long)]
        out: PathBuf,
        /// Observable to draw (repeatable); all when omitted.
        #[arg(long)]
        name: Vec<String>,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config } => {
            let s = run_command(&config)?;
            println!(
                "{}: {} alpha {} T {} G_F {:.6e} -> {:.6e}, dist {:.6e}",
                s.name, s.variant, s.alpha, s.final_time, s.initial_fenchel, s.final_fenchel, s.final_dist
            );
        }
        Command::Sweep { config } => {
            let rows = sweep_command(&config, cli.jobs)?;
            let mut failed = 0;
            for r in &rows {
                match &r.outcome {
                    Ok(s) => println!("alpha {}: dist {:.6e}, G_F {:.6e}", r.alpha, s.final_dist, s.final_fenchel),
                    Err(e) => {
                        failed += 1;
                        println!("alpha {}: failed: {e}", r.alpha);
                    }
                }
            }
            if failed > 0 {
                return Err(CliError::Runtime(format!("{failed} of {} sweep runs failed", rows.len())));
            }
        }
        Command::Verify { suite } => {
            verify_command(&suite)?;
        }
        Command::Plot { csv, kind, out, name } => plot_command(&csv, kind, &out, &name)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
