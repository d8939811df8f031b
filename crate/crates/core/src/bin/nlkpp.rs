//! Command-line front end: `simulate`, `certify` and `sweep`.
//!
//! Exit status: 0 on success, 2 for invalid input, 3 for numerical failure,
//! 1 for I/O errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nonlocal_kpp::scenario::{self, OUTPUT_DIR_ENV};
use nonlocal_kpp::Result;

#[derive(Parser)]
#[command(
    name = "nlkpp",
    version,
    about = "Nonlocal Fisher-KPP simulation, kernel certification and sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its artifacts.
    #[command(after_help = format!("The output directory is --out, else ${OUTPUT_DIR_ENV}, else output.directory of the scenario."))]
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Suppress the summary printout.
        #[arg(long)]
        quiet: bool,
    },
    /// Build and certify the scenario's kernel without simulating.
    Certify {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter sweep and write its summary table.
    Sweep {
        sweep: PathBuf,
        /// Worker threads; 0 uses one per core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.6e}"))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            scenario: path,
            out,
            quiet,
        } => {
            let s = scenario::parse_scenario(&path)?;
            let dir = scenario::resolve_output_dir(out.as_deref(), &s);
            let outcome = scenario::run_scenario(&s, &dir)?;
            if !quiet {
                let r = &outcome.summary;
                println!("scenario        {}", r.name);
                println!("output          {}", dir.display());
                println!("t_final         {}", opt(r.t_final));
                println!("sup|u-1| final  {}", opt(r.sup_dist_one_final));
                println!("V final         {}", opt(r.v_final));
                println!(
                    "eigen           {} {}",
                    r.eigen_verdict,
                    opt(r.eigen_witness)
                );
                println!(
                    "bochner         {} {}",
                    r.bochner_verdict,
                    opt(r.bochner_witness)
                );
                println!("abscissa        {}", opt(r.spectral_abscissa));
                println!("steps           {}", r.accepted_steps.unwrap_or(0));
                println!("wall time       {:.3}s", r.wall_time_s);
            }
        }
        Command::Certify {
            scenario: path,
            out,
        } => {
            let s = scenario::parse_scenario(&path)?;
            let dir = out.or_else(|| {
                std::env::var_os(OUTPUT_DIR_ENV)
                    .filter(|v| !v.is_empty())
                    .map(PathBuf::from)
            });
            let records = scenario::certify_scenario(&s, dir.as_deref())?;
            println!("method,verdict,witness,tolerance,grid_n,kernel_family,sigma");
            for r in records {
                println!(
                    "{},{},{:e},{:e},{},{},{}",
                    r.method,
                    r.verdict,
                    r.witness,
                    r.tolerance,
                    r.grid_n,
                    r.kernel_family,
                    r.sigma.map_or(String::new(), |s| s.to_string())
                );
            }
        }
        Command::Sweep {
            sweep: path,
            jobs,
            out,
        } => {
            let sweep = scenario::parse_sweep(&path)?;
            let dir = out
                .or_else(|| {
                    std::env::var_os(OUTPUT_DIR_ENV)
                        .filter(|v| !v.is_empty())
                        .map(PathBuf::from)
                })
                .unwrap_or_else(|| sweep.output_dir());
            let rows = scenario::run_sweep(&sweep, &dir, jobs)?;
            let failed = rows.iter().filter(|r| r.status != "ok").count();
            println!(
                "{} points, {} failed, summary in {}",
                rows.len(),
                failed,
                dir.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
