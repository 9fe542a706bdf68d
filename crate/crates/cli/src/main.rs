use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qdrl_cli::config::parse_config;
use qdrl_cli::experiment::{resolve_output_dir, run_experiment};
use qdrl_cli::plot::plot_archive;
use qdrl_cli::CliError;
use qdrl_core::archive::Archive;
use qdrl_core::envs::EnvSpec;
use qdrl_core::metrics::distillation_report;
use qdrl_core::rl::ActorCritic;

/// Quality-diversity experiments with policy-gradient and
/// descriptor-conditioned variation.
#[derive(Parser)]
#[command(name = "qdrl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML file.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the file.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Render a saved archive as an SVG heatmap.
    Plot {
        archive: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Recompute and print the distillation report of a finished run.
    Report { run_dir: PathBuf },
}

fn read_config(path: &PathBuf) -> Result<qdrl_cli::config::ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, output_dir } => {
            let mut cfg = read_config(&config)?;
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            let out = resolve_output_dir(&cfg);
            let summary = run_experiment(&cfg, &out)?;
            for (dir, rows) in summary.run_dirs.iter().zip(&summary.metrics) {
                if let Some(last) = rows.last() {
                    println!(
                        "{}: {} evaluations, qd_score {:.1}, coverage {:.4}",
                        dir.display(),
                        last.evaluations,
                        last.qd_score,
                        last.coverage
                    );
                }
            }
            println!("aggregate written to {}", out.join("aggregate.json").display());
            Ok(())
        }
        Command::Plot { archive, output } => {
            plot_archive(&archive, &output)?;
            println!("wrote {}", output.display());
            Ok(())
        }
        Command::Report { run_dir } => {
            let cfg = read_config(&run_dir.join("config.toml"))?;
            let archive = Archive::load(&run_dir.join("archive"))?;
            let m = archive.metrics();
            println!("cells {} coverage {:.4} qd_score {:.3}", archive.len(), m.coverage, m.qd_score);
            let ac_dir = run_dir.join("actor_critic");
            let ac = ActorCritic::load(&ac_dir, &cfg.run.td3).ok().filter(|ac| ac.is_conditioned());
            match ac {
                Some(ac) => {
                    let report = distillation_report(&archive, &ac, &EnvSpec::new(cfg.run.env))?;
                    report.save(&run_dir)?;
                    println!(
                        "dc_qd_score {:.3} archive_dem {} policy_dem {:.6}",
                        report.dc_qd_score, report.archive_dem, report.policy_dem
                    );
                }
                None => println!("no conditioned actor in {}", ac_dir.display()),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
