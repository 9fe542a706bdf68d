//! Replicated runs and their on-disk artifacts.
//!
//! ```text
//! <output>/aggregate.json
//! <output>/run_000/config.toml       the run's own config (single replication)
//! <output>/run_000/metrics.csv
//! <output>/run_000/archive/
//! <output>/run_000/actor_critic/     PGA and DCG only
//! <output>/run_000/report.json       DCG only, with report_cells.csv
//! <output>/run_000/checkpoint/       latest snapshot when enabled
//! ```

use std::path::{Path, PathBuf};

use qdrl_core::envs::EnvSpec;
use qdrl_core::metrics::distillation_report;
use qdrl_core::runner::{run_with, Algorithm, IterationLog};

use crate::aggregate::{aggregate, metrics_csv, MetricsRow};
use crate::config::{emit_config, ExperimentConfig};
use crate::CliError;

/// When set, relative output directories are resolved against it.
pub const OUTPUT_ROOT_VAR: &str = "QDRL_OUTPUT_ROOT";

pub fn resolve_output_dir(config: &ExperimentConfig) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_VAR) {
        Some(root) if config.output_dir.is_relative() => PathBuf::from(root).join(&config.output_dir),
        _ => config.output_dir.clone(),
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub run_dirs: Vec<PathBuf>,
    pub metrics: Vec<Vec<MetricsRow>>,
}

fn row(log: &IterationLog) -> MetricsRow {
    MetricsRow {
        evaluations: log.evaluations,
        qd_score: log.qd_score,
        coverage: log.coverage,
        max_fitness: log.max_fitness,
    }
}

pub fn run_dir(output: &Path, replication: usize) -> PathBuf {
    output.join(format!("run_{replication:03}"))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(CliError::io(path))
}

/// Runs every replication into `output` and writes the cross-run summary.
pub fn run_experiment(config: &ExperimentConfig, output: &Path) -> Result<ExperimentSummary, CliError> {
    config.validate()?;
    std::fs::create_dir_all(output).map_err(CliError::io(output))?;
    let mut summary = ExperimentSummary {
        run_dirs: Vec::new(),
        metrics: Vec::new(),
    };
    for rep in 0..config.replications {
        let dir = run_dir(output, rep);
        std::fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
        let mut single = config.clone();
        single.replications = 1;
        single.run.seed = config.run.seed + rep as u64;
        write(&dir.join("config.toml"), &emit_config(&single))?;
        log::info!(
            "run {rep}: {} on {} with seed {}",
            single.run.algorithm.name(),
            single.run.env.name(),
            single.run.seed
        );

        let mut rows: Vec<MetricsRow> = Vec::new();
        let checkpoint = dir.join("checkpoint");
        let out = run_with(&single.run, |p| {
            if p.log.iteration % config.log_every == 0 {
                rows.push(row(p.log));
                log::debug!("run {rep}: {} evaluations, coverage {:.4}", p.log.evaluations, p.log.coverage);
            }
            if config.checkpoint_every > 0 && p.log.iteration % config.checkpoint_every == 0 {
                p.archive.save(&checkpoint.join("archive"))?;
                if let Some(ac) = p.actor_critic {
                    ac.save(&checkpoint.join("actor_critic"))?;
                }
            }
            Ok(())
        })
        .map_err(|source| CliError::Run { run: rep, source })?;
        let last = out.logs.last().expect("at least one iteration");
        if rows.last().map(|r| r.evaluations) != Some(last.evaluations) {
            rows.push(row(last));
        }
        write(&dir.join("metrics.csv"), &metrics_csv(&rows))?;
        out.archive.save(&dir.join("archive"))?;
        if let Some(ac) = &out.actor_critic {
            ac.save(&dir.join("actor_critic"))?;
        }
        if single.run.algorithm == Algorithm::DcgMe {
            let ac = out.actor_critic.as_ref().expect("dcg trainer");
            distillation_report(&out.archive, ac, &EnvSpec::new(single.run.env))?.save(&dir)?;
        }
        summary.run_dirs.push(dir);
        summary.metrics.push(rows);
    }
    let agg = aggregate(&summary.metrics);
    write(&output.join("aggregate.json"), &(serde_json::to_string_pretty(&agg)? + "\n"))?;
    Ok(summary)
}
