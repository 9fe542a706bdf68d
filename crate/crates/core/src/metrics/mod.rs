//! Post-hoc evaluation of archives and of the conditioned actor as a
//! distilled policy for the whole archive.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::archive::Archive;
use crate::envs::{EnvSpec, EvalResult};
use crate::rl::{euclidean, ActorCritic};
use crate::runner::{evaluate_population, rollout_actor};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemMode {
    /// Re-roll each elite.
    Archive,
    /// Roll out the actor conditioned on each elite's descriptor.
    Policy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub cell: usize,
    pub stored_descriptor: Vec<f64>,
    pub archive_descriptor: Vec<f64>,
    pub policy_descriptor: Vec<f64>,
    pub policy_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistillationReport {
    pub archive_qd_score: f64,
    pub dc_qd_score: f64,
    pub archive_dem: f64,
    pub policy_dem: f64,
    pub per_cell: Vec<CellReport>,
}

#[derive(Serialize)]
struct Summary<'a> {
    archive_qd_score: f64,
    dc_qd_score: f64,
    archive_dem: f64,
    policy_dem: f64,
    cells: usize,
    per_cell_csv: &'a str,
}

fn stored(archive: &Archive) -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
    if archive.is_empty() {
        return Err(Error::EmptyArchive);
    }
    Ok(archive.iter().map(|(c, e)| (c, e.descriptor.clone())).unzip())
}

fn policy_rollouts(archive: &Archive, ac: &ActorCritic, env: &EnvSpec) -> Result<(Vec<usize>, Vec<Vec<f64>>, Vec<EvalResult>)> {
    let (cells, descriptors) = stored(archive)?;
    let results = rollout_actor(ac, env, &descriptors)?;
    Ok((cells, descriptors, results))
}

fn archive_rollouts(archive: &Archive, env: &EnvSpec) -> Result<Vec<EvalResult>> {
    let genotypes: Vec<_> = archive.iter().map(|(_, e)| e.genotype.clone()).collect();
    evaluate_population(env, archive.arch(), &genotypes)
}

fn mean_error(stored: &[Vec<f64>], results: &[EvalResult]) -> f64 {
    let total: f64 = stored.iter().zip(results).map(|(d, r)| euclidean(d, &r.descriptor)).sum();
    total / stored.len() as f64
}

/// Total fitness of the actor conditioned on every stored descriptor.
pub fn dc_qd_score(archive: &Archive, ac: &ActorCritic, env: &EnvSpec) -> Result<f64> {
    let (_, _, results) = policy_rollouts(archive, ac, env)?;
    Ok(results.iter().map(|r| r.fitness).sum())
}

/// Mean Euclidean distance between stored descriptors and those reached on
/// re-evaluation. Policy mode needs a conditioned `ac`.
pub fn descriptor_error_mean(archive: &Archive, env: &EnvSpec, mode: DemMode, ac: Option<&ActorCritic>) -> Result<f64> {
    match mode {
        DemMode::Archive => {
            let (_, descriptors) = stored(archive)?;
            Ok(mean_error(&descriptors, &archive_rollouts(archive, env)?))
        }
        DemMode::Policy => {
            let ac = ac.ok_or(Error::NotConditioned("policy descriptor error"))?;
            let (_, descriptors, results) = policy_rollouts(archive, ac, env)?;
            Ok(mean_error(&descriptors, &results))
        }
    }
}

pub fn distillation_report(archive: &Archive, ac: &ActorCritic, env: &EnvSpec) -> Result<DistillationReport> {
    let (cells, descriptors, policy) = policy_rollouts(archive, ac, env)?;
    let reeval = archive_rollouts(archive, env)?;
    let per_cell = cells
        .iter()
        .zip(&descriptors)
        .zip(policy.iter().zip(&reeval))
        .map(|((&cell, d), (p, a))| CellReport {
            cell,
            stored_descriptor: d.clone(),
            archive_descriptor: a.descriptor.clone(),
            policy_descriptor: p.descriptor.clone(),
            policy_fitness: p.fitness,
        })
        .collect();
    Ok(DistillationReport {
        archive_qd_score: archive.metrics().qd_score,
        dc_qd_score: policy.iter().map(|r| r.fitness).sum(),
        archive_dem: mean_error(&descriptors, &reeval),
        policy_dem: mean_error(&descriptors, &policy),
        per_cell,
    })
}

impl DistillationReport {
    /// One row per occupied cell.
    pub fn to_csv(&self) -> String {
        let dim = self.per_cell.first().map_or(0, |c| c.stored_descriptor.len());
        let mut out = String::from("cell");
        for prefix in ["stored", "archive", "policy"] {
            for j in 0..dim {
                write!(out, ",{prefix}_d{j}").expect("string write");
            }
        }
        out.push_str(",policy_fitness\n");
        for c in &self.per_cell {
            write!(out, "{}", c.cell).expect("string write");
            for v in c.stored_descriptor.iter().chain(&c.archive_descriptor).chain(&c.policy_descriptor) {
                write!(out, ",{v}").expect("string write");
            }
            writeln!(out, ",{}", c.policy_fitness).expect("string write");
        }
        out
    }

    /// Writes `report.json` (summary) and `report_cells.csv` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let csv_name = "report_cells.csv";
        std::fs::write(dir.join(csv_name), self.to_csv())?;
        let summary = Summary {
            archive_qd_score: self.archive_qd_score,
            dc_qd_score: self.dc_qd_score,
            archive_dem: self.archive_dem,
            policy_dem: self.policy_dem,
            cells: self.per_cell.len(),
            per_cell_csv: csv_name,
        };
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
        Ok(())
    }
}
