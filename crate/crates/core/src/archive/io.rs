//! On-disk archive layout:
//!
//! ```text
//! <dir>/index.json        centroids, genotype architecture, cell table
//! <dir>/genotype.arch     architecture sidecar
//! <dir>/elites/cell_NNNNN.bin
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Archive, Centroids};
use crate::nn::{load_params, save_params, MlpArch};
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Index {
    dim: usize,
    centroids: Vec<Vec<f64>>,
    genotype_arch: String,
    cells: Vec<CellRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CellRecord {
    cell: usize,
    fitness: f64,
    descriptor: Vec<f64>,
    genotype: String,
}

impl Archive {
    pub fn save(&self, dir: &Path) -> Result<()> {
        let elites = dir.join("elites");
        fs::create_dir_all(&elites)?;
        let mut cells = Vec::with_capacity(self.len());
        for (cell, elite) in self.iter() {
            let file = format!("elites/cell_{cell:05}.bin");
            save_params(&dir.join(&file), &elite.genotype)?;
            cells.push(CellRecord {
                cell,
                fitness: elite.fitness,
                descriptor: elite.descriptor.clone(),
                genotype: file,
            });
        }
        let index = Index {
            dim: self.centroids.dim(),
            centroids: self.centroids.iter().map(<[f64]>::to_vec).collect(),
            genotype_arch: self.arch.to_string(),
            cells,
        };
        fs::write(dir.join("index.json"), serde_json::to_string_pretty(&index)?)?;
        fs::write(dir.join("genotype.arch"), self.arch.to_string())?;
        Ok(())
    }

    /// Loads an archive written by [`Archive::save`]. Elites are re-inserted
    /// in ascending cell order and must land in the cell they are filed under.
    pub fn load(dir: &Path) -> Result<Self> {
        let index_path = dir.join("index.json");
        let index: Index = serde_json::from_str(&fs::read_to_string(&index_path)?)?;
        let malformed = |reason: String| Error::Format {
            path: index_path.display().to_string(),
            reason,
        };
        let centroids = Centroids::new(index.centroids)?;
        if centroids.dim() != index.dim {
            return Err(malformed(format!(
                "dim {} does not match centroid width {}",
                index.dim,
                centroids.dim()
            )));
        }
        let arch: MlpArch = index.genotype_arch.parse()?;
        let mut archive = Archive::new(centroids, arch);
        for record in index.cells {
            let genotype = load_params(&dir.join(&record.genotype))?;
            let cell = archive.cell_index(&record.descriptor)?;
            if cell != record.cell {
                return Err(malformed(format!(
                    "elite filed under cell {} maps to cell {cell}",
                    record.cell
                )));
            }
            if !archive.try_insert(genotype, record.fitness, &record.descriptor)?.accepted() {
                return Err(malformed(format!("duplicate entry for cell {cell}")));
            }
        }
        Ok(archive)
    }

    /// `cell,fitness,d0,d1,...` with one row per occupied cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cell,fitness");
        for j in 0..self.centroids.dim() {
            let _ = write!(out, ",d{j}");
        }
        out.push('\n');
        for (cell, elite) in self.iter() {
            let _ = write!(out, "{cell},{}", elite.fitness);
            for v in &elite.descriptor {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}
