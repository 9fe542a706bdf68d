//! CVT MAP-Elites archive.
//!
//! The descriptor space `[0,1]^dim` is split into Voronoi cells around
//! k-means centroids. Each cell keeps at most one elite, replaced only by a
//! strictly fitter candidate.

mod cvt;
mod io;

pub use cvt::{cvt_centroids, Centroids};

use rand::Rng as _;

use crate::nn::{MlpArch, ParamVector};
use crate::{Error, Result, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct Elite {
    pub genotype: ParamVector,
    pub fitness: f64,
    pub descriptor: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AddOutcome {
    InsertedNew,
    Replaced,
    Rejected,
}

impl AddOutcome {
    pub fn accepted(self) -> bool {
        !matches!(self, AddOutcome::Rejected)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArchiveMetrics {
    pub qd_score: f64,
    pub coverage: f64,
    /// `None` for an empty archive.
    pub max_fitness: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Archive {
    centroids: Centroids,
    /// Architecture shared by every stored genotype.
    arch: MlpArch,
    cells: Vec<Option<Elite>>,
    /// Occupied cell indices in order of first occupation.
    occupied: Vec<usize>,
}

impl Archive {
    pub fn new(centroids: Centroids, arch: MlpArch) -> Self {
        let cells = vec![None; centroids.count()];
        Self {
            centroids,
            arch,
            cells,
            occupied: Vec::new(),
        }
    }

    pub fn centroids(&self) -> &Centroids {
        &self.centroids
    }

    pub fn arch(&self) -> &MlpArch {
        &self.arch
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn get(&self, cell: usize) -> Option<&Elite> {
        self.cells.get(cell).and_then(Option::as_ref)
    }

    /// Occupied cells in ascending cell order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &Elite)> {
        self.cells
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.as_ref().map(|e| (i, e)))
    }

    pub fn cell_index(&self, descriptor: &[f64]) -> Result<usize> {
        self.centroids.cell_index(descriptor)
    }

    /// Inserts when the target cell is empty or the candidate is strictly
    /// fitter than its incumbent.
    pub fn try_insert(
        &mut self,
        genotype: ParamVector,
        fitness: f64,
        descriptor: &[f64],
    ) -> Result<AddOutcome> {
        if !fitness.is_finite() {
            return Err(Error::NonFiniteFitness(fitness));
        }
        if genotype.len() != self.arch.param_count() {
            return Err(Error::dims("genotype", self.arch.param_count(), genotype.len()));
        }
        let cell = self.centroids.cell_index(descriptor)?;
        let outcome = match &self.cells[cell] {
            None => AddOutcome::InsertedNew,
            Some(incumbent) if incumbent.fitness < fitness => AddOutcome::Replaced,
            Some(_) => return Ok(AddOutcome::Rejected),
        };
        if outcome == AddOutcome::InsertedNew {
            self.occupied.push(cell);
        }
        self.cells[cell] = Some(Elite {
            genotype,
            fitness,
            descriptor: descriptor.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        });
        Ok(outcome)
    }

    /// `k` elites drawn uniformly with replacement from the occupied cells.
    pub fn select_uniform(&self, k: usize, rng: &mut Rng) -> Result<Vec<&Elite>> {
        if self.occupied.is_empty() {
            return Err(Error::EmptyArchive);
        }
        Ok((0..k)
            .map(|_| {
                let cell = self.occupied[rng.random_range(0..self.occupied.len())];
                self.cells[cell].as_ref().expect("occupied cell has an elite")
            })
            .collect())
    }

    pub fn metrics(&self) -> ArchiveMetrics {
        let mut qd_score = 0.0;
        let mut max_fitness: Option<f64> = None;
        for (_, elite) in self.iter() {
            qd_score += elite.fitness;
            max_fitness = Some(max_fitness.map_or(elite.fitness, |m| m.max(elite.fitness)));
        }
        ArchiveMetrics {
            qd_score,
            coverage: self.occupied.len() as f64 / self.centroids.count() as f64,
            max_fitness,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_from_seed;

    fn line_archive(points: &[f64]) -> Archive {
        let centroids = Centroids::new(points.iter().map(|&p| vec![p]).collect()).unwrap();
        Archive::new(centroids, MlpArch::critic(1, &[1]).unwrap())
    }

    fn genome(tag: f64) -> ParamVector {
        ParamVector::new(vec![tag; 4])
    }

    #[test]
    fn insertion_rules() {
        let mut a = line_archive(&[0.1, 0.5, 0.9]);
        assert_eq!(a.try_insert(genome(1.0), 3.0, &[0.45]).unwrap(), AddOutcome::InsertedNew);
        assert_eq!(a.try_insert(genome(2.0), 3.0, &[0.5]).unwrap(), AddOutcome::Rejected);
        assert_eq!(a.try_insert(genome(3.0), 2.0, &[0.55]).unwrap(), AddOutcome::Rejected);
        assert_eq!(a.get(1).unwrap().genotype, genome(1.0));
        assert_eq!(a.try_insert(genome(4.0), 3.5, &[0.5]).unwrap(), AddOutcome::Replaced);
        assert_eq!(a.get(1).unwrap().fitness, 3.5);
        assert_eq!(a.len(), 1);
    }

    #[test]
    fn non_finite_fitness_is_an_error() {
        let mut a = line_archive(&[0.5]);
        for bad in [f64::NAN, f64::INFINITY, f64::NEG_INFINITY] {
            assert!(matches!(
                a.try_insert(genome(0.0), bad, &[0.5]),
                Err(Error::NonFiniteFitness(_))
            ));
        }
        assert!(a.is_empty());
    }

    #[test]
    fn out_of_bounds_descriptor_is_clamped_for_storage() {
        let mut a = line_archive(&[0.1, 0.9]);
        a.try_insert(genome(0.0), 1.0, &[1.3]).unwrap();
        assert_eq!(a.get(1).unwrap().descriptor, vec![1.0]);
    }

    #[test]
    fn metrics_of_empty_and_small_archives() {
        let centroids = cvt_centroids(1024, 2, 0);
        let mut a = Archive::new(centroids, MlpArch::critic(1, &[1]).unwrap());
        let m = a.metrics();
        assert_eq!((m.qd_score, m.coverage, m.max_fitness), (0.0, 0.0, None));
        a.try_insert(genome(0.0), 2.0, &[0.1, 0.1]).unwrap();
        a.try_insert(genome(0.0), 5.0, &[0.9, 0.9]).unwrap();
        let m = a.metrics();
        assert_eq!((m.qd_score, m.coverage, m.max_fitness), (7.0, 2.0 / 1024.0, Some(5.0)));
    }

    #[test]
    fn selection_from_single_occupant() {
        let mut a = line_archive(&[0.2, 0.8]);
        assert!(matches!(
            a.select_uniform(1, &mut rng_from_seed(0)),
            Err(Error::EmptyArchive)
        ));
        a.try_insert(genome(7.0), 1.0, &[0.9]).unwrap();
        let picks = a.select_uniform(3, &mut rng_from_seed(0)).unwrap();
        assert_eq!(picks.len(), 3);
        assert!(picks.iter().all(|e| e.genotype == genome(7.0)));
    }

    #[test]
    fn selection_is_uniform_and_deterministic() {
        let mut a = line_archive(&[0.1, 0.3, 0.5, 0.7, 0.9]);
        for (i, d) in [0.1, 0.3, 0.7, 0.9].iter().enumerate() {
            a.try_insert(genome(i as f64), 1.0, &[*d]).unwrap();
        }
        let draws = 100_000;
        let picks = a.select_uniform(draws, &mut rng_from_seed(5)).unwrap();
        let mut counts = [0usize; 4];
        for e in &picks {
            counts[e.genotype[0] as usize] += 1;
        }
        // Multinomial: σ = sqrt(n p (1-p)).
        let sigma = (draws as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * 0.25).abs() < 3.0 * sigma, "{counts:?}");
        }
        let again = a.select_uniform(50, &mut rng_from_seed(5)).unwrap();
        assert_eq!(
            again.iter().map(|e| e.genotype[0]).collect::<Vec<_>>(),
            picks[..50].iter().map(|e| e.genotype[0]).collect::<Vec<_>>()
        );
    }
}
