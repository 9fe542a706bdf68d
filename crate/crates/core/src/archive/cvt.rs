use rand::Rng as _;

use crate::{rng_from_seed, Error, Result};

/// Cell centers of a centroidal Voronoi tessellation of `[0,1]^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Centroids {
    dim: usize,
    /// Row-major, `count × dim`.
    points: Vec<f64>,
}

const KMEANS_ITERATIONS: usize = 50;
const SAMPLES_PER_CENTROID: usize = 100;

impl Centroids {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map(Vec::len).ok_or_else(|| {
            Error::InvalidConfig("a tessellation needs at least one centroid".into())
        })?;
        if dim == 0 {
            return Err(Error::InvalidConfig("descriptor dimension must be positive".into()));
        }
        let mut flat = Vec::with_capacity(points.len() * dim);
        for p in &points {
            if p.len() != dim {
                return Err(Error::dims("centroid", dim, p.len()));
            }
            if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidConfig(format!("centroid {p:?} outside [0,1]^{dim}")));
            }
            flat.extend_from_slice(p);
        }
        Ok(Self { dim, points: flat })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    /// Euclidean-nearest centroid by exhaustive scan; ties go to the lowest
    /// index. Points outside the unit cube are still assigned.
    pub fn cell_index(&self, descriptor: &[f64]) -> Result<usize> {
        if descriptor.len() != self.dim {
            return Err(Error::dims("descriptor", self.dim, descriptor.len()));
        }
        let mut best = (f64::INFINITY, 0);
        for (i, c) in self.iter().enumerate() {
            let d = squared_distance(c, descriptor);
            if d < best.0 {
                best = (d, i);
            }
        }
        Ok(best.1)
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's k-means over `100 · count` uniform samples, seeded with the first
/// `count` samples and run for 50 iterations.
pub fn cvt_centroids(count: usize, dim: usize, seed: u64) -> Centroids {
    assert!(count >= 1 && dim >= 1, "need count ≥ 1 and dim ≥ 1");
    let mut rng = rng_from_seed(seed);
    let n = count * SAMPLES_PER_CENTROID;
    let samples: Vec<f64> = (0..n * dim).map(|_| rng.random::<f64>()).collect();
    let mut centers = samples[..count * dim].to_vec();

    let mut sums = vec![0.0; count * dim];
    let mut counts = vec![0usize; count];
    for _ in 0..KMEANS_ITERATIONS {
        let index = SortedIndex::new(&centers, dim);
        sums.fill(0.0);
        counts.fill(0);
        for s in samples.chunks_exact(dim) {
            let c = index.nearest(&centers, s);
            counts[c] += 1;
            for (acc, v) in sums[c * dim..(c + 1) * dim].iter_mut().zip(s) {
                *acc += v;
            }
        }
        for (c, &k) in counts.iter().enumerate() {
            // Empty clusters keep their previous center.
            if k > 0 {
                for j in 0..dim {
                    centers[c * dim + j] = sums[c * dim + j] / k as f64;
                }
            }
        }
    }
    Centroids {
        dim,
        points: centers,
    }
}

/// Centers ordered by their first coordinate, so the nearest-center search
/// can stop once the first-coordinate gap alone exceeds the best distance.
struct SortedIndex {
    order: Vec<usize>,
    keys: Vec<f64>,
}

impl SortedIndex {
    fn new(centers: &[f64], dim: usize) -> Self {
        let mut order: Vec<usize> = (0..centers.len() / dim).collect();
        order.sort_by(|&a, &b| centers[a * dim].total_cmp(&centers[b * dim]).then(a.cmp(&b)));
        let keys = order.iter().map(|&i| centers[i * dim]).collect();
        Self { order, keys }
    }

    fn nearest(&self, centers: &[f64], x: &[f64]) -> usize {
        let dim = x.len();
        let start = self.keys.partition_point(|&k| k < x[0]);
        let mut best = (f64::INFINITY, usize::MAX);
        let consider = |pos: usize, best: &mut (f64, usize)| {
            let i = self.order[pos];
            let d = squared_distance(&centers[i * dim..(i + 1) * dim], x);
            if d < best.0 || (d == best.0 && i < best.1) {
                *best = (d, i);
            }
        };
        let mut up = start;
        let mut down = start;
        loop {
            let up_gap = self.keys.get(up).map(|k| (k - x[0]) * (k - x[0]));
            let down_gap = down
                .checked_sub(1)
                .map(|p| (x[0] - self.keys[p]) * (x[0] - self.keys[p]));
            let up_open = up_gap.is_some_and(|g| g <= best.0);
            let down_open = down_gap.is_some_and(|g| g <= best.0);
            if !up_open && !down_open {
                break;
            }
            if up_open {
                consider(up, &mut best);
                up += 1;
            }
            if down_open {
                down -= 1;
                consider(down, &mut best);
            }
        }
        best.1
    }
}
