//! Population instrumentation: Hamming distances, genotypic diversity and
//! the TWO-NN intrinsic-dimension estimate.
//!
//! TWO-NN only looks at each point's two nearest neighbours. With `d1 <= d2`
//! the distances from point `i` to its two closest other points, let
//! `r_i = d2 / d1`. Sort the ratios ascending and pair the `i`-th smallest
//! (0-based) with the empirical quantile `y_i = -ln(1 - i / n)`. Under a
//! locally uniform density, `y = id * ln r`, so the slope of a line fitted
//! through the points `(ln r_i, y_i)` estimates the dimension.
//!
//! Genotypes are deduplicated before estimation: duplicate points would put a
//! zero in the denominator of `r_i`.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use thiserror::Error;

use crate::evolve::Population;
use crate::genotype::{hamming_words, Genotype, GenotypeError};

pub fn hamming(a: &Genotype, b: &Genotype) -> Result<u32, GenotypeError> {
    a.hamming(b)
}

/// Fraction of distinct genotypes; 1.0 means all distinct.
pub fn diversity(pop: &Population) -> f64 {
    assert!(!pop.is_empty(), "diversity of an empty population");
    unique_count(pop.genotypes()) as f64 / pop.len() as f64
}

pub fn unique_count<'a, I: IntoIterator<Item = &'a Genotype>>(genotypes: I) -> usize {
    genotypes.into_iter().collect::<BTreeSet<_>>().len()
}

/// Distinct genotypes in order of first occurrence.
pub fn unique_genotypes<'a, I: IntoIterator<Item = &'a Genotype>>(genotypes: I) -> Vec<&'a Genotype> {
    let mut seen = BTreeSet::new();
    genotypes.into_iter().filter(|g| seen.insert(*g)).collect()
}

/// Dense symmetric distance matrix, row major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// Evaluates `dist` on the upper triangle and mirrors it.
    pub fn from_fn<F: FnMut(usize, usize) -> f64>(size: usize, mut dist: F) -> Self {
        let mut entries = alloc::vec![0.0; size * size];
        for i in 0..size {
            for j in i + 1..size {
                let d = dist(i, j);
                entries[i * size + j] = d;
                entries[j * size + i] = d;
            }
        }
        DistanceMatrix { size, entries }
    }

    /// Pairwise Hamming distances.
    pub fn hamming(genotypes: &[&Genotype]) -> Result<Self, GenotypeError> {
        if let Some(first) = genotypes.first() {
            if let Some(bad) = genotypes.iter().find(|g| g.len() != first.len()) {
                return Err(GenotypeError::LengthMismatch {
                    left: first.len(),
                    right: bad.len(),
                });
            }
        }
        Ok(Self::from_fn(genotypes.len(), |i, j| {
            hamming_words(genotypes[i].words(), genotypes[j].words()) as f64
        }))
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.size..(i + 1) * self.size]
    }

    /// Every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        DistanceMatrix {
            size: self.size,
            entries: self.entries.iter().map(|d| d * factor).collect(),
        }
    }

    /// Rows and columns reordered so that new index `i` is old `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.size);
        Self::from_fn(self.size, |i, j| self.get(order[i], order[j]))
    }
}

/// Hamming matrix over the population's distinct genotypes, first
/// occurrence order.
pub fn unique_distance_matrix(pop: &Population) -> DistanceMatrix {
    let unique = unique_genotypes(pop.genotypes());
    DistanceMatrix::hamming(&unique).expect("population genotypes share one length")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LineFit {
    /// `y = id * x`, the form the estimator's derivation predicts.
    #[default]
    ThroughOrigin,
    /// Ordinary least squares with an intercept; slope reported as the id.
    FreeIntercept,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IdError {
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("degenerate fit: every point's two nearest neighbours are equidistant")]
    Degenerate,
    #[error("point {0} has a zero-distance neighbour")]
    DuplicatePoint(usize),
}

/// TWO-NN estimate with the fitted data kept for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoNnResult {
    pub id: f64,
    /// Pearson correlation between `log_ratios` and `quantiles`.
    pub fit_quality: f64,
    pub n_points: usize,
    /// `ln r_i`, ascending.
    pub log_ratios: Vec<f64>,
    /// `-ln(1 - i/n)` for `i = 0..n`.
    pub quantiles: Vec<f64>,
}

/// Second-nearest over nearest distance for every point.
pub fn neighbour_ratios(dm: &DistanceMatrix) -> Result<Vec<f64>, IdError> {
    let n = dm.size();
    if n < 3 {
        return Err(IdError::TooFewPoints(n));
    }
    (0..n)
        .map(|i| {
            let (mut d1, mut d2) = (f64::INFINITY, f64::INFINITY);
            for (j, &d) in dm.row(i).iter().enumerate() {
                if j == i {
                    continue;
                }
                if d < d1 {
                    d2 = d1;
                    d1 = d;
                } else if d < d2 {
                    d2 = d;
                }
            }
            if d1.is_nan() || d1 <= 0.0 {
                return Err(IdError::DuplicatePoint(i));
            }
            Ok(d2 / d1)
        })
        .collect()
}

pub fn estimate_id(dm: &DistanceMatrix) -> Result<TwoNnResult, IdError> {
    estimate_id_with(dm, LineFit::ThroughOrigin)
}

pub fn estimate_id_with(dm: &DistanceMatrix, fit: LineFit) -> Result<TwoNnResult, IdError> {
    let mut ratios = neighbour_ratios(dm)?;
    ratios.sort_by(f64::total_cmp);
    let n = ratios.len();
    let xs: Vec<f64> = ratios.iter().map(|&r| libm::log(r)).collect();
    let ys: Vec<f64> = (0..n).map(|i| -libm::log(1.0 - i as f64 / n as f64)).collect();
    if xs.iter().all(|&x| x == 0.0) {
        return Err(IdError::Degenerate);
    }

    let nf = n as f64;
    let mean_x = xs.iter().sum::<f64>() / nf;
    let mean_y = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mean_x) * (x - mean_x);
        syy += (y - mean_y) * (y - mean_y);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx.is_nan() || sxx <= 0.0 {
        return Err(IdError::Degenerate);
    }
    let id = match fit {
        LineFit::ThroughOrigin => {
            let num: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
            let den: f64 = xs.iter().map(|x| x * x).sum();
            num / den
        }
        LineFit::FreeIntercept => sxy / sxx,
    };
    let fit_quality = sxy / libm::sqrt(sxx * syy);
    Ok(TwoNnResult {
        id,
        fit_quality,
        n_points: n,
        log_ratios: xs,
        quantiles: ys,
    })
}

/// Per-generation measurements. `id` and `id_fit_quality` are `None` when
/// the estimate is undefined for this population.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMetrics {
    pub generation: usize,
    pub best_fitness: f64,
    pub diversity: f64,
    pub id: Option<f64>,
    pub id_fit_quality: Option<f64>,
    pub unique_count: usize,
    pub population_size: usize,
}

pub fn snapshot(pop: &Population, generation: usize) -> SnapshotMetrics {
    snapshot_with(pop, generation, LineFit::ThroughOrigin)
}

pub fn snapshot_with(pop: &Population, generation: usize, fit: LineFit) -> SnapshotMetrics {
    let best_fitness = pop
        .individuals
        .iter()
        .map(|i| i.fitness.value())
        .fold(f64::INFINITY, f64::min);
    let dm = unique_distance_matrix(pop);
    let estimate = estimate_id_with(&dm, fit).ok();
    SnapshotMetrics {
        generation,
        best_fitness,
        diversity: dm.size() as f64 / pop.len() as f64,
        id: estimate.as_ref().map(|e| e.id),
        id_fit_quality: estimate.as_ref().map(|e| e.fit_quality),
        unique_count: dm.size(),
        population_size: pop.len(),
    }
}
