//! ABC model choice as a k-nearest-neighbor classifier: scaled Euclidean
//! distance on a subset of the summary coordinates, majority vote among the
//! k closest reference records, and calibration of k on a validation table.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reftable::{coordinate_stds, ReferenceTable, ScaleVector};
use crate::summaries::StatSubset;

/// Default calibration grid: log-spaced values of k.
pub const DEFAULT_K_GRID: [usize; 16] =
    [1, 2, 3, 5, 7, 10, 16, 25, 40, 63, 100, 158, 251, 398, 631, 1000];

/// The default grid cut to a training table size.
pub fn default_k_grid(train_size: usize) -> Vec<usize> {
    DEFAULT_K_GRID.iter().copied().filter(|&k| k <= train_size).collect()
}

/// A fitted classifier: training table, per-coordinate scales taken from it,
/// the selected statistic coordinates, and the number of neighbors.
#[derive(Clone, Debug)]
pub struct KnnModelChoice {
    train: Arc<ReferenceTable>,
    scales: ScaleVector,
    mask: Vec<usize>,
    k: usize,
}

/// Relative frequency of each model among the k nearest records, plus the
/// majority decision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelVote {
    /// One frequency per model, indexed by model number minus 1.
    pub frequencies: Vec<f64>,
    /// Predicted model number (1-based); frequency ties go to the smaller.
    pub predicted: u16,
}

impl KnnModelChoice {
    /// Fit on a training table with an explicit coordinate mask.
    pub fn fit_masked(train: Arc<ReferenceTable>, mask: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 || k > train.len() {
            return Err(Error::invalid(format!(
                "k must be in 1..={}, got {k}",
                train.len()
            )));
        }
        if mask.is_empty() {
            return Err(Error::invalid("coordinate mask must not be empty"));
        }
        if mask.iter().any(|&c| c >= train.stat_dim()) {
            return Err(Error::invalid("coordinate mask out of range"));
        }
        // Scales must be positive on the selected coordinates; unselected
        // constant coordinates are harmless.
        let stds = coordinate_stds(&train)?;
        if let Some(&coordinate) = mask.iter().find(|&&c| !(stds[c] > 0.0)) {
            return Err(Error::DegenerateScale { coordinate });
        }
        let scales = ScaleVector(stds);
        Ok(KnnModelChoice { train, scales, mask, k })
    }

    /// Fit on one of the nested statistic subsets.
    pub fn fit(train: Arc<ReferenceTable>, subset: StatSubset, k: usize) -> Result<Self> {
        Self::fit_masked(train, subset.indices(), k)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn with_k(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.train.len() {
            return Err(Error::invalid(format!(
                "k must be in 1..={}, got {k}",
                self.train.len()
            )));
        }
        let mut c = self.clone();
        c.k = k;
        Ok(c)
    }

    pub fn mask(&self) -> &[usize] {
        &self.mask
    }

    pub fn train(&self) -> &Arc<ReferenceTable> {
        &self.train
    }

    pub fn num_models(&self) -> usize {
        self.train.num_models()
    }

    /// Project a full statistic row onto the classifier's coordinates.
    pub fn project_stats(&self, stats: &[f64]) -> Vec<f64> {
        self.mask.iter().map(|&c| stats[c]).collect()
    }

    /// Squared scaled distance from a projected query to a training record.
    fn distance_sq(&self, query: &[f64], record: usize) -> f64 {
        let stats = self.train.stats(record);
        self.mask
            .iter()
            .zip(query)
            .map(|(&c, &q)| {
                let d = (q - stats[c]) / self.scales.0[c];
                d * d
            })
            .sum()
    }

    /// The k nearest training records, closest first. Distance ties are
    /// broken by record index.
    fn nearest(&self, query: &[f64], k: usize) -> Vec<(f64, u32)> {
        let n = self.train.len();
        let mut dists: Vec<(f64, u32)> = (0..n)
            .map(|r| (self.distance_sq(query, r), r as u32))
            .collect();
        let cmp = |a: &(f64, u32), b: &(f64, u32)| {
            a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1))
        };
        if k < n {
            dists.select_nth_unstable_by(k - 1, cmp);
            dists.truncate(k);
        }
        dists.sort_unstable_by(cmp);
        dists
    }

    /// Vote among the k nearest records for a query already projected onto
    /// the classifier's coordinates.
    pub fn knn_vote(&self, query: &[f64]) -> Result<ModelVote> {
        if query.len() != self.mask.len() {
            return Err(Error::invalid(format!(
                "query has {} coordinates, classifier uses {}",
                query.len(),
                self.mask.len()
            )));
        }
        let neighbors = self.nearest(query, self.k);
        let m = self.num_models();
        let mut counts = vec![0usize; m];
        for &(_, r) in &neighbors {
            counts[(self.train.model(r as usize) - 1) as usize] += 1;
        }
        let mut predicted = 0;
        for i in 1..m {
            if counts[i] > counts[predicted] {
                predicted = i;
            }
        }
        let frequencies = counts.iter().map(|&c| c as f64 / self.k as f64).collect();
        Ok(ModelVote { frequencies, predicted: (predicted + 1) as u16 })
    }

    /// Vote for a full statistic row.
    pub fn predict_stats(&self, stats: &[f64]) -> Result<ModelVote> {
        self.knn_vote(&self.project_stats(stats))
    }
}

/// Misclassification rate of a classifier over an evaluation table.
pub fn prior_error_rate(classifier: &KnnModelChoice, eval: &ReferenceTable) -> Result<f64> {
    if eval.is_empty() {
        return Err(Error::invalid("evaluation table is empty"));
    }
    let errors: usize = (0..eval.len())
        .into_par_iter()
        .map(|r| {
            let vote = classifier
                .predict_stats(eval.stats(r))
                .expect("evaluation rows match the training dimension");
            usize::from(vote.predicted != eval.model(r))
        })
        .sum();
    Ok(errors as f64 / eval.len() as f64)
}

/// Misclassification curve over a grid of k values, evaluated with a single
/// neighbor sort per validation point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    /// `(k, error rate)` pairs in grid order.
    pub points: Vec<(usize, f64)>,
    /// Grid entry minimizing the error; ties go to the smallest k.
    pub best_k: usize,
}

/// Calibrate k by minimizing the validation misclassification rate over the
/// grid. Every grid entry is scored from one sorted neighbor list per
/// validation point.
pub fn calibrate_k(
    train: Arc<ReferenceTable>,
    valid: &ReferenceTable,
    mask: Vec<usize>,
    k_grid: &[usize],
) -> Result<(KnnModelChoice, ErrorCurve)> {
    if k_grid.is_empty() {
        return Err(Error::invalid("k grid is empty"));
    }
    if let Some(&bad) = k_grid.iter().find(|&&k| k == 0 || k > train.len()) {
        return Err(Error::invalid(format!(
            "grid entry {bad} outside 1..={}",
            train.len()
        )));
    }
    if valid.is_empty() {
        return Err(Error::invalid("validation table is empty"));
    }
    if valid.stat_dim() != train.stat_dim() {
        return Err(Error::invalid("validation/training statistic dimensions differ"));
    }

    let k_max = *k_grid.iter().max().unwrap();
    let probe = KnnModelChoice::fit_masked(train.clone(), mask, k_max)?;
    let m = probe.num_models();

    let error_counts: Vec<u64> = (0..valid.len())
        .into_par_iter()
        .map(|r| {
            let query = probe.project_stats(valid.stats(r));
            let neighbors = probe.nearest(&query, k_max);
            let truth = valid.model(r);
            let mut counts = vec![0usize; m];
            let mut errors = vec![0u64; k_grid.len()];
            let mut grid_pos: Vec<(usize, usize)> =
                k_grid.iter().copied().enumerate().map(|(i, k)| (k, i)).collect();
            grid_pos.sort_unstable();
            let mut next = 0;
            let mut best = 0usize;
            for (took, &(_, rec)) in neighbors.iter().enumerate() {
                let model = (train.model(rec as usize) - 1) as usize;
                counts[model] += 1;
                if counts[model] > counts[best] || (counts[model] == counts[best] && model < best)
                {
                    best = model;
                }
                while next < grid_pos.len() && grid_pos[next].0 == took + 1 {
                    errors[grid_pos[next].1] = u64::from((best + 1) as u16 != truth);
                    next += 1;
                }
            }
            errors
        })
        .reduce(
            || vec![0u64; k_grid.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

    let points: Vec<(usize, f64)> = k_grid
        .iter()
        .zip(&error_counts)
        .map(|(&k, &e)| (k, e as f64 / valid.len() as f64))
        .collect();
    let mut best_k = points[0].0;
    let mut best_err = points[0].1;
    for &(k, err) in &points[1..] {
        if err < best_err || (err == best_err && k < best_k) {
            best_err = err;
            best_k = k;
        }
    }
    let calibrated = probe.with_k(best_k)?;
    Ok((calibrated, ErrorCurve { points, best_k }))
}
