//! The adaptive classifier: given several fitted classifiers of increasing
//! statistic dimension, estimate each one's local error over a shared
//! projection and route every query to the classifier with the smallest
//! estimated error there. The shared projection comes from a linear
//! discriminant analysis of an error-contrast trait on a validation table.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knn::KnnModelChoice;
use crate::local_error::{
    calibrate_bandwidth, error_indicators, nw_estimate, Bandwidth, ErrorIndicatorSet, Projection,
};
use crate::reftable::ReferenceTable;

/// Per-record trait contrasting the classifiers: 0 when all predictions
/// agree, `lambda` when classifier `lambda` alone is correct, 0 otherwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorContrastTrait {
    labels: Vec<u16>,
    num_classifiers: usize,
}

impl ErrorContrastTrait {
    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    /// Distinct observed labels, ascending.
    pub fn observed_classes(&self) -> Vec<u16> {
        let mut classes: Vec<u16> = self.labels.clone();
        classes.sort_unstable();
        classes.dedup();
        classes
    }
}

/// Label every validation record by which classifier, if any, is uniquely
/// correct on it.
pub fn contrast_trait(
    classifiers: &[KnnModelChoice],
    valid: &ReferenceTable,
) -> Result<ErrorContrastTrait> {
    if classifiers.len() < 2 {
        return Err(Error::invalid("the contrast trait needs at least 2 classifiers"));
    }
    if valid.is_empty() {
        return Err(Error::invalid("validation table is empty"));
    }
    let labels: Vec<u16> = (0..valid.len())
        .into_par_iter()
        .map(|r| {
            let stats = valid.stats(r);
            let truth = valid.model(r);
            let predictions: Vec<u16> = classifiers
                .iter()
                .map(|c| {
                    c.predict_stats(stats)
                        .expect("validation rows match the training dimension")
                        .predicted
                })
                .collect();
            if predictions.iter().all(|&p| p == predictions[0]) {
                return 0;
            }
            let correct: Vec<usize> = predictions
                .iter()
                .enumerate()
                .filter(|&(_, &p)| p == truth)
                .map(|(i, _)| i)
                .collect();
            match correct.as_slice() {
                [only] => (*only + 1) as u16,
                _ => 0,
            }
        })
        .collect();
    Ok(ErrorContrastTrait { labels, num_classifiers: classifiers.len() })
}

/// Fisher discriminant axes predicting a categorical trait from statistic
/// rows. Inputs are standardized per axis; the within-class scatter gets a
/// small ridge before inversion. At most `classes - 1` axes come out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdaProjection {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub axes: Vec<Vec<f64>>,
}

impl LdaProjection {
    pub fn num_axes(&self) -> usize {
        self.axes.len()
    }

    pub fn as_projection(&self) -> Projection {
        Projection::Linear {
            means: self.means.clone(),
            scales: self.scales.clone(),
            axes: self.axes.clone(),
        }
    }

    pub fn apply(&self, stats: &[f64]) -> Vec<f64> {
        self.as_projection().apply(stats)
    }
}

/// Fit the discriminant axes from rows (one slice per record) and labels.
pub fn fit_lda(rows: &[&[f64]], labels: &[u16]) -> Result<LdaProjection> {
    if rows.is_empty() || rows.len() != labels.len() {
        return Err(Error::invalid("need as many labels as rows"));
    }
    let dim = rows[0].len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::invalid("ragged rows"));
    }
    let mut classes: Vec<u16> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::DegenerateTrait(format!(
            "only {} observed class(es)",
            classes.len()
        )));
    }

    let n = rows.len() as f64;
    let mut means = vec![0.0; dim];
    for row in rows {
        for (m, &v) in means.iter_mut().zip(*row) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut scales = vec![0.0; dim];
    for row in rows {
        for (s, (&v, &m)) in scales.iter_mut().zip(row.iter().zip(&means)) {
            *s += (v - m) * (v - m);
        }
    }
    for s in &mut scales {
        *s = (*s / (n - 1.0).max(1.0)).sqrt();
        if !(*s > 0.0) {
            // Constant coordinates carry no class information; give them a
            // unit scale so standardization maps them to a constant zero.
            *s = 1.0;
        }
    }

    let standardized: Vec<DVector<f64>> = rows
        .iter()
        .map(|row| {
            DVector::from_iterator(
                dim,
                row.iter()
                    .zip(means.iter().zip(&scales))
                    .map(|(&v, (&m, &s))| (v - m) / s),
            )
        })
        .collect();

    // Class means and scatter matrices in the standardized space.
    let grand = standardized.iter().sum::<DVector<f64>>() / n;
    let mut within = DMatrix::<f64>::zeros(dim, dim);
    let mut between = DMatrix::<f64>::zeros(dim, dim);
    for &class in &classes {
        let members: Vec<&DVector<f64>> = standardized
            .iter()
            .zip(labels)
            .filter(|&(_, &l)| l == class)
            .map(|(z, _)| z)
            .collect();
        let nc = members.len() as f64;
        let mu = members.iter().copied().sum::<DVector<f64>>() / nc;
        for z in members {
            let d = z - &mu;
            within += &d * d.transpose();
        }
        let d = &mu - &grand;
        between += (&d * d.transpose()) * nc;
    }
    within /= n;
    between /= n;

    // Ridge keeps the within-class scatter invertible.
    let ridge = 1e-6 * within.trace() / dim as f64;
    for i in 0..dim {
        within[(i, i)] += ridge.max(1e-12);
    }

    // Solve the generalized eigenproblem via the Cholesky factor of the
    // within scatter, keeping the problem symmetric.
    let chol = within
        .clone()
        .cholesky()
        .ok_or_else(|| Error::invalid("within-class scatter is not positive definite"))?;
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::invalid("within-class factor is singular"))?;
    let m = &l_inv * between * l_inv.transpose();
    let sym = (&m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let n_axes = (classes.len() - 1).min(dim);
    let axes: Vec<Vec<f64>> = order[..n_axes]
        .iter()
        .map(|&col| {
            let w = eig.eigenvectors.column(col);
            let v = l_inv.transpose() * w;
            let mut axis: Vec<f64> = v.iter().copied().collect();
            // Deterministic sign: largest-magnitude entry positive.
            let lead = axis
                .iter()
                .enumerate()
                .max_by(|(_, a), (_, b)| a.abs().partial_cmp(&b.abs()).unwrap())
                .map(|(i, _)| i)
                .unwrap_or(0);
            if axis[lead] < 0.0 {
                for a in &mut axis {
                    *a = -*a;
                }
            }
            axis
        })
        .collect();

    Ok(LdaProjection { means, scales, axes })
}

/// One constituent of the adaptive classifier: its local-error estimator
/// over the shared projection.
#[derive(Clone, Debug)]
struct LocalErrorEstimator {
    set: ErrorIndicatorSet,
    bandwidth: Bandwidth,
}

impl LocalErrorEstimator {
    fn estimate(&self, point: &[f64]) -> f64 {
        nw_estimate(&self.set, &self.bandwidth, point).expect("dimensions agree by construction")
    }
}

/// The adaptive classifier: constituents sorted by statistic dimension, the
/// shared projection, and one local-error estimator per constituent.
#[derive(Clone, Debug)]
pub struct AdaptiveClassifier {
    classifiers: Vec<KnnModelChoice>,
    projection: Projection,
    lda: Option<LdaProjection>,
    estimators: Vec<LocalErrorEstimator>,
}

/// The decision of the adaptive classifier at one query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveDecision {
    /// Predicted model number (1-based).
    pub predicted: u16,
    /// Which constituent was used (1-based, ties to the smallest).
    pub chosen: usize,
    /// Estimated local error of each constituent at the query.
    pub local_errors: Vec<f64>,
}

impl AdaptiveClassifier {
    pub fn num_classifiers(&self) -> usize {
        self.classifiers.len()
    }

    pub fn classifiers(&self) -> &[KnnModelChoice] {
        &self.classifiers
    }

    /// The fitted discriminant projection, when the trait was informative.
    pub fn lda(&self) -> Option<&LdaProjection> {
        self.lda.as_ref()
    }

    pub fn projection(&self) -> &Projection {
        &self.projection
    }

    /// Route a full statistic row to the constituent with the smallest
    /// estimated local error and return its prediction.
    pub fn predict(&self, stats: &[f64]) -> Result<AdaptiveDecision> {
        let point = self.projection.apply(stats);
        let local_errors: Vec<f64> =
            self.estimators.iter().map(|e| e.estimate(&point)).collect();
        let mut chosen = 0;
        for (i, &tau) in local_errors.iter().enumerate() {
            if tau < local_errors[chosen] {
                chosen = i;
            }
        }
        let vote = self.classifiers[chosen].predict_stats(stats)?;
        Ok(AdaptiveDecision { predicted: vote.predicted, chosen: chosen + 1, local_errors })
    }
}

/// Build the adaptive classifier from constituents sharing a training table
/// and a validation table disjoint from it: contrast trait, discriminant
/// projection, then one calibrated local-error estimator per constituent.
///
/// When the trait collapses to a single class (for instance when all
/// constituents agree everywhere), the projection degenerates to a point and
/// every local error becomes the constituent's global validation error.
pub fn fit_adaptive(
    classifiers: Vec<KnnModelChoice>,
    valid: &ReferenceTable,
) -> Result<AdaptiveClassifier> {
    if classifiers.len() < 2 {
        return Err(Error::invalid("the adaptive classifier needs at least 2 constituents"));
    }
    for pair in classifiers.windows(2) {
        if pair[0].mask().len() > pair[1].mask().len() {
            return Err(Error::invalid(
                "constituents must be sorted by statistic dimension",
            ));
        }
    }
    let trait_labels = contrast_trait(&classifiers, valid)?;
    let rows: Vec<&[f64]> = (0..valid.len()).map(|r| valid.stats(r)).collect();

    let (lda, projection) = match fit_lda(&rows, trait_labels.labels()) {
        Ok(lda) => {
            let projection = lda.as_projection();
            (Some(lda), projection)
        }
        Err(Error::DegenerateTrait(_)) => (None, Projection::Coords(Vec::new())),
        Err(e) => return Err(e),
    };

    let estimators: Vec<LocalErrorEstimator> = classifiers
        .iter()
        .map(|c| {
            let set = error_indicators(c, valid, &projection)?;
            let bandwidth = calibrate_bandwidth(&set)?;
            Ok(LocalErrorEstimator { set, bandwidth })
        })
        .collect::<Result<_>>()?;

    Ok(AdaptiveClassifier { classifiers, projection, lda, estimators })
}
