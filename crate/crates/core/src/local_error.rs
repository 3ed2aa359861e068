//! Local misclassification rates: regress the 0/1 error indicators of a
//! fitted classifier on a low-dimensional projection of the summaries with a
//! Nadaraya-Watson estimator, bandwidth chosen by leave-one-out squared
//! error. Also the plug-in estimate available when the projection equals the
//! classifier's own statistics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knn::{KnnModelChoice, ModelVote};
use crate::reftable::ReferenceTable;

/// A deterministic projection of full statistic rows used to localize errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Projection {
    /// Select raw coordinates by index.
    Coords(Vec<usize>),
    /// Standardize per axis, then apply linear forms (one per output axis).
    Linear {
        means: Vec<f64>,
        scales: Vec<f64>,
        axes: Vec<Vec<f64>>,
    },
}

impl Projection {
    pub fn dim(&self) -> usize {
        match self {
            Projection::Coords(idx) => idx.len(),
            Projection::Linear { axes, .. } => axes.len(),
        }
    }

    pub fn apply(&self, stats: &[f64]) -> Vec<f64> {
        match self {
            Projection::Coords(idx) => idx.iter().map(|&c| stats[c]).collect(),
            Projection::Linear { means, scales, axes } => {
                let z: Vec<f64> = stats
                    .iter()
                    .zip(means.iter().zip(scales))
                    .map(|(&v, (&m, &s))| (v - m) / s)
                    .collect();
                axes.iter()
                    .map(|axis| axis.iter().zip(&z).map(|(&a, &v)| a * v).sum())
                    .collect()
            }
        }
    }
}

/// Projected evaluation points with their 0/1 error indicators.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorIndicatorSet {
    /// Row-major points, `dim` values each.
    points: Vec<f64>,
    indicators: Vec<f64>,
    dim: usize,
}

impl ErrorIndicatorSet {
    pub fn new(points: Vec<f64>, indicators: Vec<f64>, dim: usize) -> Result<Self> {
        if indicators.is_empty() || points.len() != indicators.len() * dim {
            return Err(Error::invalid("inconsistent indicator set"));
        }
        Ok(ErrorIndicatorSet { points, indicators, dim })
    }

    pub fn len(&self) -> usize {
        self.indicators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indicators.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn indicators(&self) -> &[f64] {
        &self.indicators
    }

    /// Mean indicator; identical to the global misclassification rate on the
    /// table the set was built from.
    pub fn mean(&self) -> f64 {
        self.indicators.iter().sum::<f64>() / self.len() as f64
    }

    /// Per-axis sample standard deviations of the points.
    pub fn axis_stds(&self) -> Vec<f64> {
        let n = self.len() as f64;
        (0..self.dim)
            .map(|a| {
                let mean: f64 =
                    (0..self.len()).map(|i| self.point(i)[a]).sum::<f64>() / n;
                let ss: f64 = (0..self.len())
                    .map(|i| {
                        let d = self.point(i)[a] - mean;
                        d * d
                    })
                    .sum();
                (ss / (n - 1.0).max(1.0)).sqrt()
            })
            .collect()
    }
}

/// Run a classifier over a table and record, for every row, the projected
/// point and whether the prediction was wrong.
pub fn error_indicators(
    classifier: &KnnModelChoice,
    table: &ReferenceTable,
    projection: &Projection,
) -> Result<ErrorIndicatorSet> {
    if table.is_empty() {
        return Err(Error::invalid("indicator table is empty"));
    }
    let dim = projection.dim();
    let rows: Vec<(Vec<f64>, f64)> = (0..table.len())
        .into_par_iter()
        .map(|r| {
            let stats = table.stats(r);
            let vote = classifier
                .predict_stats(stats)
                .expect("table rows match the training dimension");
            let delta = f64::from(vote.predicted != table.model(r));
            (projection.apply(stats), delta)
        })
        .collect();
    let mut points = Vec::with_capacity(table.len() * dim);
    let mut indicators = Vec::with_capacity(table.len());
    for (p, d) in rows {
        points.extend(p);
        indicators.push(d);
    }
    ErrorIndicatorSet::new(points, indicators, dim)
}

/// Per-axis kernel bandwidths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bandwidth(pub Vec<f64>);

impl Bandwidth {
    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::invalid("bandwidths must be strictly positive"));
        }
        Ok(())
    }
}

/// Squared distance in the bandwidth metric.
fn scaled_sq_dist(a: &[f64], b: &[f64], h: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(h)
        .map(|((&x, &y), &hh)| {
            let d = (x - y) / hh;
            d * d
        })
        .sum()
}

/// Nadaraya-Watson estimate at a query point with a Gaussian product kernel.
/// If every kernel weight underflows, falls back to the indicator of the
/// nearest point in the bandwidth metric.
pub fn nw_estimate(set: &ErrorIndicatorSet, h: &Bandwidth, query: &[f64]) -> Result<f64> {
    h.validate()?;
    if query.len() != set.dim() || h.0.len() != set.dim() {
        return Err(Error::invalid("query/bandwidth dimension mismatch"));
    }
    let (num, den, _, nearest_delta) = nw_accumulate(set, &h.0, query);
    if den > 0.0 {
        Ok(num / den)
    } else {
        Ok(nearest_delta)
    }
}

/// Weighted sums for one query: numerator, denominator, nearest scaled
/// distance and the indicator of the nearest point.
fn nw_accumulate(set: &ErrorIndicatorSet, h: &[f64], query: &[f64]) -> (f64, f64, f64, f64) {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut best_d = f64::INFINITY;
    let mut best_delta = 0.0;
    for i in 0..set.len() {
        let d = scaled_sq_dist(query, set.point(i), h);
        let w = (-0.5 * d).exp();
        num += w * set.indicators()[i];
        den += w;
        if d < best_d {
            best_d = d;
            best_delta = set.indicators()[i];
        }
    }
    (num, den, best_d, best_delta)
}

/// Kernel support mass at a query: the sum of kernel weights.
pub fn nw_support(set: &ErrorIndicatorSet, h: &Bandwidth, query: &[f64]) -> f64 {
    let (_, den, _, _) = nw_accumulate(set, &h.0, query);
    den
}

/// Multiplier grid explored by the bandwidth calibration: 15 values
/// log-spaced over [0.1, 10] applied to the per-axis baseline.
pub fn bandwidth_multipliers() -> Vec<f64> {
    let count = 15;
    (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            10f64.powf(-1.0 + 2.0 * t)
        })
        .collect()
}

/// Per-axis baseline bandwidth: std * n^(-1/(4+d)).
pub fn baseline_bandwidth(set: &ErrorIndicatorSet) -> Result<Bandwidth> {
    let stds = set.axis_stds();
    if let Some(axis) = stds.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::DegenerateScale { coordinate: axis });
    }
    let n = set.len() as f64;
    let rate = n.powf(-1.0 / (4.0 + set.dim() as f64));
    Ok(Bandwidth(stds.into_iter().map(|s| s * rate).collect()))
}

/// Leave-one-out squared-error score of one bandwidth multiplier.
fn loo_score(set: &ErrorIndicatorSet, h: &[f64]) -> f64 {
    (0..set.len())
        .into_par_iter()
        .map(|j| {
            let query = set.point(j);
            let (mut num, mut den, _, _) = nw_accumulate(set, h, query);
            // Remove the held-out point (its own kernel weight is 1).
            num -= set.indicators()[j];
            den -= 1.0;
            let pred = if den > 1e-300 {
                num / den
            } else {
                // No other support: fall back to the global mean without j.
                let n = set.len() as f64;
                (set.mean() * n - set.indicators()[j]) / (n - 1.0)
            };
            let err = set.indicators()[j] - pred;
            err * err
        })
        .sum::<f64>()
        / set.len() as f64
}

/// Choose the bandwidth minimizing the leave-one-out squared error over a
/// multiplier grid around the baseline; ties go to the smallest bandwidth.
pub fn calibrate_bandwidth(set: &ErrorIndicatorSet) -> Result<Bandwidth> {
    if set.len() < 10 {
        return Err(Error::invalid("bandwidth calibration needs at least 10 points"));
    }
    if set.dim() == 0 {
        return Ok(Bandwidth(Vec::new()));
    }
    let base = baseline_bandwidth(set)?;
    let mut best: Option<(f64, f64)> = None;
    for m in bandwidth_multipliers() {
        let h: Vec<f64> = base.0.iter().map(|&b| b * m).collect();
        let score = loo_score(set, &h);
        let better = match best {
            None => true,
            Some((bs, bm)) => score < bs || (score == bs && m < bm),
        };
        if better {
            best = Some((score, m));
        }
    }
    let (_, m) = best.expect("multiplier grid is nonempty");
    Ok(Bandwidth(base.0.iter().map(|&b| b * m).collect()))
}

/// Plug-in local error of a vote: one minus the frequency of the predicted
/// model. Valid when the localizing projection equals the classifier's own
/// statistics.
pub fn plug_in_local_error(vote: &ModelVote) -> f64 {
    1.0 - vote.frequencies[(vote.predicted - 1) as usize]
}

/// A local-error surface: estimates at the table points and over a
/// rectangular grid spanning the projected support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalErrorSurface {
    pub classifier_id: String,
    pub projection_id: String,
    pub bandwidth: Bandwidth,
    /// Estimate at each table point, in table order.
    pub table_values: Vec<f64>,
    /// Flattened grid rows: coordinates, estimate, support flag.
    pub grid: Vec<GridPoint>,
    /// Grid resolution per axis.
    pub resolution: usize,
}

/// One grid evaluation of the surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub coords: Vec<f64>,
    pub tau: f64,
    /// False where the total kernel mass is below the support threshold and
    /// the estimate is an extrapolation.
    pub supported: bool,
}

impl LocalErrorSurface {
    /// Mean of the table-point estimates.
    pub fn table_mean(&self) -> f64 {
        self.table_values.iter().sum::<f64>() / self.table_values.len() as f64
    }
}

/// Estimate the full surface: indicators, bandwidth calibration, evaluation
/// at the table points and on a grid over the projected support.
pub fn error_surface(
    classifier: &KnnModelChoice,
    table: &ReferenceTable,
    projection: &Projection,
    resolution: usize,
) -> Result<LocalErrorSurface> {
    if projection.dim() != 2 {
        return Err(Error::invalid(
            "surface grids are drawn over 2-dimensional projections",
        ));
    }
    if resolution < 2 {
        return Err(Error::invalid("grid resolution must be at least 2"));
    }
    let set = error_indicators(classifier, table, projection)?;
    let h = calibrate_bandwidth(&set)?;

    let table_values: Vec<f64> = (0..set.len())
        .into_par_iter()
        .map(|i| nw_estimate(&set, &h, set.point(i)).expect("dimensions agree"))
        .collect();

    let mut lo = vec![f64::INFINITY; 2];
    let mut hi = vec![f64::NEG_INFINITY; 2];
    for i in 0..set.len() {
        for a in 0..2 {
            lo[a] = lo[a].min(set.point(i)[a]);
            hi[a] = hi[a].max(set.point(i)[a]);
        }
    }
    let support_floor = 1e-6 * set.len() as f64;
    let cells: Vec<(usize, usize)> = (0..resolution)
        .flat_map(|i| (0..resolution).map(move |j| (i, j)))
        .collect();
    let grid: Vec<GridPoint> = cells
        .into_par_iter()
        .map(|(i, j)| {
            let fx = i as f64 / (resolution - 1) as f64;
            let fy = j as f64 / (resolution - 1) as f64;
            let coords = vec![lo[0] + fx * (hi[0] - lo[0]), lo[1] + fy * (hi[1] - lo[1])];
            let tau = nw_estimate(&set, &h, &coords).expect("dimensions agree");
            let supported = nw_support(&set, &h, &coords) >= support_floor;
            GridPoint { coords, tau, supported }
        })
        .collect();

    Ok(LocalErrorSurface {
        classifier_id: format!("knn(k={}, coords={:?})", classifier.k(), classifier.mask()),
        projection_id: format!("{projection:?}"),
        bandwidth: h,
        table_values,
        grid,
        resolution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn set_1d(points: &[f64], deltas: &[f64]) -> ErrorIndicatorSet {
        ErrorIndicatorSet::new(points.to_vec(), deltas.to_vec(), 1).unwrap()
    }

    #[test]
    fn all_zero_indicators_estimate_zero() {
        let set = set_1d(&[0.0, 0.5, 1.0, 2.0], &[0.0; 4]);
        let h = Bandwidth(vec![0.7]);
        for q in [-1.0, 0.3, 5.0] {
            assert_eq!(nw_estimate(&set, &h, &[q]).unwrap(), 0.0);
        }
    }

    #[test]
    fn symmetric_two_point_query_is_half() {
        let set = set_1d(&[0.0, 1.0], &[0.0, 1.0]);
        let h = Bandwidth(vec![1.0]);
        assert_abs_diff_eq!(nw_estimate(&set, &h, &[0.5]).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn single_point_dominates_everywhere() {
        let set = set_1d(&[3.0], &[1.0]);
        let h = Bandwidth(vec![0.5]);
        for q in [-100.0, 0.0, 3.0, 250.0] {
            assert_eq!(nw_estimate(&set, &h, &[q]).unwrap(), 1.0);
        }
    }

    #[test]
    fn estimates_stay_between_indicator_extremes() {
        let mut rng = stream_rng(1, 0);
        let points: Vec<f64> = (0..200).map(|_| rng.random::<f64>() * 4.0).collect();
        let deltas: Vec<f64> = (0..200).map(|_| f64::from(rng.random::<bool>())).collect();
        let set = set_1d(&points, &deltas);
        let h = Bandwidth(vec![0.3]);
        for _ in 0..50 {
            let q = rng.random::<f64>() * 6.0 - 1.0;
            let e = nw_estimate(&set, &h, &[q]).unwrap();
            assert!((0.0..=1.0).contains(&e));
        }
    }

    #[test]
    fn translation_leaves_estimates_unchanged() {
        let points = [0.1, 0.9, 1.7, 2.2, 3.0];
        let deltas = [0.0, 1.0, 0.0, 1.0, 1.0];
        let set = set_1d(&points, &deltas);
        let shifted: Vec<f64> = points.iter().map(|p| p + 57.0).collect();
        let set2 = set_1d(&shifted, &deltas);
        let h = Bandwidth(vec![0.8]);
        for q in [0.0, 1.3, 2.9] {
            let a = nw_estimate(&set, &h, &[q]).unwrap();
            let b = nw_estimate(&set2, &h, &[q + 57.0]).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn underflow_falls_back_to_nearest_indicator() {
        let set = set_1d(&[0.0, 1e7], &[0.0, 1.0]);
        let h = Bandwidth(vec![1e-3]);
        // Both kernel weights underflow at the midpoint; nearest is point 0.
        let e = nw_estimate(&set, &h, &[4e6]).unwrap();
        assert_eq!(e, 0.0);
        let e = nw_estimate(&set, &h, &[6e6]).unwrap();
        assert_eq!(e, 1.0);
    }

    #[test]
    fn plug_in_values() {
        let vote = |freqs: Vec<f64>, predicted: u16| ModelVote { frequencies: freqs, predicted };
        assert_eq!(plug_in_local_error(&vote(vec![1.0, 0.0], 1)), 0.0);
        assert_eq!(plug_in_local_error(&vote(vec![0.5, 0.5], 1)), 0.5);
        assert_abs_diff_eq!(
            plug_in_local_error(&vote(vec![0.7, 0.3], 1)),
            0.3,
            epsilon = 1e-12
        );
    }

    #[test]
    fn constant_indicators_tie_to_the_smallest_bandwidth() {
        let mut rng = stream_rng(2, 0);
        let points: Vec<f64> = (0..64).map(|_| rng.random::<f64>()).collect();
        let set = set_1d(&points, &vec![0.0; 64]);
        let h = calibrate_bandwidth(&set).unwrap();
        let base = baseline_bandwidth(&set).unwrap();
        let multipliers = bandwidth_multipliers();
        assert_abs_diff_eq!(h.0[0], base.0[0] * multipliers[0], epsilon = 1e-12);
    }

    /// Noisy step model: delta = 1{s > 0} with 10% flips, so the true
    /// conditional mean is 0.9 for s > 0 and 0.1 otherwise.
    fn step_sample(n: usize, seed: u64) -> ErrorIndicatorSet {
        let mut points = Vec::with_capacity(n);
        let mut deltas = Vec::with_capacity(n);
        for i in 0..n {
            let mut rng = stream_rng(seed, i as u64);
            let s = rng.random::<f64>() * 2.0 - 1.0;
            let base = f64::from(s > 0.0);
            let flip = rng.random::<f64>() < 0.1;
            points.push(s);
            deltas.push(if flip { 1.0 - base } else { base });
        }
        ErrorIndicatorSet::new(points, deltas, 1).unwrap()
    }

    fn step_truth(s: f64) -> f64 {
        if s > 0.0 {
            0.9
        } else {
            0.1
        }
    }

    fn l2_risk(set: &ErrorIndicatorSet, h: &Bandwidth, eval_seed: u64) -> f64 {
        let m = 2_000;
        let mut total = 0.0;
        let mut rng = stream_rng(eval_seed, 0);
        for _ in 0..m {
            let q = rng.random::<f64>() * 2.0 - 1.0;
            let e = nw_estimate(set, h, &[q]).unwrap();
            let d = e - step_truth(q);
            total += d * d;
        }
        total / m as f64
    }

    #[test]
    fn loo_bandwidth_beats_extreme_bandwidths_on_the_step_model() {
        let set = step_sample(5_000, 77);
        let h = calibrate_bandwidth(&set).unwrap();
        let base = baseline_bandwidth(&set).unwrap();
        let tiny = Bandwidth(vec![base.0[0] / 10.0]);
        let huge = Bandwidth(vec![base.0[0] * 10.0]);
        let risk = l2_risk(&set, &h, 1000);
        let risk_tiny = l2_risk(&set, &tiny, 1000);
        let risk_huge = l2_risk(&set, &huge, 1000);
        assert!(risk < risk_tiny, "{risk} !< {risk_tiny}");
        assert!(risk < risk_huge, "{risk} !< {risk_huge}");
    }

    #[test]
    fn risk_shrinks_with_more_data() {
        let small = step_sample(500, 88);
        let large = step_sample(5_000, 89);
        let h_small = calibrate_bandwidth(&small).unwrap();
        let h_large = calibrate_bandwidth(&large).unwrap();
        let risk_small = l2_risk(&small, &h_small, 2000);
        let risk_large = l2_risk(&large, &h_large, 2000);
        assert!(
            risk_large < risk_small,
            "risk at n=5000 ({risk_large}) not below n=500 ({risk_small})"
        );
    }

    #[test]
    fn too_few_points_cannot_calibrate() {
        let set = set_1d(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0]);
        assert!(calibrate_bandwidth(&set).is_err());
    }

    #[test]
    fn degenerate_axis_is_reported() {
        let set = set_1d(&[2.0; 16], &[0.0; 16]);
        match calibrate_bandwidth(&set) {
            Err(Error::DegenerateScale { coordinate: 0 }) => {}
            other => panic!("expected degenerate scale, got {other:?}"),
        }
    }

    #[test]
    fn zero_dimensional_sets_average_globally() {
        let set = ErrorIndicatorSet::new(Vec::new(), vec![0.0, 1.0, 1.0, 0.0], 0).unwrap();
        let h = Bandwidth(Vec::new());
        assert_abs_diff_eq!(nw_estimate(&set, &h, &[]).unwrap(), 0.5, epsilon = 1e-12);
    }
}
