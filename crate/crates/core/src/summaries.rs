//! Geometric summary statistics of a discrete field: monochrome edge counts,
//! component counts and largest component sizes of the graphs induced on the
//! field by both neighborhood systems, in the fixed coordinate order
//! `(r4, r8, t4, t8, u4, u8)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{
    build_graph, induced_components, DiscreteField, GraphKind, NeighborhoodGraph,
};
use crate::noise::ContinuousField;
use crate::rng::SimRng;

/// The six summary statistics of a field, in fixed order: edge counts of the
/// induced graphs (G4 then G8), component counts, largest component sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryVector {
    values: [u32; 6],
}

/// Column names matching the coordinate order of [`SummaryVector`].
pub const SUMMARY_NAMES: [&str; 6] = ["r4", "r8", "t4", "t8", "u4", "u8"];

impl SummaryVector {
    pub fn new(values: [u32; 6]) -> Self {
        SummaryVector { values }
    }

    pub fn values(&self) -> [u32; 6] {
        self.values
    }

    pub fn as_f64(&self) -> [f64; 6] {
        self.values.map(|v| v as f64)
    }

    /// Monochrome edge counts `(G4, G8)`.
    pub fn edge_counts(&self) -> (u32, u32) {
        (self.values[0], self.values[1])
    }

    /// Component counts `(G4, G8)`.
    pub fn component_counts(&self) -> (u32, u32) {
        (self.values[2], self.values[3])
    }

    /// Largest component sizes `(G4, G8)`.
    pub fn largest_sizes(&self) -> (u32, u32) {
        (self.values[4], self.values[5])
    }
}

/// Nested subsets of the summary coordinates: the first 2, 4 or 6.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatSubset {
    D2,
    D4,
    D6,
}

impl StatSubset {
    pub fn dim(&self) -> usize {
        match self {
            StatSubset::D2 => 2,
            StatSubset::D4 => 4,
            StatSubset::D6 => 6,
        }
    }

    /// Coordinate indices selected by the subset.
    pub fn indices(&self) -> Vec<usize> {
        (0..self.dim()).collect()
    }

    pub fn name(&self) -> &'static str {
        match self {
            StatSubset::D2 => "2d",
            StatSubset::D4 => "4d",
            StatSubset::D6 => "6d",
        }
    }
}

impl std::str::FromStr for StatSubset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "2d" | "d2" | "2" => Ok(StatSubset::D2),
            "4d" | "d4" | "4" => Ok(StatSubset::D4),
            "6d" | "d6" | "6" => Ok(StatSubset::D6),
            other => Err(Error::invalid(format!("unknown statistic subset `{other}`"))),
        }
    }
}

/// Project a summary vector onto the first 2, 4 or 6 coordinates.
pub fn project(v: &SummaryVector, subset: StatSubset) -> Vec<f64> {
    v.as_f64()[..subset.dim()].to_vec()
}

/// Compute the six summaries using caller-provided graphs (they only depend
/// on the lattice shape, so bulk simulation shares them across fields).
pub fn geometric_summaries_with(
    g4: &NeighborhoodGraph,
    g8: &NeighborhoodGraph,
    field: &DiscreteField,
) -> Result<SummaryVector> {
    debug_assert_eq!(g4.kind(), GraphKind::G4);
    debug_assert_eq!(g8.kind(), GraphKind::G8);
    let p4 = induced_components(g4, field)?;
    let p8 = induced_components(g8, field)?;
    Ok(SummaryVector::new([
        p4.total_edges() as u32,
        p8.total_edges() as u32,
        p4.num_components() as u32,
        p8.num_components() as u32,
        p4.largest_size(),
        p8.largest_size(),
    ]))
}

/// Compute the six summaries of a field.
pub fn geometric_summaries(field: &DiscreteField) -> SummaryVector {
    let g4 = build_graph(field.shape(), GraphKind::G4);
    let g8 = build_graph(field.shape(), GraphKind::G8);
    geometric_summaries_with(&g4, &g8, field).expect("graphs built from the field's own shape")
}

/// One-dimensional k-means over the site values of a continuous field,
/// forgetting the spatial structure. Output colors are cluster indices
/// relabeled in ascending order of cluster center.
///
/// k-means++ seeding, 10 restarts, at most 100 Lloyd iterations each, best
/// inertia kept.
pub fn kmeans_quantize(
    y: &ContinuousField,
    k: usize,
    rng: &mut SimRng,
) -> Result<DiscreteField> {
    const RESTARTS: usize = 10;
    const MAX_ITERS: usize = 100;

    if k == 0 || k > 256 {
        return Err(Error::invalid(format!("cluster count must be in 1..=256, got {k}")));
    }
    let values = y.values();
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() < k {
        return Err(Error::DegenerateInput(format!(
            "{} distinct values cannot form {k} clusters",
            distinct.len()
        )));
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..RESTARTS {
        let centers = lloyd(values, k, MAX_ITERS, rng);
        let inertia = inertia_of(values, &centers);
        if best.as_ref().is_none_or(|(bi, _)| inertia < *bi) {
            best = Some((inertia, centers));
        }
    }
    let (_, mut centers) = best.expect("at least one restart ran");
    centers.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let colors: Vec<u8> = values
        .iter()
        .map(|&v| nearest_center(v, &centers) as u8)
        .collect();
    DiscreteField::new(y.shape(), k.max(2), colors)
}

fn nearest_center(v: f64, centers: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, &c) in centers.iter().enumerate() {
        let d = (v - c).abs();
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

fn inertia_of(values: &[f64], centers: &[f64]) -> f64 {
    values
        .iter()
        .map(|&v| {
            let c = centers[nearest_center(v, centers)];
            (v - c) * (v - c)
        })
        .sum()
}

/// k-means++ seeding followed by Lloyd iterations.
fn lloyd(values: &[f64], k: usize, max_iters: usize, rng: &mut SimRng) -> Vec<f64> {
    let n = values.len();
    let mut centers = Vec::with_capacity(k);
    centers.push(values[rng.random_range(0..n)]);
    let mut sq_dist: Vec<f64> = values
        .iter()
        .map(|&v| (v - centers[0]) * (v - centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = sq_dist.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in sq_dist.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            values[chosen]
        } else {
            values[rng.random_range(0..n)]
        };
        centers.push(next);
        for (d, &v) in sq_dist.iter_mut().zip(values) {
            let nd = (v - next) * (v - next);
            if nd < *d {
                *d = nd;
            }
        }
    }

    let mut assign: Vec<usize> = values.iter().map(|&v| nearest_center(v, &centers)).collect();
    for _ in 0..max_iters {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (&v, &a) in values.iter().zip(&assign) {
            sums[a] += v;
            counts[a] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centers[j] = sums[j] / counts[j] as f64;
            } else {
                // Reseed an empty cluster at the point farthest from its
                // currently assigned center.
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = (values[a] - centers[assign[a]]).abs();
                        let db = (values[b] - centers[assign[b]]).abs();
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap_or(0);
                centers[j] = values[far];
            }
        }
        let new_assign: Vec<usize> =
            values.iter().map(|&v| nearest_center(v, &centers)).collect();
        if new_assign == assign {
            break;
        }
        assign = new_assign;
    }
    centers
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeShape;
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    fn shape(h: usize, w: usize) -> LatticeShape {
        LatticeShape::new(h, w).unwrap()
    }

    fn checkerboard(h: usize, w: usize) -> DiscreteField {
        let s = shape(h, w);
        let colors = (0..s.num_sites())
            .map(|i| (((i / w) + (i % w)) % 2) as u8)
            .collect();
        DiscreteField::new(s, 2, colors).unwrap()
    }

    #[test]
    fn constant_field_summaries() {
        let f = DiscreteField::constant(shape(5, 5), 2, 1).unwrap();
        let s = geometric_summaries(&f);
        assert_eq!(s.values(), [40, 72, 1, 1, 25, 25]);
    }

    #[test]
    fn checkerboard_summaries() {
        let s = geometric_summaries(&checkerboard(5, 5));
        assert_eq!(s.values(), [0, 32, 25, 2, 1, 13]);
    }

    #[test]
    fn single_site_summaries() {
        let f = DiscreteField::new(shape(1, 1), 2, vec![0]).unwrap();
        let s = geometric_summaries(&f);
        assert_eq!(s.values(), [0, 0, 1, 1, 1, 1]);
    }

    #[test]
    fn projections_take_leading_coordinates() {
        let v = SummaryVector::new([40, 72, 1, 1, 25, 25]);
        assert_eq!(project(&v, StatSubset::D2), vec![40.0, 72.0]);
        let w = SummaryVector::new([0, 32, 25, 2, 1, 13]);
        assert_eq!(project(&w, StatSubset::D4), vec![0.0, 32.0, 25.0, 2.0]);
        assert_eq!(project(&w, StatSubset::D6), w.as_f64().to_vec());
    }

    #[test]
    fn separated_clusters_quantize_cleanly() {
        let mut values = vec![0.0; 12];
        values.extend(vec![1.0; 13]);
        let f = ContinuousField::new(shape(5, 5), values).unwrap();
        let q = kmeans_quantize(&f, 2, &mut stream_rng(1, 0)).unwrap();
        for (i, &c) in q.colors().iter().enumerate() {
            assert_eq!(c, if i < 12 { 0 } else { 1 });
        }
    }

    #[test]
    fn quantizing_a_noiseless_binary_field_is_the_identity() {
        let f = checkerboard(6, 6);
        let cont = ContinuousField::new(
            f.shape(),
            f.colors().iter().map(|&c| c as f64).collect(),
        )
        .unwrap();
        let q = kmeans_quantize(&cont, 2, &mut stream_rng(2, 0)).unwrap();
        assert_eq!(q.colors(), f.colors());
        assert_eq!(geometric_summaries(&q), geometric_summaries(&f));
    }

    #[test]
    fn well_separated_gaussian_mixture_has_low_misassignment() {
        use rand_distr::StandardNormal;
        let n = 10_000usize;
        let mut rng = stream_rng(3, 0);
        let mut values = Vec::with_capacity(n);
        let mut truth = Vec::with_capacity(n);
        for i in 0..n {
            let c = (i % 2) as u8;
            truth.push(c);
            let eps: f64 = rng.sample(StandardNormal);
            values.push(c as f64 + 0.1 * eps);
        }
        let f = ContinuousField::new(shape(100, 100), values.clone()).unwrap();
        let q = kmeans_quantize(&f, 2, &mut rng).unwrap();
        // Oracle: threshold at 0.5.
        let mut disagree_truth = 0;
        let mut disagree_threshold = 0;
        for i in 0..n {
            if q.color(i) != truth[i] {
                disagree_truth += 1;
            }
            let t = if values[i] > 0.5 { 1 } else { 0 };
            if q.color(i) != t {
                disagree_threshold += 1;
            }
        }
        assert!(disagree_truth as f64 / (n as f64) < 0.01);
        assert!(disagree_threshold as f64 / (n as f64) < 0.005);
    }

    #[test]
    fn too_few_distinct_values_is_degenerate() {
        let f = ContinuousField::new(shape(2, 2), vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        match kmeans_quantize(&f, 2, &mut stream_rng(4, 0)) {
            Err(Error::DegenerateInput(_)) => {}
            other => panic!("expected degenerate input, got {other:?}"),
        }
    }

    #[test]
    fn quantization_is_reproducible() {
        let values: Vec<f64> = (0..64).map(|i| (i as f64 * 0.37).sin()).collect();
        let f = ContinuousField::new(shape(8, 8), values).unwrap();
        let a = kmeans_quantize(&f, 3, &mut stream_rng(5, 0)).unwrap();
        let b = kmeans_quantize(&f, 3, &mut stream_rng(5, 0)).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn graph_nesting_orders_the_summaries(
            h in 1usize..9,
            w in 1usize..9,
            k in 2usize..5,
            seed in any::<u64>(),
        ) {
            use rand::Rng;
            let s = shape(h, w);
            let mut rng = stream_rng(seed, 1);
            let colors: Vec<u8> =
                (0..s.num_sites()).map(|_| rng.random_range(0..k as u8)).collect();
            let f = DiscreteField::new(s, k, colors).unwrap();
            let v = geometric_summaries(&f);
            let [r4, r8, t4, t8, u4, u8_] = v.values();
            // G4 edges are a subset of G8 edges; components only coarsen.
            prop_assert!(r4 <= r8);
            prop_assert!(t4 >= t8);
            prop_assert!(u4 <= u8_);
            let n = s.num_sites() as u32;
            prop_assert!(t4 >= 1 && t4 <= n);
            prop_assert!(u4 >= 1 && u4 <= n - t4 + 1);
            prop_assert!(u8_ >= 1 && u8_ <= n - t8 + 1);
        }
    }
}
