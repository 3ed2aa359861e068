//! Potts model simulation by Swendsen-Wang cluster updates, and exact
//! enumeration oracles (partition function, full distribution, model
//! posterior) for lattices small enough to enumerate.

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{DiscreteField, LatticeShape, NeighborhoodGraph};
use crate::rng::SimRng;

/// Hard limit on the number of configurations the exact oracles will visit.
pub const ENUMERATION_CAP: u64 = 1 << 24;

/// A Potts distribution: graph, color count and interaction strength.
#[derive(Clone, Copy, Debug)]
pub struct PottsSpec<'g> {
    graph: &'g NeighborhoodGraph,
    num_colors: usize,
    beta: f64,
}

impl<'g> PottsSpec<'g> {
    pub fn new(graph: &'g NeighborhoodGraph, num_colors: usize, beta: f64) -> Result<Self> {
        if num_colors < 2 {
            return Err(Error::invalid(format!(
                "Potts model needs at least 2 colors, got {num_colors}"
            )));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::invalid(format!("beta must be nonnegative, got {beta}")));
        }
        Ok(PottsSpec { graph, num_colors, beta })
    }

    pub fn graph(&self) -> &'g NeighborhoodGraph {
        self.graph
    }

    pub fn num_colors(&self) -> usize {
        self.num_colors
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Default sweep count for a lattice: 2 * sqrt(N) * 100, floored at 1,000.
pub fn default_sweeps(shape: LatticeShape) -> usize {
    let n = shape.num_sites() as f64;
    (2.0 * n.sqrt() * 100.0).round().max(1000.0) as usize
}

fn uf_find(parent: &mut [u32], mut i: u32) -> u32 {
    while parent[i as usize] != i {
        parent[i as usize] = parent[parent[i as usize] as usize];
        i = parent[i as usize];
    }
    i
}

struct SweepBuffers {
    parent: Vec<u32>,
    cluster_color: Vec<u8>,
    assigned: Vec<bool>,
}

impl SweepBuffers {
    fn new(n: usize) -> Self {
        SweepBuffers {
            parent: vec![0; n],
            cluster_color: vec![0; n],
            assigned: vec![false; n],
        }
    }
}

/// One Swendsen-Wang sweep: activate each monochrome edge with probability
/// `1 - exp(-beta)`, then recolor every bond cluster uniformly.
fn sweep(spec: &PottsSpec, colors: &mut [u8], buf: &mut SweepBuffers, rng: &mut SimRng) {
    let n = colors.len();
    let bond_prob = 1.0 - (-spec.beta).exp();
    let k = spec.num_colors as u32;

    for (i, p) in buf.parent.iter_mut().enumerate() {
        *p = i as u32;
    }
    for &(a, b) in spec.graph.edges() {
        if colors[a as usize] == colors[b as usize] && rng.random::<f64>() < bond_prob {
            let ra = uf_find(&mut buf.parent, a);
            let rb = uf_find(&mut buf.parent, b);
            if ra != rb {
                buf.parent[ra.max(rb) as usize] = ra.min(rb);
            }
        }
    }
    buf.assigned[..n].fill(false);
    for site in 0..n {
        let root = uf_find(&mut buf.parent, site as u32) as usize;
        if !buf.assigned[root] {
            buf.cluster_color[root] = rng.random_range(0..k) as u8;
            buf.assigned[root] = true;
        }
        colors[site] = buf.cluster_color[root];
    }
}

/// Apply a single Swendsen-Wang sweep to an existing field.
pub fn swendsen_wang_sweep(
    spec: &PottsSpec,
    field: &DiscreteField,
    rng: &mut SimRng,
) -> Result<DiscreteField> {
    if field.shape() != spec.graph.shape() || field.num_colors() != spec.num_colors {
        return Err(Error::invalid("field does not match the Potts spec"));
    }
    let mut colors = field.colors().to_vec();
    let mut buf = SweepBuffers::new(colors.len());
    sweep(spec, &mut colors, &mut buf, rng);
    DiscreteField::new(field.shape(), spec.num_colors, colors)
}

/// Draw one field: uniform random start, then the given number of sweeps.
pub fn swendsen_wang_sample(
    spec: &PottsSpec,
    sweeps: usize,
    rng: &mut SimRng,
) -> Result<DiscreteField> {
    if sweeps == 0 {
        return Err(Error::invalid("sweep count must be at least 1"));
    }
    let shape = spec.graph.shape();
    let n = shape.num_sites();
    let k = spec.num_colors as u32;
    let mut colors: Vec<u8> = (0..n).map(|_| rng.random_range(0..k) as u8).collect();
    let mut buf = SweepBuffers::new(n);
    for _ in 0..sweeps {
        sweep(spec, &mut colors, &mut buf, rng);
    }
    DiscreteField::new(shape, spec.num_colors, colors)
}

/// Number of configurations of a spec, or a capacity error if enumeration
/// would blow the cap.
fn num_configurations(spec: &PottsSpec) -> Result<u64> {
    let n = spec.graph.shape().num_sites();
    let k = spec.num_colors;
    let log_total = n as f64 * (k as f64).ln();
    if log_total > (ENUMERATION_CAP as f64).ln() + 1e-9 {
        return Err(Error::Capacity { configurations: log_total.exp(), cap: ENUMERATION_CAP });
    }
    Ok((k as u64).pow(n as u32))
}

/// Visit every configuration in index order. Configuration `idx` assigns
/// site `s` the color `(idx / k^s) % k`, so site 0 is the fastest digit.
/// The callback receives `(index, monochrome edge count, agreement count)`,
/// where the agreement count (against `reference`, when given) is the number
/// of sites whose color matches the reference field.
fn enumerate_configs(
    graph: &NeighborhoodGraph,
    num_colors: usize,
    reference: Option<&[u8]>,
    mut visit: impl FnMut(u64, u32, u32),
) -> Result<()> {
    let n = graph.shape().num_sites();
    let k = num_colors as u8;
    let total = {
        let log_total = n as f64 * (num_colors as f64).ln();
        if log_total > (ENUMERATION_CAP as f64).ln() + 1e-9 {
            return Err(Error::Capacity {
                configurations: log_total.exp(),
                cap: ENUMERATION_CAP,
            });
        }
        (num_colors as u64).pow(n as u32)
    };

    let mut colors = vec![0u8; n];
    let mut edge_count = graph.num_edges() as u32;
    let mut agree = reference
        .map(|y| y.iter().filter(|&&c| c == 0).count() as u32)
        .unwrap_or(0);

    let set_color = |colors: &mut [u8], edge_count: &mut u32, agree: &mut u32, s: usize, new: u8| {
        let old = colors[s];
        colors[s] = new;
        for &nb in graph.neighbors(s) {
            let cn = colors[nb as usize];
            if nb as usize != s {
                if cn == old {
                    *edge_count -= 1;
                }
                if cn == new {
                    *edge_count += 1;
                }
            }
        }
        if let Some(y) = reference {
            if y[s] == old {
                *agree -= 1;
            }
            if y[s] == new {
                *agree += 1;
            }
        }
    };

    visit(0, edge_count, agree);
    for idx in 1..total {
        let mut s = 0;
        loop {
            let old = colors[s];
            if old + 1 < k {
                set_color(&mut colors, &mut edge_count, &mut agree, s, old + 1);
                break;
            }
            set_color(&mut colors, &mut edge_count, &mut agree, s, 0);
            s += 1;
        }
        visit(idx, edge_count, agree);
    }
    Ok(())
}

/// Decode a configuration index into its color array.
pub fn config_colors(index: u64, num_colors: usize, num_sites: usize) -> Vec<u8> {
    let mut colors = Vec::with_capacity(num_sites);
    let mut rest = index;
    for _ in 0..num_sites {
        colors.push((rest % num_colors as u64) as u8);
        rest /= num_colors as u64;
    }
    colors
}

/// Exact normalizing constant by exhaustive enumeration.
pub fn partition_function(spec: &PottsSpec) -> Result<f64> {
    num_configurations(spec)?;
    let beta = spec.beta;
    let mut z = 0.0;
    enumerate_configs(spec.graph, spec.num_colors, None, |_, edges, _| {
        z += (beta * edges as f64).exp();
    })?;
    Ok(z)
}

/// The full distribution of a small Potts model, one probability per
/// configuration index.
#[derive(Clone, Debug)]
pub struct ExactPottsTable {
    shape: LatticeShape,
    num_colors: usize,
    beta: f64,
    partition: f64,
    probabilities: Vec<f64>,
}

impl ExactPottsTable {
    pub fn shape(&self) -> LatticeShape {
        self.shape
    }

    pub fn num_colors(&self) -> usize {
        self.num_colors
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn partition(&self) -> f64 {
        self.partition
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, index: u64) -> f64 {
        self.probabilities[index as usize]
    }

    /// Inverse-CDF sampler over the table.
    pub fn sampler(&self) -> ExactSampler<'_> {
        let mut cumulative = Vec::with_capacity(self.probabilities.len());
        let mut acc = 0.0;
        for &p in &self.probabilities {
            acc += p;
            cumulative.push(acc);
        }
        ExactSampler { table: self, cumulative }
    }
}

/// Draws exact samples from an [`ExactPottsTable`] by inverse CDF.
pub struct ExactSampler<'t> {
    table: &'t ExactPottsTable,
    cumulative: Vec<f64>,
}

impl ExactSampler<'_> {
    pub fn sample_index(&self, rng: &mut SimRng) -> u64 {
        let u: f64 = rng.random();
        self.cumulative.partition_point(|&c| c < u) as u64
    }

    pub fn sample_field(&self, rng: &mut SimRng) -> DiscreteField {
        let idx = self.sample_index(rng);
        let colors = config_colors(idx, self.table.num_colors, self.table.shape.num_sites());
        DiscreteField::new(self.table.shape, self.table.num_colors, colors)
            .expect("decoded configuration is always valid")
    }
}

/// Exact distribution by enumeration: probabilities proportional to
/// `exp(beta * monochrome edge count)`.
pub fn exact_distribution(spec: &PottsSpec) -> Result<ExactPottsTable> {
    let total = num_configurations(spec)?;
    let beta = spec.beta;
    let mut weights = Vec::with_capacity(total as usize);
    enumerate_configs(spec.graph, spec.num_colors, None, |_, edges, _| {
        weights.push((beta * edges as f64).exp());
    })?;
    let partition: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= partition;
    }
    Ok(ExactPottsTable {
        shape: spec.graph.shape(),
        num_colors: spec.num_colors,
        beta,
        partition,
        probabilities: weights,
    })
}

/// Exact distribution of the monochrome edge count: entry `r` holds
/// `P(R = r)`.
pub fn edge_count_distribution(spec: &PottsSpec) -> Result<Vec<f64>> {
    num_configurations(spec)?;
    let beta = spec.beta;
    let mut mass = vec![0.0; spec.graph.num_edges() + 1];
    enumerate_configs(spec.graph, spec.num_colors, None, |_, edges, _| {
        mass[edges as usize] += (beta * edges as f64).exp();
    })?;
    let z: f64 = mass.iter().sum();
    for m in &mut mass {
        *m /= z;
    }
    Ok(mass)
}

/// Noise family for the exact model posterior. Only discrete channels are
/// integrable by enumeration; Gaussian models are rejected.
#[derive(Clone, Copy, Debug)]
pub enum OracleNoise {
    Switch { alpha_range: (f64, f64) },
    Gaussian { sigma_range: (f64, f64) },
}

/// One candidate model for the exact oracle: a graph, a uniform prior range
/// for the interaction, and a noise channel with its own prior range.
#[derive(Clone, Copy, Debug)]
pub struct OracleModel<'g> {
    pub graph: &'g NeighborhoodGraph,
    pub num_colors: usize,
    pub beta_range: (f64, f64),
    pub noise: OracleNoise,
}

/// Exact posterior over models, with the MAP decision.
#[derive(Clone, Debug, PartialEq)]
pub struct OraclePosterior {
    /// Posterior probability of each model, in input order.
    pub posteriors: Vec<f64>,
    /// Position of the maximum a posteriori model (ties to the smallest).
    pub map_index: usize,
    /// Log evidence of each model.
    pub log_evidences: Vec<f64>,
}

fn midpoints(range: (f64, f64), nodes: usize) -> Result<Vec<f64>> {
    let (lo, hi) = range;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid(format!("invalid prior range ({lo}, {hi})")));
    }
    let step = (hi - lo) / nodes as f64;
    Ok((0..nodes).map(|i| lo + (i as f64 + 0.5) * step).collect())
}

/// Log evidence of one model by enumeration over latent fields and midpoint
/// quadrature over the parameter rectangle.
fn log_evidence(y: &DiscreteField, model: &OracleModel, nodes_per_axis: usize) -> Result<f64> {
    let alpha_range = match model.noise {
        OracleNoise::Switch { alpha_range } => alpha_range,
        OracleNoise::Gaussian { .. } => {
            return Err(Error::UnsupportedChannel(
                "the exact posterior integrates discrete channels only".into(),
            ))
        }
    };
    if model.graph.shape() != y.shape() {
        return Err(Error::invalid("observed field does not match the model lattice"));
    }
    let k = model.num_colors;
    if k < 2 || y.colors().iter().any(|&c| c as usize >= k) {
        return Err(Error::invalid("observed colors out of range for the model"));
    }
    if nodes_per_axis == 0 {
        return Err(Error::invalid("quadrature needs at least one node per axis"));
    }

    let n = y.shape().num_sites();
    let n_edges = model.graph.num_edges();

    // Joint histogram over (monochrome edge count, agreement with y): the
    // likelihood depends on a configuration only through these two numbers.
    let mut hist = vec![0u64; (n_edges + 1) * (n + 1)];
    enumerate_configs(model.graph, k, Some(y.colors()), |_, edges, agree| {
        hist[edges as usize * (n + 1) + agree as usize] += 1;
    })?;

    let betas = midpoints(model.beta_range, nodes_per_axis)?;
    let alphas = midpoints(alpha_range, nodes_per_axis)?;

    // Per alpha node: noise factor exp(alpha*(2a - N)) / D(alpha)^N for each
    // agreement count a, computed in log space then exponentiated.
    let noise_factor: Vec<Vec<f64>> = alphas
        .iter()
        .map(|&alpha| {
            let log_norm = (alpha.exp() + (k - 1) as f64 * (-alpha).exp()).ln();
            (0..=n)
                .map(|a| (alpha * (2.0 * a as f64 - n as f64) - n as f64 * log_norm).exp())
                .collect()
        })
        .collect();

    let mut mean_likelihood = 0.0;
    for &beta in &betas {
        let edge_weight: Vec<f64> = (0..=n_edges).map(|r| (beta * r as f64).exp()).collect();
        let mut z = 0.0;
        let mut agree_weight = vec![0.0; n + 1];
        for r in 0..=n_edges {
            let ew = edge_weight[r];
            for a in 0..=n {
                let count = hist[r * (n + 1) + a];
                if count > 0 {
                    let w = count as f64 * ew;
                    z += w;
                    agree_weight[a] += w;
                }
            }
        }
        for factors in &noise_factor {
            let f: f64 = agree_weight
                .iter()
                .zip(factors)
                .map(|(&w, &nf)| w * nf)
                .sum();
            mean_likelihood += f / z;
        }
    }
    mean_likelihood /= (betas.len() * alphas.len()) as f64;
    if !(mean_likelihood > 0.0) {
        return Err(Error::invalid("evidence underflowed to zero"));
    }
    Ok(mean_likelihood.ln())
}

/// Exact posterior probability of each model given an observed discrete
/// field, and the resulting MAP decision.
pub fn exact_model_posterior(
    y: &DiscreteField,
    models: &[OracleModel],
    model_priors: &[f64],
    nodes_per_axis: usize,
) -> Result<OraclePosterior> {
    if models.is_empty() || models.len() != model_priors.len() {
        return Err(Error::invalid("need as many prior weights as models"));
    }
    if model_priors.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::invalid("model prior weights must be positive"));
    }
    let log_evidences: Vec<f64> = models
        .iter()
        .map(|m| log_evidence(y, m, nodes_per_axis))
        .collect::<Result<_>>()?;

    let log_joint: Vec<f64> = log_evidences
        .iter()
        .zip(model_priors)
        .map(|(&le, &p)| le + p.ln())
        .collect();
    let max = log_joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_joint.iter().map(|&lj| (lj - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let posteriors: Vec<f64> = weights.iter().map(|w| w / total).collect();

    let mut map_index = 0;
    for (i, &p) in posteriors.iter().enumerate() {
        if p > posteriors[map_index] {
            map_index = i;
        }
    }
    Ok(OraclePosterior { posteriors, map_index, log_evidences })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_graph, monochrome_edge_count, GraphKind};
    use crate::rng::stream_rng;
    use approx::assert_abs_diff_eq;

    fn shape(h: usize, w: usize) -> LatticeShape {
        LatticeShape::new(h, w).unwrap()
    }

    #[test]
    fn partition_at_beta_zero_is_k_to_n() {
        for (h, w, k) in [(1, 1, 2), (2, 2, 2), (2, 3, 3), (3, 3, 2), (2, 2, 4)] {
            for kind in [GraphKind::G4, GraphKind::G8] {
                let g = build_graph(shape(h, w), kind);
                let spec = PottsSpec::new(&g, k, 0.0).unwrap();
                let z = partition_function(&spec).unwrap();
                let expected = (k as f64).powi((h * w) as i32);
                assert_abs_diff_eq!(z, expected, epsilon = 1e-9 * expected);
            }
        }
    }

    #[test]
    fn partition_2x2_g4_matches_edge_spectrum() {
        let g = build_graph(shape(2, 2), GraphKind::G4);
        let spec = PottsSpec::new(&g, 2, 0.5).unwrap();
        let z = partition_function(&spec).unwrap();
        // Edge-count spectrum over the 16 states: {4: 2, 2: 12, 0: 2}.
        let expected = 2.0 * (2.0f64).exp() + 12.0 * (1.0f64).exp() + 2.0;
        assert_abs_diff_eq!(z, expected, epsilon = 1e-9);
        assert_abs_diff_eq!(z, 49.397, epsilon = 1e-3);
    }

    #[test]
    fn partition_2x2_g8_matches_edge_spectrum() {
        let g = build_graph(shape(2, 2), GraphKind::G8);
        let spec = PottsSpec::new(&g, 2, 0.5).unwrap();
        let z = partition_function(&spec).unwrap();
        // Complete graph on 4 sites: spectrum {6: 2, 3: 8, 2: 6}.
        let expected = 2.0 * (3.0f64).exp() + 8.0 * (1.5f64).exp() + 6.0 * (1.0f64).exp();
        assert_abs_diff_eq!(z, expected, epsilon = 1e-9);
        assert_abs_diff_eq!(z, 92.334, epsilon = 1e-3);
    }

    #[test]
    fn capacity_cap_is_enforced_and_named() {
        let g = build_graph(shape(10, 10), GraphKind::G4);
        let spec = PottsSpec::new(&g, 2, 0.5).unwrap();
        match partition_function(&spec) {
            Err(Error::Capacity { cap, .. }) => assert_eq!(cap, ENUMERATION_CAP),
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn exact_distribution_sums_to_one_and_matches_weights() {
        let g = build_graph(shape(2, 2), GraphKind::G4);
        let spec = PottsSpec::new(&g, 2, 0.5).unwrap();
        let table = exact_distribution(&spec).unwrap();
        let total: f64 = table.probabilities().iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        // All-equal configuration (index 0) has weight exp(4*beta)/Z.
        let expected = (2.0f64).exp() / table.partition();
        assert_abs_diff_eq!(table.probability(0), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(table.probability(0), 0.14958, epsilon = 1e-5);
    }

    #[test]
    fn beta_zero_distribution_is_uniform() {
        let g = build_graph(shape(2, 2), GraphKind::G8);
        let spec = PottsSpec::new(&g, 2, 0.0).unwrap();
        let table = exact_distribution(&spec).unwrap();
        for &p in table.probabilities() {
            assert_abs_diff_eq!(p, 1.0 / 16.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn enumeration_edge_counts_match_direct_recomputation() {
        let g = build_graph(shape(2, 3), GraphKind::G8);
        enumerate_configs(&g, 3, None, |idx, edges, _| {
            let colors = config_colors(idx, 3, 6);
            let f = DiscreteField::new(shape(2, 3), 3, colors).unwrap();
            assert_eq!(edges as u64, monochrome_edge_count(&g, &f).unwrap());
        })
        .unwrap();
    }

    #[test]
    fn enumeration_agreement_counts_match_direct_recomputation() {
        let g = build_graph(shape(2, 2), GraphKind::G4);
        let y = vec![1u8, 0, 1, 1];
        enumerate_configs(&g, 2, Some(&y), |idx, _, agree| {
            let colors = config_colors(idx, 2, 4);
            let direct = colors.iter().zip(&y).filter(|(a, b)| a == b).count();
            assert_eq!(agree as usize, direct);
        })
        .unwrap();
    }

    #[test]
    fn sw_at_beta_zero_is_iid_uniform() {
        let g = build_graph(shape(50, 50), GraphKind::G4);
        let spec = PottsSpec::new(&g, 4, 0.0).unwrap();
        let mut rng = stream_rng(21, 0);
        let field = swendsen_wang_sample(&spec, 3, &mut rng).unwrap();
        let mut counts = [0usize; 4];
        for &c in field.colors() {
            counts[c as usize] += 1;
        }
        let n = field.colors().len() as f64;
        for &c in &counts {
            // 5 sigma around 1/4 on 2,500 sites.
            assert!((c as f64 / n - 0.25).abs() < 5.0 * (0.25 * 0.75 / n).sqrt());
        }
    }

    #[test]
    fn sw_is_deterministic_given_seed() {
        let g = build_graph(shape(16, 16), GraphKind::G8);
        let spec = PottsSpec::new(&g, 3, 0.6).unwrap();
        let a = swendsen_wang_sample(&spec, 50, &mut stream_rng(5, 9)).unwrap();
        let b = swendsen_wang_sample(&spec, 50, &mut stream_rng(5, 9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sw_empirical_edge_distribution_close_to_exact_on_2x2() {
        let g = build_graph(shape(2, 2), GraphKind::G4);
        let spec = PottsSpec::new(&g, 2, 0.7).unwrap();
        let exact = edge_count_distribution(&spec).unwrap();
        let draws = 40_000;
        let mut counts = vec![0usize; exact.len()];
        for i in 0..draws {
            let mut rng = stream_rng(100, i);
            let f = swendsen_wang_sample(&spec, 20, &mut rng).unwrap();
            counts[monochrome_edge_count(&g, &f).unwrap() as usize] += 1;
        }
        let tv: f64 = exact
            .iter()
            .zip(&counts)
            .map(|(&p, &c)| (p - c as f64 / draws as f64).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.02, "total variation {tv} too large");
    }

    #[test]
    fn expected_edge_count_is_monotone_in_beta() {
        let g = build_graph(shape(2, 3), GraphKind::G4);
        let mut last = f64::NEG_INFINITY;
        for i in 0..=8 {
            let beta = i as f64 * 0.25;
            let spec = PottsSpec::new(&g, 2, beta).unwrap();
            let dist = edge_count_distribution(&spec).unwrap();
            let mean: f64 = dist.iter().enumerate().map(|(r, &p)| r as f64 * p).sum();
            assert!(mean >= last - 1e-12, "E[R] dropped at beta={beta}");
            last = mean;
        }
    }

    #[test]
    fn default_sweeps_formula() {
        assert_eq!(default_sweeps(shape(100, 100)), 20_000);
        assert_eq!(default_sweeps(shape(3, 3)), 1_000);
        assert_eq!(default_sweeps(shape(32, 32)), 6_400);
    }

    fn switch_model<'g>(graph: &'g NeighborhoodGraph) -> OracleModel<'g> {
        OracleModel {
            graph,
            num_colors: 2,
            beta_range: (0.0, 1.0),
            noise: OracleNoise::Switch { alpha_range: (0.42, 2.3) },
        }
    }

    #[test]
    fn identical_models_split_the_posterior() {
        let g = build_graph(shape(2, 2), GraphKind::G4);
        let y = DiscreteField::new(shape(2, 2), 2, vec![0, 1, 1, 0]).unwrap();
        let models = [switch_model(&g), switch_model(&g)];
        let post = exact_model_posterior(&y, &models, &[0.5, 0.5], 16).unwrap();
        assert_abs_diff_eq!(post.posteriors[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(post.posteriors[1], 0.5, epsilon = 1e-12);
        assert_eq!(post.map_index, 0);
    }

    #[test]
    fn posterior_sums_to_one_and_is_relabel_invariant() {
        let g4 = build_graph(shape(3, 3), GraphKind::G4);
        let g8 = build_graph(shape(3, 3), GraphKind::G8);
        let y = DiscreteField::new(shape(3, 3), 2, vec![0, 1, 1, 0, 0, 0, 1, 0, 1]).unwrap();
        let m4 = switch_model(&g4);
        let m8 = OracleModel {
            graph: &g8,
            num_colors: 2,
            beta_range: (0.0, 0.35),
            noise: OracleNoise::Switch { alpha_range: (0.42, 2.3) },
        };
        let fwd = exact_model_posterior(&y, &[m4, m8], &[0.5, 0.5], 32).unwrap();
        let rev = exact_model_posterior(&y, &[m8, m4], &[0.5, 0.5], 32).unwrap();
        assert_abs_diff_eq!(fwd.posteriors.iter().sum::<f64>(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fwd.posteriors[0], rev.posteriors[1], epsilon = 1e-12);
        assert_abs_diff_eq!(fwd.posteriors[1], rev.posteriors[0], epsilon = 1e-12);
    }

    #[test]
    fn quadrature_refinement_changes_little() {
        let g4 = build_graph(shape(3, 3), GraphKind::G4);
        let g8 = build_graph(shape(3, 3), GraphKind::G8);
        let y = DiscreteField::new(shape(3, 3), 2, vec![0, 0, 1, 0, 1, 1, 0, 0, 1]).unwrap();
        let m4 = switch_model(&g4);
        let m8 = OracleModel {
            graph: &g8,
            num_colors: 2,
            beta_range: (0.0, 0.35),
            noise: OracleNoise::Switch { alpha_range: (0.42, 2.3) },
        };
        let coarse = exact_model_posterior(&y, &[m4, m8], &[0.5, 0.5], 32).unwrap();
        let fine = exact_model_posterior(&y, &[m4, m8], &[0.5, 0.5], 64).unwrap();
        for (a, b) in coarse.posteriors.iter().zip(&fine.posteriors) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-3);
        }
    }

    #[test]
    fn gaussian_models_are_rejected_by_the_oracle() {
        let g = build_graph(shape(2, 2), GraphKind::G4);
        let y = DiscreteField::new(shape(2, 2), 2, vec![0, 1, 1, 0]).unwrap();
        let m = OracleModel {
            graph: &g,
            num_colors: 2,
            beta_range: (0.0, 1.0),
            noise: OracleNoise::Gaussian { sigma_range: (0.1, 0.5) },
        };
        match exact_model_posterior(&y, &[m], &[1.0], 8) {
            Err(Error::UnsupportedChannel(_)) => {}
            other => panic!("expected unsupported channel, got {other:?}"),
        }
    }

    #[test]
    fn exact_sampler_matches_table_frequencies() {
        let g = build_graph(shape(2, 2), GraphKind::G4);
        let spec = PottsSpec::new(&g, 2, 0.8).unwrap();
        let table = exact_distribution(&spec).unwrap();
        let sampler = table.sampler();
        let mut rng = stream_rng(17, 0);
        let draws = 100_000;
        let mut counts = vec![0usize; table.probabilities().len()];
        for _ in 0..draws {
            counts[sampler.sample_index(&mut rng) as usize] += 1;
        }
        for (idx, &c) in counts.iter().enumerate() {
            let p = table.probability(idx as u64);
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            assert!(
                (c as f64 / draws as f64 - p).abs() < 5.0 * se + 1e-4,
                "config {idx} off"
            );
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let g = build_graph(shape(2, 2), GraphKind::G4);
        assert!(PottsSpec::new(&g, 1, 0.5).is_err());
        assert!(PottsSpec::new(&g, 2, -0.1).is_err());
        let spec = PottsSpec::new(&g, 2, 0.5).unwrap();
        assert!(swendsen_wang_sample(&spec, 0, &mut stream_rng(0, 0)).is_err());
    }
}
