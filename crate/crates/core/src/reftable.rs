//! Reference tables: iid replicates `(model, parameters, summaries)` drawn
//! from the joint Bayesian model, with persistence and normalization scales.
//!
//! Each record is generated from its own generator stream derived from
//! `(master seed, record index)`, so tables are bit-reproducible no matter
//! how the work is scheduled.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{build_graph, DiscreteField, GraphKind, LatticeShape, NeighborhoodGraph};
use crate::noise::{apply_gaussian_noise, apply_kcolor_noise, ContinuousField};
use crate::potts::{OracleModel, OracleNoise, PottsSpec};
use crate::rng::{stream_rng, tagged_seed, SimRng};
use crate::summaries::{geometric_summaries_with, kmeans_quantize};

/// A uniform prior interval with `0 <= low < high`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(0.0 <= low && low < high) || !high.is_finite() {
            return Err(Error::invalid(format!(
                "prior interval must satisfy 0 <= low < high, got ({low}, {high})"
            )));
        }
        Ok(Interval { low, high })
    }

    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        self.low + (self.high - self.low) * rng.random::<f64>()
    }

    pub fn as_pair(&self) -> (f64, f64) {
        (self.low, self.high)
    }
}

/// Prior for a scalar noise parameter: either fixed or uniform on an interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamPrior {
    Fixed(f64),
    Uniform(Interval),
}

impl ParamPrior {
    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        match *self {
            ParamPrior::Fixed(v) => v,
            ParamPrior::Uniform(iv) => iv.sample(rng),
        }
    }
}

/// Noise family of a model, with the prior on its scalar parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoisePrior {
    /// K-color misassignment channel; K comes from the model's color count.
    Switch { alpha: Interval },
    /// Homoscedastic Gaussian on the raw color values.
    Gaussian { sigma: ParamPrior },
}

/// One candidate model of the Bayesian model choice problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub graph: GraphKind,
    pub num_colors: usize,
    pub beta: Interval,
    pub noise: NoisePrior,
    /// Prior probability of the model; weights must sum to 1 over a spec list.
    pub weight: f64,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_colors < 2 {
            return Err(Error::invalid("model needs at least 2 colors"));
        }
        Interval::new(self.beta.low, self.beta.high)?;
        match self.noise {
            NoisePrior::Switch { alpha } => {
                Interval::new(alpha.low, alpha.high)?;
            }
            NoisePrior::Gaussian { sigma } => match sigma {
                ParamPrior::Fixed(v) => {
                    if !(v > 0.0) {
                        return Err(Error::invalid("fixed sigma must be positive"));
                    }
                }
                ParamPrior::Uniform(iv) => {
                    Interval::new(iv.low, iv.high)?;
                    if iv.low <= 0.0 {
                        return Err(Error::invalid("sigma interval must be positive"));
                    }
                }
            },
        }
        if !(self.weight > 0.0) {
            return Err(Error::invalid("model prior weight must be positive"));
        }
        Ok(())
    }

    /// View as an exact-oracle model over a prebuilt graph.
    pub fn as_oracle<'g>(&self, graph: &'g NeighborhoodGraph) -> OracleModel<'g> {
        let noise = match self.noise {
            NoisePrior::Switch { alpha } => OracleNoise::Switch { alpha_range: alpha.as_pair() },
            NoisePrior::Gaussian { sigma } => {
                let range = match sigma {
                    ParamPrior::Fixed(v) => (v, v),
                    ParamPrior::Uniform(iv) => iv.as_pair(),
                };
                OracleNoise::Gaussian { sigma_range: range }
            }
        };
        OracleModel {
            graph,
            num_colors: self.num_colors,
            beta_range: self.beta.as_pair(),
            noise,
        }
    }
}

fn validate_specs(specs: &[ModelSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::invalid("need at least one model spec"));
    }
    for spec in specs {
        spec.validate()?;
    }
    let total: f64 = specs.iter().map(|s| s.weight).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("model prior weights sum to {total}, not 1")));
    }
    Ok(())
}

/// Draw `(alpha-or-sigma, beta)` from a model's priors.
pub fn sample_prior(spec: &ModelSpec, rng: &mut SimRng) -> (f64, f64) {
    let noise_param = match spec.noise {
        NoisePrior::Switch { alpha } => alpha.sample(rng),
        NoisePrior::Gaussian { sigma } => sigma.sample(rng),
    };
    let beta = spec.beta.sample(rng);
    (noise_param, beta)
}

/// Which of the three tables a dataset plays the role of.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Valid,
    Test,
}

impl std::str::FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Role::Train),
            "valid" | "validation" => Ok(Role::Valid),
            "test" => Ok(Role::Test),
            other => Err(Error::invalid(format!("unknown table role `{other}`"))),
        }
    }
}

/// Generation metadata persisted alongside a table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    pub seed: u64,
    pub height: usize,
    pub width: usize,
    pub sweeps: usize,
    pub role: Role,
    pub specs: Vec<ModelSpec>,
}

impl TableMeta {
    pub fn shape(&self) -> LatticeShape {
        LatticeShape::new(self.height, self.width).expect("validated at construction")
    }
}

/// A reference table: one row per simulated record. The first six statistic
/// columns are always the geometric summaries; appended ancillary columns
/// may follow.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceTable {
    meta: TableMeta,
    models: Vec<u16>,
    params: Vec<(f64, f64)>,
    stats: Vec<f64>,
    stat_dim: usize,
}

impl ReferenceTable {
    pub fn meta(&self) -> &TableMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn stat_dim(&self) -> usize {
        self.stat_dim
    }

    pub fn num_models(&self) -> usize {
        self.meta.specs.len()
    }

    /// 1-based model index of a record.
    pub fn model(&self, record: usize) -> u16 {
        self.models[record]
    }

    /// `(alpha-or-sigma, beta)` drawn for a record.
    pub fn params(&self, record: usize) -> (f64, f64) {
        self.params[record]
    }

    /// Statistic row of a record.
    pub fn stats(&self, record: usize) -> &[f64] {
        &self.stats[record * self.stat_dim..(record + 1) * self.stat_dim]
    }

    /// Append `count` ancillary coordinates per record, iid uniform on (0, 1),
    /// drawn independently of everything already in the table.
    pub fn with_ancillary(&self, count: usize, seed: u64) -> ReferenceTable {
        let dim = self.stat_dim + count;
        let anc_seed = tagged_seed(seed, 0x414e43);
        let mut stats = Vec::with_capacity(self.len() * dim);
        for record in 0..self.len() {
            stats.extend_from_slice(self.stats(record));
            let mut rng = stream_rng(anc_seed, record as u64);
            for _ in 0..count {
                stats.push(rng.random::<f64>());
            }
        }
        ReferenceTable {
            meta: self.meta.clone(),
            models: self.models.clone(),
            params: self.params.clone(),
            stats,
            stat_dim: dim,
        }
    }
}

/// An observed field kept around by debugging dumps.
#[derive(Clone, Debug)]
pub enum SavedField {
    Discrete(DiscreteField),
    Continuous(ContinuousField),
}

struct RecordDraw {
    model: u16,
    params: (f64, f64),
    stats: [f64; 6],
    field: Option<SavedField>,
}

fn draw_record(
    specs: &[ModelSpec],
    sim_graphs: &[&NeighborhoodGraph],
    g4: &NeighborhoodGraph,
    g8: &NeighborhoodGraph,
    sweeps: usize,
    keep_field: bool,
    rng: &mut SimRng,
) -> Result<RecordDraw> {
    // Model index from the prior weights.
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut model = specs.len() - 1;
    for (i, spec) in specs.iter().enumerate() {
        acc += spec.weight;
        if u < acc {
            model = i;
            break;
        }
    }
    let spec = &specs[model];
    let params = sample_prior(spec, rng);
    let (noise_param, beta) = params;

    let potts = PottsSpec::new(sim_graphs[model], spec.num_colors, beta)?;
    let latent = crate::potts::swendsen_wang_sample(&potts, sweeps, rng)?;

    let (observed, summary) = match spec.noise {
        NoisePrior::Switch { .. } => {
            let y = apply_kcolor_noise(&latent, noise_param, rng)?;
            let s = geometric_summaries_with(g4, g8, &y)?;
            (SavedField::Discrete(y), s)
        }
        NoisePrior::Gaussian { .. } => {
            let y = apply_gaussian_noise(&latent, noise_param, rng)?;
            let q = kmeans_quantize(&y, spec.num_colors, rng)?;
            let s = geometric_summaries_with(g4, g8, &q)?;
            (SavedField::Continuous(y), s)
        }
    };

    Ok(RecordDraw {
        model: (model + 1) as u16,
        params,
        stats: summary.as_f64(),
        field: keep_field.then_some(observed),
    })
}

/// Simulate a reference table: for each record draw a model from the prior
/// weights, parameters from the model priors, a latent field by
/// Swendsen-Wang, an observation through the noise channel (quantized first
/// when continuous), and record the summaries.
pub fn generate_table(
    specs: &[ModelSpec],
    n: usize,
    shape: LatticeShape,
    sweeps: usize,
    master_seed: u64,
    role: Role,
) -> Result<ReferenceTable> {
    Ok(generate_table_with_fields(specs, n, shape, sweeps, master_seed, role, false)?.0)
}

/// Like [`generate_table`], optionally keeping the observed fields.
pub fn generate_table_with_fields(
    specs: &[ModelSpec],
    n: usize,
    shape: LatticeShape,
    sweeps: usize,
    master_seed: u64,
    role: Role,
    keep_fields: bool,
) -> Result<(ReferenceTable, Vec<SavedField>)> {
    validate_specs(specs)?;
    if n == 0 {
        return Err(Error::invalid("table size must be at least 1"));
    }
    if sweeps == 0 {
        return Err(Error::invalid("sweep count must be at least 1"));
    }

    let g4 = build_graph(shape, GraphKind::G4);
    let g8 = build_graph(shape, GraphKind::G8);
    let sim_graphs: Vec<&NeighborhoodGraph> = specs
        .iter()
        .map(|spec| match spec.graph {
            GraphKind::G4 => &g4,
            GraphKind::G8 => &g8,
        })
        .collect();

    let draws: Vec<RecordDraw> = (0..n)
        .into_par_iter()
        .map(|index| {
            let mut rng = stream_rng(master_seed, index as u64);
            draw_record(specs, &sim_graphs, &g4, &g8, sweeps, keep_fields, &mut rng)
                .map_err(|e| Error::InvalidArgument(format!("record {index}: {e}")))
        })
        .collect::<Result<_>>()?;

    let mut models = Vec::with_capacity(n);
    let mut params = Vec::with_capacity(n);
    let mut stats = Vec::with_capacity(n * 6);
    let mut fields = Vec::new();
    for mut draw in draws {
        models.push(draw.model);
        params.push(draw.params);
        stats.extend_from_slice(&draw.stats);
        if let Some(f) = draw.field.take() {
            fields.push(f);
        }
    }

    let meta = TableMeta {
        seed: master_seed,
        height: shape.height,
        width: shape.width,
        sweeps,
        role,
        specs: specs.to_vec(),
    };
    Ok((ReferenceTable { meta, models, params, stats, stat_dim: 6 }, fields))
}

/// Per-coordinate sample standard deviations of a table's statistic columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleVector(pub Vec<f64>);

impl ScaleVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Sample standard deviation (denominator n-1) of each statistic coordinate,
/// zeros included.
pub fn coordinate_stds(table: &ReferenceTable) -> Result<Vec<f64>> {
    let n = table.len();
    if n < 2 {
        return Err(Error::invalid("scales need at least 2 records"));
    }
    let dim = table.stat_dim();
    let mut mean = vec![0.0; dim];
    for r in 0..n {
        for (m, &v) in mean.iter_mut().zip(table.stats(r)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut ss = vec![0.0; dim];
    for r in 0..n {
        for (s, (&v, &m)) in ss.iter_mut().zip(table.stats(r).iter().zip(&mean)) {
            *s += (v - m) * (v - m);
        }
    }
    Ok(ss.into_iter().map(|s| (s / (n - 1) as f64).sqrt()).collect())
}

/// Sample standard deviation of each statistic coordinate; a constant
/// coordinate is an error.
pub fn scales(table: &ReferenceTable) -> Result<ScaleVector> {
    let stds = coordinate_stds(table)?;
    if let Some(coordinate) = stds.iter().position(|&sd| !(sd > 0.0)) {
        return Err(Error::DegenerateScale { coordinate });
    }
    Ok(ScaleVector(stds))
}

const CSV_HEADER: &str = "model,alpha,beta,r4,r8,t4,t8,u4,u8";

impl ReferenceTable {
    /// Write the canonical CSV (`model,alpha,beta,r4,r8,t4,t8,u4,u8`).
    /// Only the six geometric summaries are persisted.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        if self.stat_dim != 6 {
            return Err(Error::invalid(
                "only tables with the 6 canonical statistics can be persisted",
            ));
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER.split(','))
            .map_err(|e| Error::Format(e.to_string()))?;
        for r in 0..self.len() {
            let (alpha, beta) = self.params[r];
            let mut record = vec![
                self.models[r].to_string(),
                alpha.to_string(),
                beta.to_string(),
            ];
            record.extend(self.stats(r).iter().map(|v| v.to_string()));
            w.write_record(&record).map_err(|e| Error::Format(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Write the CSV and its JSON metadata sidecar (`<path>.meta.json`).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))?;
        let json = serde_json::to_string_pretty(&self.meta)
            .map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(sidecar_path(path), json + "\n")?;
        Ok(())
    }

    /// Read a table from CSV plus its metadata sidecar.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let meta_json = std::fs::read_to_string(sidecar_path(path))?;
        let meta: TableMeta =
            serde_json::from_str(&meta_json).map_err(|e| Error::Format(e.to_string()))?;
        let file = std::fs::File::open(path)?;
        Self::read_csv(BufReader::new(file), meta)
    }

    /// Parse the canonical CSV given its metadata.
    pub fn read_csv<R: Read>(input: R, meta: TableMeta) -> Result<Self> {
        let mut lines = BufReader::new(input).lines();
        match lines.next() {
            Some(Ok(header)) if header.trim() == CSV_HEADER => {}
            Some(Ok(header)) => {
                return Err(Error::Format(format!("unexpected CSV header `{header}`")))
            }
            _ => return Err(Error::Format("missing CSV header".into())),
        }
        let mut models = Vec::new();
        let mut params = Vec::new();
        let mut stats = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 9 {
                return Err(Error::Format(format!(
                    "line {}: expected 9 fields, got {}",
                    lineno + 2,
                    fields.len()
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("line {}: bad number `{s}`", lineno + 2)))
            };
            let model: u16 = fields[0]
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("line {}: bad model index", lineno + 2)))?;
            if model == 0 || model as usize > meta.specs.len() {
                return Err(Error::Format(format!(
                    "line {}: model index {model} out of range",
                    lineno + 2
                )));
            }
            models.push(model);
            params.push((parse(fields[1])?, parse(fields[2])?));
            for f in &fields[3..9] {
                stats.push(parse(f)?);
            }
        }
        if models.is_empty() {
            return Err(Error::Format("table has no records".into()));
        }
        Ok(ReferenceTable { meta, models, params, stats, stat_dim: 6 })
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn switch_specs() -> Vec<ModelSpec> {
        vec![
            ModelSpec {
                graph: GraphKind::G4,
                num_colors: 2,
                beta: Interval::new(0.0, 1.0).unwrap(),
                noise: NoisePrior::Switch { alpha: Interval::new(0.42, 2.3).unwrap() },
                weight: 0.5,
            },
            ModelSpec {
                graph: GraphKind::G8,
                num_colors: 2,
                beta: Interval::new(0.0, 0.35).unwrap(),
                noise: NoisePrior::Switch { alpha: Interval::new(0.42, 2.3).unwrap() },
                weight: 0.5,
            },
        ]
    }

    fn small_shape() -> LatticeShape {
        LatticeShape::new(8, 8).unwrap()
    }

    #[test]
    fn degenerate_interval_is_rejected() {
        assert!(Interval::new(0.3, 0.3).is_err());
        assert!(Interval::new(0.5, 0.3).is_err());
        assert!(Interval::new(-0.1, 0.3).is_err());
    }

    #[test]
    fn prior_draws_stay_inside_their_intervals() {
        let specs = switch_specs();
        let mut rng = stream_rng(1, 0);
        let mut sum = 0.0;
        let draws = 100_000;
        for _ in 0..draws {
            let (alpha, beta) = sample_prior(&specs[0], &mut rng);
            assert!((0.42..=2.3).contains(&alpha));
            assert!((0.0..=1.0).contains(&beta));
            sum += beta;
        }
        assert_abs_diff_eq!(sum / draws as f64, 0.5, epsilon = 0.005);
    }

    #[test]
    fn prior_draws_are_reproducible() {
        let specs = switch_specs();
        let a: Vec<(f64, f64)> = {
            let mut rng = stream_rng(2, 0);
            (0..10).map(|_| sample_prior(&specs[0], &mut rng)).collect()
        };
        let b: Vec<(f64, f64)> = {
            let mut rng = stream_rng(2, 0);
            (0..10).map(|_| sample_prior(&specs[0], &mut rng)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn tables_are_bit_reproducible() {
        let specs = switch_specs();
        let a = generate_table(&specs, 64, small_shape(), 32, 99, Role::Train).unwrap();
        let b = generate_table(&specs, 64, small_shape(), 32, 99, Role::Train).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn model_frequencies_follow_the_prior_weights() {
        let specs = switch_specs();
        let table =
            generate_table(&specs, 10_000, LatticeShape::new(4, 4).unwrap(), 16, 7, Role::Train)
                .unwrap();
        let ones = (0..table.len()).filter(|&r| table.model(r) == 1).count();
        let freq = ones as f64 / table.len() as f64;
        assert!((freq - 0.5).abs() < 0.015, "model-1 frequency {freq}");
    }

    #[test]
    fn beta_respects_the_g8_truncation() {
        let specs = switch_specs();
        let table =
            generate_table(&specs, 2_000, LatticeShape::new(4, 4).unwrap(), 16, 11, Role::Train)
                .unwrap();
        for r in 0..table.len() {
            let (_, beta) = table.params(r);
            match table.model(r) {
                1 => assert!(beta <= 1.0),
                2 => assert!(beta <= 0.35, "G8 beta {beta} above 0.35"),
                m => panic!("unexpected model {m}"),
            }
        }
    }

    #[test]
    fn gaussian_records_quantize_before_summarizing() {
        let specs = vec![ModelSpec {
            graph: GraphKind::G4,
            num_colors: 2,
            beta: Interval::new(0.0, 1.0).unwrap(),
            noise: NoisePrior::Gaussian { sigma: ParamPrior::Fixed(0.39) },
            weight: 1.0,
        }];
        let (table, fields) =
            generate_table_with_fields(&specs, 8, small_shape(), 32, 5, Role::Test, true).unwrap();
        assert_eq!(fields.len(), 8);
        for r in 0..table.len() {
            let (sigma, _) = table.params(r);
            assert_eq!(sigma, 0.39);
            assert!(table.stats(r).iter().all(|&v| v >= 0.0));
            assert!(matches!(fields[r], SavedField::Continuous(_)));
        }
    }

    #[test]
    fn scales_are_positive_on_simulated_tables() {
        let specs = switch_specs();
        let table = generate_table(&specs, 500, small_shape(), 32, 13, Role::Train).unwrap();
        let s = scales(&table).unwrap();
        assert_eq!(s.len(), 6);
        assert!(s.0.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn scale_of_two_point_sample_is_sqrt_two() {
        let specs = switch_specs();
        let mut table = generate_table(&specs, 2, small_shape(), 8, 17, Role::Train).unwrap();
        table.stats = vec![
            0.0, 0.0, 1.0, 1.0, 1.0, 1.0, //
            2.0, 2.0, 3.0, 3.0, 3.0, 3.0,
        ];
        let s = scales(&table).unwrap();
        assert_abs_diff_eq!(s.0[0], std::f64::consts::SQRT_2, epsilon = 1e-12);

        // Scaling a coordinate by c scales its sd by c.
        for v in table.stats.iter_mut().step_by(6) {
            *v *= 10.0;
        }
        let s2 = scales(&table).unwrap();
        assert_abs_diff_eq!(s2.0[0], 10.0 * std::f64::consts::SQRT_2, epsilon = 1e-9);
    }

    #[test]
    fn constant_coordinate_is_a_degenerate_scale() {
        let specs = switch_specs();
        let mut table = generate_table(&specs, 3, small_shape(), 8, 19, Role::Train).unwrap();
        for r in 0..table.len() {
            table.stats[r * 6 + 2] = 7.0;
        }
        match scales(&table) {
            Err(Error::DegenerateScale { coordinate: 2 }) => {}
            other => panic!("expected degenerate scale on coordinate 2, got {other:?}"),
        }
    }

    #[test]
    fn csv_round_trip_preserves_the_table() {
        let specs = switch_specs();
        let table = generate_table(&specs, 50, small_shape(), 16, 23, Role::Valid).unwrap();
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let back = ReferenceTable::read_csv(buf.as_slice(), table.meta().clone()).unwrap();
        assert_eq!(table, back);
    }

    #[test]
    fn save_and_load_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("table.csv");
        let specs = switch_specs();
        let table = generate_table(&specs, 20, small_shape(), 16, 29, Role::Test).unwrap();
        table.save(&path).unwrap();
        assert!(dir.path().join("table.csv.meta.json").exists());
        let back = ReferenceTable::load(&path).unwrap();
        assert_eq!(table, back);
    }

    #[test]
    fn ancillary_coordinates_extend_the_rows() {
        let specs = switch_specs();
        let table = generate_table(&specs, 10, small_shape(), 16, 31, Role::Train).unwrap();
        let wide = table.with_ancillary(4, 31);
        assert_eq!(wide.stat_dim(), 10);
        for r in 0..wide.len() {
            assert_eq!(&wide.stats(r)[..6], table.stats(r));
            for &v in &wide.stats(r)[6..] {
                assert!((0.0..1.0).contains(&v));
            }
        }
        let again = table.with_ancillary(4, 31);
        assert_eq!(wide, again);
    }

    #[test]
    fn weights_must_sum_to_one() {
        let mut specs = switch_specs();
        specs[0].weight = 0.7;
        match generate_table(&specs, 4, small_shape(), 8, 1, Role::Train) {
            Err(Error::InvalidArgument(_)) => {}
            other => panic!("expected invalid argument, got {other:?}"),
        }
    }
}
