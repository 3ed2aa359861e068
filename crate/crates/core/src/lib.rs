//! Simulation and model choice for hidden Potts random fields.
//!
//! The crate covers the full pipeline: Swendsen-Wang simulation of Potts
//! fields, noisy observation channels, geometric summary statistics built
//! from induced-graph connected components, reference-table generation,
//! kNN model choice with calibration, local (conditional) error estimation
//! by Nadaraya-Watson regression, and an adaptive classifier that picks the
//! statistic dimension per query. Exact enumeration oracles on small
//! lattices back every probabilistic claim.

pub mod adaptive;
pub mod error;
pub mod knn;
pub mod lattice;
pub mod local_error;
pub mod noise;
pub mod potts;
pub mod reftable;
pub mod rng;
pub mod summaries;

pub use error::{Error, Result};
pub use lattice::{
    build_graph, induced_components, monochrome_edge_count, ComponentPartition, DiscreteField,
    GraphKind, LatticeShape, NeighborhoodGraph,
};
pub use noise::{
    apply_gaussian_noise, apply_kcolor_noise, switch_keep_probability, ContinuousField, NoiseSpec,
    SiteValue,
};
pub use potts::{
    config_colors, default_sweeps, edge_count_distribution, exact_distribution,
    exact_model_posterior, partition_function, swendsen_wang_sample, swendsen_wang_sweep,
    ExactPottsTable, OracleModel, OracleNoise, OraclePosterior, PottsSpec, ENUMERATION_CAP,
};
pub use rng::{stream_rng, tagged_seed, SimRng};
pub use summaries::{
    geometric_summaries, geometric_summaries_with, kmeans_quantize, project, StatSubset,
    SummaryVector, SUMMARY_NAMES,
};

pub use adaptive::{
    contrast_trait, fit_adaptive, fit_lda, AdaptiveClassifier, AdaptiveDecision,
    ErrorContrastTrait, LdaProjection,
};
pub use knn::{
    calibrate_k, default_k_grid, prior_error_rate, ErrorCurve, KnnModelChoice, ModelVote,
    DEFAULT_K_GRID,
};
pub use local_error::{
    calibrate_bandwidth, error_indicators, error_surface, nw_estimate, plug_in_local_error,
    Bandwidth, ErrorIndicatorSet, GridPoint, LocalErrorSurface, Projection,
};
pub use reftable::{
    coordinate_stds, generate_table, generate_table_with_fields, sample_prior, scales, Interval,
    ModelSpec, NoisePrior, ParamPrior, ReferenceTable, Role, SavedField, ScaleVector, TableMeta,
};
