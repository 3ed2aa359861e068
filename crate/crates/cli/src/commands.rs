//! Implementations of the individual subcommands.

use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use gibbsel_core::{
    build_graph, calibrate_k, default_k_grid, error_surface, exact_model_posterior,
    generate_table_with_fields, geometric_summaries, kmeans_quantize, stream_rng, ContinuousField,
    DiscreteField, GraphKind, KnnModelChoice, Projection, ReferenceTable, Role, SavedField,
    StatSubset,
};

use crate::config::load_config;

pub fn cmd_gen(
    config: &str,
    n: usize,
    seed: u64,
    role: Role,
    out: &Path,
    keep_fields: Option<&Path>,
) -> Result<()> {
    let config = load_config(config)?;
    let shape = config.shape()?;
    let sweeps = config.sweeps_or_default();
    let (table, fields) = generate_table_with_fields(
        &config.models,
        n,
        shape,
        sweeps,
        seed,
        role,
        keep_fields.is_some(),
    )
    .context("stage generate")?;
    table.save(out).context("stage write-table")?;
    if let Some(dir) = keep_fields {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating field directory {}", dir.display()))?;
        for (i, field) in fields.iter().enumerate() {
            match field {
                SavedField::Discrete(f) => f
                    .write_pgm_file(dir.join(format!("field_{i:06}.pgm")))
                    .context("stage write-fields")?,
                SavedField::Continuous(f) => f
                    .write_csv_file(dir.join(format!("field_{i:06}.csv")))
                    .context("stage write-fields")?,
            }
        }
    }
    eprintln!("wrote {} records to {}", table.len(), out.display());
    Ok(())
}

#[derive(Serialize)]
struct CalibrateReport {
    stats: String,
    curve: Vec<(usize, f64)>,
    k_star: usize,
    valid_error: f64,
}

pub fn cmd_calibrate(
    train: &Path,
    valid: &Path,
    stats: StatSubset,
    k_grid: Option<Vec<usize>>,
    out: &Path,
) -> Result<()> {
    let train = Arc::new(ReferenceTable::load(train).context("stage load-train")?);
    let valid = ReferenceTable::load(valid).context("stage load-valid")?;
    let grid = k_grid.unwrap_or_else(|| default_k_grid(train.len()));
    let (_, curve) =
        calibrate_k(train, &valid, stats.indices(), &grid).context("stage calibrate")?;
    let valid_error = curve
        .points
        .iter()
        .find(|&&(k, _)| k == curve.best_k)
        .map(|&(_, e)| e)
        .unwrap_or(f64::NAN);
    let report = CalibrateReport {
        stats: stats.name().to_string(),
        curve: curve.points,
        k_star: curve.best_k,
        valid_error,
    };
    let json = serde_json::to_string_pretty(&report)? + "\n";
    std::fs::write(out, json).context("stage write-report")?;
    eprintln!("calibrated k = {} at validation error {valid_error}", report.k_star);
    Ok(())
}

#[derive(Serialize)]
struct ClassifyOutput {
    frequencies: Vec<f64>,
    predicted: u16,
}

/// Read an observed field and reduce it to the summary statistics; `.pgm`
/// means discrete colors, `.csv` a continuous field that gets quantized to
/// the models' color count first.
fn observed_summaries(
    obs: &Path,
    table: &ReferenceTable,
) -> Result<[f64; 6]> {
    let ext = obs
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match ext.as_str() {
        "pgm" => {
            let field = DiscreteField::read_pgm_file(obs).context("stage read-observation")?;
            Ok(geometric_summaries(&field).as_f64())
        }
        "csv" => {
            let field = ContinuousField::read_csv_file(obs).context("stage read-observation")?;
            let k = table.meta().specs[0].num_colors;
            if table.meta().specs.iter().any(|s| s.num_colors != k) {
                bail!("models disagree on the color count; cannot quantize the observation");
            }
            // The quantizer stream is pinned to the table seed so repeated
            // classifications of one observation agree.
            let mut rng = stream_rng(table.meta().seed, u64::MAX);
            let q = kmeans_quantize(&field, k, &mut rng).context("stage quantize")?;
            Ok(geometric_summaries(&q).as_f64())
        }
        other => bail!("unknown observation format `{other}` (use .pgm or .csv)"),
    }
}

pub fn cmd_classify(
    train: &Path,
    k: usize,
    stats: StatSubset,
    obs: &Path,
    _sigma_known: Option<f64>,
    out: Option<&Path>,
) -> Result<()> {
    let train = Arc::new(ReferenceTable::load(train).context("stage load-train")?);
    let summaries = observed_summaries(obs, &train)?;
    let classifier = KnnModelChoice::fit(train, stats, k).context("stage fit")?;
    let vote = classifier.predict_stats(&summaries).context("stage vote")?;
    let output = ClassifyOutput { frequencies: vote.frequencies, predicted: vote.predicted };
    let json = serde_json::to_string_pretty(&output)? + "\n";
    match out {
        Some(path) => std::fs::write(path, json).context("stage write-output")?,
        None => print!("{json}"),
    }
    Ok(())
}

/// Parse a projection argument: one of the nested subsets truncated to two
/// axes, or `coords:a,b` for an explicit pair.
fn parse_s2(s2: &str) -> Result<Projection> {
    if let Some(rest) = s2.strip_prefix("coords:") {
        let coords: Vec<usize> = rest
            .split(',')
            .map(|tok| tok.trim().parse::<usize>().context("bad coordinate index"))
            .collect::<Result<_>>()?;
        if coords.len() != 2 {
            bail!("surface projections need exactly 2 coordinates");
        }
        return Ok(Projection::Coords(coords));
    }
    let subset: StatSubset = s2.parse()?;
    Ok(Projection::Coords(subset.indices()[..2].to_vec()))
}

pub fn cmd_local_error(
    train: &Path,
    valid: &Path,
    stats: StatSubset,
    k: usize,
    s2: &str,
    grid: usize,
    out: &Path,
) -> Result<()> {
    let train = Arc::new(ReferenceTable::load(train).context("stage load-train")?);
    let valid = ReferenceTable::load(valid).context("stage load-valid")?;
    let projection = parse_s2(s2)?;
    let classifier = KnnModelChoice::fit(train, stats, k).context("stage fit")?;
    let surface =
        error_surface(&classifier, &valid, &projection, grid).context("stage surface")?;

    let mut text = String::from("s2_1,s2_2,tau,support\n");
    for point in &surface.grid {
        text.push_str(&format!(
            "{},{},{},{}\n",
            point.coords[0],
            point.coords[1],
            point.tau,
            u8::from(point.supported)
        ));
    }
    std::fs::write(out, text).context("stage write-surface")?;
    eprintln!(
        "surface over {} points; mean local error at table points {:.4}",
        surface.grid.len(),
        surface.table_mean()
    );
    Ok(())
}

pub fn cmd_adaptive(
    train: &Path,
    valid: &Path,
    test: &Path,
    stats: &[StatSubset],
    k_grid: Option<Vec<usize>>,
    out: &Path,
) -> Result<()> {
    use crate::report::{AdaptiveReport, SubsetReport};
    use gibbsel_core::{fit_adaptive, prior_error_rate};

    if stats.len() < 2 {
        bail!("the adaptive classifier needs at least two subsets");
    }
    let train = Arc::new(ReferenceTable::load(train).context("stage load-train")?);
    let valid = ReferenceTable::load(valid).context("stage load-valid")?;
    let test = ReferenceTable::load(test).context("stage load-test")?;
    let grid = k_grid.unwrap_or_else(|| default_k_grid(train.len()));

    let mut classifiers = Vec::new();
    let mut subset_reports = Vec::new();
    for &subset in stats {
        let (classifier, curve) = calibrate_k(train.clone(), &valid, subset.indices(), &grid)
            .with_context(|| format!("stage calibrate-{}", subset.name()))?;
        let valid_error = curve
            .points
            .iter()
            .find(|&&(k, _)| k == curve.best_k)
            .map(|&(_, e)| e)
            .unwrap_or(f64::NAN);
        let test_error = prior_error_rate(&classifier, &test)
            .with_context(|| format!("stage evaluate-{}", subset.name()))?;
        subset_reports.push(SubsetReport {
            stats: subset.name().to_string(),
            curve: curve.points,
            k: curve.best_k,
            valid_error,
            test_error,
        });
        classifiers.push(classifier);
    }

    let adaptive = fit_adaptive(classifiers, &valid).context("stage fit-adaptive")?;
    let mut errors = 0usize;
    let mut shares = vec![0usize; adaptive.num_classifiers()];
    for r in 0..test.len() {
        let decision = adaptive.predict(test.stats(r)).context("stage predict")?;
        if decision.predicted != test.model(r) {
            errors += 1;
        }
        shares[decision.chosen - 1] += 1;
    }
    let n = test.len() as f64;

    #[derive(Serialize)]
    struct AdaptiveCommandReport {
        subsets: Vec<SubsetReport>,
        adaptive: AdaptiveReport,
    }
    let report = AdaptiveCommandReport {
        adaptive: AdaptiveReport {
            test_error: errors as f64 / n,
            constituent_test_errors: subset_reports.iter().map(|s| s.test_error).collect(),
            lambda_shares: shares.into_iter().map(|c| c as f64 / n).collect(),
            lda: adaptive.lda().cloned(),
        },
        subsets: subset_reports,
    };
    let json = serde_json::to_string_pretty(&report)? + "\n";
    std::fs::write(out, json).context("stage write-report")?;
    eprintln!(
        "adaptive test error {:.4}; constituent errors {:?}",
        report.adaptive.test_error, report.adaptive.constituent_test_errors
    );
    Ok(())
}

#[derive(Serialize)]
struct OracleOutput {
    posteriors: Vec<f64>,
    map: u16,
    log_evidences: Vec<f64>,
    /// Posteriors recomputed with twice the quadrature nodes.
    refined_posteriors: Vec<f64>,
    /// Largest posterior change under refinement.
    refinement_gap: f64,
}

pub fn cmd_oracle(
    config: &str,
    obs: &Path,
    nodes: usize,
    out: Option<&Path>,
) -> Result<()> {
    let config = load_config(config)?;
    let y = DiscreteField::read_pgm_file(obs).context("stage read-observation")?;
    let g4 = build_graph(y.shape(), GraphKind::G4);
    let g8 = build_graph(y.shape(), GraphKind::G8);
    let models: Vec<_> = config
        .models
        .iter()
        .map(|spec| {
            spec.as_oracle(match spec.graph {
                GraphKind::G4 => &g4,
                GraphKind::G8 => &g8,
            })
        })
        .collect();
    let priors: Vec<f64> = config.models.iter().map(|m| m.weight).collect();

    let coarse = exact_model_posterior(&y, &models, &priors, nodes).context("stage oracle")?;
    let fine =
        exact_model_posterior(&y, &models, &priors, nodes * 2).context("stage oracle-refined")?;
    let gap = coarse
        .posteriors
        .iter()
        .zip(&fine.posteriors)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let output = OracleOutput {
        posteriors: coarse.posteriors,
        map: (coarse.map_index + 1) as u16,
        log_evidences: coarse.log_evidences,
        refined_posteriors: fine.posteriors,
        refinement_gap: gap,
    };
    let json = serde_json::to_string_pretty(&output)? + "\n";
    match out {
        Some(path) => std::fs::write(path, json).context("stage write-output")?,
        None => print!("{json}"),
    }
    Ok(())
}

