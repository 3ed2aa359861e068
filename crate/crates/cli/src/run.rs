//! The full experiment pipeline: simulate the three tables, calibrate one
//! classifier per statistic subset, fit the adaptive classifier on the
//! validation table, evaluate everything on the test table, and write the
//! report plus CSV artifacts.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{Context, Result};

use gibbsel_core::{
    calibrate_k, default_k_grid, error_surface, fit_adaptive, generate_table, prior_error_rate,
    AdaptiveClassifier, KnnModelChoice, Projection, ReferenceTable, Role,
};

use crate::config::ExperimentConfig;
use crate::report::{
    AdaptiveReport, AncillaryReport, ExperimentReport, SubsetReport, REPORT_SCHEMA_VERSION,
};

/// Run a full experiment, writing tables, curves, surfaces and the JSON
/// report under `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentReport> {
    config.validate()?;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let shape = config.shape()?;
    let sweeps = config.sweeps_or_default();
    let mut runtimes = BTreeMap::new();

    // Stage: simulate the three tables.
    let t0 = Instant::now();
    let train = Arc::new(
        generate_table(&config.models, config.sizes.train, shape, sweeps, config.seeds.train, Role::Train)
            .context("stage generate-train")?,
    );
    let valid = generate_table(&config.models, config.sizes.valid, shape, sweeps, config.seeds.valid, Role::Valid)
        .context("stage generate-valid")?;
    let test = generate_table(&config.models, config.sizes.test, shape, sweeps, config.seeds.test, Role::Test)
        .context("stage generate-test")?;
    runtimes.insert("generate".to_string(), t0.elapsed().as_secs_f64());

    let t0 = Instant::now();
    train.save(out_dir.join("train.csv")).context("stage write-train")?;
    valid.save(out_dir.join("valid.csv")).context("stage write-valid")?;
    test.save(out_dir.join("test.csv")).context("stage write-test")?;
    runtimes.insert("write-tables".to_string(), t0.elapsed().as_secs_f64());

    let k_grid = config
        .k_grid
        .clone()
        .unwrap_or_else(|| default_k_grid(train.len()));

    // Stage: calibrate one classifier per subset and evaluate it on test.
    let t0 = Instant::now();
    let mut subset_reports = Vec::new();
    let mut classifiers: Vec<KnnModelChoice> = Vec::new();
    for &subset in &config.subsets {
        let (classifier, curve) = calibrate_k(train.clone(), &valid, subset.indices(), &k_grid)
            .with_context(|| format!("stage calibrate-{}", subset.name()))?;
        let valid_error = curve
            .points
            .iter()
            .find(|&&(k, _)| k == curve.best_k)
            .map(|&(_, e)| e)
            .unwrap_or(f64::NAN);
        let test_error = prior_error_rate(&classifier, &test)
            .with_context(|| format!("stage evaluate-{}", subset.name()))?;
        write_curve(out_dir, &format!("error_curve_{}.csv", subset.name()), &curve.points)?;
        subset_reports.push(SubsetReport {
            stats: subset.name().to_string(),
            curve: curve.points.clone(),
            k: curve.best_k,
            valid_error,
            test_error,
        });
        classifiers.push(classifier);
    }
    runtimes.insert("calibrate".to_string(), t0.elapsed().as_secs_f64());

    // Stage: the ancillary-coordinate study.
    let ancillary = if config.ancillary > 0 {
        let t0 = Instant::now();
        let wide_train =
            Arc::new(train.with_ancillary(config.ancillary, config.seeds.train));
        let wide_valid = valid.with_ancillary(config.ancillary, config.seeds.valid);
        let wide_test = test.with_ancillary(config.ancillary, config.seeds.test);
        let mask: Vec<usize> = (0..2).chain(6..6 + config.ancillary).collect();
        let (classifier, curve) = calibrate_k(wide_train, &wide_valid, mask, &k_grid)
            .context("stage calibrate-ancillary")?;
        let valid_error = curve
            .points
            .iter()
            .find(|&&(k, _)| k == curve.best_k)
            .map(|&(_, e)| e)
            .unwrap_or(f64::NAN);
        let test_error =
            prior_error_rate(&classifier, &wide_test).context("stage evaluate-ancillary")?;
        write_curve(out_dir, "error_curve_2d_ancillary.csv", &curve.points)?;
        runtimes.insert("ancillary".to_string(), t0.elapsed().as_secs_f64());
        Some(AncillaryReport {
            count: config.ancillary,
            curve: curve.points,
            k: curve.best_k,
            valid_error,
            test_error,
        })
    } else {
        None
    };

    // Stage: adaptive classifier over the subsets, fitted on validation.
    let adaptive = if classifiers.len() >= 2 {
        let t0 = Instant::now();
        let adaptive = fit_adaptive(classifiers.clone(), &valid).context("stage fit-adaptive")?;
        let report = evaluate_adaptive(&adaptive, &test, &subset_reports)?;
        write_surfaces(out_dir, config, &adaptive, &test)?;
        runtimes.insert("adaptive".to_string(), t0.elapsed().as_secs_f64());
        Some(report)
    } else {
        None
    };

    let report = ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: config.clone(),
        subsets: subset_reports,
        ancillary,
        adaptive,
        runtimes,
    };
    std::fs::write(out_dir.join("report.json"), report.to_json())
        .context("stage write-report")?;
    Ok(report)
}

fn evaluate_adaptive(
    adaptive: &AdaptiveClassifier,
    test: &ReferenceTable,
    subsets: &[SubsetReport],
) -> Result<AdaptiveReport> {
    let mut errors = 0usize;
    let mut shares = vec![0usize; adaptive.num_classifiers()];
    for r in 0..test.len() {
        let decision = adaptive.predict(test.stats(r)).context("stage adaptive-predict")?;
        if decision.predicted != test.model(r) {
            errors += 1;
        }
        shares[decision.chosen - 1] += 1;
    }
    let n = test.len() as f64;
    Ok(AdaptiveReport {
        test_error: errors as f64 / n,
        constituent_test_errors: subsets.iter().map(|s| s.test_error).collect(),
        lambda_shares: shares.into_iter().map(|c| c as f64 / n).collect(),
        lda: adaptive.lda().cloned(),
    })
}

/// Local-error surfaces of each constituent over the first two axes of the
/// shared projection, evaluated on the test table.
fn write_surfaces(
    out_dir: &Path,
    config: &ExperimentConfig,
    adaptive: &AdaptiveClassifier,
    test: &ReferenceTable,
) -> Result<()> {
    let projection = match adaptive.projection() {
        Projection::Linear { means, scales, axes } if axes.len() >= 2 => Projection::Linear {
            means: means.clone(),
            scales: scales.clone(),
            axes: axes[..2].to_vec(),
        },
        _ => return Ok(()),
    };
    for (i, classifier) in adaptive.classifiers().iter().enumerate() {
        let surface = error_surface(classifier, test, &projection, config.surface_grid)
            .with_context(|| format!("stage surface-{}", i + 1))?;
        let path = out_dir.join(format!("surface_{}.csv", config.subsets[i].name()));
        let mut out = std::io::BufWriter::new(
            std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        );
        writeln!(out, "s2_1,s2_2,tau,support")?;
        for point in &surface.grid {
            writeln!(
                out,
                "{},{},{},{}",
                point.coords[0],
                point.coords[1],
                point.tau,
                u8::from(point.supported)
            )?;
        }
    }
    Ok(())
}

pub(crate) fn write_curve(out_dir: &Path, name: &str, points: &[(usize, f64)]) -> Result<()> {
    let path = out_dir.join(name);
    let mut out = std::io::BufWriter::new(
        std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    );
    writeln!(out, "k,error")?;
    for &(k, e) in points {
        writeln!(out, "{k},{e}")?;
    }
    Ok(())
}
