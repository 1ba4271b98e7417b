//! Python bindings: `import interestflow_py`.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use interestflow::bots::{length_entropy as entropy_bits, name_pattern as matches_name};
use interestflow::concentration::{self, ActivityVector, GiniMode};
use interestflow::ingest::load_catalog as read_catalog;
use interestflow::interest::vector_angle;
use interestflow::pipeline::{run_pipeline as run, RunConfig, Stage};
use interestflow::stats::{fit_power_law_points, fit_skew_gaussian, Histogram};
use interestflow::synth::{write_corpus, PlantedBot, SynthSpec, WriteOptions};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn mode(name: &str) -> PyResult<GiniMode> {
    name.parse().map_err(value_err)
}

/// Gini coefficient of a count vector.
#[pyfunction]
fn gini(counts: Vec<u64>) -> PyResult<f64> {
    concentration::gini(&ActivityVector::from_dense(&counts)).map_err(value_err)
}

/// Smallest Gini reachable by `total` items over `dimension` slots.
#[pyfunction]
fn minimum_gini(total: u64, dimension: usize) -> f64 {
    concentration::minimum_gini(total, dimension)
}

/// `(raw, normalized, g_star)` for a count vector.
#[pyfunction]
#[pyo3(signature = (counts, mode = "corrected"))]
fn normalized_gini(counts: Vec<u64>, mode: &str) -> PyResult<(f64, f64, f64)> {
    let r = concentration::normalized_gini(&ActivityVector::from_dense(&counts), self::mode(mode)?)
        .map_err(value_err)?;
    Ok((r.raw, r.normalized, r.g_star))
}

/// `total` comments dropped uniformly over `dimension` subreddits.
#[pyfunction]
fn null_model(total: u64, dimension: usize, seed: u64) -> Vec<u64> {
    concentration::null_model(total, dimension, &mut ChaCha8Rng::seed_from_u64(seed)).dense()
}

/// Angle in degrees between two count vectors.
#[pyfunction]
fn angle(a: Vec<u32>, b: Vec<u32>) -> PyResult<f64> {
    vector_angle(&a, &b).map_err(value_err)
}

/// Shannon entropy (bits) of the comment-length distribution.
#[pyfunction]
fn length_entropy(lengths: Vec<u32>) -> PyResult<f64> {
    entropy_bits(&lengths).map(|(h, _)| h).map_err(value_err)
}

#[pyfunction]
fn name_pattern(author: &str) -> bool {
    matches_name(author)
}

/// Weighted log-log fit of `y = a x^b`; returns `(a, b)`.
#[pyfunction]
#[pyo3(signature = (x, y, weights = None))]
fn fit_power_law(x: Vec<f64>, y: Vec<f64>, weights: Option<Vec<f64>>) -> PyResult<(f64, f64)> {
    let w = weights.unwrap_or_else(|| vec![1.0; x.len()]);
    let f = fit_power_law_points(&x, &y, &w).map_err(value_err)?;
    Ok((f.a, f.b))
}

/// Skew-normal fit to samples as `(name, value)` pairs: location, scale,
/// shape, gamma and mode.
#[pyfunction]
#[pyo3(signature = (samples, bins = 60))]
fn fit_skew_gaussian_samples(samples: Vec<f64>, bins: usize) -> PyResult<Vec<(&'static str, f64)>> {
    let f = fit_skew_gaussian(&Histogram::linear(&samples, bins)).map_err(value_err)?;
    Ok(vec![
        ("location", f.location),
        ("scale", f.scale),
        ("shape", f.shape),
        ("gamma", f.gamma),
        ("mode", f.mode),
    ])
}

/// Subreddit catalog as `(name, topic, included, exotic_rules)` rows.
#[pyfunction]
fn load_catalog(path: PathBuf) -> PyResult<Vec<(String, String, bool, bool)>> {
    let c = read_catalog(&path).map_err(value_err)?;
    Ok(c.iter()
        .map(|(n, e)| {
            (
                n.to_string(),
                e.topic_class.to_string(),
                e.included,
                e.exotic_rules,
            )
        })
        .collect())
}

/// Runs one stage (`ingest`, `stats`, `gini`, `interest`, `bots`, `run`).
/// `settings` holds the same keys as a config file. Returns the written paths.
#[pyfunction]
#[pyo3(signature = (stage, settings))]
fn run_pipeline(
    py: Python<'_>,
    stage: &str,
    settings: Vec<(String, String)>,
) -> PyResult<Vec<PathBuf>> {
    let stage: Stage = stage.parse().map_err(value_err)?;
    let mut cfg = RunConfig::default();
    for (k, v) in &settings {
        cfg.set(k, v, std::path::Path::new("")).map_err(value_err)?;
    }
    let summary = py
        .detach(|| run(&cfg, stage))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(summary.files)
}

/// Writes a seeded synthetic corpus with planted events and one planted bot.
/// Returns `(records, comment_files, post_files, catalog, ledger_events)`.
#[pyfunction]
#[pyo3(signature = (output, users = 2000, subreddits = 100, seed = 0, planted_users = 10, excursions = 3, compress = true))]
#[allow(clippy::too_many_arguments, clippy::type_complexity)]
fn generate_corpus(
    py: Python<'_>,
    output: PathBuf,
    users: usize,
    subreddits: usize,
    seed: u64,
    planted_users: usize,
    excursions: usize,
    compress: bool,
) -> PyResult<(u64, Vec<PathBuf>, Vec<PathBuf>, PathBuf, PathBuf)> {
    let mut spec = SynthSpec::new(users, subreddits, seed);
    spec.plant_users(planted_users, excursions)
        .map_err(value_err)?;
    spec.planted_bots.push(PlantedBot {
        author: "spambot000".into(),
        subreddit: "sub0001".into(),
        fixed_length: 100,
        n_comments: 20_000,
    });
    let out = py
        .detach(|| {
            write_corpus(
                &spec,
                &output,
                WriteOptions {
                    shards: 1,
                    compress,
                },
            )
        })
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok((
        out.records,
        out.comment_files,
        out.post_files,
        out.catalog,
        out.ledger_events,
    ))
}

#[pymodule]
fn interestflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(gini, m)?)?;
    m.add_function(wrap_pyfunction!(minimum_gini, m)?)?;
    m.add_function(wrap_pyfunction!(normalized_gini, m)?)?;
    m.add_function(wrap_pyfunction!(null_model, m)?)?;
    m.add_function(wrap_pyfunction!(angle, m)?)?;
    m.add_function(wrap_pyfunction!(length_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(name_pattern, m)?)?;
    m.add_function(wrap_pyfunction!(fit_power_law, m)?)?;
    m.add_function(wrap_pyfunction!(fit_skew_gaussian_samples, m)?)?;
    m.add_function(wrap_pyfunction!(load_catalog, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(generate_corpus, m)?)?;
    Ok(())
}
