//! Python bindings. Matrices cross the boundary as lists of rows; structured
//! results come back as JSON strings so the Python side can use `json.loads`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use idstress::encoders::EncodedDataset;
use idstress::harness::{self, DiagnoseSettings, ExperimentConfig};
use idstress::matrix::{CodeMatrix, FactorMatrix};
use idstress::metrics::{evaluate_one, EvalSettings, MetricId};
use idstress::oracles::{self, SymmetricMixingParams};
use idstress::properties::{run_suite, SuiteConfig};
use idstress::rng::Rng;

type Rows = Vec<Vec<f64>>;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn pair(z: Rows, zhat: Rows) -> PyResult<EncodedDataset> {
    let z = FactorMatrix::from_rows(&z).map_err(value_error)?;
    let zhat = CodeMatrix::from_rows(&zhat).map_err(value_error)?;
    EncodedDataset::from_external(z, zhat).map_err(value_error)
}

fn metric_ids(names: Option<Vec<String>>) -> PyResult<Vec<MetricId>> {
    match names {
        None => Ok(MetricId::MAIN.to_vec()),
        Some(names) => names
            .iter()
            .map(|n| MetricId::parse(n).ok_or_else(|| value_error(format!("unknown metric `{n}`"))))
            .collect(),
    }
}

fn settings(settings_json: Option<&str>) -> PyResult<EvalSettings> {
    let s: EvalSettings = match settings_json {
        Some(text) => serde_json::from_str(text).map_err(value_error)?,
        None => EvalSettings::default(),
    };
    s.validate().map_err(value_error)?;
    Ok(s)
}

/// Score a (factors, codes) pair. Returns `{metric: score or None}`; a metric
/// that errors maps to None as well.
#[pyfunction]
#[pyo3(signature = (z, zhat, metrics=None, seed=0, settings_json=None))]
fn evaluate(
    z: Rows,
    zhat: Rows,
    metrics: Option<Vec<String>>,
    seed: u64,
    settings_json: Option<&str>,
) -> PyResult<Vec<(String, Option<f64>)>> {
    let ds = pair(z, zhat)?;
    let settings = settings(settings_json)?;
    let rng = Rng::new(seed, 0);
    Ok(metric_ids(metrics)?
        .into_iter()
        .map(|m| {
            let v = evaluate_one(&ds, m, &settings, &rng).ok().and_then(|s| s.value);
            (m.name().to_string(), v)
        })
        .collect())
}

/// Full score record (value, per-factor scores, diagnostics) as JSON.
#[pyfunction]
#[pyo3(signature = (z, zhat, metric, seed=0, settings_json=None))]
fn score_json(z: Rows, zhat: Rows, metric: &str, seed: u64, settings_json: Option<&str>) -> PyResult<String> {
    let ds = pair(z, zhat)?;
    let id = metric_ids(Some(vec![metric.to_string()]))?[0];
    let s = evaluate_one(&ds, id, &settings(settings_json)?, &Rng::new(seed, 0)).map_err(value_error)?;
    serde_json::to_string(&s).map_err(value_error)
}

/// Checklist report; markdown unless `as_json`.
#[pyfunction]
#[pyo3(signature = (z, zhat, seed=0, null_seeds=5, as_json=false))]
fn diagnose(z: Rows, zhat: Rows, seed: u64, null_seeds: u64, as_json: bool) -> PyResult<String> {
    let z = FactorMatrix::from_rows(&z).map_err(value_error)?;
    let zhat = CodeMatrix::from_rows(&zhat).map_err(value_error)?;
    let s = DiagnoseSettings {
        seed,
        null_seeds: (0..null_seeds).collect(),
        ..Default::default()
    };
    let report = harness::diagnose(z, zhat, &s).map_err(value_error)?;
    if as_json {
        serde_json::to_string(&report).map_err(value_error)
    } else {
        Ok(report.to_markdown())
    }
}

/// `(z, zhat)` rows for one cell of an experiment config.
#[pyfunction]
#[pyo3(signature = (config_json, cell=0, seed=0))]
fn make_dataset(config_json: &str, cell: usize, seed: u64) -> PyResult<(Rows, Rows)> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(value_error)?;
    let cells = harness::expand(&cfg).map_err(value_error)?;
    let c = cells
        .get(cell)
        .ok_or_else(|| value_error(format!("config expands to {} cells", cells.len())))?;
    if let Some(why) = c.skip_reason() {
        return Err(value_error(format!("cell {cell} is skipped: {why}")));
    }
    let ds = c.dataset(seed).map_err(value_error)?;
    let z = (0..ds.n()).map(|r| (0..ds.d()).map(|j| ds.z.column(j)[r]).collect()).collect();
    let zhat = (0..ds.n()).map(|r| (0..ds.m()).map(|i| ds.zhat.column(i)[r]).collect()).collect();
    Ok((z, zhat))
}

/// Run an experiment config; returns the result table as JSON.
#[pyfunction]
fn run_experiment(config_json: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(value_error)?;
    serde_json::to_string(&harness::run(&cfg).map_err(value_error)?).map_err(value_error)
}

#[pyfunction]
fn preset_config(name: &str) -> PyResult<String> {
    serde_json::to_string(&harness::preset(name).map_err(value_error)?).map_err(value_error)
}

/// Run the property suite; returns the suite report as JSON.
#[pyfunction]
#[pyo3(signature = (config_json="{}"))]
fn run_properties(config_json: &str) -> PyResult<String> {
    let cfg = SuiteConfig::from_json(config_json).map_err(value_error)?;
    serde_json::to_string(&run_suite(&cfg).map_err(value_error)?).map_err(value_error)
}

#[pyfunction]
fn null_mcc_floor(m: usize, n: usize) -> PyResult<f64> {
    oracles::null_mcc_floor(m, n).map_err(value_error)
}

#[pyfunction]
fn mcc_closed_form(rho: f64, epsilon: f64) -> PyResult<f64> {
    let p = SymmetricMixingParams::new(rho, epsilon).map_err(value_error)?;
    oracles::mcc_closed_form(&p).map_err(value_error)
}

#[pymodule]
pub fn idstress_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(score_json, m)?)?;
    m.add_function(wrap_pyfunction!(diagnose, m)?)?;
    m.add_function(wrap_pyfunction!(make_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(preset_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_properties, m)?)?;
    m.add_function(wrap_pyfunction!(null_mcc_floor, m)?)?;
    m.add_function(wrap_pyfunction!(mcc_closed_form, m)?)?;
    m.add("METRICS", MetricId::ALL.iter().map(|m| m.name()).collect::<Vec<_>>())?;
    Ok(())
}
