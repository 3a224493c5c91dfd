//! Python module `scalefree`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use scalefree_core::analysis::{
    erg_series as core_erg_series, fit_power_law as core_fit, geometric_grid as core_grid, GapSeries, Meaning,
};
use scalefree_core::evt::TailModel;
use scalefree_core::heuristics::LkParams;
use scalefree_core::multistart::{run_algorithm, Kick, RunOptions, RunSeed};
use scalefree_core::tsp::{generate_random_instance, held_karp_optimum, TspInstance};
use scalefree_lab::config::{parse_algorithm_name, DEFAULT_CONSTRUCTION_K};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn instance(coords: Vec<[i64; 2]>) -> PyResult<TspInstance> {
    TspInstance::new("python", coords).map_err(value_err)
}

/// Validates a JSON config and returns its normalized JSON.
#[pyfunction]
fn validate_config(text: &str) -> PyResult<String> {
    let c = scalefree_lab::validate_config(text).map_err(value_err)?;
    Ok(c.to_json().to_string())
}

/// Runs an experiment from JSON config text; returns the files written.
#[pyfunction]
fn run_experiment(py: Python<'_>, text: &str) -> PyResult<Vec<String>> {
    let c = scalefree_lab::validate_config(text).map_err(value_err)?;
    let bundle = py
        .detach(|| scalefree_lab::run_experiment(&c))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(bundle.files.iter().map(|p| p.display().to_string()).collect())
}

/// Uniform integer coordinates in `[0, coord_bound]^2`.
#[pyfunction]
fn random_instance(n: usize, coord_bound: i64, seed: u64) -> PyResult<Vec<[i64; 2]>> {
    Ok(generate_random_instance(n, coord_bound, seed)
        .map_err(value_err)?
        .coords()
        .to_vec())
}

/// Optimal tour length by dynamic programming.
#[pyfunction]
fn optimal_tour_length(coords: Vec<[i64; 2]>) -> PyResult<i64> {
    held_karp_optimum(&instance(coords)?).map_err(value_err)
}

/// Per-iteration EOVs (negated tour costs) of one run.
#[pyfunction]
#[pyo3(signature = (coords, algorithm, iterations, master_seed, run = 0, ils = false))]
fn run_trace(
    py: Python<'_>,
    coords: Vec<[i64; 2]>,
    algorithm: &str,
    iterations: usize,
    master_seed: u64,
    run: u64,
    ils: bool,
) -> PyResult<Vec<i64>> {
    let inst = instance(coords)?;
    let alg = parse_algorithm_name(
        algorithm,
        ils,
        Kick::DoubleBridge,
        DEFAULT_CONSTRUCTION_K,
        LkParams::default(),
    )
    .map_err(PyValueError::new_err)?;
    let trace = py
        .detach(|| {
            run_algorithm(
                &inst,
                &alg,
                iterations,
                RunSeed::new(master_seed, run),
                RunOptions::default(),
            )
        })
        .map_err(value_err)?;
    Ok(trace.eov)
}

/// Geometric grid of iteration counts up to `n_max`.
#[pyfunction]
fn geometric_grid(n_max: u64) -> Vec<u64> {
    core_grid(n_max)
}

/// Monte Carlo expected relative gap; `model` is tail-model JSON.
#[pyfunction]
fn erg_series(
    py: Python<'_>,
    model: &str,
    x: f64,
    grid: Vec<u64>,
    reps: usize,
    seed: u64,
) -> PyResult<Vec<(u64, f64)>> {
    let m: TailModel = serde_json::from_str(model).map_err(value_err)?;
    let s = py
        .detach(|| core_erg_series(&m, x, &grid, reps, seed))
        .map_err(value_err)?;
    Ok(s.points.iter().map(|p| (p.n, p.value)).collect())
}

/// Log-log least-squares fit; returns `(xi_hat, r_squared)`.
#[pyfunction]
#[pyo3(signature = (points, window = None))]
fn fit_power_law(points: Vec<(u64, f64)>, window: Option<(u64, u64)>) -> PyResult<(f64, f64)> {
    let s = GapSeries::exact(Meaning::Erg, points).map_err(value_err)?;
    let f = core_fit(&s, window).map_err(value_err)?;
    Ok((f.xi_hat, f.r_squared))
}

#[pymodule]
fn scalefree(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(validate_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(random_instance, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_tour_length, m)?)?;
    m.add_function(wrap_pyfunction!(run_trace, m)?)?;
    m.add_function(wrap_pyfunction!(geometric_grid, m)?)?;
    m.add_function(wrap_pyfunction!(erg_series, m)?)?;
    m.add_function(wrap_pyfunction!(fit_power_law, m)?)?;
    Ok(())
}
