//! Random multi-start (RMS) and iterated local search (ILS) drivers.
//!
//! Objective values follow the maximization convention: the empirical
//! objective value (EOV) of a tour is its negated cost.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::heuristics::{
    construct, double_bridge_kick, ConstructionKind, LocalSearch, LocalSearchKind, MIN_KICK_CITIES,
};
use crate::rng::stream_rng;
use crate::tsp::{Tour, TspInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Driver {
    Rms,
    Ils,
}

/// Perturbation applied to the incumbent by ILS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Kick {
    #[default]
    DoubleBridge,
    /// Restart the local search from the incumbent itself.
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Algorithm {
    pub construction: ConstructionKind,
    pub local_search: LocalSearchKind,
    pub driver: Driver,
    #[serde(default)]
    pub kick: Kick,
}

impl Algorithm {
    pub fn rms(construction: ConstructionKind, local_search: LocalSearchKind) -> Self {
        Self {
            construction,
            local_search,
            driver: Driver::Rms,
            kick: Kick::DoubleBridge,
        }
    }

    pub fn ils(construction: ConstructionKind, local_search: LocalSearchKind, kick: Kick) -> Self {
        Self {
            construction,
            local_search,
            driver: Driver::Ils,
            kick,
        }
    }

    /// Label such as `RMS(NN+3opt)`.
    pub fn label(&self) -> String {
        let driver = match self.driver {
            Driver::Rms => "RMS",
            Driver::Ils => "ILS",
        };
        format!("{driver}({}+{})", self.construction.label(), self.local_search.label())
    }

    pub fn validate(&self) -> Result<()> {
        self.construction.validate()?;
        self.local_search.validate()
    }
}

/// Identifies the random streams of one run: iteration `i` of run `run`
/// draws from the stream `(master_seed, run, i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSeed {
    pub master_seed: u64,
    pub run: u64,
}

impl RunSeed {
    pub fn new(master_seed: u64, run: u64) -> Self {
        Self { master_seed, run }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub instance_name: String,
    pub algorithm: Algorithm,
    pub seed: RunSeed,
    /// Per-iteration EOVs `X_i` (negated tour costs).
    pub eov: Vec<i64>,
    /// Running maxima `Z_n`.
    pub best: Vec<i64>,
    /// Per-iteration durations in seconds, when requested.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_times: Option<Vec<f64>>,
}

impl RunTrace {
    pub fn new(instance_name: impl Into<String>, algorithm: Algorithm, seed: RunSeed, eov: Vec<i64>) -> Self {
        let best = running_max(&eov);
        Self {
            instance_name: instance_name.into(),
            algorithm,
            seed,
            eov,
            best,
            wall_times: None,
        }
    }

    pub fn len(&self) -> usize {
        self.eov.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eov.is_empty()
    }

    /// Best EOV of the whole run.
    pub fn final_best(&self) -> Option<i64> {
        self.best.last().copied()
    }

    /// Checks the running-maximum invariant.
    pub fn validate(&self) -> Result<()> {
        if self.best.len() != self.eov.len() {
            return invalid("best and eov lengths differ");
        }
        if self.best != running_max(&self.eov) {
            return invalid("best is not the running maximum of eov");
        }
        if self.wall_times.as_ref().is_some_and(|w| w.len() != self.eov.len()) {
            return invalid("wall_times length differs from eov");
        }
        Ok(())
    }

    /// Writes the `iter,eov,best` CSV (iterations numbered from 1).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "iter,eov,best")?;
        for (i, (x, z)) in self.eov.iter().zip(&self.best).enumerate() {
            writeln!(w, "{},{},{}", i + 1, x, z)?;
        }
        Ok(())
    }

    /// JSON sidecar `{instance, algorithm, seed, optimum}` for the CSV.
    pub fn sidecar_json(&self, optimum: Option<f64>) -> serde_json::Value {
        let mut v = serde_json::json!({
            "instance": self.instance_name,
            "algorithm": self.algorithm.label(),
            "algorithm_spec": self.algorithm,
            "seed": self.seed,
            "optimum": optimum,
        });
        if let Some(w) = &self.wall_times {
            v["wall_times"] = serde_json::json!(w);
        }
        v
    }
}

pub fn running_max(values: &[i64]) -> Vec<i64> {
    values
        .iter()
        .scan(i64::MIN, |m, &x| {
            *m = (*m).max(x);
            Some(*m)
        })
        .collect()
}

/// Options shared by the drivers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub record_wall_times: bool,
}

struct Timer(Option<Vec<f64>>);

impl Timer {
    fn new(on: bool, cap: usize) -> Self {
        Self(on.then(|| Vec::with_capacity(cap)))
    }

    fn time<T>(&mut self, f: impl FnOnce() -> T) -> T {
        match &mut self.0 {
            None => f(),
            Some(times) => {
                let start = Instant::now();
                let out = f();
                times.push(start.elapsed().as_secs_f64());
                out
            }
        }
    }
}

fn check_iterations(iterations: usize) -> Result<()> {
    if iterations == 0 {
        return invalid("iterations must be at least 1");
    }
    Ok(())
}

/// RMS: every iteration builds a fresh tour and runs the local search.
pub fn run_rms(
    inst: &TspInstance,
    construction: ConstructionKind,
    local_search: &LocalSearch,
    iterations: usize,
    seed: RunSeed,
    options: RunOptions,
) -> Result<RunTrace> {
    check_iterations(iterations)?;
    construction.validate()?;
    let mut timer = Timer::new(options.record_wall_times, iterations);
    let eov = (0..iterations)
        .map(|i| {
            timer.time(|| {
                let mut rng = stream_rng(seed.master_seed, &[seed.run, i as u64]);
                let start = construct(inst, construction, local_search.candidates(), &mut rng);
                -local_search.improve(inst, &start).cost()
            })
        })
        .collect();
    let algorithm = Algorithm::rms(construction, local_search.kind());
    let mut trace = RunTrace::new(inst.name(), algorithm, seed, eov);
    trace.wall_times = timer.0;
    Ok(trace)
}

/// ILS: iteration 1 is an RMS iteration; every later iteration kicks the
/// incumbent and runs the local search. A result replaces the incumbent
/// only when strictly better.
pub fn run_ils(
    inst: &TspInstance,
    construction: ConstructionKind,
    local_search: &LocalSearch,
    kick: Kick,
    iterations: usize,
    seed: RunSeed,
    options: RunOptions,
) -> Result<RunTrace> {
    check_iterations(iterations)?;
    construction.validate()?;
    if kick == Kick::DoubleBridge && inst.len() < MIN_KICK_CITIES {
        return invalid(format!("double bridge needs at least {MIN_KICK_CITIES} cities"));
    }
    let mut timer = Timer::new(options.record_wall_times, iterations);
    let mut eov = Vec::with_capacity(iterations);
    let mut incumbent: Option<Tour> = None;
    for i in 0..iterations {
        let tour = timer.time(|| -> Result<Tour> {
            let mut rng = stream_rng(seed.master_seed, &[seed.run, i as u64]);
            let start = match (&incumbent, kick) {
                (None, _) => construct(inst, construction, local_search.candidates(), &mut rng),
                (Some(t), Kick::DoubleBridge) => double_bridge_kick(inst, t, &mut rng)?,
                (Some(t), Kick::Identity) => t.clone(),
            };
            Ok(local_search.improve(inst, &start))
        })?;
        eov.push(-tour.cost());
        if incumbent.as_ref().is_none_or(|inc| tour.cost() < inc.cost()) {
            incumbent = Some(tour);
        }
    }
    let algorithm = Algorithm::ils(construction, local_search.kind(), kick);
    let mut trace = RunTrace::new(inst.name(), algorithm, seed, eov);
    trace.wall_times = timer.0;
    Ok(trace)
}

/// Runs one algorithm with its default candidate lists.
pub fn run_algorithm(
    inst: &TspInstance,
    algorithm: &Algorithm,
    iterations: usize,
    seed: RunSeed,
    options: RunOptions,
) -> Result<RunTrace> {
    algorithm.validate()?;
    let ls = LocalSearch::new(inst, algorithm.local_search);
    run_with(inst, algorithm, &ls, iterations, seed, options)
}

fn run_with(
    inst: &TspInstance,
    algorithm: &Algorithm,
    ls: &LocalSearch,
    iterations: usize,
    seed: RunSeed,
    options: RunOptions,
) -> Result<RunTrace> {
    match algorithm.driver {
        Driver::Rms => run_rms(inst, algorithm.construction, ls, iterations, seed, options),
        Driver::Ils => run_ils(
            inst,
            algorithm.construction,
            ls,
            algorithm.kick,
            iterations,
            seed,
            options,
        ),
    }
}

/// Runs `runs` independent runs (run indices `0..runs`) in parallel; the
/// result is ordered by run index and does not depend on the thread count.
pub fn run_many(
    inst: &TspInstance,
    algorithm: &Algorithm,
    iterations: usize,
    master_seed: u64,
    runs: usize,
    options: RunOptions,
) -> Result<Vec<RunTrace>> {
    algorithm.validate()?;
    let ls = LocalSearch::new(inst, algorithm.local_search);
    (0..runs as u64)
        .into_par_iter()
        .map(|r| run_with(inst, algorithm, &ls, iterations, RunSeed::new(master_seed, r), options))
        .collect()
}

/// Relative gap `(x* - Z_n) / |x*|` for `n = 1..len`, with `x*` the optimum
/// in EOV sign (a negated tour cost).
pub fn relative_gap_series(trace: &RunTrace, optimum_value: f64) -> Result<Vec<(usize, f64)>> {
    if optimum_value == 0.0 || !optimum_value.is_finite() {
        return invalid("optimum must be finite and nonzero");
    }
    if let Some(best) = trace.final_best() {
        if best as f64 > optimum_value {
            return Err(Error::OptimumBelowObserved {
                optimum: optimum_value,
                observed: best as f64,
            });
        }
    }
    Ok(trace
        .best
        .iter()
        .enumerate()
        .map(|(i, &z)| (i + 1, (optimum_value - z as f64) / optimum_value.abs()))
        .collect())
}
