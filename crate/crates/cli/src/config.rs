//! Experiment configuration: a single JSON document, checked field by field.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use scalefree_core::analysis::Schedule;
use scalefree_core::evt::TailModel;
use scalefree_core::heuristics::{ConstructionKind, LkParams, LocalSearchKind};
use scalefree_core::multistart::{Algorithm, Kick};
use serde::de::DeserializeOwned;
use serde_json::{json, Map, Value};

/// Default candidate width of the randomized constructions.
pub const DEFAULT_CONSTRUCTION_K: usize = 3;
pub const DEFAULT_COORD_BOUND: i64 = 1_000_000;
pub const DEFAULT_REPS: usize = 100_000;
pub const DEFAULT_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    TspRms,
    TspIls,
    SyntheticEvt,
    AnalysisOnly,
}

impl Mode {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "tsp_rms" => Self::TspRms,
            "tsp_ils" => Self::TspIls,
            "synthetic_evt" => Self::SyntheticEvt,
            "analysis_only" => Self::AnalysisOnly,
            _ => return None,
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::TspRms => "tsp_rms",
            Self::TspIls => "tsp_ils",
            Self::SyntheticEvt => "synthetic_evt",
            Self::AnalysisOnly => "analysis_only",
        }
    }

    pub fn is_tsp(&self) -> bool {
        matches!(self, Self::TspRms | Self::TspIls)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomInstances {
    pub n: usize,
    pub coord_bound: i64,
    /// Instance `i` uses seed `seed + i`.
    pub seed: u64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Random(RandomInstances),
    Tsplib(PathBuf),
    Model(TailModel),
    Traces(PathBuf),
}

/// Where the reference optimum of a TSP instance comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimumSource {
    /// `known_optimum` of the config or the TSPLIB file.
    Known,
    /// Best tour found over all runs on the instance.
    BestFound,
    /// Held-Karp, for small instances.
    Exact,
}

impl OptimumSource {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "known" => Self::Known,
            "best_found" => Self::BestFound,
            "exact" => Self::Exact,
            _ => return None,
        })
    }

    fn as_str(&self) -> &'static str {
        match self {
            Self::Known => "known",
            Self::BestFound => "best_found",
            Self::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    /// Largest grid point; defaults to `iterations`.
    pub grid_max: Option<u64>,
    /// Inclusive fit window; defaults to the top two decades minus the
    /// largest half-decade.
    pub fit_window: Option<(u64, u64)>,
    pub eps_min: f64,
    pub eps_max: f64,
    pub eps_points: usize,
    /// Conditioning value `x` of synthetic series.
    pub x: Option<f64>,
    /// Monte-Carlo replications per synthetic grid point.
    pub reps: usize,
    /// Draws used for the synthetic good-solution ratio.
    pub samples: usize,
    pub ratio_c: u64,
    pub optimum: OptimumSource,
    /// Optimal tour cost, for `optimum = "known"`.
    pub known_optimum: Option<i64>,
    pub acceleration: Vec<Schedule>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            grid_max: None,
            fit_window: None,
            eps_min: 1e-4,
            eps_max: 1e-1,
            eps_points: 25,
            x: None,
            reps: DEFAULT_REPS,
            samples: DEFAULT_SAMPLES,
            ratio_c: 2,
            optimum: OptimumSource::BestFound,
            known_optimum: None,
            acceleration: Vec::new(),
        }
    }
}

impl AnalysisOptions {
    pub fn eps_grid(&self) -> Vec<f64> {
        let (lo, hi, k) = (self.eps_min.ln(), self.eps_max.ln(), self.eps_points);
        if k == 1 {
            return vec![self.eps_min];
        }
        (0..k)
            .map(|i| (lo + (hi - lo) * i as f64 / (k - 1) as f64).exp())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub source: Source,
    /// Algorithm name as written, e.g. `NN+3opt`.
    pub algorithm_name: Option<String>,
    pub algorithm: Option<Algorithm>,
    pub iterations: usize,
    pub runs: usize,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub analysis: AnalysisOptions,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// All problems found in a configuration.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    pub errors: Vec<FieldError>,
}

impl ConfigError {
    fn single(path: &str, message: impl Into<String>) -> Self {
        Self {
            errors: vec![FieldError {
                path: path.into(),
                message: message.into(),
            }],
        }
    }

    /// True when some error is reported at `path`.
    pub fn mentions(&self, path: &str) -> bool {
        self.errors.iter().any(|e| e.path == path)
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration:")?;
        for e in &self.errors {
            write!(f, "\n  {e}")?;
        }
        Ok(())
    }
}

/// Key-by-key reader over a JSON object that collects errors with paths.
struct Reader<'a> {
    obj: &'a Map<String, Value>,
    prefix: String,
    used: BTreeSet<&'static str>,
    errors: Vec<FieldError>,
}

impl<'a> Reader<'a> {
    fn new(obj: &'a Map<String, Value>, prefix: &str) -> Self {
        Self {
            obj,
            prefix: prefix.into(),
            used: BTreeSet::new(),
            errors: Vec::new(),
        }
    }

    fn path(&self, key: &str) -> String {
        if self.prefix.is_empty() {
            key.into()
        } else {
            format!("{}.{key}", self.prefix)
        }
    }

    fn error(&mut self, key: &str, message: impl Into<String>) {
        let path = self.path(key);
        self.errors.push(FieldError {
            path,
            message: message.into(),
        });
    }

    fn has(&self, key: &str) -> bool {
        self.obj.get(key).is_some_and(|v| !v.is_null())
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a Value> {
        self.used.insert(key);
        self.obj.get(key).filter(|v| !v.is_null())
    }

    fn opt<T: DeserializeOwned>(&mut self, key: &'static str) -> Option<T> {
        let v = self.raw(key)?;
        match serde_json::from_value(v.clone()) {
            Ok(t) => Some(t),
            Err(e) => {
                self.error(key, e.to_string());
                None
            }
        }
    }

    fn req<T: DeserializeOwned>(&mut self, key: &'static str) -> Option<T> {
        if !self.has(key) {
            self.used.insert(key);
            self.error(key, "missing required field");
            return None;
        }
        self.opt(key)
    }

    /// Reports keys that were never read, plus the collected errors.
    fn finish(mut self, sink: &mut Vec<FieldError>) {
        let unknown: Vec<String> = self
            .obj
            .keys()
            .filter(|k| !self.used.contains(k.as_str()))
            .cloned()
            .collect();
        for k in unknown {
            self.error(&k, "unknown field");
        }
        sink.append(&mut self.errors);
    }
}

/// Parses names such as `NN+3opt`, `RA + LK` or `GR+2-opt`.
pub fn parse_algorithm_name(
    name: &str,
    driver_ils: bool,
    kick: Kick,
    k: usize,
    lk: LkParams,
) -> Result<Algorithm, String> {
    let compact: String = name.chars().filter(|c| !c.is_whitespace()).collect();
    let (c, l) = compact
        .split_once('+')
        .ok_or_else(|| format!("unknown algorithm name {name:?}: expected CONSTRUCTION+SEARCH such as \"NN+3opt\""))?;
    let construction = match c.to_ascii_uppercase().as_str() {
        "RA" => ConstructionKind::Random,
        "NN" => ConstructionKind::NearestNeighbor { k },
        "GR" => ConstructionKind::Greedy { k },
        _ => {
            return Err(format!(
                "unknown algorithm name {name:?}: construction must be RA, NN or GR"
            ))
        }
    };
    let local_search = match l.to_ascii_lowercase().replace('-', "").as_str() {
        "2opt" => LocalSearchKind::TwoOpt,
        "3opt" => LocalSearchKind::ThreeOpt,
        "lk" => LocalSearchKind::LinKernighan(lk),
        _ => {
            return Err(format!(
                "unknown algorithm name {name:?}: local search must be 2opt, 3opt or LK"
            ))
        }
    };
    let alg = if driver_ils {
        Algorithm::ils(construction, local_search, kick)
    } else {
        Algorithm::rms(construction, local_search)
    };
    alg.validate().map_err(|e| e.to_string())?;
    Ok(alg)
}

fn parse_kick(s: &str) -> Option<Kick> {
    match s {
        "double_bridge" => Some(Kick::DoubleBridge),
        "identity" => Some(Kick::Identity),
        _ => None,
    }
}

fn kick_name(k: Kick) -> &'static str {
    match k {
        Kick::DoubleBridge => "double_bridge",
        Kick::Identity => "identity",
    }
}

fn read_random(obj: &Value, errors: &mut Vec<FieldError>) -> Option<RandomInstances> {
    let Some(map) = obj.as_object() else {
        errors.push(FieldError {
            path: "random_instance".into(),
            message: "expected an object".into(),
        });
        return None;
    };
    let mut r = Reader::new(map, "random_instance");
    let n: Option<usize> = r.req("n");
    let coord_bound: i64 = r.opt("coord_bound").unwrap_or(DEFAULT_COORD_BOUND);
    let seed: Option<u64> = r.req("seed");
    let count: usize = r.opt("count").unwrap_or(1);
    if n.is_some_and(|n| n < 3) {
        r.error("n", "must be at least 3");
    }
    if coord_bound < 1 {
        r.error("coord_bound", "must be at least 1");
    }
    if count < 1 {
        r.error("count", "must be at least 1");
    }
    let ok = r.errors.is_empty();
    r.finish(errors);
    match (n, seed) {
        (Some(n), Some(seed)) if ok => Some(RandomInstances {
            n,
            coord_bound,
            seed,
            count,
        }),
        _ => None,
    }
}

fn read_analysis(value: Option<&Value>, errors: &mut Vec<FieldError>) -> AnalysisOptions {
    let mut a = AnalysisOptions::default();
    let Some(value) = value else {
        return a;
    };
    let Some(map) = value.as_object() else {
        errors.push(FieldError {
            path: "analysis".into(),
            message: "expected an object".into(),
        });
        return a;
    };
    let mut r = Reader::new(map, "analysis");
    a.grid_max = r.opt("grid_max");
    a.fit_window = r.opt::<[u64; 2]>("fit_window").map(|w| (w[0], w[1]));
    if let Some(v) = r.opt("eps_min") {
        a.eps_min = v;
    }
    if let Some(v) = r.opt("eps_max") {
        a.eps_max = v;
    }
    if let Some(v) = r.opt("eps_points") {
        a.eps_points = v;
    }
    a.x = r.opt("x");
    if let Some(v) = r.opt("reps") {
        a.reps = v;
    }
    if let Some(v) = r.opt("samples") {
        a.samples = v;
    }
    if let Some(v) = r.opt("ratio_c") {
        a.ratio_c = v;
    }
    if let Some(s) = r.opt::<String>("optimum") {
        match OptimumSource::parse(&s) {
            Some(o) => a.optimum = o,
            None => r.error(
                "optimum",
                format!("unknown optimum source {s:?}: expected known, best_found or exact"),
            ),
        }
    }
    a.known_optimum = r.opt("known_optimum");
    if let Some(v) = r.opt("acceleration") {
        a.acceleration = v;
    }

    if a.grid_max == Some(0) {
        r.error("grid_max", "must be at least 1");
    }
    if let Some((lo, hi)) = a.fit_window {
        if lo < 1 || lo > hi {
            r.error("fit_window", "must be [n_min, n_max] with 1 <= n_min <= n_max");
        }
    }
    if !(a.eps_min > 0.0 && a.eps_min <= a.eps_max && a.eps_max < 1.0) {
        r.error("eps_min", "need 0 < eps_min <= eps_max < 1");
    }
    if a.eps_points < 1 {
        r.error("eps_points", "must be at least 1");
    }
    if a.reps < 1 {
        r.error("reps", "must be at least 1");
    }
    if a.samples < 1 {
        r.error("samples", "must be at least 1");
    }
    if a.ratio_c < 2 {
        r.error("ratio_c", "must be at least 2");
    }
    if a.known_optimum.is_some_and(|v| v <= 0) {
        r.error("known_optimum", "must be a positive tour cost");
    }
    for s in &a.acceleration {
        if let Schedule::Polynomial { beta } = s {
            if !(*beta > 1.0) {
                r.error("acceleration", format!("polynomial beta must exceed 1, got {beta}"));
            }
        }
    }
    r.finish(errors);
    a
}

/// Parses and checks a configuration. Keys of a run manifest are accepted
/// too, so a manifest can be fed back as a configuration.
pub fn validate_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| ConfigError::single("$", format!("not valid JSON: {e}")))?;
    let Some(obj) = value.as_object() else {
        return Err(ConfigError::single("$", "expected a JSON object"));
    };
    let mut errors = Vec::new();
    let mut r = Reader::new(obj, "");
    r.raw("manifest");

    let mode = r.req::<String>("mode").and_then(|s| {
        let m = Mode::parse(&s);
        if m.is_none() {
            r.error(
                "mode",
                format!("unknown mode {s:?}: expected tsp_rms, tsp_ils, synthetic_evt or analysis_only"),
            );
        }
        m
    });

    let sources: Vec<&'static str> = ["random_instance", "tsplib_path", "model", "traces_dir"]
        .into_iter()
        .filter(|k| r.has(k))
        .collect();
    if sources.len() > 1 {
        r.error(
            "instance",
            format!(
                "ambiguous instance source: {} are all present; give exactly one",
                sources.join(", ")
            ),
        );
    }
    let source = match sources.as_slice() {
        [one] => {
            let raw = r.raw(one).expect("present");
            match *one {
                "random_instance" => read_random(raw, &mut errors).map(Source::Random),
                "tsplib_path" => r.opt::<PathBuf>("tsplib_path").map(Source::Tsplib),
                "model" => r.opt::<TailModel>("model").map(Source::Model),
                _ => r.opt::<PathBuf>("traces_dir").map(Source::Traces),
            }
        }
        [] => {
            r.error(
                "instance",
                "missing instance source: give random_instance, tsplib_path, model or traces_dir",
            );
            None
        }
        _ => {
            for k in &sources {
                r.raw(k);
            }
            None
        }
    };
    if let (Some(m), Some(s)) = (mode, &source) {
        let fits = match s {
            Source::Random(_) | Source::Tsplib(_) => m.is_tsp(),
            Source::Model(_) => m == Mode::SyntheticEvt,
            Source::Traces(_) => m == Mode::AnalysisOnly,
        };
        if !fits {
            r.error(
                "instance",
                format!("this instance source cannot be used with mode {}", m.as_str()),
            );
        }
    }

    let k: usize = r.opt("construction_k").unwrap_or(DEFAULT_CONSTRUCTION_K);
    if k < 1 {
        r.error("construction_k", "must be at least 1");
    }
    let lk: LkParams = r.opt("lk").unwrap_or_default();
    let kick = match r.opt::<String>("kick") {
        None => Kick::DoubleBridge,
        Some(s) => parse_kick(&s).unwrap_or_else(|| {
            r.error(
                "kick",
                format!("unknown kick {s:?}: expected double_bridge or identity"),
            );
            Kick::DoubleBridge
        }),
    };
    let algorithm_name: Option<String> = if mode.is_some_and(|m| m.is_tsp()) {
        r.req("algorithm")
    } else {
        r.opt("algorithm")
    };
    let algorithm = match (&algorithm_name, mode) {
        (Some(name), Some(m)) if m.is_tsp() => {
            match parse_algorithm_name(name, m == Mode::TspIls, kick, k.max(1), lk) {
                Ok(a) => Some(a),
                Err(e) => {
                    r.error("algorithm", e);
                    None
                }
            }
        }
        _ => None,
    };

    let iterations: Option<usize> = r.req("iterations");
    if iterations == Some(0) {
        r.error("iterations", "must be at least 1");
    }
    let runs: Option<usize> = if mode.is_some_and(|m| m.is_tsp()) {
        r.req("runs")
    } else {
        r.opt("runs").or(Some(1))
    };
    if runs == Some(0) {
        r.error("runs", "must be at least 1");
    }
    let master_seed: Option<u64> = r.req("master_seed");
    let output_dir: Option<PathBuf> = r.req("output_dir");
    let analysis = read_analysis(r.raw("analysis"), &mut errors);

    let mut own = Vec::new();
    r.finish(&mut own);
    own.append(&mut errors);
    if !own.is_empty() {
        return Err(ConfigError { errors: own });
    }
    Ok(ExperimentConfig {
        mode: mode.expect("checked"),
        source: source.expect("checked"),
        algorithm_name,
        algorithm,
        iterations: iterations.expect("checked"),
        runs: runs.expect("checked"),
        master_seed: master_seed.expect("checked"),
        output_dir: output_dir.expect("checked"),
        analysis,
    })
}

impl ExperimentConfig {
    /// JSON form accepted by [`validate_config`].
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "mode": self.mode.as_str(),
            "iterations": self.iterations,
            "runs": self.runs,
            "master_seed": self.master_seed,
            "output_dir": self.output_dir,
        });
        match &self.source {
            Source::Random(r) => {
                v["random_instance"] =
                    json!({"n": r.n, "coord_bound": r.coord_bound, "seed": r.seed, "count": r.count});
            }
            Source::Tsplib(p) => v["tsplib_path"] = json!(p),
            Source::Model(m) => v["model"] = json!(m),
            Source::Traces(p) => v["traces_dir"] = json!(p),
        }
        if let Some(name) = &self.algorithm_name {
            v["algorithm"] = json!(name);
        }
        if let Some(alg) = &self.algorithm {
            let k = match alg.construction {
                ConstructionKind::NearestNeighbor { k } | ConstructionKind::Greedy { k } => k,
                ConstructionKind::Random => DEFAULT_CONSTRUCTION_K,
            };
            v["construction_k"] = json!(k);
            if let LocalSearchKind::LinKernighan(p) = alg.local_search {
                v["lk"] = json!(p);
            }
            if self.mode == Mode::TspIls {
                v["kick"] = json!(kick_name(alg.kick));
            }
        }
        let a = &self.analysis;
        let mut an = json!({
            "eps_min": a.eps_min,
            "eps_max": a.eps_max,
            "eps_points": a.eps_points,
            "reps": a.reps,
            "samples": a.samples,
            "ratio_c": a.ratio_c,
            "optimum": a.optimum.as_str(),
            "acceleration": a.acceleration,
        });
        if let Some(g) = a.grid_max {
            an["grid_max"] = json!(g);
        }
        if let Some((lo, hi)) = a.fit_window {
            an["fit_window"] = json!([lo, hi]);
        }
        if let Some(x) = a.x {
            an["x"] = json!(x);
        }
        if let Some(o) = a.known_optimum {
            an["known_optimum"] = json!(o);
        }
        v["analysis"] = an;
        v
    }
}
