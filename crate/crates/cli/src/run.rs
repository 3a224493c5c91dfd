//! Experiment execution: runs the configured solver or model and writes the
//! output bundle.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use scalefree_core::analysis::{
    acceleration_transform, default_fit_window, eir_series, erg_from_trace_groups, erg_series, fit_power_law,
    fit_report_json, geometric_grid, good_solution_ratio, half_life_empirical, prop4_prediction,
    scale_free_ratio_check, write_half_life_csv, write_pairs_csv, GapSeries, Schedule,
};
use scalefree_core::evt::TailModel;
use scalefree_core::multistart::{run_many, Algorithm, RunOptions, RunSeed, RunTrace};
use scalefree_core::rng::{stream_key, stream_rng};
use scalefree_core::tsp::{generate_random_instance, held_karp_optimum, parse_tsplib, TspInstance};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::config::{AnalysisOptions, ExperimentConfig, OptimumSource, Source};

/// Stream index of the good-solution samples in synthetic mode.
const SAMPLE_STREAM: u64 = 1;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] scalefree_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("{0}")]
    Missing(String),
}

pub type RunResult<T> = std::result::Result<T, RunError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Files written by one experiment, relative to its output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bundle {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
}

impl Bundle {
    fn create(dir: &Path) -> RunResult<Self> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(
        &mut self,
        rel: impl AsRef<Path>,
        f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    ) -> RunResult<()> {
        let rel = rel.as_ref();
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        let file = File::create(&path).map_err(io_err(&path))?;
        let mut w = BufWriter::new(file);
        f(&mut w).and_then(|_| w.flush()).map_err(io_err(&path))?;
        self.files.push(rel.to_path_buf());
        Ok(())
    }

    fn json(&mut self, rel: impl AsRef<Path>, value: &Value) -> RunResult<()> {
        self.write(rel, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)
        })
    }

    fn series(&mut self, rel: &str, s: &GapSeries) -> RunResult<()> {
        self.write(rel, |w| s.write_csv(w))
    }
}

/// Runs the experiment and writes its bundle, ending with `manifest.json`.
pub fn run_experiment(config: &ExperimentConfig) -> RunResult<Bundle> {
    let mut out = Bundle::create(&config.output_dir)?;
    match &config.source {
        Source::Random(_) | Source::Tsplib(_) => run_tsp(config, &mut out)?,
        Source::Model(m) => run_synthetic(config, m, &mut out)?,
        Source::Traces(dir) => run_analysis_only(config, dir, &mut out)?,
    }
    write_manifest(config, &mut out)?;
    Ok(out)
}

fn write_manifest(config: &ExperimentConfig, out: &mut Bundle) -> RunResult<()> {
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let mut m = config.to_json();
    m["manifest"] = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "created_unix": created,
        "files": out.files,
    });
    out.json("manifest.json", &m)
}

fn load_instances(source: &Source) -> RunResult<Vec<TspInstance>> {
    match source {
        Source::Random(r) => (0..r.count as u64)
            .map(|i| Ok(generate_random_instance(r.n, r.coord_bound, r.seed + i)?))
            .collect(),
        Source::Tsplib(path) => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            Ok(vec![parse_tsplib(&text)?])
        }
        _ => unreachable!("not a TSP source"),
    }
}

/// Optimum in EOV sign (negated tour cost).
fn tsp_optimum(a: &AnalysisOptions, inst: &TspInstance, single: bool, traces: &[RunTrace]) -> RunResult<f64> {
    match a.optimum {
        OptimumSource::Known => {
            let cost = inst
                .known_optimum()
                .or(a.known_optimum.filter(|_| single))
                .map(|c| -(c as f64));
            cost.ok_or_else(|| {
                RunError::Missing(format!(
                    "instance {}: analysis.optimum is \"known\" but no known_optimum is available",
                    inst.name()
                ))
            })
        }
        OptimumSource::BestFound => Ok(best_found(traces)),
        OptimumSource::Exact => Ok(-(held_karp_optimum(inst)? as f64)),
    }
}

fn best_found(traces: &[RunTrace]) -> f64 {
    traces.iter().filter_map(RunTrace::final_best).max().expect("runs >= 1") as f64
}

fn run_tsp(config: &ExperimentConfig, out: &mut Bundle) -> RunResult<()> {
    let alg: Algorithm = config.algorithm.expect("TSP modes carry an algorithm");
    let instances = load_instances(&config.source)?;
    let single = instances.len() == 1;
    let mut groups = Vec::with_capacity(instances.len());
    let mut summary = Vec::new();
    for (i, inst) in instances.iter().enumerate() {
        let seed = stream_key(config.master_seed, &[i as u64]);
        let traces = run_many(inst, &alg, config.iterations, seed, config.runs, RunOptions::default())?;
        let optimum = tsp_optimum(&config.analysis, inst, single, &traces)?;
        for t in &traces {
            let stem = format!("traces/{}/run_{:04}", inst.name(), t.seed.run);
            out.write(format!("{stem}.csv"), |w| t.write_csv(w))?;
            out.json(format!("{stem}.json"), &t.sidecar_json(Some(optimum)))?;
        }
        summary.push(json!({
            "instance": inst.name(),
            "cities": inst.len(),
            "master_seed": seed,
            "optimum": optimum,
            "best_found": best_found(&traces),
        }));
        groups.push((traces, optimum));
    }
    out.json("instances.json", &Value::Array(summary))?;
    analyze_traces(config, &groups, out)
}

/// Gap series, fit, half-life and good-solution ratio of grouped traces.
fn analyze_traces(config: &ExperimentConfig, groups: &[(Vec<RunTrace>, f64)], out: &mut Bundle) -> RunResult<()> {
    let a = &config.analysis;
    let shortest = groups.iter().flat_map(|(t, _)| t).map(RunTrace::len).min().unwrap_or(0);
    let grid_max = a.grid_max.unwrap_or(config.iterations as u64);
    if grid_max as usize > shortest {
        return Err(RunError::Missing(format!(
            "analysis.grid_max = {grid_max} exceeds the shortest trace ({shortest} iterations)"
        )));
    }
    let grid = geometric_grid(grid_max);
    let refs: Vec<(&[RunTrace], f64)> = groups.iter().map(|(t, o)| (t.as_slice(), *o)).collect();
    let series = erg_from_trace_groups(&refs, &grid)?;
    out.series("gap.csv", &series)?;
    write_fit(&series, a.fit_window, out)?;
    write_half_life(&series, out)?;

    // Normalizing every EOV to a unit optimum pools instances with different optima.
    let samples: Vec<f64> = groups
        .iter()
        .flat_map(|(ts, opt)| {
            ts.iter()
                .flat_map(move |t| t.eov.iter().map(move |&x| -1.0 - (opt - x as f64) / opt.abs()))
        })
        .collect();
    let ratios = good_solution_ratio(&samples, -1.0, &a.eps_grid())?;
    out.write("good_solution_ratio.csv", |w| write_pairs_csv("eps,r", &ratios, w))
}

fn write_fit(series: &GapSeries, window: Option<(u64, u64)>, out: &mut Bundle) -> RunResult<()> {
    let window = window.unwrap_or_else(|| default_fit_window(series));
    let report = match fit_power_law(series, Some(window)) {
        Ok(fit) => {
            let mut r = fit_report_json(series, &fit);
            r["points"] = json!(fit.points);
            r
        }
        Err(e) => json!({
            "meaning": series.meaning,
            "x": series.x_ref,
            "x_star": series.x_star,
            "window": [window.0, window.1],
            "error": e.to_string(),
        }),
    };
    out.json("fit.json", &report)
}

/// Half-life table over the leading positive, non-increasing part of the series.
fn write_half_life(series: &GapSeries, out: &mut Bundle) -> RunResult<()> {
    let mut pts = Vec::new();
    for p in &series.points {
        if !(p.value > 0.0)
            || pts
                .last()
                .is_some_and(|q: &scalefree_core::analysis::SeriesPoint| p.value > q.value)
        {
            break;
        }
        pts.push(*p);
    }
    if pts.is_empty() {
        return Ok(());
    }
    let prefix = GapSeries::new(pts, series.meaning, series.x_ref, series.x_star)?;
    let rows = half_life_empirical(&prefix)?;
    out.write("half_life.csv", |w| write_half_life_csv(&rows, w))
}

fn schedule_file(s: &Schedule) -> String {
    match s {
        Schedule::Polynomial { beta } => format!("acceleration_polynomial_{beta:?}.csv"),
        Schedule::Exponential => "acceleration_exponential.csv".into(),
    }
}

fn run_synthetic(config: &ExperimentConfig, model: &TailModel, out: &mut Bundle) -> RunResult<()> {
    let a = &config.analysis;
    let x = a.x.unwrap_or_else(|| model.quantile(0.25));
    let grid = geometric_grid(a.grid_max.unwrap_or(config.iterations as u64));
    let seed = config.master_seed;
    let eir = eir_series(model, x, &grid, a.reps, seed)?;
    out.series("eir.csv", &eir)?;
    let x_star = model.endpoint();
    let main = if x_star.is_finite() {
        let erg = erg_series(model, x, &grid, a.reps, seed)?;
        out.series("erg.csv", &erg)?;
        erg
    } else {
        eir
    };
    write_fit(&main, a.fit_window, out)?;
    write_half_life(&main, out)?;
    match scale_free_ratio_check(&main, a.ratio_c) {
        Ok(rows) => out.write("scale_free_ratio.csv", |w| write_pairs_csv("n,ratio", &rows, w))?,
        Err(scalefree_core::Error::Series(_)) => {}
        Err(e) => return Err(e.into()),
    }
    for s in &a.acceleration {
        let t = acceleration_transform(&main, *s, None)?;
        out.series(&schedule_file(s), &t)?;
    }
    if x_star.is_finite() {
        let mut rng = stream_rng(seed, &[SAMPLE_STREAM]);
        let samples: Vec<f64> = (0..a.samples).map(|_| model.sample(&mut rng)).collect();
        let ratios = good_solution_ratio(&samples, x_star, &a.eps_grid())?;
        out.write("good_solution_ratio.csv", |w| write_pairs_csv("eps,r", &ratios, w))?;
    }
    if let TailModel::LogPower { alpha, endpoint } = *model {
        let rows = main
            .points
            .iter()
            .filter(|p| p.n >= 3)
            .map(|p| Ok((p.n, p.value, prop4_prediction(alpha, endpoint, p.n as f64)?)))
            .collect::<RunResult<Vec<_>>>()?;
        out.write("prop4.csv", |w| {
            writeln!(w, "n,erg,prediction")?;
            for (n, v, p) in &rows {
                writeln!(w, "{n},{v:?},{p:?}")?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

/// Trace CSV files below `dir`, in path order.
fn find_trace_files(dir: &Path, found: &mut Vec<PathBuf>) -> RunResult<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .map(|e| e.map(|e| e.path()))
        .collect::<io::Result<_>>()
        .map_err(io_err(dir))?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            find_trace_files(&p, found)?;
        } else if p.extension().is_some_and(|e| e == "csv") && p.with_extension("json").is_file() {
            found.push(p);
        }
    }
    Ok(())
}

fn sidecar_field<T: DeserializeOwned>(side: &Value, path: &Path, key: &str) -> RunResult<T> {
    serde_json::from_value(side.get(key).cloned().unwrap_or(Value::Null)).map_err(|e| RunError::Input {
        path: path.to_path_buf(),
        message: format!("sidecar field {key}: {e}"),
    })
}

fn read_trace(csv: &Path) -> RunResult<(RunTrace, Option<f64>)> {
    let bad = |message: String| RunError::Input {
        path: csv.to_path_buf(),
        message,
    };
    let side_path = csv.with_extension("json");
    let side_text = fs::read_to_string(&side_path).map_err(io_err(&side_path))?;
    let side: Value = serde_json::from_str(&side_text).map_err(|e| RunError::Input {
        path: side_path.clone(),
        message: e.to_string(),
    })?;
    let instance: String = sidecar_field(&side, &side_path, "instance")?;
    let algorithm: Algorithm = sidecar_field(&side, &side_path, "algorithm_spec")?;
    let seed: RunSeed = sidecar_field(&side, &side_path, "seed")?;
    let optimum: Option<f64> = sidecar_field(&side, &side_path, "optimum")?;

    let file = File::open(csv).map_err(io_err(csv))?;
    let mut lines = BufReader::new(file).lines();
    match lines.next().transpose().map_err(io_err(csv))? {
        Some(h) if h.trim() == "iter,eov,best" => {}
        other => return Err(bad(format!("expected header iter,eov,best, got {other:?}"))),
    }
    let mut eov = Vec::new();
    let mut best = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(io_err(csv))?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.trim().split(',').collect();
        let parsed: Option<(usize, i64, i64)> = match cols.as_slice() {
            [a, b, c] => a
                .parse()
                .ok()
                .zip(b.parse().ok())
                .zip(c.parse().ok())
                .map(|((a, b), c)| (a, b, c)),
            _ => None,
        };
        match parsed {
            Some((it, x, z)) if it == i + 1 => {
                eov.push(x);
                best.push(z);
            }
            _ => return Err(bad(format!("malformed row {}: {line:?}", i + 2))),
        }
    }
    if eov.is_empty() {
        return Err(bad("trace has no iterations".into()));
    }
    let trace = RunTrace::new(instance, algorithm, seed, eov);
    if trace.best != best {
        return Err(bad("best column is not the running maximum of eov".into()));
    }
    Ok((trace, optimum))
}

fn run_analysis_only(config: &ExperimentConfig, dir: &Path, out: &mut Bundle) -> RunResult<()> {
    let mut files = Vec::new();
    find_trace_files(dir, &mut files)?;
    if files.is_empty() {
        return Err(RunError::Input {
            path: dir.to_path_buf(),
            message: "no trace CSV with a JSON sidecar found".into(),
        });
    }
    let mut by_instance: BTreeMap<String, (Vec<RunTrace>, Option<f64>)> = BTreeMap::new();
    for f in &files {
        let (t, opt) = read_trace(f)?;
        let entry = by_instance.entry(t.instance_name.clone()).or_default();
        entry.1 = entry.1.or(opt);
        entry.0.push(t);
    }
    let single = by_instance.len() == 1;
    let a = &config.analysis;
    let groups = by_instance
        .into_iter()
        .map(|(name, (traces, recorded))| {
            let optimum = match a.optimum {
                OptimumSource::Known => recorded.or(a.known_optimum.filter(|_| single).map(|c| -(c as f64))),
                OptimumSource::BestFound => Some(best_found(&traces)),
                OptimumSource::Exact => {
                    return Err(RunError::Missing(format!(
                        "instance {name}: exact optima need the instance, which traces do not carry"
                    )))
                }
            }
            .ok_or_else(|| {
                RunError::Missing(format!(
                    "instance {name}: no known_optimum in the sidecars or the config"
                ))
            })?;
            Ok((traces, optimum))
        })
        .collect::<RunResult<Vec<_>>>()?;
    analyze_traces(config, &groups, out)
}
