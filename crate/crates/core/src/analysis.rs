//! Expected improvement rate (EIR) and expected relative gap (ERG) series,
//! power-law fits and the diagnostics built on them.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::evt::{zn_from_uniform, TailModel, EULER_GAMMA, MC_CHUNK};
use crate::multistart::{relative_gap_series, RunTrace};
use crate::rng::stream_rng;
use crate::stats::{ols, LinearFit, Moments};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Meaning {
    Eir,
    Erg,
    RelativeGap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub n: u64,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSeries {
    pub points: Vec<SeriesPoint>,
    pub meaning: Meaning,
    /// Conditioning value `x`, when the series has one.
    pub x_ref: Option<f64>,
    /// Endpoint or optimum `x*`, when finite.
    pub x_star: Option<f64>,
}

impl GapSeries {
    /// Builds a series, checking that `n` is strictly increasing.
    pub fn new(points: Vec<SeriesPoint>, meaning: Meaning, x_ref: Option<f64>, x_star: Option<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Series("a series needs at least one point".into()));
        }
        if points.windows(2).any(|w| w[0].n >= w[1].n) {
            return Err(Error::Series("n must be strictly increasing".into()));
        }
        Ok(Self {
            points,
            meaning,
            x_ref,
            x_star,
        })
    }

    /// Noiseless series from `(n, value)` pairs.
    pub fn exact(meaning: Meaning, values: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        let points = values
            .into_iter()
            .map(|(n, value)| SeriesPoint { n, value, stderr: 0.0 })
            .collect();
        Self::new(points, meaning, None, None)
    }

    pub fn ns(&self) -> Vec<u64> {
        self.points.iter().map(|p| p.n).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn n_min(&self) -> u64 {
        self.points[0].n
    }

    pub fn n_max(&self) -> u64 {
        self.points[self.points.len() - 1].n
    }

    /// Value at grid point `n`, if present.
    pub fn at(&self, n: u64) -> Option<f64> {
        self.points
            .binary_search_by_key(&n, |p| p.n)
            .ok()
            .map(|i| self.points[i].value)
    }

    /// Value at real `n` by linear interpolation in `(log n, log value)`.
    pub fn interpolate(&self, n: f64) -> Result<f64> {
        let (lo, hi) = (self.n_min() as f64, self.n_max() as f64);
        if !(n >= lo && n <= hi) {
            return Err(Error::Series(format!(
                "n = {n} is outside the series range [{lo}, {hi}]"
            )));
        }
        let j = self.points.partition_point(|p| (p.n as f64) < n);
        let pj = self.points[j];
        if pj.n as f64 == n || j == 0 {
            return Ok(pj.value);
        }
        let pi = self.points[j - 1];
        if pi.value <= 0.0 || pj.value <= 0.0 {
            return Err(Error::Series("log interpolation needs positive values".into()));
        }
        let w = (n.ln() - (pi.n as f64).ln()) / ((pj.n as f64).ln() - (pi.n as f64).ln());
        Ok((pi.value.ln() + w * (pj.value.ln() - pi.value.ln())).exp())
    }

    /// CSV with header `n,value,stderr`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,value,stderr")?;
        for p in &self.points {
            writeln!(w, "{},{:?},{:?}", p.n, p.value, p.stderr)?;
        }
        Ok(())
    }
}

/// Geometric grid `n = ceil(2^(k/2))`, `k = 0, 1, ...`, deduplicated, up to `n_max`.
pub fn geometric_grid(n_max: u64) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    for k in 0..128u32 {
        let p = 1u128 << k;
        let mut c = (p as f64).sqrt().ceil() as u128;
        while c * c < p {
            c += 1;
        }
        while c > 1 && (c - 1) * (c - 1) >= p {
            c -= 1;
        }
        if c > n_max as u128 {
            break;
        }
        let c = c as u64;
        if out.last() != Some(&c) {
            out.push(c);
        }
    }
    out
}

fn check_grid(grid: &[u64]) -> Result<()> {
    if grid.is_empty() || grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("grid must be non-empty, strictly increasing and start at n >= 1");
    }
    Ok(())
}

/// Monte-Carlo means of `g(Z_n)` on a grid with common random numbers:
/// replication `r` uses one uniform `W_r` and `Z_n = F^{-1}(W_r^{1/n})`.
fn crn_series(model: &TailModel, grid: &[u64], reps: usize, seed: u64, g: impl Fn(f64) -> f64 + Sync) -> Vec<Moments> {
    let chunks = reps.div_ceil(MC_CHUNK);
    let parts: Vec<Vec<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, &[c as u64]);
            let len = MC_CHUNK.min(reps - c * MC_CHUNK);
            let mut acc = vec![Moments::default(); grid.len()];
            for _ in 0..len {
                let w: f64 = rand::Rng::sample(&mut rng, rand::distr::Open01);
                for (m, &n) in acc.iter_mut().zip(grid) {
                    m.push(g(zn_from_uniform(model, n, w)));
                }
            }
            acc
        })
        .collect();
    parts
        .into_iter()
        .fold(vec![Moments::default(); grid.len()], |acc, part| {
            acc.into_iter().zip(part).map(|(a, b)| a.merge(b)).collect()
        })
}

fn from_moments(grid: &[u64], moments: Vec<Moments>) -> Vec<SeriesPoint> {
    grid.iter()
        .zip(moments)
        .map(|(&n, m)| {
            let e = m.estimate();
            SeriesPoint {
                n,
                value: e.mean,
                stderr: e.stderr,
            }
        })
        .collect()
}

/// `E[(Z_n - x)_+] / |x|` on the grid.
pub fn eir_series(model: &TailModel, x: f64, grid: &[u64], reps: usize, seed: u64) -> Result<GapSeries> {
    check_grid(grid)?;
    if x == 0.0 {
        return invalid("x must be nonzero");
    }
    if !(x < model.endpoint()) {
        return invalid(format!("x = {x} must lie below the endpoint {}", model.endpoint()));
    }
    if reps == 0 {
        return invalid("reps must be at least 1");
    }
    let scale = x.abs();
    let m = crn_series(model, grid, reps, seed, |z| (z - x).max(0.0) / scale);
    let x_star = model.endpoint();
    GapSeries::new(
        from_moments(grid, m),
        Meaning::Eir,
        Some(x),
        x_star.is_finite().then_some(x_star),
    )
}

/// `E[(x* - max(Z_n, x)) / |x*|]` on the grid.
pub fn erg_series(model: &TailModel, x: f64, grid: &[u64], reps: usize, seed: u64) -> Result<GapSeries> {
    check_grid(grid)?;
    let x_star = model.endpoint();
    if !x_star.is_finite() {
        return invalid("the relative gap needs a finite endpoint");
    }
    if !(x < x_star) {
        return invalid(format!("x = {x} must lie below the endpoint {x_star}"));
    }
    if reps == 0 {
        return invalid("reps must be at least 1");
    }
    let scale = x_star.abs();
    let m = crn_series(model, grid, reps, seed, |z| (x_star - z.max(x)) / scale);
    GapSeries::new(from_moments(grid, m), Meaning::Erg, Some(x), Some(x_star))
}

/// Mean relative gap over traces grouped by instance, each group with its
/// own optimum (EOV sign). Every trace has weight one.
pub fn erg_from_trace_groups(groups: &[(&[RunTrace], f64)], grid: &[u64]) -> Result<GapSeries> {
    check_grid(grid)?;
    let traces = groups.iter().map(|(t, _)| t.len()).sum::<usize>();
    if traces == 0 {
        return invalid("at least one trace is required");
    }
    let shortest = groups
        .iter()
        .flat_map(|(t, _)| t.iter())
        .map(RunTrace::len)
        .min()
        .unwrap_or(0);
    let last = *grid.last().expect("non-empty grid");
    if last as usize > shortest {
        return invalid(format!(
            "grid reaches n = {last} but the shortest trace has {shortest} iterations"
        ));
    }
    let mut acc = vec![Moments::default(); grid.len()];
    for (ts, optimum) in groups {
        for t in ts.iter() {
            let gaps = relative_gap_series(t, *optimum)?;
            for (m, &n) in acc.iter_mut().zip(grid) {
                m.push(gaps[n as usize - 1].1);
            }
        }
    }
    let x_star = (groups.len() == 1).then(|| groups[0].1);
    GapSeries::new(from_moments(grid, acc), Meaning::RelativeGap, None, x_star)
}

/// Mean relative gap of traces of one instance at the grid points.
pub fn erg_from_traces(traces: &[RunTrace], optimum: f64, grid: &[u64]) -> Result<GapSeries> {
    erg_from_trace_groups(&[(traces, optimum)], grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub xi_hat: f64,
    pub log_intercept: f64,
    pub window: (u64, u64),
    pub r_squared: f64,
    pub points: usize,
}

/// Default fit window: the top two decades of `n`, minus the largest
/// half-decade.
pub fn default_fit_window(series: &GapSeries) -> (u64, u64) {
    let top = series.n_max() as f64;
    let lo = (top / 10f64.powf(2.5)).ceil().max(series.n_min() as f64) as u64;
    let hi = (top / 10f64.sqrt()).floor() as u64;
    (lo, hi)
}

/// OLS of `log value` on `log n` inside `window` (inclusive).
pub fn fit_power_law(series: &GapSeries, window: Option<(u64, u64)>) -> Result<PowerLawFit> {
    let window = window.unwrap_or_else(|| default_fit_window(series));
    if window.0 > window.1 {
        return invalid(format!("empty fit window {window:?}"));
    }
    let inside: Vec<&SeriesPoint> = series
        .points
        .iter()
        .filter(|p| p.n >= window.0 && p.n <= window.1)
        .collect();
    if inside.len() < 3 {
        return Err(Error::Series(format!(
            "fit window {window:?} holds {} points, need 3",
            inside.len()
        )));
    }
    if let Some(p) = inside.iter().find(|p| !(p.value > 0.0)) {
        return Err(Error::Series(format!(
            "nonpositive value {} at n = {} in the fit window",
            p.value, p.n
        )));
    }
    let x: Vec<f64> = inside.iter().map(|p| (p.n as f64).ln()).collect();
    let y: Vec<f64> = inside.iter().map(|p| p.value.ln()).collect();
    let LinearFit {
        slope,
        intercept,
        r_squared,
    } = ols(&x, &y)?;
    Ok(PowerLawFit {
        xi_hat: slope,
        log_intercept: intercept,
        window,
        r_squared,
        points: inside.len(),
    })
}

/// Fit report `{meaning, x, x_star, window, xi_hat, log_intercept, r_squared}`.
pub fn fit_report_json(series: &GapSeries, fit: &PowerLawFit) -> serde_json::Value {
    serde_json::json!({
        "meaning": series.meaning,
        "x": series.x_ref,
        "x_star": series.x_star,
        "window": [fit.window.0, fit.window.1],
        "xi_hat": fit.xi_hat,
        "log_intercept": fit.log_intercept,
        "r_squared": fit.r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfLife {
    pub n: u64,
    /// Extra iterations to halve the value; `None` when the series ends first.
    pub h: Option<f64>,
}

/// For every grid point `n`, the smallest `m` with `value(n + m) <= value(n) / 2`,
/// interpolating linearly in `(log n, log value)`.
pub fn half_life_empirical(series: &GapSeries) -> Result<Vec<HalfLife>> {
    let pts = &series.points;
    if let Some(p) = pts.iter().find(|p| !(p.value > 0.0)) {
        return Err(Error::Series(format!(
            "half-life needs positive values, got {} at n = {}",
            p.value, p.n
        )));
    }
    if pts.windows(2).any(|w| w[1].value > w[0].value) {
        return Err(Error::Series("half-life needs a non-increasing series".into()));
    }
    Ok(pts
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let target = p.value / 2.0;
            let h = (i + 1..pts.len()).find(|&j| pts[j].value <= target).map(|j| {
                let (a, b) = (pts[j - 1], pts[j]);
                let (la, lb) = ((a.n as f64).ln(), (b.n as f64).ln());
                let (va, vb) = (a.value.ln(), b.value.ln());
                let at = if va == vb {
                    lb
                } else {
                    la + (target.ln() - va) * (lb - la) / (vb - va)
                };
                at.exp() - p.n as f64
            });
            HalfLife { n: p.n, h }
        })
        .collect())
}

/// Half-life CSV `n,h,h_over_n` (empty cells when open-ended).
pub fn write_half_life_csv<W: Write>(rows: &[HalfLife], mut w: W) -> std::io::Result<()> {
    writeln!(w, "n,h,h_over_n")?;
    for r in rows {
        match r.h {
            Some(h) => writeln!(w, "{},{:?},{:?}", r.n, h, h / r.n as f64)?,
            None => writeln!(w, "{},,", r.n)?,
        }
    }
    Ok(())
}

/// Geometric `eps` grid from `1e-4` to `1e-1` with 25 points.
pub fn default_eps_grid() -> Vec<f64> {
    let (lo, hi, k) = (1e-4f64, 1e-1f64, 25);
    (0..k)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (k - 1) as f64).exp())
        .collect()
}

/// `r(eps)`: fraction of samples with `(x* - X) / |x*| < eps`.
pub fn good_solution_ratio(samples: &[f64], x_star: f64, eps_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return invalid("samples must not be empty");
    }
    if x_star == 0.0 || !x_star.is_finite() {
        return invalid("x_star must be finite and nonzero");
    }
    if let Some(e) = eps_grid.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
        return invalid(format!("eps must lie in (0, 1), got {e}"));
    }
    let mut gaps: Vec<f64> = samples.iter().map(|&x| (x_star - x) / x_star.abs()).collect();
    gaps.sort_unstable_by(f64::total_cmp);
    let n = gaps.len() as f64;
    Ok(eps_grid
        .iter()
        .map(|&e| (e, gaps.partition_point(|&g| g < e) as f64 / n))
        .collect())
}

/// Slope of `log r` on `log eps`, using only grid points backed by at
/// least `min_hits` of the `n_samples` samples.
pub fn good_solution_slope(ratios: &[(f64, f64)], n_samples: usize, min_hits: usize) -> Result<LinearFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = ratios
        .iter()
        .filter(|(_, r)| r * n_samples as f64 >= min_hits as f64 && *r > 0.0)
        .map(|&(e, r)| (e.ln(), r.ln()))
        .unzip();
    if x.len() < 3 {
        return Err(Error::Series(format!(
            "only {} eps points have {min_hits} hits",
            x.len()
        )));
    }
    ols(&x, &y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    /// Budget `m` runs `m^beta` iterations.
    Polynomial { beta: f64 },
    /// Budget `m` runs `e^m` iterations.
    Exponential,
}

impl Schedule {
    pub fn iterations(&self, m: f64) -> f64 {
        match *self {
            Self::Polynomial { beta } => m.powf(beta),
            Self::Exponential => m.exp(),
        }
    }
}

/// Budgets whose re-indexed iteration counts lie inside the series range:
/// the geometric grid for polynomial schedules and `1, 2, 3, ...` for the
/// exponential one.
pub fn default_budgets(series: &GapSeries, schedule: Schedule) -> Vec<u64> {
    let (lo, hi) = (series.n_min() as f64, series.n_max() as f64);
    let fits = |m: u64| {
        let n = schedule.iterations(m as f64);
        n >= lo && n <= hi
    };
    match schedule {
        Schedule::Polynomial { .. } => geometric_grid(series.n_max())
            .into_iter()
            .filter(|&m| fits(m))
            .collect(),
        Schedule::Exponential => (1..)
            .take_while(|&m| schedule.iterations(m as f64) <= hi)
            .filter(|&m| fits(m))
            .collect(),
    }
}

/// Series indexed by budget `m`, reading the base series at
/// `schedule.iterations(m)` by log interpolation.
pub fn acceleration_transform(series: &GapSeries, schedule: Schedule, budgets: Option<&[u64]>) -> Result<GapSeries> {
    if let Schedule::Polynomial { beta } = schedule {
        if !(beta > 1.0) {
            return invalid(format!("polynomial acceleration needs beta > 1, got {beta}"));
        }
    }
    let budgets = match budgets {
        Some(b) => b.to_vec(),
        None => default_budgets(series, schedule),
    };
    check_grid(&budgets)?;
    let points = budgets
        .iter()
        .map(|&m| {
            let value = series.interpolate(schedule.iterations(m as f64))?;
            Ok(SeriesPoint {
                n: m,
                value,
                stderr: 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    GapSeries::new(points, series.meaning, series.x_ref, series.x_star)
}

/// `(1 / (|x*| (log n)^{1/alpha})) (1 - gamma / (alpha log n))`.
pub fn prop4_prediction(alpha: f64, x_star: f64, n: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return invalid(format!("alpha must be positive, got {alpha}"));
    }
    if !(n >= 3.0) {
        return invalid(format!("n must be at least 3, got {n}"));
    }
    if x_star == 0.0 || !x_star.is_finite() {
        return invalid("x_star must be finite and nonzero");
    }
    let l = n.ln();
    Ok(1.0 / (x_star.abs() * l.powf(1.0 / alpha)) * (1.0 - EULER_GAMMA / (alpha * l)))
}

/// `value(c n) / value(n)` for every grid `n` with `c n` in range; `c n`
/// is read by log interpolation when it is not a grid point.
pub fn scale_free_ratio_check(series: &GapSeries, c: u64) -> Result<Vec<(u64, f64)>> {
    if c < 2 {
        return invalid(format!("c must be at least 2, got {c}"));
    }
    let out: Vec<(u64, f64)> = series
        .points
        .iter()
        .filter(|p| p.n.checked_mul(c).is_some_and(|cn| cn <= series.n_max()))
        .map(|p| Ok((p.n, series.interpolate((p.n * c) as f64)? / p.value)))
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(Error::Series(format!(
            "no grid point n has c n = {c} n inside the series"
        )));
    }
    Ok(out)
}

/// Two-column CSV with the given header.
pub fn write_pairs_csv<W: Write, A: std::fmt::Debug, B: std::fmt::Debug>(
    header: &str,
    rows: &[(A, B)],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "{header}")?;
    for (a, b) in rows {
        writeln!(w, "{a:?},{b:?}")?;
    }
    Ok(())
}
