//! Analytic tail models and the extreme-value quantities of the best
//! empirical objective value `Z_n = max(X_1, ..., X_n)`.
//!
//! For a model with CDF `F`:
//! * `U(t)` is the left-continuous inverse of `1 / (1 - F)`,
//! * `V(t)` is the left-continuous inverse of `1 / (-log F)`, so that
//!   `Z_n` has the law of `V(n S)` with `P(S <= s) = exp(-1/s)`,
//! * `a(t)` is the auxiliary scale and `a0(t)` its integral counterpart.

use rand::distr::Open01;
use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::consts::EULER_MASCHERONI;
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::rng::stream_rng;
use crate::stats::{Estimate, Moments};

/// Euler's constant.
pub const EULER_GAMMA: f64 = EULER_MASCHERONI;

/// Below this `|xi|` the GEV mean uses the `xi = 0` value.
const GEV_MEAN_ZERO_BAND: f64 = 1e-6;
/// Relative tolerance of the bisection for `V`.
const V_REL_TOL: f64 = 1e-12;
/// Relative tolerance of the quadrature in `a0`.
const A0_REL_TOL: f64 = 1e-9;
/// Replications per random stream in Monte-Carlo estimates.
pub const MC_CHUNK: usize = 1 << 16;
/// Smallest replication count accepted by [`mc_expected_excess`].
pub const MIN_MC_REPS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum TailModelSpec {
    Pareto {
        xi: f64,
    },
    BoundedPower {
        xi: f64,
        endpoint: f64,
    },
    LogPower {
        alpha: f64,
        #[serde(default = "default_log_power_endpoint")]
        endpoint: f64,
    },
    Exponential {},
}

fn default_log_power_endpoint() -> f64 {
    -1.0
}

/// A distribution of objective values with known extreme-value index.
///
/// * `Pareto`: `F(x) = 1 - x^(-1/xi)` on `[1, inf)`, `0 < xi < 1`.
/// * `BoundedPower`: `F(x) = 1 - (x* - x)^(-1/xi)` on `[x* - 1, x*]`, `xi < 0`.
/// * `LogPower`: `F(x) = 1 - exp(-(x* - x)^(-alpha))` on `(-inf, x*)`, `xi = 0`.
/// * `Exponential`: `F(x) = 1 - exp(-x)` on `[0, inf)`, `xi = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TailModelSpec", into = "TailModelSpec")]
pub enum TailModel {
    Pareto { xi: f64 },
    BoundedPower { xi: f64, endpoint: f64 },
    LogPower { alpha: f64, endpoint: f64 },
    Exponential,
}

impl TryFrom<TailModelSpec> for TailModel {
    type Error = Error;

    fn try_from(s: TailModelSpec) -> Result<Self> {
        match s {
            TailModelSpec::Pareto { xi } => Self::pareto(xi),
            TailModelSpec::BoundedPower { xi, endpoint } => Self::bounded_power(xi, endpoint),
            TailModelSpec::LogPower { alpha, endpoint } => Self::log_power(alpha, endpoint),
            TailModelSpec::Exponential {} => Ok(Self::Exponential),
        }
    }
}

impl From<TailModel> for TailModelSpec {
    fn from(m: TailModel) -> Self {
        match m {
            TailModel::Pareto { xi } => Self::Pareto { xi },
            TailModel::BoundedPower { xi, endpoint } => Self::BoundedPower { xi, endpoint },
            TailModel::LogPower { alpha, endpoint } => Self::LogPower { alpha, endpoint },
            TailModel::Exponential => Self::Exponential {},
        }
    }
}

impl TailModel {
    pub fn pareto(xi: f64) -> Result<Self> {
        if !(xi > 0.0 && xi < 1.0) {
            return invalid(format!("Pareto needs 0 < xi < 1, got {xi}"));
        }
        Ok(Self::Pareto { xi })
    }

    pub fn bounded_power(xi: f64, endpoint: f64) -> Result<Self> {
        if !(xi < 0.0 && xi.is_finite()) {
            return invalid(format!("BoundedPower needs a finite xi < 0, got {xi}"));
        }
        if !endpoint.is_finite() || endpoint == 0.0 {
            return invalid(format!("BoundedPower needs a finite nonzero endpoint, got {endpoint}"));
        }
        Ok(Self::BoundedPower { xi, endpoint })
    }

    pub fn log_power(alpha: f64, endpoint: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return invalid(format!("LogPower needs a finite alpha > 0, got {alpha}"));
        }
        if !endpoint.is_finite() || endpoint == 0.0 {
            return invalid(format!("LogPower needs a finite nonzero endpoint, got {endpoint}"));
        }
        Ok(Self::LogPower { alpha, endpoint })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Pareto { .. } => "pareto",
            Self::BoundedPower { .. } => "bounded_power",
            Self::LogPower { .. } => "log_power",
            Self::Exponential => "exponential",
        }
    }

    /// Extreme-value index.
    pub fn xi(&self) -> f64 {
        match *self {
            Self::Pareto { xi } | Self::BoundedPower { xi, .. } => xi,
            Self::LogPower { .. } | Self::Exponential => 0.0,
        }
    }

    /// Right endpoint `x*` (infinite for Pareto and Exponential).
    pub fn endpoint(&self) -> f64 {
        match *self {
            Self::BoundedPower { endpoint, .. } | Self::LogPower { endpoint, .. } => endpoint,
            Self::Pareto { .. } | Self::Exponential => f64::INFINITY,
        }
    }

    /// Left end of the support (`-inf` for LogPower).
    pub fn lower(&self) -> f64 {
        match *self {
            Self::Pareto { .. } => 1.0,
            Self::BoundedPower { endpoint, .. } => endpoint - 1.0,
            Self::LogPower { .. } => f64::NEG_INFINITY,
            Self::Exponential => 0.0,
        }
    }

    /// `log(1 - F(x))`.
    pub fn log_survival(&self, x: f64) -> f64 {
        if x < self.lower() {
            return 0.0;
        }
        if x >= self.endpoint() {
            return f64::NEG_INFINITY;
        }
        match *self {
            Self::Pareto { xi } => -x.ln() / xi,
            Self::BoundedPower { xi, endpoint } => -(endpoint - x).ln() / xi,
            Self::LogPower { alpha, endpoint } => -(endpoint - x).powf(-alpha),
            Self::Exponential => -x,
        }
    }

    pub fn survival(&self, x: f64) -> f64 {
        self.log_survival(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        -self.log_survival(x).exp_m1()
    }

    /// `-log F(x)`, accurate in both tails.
    pub fn neg_log_cdf(&self, x: f64) -> f64 {
        let ls = self.log_survival(x);
        let s = ls.exp();
        if s < 0.5 {
            -(-s).ln_1p()
        } else {
            -(-ls.exp_m1()).ln()
        }
    }

    /// The `x` with `1 - F(x) = q`, for `q` in `(0, 1]`.
    pub fn quantile_upper(&self, q: f64) -> f64 {
        match *self {
            Self::Pareto { xi } => q.powf(-xi),
            Self::BoundedPower { xi, endpoint } => endpoint - q.powf(-xi),
            Self::LogPower { alpha, endpoint } => endpoint - (-q.ln()).powf(-1.0 / alpha),
            Self::Exponential => -q.ln(),
        }
    }

    /// `F^{-1}(p)` for `p` in `[0, 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        self.quantile_upper(1.0 - p)
    }

    /// `U(t)` for `t >= 1`.
    pub fn u(&self, t: f64) -> Result<f64> {
        if !(t >= 1.0) {
            return invalid(format!("U(t) needs t >= 1, got {t}"));
        }
        Ok(match *self {
            Self::Pareto { xi } => t.powf(xi),
            Self::BoundedPower { xi, endpoint } => endpoint - t.powf(xi),
            Self::LogPower { alpha, endpoint } => endpoint - t.ln().powf(-1.0 / alpha),
            Self::Exponential => t.ln(),
        })
    }

    /// Auxiliary scale `a(t)`, `t > 1`.
    pub fn a(&self, t: f64) -> f64 {
        match *self {
            Self::Pareto { xi } => xi * t.powf(xi),
            Self::BoundedPower { xi, .. } => -xi * t.powf(xi),
            Self::LogPower { alpha, .. } => t.ln().powf(-1.0 - 1.0 / alpha) / alpha,
            Self::Exponential => 1.0,
        }
    }

    /// `V(t)` for `t > 0`, by bisection on the support.
    pub fn v(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return invalid(format!("V(t) needs t > 0, got {t}"));
        }
        if t.is_infinite() {
            return Ok(self.endpoint());
        }
        let level = 1.0 / t;
        let ok = |v: f64| self.neg_log_cdf(v) <= level;
        let mut lo = self.lower();
        if lo.is_infinite() {
            let top = self.endpoint();
            let mut step = 1.0;
            lo = top - step;
            while ok(lo) {
                step *= 2.0;
                lo = top - step;
                if !lo.is_finite() {
                    return Ok(f64::NEG_INFINITY);
                }
            }
        }
        if ok(lo) {
            return Ok(lo);
        }
        let mut hi = self.endpoint();
        if hi.is_infinite() {
            let mut step = 1.0;
            hi = lo + step;
            while !ok(hi) {
                step *= 2.0;
                hi = lo + step;
                if !hi.is_finite() {
                    return Ok(f64::INFINITY);
                }
            }
        }
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= V_REL_TOL * lo.abs().max(hi.abs()) {
                break;
            }
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// `a0(t)`: `xi V(t)` for `xi > 0`, `-xi (x* - V(t))` for `xi < 0`, and
    /// `V(t) - t^{-1} ∫_0^t V(s) ds` for `xi = 0`.
    ///
    /// For `xi = 0` the integral is taken with `V(s)` held at `V(s0)` on
    /// `(0, s0]`, where `s0 = 1` when the support is unbounded below (the
    /// integral diverges otherwise) and `s0 = 1e-3` when it is bounded.
    pub fn a0(&self, t: f64) -> Result<f64> {
        let xi = self.xi();
        let vt = self.v(t)?;
        if xi > 0.0 {
            return Ok(xi * vt);
        }
        if xi < 0.0 {
            return Ok(-xi * (self.endpoint() - vt));
        }
        let s0: f64 = if self.lower().is_finite() { 1e-3 } else { 1.0 };
        if t <= s0 {
            return invalid(format!("a0(t) needs t > {s0}, got {t}"));
        }
        let head = s0 * (vt - self.v(s0)?);
        let integrand = |u: f64| {
            let s = u.exp();
            (vt - self.v(s).unwrap_or(vt)) * s
        };
        let body = adaptive_simpson(integrand, s0.ln(), t.ln(), A0_REL_TOL);
        Ok((head + body) / t)
    }

    /// One draw from `F`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        self.quantile_upper(u)
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to relative tolerance.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    // Coarse pass fixes the absolute tolerance from the integral's scale.
    let n = 64;
    let h = (b - a) / n as f64;
    let coarse: f64 = (0..n)
        .map(|i| {
            let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            h / 6.0 * (f(x0) + 4.0 * f(0.5 * (x0 + x1)) + f(x1))
        })
        .sum();
    let tol = rel_tol * coarse.abs().max(f64::MIN_POSITIVE);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(&f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Standard GEV distribution function `exp(-(1 + xi z)_+^{-1/xi})`.
pub fn gev_cdf(xi: f64, z: f64) -> f64 {
    if xi == 0.0 {
        return (-(-z).exp()).exp();
    }
    let t = 1.0 + xi * z;
    if t <= 0.0 {
        return if xi > 0.0 { 0.0 } else { 1.0 };
    }
    (-t.powf(-1.0 / xi)).exp()
}

/// Mean of the standard GEV law: `-Γ(-xi) - 1/xi`, or Euler's constant at 0.
pub fn gev_mean(xi: f64) -> Result<f64> {
    if !(xi < 1.0) {
        return invalid(format!("the GEV mean is undefined for xi >= 1, got {xi}"));
    }
    if xi.abs() < GEV_MEAN_ZERO_BAND {
        return Ok(EULER_GAMMA);
    }
    Ok(-gamma(-xi) - 1.0 / xi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevQuantities {
    pub xi: f64,
    pub mean: f64,
}

impl GevQuantities {
    pub fn new(xi: f64) -> Result<Self> {
        Ok(Self {
            xi,
            mean: gev_mean(xi)?,
        })
    }
}

/// Draw of `S = 1/E` with `E` unit exponential, so `P(S <= s) = exp(-1/s)`.
pub fn sample_s<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let e: f64 = rng.sample(Exp1);
    1.0 / e
}

/// `Z_n` by inversion of `F^n`: `F^{-1}(W^{1/n})` with `W` uniform.
pub fn sample_zn_direct<R: Rng + ?Sized>(model: &TailModel, n: u64, rng: &mut R) -> f64 {
    let w: f64 = rng.sample(Open01);
    zn_from_uniform(model, n, w)
}

/// `F^{-1}(w^{1/n})`, nondecreasing in both `n` and `w`.
pub fn zn_from_uniform(model: &TailModel, n: u64, w: f64) -> f64 {
    let q = -(w.ln() / n as f64).exp_m1();
    model.quantile_upper(q)
}

/// `Z_n` as the literal maximum of `n` independent draws.
pub fn sample_zn_naive<R: Rng + ?Sized>(model: &TailModel, n: u64, rng: &mut R) -> f64 {
    (0..n).map(|_| model.sample(rng)).fold(f64::NEG_INFINITY, f64::max)
}

/// `V(n S)` with `S` drawn by [`sample_s`].
pub fn sample_zn_via_vs<R: Rng + ?Sized>(model: &TailModel, n: u64, rng: &mut R) -> Result<f64> {
    let s = sample_s(rng);
    model.v(n as f64 * s)
}

fn check_below_endpoint(model: &TailModel, x: f64) -> Result<()> {
    if !(x < model.endpoint()) {
        return invalid(format!("x = {x} must lie below the endpoint {}", model.endpoint()));
    }
    Ok(())
}

/// Monte-Carlo estimate of `E[g(Z_n)]` with `reps` direct draws; stream
/// `c` of `seed` serves replications `c * MC_CHUNK ..`.
pub fn mc_mean(model: &TailModel, n: u64, reps: usize, seed: u64, g: impl Fn(f64) -> f64 + Sync) -> Estimate {
    let chunks = reps.div_ceil(MC_CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, &[c as u64]);
            let len = MC_CHUNK.min(reps - c * MC_CHUNK);
            (0..len).map(|_| g(sample_zn_direct(model, n, &mut rng))).collect()
        })
        .collect();
    parts.into_iter().fold(Moments::default(), Moments::merge).estimate()
}

/// Monte-Carlo estimate of `E[(Z_n - x)_+]`.
pub fn mc_expected_excess(model: &TailModel, n: u64, x: f64, reps: usize, seed: u64) -> Result<Estimate> {
    check_below_endpoint(model, x)?;
    if n == 0 {
        return invalid("n must be at least 1");
    }
    if reps < MIN_MC_REPS {
        return invalid(format!("at least {MIN_MC_REPS} replications are required, got {reps}"));
    }
    Ok(mc_mean(model, n, reps, seed, |z| (z - x).max(0.0)))
}

/// `m_xi a(n) + U(n) - x`.
pub fn theorem1_prediction(model: &TailModel, n: f64, x: f64) -> Result<f64> {
    check_below_endpoint(model, x)?;
    Ok(gev_mean(model.xi())? * model.a(n) + model.u(n)? - x)
}

/// Report `{model, n, x, reps, mean, stderr, prediction}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcessReport {
    pub model: TailModel,
    pub n: u64,
    pub x: f64,
    pub reps: usize,
    pub mean: f64,
    pub stderr: f64,
    pub prediction: f64,
}

pub fn excess_report(model: &TailModel, n: u64, x: f64, reps: usize, seed: u64) -> Result<ExcessReport> {
    let est = mc_expected_excess(model, n, x, reps, seed)?;
    Ok(ExcessReport {
        model: *model,
        n,
        x,
        reps,
        mean: est.mean,
        stderr: est.stderr,
        prediction: theorem1_prediction(model, n as f64, x)?,
    })
}
