//! Fractional and multi-fractional Brownian motion synthesis.
//!
//! Stationary Gaussian increment sequences are drawn either by sequential
//! conditioning on the Toeplitz covariance (Durbin-Levinson, exact, O(n^2)) or
//! by circulant embedding (exact whenever the embedding is non-negative,
//! O(n log n)). Paths are cumulative sums pinned at zero.
//!
//! Multi-fractional paths are an approximation: unit fGn fields at a set of
//! knot Hurst values share one driving noise and are blended with hat-kernel
//! weights in `H_t`, renormalized to unit variance, then scaled by
//! `sigma_t dt^{H_t}`. Inside windows much shorter than the variation time of
//! `H_t` the result behaves like fBm with frozen parameters. The harmonizable
//! integral itself is not discretized.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::LogPriceSeries;

/// Default largest length drawn with the exact sequential sampler.
pub const EXACT_CAP: usize = 4096;

/// Default refinement of the fine grid used by [`integrated_observations`].
pub const DEFAULT_REFINE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum SynthMethod {
    /// Exact sampler up to the cap, circulant embedding above it.
    #[default]
    Auto,
    /// Durbin-Levinson sequential conditioning.
    Exact,
    /// Circulant embedding.
    Circulant,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FbmSpec {
    pub hurst: f64,
    pub volatility: f64,
    /// Number of path samples, including the pinned origin.
    pub n: usize,
    pub dt: f64,
    pub seed: u64,
    pub method: SynthMethod,
    pub exact_cap: usize,
}

impl FbmSpec {
    pub fn new(hurst: f64, volatility: f64, n: usize, seed: u64) -> Self {
        Self {
            hurst,
            volatility,
            n,
            dt: 1.0,
            seed,
            method: SynthMethod::Auto,
            exact_cap: EXACT_CAP,
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_method(mut self, method: SynthMethod) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return Err(Error::param(
                "hurst",
                format!("{} not in (0, 1)", self.hurst),
            ));
        }
        if !(self.volatility > 0.0 && self.volatility.is_finite()) {
            return Err(Error::param(
                "volatility",
                format!("{} not positive", self.volatility),
            ));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", format!("{} not positive", self.dt)));
        }
        if self.n < 2 {
            return Err(Error::param("n", format!("{} < 2", self.n)));
        }
        Ok(())
    }
}

pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Multi-fractional Brownian motion with `H_t`, `sigma_t` on times `i * dt`.
#[derive(Clone)]
pub struct MbmSpec {
    pub hurst_fn: TimeFn,
    pub vol_fn: TimeFn,
    /// Characteristic variation time of the parameter functions.
    pub t0: f64,
    pub n: usize,
    pub dt: f64,
    pub seed: u64,
    pub method: SynthMethod,
}

impl fmt::Debug for MbmSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MbmSpec")
            .field("t0", &self.t0)
            .field("n", &self.n)
            .field("dt", &self.dt)
            .field("seed", &self.seed)
            .field("method", &self.method)
            .finish_non_exhaustive()
    }
}

impl MbmSpec {
    /// `H_t = h0(t / t0)`, `sigma_t = s0(t / t0)`.
    pub fn from_profiles<H, S>(h0: H, s0: S, t0: f64, n: usize, seed: u64) -> Self
    where
        H: Fn(f64) -> f64 + Send + Sync + 'static,
        S: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            hurst_fn: Arc::new(move |t| h0(t / t0)),
            vol_fn: Arc::new(move |t| s0(t / t0)),
            t0,
            n,
            dt: 1.0,
            seed,
            method: SynthMethod::Auto,
        }
    }

    pub fn constant(h: f64, s: f64, n: usize, seed: u64) -> Self {
        Self {
            hurst_fn: Arc::new(move |_| h),
            vol_fn: Arc::new(move |_| s),
            t0: f64::INFINITY,
            n,
            dt: 1.0,
            seed,
            method: SynthMethod::Auto,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Truth {
    Fbm(FbmSpec),
    Mbm(MbmSpec),
}

/// Sampled path, `values[0] = 0`.
#[derive(Debug, Clone)]
pub struct SyntheticPath {
    pub values: Vec<f64>,
    pub dt: f64,
    pub truth: Truth,
}

/// `E[B(t) B(u)] = (s^2/2)(|t|^{2h} + |u|^{2h} - |t-u|^{2h})`.
pub fn fbm_covariance(t: f64, u: f64, h: f64, s: f64) -> f64 {
    let e = 2.0 * h;
    0.5 * s * s * (t.abs().powf(e) + u.abs().powf(e) - (t - u).abs().powf(e))
}

/// Generalized binomial coefficient `C(a, k)`.
fn binom(a: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (a - i as f64) / (i + 1) as f64)
}

/// Central difference of `|x|^b` of order 2 (`f(x+1) - 2f(x) + f(x-1)`) or 4
/// (`f(x+2) - 4f(x+1) + 6f(x) - 4f(x-1) + f(x-2)`).
///
/// Far from the origin the direct form cancels catastrophically, so the
/// binomial expansion in `1/x` is summed instead.
fn central_diff_pow(x: f64, b: f64, order: usize) -> f64 {
    let x = x.abs();
    let f = |y: f64| y.abs().powf(b);
    let series_from = 8.0 * order as f64;
    if x < series_from {
        return match order {
            2 => f(x + 1.0) - 2.0 * f(x) + f(x - 1.0),
            4 => f(x + 2.0) - 4.0 * f(x + 1.0) + 6.0 * f(x) - 4.0 * f(x - 1.0) + f(x - 2.0),
            _ => unreachable!("order 2 or 4"),
        };
    }
    // coefficient of x^{-2k}: order 2 -> 2, order 4 -> 2(4^k - 4)
    let inv2 = 1.0 / (x * x);
    let mut total = 0.0;
    let mut xpow = 1.0;
    let start = order / 2;
    for _ in 0..start {
        xpow *= inv2;
    }
    for k in start..200 {
        let c = match order {
            2 => 2.0,
            _ => 2.0 * (4f64.powi(k as i32) - 4.0),
        };
        let term = binom(b, 2 * k) * c * xpow;
        total += term;
        if term.abs() <= 1e-18 * total.abs() {
            break;
        }
        xpow *= inv2;
    }
    x.powf(b) * total
}

/// Autocovariance at `lag` of fGn increments with step `dt`.
pub fn fgn_autocov(lag: usize, h: f64, s: f64, dt: f64) -> f64 {
    0.5 * s * s * dt.powf(2.0 * h) * central_diff_pow(lag as f64, 2.0 * h, 2)
}

/// Autocovariance at `lag` of the increments of interval-averaged fBm
/// observations, `a(i) = (1/dt) \int_{t_i - dt/2}^{t_i + dt/2} B(t) dt`.
pub fn observation_increment_autocov(lag: usize, h: f64, s: f64, dt: f64) -> f64 {
    let a = 2.0 * h + 2.0;
    0.5 * s * s * dt.powf(2.0 * h) * central_diff_pow(lag as f64, a, 4) / ((a - 1.0) * a)
}

/// Exact sequential sampler for a stationary Gaussian sequence.
fn levinson_sample(cov: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let n = cov.len();
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return Ok(out);
    }
    let mut v = cov[0];
    if v <= 0.0 {
        return Err(Error::NotPositiveDefinite { step: 0 });
    }
    out.push(v.sqrt() * rng.sample::<f64, _>(StandardNormal));
    let mut phi: Vec<f64> = Vec::with_capacity(n);
    let mut next: Vec<f64> = Vec::with_capacity(n);
    for t in 1..n {
        let mut num = cov[t];
        for k in 1..t {
            num -= phi[k - 1] * cov[t - k];
        }
        let kappa = num / v;
        next.clear();
        for k in 1..t {
            next.push(phi[k - 1] - kappa * phi[t - k - 1]);
        }
        next.push(kappa);
        std::mem::swap(&mut phi, &mut next);
        v *= 1.0 - kappa * kappa;
        if v <= 0.0 {
            return Err(Error::NotPositiveDefinite { step: t });
        }
        let mut mean = 0.0;
        for k in 1..=t {
            mean += phi[k - 1] * out[t - k];
        }
        out.push(mean + v.sqrt() * rng.sample::<f64, _>(StandardNormal));
    }
    Ok(out)
}

/// Eigenvalues of the minimal circulant embedding of a covariance function.
struct Embedding {
    size: usize,
    eigen: Vec<f64>,
}

impl Embedding {
    fn new(n: usize, cov: impl Fn(usize) -> f64) -> Result<Self> {
        let size = (2 * (n.max(2) - 1)).next_power_of_two();
        let half = size / 2;
        let mut row: Vec<Complex<f64>> = (0..size)
            .map(|k| {
                let lag = if k <= half { k } else { size - k };
                Complex::new(cov(lag), 0.0)
            })
            .collect();
        FftPlanner::new().plan_fft_forward(size).process(&mut row);
        let max = row.iter().map(|c| c.re).fold(0.0, f64::max);
        let mut eigen = Vec::with_capacity(size);
        for (k, c) in row.iter().enumerate() {
            if c.re < -1e-9 * max {
                return Err(Error::NotPositiveDefinite { step: k });
            }
            eigen.push(c.re.max(0.0));
        }
        Ok(Self { size, eigen })
    }

    fn noise(&self, rng: &mut ChaCha8Rng) -> Vec<Complex<f64>> {
        (0..self.size)
            .map(|_| Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect()
    }

    fn realize(&self, noise: &[Complex<f64>], n: usize, planner: &mut FftPlanner<f64>) -> Vec<f64> {
        let m = self.size as f64;
        let mut buf: Vec<Complex<f64>> = noise
            .iter()
            .zip(&self.eigen)
            .map(|(z, l)| z * (l / m).sqrt())
            .collect();
        planner.plan_fft_forward(self.size).process(&mut buf);
        buf[..n].iter().map(|c| c.re).collect()
    }

    /// Lag-zero covariance between two fields driven by the same noise.
    fn cross(&self, other: &Embedding) -> f64 {
        self.eigen
            .iter()
            .zip(&other.eigen)
            .map(|(a, b)| (a * b).sqrt())
            .sum::<f64>()
            / self.size as f64
    }
}

fn circulant_sample(
    n: usize,
    cov: impl Fn(usize) -> f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let emb = Embedding::new(n, cov)?;
    let noise = emb.noise(rng);
    Ok(emb.realize(&noise, n, &mut FftPlanner::new()))
}

/// Stationary Gaussian sequence of length `n` with autocovariance `cov`.
pub fn stationary_sample(
    n: usize,
    cov: impl Fn(usize) -> f64,
    method: SynthMethod,
    exact_cap: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    match method {
        SynthMethod::Exact => {
            if n > exact_cap {
                return Err(Error::SeriesTooLong { n, cap: exact_cap });
            }
            let c: Vec<f64> = (0..n).map(&cov).collect();
            levinson_sample(&c, rng)
        }
        SynthMethod::Circulant => circulant_sample(n, cov, rng),
        SynthMethod::Auto if n <= exact_cap => {
            let c: Vec<f64> = (0..n).map(&cov).collect();
            levinson_sample(&c, rng)
        }
        SynthMethod::Auto => circulant_sample(n, cov, rng),
    }
}

fn cumsum_from_zero(incr: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(incr.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for d in incr {
        acc += d;
        out.push(acc);
    }
    out
}

/// SplitMix64 finalizer; derives independent stream seeds from a base seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn sample_fbm(spec: &FbmSpec) -> Result<SyntheticPath> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (h, s, dt) = (spec.hurst, spec.volatility, spec.dt);
    let incr = stationary_sample(
        spec.n - 1,
        |k| fgn_autocov(k, h, s, dt),
        spec.method,
        spec.exact_cap,
        &mut rng,
    )?;
    Ok(SyntheticPath {
        values: cumsum_from_zero(&incr),
        dt: spec.dt,
        truth: Truth::Fbm(spec.clone()),
    })
}

/// Interval-averaged fBm observations drawn directly from their exact law.
///
/// Returns `spec.n` observations at spacing `spec.dt`, the first set to zero.
pub fn sample_fbm_observations(spec: &FbmSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (h, s, dt) = (spec.hurst, spec.volatility, spec.dt);
    let cov = |k| observation_increment_autocov(k, h, s, dt);
    let incr = match stationary_sample(spec.n - 1, cov, spec.method, spec.exact_cap, &mut rng) {
        Err(Error::NotPositiveDefinite { .. }) if spec.method != SynthMethod::Exact => {
            let c: Vec<f64> = (0..spec.n - 1).map(cov).collect();
            levinson_sample(&c, &mut rng)?
        }
        r => r?,
    };
    Ok(cumsum_from_zero(&incr))
}

/// Observations of consecutive fBm regimes `(hurst, volatility, length)`,
/// glued continuously.
pub fn sample_regime_observations(regimes: &[(f64, f64, usize)], seed: u64) -> Result<Vec<f64>> {
    let mut out: Vec<f64> = Vec::with_capacity(regimes.iter().map(|r| r.2).sum());
    for (k, &(h, s, len)) in regimes.iter().enumerate() {
        if len == 0 {
            return Err(Error::param("regime length", "must be positive"));
        }
        // the first regime owns the origin, later ones contribute `len` increments each
        let draw = if out.is_empty() { len } else { len + 1 };
        if draw < 2 {
            out.push(0.0);
            continue;
        }
        let obs = sample_fbm_observations(&FbmSpec::new(h, s, draw, derive_seed(seed, k as u64)))?;
        match out.last().copied() {
            None => out.extend_from_slice(&obs),
            Some(last) => out.extend(obs[1..].iter().map(|v| last + v)),
        }
    }
    Ok(out)
}

fn check_mbm(spec: &MbmSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    if spec.n < 2 {
        return Err(Error::param("n", format!("{} < 2", spec.n)));
    }
    if !(spec.dt > 0.0 && spec.dt.is_finite()) {
        return Err(Error::param("dt", format!("{} not positive", spec.dt)));
    }
    if spec.t0.is_nan() || spec.t0 <= 0.0 {
        return Err(Error::param("t0", format!("{} not positive", spec.t0)));
    }
    let mut hs = Vec::with_capacity(spec.n - 1);
    let mut ss = Vec::with_capacity(spec.n - 1);
    for i in 0..spec.n - 1 {
        let t = i as f64 * spec.dt;
        let h = (spec.hurst_fn)(t);
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::HurstOutOfRange { t, value: h });
        }
        let s = (spec.vol_fn)(t);
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::VolatilityOutOfRange { t, value: s });
        }
        hs.push(h);
        ss.push(s);
    }
    Ok((hs, ss))
}

/// Knot Hurst values covering every `H_t` on the grid.
fn knots(hs: &[f64]) -> Vec<f64> {
    let mut distinct: Vec<f64> = hs.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() <= 16 {
        return distinct;
    }
    let (lo, hi) = (distinct[0], distinct[distinct.len() - 1]);
    let count = ((hi - lo) / 0.02).ceil() as usize + 1;
    (0..count)
        .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
        .collect()
}

pub fn sample_mbm(spec: &MbmSpec) -> Result<SyntheticPath> {
    let (hs, ss) = check_mbm(spec)?;
    let constant_h = hs.iter().all(|&h| h == hs[0]);
    if constant_h && ss.iter().all(|&s| s == ss[0]) {
        let fbm = FbmSpec {
            hurst: hs[0],
            volatility: ss[0],
            n: spec.n,
            dt: spec.dt,
            seed: spec.seed,
            method: spec.method,
            exact_cap: EXACT_CAP,
        };
        let mut path = sample_fbm(&fbm)?;
        path.truth = Truth::Mbm(spec.clone());
        return Ok(path);
    }

    let n = spec.n - 1;
    let incr = if constant_h {
        // unit-volatility fBm increments, modulated pointwise
        let unit = FbmSpec {
            hurst: hs[0],
            volatility: 1.0,
            n: spec.n,
            dt: spec.dt,
            seed: spec.seed,
            method: spec.method,
            exact_cap: EXACT_CAP,
        };
        let path = sample_fbm(&unit)?;
        path.values
            .windows(2)
            .zip(&ss)
            .map(|(w, s)| s * (w[1] - w[0]))
            .collect::<Vec<_>>()
    } else {
        let knots = knots(&hs);
        let embeddings = knots
            .iter()
            .map(|&h| Embedding::new(n, |k| fgn_autocov(k, h, 1.0, 1.0)))
            .collect::<Result<Vec<_>>>()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let noise = embeddings[0].noise(&mut rng);
        let mut planner = FftPlanner::new();
        let fields: Vec<Vec<f64>> = embeddings
            .iter()
            .map(|e| e.realize(&noise, n, &mut planner))
            .collect();
        (0..n)
            .map(|t| {
                let h = hs[t];
                let hi = knots.partition_point(|&k| k < h).min(knots.len() - 1);
                let lo = hi.saturating_sub(1);
                let (w_lo, w_hi) = if knots[hi] == h || lo == hi {
                    (0.0, 1.0)
                } else {
                    let w = (knots[hi] - h) / (knots[hi] - knots[lo]);
                    (w, 1.0 - w)
                };
                let mixed = w_lo * fields[lo][t] + w_hi * fields[hi][t];
                let var = w_lo * w_lo * embeddings[lo].cross(&embeddings[lo])
                    + w_hi * w_hi * embeddings[hi].cross(&embeddings[hi])
                    + 2.0 * w_lo * w_hi * embeddings[lo].cross(&embeddings[hi]);
                ss[t] * spec.dt.powf(h) * mixed / var.sqrt()
            })
            .collect()
    };
    Ok(SyntheticPath {
        values: cumsum_from_zero(&incr),
        dt: spec.dt,
        truth: Truth::Mbm(spec.clone()),
    })
}

/// Interval averages of a finely sampled path.
///
/// Observation `i` is the composite-trapezoid mean of the path over samples
/// `[i * refine, (i + 1) * refine]`, i.e. over an interval of length
/// `refine * dt` centered at `(i + 1/2) * refine * dt`.
pub fn integrated_observations(path: &SyntheticPath, refine: usize) -> Result<LogPriceSeries> {
    if refine == 0 {
        return Err(Error::param("refine", "must be at least 1"));
    }
    let v = &path.values;
    let count = (v.len() - 1) / refine;
    if count == 0 {
        return Err(Error::TooShort {
            required: refine + 1,
            actual: v.len(),
        });
    }
    let obs = (0..count)
        .map(|i| {
            let seg = &v[i * refine..=(i + 1) * refine];
            let inner: f64 = seg[1..refine].iter().sum();
            (0.5 * (seg[0] + seg[refine]) + inner) / refine as f64
        })
        .collect();
    LogPriceSeries::from_values("synthetic", obs)
}

/// Closed form of `C(h) = pi / (h Gamma(2h) sin(pi h))`.
pub fn harmonizable_norm(h: f64) -> f64 {
    PI / (h * statrs::function::gamma::gamma(2.0 * h) * (PI * h).sin())
}
