//! Power-law fits of scale spectra.
//!
//! `log2 S_j` is regressed on `(1, log2(2j))` by weighted least squares with a
//! diagonal covariance model `R = diag(j^q)`. The slope `p` gives
//! `H = (p - 1) / 2` and the intercept `c` gives `sigma = 2^{c/2} / sqrt(h(H))`.
//! The robust estimate runs the fit under `q = 1` and `q = 3` and keeps the
//! one with the larger Hurst exponent.

use chrono::{Days, NaiveDate};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::LogPriceSeries;
use crate::spectrum::{self, HaarWindow, InertialRange, ScaleSpectrum};

/// Hurst estimates are thresholded to this interval.
pub const HURST_CLAMP: (f64, f64) = (0.05, 0.95);

/// Minimum window: the default range `[2, M/2]` needs `M/2 > 2`.
pub const MIN_WINDOW: usize = 6;

/// Diagonal covariance model of the log-spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum WeightScheme {
    /// `R_jj = j^q`.
    Power(f64),
    /// Explicit `R_jj`, one per scale of the range.
    Diagonal(Vec<f64>),
}

impl WeightScheme {
    pub const R1: WeightScheme = WeightScheme::Power(1.0);
    pub const R3: WeightScheme = WeightScheme::Power(3.0);

    /// Regression weights `1 / R_jj`.
    fn weights(&self, range: InertialRange) -> Result<Vec<f64>> {
        match self {
            WeightScheme::Power(q) => {
                if !q.is_finite() {
                    return Err(Error::param("weight exponent", format!("{q}")));
                }
                Ok(range.scales().map(|j| (j as f64).powf(-q)).collect())
            }
            WeightScheme::Diagonal(r) => {
                if r.len() != range.len() {
                    return Err(Error::LengthMismatch {
                        left: r.len(),
                        right: range.len(),
                    });
                }
                if r.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
                    return Err(Error::param("weights", "diagonal entries must be positive"));
                }
                Ok(r.iter().map(|x| 1.0 / x).collect())
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            WeightScheme::Power(q) => format!("R{q}"),
            WeightScheme::Diagonal(_) => "diag".into(),
        }
    }
}

/// Intercept and slope of the log-log regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
}

fn log_spectrum(range: InertialRange, values: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if values.len() != range.len() {
        return Err(Error::LengthMismatch {
            left: values.len(),
            right: range.len(),
        });
    }
    let mut x = Vec::with_capacity(values.len());
    let mut y = Vec::with_capacity(values.len());
    for (j, &s) in range.scales().zip(values) {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::DegenerateSpectrum { j });
        }
        x.push(((2 * j) as f64).log2());
        y.push(s.log2());
    }
    Ok((x, y))
}

fn weighted_line(x: &[f64], y: &[f64], w: &[f64]) -> LineFit {
    let sw: f64 = w.iter().sum();
    let xm = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let ym = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for ((&xi, &yi), &wi) in x.iter().zip(y).zip(w) {
        let dx = xi - xm;
        sxx += wi * dx * dx;
        sxy += wi * dx * (yi - ym);
    }
    // sxx > 0 whenever two distinct scales are present
    debug_assert!(sxx > 0.0);
    let slope = sxy / sxx;
    LineFit {
        intercept: ym - slope * xm,
        slope,
    }
}

/// Weighted regression of `log2` spectrum values over `range`.
pub fn fit_log_spectrum(
    range: InertialRange,
    values: &[f64],
    scheme: &WeightScheme,
) -> Result<LineFit> {
    let (x, y) = log_spectrum(range, values)?;
    let w = scheme.weights(range)?;
    Ok(weighted_line(&x, &y, &w))
}

pub fn gls_fit(spec: &ScaleSpectrum, scheme: &WeightScheme) -> Result<LineFit> {
    fit_log_spectrum(spec.range, &spec.values, scheme)
}

pub fn hurst_from_slope(slope: f64) -> f64 {
    (slope - 1.0) / 2.0
}

pub fn clamp_hurst(h: f64) -> f64 {
    h.clamp(HURST_CLAMP.0, HURST_CLAMP.1)
}

/// Estimated local power law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLawFit {
    /// Thresholded Hurst exponent.
    pub hurst: f64,
    /// `(slope - 1) / 2` before thresholding.
    pub raw_hurst: f64,
    /// Volatility at the sampling interval.
    pub volatility: f64,
    pub intercept: f64,
    pub slope: f64,
    pub scheme: WeightScheme,
}

impl PowerLawFit {
    /// `log2` of the fitted model spectrum at span `j`.
    pub fn model_log2(&self, j: usize) -> f64 {
        spectrum::model_spectrum(self.hurst, self.volatility, j).log2()
    }
}

/// Power law from a regression line: threshold H, then derive sigma from it.
pub fn power_law_from_line(line: LineFit, scheme: WeightScheme) -> PowerLawFit {
    let raw = hurst_from_slope(line.slope);
    let hurst = clamp_hurst(raw);
    PowerLawFit {
        hurst,
        raw_hurst: raw,
        volatility: (line.intercept / 2.0).exp2() / spectrum::scaling_fn(hurst).sqrt(),
        intercept: line.intercept,
        slope: line.slope,
        scheme,
    }
}

/// Fits under each scheme and keeps the largest raw Hurst exponent; the
/// earlier scheme wins ties.
pub fn robust_line(
    range: InertialRange,
    values: &[f64],
    schemes: &[WeightScheme],
) -> Result<(LineFit, WeightScheme)> {
    let (x, y) = log_spectrum(range, values)?;
    let mut best: Option<(LineFit, &WeightScheme)> = None;
    for s in schemes {
        let fit = weighted_line(&x, &y, &s.weights(range)?);
        if best.as_ref().is_none_or(|(b, _)| fit.slope > b.slope) {
            best = Some((fit, s));
        }
    }
    let (fit, s) = best.ok_or_else(|| Error::param("schemes", "empty"))?;
    Ok((fit, s.clone()))
}

/// Robust power-law estimate from a spectrum under the default schemes.
pub fn fit_power_law(spec: &ScaleSpectrum) -> Result<PowerLawFit> {
    fit_power_law_with(spec, &EstimatorConfig::default().schemes)
}

pub fn fit_power_law_with(spec: &ScaleSpectrum, schemes: &[WeightScheme]) -> Result<PowerLawFit> {
    let (line, scheme) = robust_line(spec.range, &spec.values, schemes)?;
    Ok(power_law_from_line(line, scheme))
}

/// Volatility at horizon `m` samples: `sigma * m^H`.
pub fn rescale_volatility(fit: &PowerLawFit, m: f64) -> f64 {
    fit.volatility * m.powf(fit.hurst)
}

/// Chooses the inertial range from a window length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RangeRule {
    pub first: usize,
    /// `None` means `M / 2`.
    pub last: Option<usize>,
}

impl Default for RangeRule {
    fn default() -> Self {
        Self {
            first: 2,
            last: None,
        }
    }
}

impl RangeRule {
    pub fn resolve(&self, window: usize) -> Result<InertialRange> {
        let last = self.last.map_or(window / 2, |l| l.min(window / 2));
        InertialRange::new(self.first, last, window)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorConfig {
    pub range: RangeRule,
    pub schemes: Vec<WeightScheme>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            range: RangeRule::default(),
            schemes: vec![WeightScheme::R1, WeightScheme::R3],
        }
    }
}

/// Fit of a whole window under a configuration.
pub fn fit_window(window: &[f64], cfg: &EstimatorConfig) -> Result<PowerLawFit> {
    let range = cfg.range.resolve(window.len())?;
    let spec = spectrum::scale_spectrum(window, range)?;
    fit_power_law_with(&spec, &cfg.schemes)
}

/// One rolling-window estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackPoint {
    /// Index of the first sample of the window.
    pub start: usize,
    /// `start + (M - 1) / 2`, in samples.
    pub center: f64,
    /// Calendar date of the window center, rounded down.
    pub center_date: NaiveDate,
    pub fit: PowerLawFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RollingTrack {
    pub window: usize,
    pub step: usize,
    pub points: Vec<TrackPoint>,
}

fn window_starts(n: usize, window: usize, step: usize) -> Result<Vec<usize>> {
    if window < MIN_WINDOW {
        return Err(Error::param("window", format!("{window} < {MIN_WINDOW}")));
    }
    if step == 0 {
        return Err(Error::param("step", "must be at least 1"));
    }
    if window > n {
        return Err(Error::WindowExceedsSeries { window, len: n });
    }
    Ok((0..=n - window).step_by(step).collect())
}

fn center_of(dates: &[NaiveDate], start: usize, window: usize) -> (f64, NaiveDate) {
    let center = start as f64 + (window - 1) as f64 / 2.0;
    let date = dates[start] + Days::new(((window - 1) / 2) as u64);
    (center, date)
}

pub fn rolling_estimate(
    series: &LogPriceSeries,
    window: usize,
    step: usize,
    cfg: &EstimatorConfig,
) -> Result<RollingTrack> {
    let starts = window_starts(series.len(), window, step)?;
    let range = cfg.range.resolve(window)?;
    let values = series.values();
    let points = starts
        .par_iter()
        .map(|&k| {
            let spec = spectrum::scale_spectrum(&values[k..k + window], range)?;
            let fit = fit_power_law_with(&spec, &cfg.schemes)?;
            let (center, center_date) = center_of(series.dates(), k, window);
            Ok(TrackPoint {
                start: k,
                center,
                center_date,
                fit,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RollingTrack {
        window,
        step,
        points,
    })
}

/// Generalized Hurst exponent `H(q)` of one window, before thresholding.
pub fn generalized_hurst(window: &[f64], range: InertialRange, q: f64) -> Result<f64> {
    let spec = spectrum::q_spectrum(window, range, q)?;
    let (line, _) = robust_line(range, &spec.values, &EstimatorConfig::default().schemes)?;
    Ok(hurst_from_slope(line.slope))
}

/// Rolling `H(q)` curves, each shifted so its mean matches the `q = 2` curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralizedHurstTrack {
    pub window: usize,
    pub step: usize,
    pub qs: Vec<f64>,
    pub starts: Vec<usize>,
    pub centers: Vec<f64>,
    pub center_dates: Vec<NaiveDate>,
    /// `raw[k][t]`: uncentered `H(qs[k])` at window `t`.
    pub raw: Vec<Vec<f64>>,
    /// Shift added to each raw curve.
    pub offsets: Vec<f64>,
    /// `centered[k][t] = raw[k][t] + offsets[k]`.
    pub centered: Vec<Vec<f64>>,
}

impl GeneralizedHurstTrack {
    /// Per-window `max_q - min_q` of the centered curves.
    pub fn spread(&self) -> Vec<f64> {
        (0..self.starts.len())
            .map(|t| {
                let col = self.centered.iter().map(|c| c[t]);
                let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
                hi - lo
            })
            .collect()
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn generalized_hurst_track(
    series: &LogPriceSeries,
    window: usize,
    step: usize,
    qs: &[f64],
    rule: RangeRule,
) -> Result<GeneralizedHurstTrack> {
    if qs.is_empty() {
        return Err(Error::param("q", "empty moment list"));
    }
    for &q in qs {
        if !(q.is_finite() && q > 0.0) {
            return Err(Error::InvalidMomentOrder(q));
        }
    }
    let starts = window_starts(series.len(), window, step)?;
    let range = rule.resolve(window)?;
    let schemes = EstimatorConfig::default().schemes;
    let values = series.values();
    let per_window: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|&k| {
            let hw = HaarWindow::new(&values[k..k + window]);
            spectrum::q_spectra_from(&hw, range, qs)?
                .iter()
                .map(|s| {
                    Ok(hurst_from_slope(
                        robust_line(range, &s.values, &schemes)?.0.slope,
                    ))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let raw: Vec<Vec<f64>> = (0..qs.len())
        .map(|k| per_window.iter().map(|w| w[k]).collect())
        .collect();
    let reference = match qs.iter().position(|&q| q == 2.0) {
        Some(i) => mean(&raw[i]),
        None => {
            // no q = 2 curve requested: compute it for the reference level
            let h2 = starts
                .par_iter()
                .map(|&k| generalized_hurst(&values[k..k + window], range, 2.0))
                .collect::<Result<Vec<f64>>>()?;
            mean(&h2)
        }
    };
    let offsets: Vec<f64> = raw.iter().map(|c| reference - mean(c)).collect();
    let centered = raw
        .iter()
        .zip(&offsets)
        .map(|(c, o)| c.iter().map(|v| v + o).collect())
        .collect();
    let (centers, center_dates) = starts
        .iter()
        .map(|&k| center_of(series.dates(), k, window))
        .unzip();
    Ok(GeneralizedHurstTrack {
        window,
        step,
        qs: qs.to_vec(),
        starts,
        centers,
        center_dates,
        raw,
        offsets,
        centered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::model_spectrum;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn model(h: f64, s: f64, range: InertialRange) -> ScaleSpectrum {
        ScaleSpectrum {
            range,
            values: range.scales().map(|j| model_spectrum(h, s, j)).collect(),
            counts: vec![1; range.len()],
            window_len: 2 * range.last(),
        }
    }

    /// Textbook `(X^T W X)^{-1} X^T W y` by Gaussian elimination with
    /// partial pivoting on the assembled normal equations.
    fn oracle(x: &[f64], y: &[f64], w: &[f64]) -> (f64, f64) {
        let rows: Vec<[f64; 2]> = x.iter().map(|&v| [1.0, v]).collect();
        let mut a = [[0.0f64; 3]; 2];
        for ((r, &yi), &wi) in rows.iter().zip(y).zip(w) {
            for p in 0..2 {
                for q in 0..2 {
                    a[p][q] += r[p] * wi * r[q];
                }
                a[p][2] += r[p] * wi * yi;
            }
        }
        if a[1][0].abs() > a[0][0].abs() {
            a.swap(0, 1);
        }
        let f = a[1][0] / a[0][0];
        let top = a[0];
        for (x, t) in a[1].iter_mut().zip(top) {
            *x -= f * t;
        }
        let b1 = a[1][2] / a[1][1];
        let b0 = (a[0][2] - a[0][1] * b1) / a[0][0];
        (b0, b1)
    }

    #[test]
    fn exact_model_any_weighting() {
        let r = InertialRange::new(2, 40, 80).unwrap();
        let spec = model(0.7, 2.0, r);
        let want_c = (4.0 * spectrum::scaling_fn(0.7)).log2();
        for s in [WeightScheme::R1, WeightScheme::R3] {
            let f = gls_fit(&spec, &s).unwrap();
            assert_relative_eq!(f.slope, 2.4, epsilon = 1e-12);
            assert_relative_eq!(f.intercept, want_c, epsilon = 1e-12);
        }
    }

    #[test]
    fn white_noise_boundary() {
        let r = InertialRange::new(2, 20, 40).unwrap();
        let spec = ScaleSpectrum {
            range: r,
            values: r.scales().map(|j| 0.3 * (2 * j) as f64).collect(),
            counts: vec![1; r.len()],
            window_len: 40,
        };
        let f = gls_fit(&spec, &WeightScheme::R1).unwrap();
        assert_relative_eq!(f.slope, 1.0, epsilon = 1e-12);
        let p = fit_power_law(&spec).unwrap();
        assert_relative_eq!(p.raw_hurst, 0.0, epsilon = 1e-12);
        assert_eq!(p.hurst, 0.05);
    }

    #[test]
    fn clamp_before_sigma() {
        let r = InertialRange::new(2, 20, 40).unwrap();
        // slope 0.9
        let spec = ScaleSpectrum {
            range: r,
            values: r.scales().map(|j| ((2 * j) as f64).powf(0.9)).collect(),
            counts: vec![1; r.len()],
            window_len: 40,
        };
        let p = fit_power_law(&spec).unwrap();
        assert_relative_eq!(p.raw_hurst, -0.05, epsilon = 1e-12);
        assert_eq!(p.hurst, 0.05);
        assert_relative_eq!(
            p.volatility,
            1.0 / spectrum::scaling_fn(0.05).sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn degenerate_spectrum() {
        let r = InertialRange::new(2, 5, 10).unwrap();
        let mut spec = model(0.5, 1.0, r);
        spec.values[2] = 0.0;
        assert!(matches!(
            gls_fit(&spec, &WeightScheme::R1),
            Err(Error::DegenerateSpectrum { j: 4 })
        ));
        assert!(matches!(
            fit_power_law(&spec),
            Err(Error::DegenerateSpectrum { .. })
        ));
    }

    #[test]
    fn diagonal_scheme_validation() {
        let r = InertialRange::new(2, 5, 10).unwrap();
        let spec = model(0.5, 1.0, r);
        assert!(gls_fit(&spec, &WeightScheme::Diagonal(vec![1.0; 3])).is_err());
        assert!(gls_fit(&spec, &WeightScheme::Diagonal(vec![1.0, 0.0, 1.0, 1.0])).is_err());
        let f = gls_fit(&spec, &WeightScheme::Diagonal(vec![1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_relative_eq!(f.slope, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn tie_prefers_first_scheme() {
        let r = InertialRange::new(2, 30, 60).unwrap();
        let p = fit_power_law(&model(0.3, 1.0, r)).unwrap();
        // identical up to rounding; R1 only loses on a strictly larger slope
        assert!(p.scheme == WeightScheme::R1 || p.scheme == WeightScheme::R3);
        let (_, s) = robust_line(
            r,
            &model(0.3, 1.0, r).values,
            &[WeightScheme::R1, WeightScheme::R1],
        )
        .unwrap();
        assert_eq!(s, WeightScheme::R1);
    }

    #[test]
    fn exact_inversion_grid() {
        let r = InertialRange::new(2, 182, 365).unwrap();
        for h in [0.1, 0.3, 0.5, 0.7, 0.9] {
            for s in [0.1, 1.0, 10.0] {
                let p = fit_power_law(&model(h, s, r)).unwrap();
                assert_relative_eq!(p.hurst, h, max_relative = 1e-10);
                assert_relative_eq!(p.volatility, s, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn volatility_rescaling() {
        let fit = PowerLawFit {
            hurst: 0.6,
            raw_hurst: 0.6,
            volatility: 0.05,
            intercept: 0.0,
            slope: 2.2,
            scheme: WeightScheme::R1,
        };
        assert_eq!(rescale_volatility(&fit, 1.0), 0.05);
        assert_relative_eq!(
            rescale_volatility(&fit, 365.0),
            0.05 * 365f64.powf(0.6),
            epsilon = 1e-12
        );
        assert!((rescale_volatility(&fit, 365.0) - 1.72).abs() < 0.01);
        let half = PowerLawFit { hurst: 0.5, ..fit };
        assert_relative_eq!(rescale_volatility(&half, 49.0), 0.35, epsilon = 1e-12);
    }

    #[test]
    fn ramp_is_q_independent() {
        let a: Vec<f64> = (0..64).map(|i| 0.1 * i as f64).collect();
        let r = InertialRange::default_for(64).unwrap();
        let h2 = generalized_hurst(&a, r, 2.0).unwrap();
        for q in [0.25, 0.5, 1.0, 3.0, 4.0] {
            assert_relative_eq!(generalized_hurst(&a, r, q).unwrap(), h2, epsilon = 1e-10);
        }
        // S_j = c j^3: slope in log2(2j) is 3
        assert_relative_eq!(h2, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn rolling_geometry() {
        let v: Vec<f64> = (0..40).map(|i| ((i * 7919) % 97) as f64 / 97.0).collect();
        let s = LogPriceSeries::from_values("x", v).unwrap();
        let t = rolling_estimate(&s, 20, 3, &EstimatorConfig::default()).unwrap();
        assert_eq!(t.points.len(), 7);
        assert_eq!(t.points[0].center, 9.5);
        assert_eq!(t.points[1].start, 3);
        assert!(t.points.windows(2).all(|w| w[0].center < w[1].center));
        assert!(matches!(
            rolling_estimate(&s, 41, 1, &EstimatorConfig::default()),
            Err(Error::WindowExceedsSeries {
                window: 41,
                len: 40
            })
        ));
        assert!(rolling_estimate(&s, 5, 1, &EstimatorConfig::default()).is_err());
    }

    #[test]
    fn single_q_track_is_uncentered() {
        let v: Vec<f64> = (0..60).map(|i| ((i * 7919) % 97) as f64 / 97.0).collect();
        let s = LogPriceSeries::from_values("x", v).unwrap();
        let t = generalized_hurst_track(&s, 30, 2, &[2.0], RangeRule::default()).unwrap();
        assert_eq!(t.offsets, vec![0.0]);
        assert_eq!(t.raw, t.centered);
        let track = rolling_estimate(&s, 30, 2, &EstimatorConfig::default()).unwrap();
        for (h, p) in t.raw[0].iter().zip(&track.points) {
            assert_eq!(*h, p.fit.raw_hurst);
        }
    }

    proptest! {
        #[test]
        fn gls_matches_oracle(noise in prop::collection::vec(-0.5f64..0.5, 3), h in 0.1f64..0.9, q in prop::sample::select(vec![1.0, 3.0, 2.0])) {
            let r = InertialRange::new(2, 4, 8).unwrap();
            let spec = ScaleSpectrum {
                range: r,
                values: r.scales().zip(&noise).map(|(j, e)| model_spectrum(h, 1.0, j) * e.exp2()).collect(),
                counts: vec![1; 3],
                window_len: 8,
            };
            let f = gls_fit(&spec, &WeightScheme::Power(q)).unwrap();
            let x: Vec<f64> = r.scales().map(|j| ((2 * j) as f64).log2()).collect();
            let y: Vec<f64> = spec.values.iter().map(|v| v.log2()).collect();
            let w: Vec<f64> = r.scales().map(|j| (j as f64).powf(-q)).collect();
            let (c, p) = oracle(&x, &y, &w);
            prop_assert!((f.intercept - c).abs() < 1e-10);
            prop_assert!((f.slope - p).abs() < 1e-10);
        }

        #[test]
        fn affine_invariance(v in prop::collection::vec(-1.0f64..1.0, 40..80), c in -20.0f64..20.0, lam in 0.2f64..5.0) {
            let cfg = EstimatorConfig::default();
            let base = fit_window(&v, &cfg).unwrap();
            let moved: Vec<f64> = v.iter().map(|x| lam * x + c).collect();
            let f = fit_window(&moved, &cfg).unwrap();
            prop_assert!((f.raw_hurst - base.raw_hurst).abs() < 1e-9);
            prop_assert_eq!(&f.scheme, &base.scheme);
            prop_assert!((f.volatility - lam * base.volatility).abs() < 1e-8 * lam * base.volatility);
        }
    }
}
