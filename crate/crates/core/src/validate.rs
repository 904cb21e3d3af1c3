//! Monte Carlo self-check of the estimators on synthetic fBm.
//!
//! Every check draws its paths from seeds derived from one master seed, so a
//! report is reproducible bit for bit.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{self, EstimatorConfig, RangeRule};
use crate::ingest::LogPriceSeries;
use crate::regularize;
use crate::segment::{self, SearchConfig};
use crate::synth::{self, derive_seed, FbmSpec};

/// Moment orders of the flatness check.
pub const FLATNESS_QS: [f64; 7] = [0.25, 0.5, 0.75, 1.0, 2.0, 3.0, 4.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrecisionStats {
    pub hurst: f64,
    pub window: usize,
    pub trials: usize,
    pub mean: f64,
    pub bias: f64,
    pub std: f64,
    /// `std / mean`.
    pub rel_std: f64,
}

fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (m, 0.0);
    }
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

fn median(mut x: Vec<f64>) -> f64 {
    x.sort_by(f64::total_cmp);
    let n = x.len();
    if n % 2 == 1 {
        x[n / 2]
    } else {
        0.5 * (x[n / 2 - 1] + x[n / 2])
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    Ok(())
}

/// Bias and spread of the robust Hurst estimate on single fBm windows.
pub fn estimator_precision(
    hurst: f64,
    window: usize,
    trials: usize,
    seed: u64,
) -> Result<PrecisionStats> {
    check_trials(trials)?;
    let cfg = EstimatorConfig::default();
    let est = (0..trials)
        .into_par_iter()
        .map(|i| {
            let v = synth::sample_fbm_observations(&FbmSpec::new(
                hurst,
                1.0,
                window,
                derive_seed(seed, i as u64),
            ))?;
            Ok(estimator::fit_window(&v, &cfg)?.hurst)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, std) = mean_std(&est);
    Ok(PrecisionStats {
        hurst,
        window,
        trials,
        mean,
        bias: mean - hurst,
        std,
        rel_std: std / mean,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryStats {
    pub trials: usize,
    pub hits: usize,
    pub rate: f64,
    pub tolerance: usize,
    pub truth: Vec<usize>,
    /// Recovered change points per trial.
    pub found: Vec<Vec<usize>>,
}

/// Change-point recovery on glued fBm regimes `(hurst, length)` at unit volatility.
pub fn segmentation_recovery(
    regimes: &[(f64, usize)],
    trials: usize,
    tolerance: usize,
    seed: u64,
    cfg: &SearchConfig,
) -> Result<RecoveryStats> {
    check_trials(trials)?;
    let spec: Vec<(f64, f64, usize)> = regimes.iter().map(|&(h, n)| (h, 1.0, n)).collect();
    let truth: Vec<usize> = regimes
        .iter()
        .scan(0, |acc, r| {
            *acc += r.1;
            Some(*acc)
        })
        .take(regimes.len().saturating_sub(1))
        .collect();
    let cfg = SearchConfig {
        segments: regimes.len(),
        ..*cfg
    };
    let mut found = Vec::with_capacity(trials);
    for i in 0..trials {
        let v = synth::sample_regime_observations(&spec, derive_seed(seed, i as u64))?;
        let p = segment::search_partition(&LogPriceSeries::from_values("mc", v)?, &cfg)?;
        found.push(p.change_points);
    }
    let hits = found
        .iter()
        .filter(|cps| {
            cps.iter()
                .zip(&truth)
                .all(|(&a, &b)| a.abs_diff(b) <= tolerance)
        })
        .count();
    Ok(RecoveryStats {
        trials,
        hits,
        rate: hits as f64 / trials as f64,
        tolerance,
        truth,
        found,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatnessStats {
    pub paths: usize,
    pub window: usize,
    pub windows_per_path: usize,
    pub median_spread: f64,
}

/// Median post-centering spread of `H(q)` over [`FLATNESS_QS`] on fBm.
pub fn q_flatness(
    hurst: f64,
    window: usize,
    path_len: usize,
    step: usize,
    paths: usize,
    seed: u64,
) -> Result<FlatnessStats> {
    check_trials(paths)?;
    let per_path = (0..paths)
        .into_par_iter()
        .map(|i| {
            let v = synth::sample_fbm_observations(&FbmSpec::new(
                hurst,
                1.0,
                path_len,
                derive_seed(seed, i as u64),
            ))?;
            let s = LogPriceSeries::from_values("mc", v)?;
            Ok(estimator::generalized_hurst_track(
                &s,
                window,
                step,
                &FLATNESS_QS,
                RangeRule::default(),
            )?
            .spread())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let windows_per_path = per_path.first().map_or(0, Vec::len);
    Ok(FlatnessStats {
        paths,
        window,
        windows_per_path,
        median_spread: median(per_path.into_iter().flatten().collect()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularizationStats {
    pub paths: usize,
    pub len: usize,
    pub median_hurst: f64,
}

/// `x -> x^3` applied to Gaussian increments.
pub fn cubic_distortion(x: f64) -> f64 {
    x * x * x
}

/// Median global Hurst estimate of random walks with cubed Gaussian
/// increments after Gaussian regularization.
pub fn regularization_robustness(
    len: usize,
    paths: usize,
    seed: u64,
) -> Result<RegularizationStats> {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;
    check_trials(paths)?;
    let cfg = EstimatorConfig::default();
    let est = (0..paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
            let mut v = Vec::with_capacity(len);
            let mut acc = 0.0;
            v.push(acc);
            for _ in 1..len {
                acc += cubic_distortion(rng.sample::<f64, _>(StandardNormal));
                v.push(acc);
            }
            let reg = regularize::gaussianize_diffs(&LogPriceSeries::from_values("mc", v)?)?;
            Ok(estimator::fit_window(reg.series.values(), &cfg)?.hurst)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(RegularizationStats {
        paths,
        len,
        median_hurst: median(est),
    })
}

/// One pass/fail line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub low: f64,
    pub high: f64,
    pub pass: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, value: f64, low: f64, high: f64) -> Self {
        Self {
            name: name.into(),
            value,
            low,
            high,
            pass: value >= low && value <= high,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {:.4} in [{}, {}]",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.low,
            self.high
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub trials: usize,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count()
    }
}

/// Runs the whole suite. `trials` paths feed each precision check; the
/// segmentation check uses `trials / 10` and the flatness and regularization
/// checks `trials / 5` paths, each at least one.
pub fn run_validation(seed: u64, trials: usize) -> Result<ValidationReport> {
    check_trials(trials)?;
    let mut checks = Vec::new();
    let long = estimator_precision(0.6, 1168, trials, derive_seed(seed, 1))?;
    checks.push(Check::within("rel_std_H M=1168", long.rel_std, 0.05, 0.09));
    let short = estimator_precision(0.6, 226, trials, derive_seed(seed, 2))?;
    checks.push(Check::within("rel_std_H M=226", short.rel_std, 0.08, 0.13));
    checks.push(Check::within("bias_H M=226", short.bias, -0.05, -0.01));

    let rec = segmentation_recovery(
        &[(0.6, 1000), (0.45, 1000), (0.6, 1000)],
        (trials / 10).max(1),
        30,
        derive_seed(seed, 3),
        &SearchConfig::default(),
    )?;
    checks.push(Check::within(
        "segmentation_recovery_rate",
        rec.rate,
        0.9,
        1.0,
    ));

    let flat = q_flatness(
        0.6,
        365,
        1095,
        10,
        (trials / 5).max(1),
        derive_seed(seed, 4),
    )?;
    checks.push(Check::within(
        "median_spread_Hq",
        flat.median_spread,
        0.0,
        0.05,
    ));

    let reg = regularization_robustness(2000, (trials / 5).max(1), derive_seed(seed, 5))?;
    checks.push(Check::within(
        "median_H_regularized",
        reg.median_hurst,
        0.47,
        0.53,
    ));

    Ok(ValidationReport {
        seed,
        trials,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precision_is_deterministic() {
        let a = estimator_precision(0.6, 120, 4, 7).unwrap();
        let b = estimator_precision(0.6, 120, 4, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trials, 4);
        assert!((a.bias - (a.mean - 0.6)).abs() < 1e-15);
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(estimator_precision(0.6, 120, 0, 1).is_err());
        assert!(run_validation(1, 0).is_err());
    }

    #[test]
    fn recovery_bookkeeping() {
        let cfg = SearchConfig {
            coarse: 40,
            fine: 10,
            ..Default::default()
        };
        let r = segmentation_recovery(&[(0.6, 120), (0.4, 120)], 2, 500, 3, &cfg).unwrap();
        assert_eq!(r.truth, vec![120]);
        assert_eq!(r.found.len(), 2);
        assert_eq!(r.hits, 2);
        assert_eq!(r.rate, 1.0);
    }

    #[test]
    fn check_bounds_inclusive() {
        assert!(Check::within("x", 0.05, 0.05, 0.09).pass);
        assert!(!Check::within("x", 0.091, 0.05, 0.09).pass);
        assert!(Check::within("x", 0.07, 0.05, 0.09)
            .line()
            .starts_with("PASS x: 0.0700"));
    }

    #[test]
    fn flatness_and_regularization_run() {
        let f = q_flatness(0.6, 60, 100, 20, 2, 1).unwrap();
        assert_eq!(f.windows_per_path, 3);
        assert!(f.median_spread >= 0.0);
        let r = regularization_robustness(200, 2, 1).unwrap();
        assert!(r.median_hurst > 0.0 && r.median_hurst < 1.0);
    }
}
