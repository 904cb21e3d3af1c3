//! Continuous Haar transform: detail and approximation coefficients, scale
//! spectra and the closed-form fBm model spectrum.
//!
//! A detail coefficient at span `j` is the normalized difference of two
//! adjacent length-`j` block sums,
//!
//! ```text
//! d_j(i) = (1/sqrt(2j)) * sum_{l<j} [a(i+l) - a(i+l+j)],   i = 0..M-2j
//! ```
//!
//! evaluated in O(1) each from a prefix-sum table.

use crate::error::{Error, Result};

/// Scale range `[first, last]` used for the power-law fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct InertialRange {
    first: usize,
    last: usize,
}

impl InertialRange {
    /// Requires `1 <= first < last <= window / 2`.
    pub fn new(first: usize, last: usize, window: usize) -> Result<Self> {
        if first < 1 || first >= last || last > window / 2 {
            return Err(Error::InvalidRange {
                first,
                last,
                window,
            });
        }
        Ok(Self { first, last })
    }

    /// `[2, window/2]`: every scale except the first.
    pub fn default_for(window: usize) -> Result<Self> {
        Self::new(2, window / 2, window)
    }

    pub fn first(&self) -> usize {
        self.first
    }

    pub fn last(&self) -> usize {
        self.last
    }

    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn scales(&self) -> std::ops::RangeInclusive<usize> {
        self.first..=self.last
    }
}

/// Prefix sums of a window, shifted by its first value.
///
/// The shift is invisible to detail coefficients and keeps the partial sums
/// small when the window sits far from zero.
#[derive(Debug, Clone)]
pub struct HaarWindow {
    prefix: Vec<f64>,
}

impl HaarWindow {
    pub fn new(window: &[f64]) -> Self {
        let base = window.first().copied().unwrap_or(0.0);
        let mut prefix = Vec::with_capacity(window.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for &v in window {
            acc += v - base;
            prefix.push(acc);
        }
        Self { prefix }
    }

    pub fn len(&self) -> usize {
        self.prefix.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_scale(&self) -> usize {
        self.len() / 2
    }

    fn check(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.max_scale() {
            return Err(Error::ScaleOutOfRange {
                j,
                max: self.max_scale(),
            });
        }
        Ok(())
    }

    /// Number of detail coefficients at span `j`.
    pub fn count(&self, j: usize) -> usize {
        self.len() + 1 - 2 * j
    }

    /// Detail coefficients at span `j`.
    pub fn details(&self, j: usize) -> Result<impl Iterator<Item = f64> + '_> {
        self.check(j)?;
        let norm = 1.0 / ((2 * j) as f64).sqrt();
        let p = &self.prefix;
        Ok((0..self.count(j)).map(move |i| (2.0 * p[i + j] - p[i] - p[i + 2 * j]) * norm))
    }

    /// Mean of squared detail coefficients at span `j`.
    pub fn energy(&self, j: usize) -> Result<f64> {
        self.check(j)?;
        let p = &self.prefix;
        let n = self.count(j);
        let mut acc = 0.0;
        for i in 0..n {
            let d = 2.0 * p[i + j] - p[i] - p[i + 2 * j];
            acc += d * d;
        }
        Ok(acc / (2 * j) as f64 / n as f64)
    }

    /// `[(1/N_j) sum |d_j|^q]^(2/q)`.
    pub fn q_energy(&self, j: usize, q: f64) -> Result<f64> {
        check_q(q)?;
        if q == 2.0 {
            return self.energy(j);
        }
        let n = self.count(j) as f64;
        let pow = AbsPow::new(q);
        let sum: f64 = self.details(j)?.map(|d| pow.apply(d)).sum();
        Ok((sum / n).powf(2.0 / q))
    }
}

fn check_q(q: f64) -> Result<()> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::InvalidMomentOrder(q));
    }
    Ok(())
}

/// `|x|^q` with exact fast paths for the moment orders used in practice.
#[derive(Debug, Clone, Copy)]
enum AbsPow {
    Quarter,
    Half,
    ThreeQuarters,
    One,
    Two,
    Three,
    Four,
    General(f64),
}

impl AbsPow {
    fn new(q: f64) -> Self {
        match q {
            0.25 => AbsPow::Quarter,
            0.5 => AbsPow::Half,
            0.75 => AbsPow::ThreeQuarters,
            1.0 => AbsPow::One,
            2.0 => AbsPow::Two,
            3.0 => AbsPow::Three,
            4.0 => AbsPow::Four,
            x => AbsPow::General(x),
        }
    }

    #[inline]
    fn apply(self, x: f64) -> f64 {
        let a = x.abs();
        match self {
            AbsPow::Quarter => a.sqrt().sqrt(),
            AbsPow::Half => a.sqrt(),
            AbsPow::ThreeQuarters => {
                let s = a.sqrt();
                s * s.sqrt()
            }
            AbsPow::One => a,
            AbsPow::Two => a * a,
            AbsPow::Three => a * a * a,
            AbsPow::Four => {
                let s = a * a;
                s * s
            }
            AbsPow::General(q) => a.powf(q),
        }
    }
}

/// Detail coefficients of `window` at span `j`.
pub fn detail_coeffs(window: &[f64], j: usize) -> Result<Vec<f64>> {
    let hw = HaarWindow::new(window);
    let out = hw.details(j)?.collect();
    Ok(out)
}

/// Non-overlapping block means; a trailing partial block is dropped.
pub fn approx_coeffs(series: &[f64], block: usize) -> Result<Vec<f64>> {
    if block == 0 || block > series.len() {
        return Err(Error::param(
            "block",
            format!("{block} must lie in 1..={}", series.len()),
        ));
    }
    if block == 1 {
        return Ok(series.to_vec());
    }
    Ok(series
        .chunks_exact(block)
        .map(|c| c.iter().sum::<f64>() / block as f64)
        .collect())
}

/// Mean-square detail energies `S_j` over an inertial range.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScaleSpectrum {
    pub range: InertialRange,
    pub values: Vec<f64>,
    pub counts: Vec<usize>,
    pub window_len: usize,
}

impl ScaleSpectrum {
    /// `(j, S_j, N_j)` triples.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64, usize)> + '_ {
        self.range
            .scales()
            .zip(self.values.iter().copied())
            .zip(self.counts.iter().copied())
            .map(|((j, s), n)| (j, s, n))
    }
}

/// Generalized q-moment spectrum `S_j(q)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct QSpectrum {
    pub q: f64,
    pub range: InertialRange,
    pub values: Vec<f64>,
}

fn check_window(window: &[f64], range: &InertialRange) -> Result<()> {
    if range.last() > window.len() / 2 {
        return Err(Error::InvalidRange {
            first: range.first(),
            last: range.last(),
            window: window.len(),
        });
    }
    Ok(())
}

pub fn scale_spectrum(window: &[f64], range: InertialRange) -> Result<ScaleSpectrum> {
    check_window(window, &range)?;
    spectrum_from(&HaarWindow::new(window), range)
}

/// Same as [`scale_spectrum`] on an already-built prefix table.
pub fn spectrum_from(hw: &HaarWindow, range: InertialRange) -> Result<ScaleSpectrum> {
    let values = range
        .scales()
        .map(|j| hw.energy(j))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScaleSpectrum {
        range,
        counts: range.scales().map(|j| hw.count(j)).collect(),
        values,
        window_len: hw.len(),
    })
}

pub fn q_spectrum(window: &[f64], range: InertialRange, q: f64) -> Result<QSpectrum> {
    check_q(q)?;
    check_window(window, &range)?;
    q_spectrum_from(&HaarWindow::new(window), range, q)
}

pub fn q_spectrum_from(hw: &HaarWindow, range: InertialRange, q: f64) -> Result<QSpectrum> {
    Ok(QSpectrum {
        q,
        range,
        values: range
            .scales()
            .map(|j| hw.q_energy(j, q))
            .collect::<Result<Vec<_>>>()?,
    })
}

/// Several moment orders at once, sharing one pass over the coefficients per
/// scale.
pub fn q_spectra_from(hw: &HaarWindow, range: InertialRange, qs: &[f64]) -> Result<Vec<QSpectrum>> {
    for &q in qs {
        check_q(q)?;
    }
    let pows: Vec<AbsPow> = qs.iter().map(|&q| AbsPow::new(q)).collect();
    let mut out: Vec<QSpectrum> = qs
        .iter()
        .map(|&q| QSpectrum {
            q,
            range,
            values: Vec::with_capacity(range.len()),
        })
        .collect();
    let mut sums = vec![0.0; qs.len()];
    for j in range.scales() {
        if hw.count(j) == 0 || j > hw.max_scale() {
            return Err(Error::ScaleOutOfRange {
                j,
                max: hw.max_scale(),
            });
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for d in hw.details(j)? {
            for (s, p) in sums.iter_mut().zip(&pows) {
                *s += p.apply(d);
            }
        }
        let n = hw.count(j) as f64;
        for (k, spec) in out.iter_mut().enumerate() {
            let v = if qs[k] == 2.0 {
                hw.energy(j)?
            } else {
                (sums[k] / n).powf(2.0 / qs[k])
            };
            spec.values.push(v);
        }
    }
    Ok(out)
}

/// `h(H) = (1 - 2^{-2H}) / ((2H+2)(2H+1))`.
pub fn scaling_fn(h: f64) -> f64 {
    (1.0 - (-2.0 * h).exp2()) / ((2.0 * h + 2.0) * (2.0 * h + 1.0))
}

/// Expected `S_j` for Haar-averaged fBm observations: `s^2 h(H) (2j)^{2H+1}`.
pub fn model_spectrum(h: f64, s: f64, j: usize) -> f64 {
    s * s * scaling_fn(h) * ((2 * j) as f64).powf(2.0 * h + 1.0)
}

/// Correlation of consecutive fBm increments, `2^{2H-1} - 1`.
pub fn consecutive_return_corr(h: f64) -> f64 {
    (2.0 * h - 1.0).exp2() - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Direct double loop, no prefix sums.
    fn naive_details(a: &[f64], j: usize) -> Vec<f64> {
        let m = a.len();
        (0..=m - 2 * j)
            .map(|i| {
                let mut s = 0.0;
                for l in 0..j {
                    s += a[l + i] - a[l + i + j];
                }
                s / ((2 * j) as f64).sqrt()
            })
            .collect()
    }

    #[test]
    fn constant_window_has_no_detail() {
        let a = vec![3.7; 40];
        for j in 1..=20 {
            assert!(detail_coeffs(&a, j).unwrap().iter().all(|&d| d == 0.0));
        }
        let s = scale_spectrum(&a, InertialRange::new(1, 20, 40).unwrap()).unwrap();
        assert!(s.values.iter().all(|&v| v == 0.0));
        let q = q_spectrum(&a, InertialRange::new(1, 20, 40).unwrap(), 0.5).unwrap();
        assert!(q.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ramp_details() {
        let a: Vec<f64> = (0..64).map(|i| i as f64).collect();
        for j in 1..=32 {
            let want = -(j as f64).powf(1.5) / 2f64.sqrt();
            for d in detail_coeffs(&a, j).unwrap() {
                assert_relative_eq!(d, want, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn short_alternating_window() {
        let d = detail_coeffs(&[0.0, 1.0, 0.0, 1.0], 1).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(d.len(), 3);
        for (x, y) in d.iter().zip([-r, r, -r]) {
            assert_relative_eq!(*x, y, epsilon = 1e-15);
        }
    }

    #[test]
    fn scale_bounds() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!(matches!(
            detail_coeffs(&a, 0),
            Err(Error::ScaleOutOfRange { .. })
        ));
        assert!(matches!(
            detail_coeffs(&a, 3),
            Err(Error::ScaleOutOfRange { .. })
        ));
        assert_eq!(detail_coeffs(&a, 2).unwrap().len(), 2);
        assert!(InertialRange::new(2, 2, 10).is_err());
        assert!(InertialRange::new(0, 3, 10).is_err());
        assert!(InertialRange::new(2, 6, 10).is_err());
        assert!(InertialRange::new(2, 5, 10).is_ok());
        assert!(scale_spectrum(&a, InertialRange::new(1, 3, 6).unwrap()).is_err());
    }

    #[test]
    fn approx_examples() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(approx_coeffs(&s, 1).unwrap(), s.to_vec());
        assert_eq!(approx_coeffs(&s, 2).unwrap(), vec![1.5, 3.5]);
        assert_eq!(approx_coeffs(&[2.5; 9], 4).unwrap(), vec![2.5, 2.5]);
        assert!(approx_coeffs(&s, 5).is_err());
        assert!(approx_coeffs(&s, 0).is_err());
    }

    #[test]
    fn ramp_spectrum_is_cubic() {
        let a: Vec<f64> = (0..101).map(|i| 0.3 * i as f64 - 2.0).collect();
        let r = InertialRange::new(1, 50, 101).unwrap();
        let s = scale_spectrum(&a, r).unwrap();
        for (j, v, n) in s.iter() {
            let j = j as f64;
            assert_relative_eq!(v, 0.09 * j * j * j / 2.0, max_relative = 1e-12);
            assert_eq!(n, 101 - 2 * j as usize + 1);
        }
        for q in [0.25, 0.5, 1.0, 1.7, 3.0, 4.0] {
            let sq = q_spectrum(&a, r, q).unwrap();
            for (j, v) in r.scales().zip(&sq.values) {
                let j = j as f64;
                assert_relative_eq!(*v, 0.09 * j * j * j / 2.0, max_relative = 1e-11);
            }
        }
    }

    #[test]
    fn q_two_is_bit_identical() {
        let a: Vec<f64> = (0..200).map(|i| ((i * 37 % 101) as f64).sin()).collect();
        let r = InertialRange::default_for(200).unwrap();
        let s = scale_spectrum(&a, r).unwrap();
        let q = q_spectrum(&a, r, 2.0).unwrap();
        assert_eq!(s.values, q.values);
        let many = q_spectra_from(&HaarWindow::new(&a), r, &[0.5, 2.0, 3.0]).unwrap();
        assert_eq!(many[1].values, s.values);
        let single = q_spectrum(&a, r, 3.0).unwrap();
        for (x, y) in many[2].values.iter().zip(&single.values) {
            assert_relative_eq!(*x, *y, max_relative = 1e-13);
        }
    }

    #[test]
    fn bad_moment_order() {
        let a = [0.0; 10];
        let r = InertialRange::new(1, 5, 10).unwrap();
        for q in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                q_spectrum(&a, r, q),
                Err(Error::InvalidMomentOrder(_))
            ));
        }
    }

    #[test]
    fn model_values() {
        assert_relative_eq!(scaling_fn(0.5), 1.0 / 12.0, epsilon = 1e-16);
        assert_relative_eq!(model_spectrum(0.5, 1.0, 1), 1.0 / 3.0, epsilon = 1e-15);
        for h in [0.2, 0.5, 0.83] {
            let l = |j: usize| model_spectrum(h, 1.7, j).log2();
            let slope = (l(16) - l(4)) / (32f64.log2() - 8f64.log2());
            assert_relative_eq!(slope, 2.0 * h + 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn return_correlation() {
        assert_eq!(consecutive_return_corr(0.5), 0.0);
        assert_relative_eq!(
            consecutive_return_corr(0.6),
            0.148_698_354_997_035,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            consecutive_return_corr(0.4),
            -0.129_449_436_703_875_9,
            epsilon = 1e-12
        );
    }

    proptest! {
        #[test]
        fn prefix_matches_naive(a in prop::collection::vec(-5.0f64..5.0, 2..120), jr in 0.0f64..1.0) {
            let jmax = a.len() / 2;
            let j = 1 + ((jr * jmax as f64) as usize).min(jmax - 1);
            let fast = detail_coeffs(&a, j).unwrap();
            let slow = naive_details(&a, j);
            prop_assert_eq!(fast.len(), slow.len());
            for (x, y) in fast.iter().zip(&slow) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }

        #[test]
        fn shift_and_scale(a in prop::collection::vec(-3.0f64..3.0, 12..80), c in -50.0f64..50.0, lam in 0.1f64..10.0) {
            let r = InertialRange::default_for(a.len()).unwrap();
            let base = scale_spectrum(&a, r).unwrap();
            let shifted: Vec<f64> = a.iter().map(|x| x + c).collect();
            let scaled: Vec<f64> = a.iter().map(|x| x * lam).collect();
            let sh = scale_spectrum(&shifted, r).unwrap();
            let sc = scale_spectrum(&scaled, r).unwrap();
            for k in 0..base.values.len() {
                let b = base.values[k];
                prop_assert!((sh.values[k] - b).abs() <= 1e-9 * (1.0 + b));
                prop_assert!((sc.values[k] - lam * lam * b).abs() <= 1e-9 * (1.0 + lam * lam * b));
            }
            for q in [0.5, 3.0] {
                let bq = q_spectrum(&a, r, q).unwrap();
                let sq = q_spectrum(&scaled, r, q).unwrap();
                for k in 0..bq.values.len() {
                    let b = bq.values[k];
                    prop_assert!((sq.values[k] - lam * lam * b).abs() <= 1e-9 * (1.0 + lam * lam * b));
                }
            }
        }
    }
}
