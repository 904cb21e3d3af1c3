//! Regime segmentation by minimizing the total spectral residual.
//!
//! Each segment is fitted independently with inertial range `[2, M_q/2]`. Its
//! residual is `sum_j (1/j) (log2 S_j - log2 model_j)^2` against the model
//! spectrum at the fitted parameters, and the partition cost is the plain sum
//! over segments. The search is exhaustive on a coarse grid of change points,
//! then exhaustive on a fine grid within one coarse cell of each coarse
//! optimum.

use std::collections::{BTreeSet, HashMap};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{self, PowerLawFit};
use crate::ingest::LogPriceSeries;
use crate::spectrum::{self, InertialRange, ScaleSpectrum};

/// Minimum segment length accepted by any configuration.
pub const MIN_SEGMENT_FLOOR: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SearchConfig {
    pub segments: usize,
    pub coarse: usize,
    pub fine: usize,
    pub min_len: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            segments: 4,
            coarse: 183,
            fine: 5,
            min_len: 30,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InfeasibleSegmentation(m));
        if self.segments == 0 {
            return bad("need at least one segment".into());
        }
        if self.min_len < MIN_SEGMENT_FLOOR {
            return bad(format!(
                "minimum length {} < {MIN_SEGMENT_FLOOR}",
                self.min_len
            ));
        }
        if self.coarse == 0 || self.fine == 0 || self.fine > self.coarse {
            return bad(format!(
                "grid sizes coarse={} fine={}",
                self.coarse, self.fine
            ));
        }
        if n < self.segments * self.min_len {
            return bad(format!(
                "{} samples cannot hold {} segments of at least {}",
                n, self.segments, self.min_len
            ));
        }
        Ok(())
    }
}

/// Residual contribution and fit of one segment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentFit {
    pub start: usize,
    pub len: usize,
    pub fit: PowerLawFit,
    pub residual: f64,
}

/// Per-scale spectrum of a segment alongside its fitted model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentSpectrum {
    pub scales: Vec<usize>,
    pub empirical: Vec<f64>,
    pub model: Vec<f64>,
}

pub fn fit_segment(values: &[f64], start: usize, len: usize) -> Result<SegmentFit> {
    let (fit, residual, _) = segment_detail(&values[start..start + len])?;
    Ok(SegmentFit {
        start,
        len,
        fit,
        residual,
    })
}

fn segment_detail(seg: &[f64]) -> Result<(PowerLawFit, f64, SegmentSpectrum)> {
    let range = InertialRange::default_for(seg.len())?;
    let spec = spectrum::scale_spectrum(seg, range)?;
    let fit = estimator::fit_power_law(&spec)?;
    let residual = spectral_residual(&spec, &fit);
    let model = range.scales().map(|j| fit.model_log2(j).exp2()).collect();
    Ok((
        fit,
        residual,
        SegmentSpectrum {
            scales: range.scales().collect(),
            empirical: spec.values,
            model,
        },
    ))
}

/// `sum_j (1/j) (log2 S_j - log2 model_j)^2` against a fitted power law.
pub fn spectral_residual(spec: &ScaleSpectrum, fit: &PowerLawFit) -> f64 {
    spec.iter()
        .map(|(j, s, _)| {
            let e = s.log2() - fit.model_log2(j);
            e * e / j as f64
        })
        .sum()
}

/// Model spectrum comparison for one segment.
pub fn segment_spectrum(values: &[f64], start: usize, len: usize) -> Result<SegmentSpectrum> {
    Ok(segment_detail(&values[start..start + len])?.2)
}

fn check_lengths(n: usize, lengths: &[usize], min_len: usize) -> Result<()> {
    if lengths.is_empty() {
        return Err(Error::InfeasibleSegmentation("no segments".into()));
    }
    let total: usize = lengths.iter().sum();
    if total != n {
        return Err(Error::LengthMismatch {
            left: total,
            right: n,
        });
    }
    if let Some(&len) = lengths
        .iter()
        .find(|&&l| l < min_len.max(MIN_SEGMENT_FLOOR))
    {
        return Err(Error::SegmentTooShort {
            len,
            min: min_len.max(MIN_SEGMENT_FLOOR),
        });
    }
    Ok(())
}

/// Total spectral residual of a partition given by its segment lengths.
pub fn segment_residual(values: &[f64], lengths: &[usize], min_len: usize) -> Result<f64> {
    check_lengths(values.len(), lengths, min_len)?;
    let mut start = 0;
    let mut total = 0.0;
    for &len in lengths {
        total += fit_segment(values, start, len)?.residual;
        start += len;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    pub lengths: Vec<usize>,
    /// Index of the first sample of every segment after the first.
    pub change_points: Vec<usize>,
    /// Dates of `change_points`.
    pub change_dates: Vec<NaiveDate>,
    pub segments: Vec<SegmentFit>,
    pub residual: f64,
}

/// One evaluated candidate, recorded when auditing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Visit {
    pub change_points: Vec<usize>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    pub partition: Partition,
    pub coarse_change_points: Vec<usize>,
    pub coarse_residual: f64,
    pub candidates_evaluated: usize,
    /// Every candidate with its residual; empty unless auditing was requested.
    pub visited: Vec<Visit>,
}

/// Memoized per-segment residuals keyed by `(start, end)`.
struct CostTable {
    costs: HashMap<(usize, usize), f64>,
}

impl CostTable {
    fn build(values: &[f64], segments: BTreeSet<(usize, usize)>) -> Self {
        let costs = segments
            .into_par_iter()
            .map(|(a, b)| {
                // degenerate segments never win
                let c = segment_detail(&values[a..b]).map_or(f64::INFINITY, |d| d.1);
                ((a, b), c)
            })
            .collect();
        Self { costs }
    }

    fn total(&self, bounds: &[usize]) -> f64 {
        bounds.windows(2).map(|w| self.costs[&(w[0], w[1])]).sum()
    }
}

/// Enumerates increasing change-point tuples, one from each candidate list,
/// with every segment at least `min_len` long. Lexicographic order.
fn combos(candidates: &[Vec<usize>], n: usize, min_len: usize) -> Vec<Vec<usize>> {
    fn rec(
        cands: &[Vec<usize>],
        n: usize,
        min_len: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let depth = cur.len();
        if depth == cands.len() {
            if n - cur.last().copied().unwrap_or(0) >= min_len {
                out.push(cur.clone());
            }
            return;
        }
        let prev = cur.last().copied().unwrap_or(0);
        let remaining = cands.len() - depth;
        for &c in &cands[depth] {
            if c < prev + min_len {
                continue;
            }
            if c + remaining * min_len > n {
                break;
            }
            cur.push(c);
            rec(cands, n, min_len, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(candidates, n, min_len, &mut Vec::new(), &mut out);
    out
}

fn bounds_of(cps: &[usize], n: usize) -> Vec<usize> {
    let mut b = Vec::with_capacity(cps.len() + 2);
    b.push(0);
    b.extend_from_slice(cps);
    b.push(n);
    b
}

/// Best candidate by residual; ties go to the lexicographically earliest.
fn best_of(
    values: &[f64],
    cands: &[Vec<usize>],
    audit: &mut Vec<Visit>,
    keep: bool,
) -> Option<(Vec<usize>, f64)> {
    let n = values.len();
    let mut needed = BTreeSet::new();
    for c in cands {
        let b = bounds_of(c, n);
        for w in b.windows(2) {
            needed.insert((w[0], w[1]));
        }
    }
    let table = CostTable::build(values, needed);
    let scored: Vec<f64> = cands
        .par_iter()
        .map(|c| table.total(&bounds_of(c, n)))
        .collect();
    if keep {
        audit.extend(cands.iter().zip(&scored).map(|(c, &r)| Visit {
            change_points: c.clone(),
            residual: r,
        }));
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, &r) in scored.iter().enumerate() {
        if r.is_finite() && best.is_none_or(|(_, b)| r < b) {
            best = Some((i, r));
        }
    }
    best.map(|(i, r)| (cands[i].clone(), r))
}

fn build_partition(series: &LogPriceSeries, cps: &[usize]) -> Result<Partition> {
    let values = series.values();
    let bounds = bounds_of(cps, values.len());
    let segments = bounds
        .windows(2)
        .map(|w| fit_segment(values, w[0], w[1] - w[0]))
        .collect::<Result<Vec<_>>>()?;
    Ok(Partition {
        lengths: segments.iter().map(|s| s.len).collect(),
        change_points: cps.to_vec(),
        change_dates: cps.iter().map(|&c| series.dates()[c]).collect(),
        residual: segments.iter().map(|s| s.residual).sum(),
        segments,
    })
}

pub fn search_partition(series: &LogPriceSeries, cfg: &SearchConfig) -> Result<Partition> {
    Ok(search_partition_audited(series, cfg, false)?.partition)
}

/// Two-level exhaustive search. With `audit` every evaluated candidate is
/// returned in the report.
pub fn search_partition_audited(
    series: &LogPriceSeries,
    cfg: &SearchConfig,
    audit: bool,
) -> Result<SearchReport> {
    let values = series.values();
    let n = values.len();
    cfg.validate(n)?;
    let k = cfg.segments - 1;
    let mut visited = Vec::new();

    if k == 0 {
        let partition = build_partition(series, &[])?;
        if audit {
            visited.push(Visit {
                change_points: vec![],
                residual: partition.residual,
            });
        }
        return Ok(SearchReport {
            coarse_change_points: vec![],
            coarse_residual: partition.residual,
            candidates_evaluated: 1,
            visited,
            partition,
        });
    }

    let grid: Vec<usize> = (1..)
        .map(|i| i * cfg.coarse)
        .take_while(|&c| c + cfg.min_len <= n)
        .filter(|&c| c >= cfg.min_len)
        .collect();
    let coarse_cands = combos(&vec![grid; k], n, cfg.min_len);
    let mut evaluated = coarse_cands.len();
    let (coarse_best, coarse_residual) = best_of(values, &coarse_cands, &mut visited, audit)
        .ok_or_else(|| Error::InfeasibleSegmentation("no admissible coarse partition".into()))?;

    let fine: Vec<Vec<usize>> = coarse_best
        .iter()
        .map(|&c| {
            let lo = c.saturating_sub(cfg.coarse).max(cfg.min_len);
            let hi = (c + cfg.coarse).min(n - cfg.min_len);
            // align the fine grid on the coarse point so it is always a candidate
            let first = c - ((c - lo) / cfg.fine) * cfg.fine;
            (first..=hi).step_by(cfg.fine).collect()
        })
        .collect();
    let fine_cands = combos(&fine, n, cfg.min_len);
    evaluated += fine_cands.len();
    let (best, _) = best_of(values, &fine_cands, &mut visited, audit)
        .ok_or_else(|| Error::InfeasibleSegmentation("no admissible refined partition".into()))?;

    Ok(SearchReport {
        partition: build_partition(series, &best)?,
        coarse_change_points: coarse_best,
        coarse_residual,
        candidates_evaluated: evaluated,
        visited,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn series(values: Vec<f64>) -> LogPriceSeries {
        LogPriceSeries::from_values("s", values).unwrap()
    }

    #[test]
    fn perfect_fit_contributes_nothing() {
        let range = InertialRange::new(2, 100, 200).unwrap();
        let values = range
            .scales()
            .map(|j| spectrum::model_spectrum(0.63, 0.02, j))
            .collect();
        let spec = ScaleSpectrum {
            range,
            values,
            counts: vec![1; range.len()],
            window_len: 200,
        };
        let fit = estimator::fit_power_law(&spec).unwrap();
        assert!(spectral_residual(&spec, &fit) < 1e-20);
    }

    #[test]
    fn residual_matches_direct_sum() {
        let v = synth::sample_fbm_observations(&synth::FbmSpec::new(0.55, 1.0, 120, 9)).unwrap();
        let (a, b) = (&v[..50], &v[50..]);
        let mut expect = 0.0;
        for seg in [a, b] {
            let fit = estimator::fit_window(seg, &Default::default()).unwrap();
            for j in 2..=seg.len() / 2 {
                let s = spectrum::HaarWindow::new(seg).energy(j).unwrap();
                let m = spectrum::model_spectrum(fit.hurst, fit.volatility, j);
                expect += (s.log2() - m.log2()).powi(2) / j as f64;
            }
        }
        let got = segment_residual(&v, &[50, 70], 30).unwrap();
        assert!(
            (got - expect).abs() <= 1e-12 * expect.max(1.0),
            "{got} vs {expect}"
        );
    }

    #[test]
    fn single_segment_equals_global_fit() {
        let v = synth::sample_fbm_observations(&synth::FbmSpec::new(0.6, 1.0, 400, 2)).unwrap();
        let s = series(v.clone());
        let p = search_partition(
            &s,
            &SearchConfig {
                segments: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(p.lengths, vec![400]);
        assert_eq!(p.residual, segment_residual(&v, &[400], 30).unwrap());
        let global = estimator::fit_window(&v, &Default::default()).unwrap();
        assert_eq!(p.segments[0].fit, global);
    }

    #[test]
    fn residual_errors() {
        let v = vec![0.0; 100];
        assert!(matches!(
            segment_residual(&v, &[50, 40], 30),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            segment_residual(&v, &[80, 20], 30),
            Err(Error::SegmentTooShort { len: 20, .. })
        ));
        assert!(matches!(
            segment_residual(&v, &[50, 50], 30),
            Err(Error::DegenerateSpectrum { .. })
        ));
    }

    #[test]
    fn infeasible_configs() {
        let s = series((0..100).map(|i| (i as f64).sin()).collect());
        for cfg in [
            SearchConfig {
                segments: 4,
                min_len: 30,
                ..Default::default()
            },
            SearchConfig {
                segments: 0,
                ..Default::default()
            },
            SearchConfig {
                segments: 2,
                min_len: 5,
                ..Default::default()
            },
            SearchConfig {
                segments: 2,
                coarse: 10,
                fine: 20,
                min_len: 30,
            },
        ] {
            assert!(
                matches!(
                    search_partition(&s, &cfg),
                    Err(Error::InfeasibleSegmentation(_))
                ),
                "{cfg:?}"
            );
        }
    }

    #[test]
    fn combos_respect_min_len_and_order() {
        let c = combos(&[vec![10, 20, 30], vec![10, 20, 30]], 45, 10);
        assert_eq!(c, vec![vec![10, 20], vec![10, 30], vec![20, 30]]);
        assert!(combos(&[vec![10, 20, 30], vec![10, 20, 30]], 35, 10).contains(&vec![10, 20]));
        assert!(!combos(&[vec![10, 20, 30], vec![10, 20, 30]], 35, 10).contains(&vec![20, 30]));
    }

    #[test]
    fn search_audit_and_determinism() {
        let v =
            synth::sample_regime_observations(&[(0.75, 1.0, 300), (0.3, 1.0, 300)], 11).unwrap();
        let s = series(v);
        let cfg = SearchConfig {
            segments: 2,
            coarse: 60,
            fine: 10,
            min_len: 30,
        };
        let rep = search_partition_audited(&s, &cfg, true).unwrap();
        assert_eq!(rep.visited.len(), rep.candidates_evaluated);
        for v in &rep.visited {
            assert!(rep.partition.residual <= v.residual + 1e-12);
        }
        assert!(rep.partition.residual <= rep.coarse_residual + 1e-12);
        let again = search_partition(&s, &cfg).unwrap();
        assert_eq!(again, rep.partition);
        assert_eq!(rep.partition.lengths.iter().sum::<usize>(), 600);
    }

    #[test]
    fn single_level_search_matches_brute_force() {
        let v = synth::sample_regime_observations(&[(0.7, 1.0, 240), (0.35, 1.0, 240)], 5).unwrap();
        let s = series(v.clone());
        let cfg = SearchConfig {
            segments: 3,
            coarse: 40,
            fine: 40,
            min_len: 40,
        };
        let got = search_partition(&s, &cfg).unwrap();
        let mut best = (f64::INFINITY, vec![]);
        for a in (40..480).step_by(40) {
            for b in (a + 40..=440).step_by(40) {
                let r = segment_residual(&v, &[a, b - a, 480 - b], 40).unwrap();
                if r < best.0 {
                    best = (r, vec![a, b]);
                }
            }
        }
        assert_eq!(got.change_points, best.1);
        assert!((got.residual - best.0).abs() < 1e-12);
    }
}
