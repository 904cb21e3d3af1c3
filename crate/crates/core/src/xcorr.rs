//! Scale-by-scale correlations between assets.

use chrono::{Datelike, NaiveDate};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{self, PriceSeries};
use crate::spectrum::{self, HaarWindow};

/// Log-price series cut to a common date range.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPanel {
    pub labels: Vec<String>,
    pub dates: Vec<NaiveDate>,
    pub series: Vec<Vec<f64>>,
}

impl AlignedPanel {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Rows whose dates fall in `[from, to]`.
    pub fn restrict(&self, from: NaiveDate, to: NaiveDate) -> Result<AlignedPanel> {
        let a = self.dates.partition_point(|d| *d < from);
        let b = self.dates.partition_point(|d| *d <= to);
        if a >= b {
            return Err(Error::EmptyIntersection);
        }
        Ok(AlignedPanel {
            labels: self.labels.clone(),
            dates: self.dates[a..b].to_vec(),
            series: self.series.iter().map(|s| s[a..b].to_vec()).collect(),
        })
    }
}

pub fn align(series: &[PriceSeries]) -> Result<AlignedPanel> {
    if series.len() < 2 {
        return Err(Error::param(
            "series",
            format!("need at least 2, got {}", series.len()),
        ));
    }
    let from = series
        .iter()
        .map(|s| s.dates()[0])
        .max()
        .ok_or(Error::EmptyInput)?;
    let to = series
        .iter()
        .map(|s| *s.dates().last().expect("non-empty"))
        .min()
        .ok_or(Error::EmptyInput)?;
    if from > to {
        return Err(Error::EmptyIntersection);
    }
    let cut = series
        .iter()
        .map(|s| s.between(from, to))
        .collect::<Result<Vec<_>>>()?;
    Ok(AlignedPanel {
        labels: cut.iter().map(|s| s.label().to_string()).collect(),
        dates: cut[0].dates().to_vec(),
        series: cut
            .iter()
            .map(|s| ingest::to_log(s).values().to_vec())
            .collect(),
    })
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::TooShort {
            required: 2,
            actual: x.len(),
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spans used for the difference coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum DiffLevels {
    /// Spans 1, 2, 3, 4.
    #[default]
    Literal,
    /// Spans 1, 2, 4, 8.
    Dyadic,
}

impl DiffLevels {
    pub fn spans(self) -> [usize; 4] {
        match self {
            DiffLevels::Literal => [1, 2, 3, 4],
            DiffLevels::Dyadic => [1, 2, 4, 8],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XcorrConfig {
    /// Approximation blocks are `2^j` for `j` in `0..=max_level`.
    pub max_level: u32,
    pub diff_levels: DiffLevels,
}

impl Default for XcorrConfig {
    fn default() -> Self {
        Self {
            max_level: 4,
            diff_levels: DiffLevels::Literal,
        }
    }
}

impl XcorrConfig {
    /// Fewest aligned samples a period needs.
    pub fn min_samples(&self) -> usize {
        (2usize << self.max_level).max(2 * self.diff_levels.spans()[3] + 1)
    }
}

/// Named date range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Period {
    pub name: String,
    pub from: NaiveDate,
    pub to: NaiveDate,
}

impl Period {
    pub fn year(y: i32) -> Self {
        Self {
            name: y.to_string(),
            from: NaiveDate::from_ymd_opt(y, 1, 1).expect("valid year"),
            to: NaiveDate::from_ymd_opt(y, 12, 31).expect("valid year"),
        }
    }

    /// Each calendar year touched by the panel.
    pub fn years_of(panel: &AlignedPanel) -> Vec<Period> {
        match (panel.dates.first(), panel.dates.last()) {
            (Some(a), Some(b)) => (a.year()..=b.year()).map(Period::year).collect(),
            _ => vec![],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoeffKind {
    Approx,
    Diff,
}

impl CoeffKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CoeffKind::Approx => "approx",
            CoeffKind::Diff => "diff",
        }
    }
}

/// One correlation coefficient.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleCorrelation {
    pub period: String,
    pub a: String,
    pub b: String,
    pub kind: CoeffKind,
    /// Block length for approximations, span for differences (samples).
    pub scale: usize,
    pub rho: f64,
}

pub type ScaleCorrelations = Vec<ScaleCorrelation>;

pub fn scale_correlations(
    panel: &AlignedPanel,
    periods: &[Period],
    cfg: &XcorrConfig,
) -> Result<ScaleCorrelations> {
    let mut out = Vec::new();
    let blocks: Vec<usize> = (0..=cfg.max_level).map(|j| 1usize << j).collect();
    let spans = cfg.diff_levels.spans();
    for period in periods {
        let sub = panel.restrict(period.from, period.to)?;
        let need = cfg.min_samples();
        if sub.len() < need {
            return Err(Error::TooShort {
                required: need,
                actual: sub.len(),
            });
        }
        let windows: Vec<HaarWindow> = sub.series.iter().map(|s| HaarWindow::new(s)).collect();
        for a in 0..sub.series.len() {
            for b in a + 1..sub.series.len() {
                let mut push = |kind, scale, rho| {
                    out.push(ScaleCorrelation {
                        period: period.name.clone(),
                        a: sub.labels[a].clone(),
                        b: sub.labels[b].clone(),
                        kind,
                        scale,
                        rho,
                    })
                };
                for &block in &blocks {
                    let x = spectrum::approx_coeffs(&sub.series[a], block)?;
                    let y = spectrum::approx_coeffs(&sub.series[b], block)?;
                    push(CoeffKind::Approx, block, pearson(&x, &y)?);
                }
                for &span in &spans {
                    let x: Vec<f64> = windows[a].details(span)?.collect();
                    let y: Vec<f64> = windows[b].details(span)?.collect();
                    push(CoeffKind::Diff, span, pearson(&x, &y)?);
                }
            }
        }
    }
    Ok(out)
}
