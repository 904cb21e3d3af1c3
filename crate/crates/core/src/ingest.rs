//! Price series loading and the log-price / return transforms.
//!
//! The series are modelled on a uniform daily grid. Missing calendar days are
//! an error unless the caller opts into forward-filling short gaps.

use std::io::{Read, Write};
use std::path::Path;

use chrono::{Days, NaiveDate, NaiveDateTime};

use crate::error::{Error, Result};

/// Largest number of consecutive missing days that `fill_gaps` will bridge.
pub const MAX_FILLED_GAP: i64 = 3;

/// First date used when a series has no calendar of its own (synthetic data).
pub fn synthetic_epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid epoch")
}

/// Dates `start, start+1d, ...` of length `n`.
pub fn daily_dates(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    (0..n).map(|i| start + Days::new(i as u64)).collect()
}

/// Positive prices on a uniform daily calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    label: String,
    dates: Vec<NaiveDate>,
    prices: Vec<f64>,
}

impl PriceSeries {
    /// Validates positivity, strict date ordering and daily spacing.
    pub fn new(label: impl Into<String>, dates: Vec<NaiveDate>, prices: Vec<f64>) -> Result<Self> {
        if dates.len() != prices.len() {
            return Err(Error::LengthMismatch {
                left: dates.len(),
                right: prices.len(),
            });
        }
        if prices.is_empty() {
            return Err(Error::EmptyInput);
        }
        for (i, &p) in prices.iter().enumerate() {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::NonPositivePrice {
                    line: i + 1,
                    price: p,
                });
            }
        }
        for (i, w) in dates.windows(2).enumerate() {
            let step = (w[1] - w[0]).num_days();
            if step <= 0 {
                return Err(Error::DuplicateDate {
                    line: i + 2,
                    date: w[1].to_string(),
                });
            }
            if step != 1 {
                return Err(Error::NonUniformSpacing {
                    after: w[0].to_string(),
                    missing: step - 1,
                });
            }
        }
        Ok(Self {
            label: label.into(),
            dates,
            prices,
        })
    }

    /// Series dated daily from [`synthetic_epoch`].
    pub fn from_prices(label: impl Into<String>, prices: Vec<f64>) -> Result<Self> {
        let dates = daily_dates(synthetic_epoch(), prices.len());
        Self::new(label, dates, prices)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    /// Sub-series over `[start, end)` sample indices.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::param(
                "slice",
                format!("[{start}, {end}) of {}", self.len()),
            ));
        }
        Ok(Self {
            label: self.label.clone(),
            dates: self.dates[start..end].to_vec(),
            prices: self.prices[start..end].to_vec(),
        })
    }

    /// Sub-series whose dates fall in `[from, to]` inclusive.
    pub fn between(&self, from: NaiveDate, to: NaiveDate) -> Result<Self> {
        let start = self.dates.partition_point(|d| *d < from);
        let end = self.dates.partition_point(|d| *d <= to);
        if start >= end {
            return Err(Error::EmptyIntersection);
        }
        self.slice(start, end)
    }
}

/// Natural logarithm of a [`PriceSeries`].
#[derive(Debug, Clone, PartialEq)]
pub struct LogPriceSeries {
    label: String,
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl LogPriceSeries {
    pub fn new(label: impl Into<String>, dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: dates.len(),
                right: values.len(),
            });
        }
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::MalformedRow {
                line: i + 1,
                reason: "non-finite log-price".into(),
            });
        }
        Ok(Self {
            label: label.into(),
            dates,
            values,
        })
    }

    /// Values dated daily from [`synthetic_epoch`].
    pub fn from_values(label: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let dates = daily_dates(synthetic_epoch(), values.len());
        Self::new(label, dates, values)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Back to prices by exponentiation.
    pub fn to_prices(&self) -> Result<PriceSeries> {
        PriceSeries::new(
            self.label.clone(),
            self.dates.clone(),
            self.values.iter().map(|v| v.exp()).collect(),
        )
    }
}

/// Relative price changes, one fewer than the prices.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub label: String,
    /// Date of the later price of each pair.
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

pub fn to_log(p: &PriceSeries) -> LogPriceSeries {
    LogPriceSeries {
        label: p.label.clone(),
        dates: p.dates.clone(),
        values: p.prices.iter().map(|x| x.ln()).collect(),
    }
}

pub fn to_returns(p: &PriceSeries) -> Result<ReturnSeries> {
    if p.len() < 2 {
        return Err(Error::TooShort {
            required: 2,
            actual: p.len(),
        });
    }
    Ok(ReturnSeries {
        label: p.label.clone(),
        dates: p.dates[1..].to_vec(),
        values: p.prices.windows(2).map(|w| (w[1] - w[0]) / w[0]).collect(),
    })
}

/// Column selector for CSV input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Name(String),
    Index(usize),
}

impl Column {
    /// Numeric strings select by position, anything else by header name.
    pub fn parse(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => Column::Index(i),
            Err(_) => Column::Name(s.to_string()),
        }
    }
}

/// How to read a price CSV.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub date_col: Column,
    pub price_col: Column,
    /// Forward-fill runs of at most [`MAX_FILLED_GAP`] missing days.
    pub fill_gaps: bool,
    pub label: Option<String>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            date_col: Column::Name("date".into()),
            price_col: Column::Name("price".into()),
            fill_gaps: false,
            label: None,
        }
    }
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some(d);
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt.date());
        }
    }
    chrono::DateTime::parse_from_rfc3339(s)
        .ok()
        .map(|dt| dt.date_naive())
}

/// Loads a price CSV from a path, `-` meaning stdin.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<PriceSeries> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut text = String::new();
    if path.as_os_str() == "-" {
        std::io::stdin().read_to_string(&mut text).map_err(io_err)?;
    } else {
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(io_err)?;
    }
    let mut schema = schema.clone();
    if schema.label.is_none() {
        schema.label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .filter(|s| s != "-");
    }
    parse_csv(&text, &schema)
}

/// Parses CSV text. The header row is optional and detected by the date cell
/// of the first record failing to parse.
pub fn parse_csv(text: &str, schema: &CsvSchema) -> Result<PriceSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());

    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::MalformedRow {
                line,
                reason: e.to_string(),
            }
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        records.push((line, rec));
    }
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }

    let header: Option<Vec<String>> = {
        let (_, first) = &records[0];
        let looks_like_data = first.iter().any(|f| parse_date(f).is_some());
        if looks_like_data {
            None
        } else {
            Some(first.iter().map(|f| f.to_ascii_lowercase()).collect())
        }
    };

    let resolve = |col: &Column, fallback: usize| -> Result<usize> {
        match (col, &header) {
            (Column::Index(i), _) => Ok(*i),
            (Column::Name(name), Some(h)) => h
                .iter()
                .position(|f| f.eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::MalformedRow {
                    line: records[0].0,
                    reason: format!("no column named `{name}`"),
                }),
            (Column::Name(_), None) => Ok(fallback),
        }
    };
    let date_idx = resolve(&schema.date_col, 0)?;
    let price_idx = resolve(&schema.price_col, 1)?;

    let data = if header.is_some() {
        &records[1..]
    } else {
        &records[..]
    };
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }

    let mut rows: Vec<(usize, NaiveDate, f64)> = Vec::with_capacity(data.len());
    for (line, rec) in data {
        let field = |idx: usize, what: &str| {
            rec.get(idx).ok_or_else(|| Error::MalformedRow {
                line: *line,
                reason: format!("missing {what} column {idx}"),
            })
        };
        let d = field(date_idx, "date")?;
        let date = parse_date(d).ok_or_else(|| Error::MalformedRow {
            line: *line,
            reason: format!("unparseable date `{d}`"),
        })?;
        let p = field(price_idx, "price")?;
        let price: f64 = p.parse().map_err(|_| Error::MalformedRow {
            line: *line,
            reason: format!("unparseable price `{p}`"),
        })?;
        if !(price.is_finite() && price > 0.0) {
            return Err(Error::NonPositivePrice { line: *line, price });
        }
        rows.push((*line, date, price));
    }

    rows.sort_by_key(|r| r.1);
    let mut dates = Vec::with_capacity(rows.len());
    let mut prices = Vec::with_capacity(rows.len());
    for (k, &(line, date, price)) in rows.iter().enumerate() {
        if k > 0 {
            let prev: NaiveDate = dates[dates.len() - 1];
            let missing = (date - prev).num_days() - 1;
            if missing < 0 {
                return Err(Error::DuplicateDate {
                    line,
                    date: date.to_string(),
                });
            }
            if missing > 0 {
                if !schema.fill_gaps || missing > MAX_FILLED_GAP {
                    return Err(Error::NonUniformSpacing {
                        after: prev.to_string(),
                        missing,
                    });
                }
                let last = prices[prices.len() - 1];
                for d in 1..=missing {
                    dates.push(prev + Days::new(d as u64));
                    prices.push(last);
                }
            }
        }
        dates.push(date);
        prices.push(price);
    }

    PriceSeries::new(schema.label.clone().unwrap_or_default(), dates, prices)
}

/// Writes the canonical `date,price` CSV.
pub fn write_csv<W: Write>(series: &PriceSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Csv(e.to_string());
    w.write_record(["date", "price"]).map_err(csv_err)?;
    for (d, p) in series.dates.iter().zip(&series.prices) {
        w.write_record([d.to_string(), format!("{p}")])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ps(prices: &[f64]) -> PriceSeries {
        PriceSeries::from_prices("t", prices.to_vec()).unwrap()
    }

    #[test]
    fn parses_headerless_rows() {
        let s = parse_csv("2010-11-05,0.39\n2010-11-06,0.41", &CsvSchema::default()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.prices(), &[0.39, 0.41]);
        assert_eq!(s.dates()[0], NaiveDate::from_ymd_opt(2010, 11, 5).unwrap());
    }

    #[test]
    fn header_and_column_overrides() {
        let text = "Close,Day\n10,2020-01-02\n11,2020-01-01\n";
        let schema = CsvSchema {
            date_col: Column::parse("day"),
            price_col: Column::parse("close"),
            ..Default::default()
        };
        let s = parse_csv(text, &schema).unwrap();
        // sorted by date
        assert_eq!(s.prices(), &[11.0, 10.0]);

        let by_index = CsvSchema {
            date_col: Column::parse("1"),
            price_col: Column::parse("0"),
            ..Default::default()
        };
        assert_eq!(parse_csv(text, &by_index).unwrap().prices(), &[11.0, 10.0]);
    }

    #[test]
    fn zero_price_rejected() {
        let err = parse_csv("2010-11-05,0\n", &CsvSchema::default()).unwrap_err();
        assert!(matches!(err, Error::NonPositivePrice { line: 1, .. }));
    }

    #[test]
    fn malformed_row_reports_line() {
        let err = parse_csv(
            "date,price\n2010-11-05,1\n2010-11-06,abc\n",
            &CsvSchema::default(),
        )
        .unwrap_err();
        assert!(
            matches!(err, Error::MalformedRow { line: 3, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn empty_and_header_only_inputs() {
        assert!(matches!(
            parse_csv("", &CsvSchema::default()),
            Err(Error::EmptyInput)
        ));
        assert!(matches!(
            parse_csv("date,price\n", &CsvSchema::default()),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn duplicates_rejected() {
        let err = parse_csv("2010-11-05,1\n2010-11-05,2\n", &CsvSchema::default()).unwrap_err();
        assert!(matches!(err, Error::DuplicateDate { .. }));
    }

    #[test]
    fn gaps_error_or_fill() {
        let text = "2010-11-01,1\n2010-11-04,2\n";
        let err = parse_csv(text, &CsvSchema::default()).unwrap_err();
        assert!(matches!(err, Error::NonUniformSpacing { missing: 2, .. }));

        let fill = CsvSchema {
            fill_gaps: true,
            ..Default::default()
        };
        let s = parse_csv(text, &fill).unwrap();
        assert_eq!(s.prices(), &[1.0, 1.0, 1.0, 2.0]);

        let long = "2010-11-01,1\n2010-11-06,2\n";
        assert!(matches!(
            parse_csv(long, &fill),
            Err(Error::NonUniformSpacing { missing: 4, .. })
        ));
    }

    #[test]
    fn log_examples() {
        assert_eq!(to_log(&ps(&[1.0, 1.0, 1.0])).values(), &[0.0, 0.0, 0.0]);
        let e = std::f64::consts::E;
        let l = to_log(&ps(&[e, e * e]));
        assert_relative_eq!(l.values()[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(l.values()[1], 2.0, epsilon = 1e-15);
        let l = to_log(&ps(&[2.0, 4.0, 8.0]));
        let ln2 = std::f64::consts::LN_2;
        for (i, v) in l.values().iter().enumerate() {
            assert_relative_eq!(*v, (i + 1) as f64 * ln2, epsilon = 1e-15);
        }
    }

    #[test]
    fn return_examples() {
        let r = to_returns(&ps(&[100.0, 110.0])).unwrap();
        assert_relative_eq!(r.values[0], 0.10, epsilon = 1e-15);
        assert!(to_returns(&ps(&[5.0; 4]))
            .unwrap()
            .values
            .iter()
            .all(|&v| v == 0.0));
        assert_eq!(
            to_returns(&ps(&[100.0, 50.0, 75.0])).unwrap().values,
            vec![-0.5, 0.5]
        );
        assert!(matches!(
            to_returns(&ps(&[1.0])),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn round_trip_through_canonical_csv() {
        let s = ps(&[0.39, 0.41, 1e-3, 12345.678901234]);
        let mut buf = Vec::new();
        write_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("date,price\n1970-01-01,0.39\n"));
        let back = parse_csv(
            &text,
            &CsvSchema {
                label: Some("t".into()),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn accepts_timestamps() {
        let s = parse_csv(
            "date,price\n2019-01-01T00:00:00Z,3\n2019-01-02 00:00:00,4\n",
            &CsvSchema::default(),
        )
        .unwrap();
        assert_eq!(s.len(), 2);
    }
}
