use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde_json::{json, Value};

use super::*;
use crate::estimator::{self, EstimatorConfig, RangeRule};
use crate::ingest::{self, Column, CsvSchema, PriceSeries};
use crate::regularize;
use crate::segment::{self, SearchConfig};
use crate::spectrum::{self, HaarWindow, InertialRange};
use crate::synth::{self, FbmSpec, SynthMethod};
use crate::validate;
use crate::xcorr::{self, DiffLevels, Period, XcorrConfig};

type CliResult<T> = std::result::Result<T, CliError>;

/// Runs the parsed command on a worker pool sized by `--threads`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::param("threads", "must be at least 1").into());
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let mut buf = Vec::new();
    let outcome = pool.install(|| dispatch(&cli.command, &mut buf));
    let target = match &cli.command {
        Command::Synth(a) => &a.out,
        Command::Spectrum(a) => &a.out,
        Command::Estimate(a) => &a.out,
        Command::Segment(a) => &a.out,
        Command::Xcorr(a) => &a.out,
        Command::Regularize(a) => &a.out,
        Command::Validate(a) => &a.out,
    };
    // a failed validation still delivers its report
    if outcome.is_ok() || matches!(outcome, Err(CliError::ChecksFailed(_))) {
        emit(&target.output, &buf, stdout)?;
    }
    outcome
}

fn emit(path: &Option<PathBuf>, bytes: &[u8], stdout: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) if p.as_os_str() != "-" => {
            fs::write(p, bytes).map_err(|source| io_error(p, source))
        }
        _ => stdout
            .write_all(bytes)
            .map_err(|source| io_error(Path::new("<stdout>"), source)),
    }
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
    .into()
}

fn dispatch(cmd: &Command, out: &mut Vec<u8>) -> CliResult<()> {
    match cmd {
        Command::Synth(a) => synth_cmd(a, out),
        Command::Spectrum(a) => spectrum_cmd(a, out),
        Command::Estimate(a) => estimate_cmd(a, out),
        Command::Segment(a) => segment_cmd(a, out),
        Command::Xcorr(a) => xcorr_cmd(a, out),
        Command::Regularize(a) => regularize_cmd(a, out),
        Command::Validate(a) => validate_cmd(a, out),
    }
}

fn meta<T: Serialize>(command: &str, config: &T, seed: Option<u64>) -> CliResult<Value> {
    Ok(json!({
        "tool": "fracspec",
        "version": env!("CARGO_PKG_VERSION"),
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": serde_json::to_value(config).map_err(Error::from)?,
        "seed": seed,
    }))
}

fn write_json(out: &mut Vec<u8>, value: &Value) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(Error::from)?;
    out.push(b'\n');
    Ok(())
}

fn csv_writer(out: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    csv::Writer::from_writer(out)
}

fn csv_err(e: csv::Error) -> CliError {
    Error::Csv(e.to_string()).into()
}

fn schema(date_col: &str, price_col: &str, fill_gaps: bool, label: Option<String>) -> CsvSchema {
    CsvSchema {
        date_col: Column::parse(date_col),
        price_col: Column::parse(price_col),
        fill_gaps,
        label,
    }
}

fn label_of(path: &Path) -> String {
    if path.as_os_str() == "-" {
        return "stdin".into();
    }
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn load(input: &InputArgs) -> CliResult<PriceSeries> {
    let sc = schema(
        &input.date_col,
        &input.price_col,
        input.fill_gaps,
        Some(label_of(&input.input)),
    );
    Ok(ingest::load_csv(&input.input, &sc)?)
}

fn q_header(q: f64) -> String {
    format!("q{q}")
}

fn synth_cmd(a: &SynthArgs, out: &mut Vec<u8>) -> CliResult<()> {
    let start = NaiveDate::parse_from_str(&a.start, "%Y-%m-%d")
        .map_err(|e| Error::param("start", format!("{}: {e}", a.start)))?;
    let method = match a.method {
        MethodArg::Auto => SynthMethod::Auto,
        MethodArg::Exact => SynthMethod::Exact,
        MethodArg::Circulant => SynthMethod::Circulant,
    };
    let spec = FbmSpec::new(a.hurst, a.vol, a.n, a.seed).with_method(method);
    let values = if a.raw_path {
        synth::sample_fbm(&spec)?.values
    } else {
        synth::sample_fbm_observations(&spec)?
    };
    let prices: Vec<f64> = values.iter().map(|v| v.exp()).collect();
    let series = PriceSeries::new("synth", ingest::daily_dates(start, prices.len()), prices)?;
    ingest::write_csv(&series, out)?;
    Ok(())
}

fn range_rule(r: &RangeArgs) -> RangeRule {
    RangeRule {
        first: r.first.unwrap_or(2),
        last: r.last,
    }
}

fn spectrum_cmd(a: &SpectrumArgs, out: &mut Vec<u8>) -> CliResult<()> {
    let series = ingest::to_log(&load(&a.input)?);
    let v = series.values();
    let n = v.len();
    let first = a.range.first.unwrap_or(2);
    let last = a.range.last.unwrap_or(n / 2);
    let range = InertialRange::new(first, last, n)?;
    let hw = HaarWindow::new(v);
    let spec = spectrum::spectrum_from(&hw, range)?;
    let qspecs = spectrum::q_spectra_from(&hw, range, &a.q)?;
    match a.format {
        Format::Csv => {
            let mut w = csv_writer(out);
            let mut head: Vec<String> = ["j", "two_j", "S_j", "N_j"].map(String::from).to_vec();
            head.extend(a.q.iter().map(|&q| format!("S_j_{}", q_header(q))));
            w.write_record(&head).map_err(csv_err)?;
            for (k, (j, s, cnt)) in spec.iter().enumerate() {
                let mut row = vec![
                    j.to_string(),
                    (2 * j).to_string(),
                    s.to_string(),
                    cnt.to_string(),
                ];
                row.extend(qspecs.iter().map(|qs| qs.values[k].to_string()));
                w.write_record(&row).map_err(csv_err)?;
            }
            w.flush().map_err(|e| Error::Csv(e.to_string()))?;
        }
        Format::Json => {
            let fit = estimator::fit_power_law(&spec)?;
            let rows: Vec<Value> = spec
                .iter()
                .enumerate()
                .map(|(k, (j, s, cnt))| {
                    let q: serde_json::Map<String, Value> = qspecs
                        .iter()
                        .map(|qs| (q_header(qs.q), json!(qs.values[k])))
                        .collect();
                    json!({ "j": j, "two_j": 2 * j, "S_j": s, "N_j": cnt, "S_j_q": q })
                })
                .collect();
            write_json(
                out,
                &json!({
                    "meta": meta("spectrum", a, None)?,
                    "label": series.label(),
                    "n": n,
                    "spectrum": rows,
                    "fit": fit,
                }),
            )?;
        }
    }
    Ok(())
}

fn estimate_cmd(a: &EstimateArgs, out: &mut Vec<u8>) -> CliResult<()> {
    let series = ingest::to_log(&load(&a.input)?);
    let (window, step) = if a.global {
        (series.len(), 1)
    } else {
        (a.window, a.step)
    };
    let cfg = EstimatorConfig {
        range: range_rule(&a.range),
        ..Default::default()
    };
    let track = estimator::rolling_estimate(&series, window, step, &cfg)?;
    let gen = if a.q.is_empty() {
        None
    } else {
        Some(estimator::generalized_hurst_track(
            &series, window, step, &a.q, cfg.range,
        )?)
    };
    match a.format {
        Format::Csv => {
            let mut w = csv_writer(out);
            let mut head: Vec<String> = [
                "center_date",
                "center",
                "H",
                "sigma_daily",
                "sigma_annualized",
                "scheme",
            ]
            .map(String::from)
            .to_vec();
            head.extend(a.q.iter().map(|&q| format!("H_{}", q_header(q))));
            w.write_record(&head).map_err(csv_err)?;
            for (t, p) in track.points.iter().enumerate() {
                let mut row = vec![
                    p.center_date.to_string(),
                    p.center.to_string(),
                    p.fit.hurst.to_string(),
                    p.fit.volatility.to_string(),
                    estimator::rescale_volatility(&p.fit, a.horizon).to_string(),
                    p.fit.scheme.label(),
                ];
                if let Some(g) = &gen {
                    row.extend(g.centered.iter().map(|c| c[t].to_string()));
                }
                w.write_record(&row).map_err(csv_err)?;
            }
            w.flush().map_err(|e| Error::Csv(e.to_string()))?;
        }
        Format::Json => {
            let points: Vec<Value> = track
                .points
                .iter()
                .enumerate()
                .map(|(t, p)| {
                    let hq: serde_json::Map<String, Value> = gen
                        .iter()
                        .flat_map(|g| {
                            g.qs.iter()
                                .zip(&g.centered)
                                .map(move |(&q, c)| (q_header(q), json!(c[t])))
                        })
                        .collect();
                    json!({
                        "start": p.start,
                        "center": p.center,
                        "center_date": p.center_date,
                        "H": p.fit.hurst,
                        "H_raw": p.fit.raw_hurst,
                        "sigma_daily": p.fit.volatility,
                        "sigma_annualized": estimator::rescale_volatility(&p.fit, a.horizon),
                        "scheme": p.fit.scheme.label(),
                        "H_q": hq,
                    })
                })
                .collect();
            write_json(
                out,
                &json!({
                    "meta": meta("estimate", a, None)?,
                    "label": series.label(),
                    "window": window,
                    "step": step,
                    "points": points,
                    "H_q_offsets": gen.as_ref().map(|g| g.offsets.clone()),
                }),
            )?;
        }
    }
    Ok(())
}

fn segment_cmd(a: &SegmentArgs, out: &mut Vec<u8>) -> CliResult<()> {
    let series = ingest::to_log(&load(&a.input)?);
    let cfg = SearchConfig {
        segments: a.segments,
        coarse: a.coarse,
        fine: a.fine,
        min_len: a.min_len,
    };
    let p = segment::search_partition(&series, &cfg)?;
    let dates = series.dates();
    let segments: Vec<Value> = p
        .segments
        .iter()
        .map(|s| {
            json!({
                "start": s.start,
                "len": s.len,
                "start_date": dates[s.start],
                "end_date": dates[s.start + s.len - 1],
                "H": s.fit.hurst,
                "H_raw": s.fit.raw_hurst,
                "sigma_daily": s.fit.volatility,
                "sigma_annual": estimator::rescale_volatility(&s.fit, a.horizon),
                "scheme": s.fit.scheme.label(),
                "residual": s.residual,
            })
        })
        .collect();
    let change_points: Vec<Value> = p
        .change_points
        .iter()
        .zip(&p.change_dates)
        .map(|(i, d)| json!({ "index": i, "date": d }))
        .collect();
    if let Some(dir) = &a.emit_spectra {
        fs::create_dir_all(dir).map_err(|source| io_error(dir, source))?;
        for (k, s) in p.segments.iter().enumerate() {
            let spec = segment::segment_spectrum(series.values(), s.start, s.len)?;
            let mut buf = Vec::new();
            {
                let mut w = csv_writer(&mut buf);
                w.write_record(["j", "two_j", "S_j", "model_S_j"])
                    .map_err(csv_err)?;
                for ((j, e), m) in spec.scales.iter().zip(&spec.empirical).zip(&spec.model) {
                    w.write_record([
                        j.to_string(),
                        (2 * j).to_string(),
                        e.to_string(),
                        m.to_string(),
                    ])
                    .map_err(csv_err)?;
                }
                w.flush().map_err(|e| Error::Csv(e.to_string()))?;
            }
            let path = dir.join(format!("segment_{}.csv", k + 1));
            fs::write(&path, buf).map_err(|source| io_error(&path, source))?;
        }
    }
    write_json(
        out,
        &json!({
            "meta": meta("segment", a, None)?,
            "label": series.label(),
            "residual": p.residual,
            "change_points": change_points,
            "segments": segments,
        }),
    )
}

fn xcorr_cmd(a: &XcorrArgs, out: &mut Vec<u8>) -> CliResult<()> {
    let series = a
        .inputs
        .iter()
        .map(|p| {
            ingest::load_csv(
                p,
                &schema(&a.date_col, &a.price_col, a.fill_gaps, Some(label_of(p))),
            )
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let panel = xcorr::align(&series)?;
    let cfg = XcorrConfig {
        diff_levels: if a.dyadic {
            DiffLevels::Dyadic
        } else {
            DiffLevels::Literal
        },
        ..Default::default()
    };
    let periods: Vec<Period> = if a.periods.is_empty() {
        // partial edge years too short to analyse are skipped
        Period::years_of(&panel)
            .into_iter()
            .filter(|p| {
                panel
                    .restrict(p.from, p.to)
                    .is_ok_and(|s| s.len() >= cfg.min_samples())
            })
            .collect()
    } else {
        a.periods.iter().map(|&y| Period::year(y)).collect()
    };
    if periods.is_empty() {
        return Err(Error::EmptyIntersection.into());
    }
    let rows = xcorr::scale_correlations(&panel, &periods, &cfg)?;
    let mut w = csv_writer(out);
    w.write_record(["period", "pair", "kind", "scale", "rho"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.period,
            format!("{}:{}", r.a, r.b),
            r.kind.as_str().to_string(),
            r.scale.to_string(),
            r.rho.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}

fn regularize_cmd(a: &RegularizeArgs, out: &mut Vec<u8>) -> CliResult<()> {
    let series = ingest::to_log(&load(&a.input)?);
    let reg = regularize::gaussianize_diffs(&series)?;
    ingest::write_csv(&reg.series.to_prices()?, out)?;
    Ok(())
}

fn validate_cmd(a: &ValidateArgs, out: &mut Vec<u8>) -> CliResult<()> {
    let report = validate::run_validation(a.seed, a.trials)?;
    match a.format {
        Format::Csv => {
            let mut w = csv_writer(out);
            w.write_record(["status", "check", "value", "low", "high"])
                .map_err(csv_err)?;
            for c in &report.checks {
                w.write_record([
                    if c.pass { "PASS" } else { "FAIL" }.to_string(),
                    c.name.clone(),
                    c.value.to_string(),
                    c.low.to_string(),
                    c.high.to_string(),
                ])
                .map_err(csv_err)?;
            }
            w.flush().map_err(|e| Error::Csv(e.to_string()))?;
        }
        Format::Json => write_json(
            out,
            &json!({
                "meta": meta("validate", a, Some(a.seed))?,
                "checks": report.checks,
            }),
        )?,
    }
    match report.failures() {
        0 => Ok(()),
        n => Err(CliError::ChecksFailed(n)),
    }
}
