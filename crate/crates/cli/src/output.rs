//! Result files: per-estimator CSVs, the comparison table and the SVG plot.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use nli_core::nli::EtaReport;

use crate::CliError;

pub const CSV_HEADER: [&str; 8] =
    ["channel_index", "f_center_THz", "eta_dB", "sci_dB", "xpm_dB", "estimator", "format", "stderr_dB"];

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct EtaRow {
    pub channel_index: usize,
    #[serde(rename = "f_center_THz")]
    pub f_center_thz: f64,
    #[serde(rename = "eta_dB")]
    pub eta_db: f64,
    #[serde(rename = "sci_dB")]
    pub sci_db: f64,
    #[serde(rename = "xpm_dB")]
    pub xpm_db: f64,
    pub estimator: String,
    pub format: String,
    #[serde(rename = "stderr_dB")]
    pub stderr_db: Option<f64>,
}

/// A report read back from disk.
#[derive(Debug, Clone)]
pub struct ReportFile {
    pub path: PathBuf,
    pub config_hash: String,
    pub rows: Vec<EtaRow>,
}

impl ReportFile {
    pub fn estimator(&self) -> &str {
        self.rows.first().map_or("", |r| r.estimator.as_str())
    }
    pub fn format(&self) -> &str {
        self.rows.first().map_or("", |r| r.format.as_str())
    }
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        let s = format!("{x:.6}");
        if s == "-0.000000" { "0.000000".into() } else { s }
    }
}

pub fn provenance_line(hash: &str, seed: u64) -> String {
    format!(
        "# config_hash={hash} seed={seed} rng={} version={}\n",
        nli_core::RNG_ALGORITHM,
        env!("CARGO_PKG_VERSION")
    )
}

pub fn csv_file_name(report: &EtaReport) -> String {
    format!("eta_{}_{}.csv", report.estimator, report.format)
}

/// Serializes a report; the first line carries the provenance.
pub fn report_csv(report: &EtaReport, seed: u64) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for c in &report.channels {
        w.write_record([
            c.index.to_string(),
            num(c.f_center),
            num(c.eta_db()),
            num(c.sci_db()),
            num(c.xpm_db()),
            report.estimator.to_string(),
            report.format.clone(),
            c.stderr_db.map_or(String::new(), num),
        ])?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.to_string()))?).expect("utf-8");
    Ok(provenance_line(&report.link_hash, seed) + &body)
}

pub fn read_report(path: &Path) -> Result<ReportFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let config_hash = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .and_then(|l| l.split_whitespace().find_map(|kv| kv.strip_prefix("config_hash=")))
        .unwrap_or("")
        .to_string();
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let rows = r
        .deserialize()
        .collect::<Result<Vec<EtaRow>, _>>()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if rows.is_empty() {
        return Err(CliError::Config(format!("{}: no rows", path.display())));
    }
    Ok(ReportFile { path: path.to_path_buf(), config_hash, rows })
}

/// Column key `estimator/format`.
fn key(r: &EtaRow) -> String {
    format!("{}/{}", r.estimator, r.format)
}

/// Pairwise gaps of every estimator against the reference of its format
/// (4D if present, otherwise the first estimator), plus GN against each
/// format's reference.
fn gap_pairs(cols: &[String]) -> Vec<(String, String)> {
    let mut by_format: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for c in cols {
        let (e, f) = c.split_once('/').expect("column key");
        by_format.entry(f).or_default().push(e);
    }
    let gn = cols.iter().find(|c| c.starts_with("GN/")).cloned();
    let mut out = Vec::new();
    for (f, ests) in &by_format {
        let reference = if ests.contains(&"4D") { "4D" } else { ests[0] };
        let r = format!("{reference}/{f}");
        for e in ests {
            if *e != reference {
                out.push((r.clone(), format!("{e}/{f}")));
            }
        }
        if let Some(g) = &gn {
            if !g.ends_with(&format!("/{f}")) {
                out.push((r.clone(), g.clone()));
            }
        }
    }
    out
}

/// Summary of one gap column.
#[derive(Debug, Clone, PartialEq)]
pub struct GapStats {
    pub reference: String,
    pub other: String,
    pub mean_abs_db: f64,
    pub max_abs_db: f64,
    pub n: usize,
}

/// Joins the reports on channel index; gaps are `other − reference`,
/// recomputed from the η columns.
pub fn comparison(reports: &[ReportFile]) -> (String, Vec<GapStats>) {
    let mut table: BTreeMap<usize, (f64, BTreeMap<String, f64>)> = BTreeMap::new();
    let mut cols: Vec<String> = Vec::new();
    for rep in reports {
        for r in &rep.rows {
            let k = key(r);
            if !cols.contains(&k) {
                cols.push(k.clone());
            }
            table.entry(r.channel_index).or_insert((r.f_center_thz, BTreeMap::new())).1.insert(k, r.eta_db);
        }
    }
    let pairs = gap_pairs(&cols);
    let mut header = vec!["channel_index".to_string(), "f_center_THz".to_string()];
    header.extend(cols.iter().map(|c| format!("eta_dB[{c}]")));
    header.extend(pairs.iter().map(|(a, b)| format!("gap_dB[{b} - {a}]")));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory write");
    let mut stats: Vec<(f64, f64, usize)> = vec![(0.0, 0.0, 0); pairs.len()];
    for (ch, (f, vals)) in &table {
        let mut rec = vec![ch.to_string(), num(*f)];
        rec.extend(cols.iter().map(|c| vals.get(c).map_or(String::new(), |v| num(*v))));
        for (j, (a, b)) in pairs.iter().enumerate() {
            match (vals.get(a), vals.get(b)) {
                (Some(x), Some(y)) if x.is_finite() && y.is_finite() => {
                    let g = y - x;
                    stats[j].0 += g.abs();
                    stats[j].1 = stats[j].1.max(g.abs());
                    stats[j].2 += 1;
                    rec.push(num(g));
                }
                _ => rec.push(String::new()),
            }
        }
        w.write_record(&rec).expect("in-memory write");
    }
    let text = String::from_utf8(w.into_inner().expect("flush")).expect("utf-8");
    let summary = pairs
        .into_iter()
        .zip(stats)
        .map(|((a, b), (s, m, n))| GapStats {
            reference: a,
            other: b,
            mean_abs_db: if n > 0 { s / n as f64 } else { f64::NAN },
            max_abs_db: if n > 0 { m } else { f64::NAN },
            n,
        })
        .collect();
    (text, summary)
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace("--", "- -")
}

/// η versus channel frequency: one color per format; 4D solid, EGN dashed,
/// GN dotted, split-step as circles, Monte-Carlo as squares. The data table
/// is embedded as a comment.
pub fn eta_svg(reports: &[ReportFile], title: &str) -> String {
    let (w, h) = (760.0, 480.0);
    let (l, r, t, b) = (70.0, 200.0, 40.0, 50.0);
    let pts: Vec<&EtaRow> = reports.iter().flat_map(|r| &r.rows).filter(|r| r.eta_db.is_finite()).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in &pts {
        x0 = x0.min(p.f_center_thz);
        x1 = x1.max(p.f_center_thz);
        y0 = y0.min(p.eta_db);
        y1 = y1.max(p.eta_db);
    }
    if pts.is_empty() {
        (x0, x1, y0, y1) = (-1.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-9 {
        x0 -= 0.05;
        x1 += 0.05;
    }
    let pad = ((y1 - y0) * 0.08).max(0.25);
    y0 = (y0 - pad).floor();
    y1 = (y1 + pad).ceil();
    let sx = |x: f64| l + (x - x0) / (x1 - x0) * (w - l - r);
    let sy = |y: f64| h - b - (y - y0) / (y1 - y0) * (h - t - b);

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#).unwrap();
    s.push_str("<!-- data\nestimator,format,channel_index,f_center_THz,eta_dB\n");
    for p in &pts {
        writeln!(s, "{},{},{},{},{}", esc(&p.estimator), esc(&p.format), p.channel_index, num(p.f_center_thz), num(p.eta_db)).unwrap();
    }
    s.push_str("-->\n");
    writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, (l + w - r) / 2.0, esc(title)).unwrap();
    writeln!(s, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, w - l - r, h - t - b).unwrap();
    let ystep = if y1 - y0 > 8.0 { 2.0 } else { 1.0 };
    let mut y = y0;
    while y <= y1 + 1e-9 {
        writeln!(s, r##"<line x1="{l}" x2="{}" y1="{:.2}" y2="{:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">{y}</text>"##, w - r, sy(y), sy(y), l - 6.0, sy(y) + 4.0).unwrap();
        y += ystep;
    }
    for k in 0..=4 {
        let x = x0 + (x1 - x0) * k as f64 / 4.0;
        writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="middle">{:.3}</text>"#, sx(x), h - b + 18.0, x).unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">channel frequency offset (THz)</text>"#, (l + w - r) / 2.0, h - 10.0).unwrap();
    writeln!(s, r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">η (dB, 1/W²)</text>"#, (t + h - b) / 2.0, (t + h - b) / 2.0).unwrap();

    let mut formats: Vec<&str> = Vec::new();
    for rep in reports {
        if rep.estimator() != "GN" && !formats.contains(&rep.format()) {
            formats.push(rep.format());
        }
    }
    let mut legend = 0;
    for rep in reports {
        let color = if rep.estimator() == "GN" {
            "black"
        } else {
            PALETTE[formats.iter().position(|f| *f == rep.format()).unwrap_or(0) % PALETTE.len()]
        };
        let mut rows: Vec<&EtaRow> = rep.rows.iter().filter(|r| r.eta_db.is_finite()).collect();
        rows.sort_by(|a, b| a.f_center_thz.total_cmp(&b.f_center_thz));
        let path: Vec<String> = rows.iter().map(|p| format!("{:.2},{:.2}", sx(p.f_center_thz), sy(p.eta_db))).collect();
        let line = |dash: &str| format!(r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>"#, path.join(" "));
        let (el, swatch) = match rep.estimator() {
            "SSFM" => (
                rows.iter().map(|p| format!(r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="none" stroke="{color}"/>"#, sx(p.f_center_thz), sy(p.eta_db))).collect::<String>(),
                format!(r#"<circle cx="{{x}}" cy="{{y}}" r="4" fill="none" stroke="{color}"/>"#),
            ),
            "RP1MC" => (
                rows.iter().map(|p| format!(r#"<rect x="{:.2}" y="{:.2}" width="7" height="7" fill="none" stroke="{color}"/>"#, sx(p.f_center_thz) - 3.5, sy(p.eta_db) - 3.5)).collect(),
                format!(r#"<rect x="{{x}}" y="{{y}}" width="7" height="7" fill="none" stroke="{color}"/>"#),
            ),
            e => {
                let dash = match e {
                    "EGN" => r#" stroke-dasharray="6,4""#,
                    "GN" => r#" stroke-dasharray="2,3""#,
                    _ => "",
                };
                (line(dash), format!(r#"<line x1="{{x}}" x2="{{x2}}" y1="{{y}}" y2="{{y}}" stroke="{color}" stroke-width="1.6"{dash}/>"#))
            }
        };
        s.push_str(&el);
        s.push('\n');
        let lx = w - r + 12.0;
        let ly = t + 10.0 + 18.0 * legend as f64;
        let sw = swatch
            .replace("{x}", &format!("{lx}"))
            .replace("{x2}", &format!("{}", lx + 24.0))
            .replace("{y}", &format!("{ly}"));
        let sw = if rep.estimator() == "RP1MC" { sw.replace(&format!(r#"x="{lx}" y="{ly}""#), &format!(r#"x="{}" y="{}""#, lx + 8.5, ly - 3.5)) } else { sw };
        let sw = if rep.estimator() == "SSFM" { sw.replace(&format!(r#"cx="{lx}""#), &format!(r#"cx="{}""#, lx + 12.0)) } else { sw };
        writeln!(s, r#"{sw}<text x="{}" y="{}">{} {}</text>"#, lx + 30.0, ly + 4.0, esc(rep.format()), esc(rep.estimator())).unwrap();
        legend += 1;
    }
    s.push_str("</svg>\n");
    s
}
