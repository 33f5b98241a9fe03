//! Sweep artifacts: CSV tables, the bound document and log-log SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{summarize, SweepOutcome, SweepRow, VmodFunction};
use crate::bounds::BoundDocument;
use crate::error::{Error, Result};
use crate::policy_eval::paper_value;

pub const SWEEP_HEADER: [&str; 11] =
    ["m", "seed", "err_f", "err_g2", "err_ginf", "rhs_f", "rhs_g2", "rhs_ginf", "c_max", "fit_rmse", "wall_ms"];

/// Shortest round-trip decimal, switching to exponent form for very large or
/// small magnitudes. Always uses `.` as the decimal separator.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || v.is_nan() || v.is_infinite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(fs::File::create(path)?))
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(SWEEP_HEADER).map_err(csv_error)?;
    for r in rows {
        let nums = [r.err_f, r.err_g2, r.err_ginf, r.rhs_f, r.rhs_g2, r.rhs_ginf, r.c_max, r.fit_rmse, r.wall_ms];
        let mut rec = vec![r.m.to_string(), r.seed.to_string()];
        rec.extend(nums.iter().map(|&v| format_number(v)));
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// `x, V(x), V(x) r(x)` on `[-2.5, 2.5]` with step `0.01`.
pub fn write_vmod_csv(f: &VmodFunction, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["x", "v_phi", "v_mod"]).map_err(csv_error)?;
    for i in -250i32..=250 {
        let x = f64::from(i) / 100.0;
        w.write_record([format_number(x), format_number(paper_value(x)), format_number(f.value(x))])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

struct Series<'a> {
    label: &'a str,
    color: &'a str,
    dashed: bool,
    points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn loglog_svg(title: &str, ylabel: &str, series: &[Series]) -> String {
    let finite = |p: &&(f64, f64)| p.0 > 0.0 && p.1 > 0.0 && p.1.is_finite();
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().filter(finite).copied()).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for (x, y) in &all {
        x0 = x0.min(x.log10());
        x1 = x1.max(x.log10());
        y0 = y0.min(y.log10());
        y1 = y1.max(y.log10());
    }
    if all.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x.log10() - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y.log10()) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{title}</text>"#, WIDTH / 2.0);
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for d in (y0 as i32)..=(y1 as i32) {
        let y = sy(10f64.powi(d));
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let mut ticks: Vec<f64> = all.iter().map(|p| p.0).collect();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for m in ticks {
        let x = sx(m);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#eee"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{m}</text>"##,
            TOP + ph,
            TOP + ph + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">number of units m</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{ylabel}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    for (i, ser) in series.iter().enumerate() {
        let pts: Vec<String> =
            ser.points.iter().filter(finite).map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let dash = if ser.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"{dash}/>"#,
            pts.join(" "),
            ser.color
        );
        if !ser.dashed {
            for &(x, y) in ser.points.iter().filter(finite) {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#, sx(x), sy(y), ser.color);
            }
        }
        let ly = TOP + 16.0 + 16.0 * i as f64;
        let lx = LEFT + pw - 170.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="2"{dash}/><text x="{:.2}" y="{ly:.2}">{}</text>"#,
            ly - 4.0,
            lx + 24.0,
            ly - 4.0,
            ser.color,
            lx + 30.0,
            ser.label
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Paths of the files written by [`emit_report`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFiles {
    pub sweep_csv: PathBuf,
    pub bounds_json: PathBuf,
    pub function_svg: PathBuf,
    pub gradient_svg: PathBuf,
    pub vmod_csv: PathBuf,
    pub config_json: PathBuf,
}

/// Writes the sweep table, bound document, plots of median error and bound
/// against `m`, the localized value function table and the sweep settings
/// (`sweep.json`, which records the ridge used).
pub fn emit_report(outcome: &SweepOutcome, vmod: &VmodFunction, out_dir: &Path) -> Result<ReportFiles> {
    if outcome.rows.is_empty() {
        return Err(Error::Empty("sweep rows"));
    }
    fs::create_dir_all(out_dir)?;
    let files = ReportFiles {
        sweep_csv: out_dir.join("sweep.csv"),
        bounds_json: out_dir.join("bounds.json"),
        function_svg: out_dir.join("function_error.svg"),
        gradient_svg: out_dir.join("gradient_error.svg"),
        vmod_csv: out_dir.join("vmod.csv"),
        config_json: out_dir.join("sweep.json"),
    };
    write_sweep_csv(&outcome.rows, &files.sweep_csv)?;

    let doc = BoundDocument::new(outcome.report.clone(), &outcome.m_list, outcome.delta)?;
    let mut json = serde_json::to_string_pretty(&doc)?;
    json.push('\n');
    fs::write(&files.bounds_json, json)?;

    let summary = summarize(&outcome.rows);
    let pts = |f: fn(&super::WidthSummary) -> f64| summary.iter().map(|s| (s.m as f64, f(s))).collect::<Vec<_>>();
    let function = [
        Series { label: "median sup error", color: "#1f77b4", dashed: false, points: pts(|s| s.err_f) },
        Series { label: "bound", color: "#d62728", dashed: true, points: pts(|s| s.rhs_f) },
    ];
    let title = format!("Function approximation error ({})", outcome.target);
    fs::write(&files.function_svg, loglog_svg(&title, "sup |f_N - f|", &function))?;
    let gradient = [
        Series { label: "median sup 2-norm error", color: "#1f77b4", dashed: false, points: pts(|s| s.err_g2) },
        Series { label: "median sup inf-norm error", color: "#2ca02c", dashed: false, points: pts(|s| s.err_ginf) },
        Series { label: "2-norm bound", color: "#d62728", dashed: true, points: pts(|s| s.rhs_g2) },
        Series { label: "inf-norm bound", color: "#ff7f0e", dashed: true, points: pts(|s| s.rhs_ginf) },
    ];
    let title = format!("Gradient approximation error ({})", outcome.target);
    fs::write(&files.gradient_svg, loglog_svg(&title, "sup |grad f_N - grad f|", &gradient))?;

    write_vmod_csv(vmod, &files.vmod_csv)?;
    let mut json = serde_json::to_string_pretty(&outcome.config)?;
    json.push('\n');
    fs::write(&files.config_json, json)?;
    Ok(files)
}
