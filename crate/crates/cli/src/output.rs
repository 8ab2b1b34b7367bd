//! CSV, JSON and SVG writers. Every file records the RNG seed.

use crate::run::RunError;
use pointhartree::solver::Monitor;
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const MONITOR_COLUMNS: [&str; 7] = ["t", "mass", "energy", "h_s_norm", "l2_norm", "lr_norm", "tail_mass"];

fn io(path: &Path, e: impl std::fmt::Display) -> RunError {
    RunError::Io(format!("{}: {e}", path.display()))
}

/// Writes a CSV whose first line is a `# seed = ...` comment followed by the header row.
pub fn write_csv(path: &Path, seed: u64, header: &[&str], rows: &[Vec<f64>]) -> Result<(), RunError> {
    let mut buf = format!("# seed = {seed}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header).map_err(|e| io(path, e))?;
        for row in rows {
            w.write_record(row.iter().map(|x| format!("{x:?}"))).map_err(|e| io(path, e))?;
        }
        w.flush().map_err(|e| io(path, e))?;
    }
    fs::write(path, buf).map_err(|e| io(path, e))
}

pub fn monitor_rows(monitors: &[Monitor]) -> Vec<Vec<f64>> {
    monitors.iter().map(|m| vec![m.t, m.mass, m.energy, m.h_s_norm, m.l2_norm, m.lr_norm, m.tail_mass]).collect()
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    seed: u64,
    status: &'a str,
    report: &'a T,
}

pub fn write_json<T: Serialize>(path: &Path, command: &str, seed: u64, status: &str, report: &T) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(&Envelope { command, seed, status, report }).map_err(|e| io(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io(path, e))
}

pub struct Series<'a> {
    pub name: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// A standalone SVG line plot; log axes drop non-positive samples.
pub fn line_plot(title: &str, x_label: &str, series: &[Series], log_x: bool, log_y: bool, seed: u64) -> String {
    let (w, h, left, right, top, bottom) = (640.0, 420.0, 70.0, 20.0, 40.0, 50.0);
    let tx = |v: f64| if log_x { v.log10() } else { v };
    let ty = |v: f64| if log_y { v.log10() } else { v };
    let keep = |x: f64, y: f64| x.is_finite() && y.is_finite() && (!log_x || x > 0.0) && (!log_y || y > 0.0);
    let pts: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| s.x.iter().zip(s.y).filter(|(x, y)| keep(**x, **y)).map(|(x, y)| (tx(*x), ty(*y))).collect())
        .collect();
    let all = pts.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-300 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 * y0.abs().max(1e-300) {
        y0 -= 0.5 * y0.abs().max(1.0);
        y1 += 0.5 * y1.abs().max(1.0);
    }
    let px = |x: f64| left + (x - x0) / (x1 - x0) * (w - left - right);
    let py = |y: f64| h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom);
    let label = |v: f64, log: bool| if log { format!("{:.3e}", 10f64.powf(v)) } else { format!("{v:.4}") };
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <!-- seed = {seed} -->\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{title}</text>\n\
         <rect x=\"{left}\" y=\"{top}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        w / 2.0,
        w - left - right,
        h - top - bottom
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        svg += &format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{}</text>\n",
            px(xv),
            h - bottom + 15.0,
            label(xv, log_x)
        );
        svg += &format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{}</text>\n",
            left - 4.0,
            py(yv) + 3.0,
            label(yv, log_y)
        );
    }
    svg += &format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{x_label}</text>\n",
        left + (w - left - right) / 2.0,
        h - 12.0
    );
    for (i, (s, p)) in series.iter().zip(&pts).enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        svg += &format!("<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n", coords.join(" "));
        svg += &format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{color}\">{}</text>\n",
            left + 8.0,
            top + 14.0 * (i as f64 + 1.0),
            s.name
        );
    }
    svg += "</svg>\n";
    svg
}

pub fn write_text(path: &Path, text: &str) -> Result<(), RunError> {
    fs::write(path, text).map_err(|e| io(path, e))
}

pub fn prepare_dir(dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(|e| io(dir, e))
}

pub fn path(dir: &Path, prefix: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{prefix}_{suffix}"))
}

/// Prints a one-line JSON diagnostic on stderr.
pub fn diagnostic(kind: &str, code: i32, message: &str, detail: Option<&serde_json::Value>) {
    let v = serde_json::json!({ "status": "error", "kind": kind, "exit_code": code, "message": message, "detail": detail });
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{v}");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_seed_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_csv(&p, 7, &MONITOR_COLUMNS, &[vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 0.5]]).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# seed = 7");
        assert_eq!(lines[1], "t,mass,energy,h_s_norm,l2_norm,lr_norm,tail_mass");
        assert_eq!(lines[2], "0.0,1.0,2.0,3.0,4.0,5.0,0.5");
    }

    #[test]
    fn plot_is_well_formed() {
        let x = [1.0, 2.0, 4.0];
        let y = [1.0, 0.5, 0.25];
        let svg = line_plot("decay", "t", &[Series { name: "a", x: &x, y: &y }], true, true, 3);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        let flat = line_plot("flat", "t", &[Series { name: "c", x: &x, y: &[2.0; 3] }], false, false, 3);
        assert!(!flat.contains("NaN"));
    }
}
