//! Curve-comparison artifacts: a CSV of both curves and a small SVG plot.

use std::fmt::Write as _;
use std::path::Path;

use crate::em_mom::{sig9, S11Curve};
use crate::error::{Error, Result};
use crate::loss::TargetCurve;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

pub fn comparison_csv(target: &TargetCurve, achieved: &S11Curve) -> String {
    let mut out = String::from("freq_hz,target_db,achieved_db\n");
    for ((f, t), a) in target.freq.points().iter().zip(&target.s11_db).zip(&achieved.s11_db) {
        let _ = writeln!(out, "{},{},{}", sig9(*f), sig9(*t), sig9(*a));
    }
    out
}

fn polyline(freq: &[f64], db: &[f64], x: impl Fn(f64) -> f64, y: impl Fn(f64) -> f64, color: &str) -> String {
    let points: Vec<String> = freq.iter().zip(db).map(|(f, d)| format!("{:.2},{:.2}", x(*f), y(*d))).collect();
    format!(
        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        points.join(" ")
    )
}

/// Target (blue) and achieved (red) S11 in dB against frequency in GHz.
pub fn comparison_svg(target: &TargetCurve, achieved: &S11Curve) -> String {
    let freq = target.freq.points();
    let (f0, f1) = (freq[0], freq[freq.len() - 1]);
    let all = target.s11_db.iter().chain(&achieved.s11_db);
    let lo = all.clone().copied().fold(f64::INFINITY, f64::min).min(-1.0).floor();
    let hi = 0.0;
    let x = |f: f64| MARGIN + (f - f0) / (f1 - f0) * (WIDTH - 2.0 * MARGIN);
    let y = |d: f64| MARGIN + (hi - d) / (hi - lo) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        svg,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{:.1} to {:.1} GHz</text>",
        WIDTH / 2.0,
        HEIGHT - 15.0,
        f0 / 1e9,
        f1 / 1e9
    );
    let _ = writeln!(
        svg,
        "<text x=\"10\" y=\"{}\" font-size=\"12\">S11 {lo} to {hi} dB</text>",
        MARGIN - 10.0
    );
    svg.push_str(&polyline(freq, &target.s11_db, x, y, "blue"));
    svg.push_str(&polyline(achieved.freq.points(), &achieved.s11_db, x, y, "red"));
    svg.push_str("</svg>\n");
    svg
}

pub fn export_plot_data(target: &TargetCurve, achieved: &S11Curve, dir: &Path) -> Result<()> {
    let csv_path = dir.join("plot.csv");
    std::fs::write(&csv_path, comparison_csv(target, achieved)).map_err(|e| Error::io(&csv_path, e))?;
    let svg_path = dir.join("plot.svg");
    std::fs::write(&svg_path, comparison_svg(target, achieved)).map_err(|e| Error::io(&svg_path, e))
}
