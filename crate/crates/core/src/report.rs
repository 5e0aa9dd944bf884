//! Provenance hashes and minimal SVG charts for emitted results.

use std::fmt::Write;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// First 8 bytes of the SHA-256 of `value`'s JSON form, hex encoded.
pub fn config_hash(value: &impl Serialize) -> String {
    let json = serde_json::to_string(value).expect("config serializes");
    hex::encode(&Sha256::digest(json.as_bytes())[..8])
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn frame(title: &str, xlabel: &str, ylabel: &str) -> String {
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(s, "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>", W / 2.0, escape(title));
    let _ = writeln!(
        s,
        "<line x1=\"{PAD}\" y1=\"{y}\" x2=\"{x}\" y2=\"{y}\" stroke=\"black\"/>\n<line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{y}\" stroke=\"black\"/>",
        x = W - PAD,
        y = H - PAD
    );
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>", W / 2.0, H - 12.0, escape(xlabel));
    let _ = writeln!(
        s,
        "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{}</text>",
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Bar chart of `(label, value)` pairs.
pub fn bar_chart(title: &str, xlabel: &str, ylabel: &str, bars: &[(String, f64)]) -> String {
    let mut s = frame(title, xlabel, ylabel);
    let max = bars.iter().map(|b| b.1).fold(0.0, f64::max).max(1e-300);
    let slot = (W - 2.0 * PAD) / bars.len().max(1) as f64;
    let plot_h = H - 2.0 * PAD;
    for (i, (label, v)) in bars.iter().enumerate() {
        let h = plot_h * v / max;
        let x = PAD + i as f64 * slot;
        let _ = writeln!(
            s,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{h:.2}\" fill=\"{}\"/>",
            x + 0.1 * slot,
            H - PAD - h,
            0.8 * slot,
            COLORS[0]
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\" font-size=\"10\">{}</text>",
            x + slot / 2.0,
            H - PAD + 14.0,
            escape(label)
        );
    }
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"10\">{max}</text>", PAD - 4.0, PAD + 4.0);
    s.push_str("</svg>\n");
    s
}

/// Log-log line chart; every series is `(name, points)` with positive
/// coordinates.
pub fn loglog_chart(title: &str, xlabel: &str, ylabel: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let mut s = frame(title, xlabel, ylabel);
    let pts = series.iter().flat_map(|(_, p)| p.iter()).filter(|p| p.0 > 0.0 && p.1 > 0.0);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in pts {
        x0 = x0.min(x.log10());
        x1 = x1.max(x.log10());
        y0 = y0.min(y.log10());
        y1 = y1.max(y.log10());
    }
    if x0 > x1 {
        s.push_str("</svg>\n");
        return s;
    }
    let sx = (W - 2.0 * PAD) / (x1 - x0).max(1e-9);
    let sy = (H - 2.0 * PAD) / (y1 - y0).max(1e-9);
    let map = |x: f64, y: f64| (PAD + (x.log10() - x0) * sx, H - PAD - (y.log10() - y0) * sy);
    for (i, (name, points)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = points
            .iter()
            .filter(|p| p.0 > 0.0 && p.1 > 0.0)
            .map(|&(x, y)| {
                let (a, b) = map(x, y);
                format!("{a:.2},{b:.2}")
            })
            .collect();
        let _ = writeln!(s, "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>", path.join(" "));
        for p in &path {
            let (a, b) = p.split_once(',').expect("formatted pair");
            let _ = writeln!(s, "<circle cx=\"{a}\" cy=\"{b}\" r=\"3\" fill=\"{color}\"/>");
        }
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>",
            PAD + 10.0,
            PAD + 16.0 * i as f64,
            escape(name)
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{PAD}\" y=\"{}\" font-size=\"10\">1e{x0:.1}</text><text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"10\">1e{x1:.1}</text>",
        H - PAD + 14.0,
        W - PAD,
        H - PAD + 14.0
    );
    s.push_str("</svg>\n");
    s
}
