//! Bare-bones SVG charts rendered from the same data as the CSVs.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn header(title: &str) -> String {
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(s, "<text x=\"{}\" y=\"20\" text-anchor=\"middle\">{title}</text>", W / 2.0);
    let _ = writeln!(
        s,
        "<path d=\"M{PAD} {PAD} V{} H{}\" stroke=\"black\" fill=\"none\"/>",
        H - PAD,
        W - PAD
    );
    s
}

fn axis_labels(s: &mut String, x: (f64, f64), y: (f64, f64), x_label: &str, y_label: &str) {
    let _ = writeln!(s, "<text x=\"{PAD}\" y=\"{}\">{:.3}</text>", H - PAD + 15.0, x.0);
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3}</text>", W - PAD, H - PAD + 15.0, x.1);
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.1}</text>", PAD - 4.0, H - PAD, y.0);
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.1}</text>", PAD - 4.0, PAD + 4.0, y.1);
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_label}</text>", W / 2.0, H - 12.0);
    let _ = writeln!(
        s,
        "<text x=\"14\" y=\"{}\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">{y_label}</text>",
        H / 2.0,
        H / 2.0
    );
}

/// Grouped bar chart: one group of bars per bin, one bar per series.
pub fn bars(title: &str, bins: &[(f64, f64)], series: &[(String, Vec<f64>)]) -> String {
    let mut s = header(title);
    let ymax = series
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .fold(0.0, f64::max)
        .max(1e-12);
    let slot = (W - 2.0 * PAD) / bins.len().max(1) as f64;
    let bar = slot / (series.len().max(1) as f64 + 0.5);
    for (j, (label, values)) in series.iter().enumerate() {
        let color = COLORS[j % COLORS.len()];
        for (i, v) in values.iter().enumerate() {
            let h = v / ymax * (H - 2.0 * PAD);
            let x = PAD + i as f64 * slot + j as f64 * bar;
            let _ = writeln!(
                s,
                "<rect x=\"{x:.2}\" y=\"{:.2}\" width=\"{bar:.2}\" height=\"{h:.2}\" fill=\"{color}\"/>",
                H - PAD - h
            );
        }
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{label}</text>",
            W - PAD - 120.0,
            PAD + 16.0 * j as f64
        );
    }
    let x = (bins.first().map_or(0.0, |b| b.0), bins.last().map_or(1.0, |b| b.1));
    axis_labels(&mut s, x, (0.0, ymax), "ratio", "fraction");
    s.push_str("</svg>\n");
    s
}

/// Line chart with a log-scaled x axis.
pub fn lines_logx(title: &str, y_label: &str, series: &[Series]) -> String {
    let mut s = header(title);
    let pts = series.iter().flat_map(|c| c.points.iter());
    let (mut x0, mut x1, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for &(x, y) in pts {
        x0 = x0.min(x.ln());
        x1 = x1.max(x.ln());
        y1 = y1.max(y);
    }
    if !x0.is_finite() || x1 <= x0 {
        x0 = 0.0;
        x1 = 1.0;
    }
    let y1 = y1.max(1e-12);
    let sx = |x: f64| PAD + (x.ln() - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - y / y1 * (H - 2.0 * PAD);
    for (j, c) in series.iter().enumerate() {
        let color = COLORS[j % COLORS.len()];
        let d: Vec<String> = c
            .points
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| format!("{}{:.2} {:.2}", if i == 0 { "M" } else { "L" }, sx(x), sy(y)))
            .collect();
        let _ = writeln!(s, "<path d=\"{}\" stroke=\"{color}\" fill=\"none\"/>", d.join(" "));
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>",
            PAD + 10.0,
            PAD + 16.0 * j as f64,
            c.label
        );
    }
    axis_labels(&mut s, (x0.exp(), x1.exp()), (0.0, y1), "T", y_label);
    s.push_str("</svg>\n");
    s
}
