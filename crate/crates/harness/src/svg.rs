//! Self-contained SVG plots: scatter, histogram with a density overlay, line chart.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#555555"];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        Self { x: widen(x), y: widen(y) }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (H - TOP - BOTTOM)
    }
}

fn widen((lo, hi): (f64, f64)) -> (f64, f64) {
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo > 1e-12 * lo.abs().max(hi.abs()).max(1e-300) {
        (lo, hi)
    } else {
        let pad = lo.abs().max(1.0) * 0.5;
        (lo - pad, hi + pad)
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Round tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        return format!("{v:.0e}");
    }
    let s = format!("{v:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(title: &str) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>
"#,
        W / 2.0,
        escape(title)
    );
    s
}

fn axes(s: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(
        s,
        r##"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="#333"/>"##,
        x1 - x0,
        y1 - y0
    );
    for t in ticks(f.x.0, f.x.1) {
        let x = f.px(t);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{y1}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            y1 + 5.0,
            y1 + 18.0,
            label(t)
        );
    }
    for t in ticks(f.y.0, f.y.1) {
        let y = f.py(t);
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0,
            label(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        H - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(16 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

fn polyline(s: &mut String, f: &Frame, pts: &[(f64, f64)], color: &str, dashed: bool) {
    let coords: Vec<String> = pts
        .iter()
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
        .collect();
    let dash = if dashed { r#" stroke-dasharray="6 4""# } else { "" };
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#,
        coords.join(" ")
    );
}

fn legend(s: &mut String, names: &[(&str, &str, bool)]) {
    for (i, (name, color, dashed)) in names.iter().enumerate() {
        let y = TOP + 16.0 + 18.0 * i as f64;
        let x = W - RIGHT - 170.0;
        let dash = if *dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            s,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
            x + 24.0,
            x + 30.0,
            y + 4.0,
            escape(name)
        );
    }
}

/// Scatter plot with equal axis scales, centred on the data.
pub fn scatter(points: &[(f64, f64)], title: &str) -> String {
    let (xl, xh) = range(points.iter().map(|p| p.0));
    let (yl, yh) = range(points.iter().map(|p| p.1));
    let half = ((xh - xl).max(yh - yl) / 2.0) * 1.05;
    let (cx, cy) = ((xl + xh) / 2.0, (yl + yh) / 2.0);
    // keep the unit square per pixel equal on both axes
    let aspect = (W - LEFT - RIGHT) / (H - TOP - BOTTOM);
    let f = Frame::new((cx - half * aspect, cx + half * aspect), (cy - half, cy + half));
    let mut s = open(title);
    axes(&mut s, &f, "x0", "x1");
    s.push_str(r##"<g fill="#1f77b4" fill-opacity="0.35">"##);
    s.push('\n');
    for &(x, y) in points {
        if x.is_finite() && y.is_finite() {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1.2"/>"#, f.px(x), f.py(y));
        }
    }
    s.push_str("</g>\n</svg>\n");
    s
}

/// Histogram bars (as densities) with an optional analytic density curve.
pub fn histogram(edges: &[f64], density: &[f64], overlay: Option<(&str, &[(f64, f64)])>, title: &str, xlabel: &str) -> String {
    let x = (edges[0], edges[edges.len() - 1]);
    let top = range(density.iter().copied().chain(overlay.iter().flat_map(|(_, p)| p.iter().map(|q| q.1))));
    let f = Frame::new(x, (0.0, top.1.max(1e-12) * 1.08));
    let mut s = open(title);
    axes(&mut s, &f, xlabel, "density");
    s.push_str(r##"<g fill="#9ecae1" stroke="#3182bd">"##);
    s.push('\n');
    for (k, &d) in density.iter().enumerate() {
        let (a, b) = (f.px(edges[k]), f.px(edges[k + 1]));
        let y = f.py(d);
        let _ = writeln!(
            s,
            r#"<rect x="{a:.2}" y="{y:.2}" width="{:.2}" height="{:.2}"/>"#,
            b - a,
            f.py(0.0) - y
        );
    }
    s.push_str("</g>\n");
    if let Some((name, pts)) = overlay {
        polyline(&mut s, &f, pts, PALETTE[1], false);
        legend(&mut s, &[(name, PALETTE[1], false)]);
    }
    s.push_str("</svg>\n");
    s
}

pub fn line_chart(series: &[Series], title: &str, xlabel: &str, ylabel: &str) -> String {
    let all = || series.iter().flat_map(|s| s.points.iter());
    let (xl, xh) = range(all().map(|p| p.0));
    let (yl, yh) = range(all().map(|p| p.1));
    let pad = (xh - xl) * 0.03;
    let f = Frame::new((xl - pad, xh + pad), (yl.min(0.0), yh * 1.1));
    let mut s = open(title);
    axes(&mut s, &f, xlabel, ylabel);
    let mut names = Vec::new();
    for (i, se) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        polyline(&mut s, &f, &se.points, color, se.dashed);
        for &(x, y) in &se.points {
            if x.is_finite() && y.is_finite() {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, f.px(x), f.py(y));
            }
        }
        names.push((se.name.as_str(), color, se.dashed));
    }
    legend(&mut s, &names);
    s.push_str("</svg>\n");
    s
}
