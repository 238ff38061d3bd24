//! Minimal SVG charts: line/marker panels and a lattice drawing.

use std::fmt::Write;

use crowding::lattice::{GateRole, Lattice};

const PALETTE: [&str; 9] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#7f7f7f",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Markers,
    Dashed,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
    /// Palette slot; series sharing a slot share a colour.
    pub color: usize,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, style: Style, color: usize) -> Self {
        Self {
            label: label.into(),
            points,
            style,
            color,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

impl Panel {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x: false,
            log_y: false,
            series: Vec::new(),
        }
    }
}

const PANEL_W: f64 = 520.0;
const PANEL_H: f64 = 380.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 56.0;

/// Round-number tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(f64::EPSILON);
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= target as f64)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        if log {
            lo = lo.floor();
            hi = hi.ceil();
        }
        Self { lo, hi, log }
    }

    fn map(&self, v: f64, a: f64, b: f64) -> Option<f64> {
        if self.log && v <= 0.0 {
            return None;
        }
        let v = if self.log { v.log10() } else { v };
        Some(a + (v - self.lo) / (self.hi - self.lo) * (b - a))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            (self.lo as i64..=self.hi as i64)
                .map(|e| (10f64.powi(e as i32), fmt_tick(10f64.powi(e as i32))))
                .collect()
        } else {
            ticks(self.lo, self.hi, 6).into_iter().map(|t| (t, fmt_tick(t))).collect()
        }
    }
}

fn draw_panel(out: &mut String, p: &Panel, ox: f64, oy: f64) {
    let (x0, x1) = (ox + MARGIN_L, ox + PANEL_W - MARGIN_R);
    let (y0, y1) = (oy + PANEL_H - MARGIN_B, oy + MARGIN_T);
    let xa = Axis::fit(p.series.iter().flat_map(|s| s.points.iter().map(|q| q.0)), p.log_x);
    let ya = Axis::fit(p.series.iter().flat_map(|s| s.points.iter().map(|q| q.1)), p.log_y);

    let _ = writeln!(
        out,
        r##"<rect x="{x0:.1}" y="{y1:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#333"/>"##,
        x1 - x0,
        y0 - y1
    );
    for (v, label) in xa.ticks() {
        if let Some(x) = xa.map(v, x0, x1) {
            let _ = writeln!(
                out,
                r##"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{:.1}" stroke="#333"/><text x="{x:.1}" y="{:.1}" font-size="11" text-anchor="middle">{label}</text>"##,
                y0 + 5.0,
                y0 + 18.0
            );
        }
    }
    for (v, label) in ya.ticks() {
        if let Some(y) = ya.map(v, y0, y1) {
            let _ = writeln!(
                out,
                r##"<line x1="{:.1}" y1="{y:.1}" x2="{x0:.1}" y2="{y:.1}" stroke="#333"/><line x1="{x0:.1}" y1="{y:.1}" x2="{x1:.1}" y2="{y:.1}" stroke="#eee"/><text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{label}</text>"##,
                x0 - 5.0,
                x0 - 8.0,
                y + 4.0
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        oy + 22.0,
        escape(&p.title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        y0 + 40.0,
        escape(&p.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate({:.1},{:.1}) rotate(-90)" font-size="12" text-anchor="middle">{}</text>"#,
        ox + 18.0,
        (y0 + y1) / 2.0,
        escape(&p.y_label)
    );

    for s in &p.series {
        let color = PALETTE[s.color % PALETTE.len()];
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .filter_map(|&(x, y)| Some((xa.map(x, x0, x1)?, ya.map(y, y0, y1)?)))
            .collect();
        match s.style {
            Style::Markers => {
                for (x, y) in &pts {
                    let _ = writeln!(out, r#"<circle cx="{x:.1}" cy="{y:.1}" r="2.5" fill="{color}"/>"#);
                }
            }
            Style::Line | Style::Dashed => {
                if pts.len() > 1 {
                    let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
                    let dash = if s.style == Style::Dashed { r#" stroke-dasharray="5,4""# } else { "" };
                    let _ = writeln!(
                        out,
                        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>"#,
                        path.join(" ")
                    );
                }
            }
        }
    }

    let labelled: Vec<&Series> = p.series.iter().filter(|s| !s.label.is_empty()).collect();
    for (i, s) in labelled.iter().enumerate() {
        let color = PALETTE[s.color % PALETTE.len()];
        let (lx, ly) = (x1 - 150.0, y1 + 14.0 + 15.0 * i as f64);
        let mark = match s.style {
            Style::Markers => format!(r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#, lx + 9.0, ly - 4.0),
            _ => format!(
                r#"<line x1="{lx:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/>"#,
                ly - 4.0,
                lx + 18.0,
                ly - 4.0
            ),
        };
        let _ = writeln!(
            out,
            r#"{mark}<text x="{:.1}" y="{ly:.1}" font-size="11">{}</text>"#,
            lx + 24.0,
            escape(&s.label)
        );
    }
}

/// Panels laid out left to right.
pub fn render_panels(panels: &[Panel]) -> String {
    let w = PANEL_W * panels.len().max(1) as f64;
    let mut out = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{PANEL_H:.0}" viewBox="0 0 {w:.0} {PANEL_H:.0}" font-family="sans-serif">"#
    );
    out.push('\n');
    out.push_str(&format!(r#"<rect width="{w:.0}" height="{PANEL_H:.0}" fill="white"/>"#));
    out.push('\n');
    for (i, p) in panels.iter().enumerate() {
        draw_panel(&mut out, p, PANEL_W * i as f64, 0.0);
    }
    out.push_str("</svg>\n");
    out
}

/// Nodes coloured by pattern index, controls outlined thick.
pub fn render_lattice(l: &Lattice) -> String {
    let scale = 36.0;
    let pad = 40.0;
    let xs = l.nodes.iter().map(|n| n.position[0]);
    let ys = l.nodes.iter().map(|n| n.position[1]);
    let (xmin, xmax) = (xs.clone().min().unwrap_or(0), xs.max().unwrap_or(0));
    let (ymin, ymax) = (ys.clone().min().unwrap_or(0), ys.max().unwrap_or(0));
    let w = (xmax - xmin) as f64 * scale + 2.0 * pad;
    let h = (ymax - ymin) as f64 * scale + 2.0 * pad;
    let at = |p: [i32; 2]| {
        (
            pad + (p[0] - xmin) as f64 * scale,
            pad + (p[1] - ymin) as f64 * scale,
        )
    };
    let mut out = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif">"#
    );
    out.push('\n');
    out.push_str(&format!(r#"<rect width="{w:.0}" height="{h:.0}" fill="white"/>"#));
    out.push('\n');
    for &[c, t] in &l.edges {
        let (x1, y1) = at(l.nodes[c].position);
        let (x2, y2) = at(l.nodes[t].position);
        let _ = writeln!(
            out,
            r##"<line x1="{x1:.1}" y1="{y1:.1}" x2="{x2:.1}" y2="{y2:.1}" stroke="#888" stroke-width="2"/>"##
        );
    }
    for n in &l.nodes {
        let (x, y) = at(n.position);
        let fill = PALETTE[(n.pattern_index as usize - 1) % PALETTE.len()];
        let stroke = if n.gate_role == GateRole::Control { 3.0 } else { 1.0 };
        let _ = writeln!(
            out,
            r##"<circle cx="{x:.1}" cy="{y:.1}" r="11" fill="{fill}" stroke="#000" stroke-width="{stroke}"/><text x="{x:.1}" y="{:.1}" font-size="10" text-anchor="middle" fill="white">f{}</text>"##,
            y + 3.5,
            n.pattern_index
        );
    }
    out.push_str("</svg>\n");
    out
}
