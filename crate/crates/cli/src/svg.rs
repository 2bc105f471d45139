//! Minimal SVG plots: polylines, scatter markers and heat grids.
//!
//! Output is a pure function of the data, so repeated runs give identical
//! bytes. Non-finite values are skipped.

use std::fmt::Write;

const PANEL_W: f64 = 640.0;
const PANEL_H: f64 = 400.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 50.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Markers,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

impl Series {
    pub fn line(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
            style: Style::Line,
        }
    }

    pub fn markers(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
            style: Style::Markers,
        }
    }
}

/// Values on a regular grid, `values[row][col]` with rows along y.
#[derive(Debug, Clone)]
pub struct Heat {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub label: String,
}

#[derive(Debug, Clone)]
pub enum Body {
    Xy(Vec<Series>),
    Heat(Heat),
}

#[derive(Debug, Clone)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub body: Body,
    /// Extra lines printed under the title, such as saturation warnings.
    pub notes: Vec<String>,
}

impl Panel {
    pub fn xy(title: impl Into<String>, x: impl Into<String>, y: impl Into<String>, series: Vec<Series>) -> Self {
        Self {
            title: title.into(),
            x_label: x.into(),
            y_label: y.into(),
            body: Body::Xy(series),
            notes: Vec::new(),
        }
    }

    pub fn heat(title: impl Into<String>, x: impl Into<String>, y: impl Into<String>, heat: Heat) -> Self {
        Self {
            title: title.into(),
            x_label: x.into(),
            y_label: y.into(),
            body: Body::Heat(heat),
            notes: Vec::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}

/// Panels stacked vertically.
pub fn render(panels: &[Panel]) -> String {
    let height = PANEL_H * panels.len().max(1) as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PANEL_W}" height="{height}" viewBox="0 0 {PANEL_W} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        let _ = writeln!(s, r#"<g transform="translate(0,{})">"#, i as f64 * PANEL_H);
        panel(&mut s, p);
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}

fn esc(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vals.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-12 * lo.abs().max(1e-300) {
        let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN_L + (x - self.x.0) / (self.x.1 - self.x.0) * (PANEL_W - MARGIN_L - MARGIN_R)
    }

    fn py(&self, y: f64) -> f64 {
        PANEL_H - MARGIN_B - (y - self.y.0) / (self.y.1 - self.y.0) * (PANEL_H - MARGIN_T - MARGIN_B)
    }
}

fn axes(s: &mut String, p: &Panel, f: &Frame) {
    let (x0, x1) = (MARGIN_L, PANEL_W - MARGIN_R);
    let (y0, y1) = (PANEL_H - MARGIN_B, MARGIN_T);
    let _ = writeln!(
        s,
        r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let xv = f.x.0 + t * (f.x.1 - f.x.0);
        let yv = f.y.0 + t * (f.y.1 - f.y.0);
        let (xp, yp) = (f.px(xv), f.py(yv));
        let _ = writeln!(s, r#"<line x1="{xp:.2}" y1="{y0}" x2="{xp:.2}" y2="{}" stroke="black"/>"#, y0 + 4.0);
        let _ = writeln!(
            s,
            r#"<text x="{xp:.2}" y="{}" text-anchor="middle">{}</text>"#,
            y0 + 16.0,
            tick(xv)
        );
        let _ = writeln!(s, r#"<line x1="{}" y1="{yp:.2}" x2="{x0}" y2="{yp:.2}" stroke="black"/>"#, x0 - 4.0);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 6.0,
            yp + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
        0.5 * (x0 + x1),
        PANEL_H - 12.0,
        esc(&p.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        0.5 * (y0 + y1),
        0.5 * (y0 + y1),
        esc(&p.y_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="{x0}" y="16" font-size="13">{}</text>"#,
        esc(&p.title)
    );
    for (i, n) in p.notes.iter().enumerate() {
        let _ = writeln!(
            s,
            r##"<text x="{x1}" y="{}" text-anchor="end" fill="#d62728">{}</text>"##,
            16.0 + 12.0 * i as f64,
            esc(n)
        );
    }
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e4).contains(&a) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn panel(s: &mut String, p: &Panel) {
    match &p.body {
        Body::Xy(series) => {
            let all = || series.iter().flat_map(|c| c.points.iter());
            let f = Frame {
                x: range(all().map(|p| p.0)),
                y: range(all().map(|p| p.1)),
            };
            axes(s, p, &f);
            for (i, c) in series.iter().enumerate() {
                let color = PALETTE[i % PALETTE.len()];
                let pts: Vec<(f64, f64)> = c
                    .points
                    .iter()
                    .filter(|(x, y)| x.is_finite() && y.is_finite())
                    .map(|&(x, y)| (f.px(x), f.py(y)))
                    .collect();
                match c.style {
                    Style::Line => {
                        let mut d = String::new();
                        for (x, y) in &pts {
                            let _ = write!(d, "{x:.2},{y:.2} ");
                        }
                        let _ = writeln!(
                            s,
                            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                            d.trim_end()
                        );
                    }
                    Style::Markers => {
                        for (x, y) in &pts {
                            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2" fill="{color}"/>"#);
                        }
                    }
                }
                let ly = MARGIN_T + 10.0 + 14.0 * i as f64;
                let lx = PANEL_W - MARGIN_R + 10.0;
                let _ = writeln!(
                    s,
                    r#"<rect x="{lx}" y="{}" width="10" height="3" fill="{color}"/><text x="{}" y="{ly}">{}</text>"#,
                    ly - 4.0,
                    lx + 14.0,
                    esc(&c.label)
                );
            }
        }
        Body::Heat(h) => {
            let f = Frame {
                x: range(h.xs.iter().copied()),
                y: range(h.ys.iter().copied()),
            };
            axes(s, p, &f);
            let (vlo, vhi) = range(h.values.iter().flatten().copied());
            let cw = cell(&h.xs, true);
            let ch = cell(&h.ys, false);
            for (r, row) in h.values.iter().enumerate() {
                for (c, &v) in row.iter().enumerate() {
                    if !v.is_finite() {
                        continue;
                    }
                    let t = ((v - vlo) / (vhi - vlo)).clamp(0.0, 1.0);
                    let x = f.px(h.xs[c]) - 0.5 * cw;
                    let y = f.py(h.ys[r]) - 0.5 * ch;
                    let _ = writeln!(
                        s,
                        r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                        cw + 0.3,
                        ch + 0.3,
                        ramp(t)
                    );
                }
            }
            let lx = PANEL_W - MARGIN_R + 14.0;
            let _ = writeln!(s, r#"<text x="{lx}" y="{}">{}</text>"#, MARGIN_T + 8.0, esc(&h.label));
            for k in 0..=4 {
                let t = k as f64 / 4.0;
                let y = MARGIN_T + 20.0 + 18.0 * (4 - k) as f64;
                let _ = writeln!(
                    s,
                    r#"<rect x="{lx}" y="{y}" width="14" height="14" fill="{}"/><text x="{}" y="{}">{}</text>"#,
                    ramp(t),
                    lx + 20.0,
                    y + 11.0,
                    tick(vlo + t * (vhi - vlo))
                );
            }
        }
    }
}

/// Pixel size of one grid cell along an axis.
fn cell(vals: &[f64], horizontal: bool) -> f64 {
    let span = if horizontal {
        PANEL_W - MARGIN_L - MARGIN_R
    } else {
        PANEL_H - MARGIN_T - MARGIN_B
    };
    if vals.len() < 2 {
        return span;
    }
    span / (vals.len() - 1) as f64
}

/// Dark blue to yellow.
fn ramp(t: f64) -> String {
    let lerp = |a: f64, b: f64| (a + t * (b - a)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(20.0, 250.0), lerp(30.0, 230.0), lerp(110.0, 40.0))
}
