//! Minimal static SVG line charts.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

/// A polyline with an optional band `[lo, hi]` around it.
pub struct Series {
    pub label: String,
    pub colour: &'static str,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub band: Option<(Vec<f64>, Vec<f64>)>,
    /// Draw markers only, no connecting line.
    pub points_only: bool,
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
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
    if hi - lo < 1e-12 * (1.0 + lo.abs()) {
        let pad = 0.5 * (1.0 + lo.abs()) * 0.1;
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

impl Chart {
    pub fn render(&self) -> String {
        let xs = self.series.iter().flat_map(|s| s.x.iter().copied());
        let (x0, x1) = range(xs);
        let ys = self.series.iter().flat_map(|s| {
            let band = s.band.iter().flat_map(|(lo, hi)| lo.iter().chain(hi.iter()).copied());
            s.y.iter().copied().chain(band)
        });
        let (y0, y1) = range(ys);
        let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
        let py = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);

        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">"
        );
        out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        let _ = writeln!(out, "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>", W / 2.0, esc(&self.title));

        // Axes and ticks.
        let (bx, by) = (LEFT, H - BOTTOM);
        let _ = writeln!(out, "<line x1=\"{bx}\" y1=\"{by}\" x2=\"{}\" y2=\"{by}\" stroke=\"black\"/>", W - RIGHT);
        let _ = writeln!(out, "<line x1=\"{bx}\" y1=\"{by}\" x2=\"{bx}\" y2=\"{TOP}\" stroke=\"black\"/>");
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
            let _ = writeln!(
                out,
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
                px(xv),
                by + 16.0,
                tick(xv)
            );
            let _ = writeln!(
                out,
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
                bx - 6.0,
                py(yv) + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>", W / 2.0, H - 12.0, esc(&self.x_label));
        let _ = writeln!(
            out,
            "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>",
            H / 2.0,
            H / 2.0,
            esc(&self.y_label)
        );

        for (k, s) in self.series.iter().enumerate() {
            let pts = |ys: &[f64]| -> Vec<(f64, f64)> {
                s.x.iter().zip(ys).filter(|(x, y)| x.is_finite() && y.is_finite()).map(|(x, y)| (px(*x), py(*y))).collect()
            };
            if let Some((lo, hi)) = &s.band {
                let mut poly = pts(hi);
                poly.extend(pts(lo).into_iter().rev());
                if poly.len() >= 3 {
                    let _ = writeln!(out, "<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.2\" stroke=\"none\"/>", path(&poly), s.colour);
                } else {
                    for ((x, l), h) in s.x.iter().zip(lo).zip(hi) {
                        if x.is_finite() && l.is_finite() && h.is_finite() {
                            let _ = writeln!(
                                out,
                                "<line x1=\"{0:.1}\" y1=\"{1:.1}\" x2=\"{0:.1}\" y2=\"{2:.1}\" stroke=\"{3}\" stroke-width=\"3\" stroke-opacity=\"0.4\"/>",
                                px(*x),
                                py(*l),
                                py(*h),
                                s.colour
                            );
                        }
                    }
                }
            }
            let line = pts(&s.y);
            if !s.points_only && line.len() >= 2 {
                let _ = writeln!(out, "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>", path(&line), s.colour);
            }
            for (x, y) in &line {
                let _ = writeln!(out, "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"3\" fill=\"{}\"/>", s.colour);
            }
            let ly = TOP + 14.0 * k as f64;
            let _ = writeln!(
                out,
                "<text x=\"{}\" y=\"{ly:.1}\" fill=\"{}\">{}</text>",
                W - RIGHT - 150.0,
                s.colour,
                esc(&s.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn path(p: &[(f64, f64)]) -> String {
    p.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect::<Vec<_>>().join(" ")
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}
