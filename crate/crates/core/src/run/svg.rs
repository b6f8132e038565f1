//! Minimal SVG writers: heatmap, scatter and triangle-mesh contours.

use crate::geom::{PlaneVec, Rect};
use crate::solver::DiscDomain;
use std::fmt::Write;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 40.0;

struct Frame {
    bounds: Rect,
}

impl Frame {
    fn new(bounds: Rect) -> Self {
        let pad = |lo: f64, hi: f64| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        let (x0, x1) = pad(bounds.x_min, bounds.x_max);
        let (y0, y1) = pad(bounds.y_min, bounds.y_max);
        // Square aspect.
        let span = (x1 - x0).max(y1 - y0);
        let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
        Frame { bounds: Rect::new(cx - 0.5 * span, cx + 0.5 * span, cy - 0.5 * span, cy + 0.5 * span) }
    }

    fn scale(&self) -> f64 {
        (SIZE - 2.0 * MARGIN) / (self.bounds.x_max - self.bounds.x_min)
    }

    fn map(&self, p: PlaneVec) -> (f64, f64) {
        let s = self.scale();
        (MARGIN + (p.x - self.bounds.x_min) * s, SIZE - MARGIN - (p.y - self.bounds.y_min) * s)
    }
}

fn open(out: &mut String, title: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}"><rect width="100%" height="100%" fill="white"/><text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        SIZE / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Piecewise-linear blue-to-yellow ramp on `[0, 1]`.
pub fn ramp(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] = [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (94.0, 201.0, 98.0), (253.0, 231.0, 37.0)];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |p: f64, q: f64| (p + (q - p) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Grid values (row-major, `nx` per row, bottom row first) as colored cells.
pub fn heatmap(bounds: Rect, nx: usize, ny: usize, values: &[f64], title: &str) -> String {
    let frame = Frame::new(bounds);
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let dx = (bounds.x_max - bounds.x_min) / (nx.max(2) - 1) as f64;
    let dy = (bounds.y_max - bounds.y_min) / (ny.max(2) - 1) as f64;
    let mut out = String::new();
    open(&mut out, title);
    let s = frame.scale();
    for j in 0..ny {
        for i in 0..nx {
            let v = values[j * nx + i];
            let c = PlaneVec::new(bounds.x_min + i as f64 * dx - 0.5 * dx, bounds.y_min + j as f64 * dy + 0.5 * dy);
            let (x, y) = frame.map(c);
            let _ = write!(out, r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#, dx * s + 0.3, dy * s + 0.3, ramp((v - lo) / span));
        }
    }
    let _ = write!(out, r#"<text x="{MARGIN}" y="{}" font-family="sans-serif" font-size="11">range [{lo:.4e}, {hi:.4e}]</text></svg>"#, SIZE - 12.0);
    out
}

/// A circle overlay for scatter plots.
#[derive(Clone, Copy, Debug)]
pub struct Circle {
    pub center: PlaneVec,
    pub radius: f64,
    pub color: &'static str,
}

pub fn scatter(points: &[PlaneVec], circles: &[Circle], title: &str) -> String {
    let mut bounds = Rect::new(f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    let mut grow = |p: PlaneVec| {
        bounds.x_min = bounds.x_min.min(p.x);
        bounds.x_max = bounds.x_max.max(p.x);
        bounds.y_min = bounds.y_min.min(p.y);
        bounds.y_max = bounds.y_max.max(p.y);
    };
    points.iter().for_each(|p| grow(*p));
    for c in circles {
        grow(c.center + PlaneVec::new(c.radius, c.radius));
        grow(c.center - PlaneVec::new(c.radius, c.radius));
    }
    if !bounds.x_min.is_finite() {
        bounds = Rect::centered(1.0);
    }
    let frame = Frame::new(bounds);
    let mut out = String::new();
    open(&mut out, title);
    for p in points {
        let (x, y) = frame.map(*p);
        let _ = write!(out, r##"<circle cx="{x:.2}" cy="{y:.2}" r="1.2" fill="#1f4e9c"/>"##);
    }
    for c in circles {
        let (x, y) = frame.map(c.center);
        let _ = write!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{:.2}" fill="none" stroke="{}" stroke-width="1.2"/>"#, c.radius * frame.scale(), c.color);
    }
    out.push_str("</svg>");
    out
}

/// Level lines of a nodal function on the disc mesh by marching triangles.
pub fn contour(domain: &DiscDomain, values: &[f64], levels: usize, title: &str) -> String {
    let frame = Frame::new(Rect::centered(1.0));
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = String::new();
    open(&mut out, title);
    let (cx, cy) = frame.map(PlaneVec::ZERO);
    let _ = write!(out, r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="none" stroke="#888"/>"##, frame.scale());
    if hi > lo {
        for l in 1..=levels {
            let c = lo + (hi - lo) * l as f64 / (levels + 1) as f64;
            let color = ramp(l as f64 / (levels + 1) as f64);
            let mut path = String::new();
            for t in &domain.triangles {
                let mut hits = Vec::with_capacity(2);
                for e in 0..3 {
                    let (a, b) = (t[e], t[(e + 1) % 3]);
                    let (va, vb) = (values[a] - c, values[b] - c);
                    if (va < 0.0) != (vb < 0.0) {
                        let s = va / (va - vb);
                        hits.push(domain.nodes[a] + (domain.nodes[b] - domain.nodes[a]) * s);
                    }
                }
                if hits.len() == 2 {
                    let (x0, y0) = frame.map(hits[0]);
                    let (x1, y1) = frame.map(hits[1]);
                    let _ = write!(path, "M{x0:.2} {y0:.2}L{x1:.2} {y1:.2}");
                }
            }
            if !path.is_empty() {
                let _ = write!(out, r#"<path d="{path}" stroke="{color}" fill="none" stroke-width="1"/>"#);
            }
        }
    }
    let _ = write!(out, r#"<text x="{MARGIN}" y="{}" font-family="sans-serif" font-size="11">range [{lo:.4e}, {hi:.4e}]</text></svg>"#, SIZE - 12.0);
    out
}
