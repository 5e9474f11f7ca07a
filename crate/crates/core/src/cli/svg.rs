//! Small deterministic SVG previews. Data files carry the raw numbers.

use std::fmt::Write;

use crate::deterministic::{FixedPoint, FlowField};
use crate::game::StateSpace;
use crate::stochastic::SelectionGradient;

const SIZE: f64 = 600.0;
const RAMP: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

fn ramp(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let pos = t * (RAMP.len() - 1) as f64;
    let i = (pos.floor() as usize).min(RAMP.len() - 2);
    let f = pos - i as f64;
    let (a, b) = (RAMP[i], RAMP[i + 1]);
    let mix = |u: f64, v: f64| (u + (v - u) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, "<title>{title}</title>");
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

fn arrow(out: &mut String, (x0, y0): (f64, f64), (dx, dy): (f64, f64), len: f64, color: &str) {
    let n = dx.hypot(dy);
    if n.is_nan() || n <= 0.0 {
        return;
    }
    let (ux, uy) = (dx / n, dy / n);
    let (x1, y1) = (x0 + ux * len, y0 + uy * len);
    let head = len * 0.35;
    let (hx, hy) = (x1 - ux * head, y1 - uy * head);
    let (px, py) = (-uy * head * 0.5, ux * head * 0.5);
    let _ = writeln!(
        out,
        r#"<path d="M{x0:.2},{y0:.2}L{x1:.2},{y1:.2}M{:.2},{:.2}L{x1:.2},{y1:.2}L{:.2},{:.2}" stroke="{color}" stroke-width="1.2" fill="none"/>"#,
        hx + px,
        hy + py,
        hx - px,
        hy - py
    );
}

/// Vertices of the strategy triangle: outsiders bottom left, defectors bottom
/// right, cooperators on top.
fn corners() -> [(f64, f64); 3] {
    let m = 40.0;
    let base = SIZE - m;
    let top = base - (SIZE - 2.0 * m) * 3f64.sqrt() / 2.0;
    [(SIZE / 2.0, top), (SIZE - m, base), (m, base)]
}

fn simplex_point(c: f64, d: f64, z: f64) -> (f64, f64) {
    let [pc, pd, po] = corners();
    let o = z - c - d;
    (
        (c * pc.0 + d * pd.0 + o * po.0) / z,
        (c * pc.1 + d * pd.1 + o * po.1) / z,
    )
}

/// Stationary distribution as a heat map on the simplex with selection arrows.
pub fn simplex(space: StateSpace, pi: &[f64], gradient: &SelectionGradient, title: &str) -> String {
    let z = space.population() as f64;
    let mut out = String::new();
    header(&mut out, title);
    let [pc, pd, po] = corners();
    let _ = writeln!(
        out,
        r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="none" stroke="black"/>"#,
        pc.0, pc.1, pd.0, pd.1, po.0, po.1
    );
    let pmax = pi.iter().cloned().fold(0.0f64, f64::max);
    let radius = (pd.0 - po.0) / z * 0.6;
    for (s, &p) in space.iter().zip(pi) {
        let (x, y) = simplex_point(s.cooperators as f64, s.defectors as f64, z);
        let _ = writeln!(
            out,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{radius:.2}" fill="{}"/>"#,
            ramp((p / pmax).sqrt())
        );
    }
    let step = (space.population() / 15).max(1);
    let vmax = gradient.points.iter().map(|g| g.speed).fold(0.0f64, f64::max);
    for g in &gradient.points {
        if g.cooperators % step != 0 || g.defectors % step != 0 {
            continue;
        }
        let from = simplex_point(g.cooperators as f64, g.defectors as f64, z);
        let to = simplex_point(
            g.cooperators as f64 + g.delta_cooperators,
            g.defectors as f64 + g.delta_defectors,
            z,
        );
        let color = if g.speed / vmax > 0.5 { "#d62728" } else { "#1f3b73" };
        arrow(&mut out, from, (to.0 - from.0, to.1 - from.1), radius * step as f64 * 1.2, color);
    }
    for (label, p) in [("C", pc), ("D", pd), ("O", po)] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="16" text-anchor="middle">{label}</text>"#,
            p.0,
            if p.1 < SIZE / 2.0 { p.1 - 8.0 } else { p.1 + 22.0 }
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Deterministic field on the `(x, y)` square with fixed points marked.
pub fn square(field: &FlowField, fixed: &[FixedPoint], population: usize, title: &str) -> String {
    let m = 40.0;
    let w = SIZE - 2.0 * m;
    let map = |x: f64, y: f64| (m + x * w, SIZE - m - y * w);
    let mut out = String::new();
    header(&mut out, title);
    let _ = writeln!(
        out,
        r#"<rect x="{m}" y="{m}" width="{w}" height="{w}" fill="none" stroke="black"/>"#
    );
    let step = (population / 15).max(1);
    let vmax = field.points.iter().map(|p| p.x_dot.hypot(p.y_dot)).fold(0.0f64, f64::max);
    for p in &field.points {
        let members = p.cooperators + p.defectors;
        if members % step != 0 || p.cooperators % step.min(members.max(1)) != 0 {
            continue;
        }
        let speed = p.x_dot.hypot(p.y_dot) / vmax;
        arrow(&mut out, map(p.x, p.y), (p.x_dot, -p.y_dot), 12.0, &ramp(speed.sqrt()));
    }
    for f in fixed {
        let (x, y) = map(f.x, f.y);
        let fill = if f.eigenvalues.iter().all(|e| e.re < 0.0) { "black" } else { "white" };
        let _ = writeln!(
            out,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="5" fill="{fill}" stroke="black"/>"#
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">x</text>"#,
        SIZE / 2.0,
        SIZE - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.2}" font-size="14" text-anchor="middle">y</text>"#,
        SIZE / 2.0
    );
    out.push_str("</svg>\n");
    out
}
