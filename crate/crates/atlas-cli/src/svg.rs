//! Hand-written SVG 1.1 figures. Every drawn leaf, tree edge or polygon
//! side is exactly one `<path>`; markers use `<circle>` and `<line>`.

use std::f64::consts::PI;
use std::fmt::Write;

use hopf_atlas::realtree::MetricTree;
use hopf_atlas::Complex64;

struct Figure {
    body: String,
    min: (f64, f64),
    max: (f64, f64),
}

impl Figure {
    fn new() -> Self {
        Self {
            body: String::new(),
            min: (f64::INFINITY, f64::INFINITY),
            max: (f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    fn include(&mut self, z: Complex64) {
        self.min = (self.min.0.min(z.re), self.min.1.min(-z.im));
        self.max = (self.max.0.max(z.re), self.max.1.max(-z.im));
    }

    fn path(&mut self, d: &str, class: &str) {
        let _ = writeln!(self.body, "  <path class=\"{class}\" d=\"{d}\"/>");
    }

    fn polyline(&mut self, pts: &[Complex64], class: &str) {
        if pts.is_empty() {
            return;
        }
        let mut d = String::new();
        for (i, z) in pts.iter().enumerate() {
            self.include(*z);
            let _ = write!(d, "{}{} {}", if i == 0 { "M" } else { " L" }, num(z.re), num(-z.im));
        }
        self.path(&d, class);
    }

    fn circle(&mut self, c: Complex64, r: f64, class: &str) {
        self.include(c + Complex64::new(r, r));
        self.include(c - Complex64::new(r, r));
        let _ = writeln!(
            self.body,
            "  <circle class=\"{class}\" cx=\"{}\" cy=\"{}\" r=\"{}\"/>",
            num(c.re),
            num(-c.im),
            num(r)
        );
    }

    fn line(&mut self, a: Complex64, b: Complex64, class: &str) {
        self.include(a);
        self.include(b);
        let _ = writeln!(
            self.body,
            "  <line class=\"{class}\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
            num(a.re),
            num(-a.im),
            num(b.re),
            num(-b.im)
        );
    }

    fn finish(self, title: &str) -> String {
        let (mut x0, mut y0, mut x1, mut y1) = (self.min.0, self.min.1, self.max.0, self.max.1);
        if !(x0.is_finite() && y0.is_finite()) {
            (x0, y0, x1, y1) = (-1.0, -1.0, 1.0, 1.0);
        }
        let pad = 0.05 * (x1 - x0).max(y1 - y0).max(1e-3);
        let (w, h) = (x1 - x0 + 2.0 * pad, y1 - y0 + 2.0 * pad);
        let stroke = 0.004 * w.max(h);
        let mut out = String::new();
        let _ = writeln!(out, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"600\" height=\"600\" viewBox=\"{} {} {} {}\">",
            num(x0 - pad),
            num(y0 - pad),
            num(w),
            num(h)
        );
        let _ = writeln!(out, "  <title>{}</title>", escape(title));
        let _ = writeln!(
            out,
            "  <style>path, line, circle {{ fill: none; stroke: black; stroke-width: {} }} .vertex, .zero {{ fill: black }} .critical {{ stroke: #c33 }} .ray {{ stroke-dasharray: {} {} }}</style>",
            num(stroke),
            num(4.0 * stroke),
            num(2.0 * stroke)
        );
        out.push_str(&self.body);
        out.push_str("</svg>\n");
        out
    }
}

fn num(x: f64) -> String {
    let s = format!("{x:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Ideal polygon with the given vertex arguments (ascending) in the disc.
pub fn polygon(vertices: &[f64], title: &str) -> String {
    let mut fig = Figure::new();
    fig.circle(Complex64::new(0.0, 0.0), 1.0, "boundary");
    for &t in vertices {
        fig.circle(Complex64::from_polar(1.0, t), 0.015, "vertex");
    }
    let n = vertices.len();
    for i in 0..n {
        let (t0, t1) = (vertices[i], vertices[(i + 1) % n]);
        let delta = (t1 - t0).rem_euclid(2.0 * PI);
        let (p, q) = (Complex64::from_polar(1.0, t0), Complex64::from_polar(1.0, t1));
        let d = if (delta - PI).abs() < 1e-9 || delta < 1e-12 {
            format!("M{} {} L{} {}", num(p.re), num(-p.im), num(q.re), num(-q.im))
        } else {
            // circle orthogonal to the boundary through both ideal points
            let r = (0.5 * delta).tan().abs();
            let sweep = if delta < PI { 0 } else { 1 };
            format!(
                "M{} {} A{} {} 0 0 {} {} {}",
                num(p.re),
                num(-p.im),
                num(r),
                num(r),
                sweep,
                num(q.re),
                num(-q.im)
            )
        };
        fig.path(&d, "side");
    }
    fig.finish(title)
}

/// Schematic star: vertices at the zeros, one path per finite edge and per ray.
pub fn tree(t: &MetricTree, title: &str) -> String {
    let mut fig = Figure::new();
    let reach = 1.0 + t.vertices.iter().map(|v| v.location.norm()).fold(0.0, f64::max);
    for (a, b, _) in t.merged_edges() {
        fig.polyline(&[t.vertices[a].location, t.vertices[b].location], "edge");
    }
    for ray in &t.infinite_edges {
        let from = t.vertices[ray.vertex].location;
        let to = from + Complex64::from_polar(reach, ray.direction);
        fig.polyline(&[from, to], "ray");
    }
    for v in &t.vertices {
        fig.circle(v.location, 0.03 * reach, "vertex");
    }
    fig.finish(title)
}

/// Traced leaves with the critical directions drawn at each zero.
pub fn traces(zeros: &[(Complex64, Vec<f64>)], leaves: &[Vec<Complex64>], title: &str) -> String {
    let mut fig = Figure::new();
    for leaf in leaves {
        fig.polyline(leaf, "leaf");
    }
    let span = {
        let mut f = Figure::new();
        for z in leaves.iter().flatten().chain(zeros.iter().map(|z| &z.0)) {
            f.include(*z);
        }
        if f.min.0.is_finite() {
            (f.max.0 - f.min.0).max(f.max.1 - f.min.1).max(1.0)
        } else {
            1.0
        }
    };
    for (z, dirs) in zeros {
        fig.circle(*z, 0.01 * span, "zero");
        for &t in dirs {
            fig.line(*z, *z + Complex64::from_polar(0.06 * span, t), "critical");
        }
    }
    fig.finish(title)
}
