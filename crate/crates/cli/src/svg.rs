//! Minimal SVG plots: axes, polylines, markers and bars.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;

pub struct Plot {
    title: String,
    x_label: String,
    y_label: String,
    x: (f64, f64),
    y: (f64, f64),
    body: String,
}

fn span(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str, x: (f64, f64), y: (f64, f64)) -> Self {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x: span(x.0, x.1),
            y: span(y.0, y.1),
            body: String::new(),
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], color: &str, width: f64) {
        if points.len() < 2 {
            return self.markers(points, color, width + 1.0);
        }
        let pts: Vec<String> = points.iter().map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y))).collect();
        let _ = writeln!(
            self.body,
            r#"<polyline fill="none" stroke="{color}" stroke-width="{width}" points="{}"/>"#,
            pts.join(" ")
        );
    }

    pub fn markers(&mut self, points: &[(f64, f64)], color: &str, radius: f64) {
        for &(x, y) in points {
            let _ = writeln!(
                self.body,
                r#"<circle cx="{:.2}" cy="{:.2}" r="{radius}" fill="{color}"/>"#,
                self.px(x),
                self.py(y)
            );
        }
    }

    /// Horizontal band `y ∈ [lo, hi]` across the whole plot.
    pub fn hband(&mut self, lo: f64, hi: f64, color: &str) {
        let lo = lo.max(self.y.0);
        let hi = hi.min(self.y.1);
        if hi < lo {
            return;
        }
        let top = self.py(hi);
        let h = (self.py(lo) - top).max(0.5);
        let _ = writeln!(
            self.body,
            r#"<rect x="{MARGIN:.2}" y="{top:.2}" width="{:.2}" height="{h:.2}" fill="{color}" fill-opacity="0.35"/>"#,
            WIDTH - 2.0 * MARGIN
        );
    }

    /// Rectangle `[x0, x1] × [y0, y1]` in data coordinates.
    pub fn rect(&mut self, x0: f64, x1: f64, y0: f64, y1: f64, color: &str) {
        let (l, r) = (self.px(x0), self.px(x1));
        let (t, b) = (self.py(y1), self.py(y0));
        let _ = writeln!(
            self.body,
            r#"<rect x="{l:.2}" y="{t:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
            (r - l).max(1.0),
            (b - t).max(1.0)
        );
    }

    pub fn label(&mut self, x: f64, y: f64, text: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
            self.px(x),
            self.py(y),
            esc(text)
        );
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="24" font-size="15" text-anchor="middle">{}</text>"#, WIDTH / 2.0, esc(&self.title));
        let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
        let _ = writeln!(s, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, r - l, b - t);
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let xv = self.x.0 + f * (self.x.1 - self.x.0);
            let yv = self.y.0 + f * (self.y.1 - self.y.0);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{}" font-size="11" text-anchor="middle">{}</text>"#, self.px(xv), b + 16.0, tick(xv));
            let _ = writeln!(s, r#"<text x="{}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#, l - 6.0, self.py(yv) + 4.0, tick(yv));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 12.0, esc(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="14" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            esc(&self.y_label)
        );
        s.push_str(&self.body);
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}
