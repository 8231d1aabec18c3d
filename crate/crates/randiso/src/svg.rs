//! Minimal SVG rendering for experiment figures: scatter panels, polar
//! curves, and isophase level sets. Figures are derived strictly from the
//! data already written to CSV.

use std::fmt::Write as _;

pub struct SvgCanvas {
    width: f64,
    height: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
    body: String,
}

impl SvgCanvas {
    pub fn new(width: f64, height: f64, x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        Self {
            width,
            height,
            x_range,
            y_range,
            body: String::new(),
        }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let fx = (x - self.x_range.0) / (self.x_range.1 - self.x_range.0);
        let fy = (y - self.y_range.0) / (self.y_range.1 - self.y_range.0);
        (fx * self.width, (1.0 - fy) * self.height)
    }

    pub fn scatter(&mut self, pts: &[[f64; 2]], radius: f64, color: &str) {
        for p in pts {
            let (cx, cy) = self.map(p[0], p[1]);
            let _ = writeln!(
                self.body,
                r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{radius}" fill="{color}" fill-opacity="0.7"/>"#
            );
        }
    }

    pub fn polyline(&mut self, pts: &[[f64; 2]], color: &str, width: f64) {
        if pts.len() < 2 {
            return;
        }
        let coords: Vec<String> = pts
            .iter()
            .map(|p| {
                let (x, y) = self.map(p[0], p[1]);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"/>"#,
            coords.join(" ")
        );
    }

    pub fn circle_outline(&mut self, center: [f64; 2], r: f64, color: &str) {
        let pts: Vec<[f64; 2]> = (0..=128)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / 128.0;
                [center[0] + r * a.cos(), center[1] + r * a.sin()]
            })
            .collect();
        self.polyline(&pts, color, 1.0);
    }

    pub fn text(&mut self, x: f64, y: f64, size: f64, s: &str) {
        let (cx, cy) = self.map(x, y);
        let _ = writeln!(
            self.body,
            r#"<text x="{cx:.2}" y="{cy:.2}" font-size="{size}" font-family="sans-serif">{s}</text>"#
        );
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n{body}</svg>\n",
            w = self.width,
            h = self.height,
            body = self.body
        )
    }
}

/// Side-by-side panels of planar point clouds with a reference circle.
pub fn scatter_panels(
    panels: &[(String, Vec<[f64; 2]>, Option<f64>)],
    half_extent: f64,
) -> String {
    let size = 220.0;
    let mut body = String::new();
    for (k, (label, cloud, circle)) in panels.iter().enumerate() {
        let mut c = SvgCanvas::new(size, size, (-half_extent, half_extent), (-half_extent, half_extent));
        if let Some(r) = circle {
            c.circle_outline([0.0, 0.0], *r, "#888888");
        }
        c.scatter(cloud, 1.6, "#1f4e9c");
        c.text(
            -half_extent * 0.95,
            half_extent * 0.88,
            13.0,
            label,
        );
        let inner = c.finish();
        // strip the outer svg tag and translate into a group
        let inner = inner
            .lines()
            .skip(1)
            .take_while(|l| !l.starts_with("</svg>"))
            .collect::<Vec<_>>()
            .join("\n");
        let _ = writeln!(
            body,
            r#"<g transform="translate({},0)">{}</g>"#,
            k as f64 * (size + 10.0),
            inner
        );
    }
    let total = panels.len() as f64 * 230.0;
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{total}\" height=\"220\" viewBox=\"0 0 {total} 220\">\n{body}</svg>\n"
    )
}
