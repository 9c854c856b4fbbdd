//! Minimal SVG writer for the illustrative figures (discriminant graph,
//! comb domain, v on the gaps).  Plots are never asserted against.

use std::fmt::Write as _;

pub struct Svg {
    width: f64,
    height: f64,
    body: String,
}

/// Affine map from data space to viewport space.
#[derive(Clone, Copy)]
pub struct Frame {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub width: f64,
    pub height: f64,
    pub margin: f64,
}

impl Frame {
    pub fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let w = self.width - 2.0 * self.margin;
        let h = self.height - 2.0 * self.margin;
        let px = self.margin + (x - self.x_min) / (self.x_max - self.x_min) * w;
        let py = self.height - self.margin - (y - self.y_min) / (self.y_max - self.y_min) * h;
        (px, py)
    }
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Svg {
        Svg {
            width,
            height,
            body: String::new(),
        }
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], color: &str, width: f64) {
        if pts.is_empty() {
            return;
        }
        let mut s = String::new();
        for &(x, y) in pts {
            let _ = write!(s, "{x:.2},{y:.2} ");
        }
        let _ = writeln!(
            self.body,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\"/>",
            s.trim_end()
        );
    }

    pub fn line(&mut self, a: (f64, f64), b: (f64, f64), color: &str, width: f64) {
        let _ = writeln!(
            self.body,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{color}\" stroke-width=\"{width}\"/>",
            a.0, a.1, b.0, b.1
        );
    }

    pub fn text(&mut self, at: (f64, f64), size: f64, content: &str) {
        let _ = writeln!(
            self.body,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"{size}\" font-family=\"monospace\">{content}</text>",
            at.0, at.1
        );
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.width, self.height, self.width, self.height, self.body
        )
    }
}

/// Graph of a real function sampled as `(x, y)` pairs, with axes.
pub fn function_plot(samples: &[(f64, f64)], title: &str) -> String {
    let (w, h) = (900.0, 420.0);
    let x_min = samples.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let x_max = samples.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let mut y_min = samples.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let mut y_max = samples.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    // keep the Delta = +-1 levels in view for discriminant plots
    y_min = y_min.min(-1.5);
    y_max = y_max.max(1.5);
    let frame = Frame {
        x_min,
        x_max,
        y_min,
        y_max,
        width: w,
        height: h,
        margin: 30.0,
    };
    let mut svg = Svg::new(w, h);
    for level in [-1.0, 0.0, 1.0] {
        svg.line(
            frame.map(x_min, level),
            frame.map(x_max, level),
            if level == 0.0 { "#888" } else { "#bbb" },
            0.7,
        );
    }
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(x, y)| frame.map(x, y.clamp(y_min, y_max)))
        .collect();
    svg.polyline(&pts, "#1f4e9c", 1.3);
    svg.text((34.0, 20.0), 13.0, title);
    svg.finish()
}

/// The comb domain: the real k axis with vertical slits of height `h_n`
/// at `pi n`.
pub fn comb_plot(slit_positions: &[f64], heights: &[f64], title: &str) -> String {
    let (w, h) = (900.0, 320.0);
    let x_max = slit_positions.last().copied().unwrap_or(1.0) + 2.0;
    let y_max = heights.iter().cloned().fold(0.1, f64::max) * 1.3;
    let frame = Frame {
        x_min: 0.0,
        x_max,
        y_min: -0.1 * y_max,
        y_max,
        width: w,
        height: h,
        margin: 30.0,
    };
    let mut svg = Svg::new(w, h);
    svg.line(frame.map(0.0, 0.0), frame.map(x_max, 0.0), "#333", 1.2);
    for (&x, &hh) in slit_positions.iter().zip(heights) {
        svg.line(frame.map(x, 0.0), frame.map(x, hh), "#b03030", 1.6);
    }
    svg.text((34.0, 20.0), 13.0, title);
    svg.finish()
}

/// One curve per gap: `v(t)` over the gap, drawn side by side.
pub fn gap_v_plot(curves: &[Vec<(f64, f64)>], title: &str) -> String {
    let (w, h) = (900.0, 320.0);
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_max = 0.0f64;
    for c in curves {
        for &(x, y) in c {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_max = y_max.max(y);
        }
    }
    if !x_min.is_finite() {
        x_min = 0.0;
        x_max = 1.0;
    }
    let frame = Frame {
        x_min: x_min - 0.5,
        x_max: x_max + 0.5,
        y_min: 0.0,
        y_max: y_max.max(1e-6) * 1.2,
        width: w,
        height: h,
        margin: 30.0,
    };
    let mut svg = Svg::new(w, h);
    svg.line(
        frame.map(frame.x_min, 0.0),
        frame.map(frame.x_max, 0.0),
        "#333",
        1.0,
    );
    for c in curves {
        let pts: Vec<(f64, f64)> = c.iter().map(|&(x, y)| frame.map(x, y)).collect();
        svg.polyline(&pts, "#207040", 1.3);
    }
    svg.text((34.0, 20.0), 13.0, title);
    svg.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn produces_well_formed_document() {
        let samples: Vec<(f64, f64)> = (0..100)
            .map(|i| {
                let x = i as f64 * 0.1;
                (x, x.cos())
            })
            .collect();
        let doc = function_plot(&samples, "cos");
        assert!(doc.starts_with("<svg"));
        assert!(doc.trim_end().ends_with("</svg>"));
        assert!(doc.contains("polyline"));
    }

    #[test]
    fn comb_handles_empty_input() {
        let doc = comb_plot(&[], &[], "empty");
        assert!(doc.starts_with("<svg"));
    }
}
