//! Minimal SVG line and scatter plots.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log10,
}

impl Scale {
    fn map(self, v: f64) -> f64 {
        match self {
            Scale::Linear => v,
            Scale::Log10 => v.log10(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_scale: Scale,
    pub y_scale: Scale,
    pub series: Vec<Series>,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if (hi - lo).abs() < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

impl Plot {
    fn frame(&self) -> Frame {
        let mapped = self
            .series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter_map(|&(x, y)| {
                let (mx, my) = (self.x_scale.map(x), self.y_scale.map(y));
                (mx.is_finite() && my.is_finite()).then_some((mx, my))
            });
        let (mut x0, mut x1, mut y0, mut y1) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for (x, y) in mapped {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        let (x0, x1) = padded(x0, x1);
        let (y0, y1) = padded(y0, y1);
        Frame { x0, x1, y0, y1 }
    }

    fn header(&self, out: &mut String, f: &Frame) {
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
        let _ = writeln!(
            out,
            r#"<path d="M{l} {t} L{l} {b} L{r} {b}" stroke="black" fill="none"/>"#
        );
        for i in 0..=4 {
            let fx = f.x0 + (f.x1 - f.x0) * i as f64 / 4.0;
            let fy = f.y0 + (f.y1 - f.y0) * i as f64 / 4.0;
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                f.px(fx),
                b + 16.0,
                tick_label(fx, self.x_scale)
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                l - 6.0,
                f.py(fy) + 4.0,
                tick_label(fy, self.y_scale)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );
        for (i, s) in self.series.iter().enumerate() {
            let y = MARGIN + 14.0 * i as f64;
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{y}" fill="{}">{}</text>"#,
                WIDTH - MARGIN - 120.0,
                s.color,
                escape(&s.label)
            );
        }
    }

    fn mapped_points<'a>(
        &'a self,
        s: &'a Series,
        f: &'a Frame,
    ) -> impl Iterator<Item = (f64, f64)> + 'a {
        s.points.iter().filter_map(move |&(x, y)| {
            let (mx, my) = (self.x_scale.map(x), self.y_scale.map(y));
            (mx.is_finite() && my.is_finite()).then(|| (f.px(mx), f.py(my)))
        })
    }

    /// Connected lines with point markers.
    pub fn to_line_svg(&self) -> String {
        let f = self.frame();
        let mut out = String::new();
        self.header(&mut out, &f);
        for s in &self.series {
            let pts: Vec<(f64, f64)> = self.mapped_points(s, &f).collect();
            let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
            let _ = writeln!(
                out,
                r#"<polyline points="{}" stroke="{}" fill="none" stroke-width="1.5"/>"#,
                path.join(" "),
                s.color
            );
            for (x, y) in pts {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{x:.1}" cy="{y:.1}" r="3" fill="{}"/>"#,
                    s.color
                );
            }
        }
        out.push_str("</svg>\n");
        out
    }

    /// Unconnected small dots.
    pub fn to_scatter_svg(&self) -> String {
        let f = self.frame();
        let mut out = String::new();
        self.header(&mut out, &f);
        for s in &self.series {
            for (x, y) in self.mapped_points(s, &f) {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{x:.1}" cy="{y:.1}" r="1.2" fill="{}" fill-opacity="0.6"/>"#,
                    s.color
                );
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

fn tick_label(v: f64, scale: Scale) -> String {
    match scale {
        Scale::Linear => format!("{v:.3}"),
        Scale::Log10 => format!("1e{v:.1}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_well_formed_svg() {
        let plot = Plot {
            title: "error vs <batch>".into(),
            x_label: "batch".into(),
            y_label: "error".into(),
            x_scale: Scale::Log10,
            y_scale: Scale::Linear,
            series: vec![Series {
                label: "NN-B".into(),
                points: vec![(1.0, 0.1), (10.0, 0.12), (100.0, 0.11), (0.0, 1.0)],
                color: "steelblue",
            }],
        };
        let svg = plot.to_line_svg();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("&lt;batch&gt;"));
        // The x = 0 point has no log position and is dropped.
        assert_eq!(svg.matches("<circle").count(), 3);
        assert_eq!(plot.to_scatter_svg().matches("<circle").count(), 3);
    }
}
