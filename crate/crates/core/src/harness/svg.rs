//! Minimal self-contained SVG line charts.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 44.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// `(x, lower, upper)` shaded around the line.
    pub band: Option<Vec<(f64, f64, f64)>>,
    pub dashed: bool,
    pub markers: bool,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { name: name.into(), points, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Extra lines printed under the legend.
    pub annotations: Vec<String>,
    pub log_x: bool,
    pub log_y: bool,
    pub y_range: Option<(f64, f64)>,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.0 {
        2.0
    } else if norm < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step(hi - lo, 5);
    let start = (lo / step).ceil() as i64;
    let end = (hi / step).floor() as i64;
    (start..=end).map(|i| i as f64 * step).collect()
}

fn log_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (lo.log10().floor() as i32, hi.log10().ceil() as i32);
    (a..=b).map(|e| 10f64.powi(e)).filter(|&v| v >= lo * (1.0 - 1e-9) && v <= hi * (1.0 + 1e-9)).collect()
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
    pixel_lo: f64,
    pixel_hi: f64,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool, fixed: Option<(f64, f64)>, pixels: (f64, f64)) -> Self {
        let (mut lo, mut hi) = fixed.unwrap_or_else(|| {
            values
                .filter(|v| v.is_finite() && (!log || *v > 0.0))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
        });
        if !lo.is_finite() {
            (lo, hi) = if log { (1.0, 10.0) } else { (0.0, 1.0) };
        }
        if hi <= lo {
            let pad = if log { lo * 0.5 } else { lo.abs().max(1.0) * 0.5 };
            lo -= pad;
            hi += pad;
        }
        if log {
            lo = lo.max(f64::MIN_POSITIVE);
        }
        Self { lo, hi, log, pixel_lo: pixels.0, pixel_hi: pixels.1 }
    }

    fn map(&self, v: f64) -> f64 {
        let f = |x: f64| if self.log { x.ln() } else { x };
        let t = (f(v) - f(self.lo)) / (f(self.hi) - f(self.lo));
        self.pixel_lo + t * (self.pixel_hi - self.pixel_lo)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            log_ticks(self.lo, self.hi)
        } else {
            linear_ticks(self.lo, self.hi)
        }
    }
}

fn path(points: &[(f64, f64)]) -> String {
    points
        .iter()
        .enumerate()
        .map(|(i, (x, y))| format!("{}{x:.2},{y:.2}", if i == 0 { "M" } else { " L" }))
        .collect()
}

impl LineChart {
    pub fn render(&self) -> String {
        let xs = self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
        let ys = self.series.iter().flat_map(|s| {
            let band = s.band.iter().flatten().flat_map(|b| [b.1, b.2]);
            s.points.iter().map(|p| p.1).chain(band)
        });
        let x_axis = Axis::new(xs, self.log_x, None, (LEFT, WIDTH - RIGHT));
        let y_axis = Axis::new(ys, self.log_y, self.y_range, (HEIGHT - BOTTOM, TOP));
        let in_range = |ax: &Axis, v: f64| v.is_finite() && (!ax.log || v > 0.0);

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            (LEFT + WIDTH - RIGHT) / 2.0,
            escape(&self.title)
        );
        let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
        let _ = writeln!(
            out,
            r#"<rect x="{x0}" y="{y1}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y0 - y1
        );
        for t in x_axis.ticks() {
            let px = x_axis.map(t);
            let _ = writeln!(
                out,
                r##"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{y1}" stroke="#dddddd"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
                y0 + 16.0,
                tick_label(t)
            );
        }
        for t in y_axis.ticks() {
            let py = y_axis.map(t);
            let _ = writeln!(
                out,
                r##"<line x1="{x0}" y1="{py:.2}" x2="{x1}" y2="{py:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                x0 - 6.0,
                py + 4.0,
                tick_label(t)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(&self.y_label)
        );

        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            if let Some(band) = &s.band {
                let band: Vec<_> =
                    band.iter().filter(|b| in_range(&x_axis, b.0) && in_range(&y_axis, b.1.max(1e-300))).collect();
                if band.len() >= 2 {
                    let upper = band.iter().map(|b| (x_axis.map(b.0), y_axis.map(b.2)));
                    let lower = band.iter().rev().map(|b| (x_axis.map(b.0), y_axis.map(b.1.max(y_axis.lo))));
                    let poly: Vec<String> = upper.chain(lower).map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                    let _ = writeln!(
                        out,
                        r#"<polygon points="{}" fill="{color}" fill-opacity="0.18" stroke="none"/>"#,
                        poly.join(" ")
                    );
                }
            }
            let pts: Vec<(f64, f64)> = s
                .points
                .iter()
                .filter(|p| in_range(&x_axis, p.0) && in_range(&y_axis, p.1))
                .map(|p| (x_axis.map(p.0), y_axis.map(p.1)))
                .collect();
            if pts.len() >= 2 {
                let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
                let _ = writeln!(
                    out,
                    r#"<path d="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#,
                    path(&pts)
                );
            }
            if s.markers || pts.len() == 1 {
                for (x, y) in &pts {
                    let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{color}"/>"#);
                }
            }
            let ly = TOP + 14.0 + 20.0 * i as f64;
            let lx = WIDTH - RIGHT + 14.0;
            let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(
                out,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.2}" y="{:.2}">{}</text>"#,
                lx + 22.0,
                lx + 28.0,
                ly + 4.0,
                escape(&s.name)
            );
        }
        for (j, note) in self.annotations.iter().enumerate() {
            let y = TOP + 14.0 + 20.0 * (self.series.len() + j) as f64 + 8.0;
            let _ = writeln!(out, r#"<text x="{:.2}" y="{y:.2}">{}</text>"#, WIDTH - RIGHT + 14.0, escape(note));
        }
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_escaped_self_contained_svg() {
        let mut s = Series::new("a<b", vec![(1.0, 0.5), (2.0, 0.7), (3.0, 0.9)]);
        s.band = Some(vec![(1.0, 0.4, 0.6), (2.0, 0.6, 0.8), (3.0, 0.85, 0.95)]);
        let chart = LineChart {
            title: "t & u".into(),
            series: vec![s],
            annotations: vec!["C = 1".into()],
            ..LineChart::default()
        };
        let svg = chart.render();
        assert!(svg.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("t &amp; u") && svg.contains("a&lt;b") && svg.contains("C = 1"));
        assert!(svg.contains("<polygon") && svg.contains("<path"));
        assert!(!svg.contains("href"));
    }

    #[test]
    fn log_axis_ticks_are_powers_of_ten() {
        assert_eq!(log_ticks(3.0, 2000.0), vec![10.0, 100.0, 1000.0]);
        assert_eq!(linear_ticks(0.0, 1.0).len(), 6);
    }
}
