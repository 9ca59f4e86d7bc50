//! Minimal self-contained SVG line plots.
//!
//! Each plot renders to a single standalone SVG document: white
//! background, linear axes with "nice" tick steps (1/2/5 × 10^k), shaded
//! uncertainty bands drawn under the curves, and an in-plot legend. No
//! external renderer or font dependency; text uses the viewer's default
//! sans-serif. Output is deterministic for identical inputs, so plots
//! diff cleanly between runs.

use std::fmt::Write as _;
use std::path::Path;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 74.0;
const MARGIN_R: f64 = 26.0;
const MARGIN_T: f64 = 46.0;
const MARGIN_B: f64 = 60.0;

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Line,
    Scatter,
}

struct Series {
    label: Option<String>,
    color: String,
    kind: Kind,
    pts: Vec<(f64, f64)>,
}

struct Band {
    color: String,
    // Upper edge left-to-right, then lower edge right-to-left.
    xs: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

pub struct Plot {
    title: String,
    xlabel: String,
    ylabel: String,
    series: Vec<Series>,
    bands: Vec<Band>,
}

impl Plot {
    pub fn new(title: &str, xlabel: &str, ylabel: &str) -> Self {
        Plot {
            title: title.to_string(),
            xlabel: xlabel.to_string(),
            ylabel: ylabel.to_string(),
            series: Vec::new(),
            bands: Vec::new(),
        }
    }

    pub fn line(&mut self, pts: &[(f64, f64)], color: &str, label: &str) -> &mut Self {
        self.series.push(Series {
            label: if label.is_empty() { None } else { Some(label.to_string()) },
            color: color.to_string(),
            kind: Kind::Line,
            pts: pts.to_vec(),
        });
        self
    }

    pub fn scatter(&mut self, pts: &[(f64, f64)], color: &str, label: &str) -> &mut Self {
        self.series.push(Series {
            label: if label.is_empty() { None } else { Some(label.to_string()) },
            color: color.to_string(),
            kind: Kind::Scatter,
            pts: pts.to_vec(),
        });
        self
    }

    /// Shaded region between `lo` and `hi` over `xs`; drawn under curves.
    pub fn band(&mut self, xs: &[f64], lo: &[f64], hi: &[f64], color: &str) -> &mut Self {
        assert_eq!(xs.len(), lo.len());
        assert_eq!(xs.len(), hi.len());
        self.bands.push(Band {
            color: color.to_string(),
            xs: xs.to_vec(),
            lo: lo.to_vec(),
            hi: hi.to_vec(),
        });
        self
    }

    fn data_range(&self) -> ((f64, f64), (f64, f64)) {
        let mut xr = (f64::INFINITY, f64::NEG_INFINITY);
        let mut yr = xr;
        let mut feed = |x: f64, y: f64| {
            if x.is_finite() && y.is_finite() {
                xr = (xr.0.min(x), xr.1.max(x));
                yr = (yr.0.min(y), yr.1.max(y));
            }
        };
        for s in &self.series {
            for &(x, y) in &s.pts {
                feed(x, y);
            }
        }
        for b in &self.bands {
            for i in 0..b.xs.len() {
                feed(b.xs[i], b.lo[i]);
                feed(b.xs[i], b.hi[i]);
            }
        }
        let pad = |(lo, hi): (f64, f64)| {
            if lo > hi {
                return (0.0, 1.0); // no finite data at all
            }
            let span = hi - lo;
            if span == 0.0 {
                let w = lo.abs().max(1.0) * 0.1;
                (lo - w, hi + w)
            } else {
                (lo - 0.05 * span, hi + 0.05 * span)
            }
        };
        (pad(xr), pad(yr))
    }

    pub fn render(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.data_range();
        let px = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * (WIDTH - MARGIN_L - MARGIN_R);
        let py = |y: f64| HEIGHT - MARGIN_B - (y - y0) / (y1 - y0) * (HEIGHT - MARGIN_T - MARGIN_B);

        let mut out = String::new();
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"13\">"
        );
        let _ = writeln!(out, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");

        // Grid and ticks.
        for &t in &ticks(x0, x1) {
            let x = px(t);
            let _ = writeln!(
                out,
                "<line x1=\"{x:.2}\" y1=\"{}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"#dddddd\"/>",
                MARGIN_T,
                HEIGHT - MARGIN_B
            );
            let _ = writeln!(
                out,
                "<text x=\"{x:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
                HEIGHT - MARGIN_B + 18.0,
                fmt_tick(t)
            );
        }
        for &t in &ticks(y0, y1) {
            let y = py(t);
            let _ = writeln!(
                out,
                "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{}\" y2=\"{y:.2}\" stroke=\"#dddddd\"/>",
                MARGIN_L,
                WIDTH - MARGIN_R
            );
            let _ = writeln!(
                out,
                "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
                MARGIN_L - 8.0,
                y + 4.5,
                fmt_tick(t)
            );
        }

        // Bands under everything else.
        for b in &self.bands {
            let mut d = String::new();
            for i in 0..b.xs.len() {
                let cmd = if i == 0 { 'M' } else { 'L' };
                let _ = write!(d, "{cmd}{:.2},{:.2} ", px(b.xs[i]), py(b.hi[i]));
            }
            for i in (0..b.xs.len()).rev() {
                let _ = write!(d, "L{:.2},{:.2} ", px(b.xs[i]), py(b.lo[i]));
            }
            d.push('Z');
            let _ = writeln!(out, "<path d=\"{d}\" fill=\"{}\" fill-opacity=\"0.18\"/>", b.color);
        }

        // Axes frame on top of the grid.
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333333\"/>",
            MARGIN_L,
            MARGIN_T,
            WIDTH - MARGIN_L - MARGIN_R,
            HEIGHT - MARGIN_T - MARGIN_B
        );

        for s in &self.series {
            match s.kind {
                Kind::Line => {
                    let pts: Vec<String> = s
                        .pts
                        .iter()
                        .filter(|(x, y)| x.is_finite() && y.is_finite())
                        .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                        .collect();
                    let _ = writeln!(
                        out,
                        "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\"/>",
                        pts.join(" "),
                        s.color
                    );
                }
                Kind::Scatter => {
                    for &(x, y) in s.pts.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
                        let _ = writeln!(
                            out,
                            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{}\"/>",
                            px(x),
                            py(y),
                            s.color
                        );
                    }
                }
            }
        }

        // Title and axis labels.
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"26\" text-anchor=\"middle\" font-size=\"16\">{}</text>",
            WIDTH / 2.0,
            xml_escape(&self.title)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) / 2.0,
            HEIGHT - 14.0,
            xml_escape(&self.xlabel)
        );
        let ymid = MARGIN_T + (HEIGHT - MARGIN_T - MARGIN_B) / 2.0;
        let _ = writeln!(
            out,
            "<text x=\"20\" y=\"{ymid:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {ymid:.1})\">{}</text>",
            xml_escape(&self.ylabel)
        );

        // Legend, top-right inside the frame.
        let entries: Vec<(&str, &str, Kind)> = self
            .series
            .iter()
            .filter_map(|s| s.label.as_deref().map(|l| (l, s.color.as_str(), s.kind)))
            .collect();
        if !entries.is_empty() {
            let lw = 10.0 + 9.0 * entries.iter().map(|e| e.0.len()).max().unwrap() as f64 + 34.0;
            let lx = WIDTH - MARGIN_R - lw - 6.0;
            let ly = MARGIN_T + 8.0;
            let lh = entries.len() as f64 * 19.0 + 10.0;
            let _ = writeln!(
                out,
                "<rect x=\"{lx:.1}\" y=\"{ly:.1}\" width=\"{lw:.1}\" height=\"{lh:.1}\" \
                 fill=\"white\" fill-opacity=\"0.85\" stroke=\"#999999\"/>"
            );
            for (i, (label, color, kind)) in entries.iter().enumerate() {
                let cy = ly + 14.0 + i as f64 * 19.0;
                match kind {
                    Kind::Line => {
                        let _ = writeln!(
                            out,
                            "<line x1=\"{:.1}\" y1=\"{cy:.1}\" x2=\"{:.1}\" y2=\"{cy:.1}\" \
                             stroke=\"{color}\" stroke-width=\"2\"/>",
                            lx + 8.0,
                            lx + 30.0
                        );
                    }
                    Kind::Scatter => {
                        let _ = writeln!(
                            out,
                            "<circle cx=\"{:.1}\" cy=\"{cy:.1}\" r=\"3\" fill=\"{color}\"/>",
                            lx + 19.0
                        );
                    }
                }
                let _ = writeln!(
                    out,
                    "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
                    lx + 36.0,
                    cy + 4.5,
                    xml_escape(label)
                );
            }
        }

        out.push_str("</svg>\n");
        out
    }

    pub fn save(&self, path: &Path) -> kcm::Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

/// Tick step of the form {1,2,5}·10^k giving roughly five intervals.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    // Round to {1,2,5}·10^k with breakpoints chosen to keep 4-7 ticks.
    let step = if norm <= 1.5 {
        mag
    } else if norm <= 3.0 {
        2.0 * mag
    } else if norm <= 7.0 {
        5.0 * mag
    } else {
        10.0 * mag
    };
    let mut out = Vec::new();
    let mut k = (lo / step).ceil() as i64;
    while (k as f64) * step <= hi + step * 1e-9 {
        out.push(k as f64 * step);
        k += 1;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if !(1e-3..1e6).contains(&a) {
        return format!("{v:.1e}");
    }
    let mut s = format!("{v:.6}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_well_formed_document() {
        let mut p = Plot::new("demo", "t", "x");
        p.band(&[0.0, 1.0, 2.0], &[0.0, 0.5, 1.0], &[1.0, 1.5, 2.0], "#1f77b4");
        p.line(&[(0.0, 0.5), (1.0, 1.0), (2.0, 1.5)], "#1f77b4", "mean");
        p.scatter(&[(0.5, 0.9)], "#d62728", "probe");
        let doc = p.render();
        assert!(doc.starts_with("<svg"));
        assert!(doc.trim_end().ends_with("</svg>"));
        assert!(doc.contains("<polyline"));
        assert!(doc.contains("<circle"));
        assert!(doc.contains("fill-opacity=\"0.18\""));
        // Deterministic output for identical inputs.
        assert_eq!(doc, p.render());
    }

    #[test]
    fn ticks_are_nice_and_cover_range() {
        let t = ticks(0.0, 10.0);
        assert_eq!(t, vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        let t = ticks(-1.3, 1.3);
        assert!(t.contains(&0.0));
        assert!(t.len() >= 4 && t.len() <= 8);
        let t = ticks(0.0, 0.037);
        assert!(t.len() >= 4);
    }

    #[test]
    fn degenerate_ranges_do_not_panic() {
        let mut p = Plot::new("flat", "x", "y");
        p.line(&[(1.0, 2.0), (2.0, 2.0)], "#000000", "");
        let doc = p.render();
        assert!(doc.contains("</svg>"));
        let empty = Plot::new("empty", "x", "y").render();
        assert!(empty.contains("</svg>"));
    }
}
