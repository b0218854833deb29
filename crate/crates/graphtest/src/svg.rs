//! Minimal SVG 1.1 line plots with error bars. CSV is the canonical output
//! of every experiment; these plots exist so a run's results can be glanced
//! at without any plotting toolchain. Only what the power figures need is
//! implemented: linear axes, one polyline per series, vertical error bars,
//! an optional horizontal reference line, and a legend.

use crate::sim::PowerCurve;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 62.0;
const MARGIN_RIGHT: f64 = 18.0;
const MARGIN_TOP: f64 = 42.0;
const MARGIN_BOTTOM: f64 = 52.0;

/// Line colors cycled across series.
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// One plotted line: points are (x, y, y_low, y_high).
#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64, f64, f64)>,
}

/// A line-plus-errorbar plot rendered to a standalone SVG document.
#[derive(Debug, Clone)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Horizontal dashed reference line, e.g. the test level.
    pub reference: Option<f64>,
    /// Fixed y range; when absent the range is fit to the data.
    pub y_range: Option<(f64, f64)>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 && v.abs() < 1e6 {
        format!("{}", v.round() as i64)
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

impl LinePlot {
    /// Build the usual power plot: one series per curve, rejection rate
    /// against sample size, y fixed to [0, 1], dashed line at the level.
    pub fn from_power_curves(title: &str, x_label: &str, curves: &[(String, &PowerCurve)]) -> LinePlot {
        let series = curves
            .iter()
            .map(|(name, c)| Series {
                name: name.clone(),
                points: c
                    .points
                    .iter()
                    .map(|p| (p.n as f64, p.rate, p.ci_lo, p.ci_hi))
                    .collect(),
            })
            .collect();
        let reference = curves.first().map(|(_, c)| c.alpha);
        LinePlot {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: "rejection rate".to_string(),
            series,
            reference,
            y_range: Some((0.0, 1.0)),
        }
    }

    fn data_ranges(&self) -> ((f64, f64), (f64, f64)) {
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        for s in &self.series {
            for &(x, y, lo, hi) in &s.points {
                xs.push(x);
                ys.extend([y, lo, hi]);
            }
        }
        if let Some(r) = self.reference {
            ys.push(r);
        }
        let min_max = |vals: &[f64]| {
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if lo.is_finite() && hi > lo {
                (lo, hi)
            } else if lo.is_finite() {
                (lo - 0.5, lo + 0.5)
            } else {
                (0.0, 1.0)
            }
        };
        let x_range = min_max(&xs);
        let y_range = self.y_range.unwrap_or_else(|| min_max(&ys));
        (x_range, y_range)
    }

    /// Render the standalone SVG document.
    pub fn render(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.data_ranges();
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let px = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
        let py = |y: f64| MARGIN_TOP + (y1 - y) / (y1 - y0) * plot_h;

        let mut out = String::new();
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
             width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
        ));
        out.push_str(&format!(
            "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
        ));
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" \
             text-anchor=\"middle\">{}</text>\n",
            WIDTH / 2.0,
            esc(&self.title)
        ));

        // axes
        let (left, right) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
        let (top, bottom) = (MARGIN_TOP, HEIGHT - MARGIN_BOTTOM);
        out.push_str(&format!(
            "  <line x1=\"{left}\" y1=\"{bottom}\" x2=\"{right}\" y2=\"{bottom}\" stroke=\"black\"/>\n"
        ));
        out.push_str(&format!(
            "  <line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{bottom}\" stroke=\"black\"/>\n"
        ));

        // x ticks at the union of observed x values
        let mut xticks: Vec<f64> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.0))
            .collect();
        xticks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xticks.dedup();
        for &x in &xticks {
            let gx = px(x);
            out.push_str(&format!(
                "  <line x1=\"{gx}\" y1=\"{bottom}\" x2=\"{gx}\" y2=\"{}\" stroke=\"black\"/>\n",
                bottom + 5.0
            ));
            out.push_str(&format!(
                "  <text x=\"{gx}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
                 text-anchor=\"middle\">{}</text>\n",
                bottom + 18.0,
                fmt(x)
            ));
        }

        // five evenly spaced y ticks
        for i in 0..=4 {
            let y = y0 + (y1 - y0) * i as f64 / 4.0;
            let gy = py(y);
            out.push_str(&format!(
                "  <line x1=\"{}\" y1=\"{gy}\" x2=\"{left}\" y2=\"{gy}\" stroke=\"black\"/>\n",
                left - 5.0
            ));
            out.push_str(&format!(
                "  <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
                 text-anchor=\"end\">{}</text>\n",
                left - 8.0,
                gy + 4.0,
                fmt(y)
            ));
        }

        // axis labels
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" \
             text-anchor=\"middle\">{}</text>\n",
            (left + right) / 2.0,
            HEIGHT - 12.0,
            esc(&self.x_label)
        ));
        out.push_str(&format!(
            "  <text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" \
             text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
            (top + bottom) / 2.0,
            (top + bottom) / 2.0,
            esc(&self.y_label)
        ));

        // reference level
        if let Some(r) = self.reference {
            let gy = py(r);
            out.push_str(&format!(
                "  <line x1=\"{left}\" y1=\"{gy}\" x2=\"{right}\" y2=\"{gy}\" stroke=\"#888888\" \
                 stroke-dasharray=\"6 4\"/>\n"
            ));
            out.push_str(&format!(
                "  <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
                 fill=\"#666666\" text-anchor=\"end\">alpha = {}</text>\n",
                right - 4.0,
                gy - 4.0,
                fmt(r)
            ));
        }

        // series: error bars, then line, then markers
        for (si, s) in self.series.iter().enumerate() {
            let color = PALETTE[si % PALETTE.len()];
            for &(x, _, lo, hi) in &s.points {
                let gx = px(x);
                let (gy_lo, gy_hi) = (py(lo), py(hi));
                out.push_str(&format!(
                    "  <line x1=\"{gx}\" y1=\"{gy_lo}\" x2=\"{gx}\" y2=\"{gy_hi}\" \
                     stroke=\"{color}\" stroke-width=\"1\"/>\n"
                ));
                for gy in [gy_lo, gy_hi] {
                    out.push_str(&format!(
                        "  <line x1=\"{}\" y1=\"{gy}\" x2=\"{}\" y2=\"{gy}\" \
                         stroke=\"{color}\" stroke-width=\"1\"/>\n",
                        gx - 3.0,
                        gx + 3.0
                    ));
                }
            }
            let path: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y, _, _)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            out.push_str(&format!(
                "  <polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                path.join(" ")
            ));
            for &(x, y, _, _) in &s.points {
                out.push_str(&format!(
                    "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>\n",
                    px(x),
                    py(y)
                ));
            }
        }

        // legend, top-left corner of the plot area
        let mut ly = top + 14.0;
        for (si, s) in self.series.iter().enumerate() {
            let color = PALETTE[si % PALETTE.len()];
            out.push_str(&format!(
                "  <line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" \
                 stroke-width=\"2\"/>\n",
                left + 10.0,
                left + 30.0
            ));
            out.push_str(&format!(
                "  <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
                left + 35.0,
                ly + 4.0,
                esc(&s.name)
            ));
            ly += 15.0;
        }

        out.push_str("</svg>\n");
        out
    }
}
