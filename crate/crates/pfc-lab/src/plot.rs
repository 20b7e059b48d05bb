//! Minimal SVG line charts for experiment outputs.
//!
//! CSV files are the contract; these charts are a convenience layer with no
//! external dependencies and no timestamps, so identical data yields
//! identical bytes.

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;

const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// One named line.
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn axis_transform(values: impl Iterator<Item = f64>, log: bool) -> (f64, f64, Box<dyn Fn(f64) -> f64>) {
    let mapped: Vec<f64> = values
        .filter(|v| v.is_finite() && (!log || *v > 0.0))
        .map(|v| if log { v.log10() } else { v })
        .collect();
    let lo = mapped.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = mapped.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() && hi.is_finite() {
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    } else {
        (0.0, 1.0)
    };
    let f: Box<dyn Fn(f64) -> f64> = if log {
        Box::new(|v: f64| v.log10())
    } else {
        Box::new(|v: f64| v)
    };
    (lo, hi, f)
}

/// Render series as an SVG line chart. Log axes drop non-positive points.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    log_x: bool,
    log_y: bool,
) -> String {
    let (x_lo, x_hi, fx) = axis_transform(
        series.iter().flat_map(|s| s.points.iter().map(|p| p.0)),
        log_x,
    );
    let (y_lo, y_hi, fy) = axis_transform(
        series.iter().flat_map(|s| s.points.iter().map(|p| p.1)),
        log_y,
    );
    let to_px = |x: f64, y: f64| {
        let px = MARGIN + (fx(x) - x_lo) / (x_hi - x_lo) * (WIDTH - 2.0 * MARGIN);
        let py = HEIGHT - MARGIN - (fy(y) - y_lo) / (y_hi - y_lo) * (HEIGHT - 2.0 * MARGIN);
        (px, py)
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"15\">{}</text>\n",
        WIDTH / 2.0,
        xml_escape(title)
    ));
    // Frame.
    svg.push_str(&format!(
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" \
         stroke=\"#444\"/>\n",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    ));
    // Axis labels with ranges.
    let fmt_axis = |lo: f64, hi: f64, log: bool| {
        if log {
            format!("1e{lo:.1} .. 1e{hi:.1}")
        } else {
            format!("{lo:.3} .. {hi:.3}")
        }
    };
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"12\">{} ({})</text>\n",
        WIDTH / 2.0,
        HEIGHT - 14.0,
        xml_escape(x_label),
        fmt_axis(x_lo, x_hi, log_x)
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"12\" transform=\"rotate(-90 16 {})\">{} ({})</text>\n",
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        xml_escape(y_label),
        fmt_axis(y_lo, y_hi, log_y)
    ));

    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .filter(|p| {
                p.0.is_finite()
                    && p.1.is_finite()
                    && (!log_x || p.0 > 0.0)
                    && (!log_y || p.1 > 0.0)
            })
            .map(|&(x, y)| {
                let (px, py) = to_px(x, y);
                format!("{px:.2},{py:.2}")
            })
            .collect();
        if !path.is_empty() {
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                path.join(" ")
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             fill=\"{color}\">{}</text>\n",
            MARGIN + 8.0,
            MARGIN + 16.0 + 16.0 * i as f64,
            xml_escape(&s.label)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_is_deterministic_and_well_formed() {
        let series = [Series {
            label: "P0".into(),
            points: vec![(1.0, 0.1), (10.0, 0.5), (100.0, 0.9)],
        }];
        let a = line_chart("test", "sweeps", "P", &series, true, false);
        let b = line_chart("test", "sweeps", "P", &series, true, false);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.ends_with("</svg>\n"));
        assert!(a.contains("polyline"));
    }

    #[test]
    fn log_axis_drops_nonpositive_points() {
        let series = [Series {
            label: "p".into(),
            points: vec![(1.0, 0.0), (10.0, 1e-3)],
        }];
        let chart = line_chart("t", "x", "y", &series, true, true);
        assert!(chart.contains("polyline"));
    }
}
