//! Minimal log-log scatter plots as standalone SVG.

use std::fmt::Write;

use crate::scaling::ScalingFit;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
    pub fit: Option<&'a ScalingFit>,
}

pub fn loglog_svg(title: &str, x_label: &str, series: &[Series<'_>]) -> String {
    let logs = || {
        series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter(|&&(x, y)| x > 0.0 && y > 0.0)
            .map(|&(x, y)| (x.log10(), y.log10()))
    };
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for (x, y) in logs() {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x0 > x1 {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let pad = |lo: f64, hi: f64| if hi - lo < 1e-9 { (lo - 0.5, hi + 0.5) } else { (lo, hi) };
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<path d="M{m} {b} H{r} M{m} {b} V{m}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">log10 {}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0,
        escape(x_label)
    );
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        for &(x, y) in s.points.iter().filter(|&&(x, y)| x > 0.0 && y > 0.0) {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}" fill-opacity="0.6"/>"#,
                sx(x.log10()),
                sy(y.log10())
            );
        }
        let mut legend = s.name.to_owned();
        if let Some(fit) = s.fit {
            let c = fit.prefactor.log10();
            let _ = writeln!(
                svg,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}"/>"#,
                sx(x0),
                sy(c + fit.exponent * x0),
                sx(x1),
                sy(c + fit.exponent * x1)
            );
            let _ = write!(legend, " slope {:.3}", fit.exponent);
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            MARGIN + 8.0,
            MARGIN + 16.0 * k as f64,
            escape(&legend)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_points_and_fit() {
        let fit = ScalingFit {
            exponent: 1.0,
            prefactor: 1.0,
            r_squared: 1.0,
            n_points: 2,
            std_err: 0.0,
        };
        let svg = loglog_svg(
            "A <vs> N",
            "N",
            &[Series {
                name: "A",
                points: vec![(1.0, 1.0), (10.0, 10.0), (0.0, 3.0)],
                fit: Some(&fit),
            }],
        );
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("<line"));
        assert!(svg.contains("A &lt;vs&gt; N"));
    }

    #[test]
    fn empty_plot_is_valid() {
        let svg = loglog_svg("empty", "N", &[]);
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
