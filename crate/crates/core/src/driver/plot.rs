//! Minimal SVG line plots: one polyline, a frame and five ticks per axis.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const L: f64 = 80.0;
const R: f64 = 20.0;
const T: f64 = 40.0;
const B: f64 = 60.0;

pub struct LinePlot<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    /// Plot `log10(y)`; nonpositive values are dropped.
    pub log_y: bool,
}

fn span(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-300 {
        let pad = lo.abs().max(1.0) * 0.5;
        (lo - pad, hi + pad)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

impl LinePlot<'_> {
    pub fn render(&self, points: &[(f64, f64)]) -> String {
        let pts: Vec<(f64, f64)> = points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite() && (!self.log_y || *y > 0.0))
            .map(|&(x, y)| (x, if self.log_y { y.log10() } else { y }))
            .collect();
        let (x0, x1) = span(pts.iter().map(|p| p.0));
        let (y0, y1) = span(pts.iter().map(|p| p.1));
        let px = |x: f64| L + (x - x0) / (x1 - x0) * (W - L - R);
        let py = |y: f64| H - B - (y - y0) / (y1 - y0) * (H - T - B);

        let mut s = String::new();
        let _ =
            writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<rect x="{L}" y="{T}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - L - R,
            H - T - B
        );
        let _ =
            writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, W / 2.0, self.title);
        for k in 0..=4 {
            let fx = x0 + (x1 - x0) * k as f64 / 4.0;
            let fy = y0 + (y1 - y0) * k as f64 / 4.0;
            let (gx, gy) = (px(fx), py(fy));
            let _ =
                writeln!(s, r#"<line x1="{gx:.2}" y1="{}" x2="{gx:.2}" y2="{}" stroke="black"/>"#, H - B, H - B + 5.0);
            let _ = writeln!(
                s,
                r#"<text x="{gx:.2}" y="{}" text-anchor="middle" font-size="11">{fx:.3}</text>"#,
                H - B + 18.0
            );
            let _ = writeln!(s, r#"<line x1="{}" y1="{gy:.2}" x2="{L}" y2="{gy:.2}" stroke="black"/>"#, L - 5.0);
            let label = if self.log_y { format!("1e{fy:.2}") } else { format!("{fy:.4}") };
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="11">{label}</text>"#,
                L - 8.0,
                gy + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#,
            (L + W - R) / 2.0,
            H - 15.0,
            self.x_label
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{0}" text-anchor="middle" font-size="13" transform="rotate(-90 18 {0})">{1}</text>"#,
            (T + H - B) / 2.0,
            self.y_label
        );
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ =
            writeln!(s, r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_polyline() {
        let p = LinePlot { title: "t", x_label: "s", y_label: "q", log_y: true };
        let svg = p.render(&[(0.0, 1.0), (1.0, 0.1), (2.0, 0.0), (3.0, f64::NAN)]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        let line = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
        assert_eq!(line.matches(',').count(), 2);
    }

    #[test]
    fn degenerate_ranges() {
        let p = LinePlot { title: "t", x_label: "x", y_label: "y", log_y: false };
        assert!(p.render(&[]).contains("<polyline"));
        assert!(!p.render(&[(1.0, 2.0)]).contains("NaN"));
    }
}
