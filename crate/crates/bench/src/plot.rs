//! Self-contained SVG line plot of averaged curves.

use std::fmt::Write as _;

use crate::report::Curve;

const W: f64 = 720.0;
const H: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Suboptimality on a log scale against effective passes. The curves carry
/// `log₁₀` values already, so the y axis is linear in them with decade
/// labels.
pub fn svg(curves: &[Curve], title: &str, config_hash: &str) -> String {
    let pts = curves.iter().flat_map(|c| c.points.iter());
    let (mut x_max, mut y_min, mut y_max) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        x_max = x_max.max(p.effective_passes);
        y_min = y_min.min(p.mean_log_subopt);
        y_max = y_max.max(p.mean_log_subopt);
    }
    if !y_min.is_finite() {
        (y_min, y_max) = (-1.0, 0.0);
    }
    let (y_lo, mut y_hi) = (y_min.floor(), y_max.ceil());
    if y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    if x_max <= 0.0 {
        x_max = 1.0;
    }
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + x / x_max * pw;
    let sy = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, "<!-- config {} -->", escape(config_hash));
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, LEFT + pw / 2.0, escape(title));
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);

    let step = ((y_hi - y_lo) / 10.0).ceil().max(1.0);
    let mut e = y_lo;
    while e <= y_hi + 1e-9 {
        let y = sy(e);
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="#ddd"/>"##, LEFT + pw);
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">1e{}</text>"#, LEFT - 6.0, y + 4.0, e as i64);
        e += step;
    }
    for i in 0..=5 {
        let v = x_max * i as f64 / 5.0;
        let x = sx(v);
        let _ = writeln!(s, r#"<line x1="{x:.1}" y1="{}" x2="{x:.1}" y2="{}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, format_tick(v));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">effective passes</text>"#, LEFT + pw / 2.0, H - 16.0);
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">F(x) − F(x*)</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    for (k, c) in curves.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        if !c.points.is_empty() {
            let path: Vec<String> = c.points.iter().map(|p| format!("{:.2},{:.2}", sx(p.effective_passes), sy(p.mean_log_subopt))).collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        }
        let ly = TOP + 16.0 + 18.0 * k as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 22.0);
        let mut label = escape(&c.solver);
        if !c.failed.is_empty() {
            let _ = write!(label, " ({} failed)", c.failed.len());
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}">{label}</text>"#, lx + 28.0, ly + 4.0);
    }
    s.push_str("</svg>\n");
    s
}

fn format_tick(v: f64) -> String {
    if v >= 100.0 || v == v.round() {
        format!("{v:.0}")
    } else {
        format!("{v:.1}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::CurvePoint;

    #[test]
    fn one_polyline_per_nonempty_curve() {
        let c = |name: &str, n: usize| Curve {
            solver: name.into(),
            points: (0..n)
                .map(|k| CurvePoint {
                    epoch: k + 1,
                    effective_passes: k as f64 + 1.0,
                    mean_log_subopt: -(k as f64),
                    std: 0.0,
                    runs: 1,
                })
                .collect(),
            failed: vec![],
        };
        let s = svg(&[c("a", 5), c("b<", 0)], "t", "abc");
        assert!(s.starts_with("<svg"));
        assert_eq!(s.matches("<polyline").count(), 1);
        assert!(s.contains("b&lt;"));
        assert!(s.contains("effective passes"));
    }
}
