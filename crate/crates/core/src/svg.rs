//! Minimal SVG renderings of node fields on one leaf slice.

use std::fmt::Write;

use crate::contact::AlphaForm;
use crate::geometry::FoliatedChartModel;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 40.0;

struct Frame {
    x0: f64,
    y0: f64,
    scale: f64,
    height: f64,
}

impl Frame {
    fn new(chart: &FoliatedChartModel) -> Self {
        let (x0, x1) = chart.bounds(0);
        let (y0, y1) = chart.bounds(1);
        let scale = (SIZE - 2.0 * MARGIN) / (x1 - x0).max(y1 - y0);
        Self { x0, y0, scale, height: (y1 - y0) * scale + 2.0 * MARGIN }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (MARGIN + (x - self.x0) * self.scale, self.height - MARGIN - (y - self.y0) * self.scale)
    }

    fn open(&self, title: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{:.1}" viewBox="0 0 {SIZE} {:.1}">"#,
            self.height, self.height
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{MARGIN}" y="24" font-family="sans-serif" font-size="14">{}</text>"#, escape(title));
        s
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Diverging blue-white-red colour for `t ∈ [−1, 1]`.
fn colour(t: f64) -> String {
    let t = t.clamp(-1.0, 1.0);
    let (r, g, b) = if t < 0.0 {
        let u = 1.0 + t;
        (u, u, 1.0)
    } else {
        (1.0, 1.0 - t, 1.0 - t)
    };
    format!("#{:02x}{:02x}{:02x}", (r * 255.0) as u8, (g * 255.0) as u8, (b * 255.0) as u8)
}

/// One square per node of slice `k`, coloured symmetrically around zero.
/// Non-finite values are drawn grey.
pub fn heatmap(chart: &FoliatedChartModel, values: &[f64], k: usize, title: &str) -> String {
    let fr = Frame::new(chart);
    let [nx, ny, _] = chart.dims();
    let [hx, hy, _] = chart.spacing();
    let amp = (0..nx * ny)
        .map(|s| values[chart.node_index(s % nx, s / nx, k)])
        .filter(|v| v.is_finite())
        .fold(0.0f64, |a, v| a.max(v.abs()));
    let mut s = fr.open(title);
    for j in 0..ny {
        for i in 0..nx {
            let n = chart.node_index(i, j, k);
            let p = chart.node_point(n);
            let (cx, cy) = fr.map(p.x - 0.5 * hx, p.y + 0.5 * hy);
            let v = values[n];
            let fill = if v.is_finite() { colour(if amp > 0.0 { v / amp } else { 0.0 }) } else { "#bbbbbb".into() };
            let _ = writeln!(
                s,
                r#"<rect x="{cx:.2}" y="{cy:.2}" width="{:.2}" height="{:.2}" fill="{fill}"><title>{v:.4e}</title></rect>"#,
                hx * fr.scale,
                hy * fr.scale
            );
        }
    }
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="{:.1}" font-family="sans-serif" font-size="12">|max| = {amp:.4e}</text>"#, fr.height - 12.0);
    s.push_str("</svg>\n");
    s
}

/// Unit direction of `ker α ∩ T(leaf)` at a node: `(−α_y, α_x)` normalized,
/// or `None` where both leaf components vanish (singular points).
pub fn characteristic_direction(alpha: &AlphaForm, node: usize) -> Option<[f64; 2]> {
    let a = alpha.components(node);
    let len = a[0].hypot(a[1]);
    (len > 1e-14).then(|| [-a[1] / len, a[0] / len])
}

/// Dotted segments along the characteristic foliation of `α` on slice `k`.
pub fn direction_field(chart: &FoliatedChartModel, alpha: &AlphaForm, k: usize, title: &str) -> String {
    let fr = Frame::new(chart);
    let [nx, ny, _] = chart.dims();
    let half = 0.4 * chart.spacing()[0].min(chart.spacing()[1]) * fr.scale;
    let mut s = fr.open(title);
    for j in 0..ny {
        for i in 0..nx {
            let n = chart.node_index(i, j, k);
            let p = chart.node_point(n);
            let (cx, cy) = fr.map(p.x, p.y);
            match characteristic_direction(alpha, n) {
                Some(d) => {
                    let _ = writeln!(
                        s,
                        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="red" stroke-width="1.5" stroke-dasharray="2,2"/>"#,
                        cx - half * d[0],
                        cy + half * d[1],
                        cx + half * d[0],
                        cy - half * d[1]
                    );
                }
                None => {
                    let _ = writeln!(s, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="2" fill="black"/>"#);
                }
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::{build_alpha, build_beta};
    use crate::instances::make_instance;

    #[test]
    fn halfplane_characteristic_lines_are_vertical() {
        // α = f dz + ε dx / y: the leaf kernel is spanned by ∂y.
        let inst = make_instance("example2-halfplane").unwrap();
        let beta = build_beta(&inst.chart, &inst.measure).unwrap();
        let alpha = build_alpha(&inst.measure, &beta, 0.1).unwrap();
        for n in inst.chart.interior_nodes() {
            let d = characteristic_direction(&alpha, n).unwrap();
            assert!(d[0].abs() < 1e-12 && (d[1].abs() - 1.0).abs() < 1e-12);
        }
        let svg = direction_field(&inst.chart, &alpha, 0, "half-plane");
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<line").count(), inst.chart.slice_len());
    }

    #[test]
    fn heatmap_has_one_cell_per_node() {
        let inst = make_instance("example2-halfplane").unwrap();
        let vals: Vec<f64> = inst.measure.log_values().to_vec();
        let svg = heatmap(&inst.chart, &vals, 0, "log f <y>");
        assert_eq!(svg.matches("<rect x=").count(), inst.chart.slice_len());
        assert!(svg.contains("log f &lt;y&gt;"));
    }
}
