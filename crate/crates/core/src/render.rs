//! Static SVG rendering of a Stokes texture.
//!
//! Cells are coloured by `s_z` (blue at −1, white at 0, red at +1) and the
//! in-plane part `(s_x, s_y)` is drawn as arrows on a grid of at most
//! 32×32 samples. `x'` runs to the right and `x` upward. Output bytes depend
//! only on the field and the options.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::texture::StokesField;

/// Largest number of arrows per axis.
pub const MAX_ARROWS: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderStyle {
    /// Edge length of the plot area in pixels.
    pub size: u32,
    pub arrows: bool,
    pub title: Option<String>,
}

impl Default for RenderStyle {
    fn default() -> Self {
        Self {
            size: 640,
            arrows: true,
            title: None,
        }
    }
}

/// Diverging map for `v` in [−1, 1].
pub fn sz_color(v: f64) -> [u8; 3] {
    let v = if v.is_finite() {
        v.clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let (lo, hi) = ([0x21, 0x66, 0xac], [0xb2, 0x18, 0x2b]);
    let (end, t) = if v < 0.0 { (lo, -v) } else { (hi, v) };
    let mut out = [0u8; 3];
    for c in 0..3 {
        out[c] = (255.0 + (end[c] as f64 - 255.0) * t).round() as u8;
    }
    out
}

/// SVG document for `field`; `q_raw` goes into the legend when given.
pub fn render_svg(field: &StokesField, q_raw: Option<f64>, style: &RenderStyle) -> String {
    let m = field.m();
    let size = style.size.max(64) as f64;
    let cell = size / m as f64;
    let (pad, legend_w) = (16.0, 120.0);
    let (w, h) = (size + 2.0 * pad + legend_w, size + 2.0 * pad + 24.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    if let Some(t) = &style.title {
        let _ = writeln!(
            s,
            r#"<text x="{pad:.0}" y="18" font-family="sans-serif" font-size="14">{}</text>"#,
            escape(t)
        );
    }
    let top = pad + 24.0;
    let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
    for i in 0..m {
        for j in 0..m {
            let k = i * m + j;
            let [r, g, b] = if field.defined[k] {
                sz_color(field.s[k][2])
            } else {
                [0x80, 0x80, 0x80]
            };
            let (px, py) = (pad + j as f64 * cell, top + (m - 1 - i) as f64 * cell);
            let _ = writeln!(
                s,
                r##"<rect x="{px:.3}" y="{py:.3}" width="{:.3}" height="{:.3}" fill="#{r:02x}{g:02x}{b:02x}"/>"##,
                cell + 0.01,
                cell + 0.01
            );
        }
    }
    let _ = writeln!(s, "</g>");
    if style.arrows {
        let stride = m.div_ceil(MAX_ARROWS);
        let half = 0.45 * cell * stride as f64;
        let _ = writeln!(s, r##"<g stroke="#000000" stroke-width="1" fill="none">"##);
        for i in (0..m).step_by(stride) {
            for j in (0..m).step_by(stride) {
                let k = i * m + j;
                if !field.defined[k] {
                    continue;
                }
                let (cx, cy) = (
                    pad + (j as f64 + 0.5) * cell,
                    top + ((m - 1 - i) as f64 + 0.5) * cell,
                );
                let (dx, dy) = (field.s[k][0] * half, -field.s[k][1] * half);
                let _ = writeln!(
                    s,
                    r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#,
                    cx - dx,
                    cy - dy,
                    cx + dx,
                    cy + dy
                );
                let len = (dx * dx + dy * dy).sqrt();
                if len > 1e-9 {
                    let (ux, uy) = (dx / len, dy / len);
                    let hl = 0.4 * len;
                    let (tx, ty) = (cx + dx, cy + dy);
                    let _ = writeln!(
                        s,
                        r#"<polyline points="{:.3},{:.3} {tx:.3},{ty:.3} {:.3},{:.3}"/>"#,
                        tx - hl * (ux - 0.5 * uy),
                        ty - hl * (uy + 0.5 * ux),
                        tx - hl * (ux + 0.5 * uy),
                        ty - hl * (uy - 0.5 * ux)
                    );
                }
            }
        }
        let _ = writeln!(s, "</g>");
    }
    // Legend: colour bar and charge.
    let lx = pad + size + 24.0;
    let steps = 32;
    let bar_h = size * 0.6;
    for k in 0..steps {
        let v = 1.0 - 2.0 * (k as f64 + 0.5) / steps as f64;
        let [r, g, b] = sz_color(v);
        let _ = writeln!(
            s,
            r##"<rect x="{lx:.3}" y="{:.3}" width="16" height="{:.3}" fill="#{r:02x}{g:02x}{b:02x}"/>"##,
            top + bar_h * k as f64 / steps as f64,
            bar_h / steps as f64 + 0.01
        );
    }
    let font = r#"font-family="sans-serif" font-size="12""#;
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" {font}>+1</text>"#,
        lx + 20.0,
        top + 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" {font}>-1</text>"#,
        lx + 20.0,
        top + bar_h
    );
    let _ = writeln!(
        s,
        r#"<text x="{lx:.3}" y="{:.3}" {font}>s_z</text>"#,
        top + bar_h + 18.0
    );
    if let Some(q) = q_raw {
        let _ = writeln!(
            s,
            r#"<text x="{lx:.3}" y="{:.3}" {font}>Q = {q:.4}</text>"#,
            top + bar_h + 40.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
