// SPDX-License-Identifier: Apache-2.0

//! Minimal deterministic SVG line charts.

use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

pub struct Series {
    pub colour: &'static str,
    pub points: Vec<(f64, f64)>,
}

/// A shaded vertical band between two x values.
pub struct Band {
    pub colour: &'static str,
    pub x0: f64,
    pub x1: f64,
}

pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub series: Vec<Series>,
    pub bands: Vec<Band>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Tick values at a "nice" step covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / 8.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 10.0).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

impl LineChart {
    pub fn render(&self) -> String {
        let (x0, x1) = self.x_range;
        let (y0, y1) = self.y_range;
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = move |x: f64| LEFT + if x1 > x0 { (x - x0) / (x1 - x0) * pw } else { 0.0 };
        let sy = move |y: f64| TOP + ph - if y1 > y0 { (y - y0) / (y1 - y0) * ph } else { 0.0 };

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        for b in &self.bands {
            let (a, c) = (sx(b.x0.max(x0)), sx(b.x1.min(x1)));
            if c > a {
                let _ = writeln!(
                    s,
                    r#"<rect class="band" x="{a:.3}" y="{TOP:.3}" width="{:.3}" height="{ph:.3}" fill="{}" fill-opacity="0.25"/>"#,
                    c - a,
                    b.colour
                );
            }
        }
        // axes
        let _ = writeln!(
            s,
            r#"<path class="axes" d="M{LEFT:.3},{TOP:.3} L{LEFT:.3},{:.3} L{:.3},{:.3}" stroke="black" fill="none"/>"#,
            TOP + ph,
            LEFT + pw,
            TOP + ph
        );
        for t in ticks(x0, x1) {
            let x = sx(t);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.3}" y1="{:.3}" x2="{x:.3}" y2="{:.3}" stroke="black"/><text x="{x:.3}" y="{:.3}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 18.0,
                label(t)
            );
        }
        for t in ticks(y0, y1) {
            let y = sy(t);
            let _ = writeln!(
                s,
                r#"<line x1="{:.3}" y1="{y:.3}" x2="{LEFT:.3}" y2="{y:.3}" stroke="black"/><text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                y + 4.0,
                label(t)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 10.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="15" y="{:.3}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 15 {:.3})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );
        for series in &self.series {
            if series.points.is_empty() {
                continue;
            }
            let pts: Vec<String> =
                series.points.iter().map(|&(x, y)| format!("{:.3},{:.3}", sx(x), sy(y))).collect();
            let _ = writeln!(
                s,
                r#"<polyline class="curve" points="{}" stroke="{}" stroke-width="1.5" fill="none"/>"#,
                pts.join(" "),
                series.colour
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_steps() {
        let t = ticks(0.0, 1.0);
        assert_eq!(t.len(), 11);
        assert_eq!((t[0], t[10]), (0.0, 1.0));
        assert_eq!(ticks(0.0, 40.0).len(), 9);
        assert_eq!(ticks(3.0, 3.0), vec![3.0]);
    }

    #[test]
    fn labels_trim() {
        assert_eq!(label(0.6000000000000001), "0.6");
        assert_eq!(label(10.0), "10");
        assert_eq!(label(-0.0), "0");
    }
}
