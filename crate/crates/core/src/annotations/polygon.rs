// SPDX-License-Identifier: Apache-2.0

use crate::error::{Error, Result};
use crate::mask::Mask;

/// Pixel coordinates: origin top-left, x right, y down.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// A closed polygon with at least three vertices. Self-intersecting outlines
/// are allowed; inside-ness follows the even-odd rule.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::DegeneratePolygon(format!(
                "{} vertices, at least 3 required",
                vertices.len()
            )));
        }
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::DegeneratePolygon("non-finite coordinate".into()));
        }
        Ok(Polygon { vertices })
    }

    /// Builds a polygon from a flat `[x0, y0, x1, y1, ...]` list.
    pub fn from_flat(coords: &[f64]) -> Result<Self> {
        if coords.len() % 2 != 0 {
            return Err(Error::DegeneratePolygon(format!(
                "odd coordinate count {}",
                coords.len()
            )));
        }
        Polygon::new(coords.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.vertices.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let mut acc = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            acc += a.x * b.y - b.x * a.y;
        }
        acc / 2.0
    }

    /// Shoelace area, always nonnegative.
    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Axis-aligned `(min_x, min_y, max_x, max_y)`.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        self.vertices.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), p| (a.min(p.x), b.min(p.y), c.max(p.x), d.max(p.y)),
        )
    }

    pub fn map(&self, f: impl Fn(Point) -> Point) -> Polygon {
        Polygon { vertices: self.vertices.iter().map(|&p| f(p)).collect() }
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Polygon {
        self.map(|p| Point::new(p.x + dx, p.y + dy))
    }

    pub fn scale(&self, s: f64) -> Polygon {
        self.map(|p| Point::new(p.x * s, p.y * s))
    }

    /// Clips against the axis-aligned rectangle `[x0, x1] × [y0, y1]`
    /// (Sutherland–Hodgman). Returns `None` when fewer than three vertices or
    /// zero area remain.
    pub fn clip_to_rect(&self, x0: f64, y0: f64, x1: f64, y1: f64) -> Option<Polygon> {
        #[derive(Clone, Copy)]
        enum Edge {
            Left(f64),
            Right(f64),
            Top(f64),
            Bottom(f64),
        }
        fn inside(e: Edge, p: Point) -> bool {
            match e {
                Edge::Left(v) => p.x >= v,
                Edge::Right(v) => p.x <= v,
                Edge::Top(v) => p.y >= v,
                Edge::Bottom(v) => p.y <= v,
            }
        }
        fn cross(e: Edge, a: Point, b: Point) -> Point {
            match e {
                Edge::Left(v) | Edge::Right(v) => {
                    let t = (v - a.x) / (b.x - a.x);
                    Point::new(v, a.y + t * (b.y - a.y))
                }
                Edge::Top(v) | Edge::Bottom(v) => {
                    let t = (v - a.y) / (b.y - a.y);
                    Point::new(a.x + t * (b.x - a.x), v)
                }
            }
        }

        let mut pts = self.vertices.clone();
        for edge in [Edge::Left(x0), Edge::Right(x1), Edge::Top(y0), Edge::Bottom(y1)] {
            if pts.is_empty() {
                break;
            }
            let mut out = Vec::with_capacity(pts.len() + 4);
            for i in 0..pts.len() {
                let cur = pts[i];
                let prev = pts[(i + pts.len() - 1) % pts.len()];
                match (inside(edge, prev), inside(edge, cur)) {
                    (true, true) => out.push(cur),
                    (true, false) => out.push(cross(edge, prev, cur)),
                    (false, true) => {
                        out.push(cross(edge, prev, cur));
                        out.push(cur);
                    }
                    (false, false) => {}
                }
            }
            pts = out;
        }
        // intersection points can land a hair outside the window
        for p in &mut pts {
            p.x = p.x.clamp(x0, x1);
            p.y = p.y.clamp(y0, y1);
        }
        pts.dedup();
        if pts.len() > 1 && pts.first() == pts.last() {
            pts.pop();
        }
        let poly = Polygon::new(pts).ok()?;
        (poly.area() > 0.0).then_some(poly)
    }

    /// Even-odd, pixel-centre rasterization: pixel (x, y) is set iff
    /// (x + 0.5, y + 0.5) lies inside. Pixels outside the raster never set.
    pub fn rasterize(&self, width: u32, height: u32) -> Result<Mask> {
        let mut mask = Mask::new(width, height)?;
        let n = self.vertices.len();
        let (_, min_y, _, max_y) = self.bounds();
        let row_lo = (min_y - 0.5).ceil().max(0.0) as u32;
        let row_hi = ((max_y - 0.5).floor()).min(height as f64 - 1.0);
        if row_hi < 0.0 {
            return Ok(mask);
        }
        let row_hi = row_hi as u32;
        let mut xs = Vec::with_capacity(n);
        for y in row_lo..=row_hi {
            let yc = y as f64 + 0.5;
            xs.clear();
            for i in 0..n {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                if (a.y > yc) != (b.y > yc) {
                    xs.push(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
                }
            }
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks_exact(2) {
                // centres x + 0.5 in [pair[0], pair[1])
                let first = (pair[0] - 0.5).ceil().max(0.0);
                let last = (pair[1] - 0.5).ceil() - 1.0;
                let last = last.min(width as f64 - 1.0);
                if last < first {
                    continue;
                }
                for x in first as u32..=last as u32 {
                    mask.set(x, y, true);
                }
            }
        }
        Ok(mask)
    }
}
