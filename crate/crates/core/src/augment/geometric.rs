// SPDX-License-Identifier: Apache-2.0

use image::{imageops, Rgb, RgbImage};
use rand::Rng;

use super::Sample;
use crate::annotations::{InstanceAnnotation, Point, Polygon};
use crate::error::{Error, Result};
use crate::rng::round_half_up;

/// Largest arbitrary rotation, in degrees either way.
pub const MAX_ROTATION_DEG: f64 = 35.0;
/// Smallest fraction of each dimension a crop window keeps.
pub const MIN_CROP_RETAIN: f64 = 0.5;
/// Clipped annotations keeping less than this share of their area are dropped.
pub const DEFAULT_MIN_AREA_RETAINED: f64 = 0.10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rot90 {
    Clockwise,
    CounterClockwise,
    Half,
}

impl Rot90 {
    pub const ALL: [Rot90; 3] = [Rot90::Clockwise, Rot90::CounterClockwise, Rot90::Half];

    pub fn name(self) -> &'static str {
        match self {
            Rot90::Clockwise => "cw",
            Rot90::CounterClockwise => "ccw",
            Rot90::Half => "180",
        }
    }

    /// Maps a point of a `w`×`h` source into the rotated frame.
    pub fn map_point(self, p: Point, w: f64, h: f64) -> Point {
        match self {
            Rot90::Clockwise => Point::new(h - p.y, p.x),
            Rot90::CounterClockwise => Point::new(p.y, w - p.x),
            Rot90::Half => Point::new(w - p.x, h - p.y),
        }
    }

    pub fn output_dims(self, w: u32, h: u32) -> (u32, u32) {
        match self {
            Rot90::Half => (w, h),
            _ => (h, w),
        }
    }
}

/// Rotates image and annotations by a multiple of 90°.
pub fn rot90(sample: &Sample, variant: Rot90) -> Sample {
    let (w, h) = (sample.pixels.width() as f64, sample.pixels.height() as f64);
    let pixels = match variant {
        Rot90::Clockwise => imageops::rotate90(&sample.pixels),
        Rot90::CounterClockwise => imageops::rotate270(&sample.pixels),
        Rot90::Half => imageops::rotate180(&sample.pixels),
    };
    let annotations = sample
        .annotations
        .iter()
        .map(|a| InstanceAnnotation {
            polygon: a.polygon.map(|p| variant.map_point(p, w, h)),
            ..a.clone()
        })
        .collect();
    Sample { pixels, annotations }
}

/// Bilinear sample at continuous coordinates (pixel centres at +0.5),
/// clamping neighbours to the raster.
pub(crate) fn bilinear(img: &RgbImage, x: f64, y: f64) -> [f64; 3] {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let u = x - 0.5;
    let v = y - 0.5;
    let x0 = u.floor();
    let y0 = v.floor();
    let fx = u - x0;
    let fy = v - y0;
    let px = |xi: i64, yi: i64| img.get_pixel(xi.clamp(0, w - 1) as u32, yi.clamp(0, h - 1) as u32).0;
    let (x0, y0) = (x0 as i64, y0 as i64);
    let (a, b, c, d) = (px(x0, y0), px(x0 + 1, y0), px(x0, y0 + 1), px(x0 + 1, y0 + 1));
    let mut out = [0.0; 3];
    for k in 0..3 {
        let top = a[k] as f64 * (1.0 - fx) + b[k] as f64 * fx;
        let bottom = c[k] as f64 * (1.0 - fx) + d[k] as f64 * fx;
        out[k] = top * (1.0 - fy) + bottom * fy;
    }
    out
}

fn to_rgb(v: [f64; 3]) -> Rgb<u8> {
    Rgb(v.map(|c| round_half_up(c).clamp(0.0, 255.0) as u8))
}

/// Keeps annotations whose clipped polygon retains at least `min_retained`
/// of `reference_area`; `clip` returns the clipped polygon in pre-mapping
/// coordinates, `map` moves it into the output frame.
fn transform_annotations(
    annotations: &[InstanceAnnotation],
    min_retained: f64,
    out_w: f64,
    out_h: f64,
    transform: impl Fn(&Polygon) -> (f64, Option<Polygon>),
    map: impl Fn(Point) -> Point,
) -> Vec<InstanceAnnotation> {
    annotations
        .iter()
        .filter_map(|a| {
            let (reference_area, clipped) = transform(&a.polygon);
            let clipped = clipped?;
            if clipped.area() < min_retained * reference_area {
                return None;
            }
            let mapped = clipped.map(|p| {
                let q = map(p);
                Point::new(q.x.clamp(0.0, out_w), q.y.clamp(0.0, out_h))
            });
            (mapped.area() > 0.0).then(|| InstanceAnnotation { polygon: mapped, ..a.clone() })
        })
        .collect()
}

/// Crop window, in source pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CropParams {
    pub retain_x: f64,
    pub retain_y: f64,
    pub x0: f64,
    pub y0: f64,
}

impl CropParams {
    pub fn full() -> Self {
        CropParams { retain_x: 1.0, retain_y: 1.0, x0: 0.0, y0: 0.0 }
    }

    /// Independent retain fractions in `[min_retain, 1]` per axis, window
    /// placed uniformly among valid positions.
    pub fn sample(rng: &mut impl Rng, min_retain: f64, width: u32, height: u32) -> Self {
        let retain_x = rng.gen_range(min_retain..=1.0);
        let retain_y = rng.gen_range(min_retain..=1.0);
        let slack_x = width as f64 * (1.0 - retain_x);
        let slack_y = height as f64 * (1.0 - retain_y);
        let x0 = if slack_x > 0.0 { rng.gen_range(0.0..=slack_x) } else { 0.0 };
        let y0 = if slack_y > 0.0 { rng.gen_range(0.0..=slack_y) } else { 0.0 };
        CropParams { retain_x, retain_y, x0, y0 }
    }
}

/// Crops the window described by `params` and rescales it back to the source
/// dimensions.
pub fn crop_zoom(sample: &Sample, params: CropParams, min_area_retained: f64) -> Sample {
    let (w, h) = sample.pixels.dimensions();
    let (wf, hf) = (w as f64, h as f64);
    let cw = params.retain_x * wf;
    let ch = params.retain_y * hf;
    let (sx, sy) = (cw / wf, ch / hf);
    let pixels = if params == CropParams::full() {
        sample.pixels.clone()
    } else {
        RgbImage::from_fn(w, h, |ox, oy| {
            let x = params.x0 + (ox as f64 + 0.5) * sx;
            let y = params.y0 + (oy as f64 + 0.5) * sy;
            to_rgb(bilinear(&sample.pixels, x, y))
        })
    };
    let annotations = transform_annotations(
        &sample.annotations,
        min_area_retained,
        wf,
        hf,
        |poly| (poly.area(), poly.clip_to_rect(params.x0, params.y0, params.x0 + cw, params.y0 + ch)),
        |p| Point::new((p.x - params.x0) / sx, (p.y - params.y0) / sy),
    );
    Sample { pixels, annotations }
}

/// Random crop/zoom with the maximum zoom bound.
pub fn random_crop_zoom(sample: &Sample, rng: &mut impl Rng) -> Sample {
    let params = CropParams::sample(rng, MIN_CROP_RETAIN, sample.pixels.width(), sample.pixels.height());
    crop_zoom(sample, params, DEFAULT_MIN_AREA_RETAINED)
}

/// Maps points by a rotation of `angle_deg` about the image centre. In image
/// coordinates (y down) positive angles turn clockwise on screen.
fn rotation(angle_deg: f64, w: f64, h: f64) -> impl Fn(Point) -> Point {
    let (s, c) = angle_deg.to_radians().sin_cos();
    let (cx, cy) = (w / 2.0, h / 2.0);
    move |p: Point| {
        let (dx, dy) = (p.x - cx, p.y - cy);
        Point::new(cx + c * dx - s * dy, cy + s * dx + c * dy)
    }
}

/// Rotates about the image centre keeping the canvas size; uncovered
/// pixels are black.
pub fn rotate_arbitrary(sample: &Sample, angle_deg: f64) -> Result<Sample> {
    rotate_bounded(sample, angle_deg, MAX_ROTATION_DEG, DEFAULT_MIN_AREA_RETAINED)
}

pub(crate) fn rotate_bounded(
    sample: &Sample,
    angle_deg: f64,
    max_deg: f64,
    min_area_retained: f64,
) -> Result<Sample> {
    if !angle_deg.is_finite() || angle_deg.abs() > max_deg {
        return Err(Error::BoundExceeded { what: "rotation", value: angle_deg, max: max_deg });
    }
    if angle_deg == 0.0 {
        return Ok(sample.clone());
    }
    let (w, h) = sample.pixels.dimensions();
    let (wf, hf) = (w as f64, h as f64);
    let inverse = rotation(-angle_deg, wf, hf);
    let pixels = RgbImage::from_fn(w, h, |ox, oy| {
        let src = inverse(Point::new(ox as f64 + 0.5, oy as f64 + 0.5));
        if src.x < 0.0 || src.y < 0.0 || src.x > wf || src.y > hf {
            Rgb([0, 0, 0])
        } else {
            to_rgb(bilinear(&sample.pixels, src.x, src.y))
        }
    });
    let forward = rotation(angle_deg, wf, hf);
    let annotations = transform_annotations(
        &sample.annotations,
        min_area_retained,
        wf,
        hf,
        |poly| (poly.area(), poly.map(&forward).clip_to_rect(0.0, 0.0, wf, hf)),
        |p| p,
    );
    Ok(Sample { pixels, annotations })
}
