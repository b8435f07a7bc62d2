// SPDX-License-Identifier: Apache-2.0

//! Behaviour examples: fixed-length animations and their movement patterns.
//!
//! A movement pattern draws the outer contour of the tracked mask of every
//! frame of an animation onto one white canvas, coloured on a linear RGB ramp
//! from blue (first frame) to red (last frame). Later frames overdraw earlier
//! ones.

mod examples;
mod video;

use image::{Rgb, RgbImage};

pub use examples::{
    frame_range, generate_examples, plan_windows, read_examples, write_examples, BehaviourExample, ExampleConfig,
    PlannedWindow, BACKGROUND,
};
pub use video::{
    frame_file_name, mask_file_name, parse_indexed_name, read_video_meta, write_video_meta, FrameSequence,
};

use crate::detection::{self, DetectorAdapter};
use crate::error::{Error, Result};
use crate::mask::Mask;
use crate::parallel::Pool;

pub const DEFAULT_WINDOW: usize = 45;
pub const DEFAULT_TRAIN_STRIDE: usize = 45;
pub const DEFAULT_INFER_STRIDE: usize = 5;
pub const MIN_CANVAS: u32 = 16;
pub const CANVAS_PADDING: f64 = 0.05;

pub const WHITE: Rgb<u8> = Rgb([255, 255, 255]);

/// Colour of frame `t` in a window of `len` frames: `(0,0,255)` at `t = 0`
/// to `(255,0,0)` at `t = len - 1`, each channel rounded half up.
pub fn time_colour(t: usize, len: usize) -> Result<Rgb<u8>> {
    if len < 2 || t >= len {
        return Err(Error::InvalidArgument(format!("time index {t} outside window of {len} frames")));
    }
    let d = (len - 1) as u64;
    let ramp = |k: u64| ((510 * k + d) / (2 * d)) as u8;
    Ok(Rgb([ramp(t as u64), 0, ramp(d - t as u64)]))
}

/// The single tracked mask of every frame of a video. Frames without a
/// detection hold an empty mask.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskTrack {
    masks: Vec<Mask>,
}

impl MaskTrack {
    pub fn new(masks: Vec<Mask>) -> Result<Self> {
        if let Some(first) = masks.first() {
            for m in &masks {
                m.ensure_same_dims(first)?;
            }
        }
        Ok(MaskTrack { masks })
    }

    /// Keeps the largest instance of each frame.
    pub fn from_detections(detections: &[detection::FrameDetection], width: u32, height: u32) -> Result<Self> {
        let masks = detections
            .iter()
            .map(|d| match d.largest() {
                Some(m) => Ok(m.clone()),
                None => Mask::new(width, height),
            })
            .collect::<Result<Vec<_>>>()?;
        MaskTrack::new(masks)
    }

    /// Loads every frame of `seq` and runs `adapter` on it.
    pub fn detect(seq: &FrameSequence, adapter: &dyn DetectorAdapter, pool: &Pool) -> Result<Self> {
        let detections = pool.map(&seq.frames, |i, path| {
            let frame = image::open(path).map_err(|e| Error::image(path, e))?.to_rgb8();
            let det = detection::detect(adapter, &frame, i)?;
            let (w, h) = frame.dimensions();
            Ok(match det.largest() {
                Some(m) => m.clone(),
                None => Mask::new(w, h)?,
            })
        })?;
        MaskTrack::new(detections)
    }

    pub fn masks(&self) -> &[Mask] {
        &self.masks
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }
}

/// Consecutive frames of one video with one tracked mask per frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Animation {
    pub video_id: String,
    pub start_frame: usize,
    pub masks: Vec<Mask>,
}

impl Animation {
    pub fn new(video_id: impl Into<String>, start_frame: usize, masks: Vec<Mask>) -> Result<Self> {
        if masks.is_empty() {
            return Err(Error::InvalidArgument("animation has no frames".into()));
        }
        for m in &masks {
            m.ensure_same_dims(&masks[0])?;
        }
        Ok(Animation { video_id: video_id.into(), start_frame, masks })
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    /// Video frame indices covered by the animation.
    pub fn frames(&self) -> std::ops::Range<usize> {
        self.start_frame..self.start_frame + self.masks.len()
    }
}

/// Cuts `len` frames starting at `start` out of a tracked video.
pub fn extract_window(video_id: &str, track: &MaskTrack, start: usize, len: usize) -> Result<Animation> {
    let end = start.checked_add(len).ok_or(Error::WindowOutOfBounds { start, end: usize::MAX, frames: track.len() })?;
    if len == 0 || end > track.len() {
        return Err(Error::WindowOutOfBounds { start, end, frames: track.len() });
    }
    Animation::new(video_id, start, track.masks[start..end].to_vec())
}

/// A rendered movement pattern. Canvas pixel `(cx, cy)` shows video pixel
/// `(origin_x + cx / scale, origin_y + cy / scale)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MovementPattern {
    pub canvas: RgbImage,
    pub origin_x: i64,
    pub origin_y: i64,
    pub scale: f64,
}

impl MovementPattern {
    /// Share of canvas pixels that are not background white.
    pub fn ink_fraction(&self) -> f64 {
        let ink = self.canvas.pixels().filter(|p| **p != WHITE).count();
        ink as f64 / (self.canvas.width() as f64 * self.canvas.height() as f64)
    }
}

/// Canvas rectangle `(x0, y0, w, h)` in video coordinates: union bounding
/// box of all masks, padded by 5% of its size per side (rounded up) and
/// grown symmetrically to at least 16×16.
pub fn pattern_canvas(masks: &[Mask]) -> (i64, i64, u32, u32) {
    let union = masks.iter().filter_map(Mask::bounding_box).reduce(|a, b| a.union(&b));
    let Some(bb) = union else {
        return (0, 0, MIN_CANVAS, MIN_CANVAS);
    };
    let axis = |lo: u32, size: u32| -> (i64, u32) {
        let pad = (size as f64 * CANVAS_PADDING).ceil() as u32;
        let mut start = lo as i64 - pad as i64;
        let mut len = size + 2 * pad;
        if len < MIN_CANVAS {
            start -= ((MIN_CANVAS - len) / 2) as i64;
            len = MIN_CANVAS;
        }
        (start, len)
    };
    let (x0, w) = axis(bb.min_x, bb.width());
    let (y0, h) = axis(bb.min_y, bb.height());
    (x0, y0, w, h)
}

/// Renders the movement pattern of an animation. Depends on the masks only.
pub fn render_movement_pattern(anim: &Animation) -> Result<MovementPattern> {
    let (x0, y0, w, h) = pattern_canvas(&anim.masks);
    let mut canvas = RgbImage::from_pixel(w, h, WHITE);
    let len = anim.len();
    for (t, mask) in anim.masks.iter().enumerate() {
        if mask.is_empty() {
            continue;
        }
        let colour = if len >= 2 { time_colour(t, len)? } else { Rgb([255, 0, 0]) };
        for (x, y) in mask.iter_set() {
            if mask.is_contour(x, y) {
                let cx = (x as i64 - x0) as u32;
                let cy = (y as i64 - y0) as u32;
                canvas.put_pixel(cx, cy, colour);
            }
        }
    }
    Ok(MovementPattern { canvas, origin_x: x0, origin_y: y0, scale: 1.0 })
}
