// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;

use image::{GrayImage, Rgb, RgbImage};

use super::{extract_window, render_movement_pattern, Animation, FrameSequence, MaskTrack, MovementPattern};
use crate::error::{Error, Result};
use crate::evaluate::{check_disjoint, EthogramInterval};
use crate::mask::Mask;
use crate::parallel::Pool;
use crate::patterns::{frame_file_name, mask_file_name, parse_indexed_name, DEFAULT_TRAIN_STRIDE, DEFAULT_WINDOW};

/// Label of windows that intersect no ground-truth interval.
pub const BACKGROUND: &str = "background";

#[derive(Clone, Debug, PartialEq)]
pub struct ExampleConfig {
    pub window: usize,
    pub stride: usize,
    /// Behaviour labels the ethogram may use.
    pub categories: Vec<String>,
    /// Emit windows outside every interval as `background`.
    pub background: bool,
}

impl Default for ExampleConfig {
    fn default() -> Self {
        ExampleConfig {
            window: DEFAULT_WINDOW,
            stride: DEFAULT_TRAIN_STRIDE,
            categories: vec!["RG".into(), "RH".into()],
            background: true,
        }
    }
}

impl ExampleConfig {
    /// Categories of the examples this configuration produces.
    pub fn output_categories(&self) -> Vec<String> {
        let mut cats = self.categories.clone();
        if self.background && !cats.iter().any(|c| c == BACKGROUND) {
            cats.push(BACKGROUND.into());
        }
        cats
    }
}

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r
    } else {
        x
    }
}

/// Inclusive frame range of a half-open interval `[s, e)` in seconds: from
/// `ceil(s·fps)` to `ceil(e·fps) - 1`. `None` when no frame falls inside.
pub fn frame_range(interval: &EthogramInterval, fps: f64) -> Option<(usize, usize)> {
    let first = snap(interval.start_s * fps).ceil();
    let end = snap(interval.end_s * fps).ceil();
    if end <= first || end <= 0.0 {
        return None;
    }
    Some((first.max(0.0) as usize, end as usize - 1))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlannedWindow {
    pub start_frame: usize,
    pub label: String,
}

/// Labelled window starts on the grid `0, stride, 2·stride, …`. A window is
/// labelled with a behaviour only when it lies entirely inside one interval
/// of that behaviour; windows touching no interval become background when
/// enabled; all others are skipped.
pub fn plan_windows(
    n_frames: usize,
    fps: f64,
    ethogram: &[EthogramInterval],
    cfg: &ExampleConfig,
) -> Result<Vec<PlannedWindow>> {
    if cfg.stride < 1 {
        return Err(Error::InvalidArgument("stride must be at least 1".into()));
    }
    if cfg.window < 2 {
        return Err(Error::InvalidArgument("window must span at least 2 frames".into()));
    }
    if !(fps > 0.0) {
        return Err(Error::InvalidArgument(format!("fps must be positive, got {fps}")));
    }
    for iv in ethogram {
        if !cfg.categories.iter().any(|c| *c == iv.label) {
            return Err(Error::UnknownCategory(iv.label.clone()));
        }
    }
    check_disjoint(&ethogram.iter().collect::<Vec<_>>())?;
    let ranges: Vec<(usize, usize, &str)> = ethogram
        .iter()
        .filter_map(|iv| frame_range(iv, fps).map(|(a, b)| (a, b, iv.label.as_str())))
        .collect();

    let mut out = Vec::new();
    let mut s = 0;
    while s + cfg.window <= n_frames {
        let last = s + cfg.window - 1;
        if let Some(&(_, _, label)) = ranges.iter().find(|(a, b, _)| *a <= s && last <= *b) {
            out.push(PlannedWindow { start_frame: s, label: label.to_string() });
        } else if cfg.background && ranges.iter().all(|(a, b, _)| last < *a || s > *b) {
            out.push(PlannedWindow { start_frame: s, label: BACKGROUND.to_string() });
        }
        s += cfg.stride;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BehaviourExample {
    pub id: usize,
    pub animation: Animation,
    pub pattern: MovementPattern,
    pub label: String,
}

/// Cuts and renders every planned window of a tracked video. Example ids
/// follow window order from 0.
pub fn generate_examples(
    video_id: &str,
    fps: f64,
    track: &MaskTrack,
    ethogram: &[EthogramInterval],
    cfg: &ExampleConfig,
    pool: &Pool,
) -> Result<Vec<BehaviourExample>> {
    let plan = plan_windows(track.len(), fps, ethogram, cfg)?;
    pool.map(&plan, |id, w| {
        let animation = extract_window(video_id, track, w.start_frame, cfg.window)?;
        let pattern = render_movement_pattern(&animation)?;
        Ok(BehaviourExample { id, animation, pattern, label: w.label.clone() })
    })
}

fn crop_rgb(img: &RgbImage, x0: i64, y0: i64, w: u32, h: u32) -> RgbImage {
    RgbImage::from_fn(w, h, |cx, cy| {
        let (x, y) = (x0 + cx as i64, y0 + cy as i64);
        if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
            *img.get_pixel(x as u32, y as u32)
        } else {
            Rgb([0, 0, 0])
        }
    })
}

fn save_png<P: image::PixelWithColorType, C: std::ops::Deref<Target = [P::Subpixel]>>(
    img: &image::ImageBuffer<P, C>,
    path: &Path,
) -> Result<()>
where
    P: image::Pixel,
    [P::Subpixel]: image::EncodableLayout,
{
    img.save_with_format(path, image::ImageFormat::Png).map_err(|e| Error::image(path, e))
}

/// Writes `anim_<id>/` (frame and mask crops on the pattern canvas),
/// `pattern_<id>.png` and `manifest.csv` (`id,video,start_frame,label`).
pub fn write_examples(dir: &Path, seq: &FrameSequence, examples: &[BehaviourExample], pool: &Pool) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    pool.map(examples, |_, ex| {
        let anim_dir = dir.join(format!("anim_{}", ex.id));
        fs::create_dir_all(&anim_dir).map_err(|e| Error::io(&anim_dir, e))?;
        let (x0, y0) = (ex.pattern.origin_x, ex.pattern.origin_y);
        let (w, h) = ex.pattern.canvas.dimensions();
        for (t, frame_idx) in ex.animation.frames().enumerate() {
            let path = seq
                .frames
                .get(frame_idx)
                .ok_or(Error::WindowOutOfBounds { start: frame_idx, end: frame_idx + 1, frames: seq.len() })?;
            let frame = image::open(path).map_err(|e| Error::image(path, e))?.to_rgb8();
            save_png(&crop_rgb(&frame, x0, y0, w, h), &anim_dir.join(frame_file_name(t)))?;
            let mask = ex.animation.masks[t].crop(x0, y0, w, h)?;
            save_png(&mask.to_gray(), &anim_dir.join(mask_file_name(t)))?;
        }
        save_png(&ex.pattern.canvas, &dir.join(format!("pattern_{}.png", ex.id)))
    })?;
    let path = dir.join("manifest.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["id", "video", "start_frame", "label"])?;
    for ex in examples {
        w.write_record([
            ex.id.to_string(),
            ex.animation.video_id.clone(),
            ex.animation.start_frame.to_string(),
            ex.label.clone(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

fn read_mask(path: &Path) -> Result<Mask> {
    let img: GrayImage = image::open(path).map_err(|e| Error::image(path, e))?.to_luma8();
    Mask::from_gray(&img, |v| v > 127)
}

/// Reads a directory written by [`write_examples`]. Masks and patterns come
/// back in canvas coordinates (pattern origin 0, 0).
pub fn read_examples(dir: &Path) -> Result<Vec<BehaviourExample>> {
    let path = dir.join("manifest.csv");
    let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["id", "video", "start_frame", "label"] {
        return Err(Error::format(path.display().to_string(), 1, "expected header id,video,start_frame,label"));
    }
    let mut out = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        let bad = |what: &str| Error::format(path.display().to_string(), line, format!("invalid {what}"));
        let id: usize = rec[0].parse().map_err(|_| bad("id"))?;
        let start: usize = rec[2].parse().map_err(|_| bad("start_frame"))?;
        let anim_dir = dir.join(format!("anim_{id}"));
        let mut masks: Vec<(usize, Mask)> = Vec::new();
        for entry in fs::read_dir(&anim_dir).map_err(|e| Error::io(&anim_dir, e))? {
            let entry = entry.map_err(|e| Error::io(&anim_dir, e))?;
            if let Some(t) = entry.file_name().to_str().and_then(|s| parse_indexed_name(s, "mask")) {
                masks.push((t, read_mask(&entry.path())?));
            }
        }
        masks.sort_by_key(|(t, _)| *t);
        if masks.iter().enumerate().any(|(i, (t, _))| i != *t) {
            return Err(Error::InvalidArgument(format!("{}: mask sequence has a gap", anim_dir.display())));
        }
        let pattern_path = dir.join(format!("pattern_{id}.png"));
        let canvas = image::open(&pattern_path).map_err(|e| Error::image(&pattern_path, e))?.to_rgb8();
        out.push(BehaviourExample {
            id,
            animation: Animation::new(&rec[1], start, masks.into_iter().map(|(_, m)| m).collect())?,
            pattern: MovementPattern { canvas, origin_x: 0, origin_y: 0, scale: 1.0 },
            label: rec[3].to_string(),
        });
    }
    Ok(out)
}
