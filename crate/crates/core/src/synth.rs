// SPDX-License-Identifier: Apache-2.0

//! Synthetic animals for tests, benchmarks and the demo fixture.
//!
//! Two motion types stand in for the target behaviours: an RG-like animal
//! that translates steadily across the frame and an RH-like animal that stays
//! in place while its outline wobbles.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use rand::Rng;

use crate::annotations::{write_annotation_file, Category, Dataset, ImageRecord, InstanceAnnotation, Point, Polygon};
use crate::detection::write_sidecar_mask;
use crate::error::{Error, Result};
use crate::evaluate::{write_ethogram_csv, EthogramInterval};
use crate::mask::Mask;
use crate::patterns::{frame_file_name, write_video_meta, Animation};
use crate::rng::item_rng;

pub const WINDOW_SIZE: u32 = 128;

/// Axis-aligned ellipse by pixel-centre test.
pub fn ellipse_mask(width: u32, height: u32, cx: f64, cy: f64, rx: f64, ry: f64) -> Result<Mask> {
    let mut m = Mask::new(width, height)?;
    for y in 0..height {
        for x in 0..width {
            let dx = (x as f64 + 0.5 - cx) / rx;
            let dy = (y as f64 + 0.5 - cy) / ry;
            if dx * dx + dy * dy <= 1.0 {
                m.set(x, y, true);
            }
        }
    }
    Ok(m)
}

/// Ellipse outline as a polygon with `n` vertices.
pub fn ellipse_polygon(cx: f64, cy: f64, rx: f64, ry: f64, n: usize) -> Result<Polygon> {
    Polygon::new(
        (0..n)
            .map(|k| {
                let a = TAU * k as f64 / n as f64;
                Point { x: cx + rx * a.cos(), y: cy + ry * a.sin() }
            })
            .collect(),
    )
}

/// Steady translation in a random direction at 1 to 2 px per frame.
pub fn rg_like(rng: &mut impl Rng, len: usize) -> Result<Vec<Mask>> {
    let (rx, ry) = (rng.gen_range(6.0..10.0), rng.gen_range(5.0..8.0));
    let angle = rng.gen_range(0.0..TAU);
    let speed = rng.gen_range(1.0..2.0);
    let (vx, vy) = (speed * angle.cos(), speed * angle.sin());
    let travel = (len.saturating_sub(1)) as f64;
    let mid = WINDOW_SIZE as f64 / 2.0;
    let (x0, y0) = (mid - vx * travel / 2.0, mid - vy * travel / 2.0);
    (0..len)
        .map(|t| ellipse_mask(WINDOW_SIZE, WINDOW_SIZE, x0 + vx * t as f64, y0 + vy * t as f64, rx, ry))
        .collect()
}

/// Stationary animal whose centre jitters by under 1.5 px and whose
/// outline pulses by up to 15%.
pub fn rh_like(rng: &mut impl Rng, len: usize) -> Result<Vec<Mask>> {
    let (rx, ry) = (rng.gen_range(6.0..10.0), rng.gen_range(5.0..8.0));
    let mid = WINDOW_SIZE as f64 / 2.0;
    let amp = rng.gen_range(0.5..1.5);
    let pulse = rng.gen_range(0.05..0.15);
    let period = rng.gen_range(4.0..10.0);
    let phase = rng.gen_range(0.0..TAU);
    (0..len)
        .map(|t| {
            let w = TAU * t as f64 / period + phase;
            let s = 1.0 + pulse * w.sin();
            ellipse_mask(WINDOW_SIZE, WINDOW_SIZE, mid + amp * w.sin(), mid + amp * (2.0 * w).cos(), rx * s, ry / s)
        })
        .collect()
}

/// `n` labelled windows alternating RG-like and RH-like. Window `i` draws
/// from the stream `(seed, i)`.
pub fn motion_dataset(n: usize, len: usize, seed: u64) -> Result<Vec<(String, Animation)>> {
    (0..n)
        .map(|i| {
            let mut rng = item_rng(seed, &[i as u64]);
            let (label, masks) = if i % 2 == 0 { ("RG", rg_like(&mut rng, len)?) } else { ("RH", rh_like(&mut rng, len)?) };
            Ok((label.to_string(), Animation::new(format!("synthetic_{i}"), 0, masks)?))
        })
        .collect()
}

/// Writes one single-instance sidecar mask per frame into `dir`.
pub fn write_sidecar_masks(dir: &Path, masks: &[Mask]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (t, m) in masks.iter().enumerate() {
        write_sidecar_mask(dir, t, std::slice::from_ref(m), m.width(), m.height(), &mut Vec::new())?;
    }
    Ok(())
}

pub const FIXTURE_FRAMES: usize = 200;
pub const FIXTURE_FPS: f64 = 24.0;
pub const FIXTURE_WIDTH: u32 = 160;
pub const FIXTURE_HEIGHT: u32 = 96;
/// First frame of the RG-like part of the fixture video.
pub const FIXTURE_SWITCH: usize = 96;

/// Animal ellipse `(cx, cy, rx, ry)` in fixture frame `t`: wobbling in
/// place for 4 s, then walking right.
pub fn fixture_animal(t: usize) -> (f64, f64, f64, f64) {
    if t < FIXTURE_SWITCH {
        let w = TAU * t as f64 / 8.0;
        let s = 1.0 + 0.1 * w.sin();
        (40.0 + w.sin(), 48.0 + (2.0 * w).cos(), 10.0 * s, 7.0 / s)
    } else {
        let dt = (t - FIXTURE_SWITCH) as f64;
        (40.0 + 1.0 * dt, 48.0 + 0.2 * dt, 10.0, 7.0)
    }
}

/// Paths of a written fixture.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub root: PathBuf,
    pub frames: PathBuf,
    pub masks: PathBuf,
    pub annotations: PathBuf,
    pub ethogram: PathBuf,
}

fn fixture_frame(t: usize, seed: u64) -> RgbImage {
    let mut rng = item_rng(seed, &[t as u64]);
    let (cx, cy, rx, ry) = fixture_animal(t);
    RgbImage::from_fn(FIXTURE_WIDTH, FIXTURE_HEIGHT, |x, y| {
        let dx = (x as f64 + 0.5 - cx) / rx;
        let dy = (y as f64 + 0.5 - cy) / ry;
        let grain: i16 = rng.gen_range(-6..=6);
        let base = if dx * dx + dy * dy <= 1.0 { [120i16, 80, 50] } else { [170, 160 + (y / 8) as i16, 140] };
        Rgb(base.map(|c| (c + grain).clamp(0, 255) as u8))
    })
}

/// Writes a 200-frame, 24 fps synthetic video under `root`:
/// `frames/` (frames and `video.meta`), `masks/` (one detector mask per
/// frame), `annotations.json` (polygon ground truth for every frame) and
/// `ethogram.csv` (RH then RG).
pub fn write_fixture(root: &Path, seed: u64) -> Result<Fixture> {
    let fx = Fixture {
        root: root.to_path_buf(),
        frames: root.join("frames"),
        masks: root.join("masks"),
        annotations: root.join("annotations.json"),
        ethogram: root.join("ethogram.csv"),
    };
    for d in [&fx.frames, &fx.masks] {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    let (w, h) = (FIXTURE_WIDTH, FIXTURE_HEIGHT);
    let mut images = Vec::new();
    let mut annotations = Vec::new();
    for t in 0..FIXTURE_FRAMES {
        let path = fx.frames.join(frame_file_name(t));
        fixture_frame(t, seed).save(&path).map_err(|e| Error::image(&path, e))?;
        let (cx, cy, rx, ry) = fixture_animal(t);
        // every 25th prediction lags behind the animal
        let lag = if t % 25 == 24 { 4.0 } else { 0.0 };
        let pred = ellipse_mask(w, h, cx - lag, cy, rx, ry)?;
        write_sidecar_mask(&fx.masks, t, &[pred], w, h, &mut Vec::new())?;
        let id = t as u64 + 1;
        images.push(ImageRecord { id, path: format!("frames/{}", frame_file_name(t)), width: w, height: h });
        annotations.push(InstanceAnnotation {
            id,
            image_id: id,
            category: "macaque".into(),
            polygon: ellipse_polygon(cx, cy, rx, ry, 48)?,
        });
    }
    write_video_meta(&fx.frames.join("video.meta"), FIXTURE_FPS)?;
    let dataset = Dataset::new(images, annotations, vec![Category { id: 1, name: "macaque".into() }])?;
    write_annotation_file(&fx.annotations, &dataset)?;
    let switch_s = FIXTURE_SWITCH as f64 / FIXTURE_FPS;
    let ethogram = [
        EthogramInterval::new("RH", 0.0, switch_s)?,
        EthogramInterval::new("RG", switch_s, 8.33)?,
    ];
    let file = fs::File::create(&fx.ethogram).map_err(|e| Error::io(&fx.ethogram, e))?;
    write_ethogram_csv(file, &ethogram)?;
    Ok(fx)
}
