// SPDX-License-Identifier: Apache-2.0

use crate::patterns::{Animation, MovementPattern};

pub const N_FEATURES: usize = 8;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "speed",
    "straightness",
    "area_cv",
    "area_change",
    "aspect_ratio",
    "consecutive_iou",
    "ink_fraction",
    "horizontal_share",
];

/// Motion descriptor of one example.
///
/// Centroids, areas and boxes are taken over the frames with a non-empty
/// mask, in frame order. Speeds and area changes divide by the frame gap
/// between successive non-empty frames.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; N_FEATURES],
    /// Fewer than two non-empty frames; motion features are zero.
    pub low_signal: bool,
}

struct Track {
    frame: usize,
    centroid: (f64, f64),
    area: f64,
    diag: f64,
    aspect: f64,
}

fn mean(v: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = v.len();
    if n == 0 {
        0.0
    } else {
        v.sum::<f64>() / n as f64
    }
}

pub fn extract_features(anim: &Animation, pattern: &MovementPattern) -> FeatureVector {
    let track: Vec<Track> = anim
        .masks
        .iter()
        .enumerate()
        .filter_map(|(frame, m)| {
            let bb = m.bounding_box()?;
            let (w, h) = (bb.width() as f64, bb.height() as f64);
            Some(Track {
                frame,
                centroid: m.centroid()?,
                area: m.count() as f64,
                diag: w.hypot(h),
                aspect: w / h,
            })
        })
        .collect();
    let ink = pattern.ink_fraction();
    let aspect = mean(track.iter().map(|t| t.aspect));
    if track.len() < 2 {
        let mut values = [0.0; N_FEATURES];
        values[4] = aspect;
        values[6] = ink;
        return FeatureVector { values, low_signal: true };
    }

    let steps: Vec<(f64, f64, f64)> = track
        .windows(2)
        .map(|p| {
            let gap = (p[1].frame - p[0].frame) as f64;
            let dx = p[1].centroid.0 - p[0].centroid.0;
            let dy = p[1].centroid.1 - p[0].centroid.1;
            (dx.hypot(dy), gap, (p[1].area - p[0].area).abs())
        })
        .collect();
    let mean_diag = mean(track.iter().map(|t| t.diag));
    let mean_area = mean(track.iter().map(|t| t.area));
    let speed = mean(steps.iter().map(|s| s.0 / s.1)) / mean_diag;

    let path: f64 = steps.iter().map(|s| s.0).sum();
    let (first, last) = (track[0].centroid, track[track.len() - 1].centroid);
    let (net_x, net_y) = (last.0 - first.0, last.1 - first.1);
    let straightness = if path > 0.0 { (net_x.hypot(net_y) / path).min(1.0) } else { 0.0 };

    let var = mean(track.iter().map(|t| (t.area - mean_area).powi(2)));
    let area_cv = var.sqrt() / mean_area;
    let area_change = mean(steps.iter().map(|s| s.2 / s.1)) / mean_area;

    let ious: Vec<f64> = anim
        .masks
        .windows(2)
        .filter(|p| !p[0].is_empty() && !p[1].is_empty())
        .map(|p| p[0].iou(&p[1]).unwrap_or(0.0))
        .collect();
    let consecutive_iou = mean(ious.into_iter());

    let (ax, ay) = (net_x.abs(), net_y.abs());
    let horizontal_share = if ax + ay > 0.0 { ax / (ax + ay) } else { 0.5 };

    FeatureVector {
        values: [speed, straightness, area_cv, area_change, aspect, consecutive_iou, ink, horizontal_share],
        low_signal: false,
    }
}
