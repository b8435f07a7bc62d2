// SPDX-License-Identifier: Apache-2.0

//! Baseline categoriser and video scoring.
//!
//! The categoriser is a multinomial logistic regression over eight motion
//! features of an (animation, movement pattern) pair. Models trained
//! elsewhere can be plugged in through probability files instead.

mod external;
mod features;
mod model;
mod timeline;

pub use external::read_external_probabilities;
pub use features::{extract_features, FeatureVector, FEATURE_NAMES, N_FEATURES};
pub use model::{predict, train_baseline, CategoriserModel, Objective, TrainParams, TrainingExample, N_PARAMS};
pub use timeline::{ProbabilityTimeline, TimelineRow, ROW_SUM_TOLERANCE};

use crate::detection::DetectorAdapter;
use crate::error::{Error, Result};
use crate::parallel::Pool;
use crate::patterns::{extract_window, render_movement_pattern, FrameSequence, MaskTrack};

/// Features of one example.
pub fn example_features(ex: &crate::patterns::BehaviourExample) -> TrainingExample {
    TrainingExample { features: extract_features(&ex.animation, &ex.pattern), label: ex.label.clone() }
}

/// Scores windows starting at `0, stride, …` that fit inside the track.
/// Each row is stamped with the time of the window's last frame.
pub fn score_windows(
    video_id: &str,
    fps: f64,
    track: &MaskTrack,
    model: &CategoriserModel,
    window: usize,
    stride: usize,
    pool: &Pool,
) -> Result<ProbabilityTimeline> {
    if stride < 1 || window < 2 {
        return Err(Error::InvalidArgument(format!("invalid window {window} / stride {stride}")));
    }
    if !(fps > 0.0) {
        return Err(Error::InvalidArgument(format!("fps must be positive, got {fps}")));
    }
    if track.len() < window {
        return Err(Error::WindowOutOfBounds { start: 0, end: window, frames: track.len() });
    }
    let starts: Vec<usize> = (0..=track.len() - window).step_by(stride).collect();
    let rows = pool.map(&starts, |_, &s| {
        let anim = extract_window(video_id, track, s, window)?;
        let pattern = render_movement_pattern(&anim)?;
        let fv = extract_features(&anim, &pattern);
        Ok(TimelineRow { time_s: (s + window - 1) as f64 / fps, probs: predict(model, &fv) })
    })?;
    ProbabilityTimeline::new(model.categories.clone(), rows)
}

/// Detects the tracked animal in every frame, then scores the windows.
pub fn classify_video(
    seq: &FrameSequence,
    adapter: &dyn DetectorAdapter,
    model: &CategoriserModel,
    window: usize,
    stride: usize,
    pool: &Pool,
) -> Result<ProbabilityTimeline> {
    if seq.len() < window {
        return Err(Error::WindowOutOfBounds { start: 0, end: window, frames: seq.len() });
    }
    let track = MaskTrack::detect(seq, adapter, pool)?;
    score_windows(&seq.video_id, seq.fps, &track, model, window, stride, pool)
}
