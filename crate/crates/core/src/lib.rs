// SPDX-License-Identifier: Apache-2.0

//! Behaviour-analysis pipeline for video-recorded animals.
//!
//! The crate follows the workflow of a detector/categoriser toolchain:
//!
//! * [`annotations`] ingests polygon instance annotations and rasterizes them.
//! * [`augment`] enlarges the detector corpus with bounded, seeded transforms.
//! * [`detection`] wraps per-frame detectors and scores their masks with the
//!   coverage/spill protocol.
//! * [`patterns`] cuts fixed-length animations out of a video and renders the
//!   blue-to-red movement pattern of each.
//! * [`classify`] trains and applies a linear baseline categoriser and turns
//!   videos into probability timelines.
//! * [`evaluate`] converts timelines into ethogram events and matches them
//!   against ground truth.
//! * [`parallel`] runs independent work items on a worker pool and measures
//!   scaling.

pub mod annotations;
pub mod classify;
pub mod detection;
pub mod evaluate;
pub mod patterns;
pub mod svg;
pub mod synth;
pub mod augment;
pub mod error;
pub mod mask;
pub mod parallel;
pub mod rng;

pub use error::{Error, Result};
pub use mask::Mask;
