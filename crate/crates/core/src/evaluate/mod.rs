// SPDX-License-Identifier: Apache-2.0

//! Ethogram-level evaluation of probability timelines.

mod events;
mod interval;
mod plot;

pub(crate) use events::check_disjoint;
pub use events::{
    match_events, onset_latency, threshold_events, CategoryMatch, EventMatchReport, Hysteresis, MatchedPair,
};
pub use interval::{read_ethogram_csv, temporal_iou, write_ethogram_csv, EthogramInterval};
pub use plot::{emit_timeline_plot, CURVE_COLOUR, TRUTH_COLOUR};
