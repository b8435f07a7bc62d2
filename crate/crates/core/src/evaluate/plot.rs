// SPDX-License-Identifier: Apache-2.0

use super::interval::EthogramInterval;
use crate::classify::ProbabilityTimeline;
use crate::error::Result;
use crate::svg::{Band, LineChart, Series};

pub const CURVE_COLOUR: &str = "#0000ff";
pub const TRUTH_COLOUR: &str = "#ff0000";

/// SVG of one category's probability curve (blue) over the ground-truth
/// bouts of that category (red bands). Identical input gives identical
/// bytes.
pub fn emit_timeline_plot(timeline: &ProbabilityTimeline, gt: &[EthogramInterval], category: &str) -> Result<String> {
    let series = timeline.series(category)?;
    let bands: Vec<Band> = gt
        .iter()
        .filter(|g| g.label == category)
        .map(|g| Band { colour: TRUTH_COLOUR, x0: g.start_s, x1: g.end_s })
        .collect();
    let x_max = series
        .iter()
        .map(|p| p.0)
        .chain(bands.iter().map(|b| b.x1))
        .fold(0.0f64, f64::max);
    let chart = LineChart {
        title: format!("P({category}) over time"),
        x_label: "time (s)".into(),
        y_label: "probability".into(),
        x_range: (0.0, if x_max > 0.0 { x_max } else { 1.0 }),
        y_range: (0.0, 1.0),
        series: vec![Series { colour: CURVE_COLOUR, points: series }],
        bands,
    };
    Ok(chart.render())
}
