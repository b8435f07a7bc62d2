// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use super::interval::{temporal_iou, EthogramInterval};
use crate::classify::ProbabilityTimeline;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hysteresis {
    pub theta_on: f64,
    pub theta_off: f64,
    pub min_duration_s: f64,
}

impl Default for Hysteresis {
    fn default() -> Self {
        Hysteresis { theta_on: 0.5, theta_off: 0.4, min_duration_s: 0.5 }
    }
}

/// Extracts events of `category` from a timeline.
///
/// An event opens at the first sample with `p >= theta_on` and runs until
/// the next sample with `p < theta_off`; its end is the last sample still at
/// or above `theta_off` (or the final sample when the timeline ends first).
/// Events shorter than `min_duration_s` are dropped.
pub fn threshold_events(
    timeline: &ProbabilityTimeline,
    category: &str,
    params: Hysteresis,
) -> Result<Vec<EthogramInterval>> {
    if params.theta_off > params.theta_on {
        return Err(Error::InvalidArgument(format!(
            "theta_off {} exceeds theta_on {}",
            params.theta_off, params.theta_on
        )));
    }
    let series = timeline.series(category)?;
    let mut events = Vec::new();
    let mut open: Option<(f64, f64)> = None;
    let close = |start: f64, end: f64, events: &mut Vec<EthogramInterval>| {
        if end - start >= params.min_duration_s && end > start {
            events.push(EthogramInterval { label: category.to_string(), start_s: start, end_s: end });
        }
    };
    for &(t, p) in &series {
        open = match open {
            None if p >= params.theta_on => Some((t, t)),
            None => None,
            Some((start, _)) if p >= params.theta_off => Some((start, t)),
            Some((start, last)) => {
                close(start, last, &mut events);
                None
            }
        };
    }
    if let Some((start, last)) = open {
        close(start, last, &mut events);
    }
    Ok(events)
}

/// Signed onset difference; positive means the prediction came late.
pub fn onset_latency(pred_onset_s: f64, gt_onset_s: f64) -> f64 {
    debug_assert!(pred_onset_s >= 0.0 && gt_onset_s >= 0.0);
    pred_onset_s - gt_onset_s
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchedPair {
    pub pred: EthogramInterval,
    pub gt: EthogramInterval,
    pub iou: f64,
    pub latency_s: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CategoryMatch {
    pub category: String,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub matches: Vec<MatchedPair>,
}

impl CategoryMatch {
    pub fn mean_iou(&self) -> Option<f64> {
        mean(self.matches.iter().map(|m| m.iou))
    }

    pub fn mean_latency_s(&self) -> Option<f64> {
        mean(self.matches.iter().map(|m| m.latency_s))
    }
}

fn mean(it: impl ExactSizeIterator<Item = f64>) -> Option<f64> {
    let n = it.len();
    (n > 0).then(|| it.sum::<f64>() / n as f64)
}

/// Per-category event matching results, sorted by category name.
#[derive(Clone, Debug, PartialEq)]
pub struct EventMatchReport {
    pub iou_min: f64,
    pub categories: Vec<CategoryMatch>,
}

impl EventMatchReport {
    pub fn category(&self, name: &str) -> Option<&CategoryMatch> {
        self.categories.iter().find(|c| c.category == name)
    }

    /// CSV `category,tp,fp,fn,mean_iou,mean_latency_s`; undefined means are
    /// left empty.
    pub fn write_csv(&self, out: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["category", "tp", "fp", "fn", "mean_iou", "mean_latency_s"])?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for c in &self.categories {
            w.write_record([
                c.category.clone(),
                c.tp.to_string(),
                c.fp.to_string(),
                c.fn_.to_string(),
                opt(c.mean_iou()),
                opt(c.mean_latency_s()),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<event report>", e))
    }
}

pub(crate) fn check_disjoint(intervals: &[&EthogramInterval]) -> Result<()> {
    let mut sorted = intervals.to_vec();
    sorted.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    for w in sorted.windows(2) {
        if w[1].start_s < w[0].end_s {
            return Err(Error::OverlappingIntervals {
                label: w[0].label.clone(),
                a_start: w[0].start_s,
                a_end: w[0].end_s,
                b_start: w[1].start_s,
                b_end: w[1].end_s,
            });
        }
    }
    Ok(())
}

/// Greedy one-to-one matching within each category, highest temporal IoU
/// first; pairs below `iou_min` stay unmatched.
pub fn match_events(pred: &[EthogramInterval], gt: &[EthogramInterval], iou_min: f64) -> Result<EventMatchReport> {
    let mut by_cat: BTreeMap<&str, (Vec<&EthogramInterval>, Vec<&EthogramInterval>)> = BTreeMap::new();
    for p in pred {
        by_cat.entry(&p.label).or_default().0.push(p);
    }
    for g in gt {
        by_cat.entry(&g.label).or_default().1.push(g);
    }
    let mut categories = Vec::new();
    for (cat, (ps, gs)) in by_cat {
        check_disjoint(&ps)?;
        check_disjoint(&gs)?;
        let mut candidates = Vec::new();
        for (gi, g) in gs.iter().enumerate() {
            for (pi, p) in ps.iter().enumerate() {
                let iou = temporal_iou(p, g);
                if iou > 0.0 && iou >= iou_min {
                    candidates.push((iou, gi, pi));
                }
            }
        }
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut g_used = vec![false; gs.len()];
        let mut p_used = vec![false; ps.len()];
        let mut matches = Vec::new();
        for (iou, gi, pi) in candidates {
            if g_used[gi] || p_used[pi] {
                continue;
            }
            g_used[gi] = true;
            p_used[pi] = true;
            matches.push(MatchedPair {
                pred: ps[pi].clone(),
                gt: gs[gi].clone(),
                iou,
                latency_s: onset_latency(ps[pi].start_s, gs[gi].start_s),
            });
        }
        matches.sort_by(|a, b| a.gt.start_s.total_cmp(&b.gt.start_s));
        let tp = matches.len();
        categories.push(CategoryMatch {
            category: cat.to_string(),
            tp,
            fp: ps.len() - tp,
            fn_: gs.len() - tp,
            matches,
        });
    }
    Ok(EventMatchReport { iou_min, categories })
}
