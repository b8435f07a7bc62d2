// SPDX-License-Identifier: Apache-2.0

//! Per-frame detection and the detector-accuracy protocol.
//!
//! A frame is accurate when the predicted mask covers at least 95% of the
//! animal and no more than 5% of the prediction lies outside it. Both bounds
//! are inclusive.

mod adapters;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::index;

pub use adapters::{
    frame_index_of, write_mask_index, write_sidecar_mask, DetectorAdapter, ExternalMaskImport, GroundTruthPlayback,
    MaskIndexEntry, MASK_INDEX_FILE,
};

use crate::error::{Error, Result};
use crate::mask::Mask;
use crate::patterns::FrameSequence;
use crate::rng::seeded_rng;

pub const MIN_COVERAGE: f64 = 0.95;
pub const MAX_SPILL: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct DetectedInstance {
    pub mask: Mask,
    /// Carried through but not used by the accuracy protocol.
    pub confidence: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameDetection {
    pub frame_index: usize,
    pub instances: Vec<DetectedInstance>,
}

impl FrameDetection {
    /// Largest instance by pixel count; ties go to the earlier instance.
    pub fn largest(&self) -> Option<&Mask> {
        self.instances
            .iter()
            .map(|i| &i.mask)
            .enumerate()
            .max_by(|(ia, a), (ib, b)| a.count().cmp(&b.count()).then(ib.cmp(ia)))
            .map(|(_, m)| m)
    }
}

/// Runs `adapter` on one frame.
pub fn detect(adapter: &dyn DetectorAdapter, frame: &image::RgbImage, frame_index: usize) -> Result<FrameDetection> {
    let det = adapter.detect(frame, frame_index)?;
    for inst in &det.instances {
        if inst.mask.dims() != frame.dimensions() {
            return Err(Error::DimensionMismatch { expected: frame.dimensions(), found: inst.mask.dims() });
        }
        if !(0.0..=1.0).contains(&inst.confidence) {
            return Err(Error::InvalidArgument(format!("confidence {} outside [0, 1]", inst.confidence)));
        }
    }
    Ok(det)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coverage {
    /// Share of the animal covered by the prediction.
    pub coverage: f64,
    /// Share of the prediction lying outside the animal.
    pub spill: f64,
}

/// `coverage = |pred ∩ gt| / |gt|`, `spill = |pred \ gt| / |pred|` (0 for an
/// empty prediction).
pub fn coverage_metrics(pred: &Mask, gt: &Mask) -> Result<Coverage> {
    let inter = pred.intersection_count(gt)?;
    let gt_n = gt.count();
    if gt_n == 0 {
        return Err(Error::EmptyGroundTruth);
    }
    let pred_n = pred.count();
    let spill = if pred_n == 0 { 0.0 } else { (pred_n - inter) as f64 / pred_n as f64 };
    Ok(Coverage { coverage: inter as f64 / gt_n as f64, spill })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Accurate,
    UnderDetection,
    OverDetection,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Accurate => "accurate",
            Verdict::UnderDetection => "under_detection",
            Verdict::OverDetection => "over_detection",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverageReport {
    pub coverage: f64,
    pub spill: f64,
    pub verdict: Verdict,
    pub is_under: bool,
    pub is_over: bool,
}

/// Applies the 95%/5% rule. A frame that is both under and over keeps both
/// flags and is reported as under-detection.
pub fn classify_detection(coverage: f64, spill: f64) -> CoverageReport {
    let is_under = coverage < MIN_COVERAGE;
    let is_over = spill > MAX_SPILL;
    let verdict = match (is_under, is_over) {
        (true, _) => Verdict::UnderDetection,
        (false, true) => Verdict::OverDetection,
        (false, false) => Verdict::Accurate,
    };
    CoverageReport { coverage, spill, verdict, is_under, is_over }
}

/// Scores a frame with any number of predicted and ground-truth instances.
///
/// Pairs are matched one-to-one, greedily by largest intersection. Covered
/// area is summed over matched pairs; every predicted pixel outside its
/// matched animal, and every pixel of an unmatched prediction, is spill.
pub fn evaluate_frame(pred: &[Mask], gt: &[Mask]) -> Result<CoverageReport> {
    let gt_total: usize = gt.iter().map(Mask::count).sum();
    if gt_total == 0 {
        return Err(Error::EmptyGroundTruth);
    }
    let mut pairs = Vec::new();
    for (gi, g) in gt.iter().enumerate() {
        for (pi, p) in pred.iter().enumerate() {
            let inter = p.intersection_count(g)?;
            if inter > 0 {
                pairs.push((inter, gi, pi));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut gt_used = vec![false; gt.len()];
    let mut pred_used = vec![false; pred.len()];
    let mut covered = 0usize;
    for (inter, gi, pi) in pairs {
        if gt_used[gi] || pred_used[pi] {
            continue;
        }
        gt_used[gi] = true;
        pred_used[pi] = true;
        covered += inter;
    }
    let pred_total: usize = pred.iter().map(Mask::count).sum();
    let spill_px = pred_total - covered;
    let spill = if pred_total == 0 { 0.0 } else { spill_px as f64 / pred_total as f64 };
    Ok(classify_detection(covered as f64 / gt_total as f64, spill))
}

#[derive(Clone, Debug, PartialEq)]
pub struct VideoAccuracyReport {
    pub video_id: String,
    pub n_frames_evaluated: usize,
    pub n_accurate: usize,
    pub n_under: usize,
    pub n_over: usize,
    pub accuracy: f64,
}

pub fn video_accuracy(video_id: &str, reports: &[CoverageReport]) -> Result<VideoAccuracyReport> {
    if reports.is_empty() {
        return Err(Error::InvalidArgument(format!("video `{video_id}` has no evaluated frames")));
    }
    let count = |v: Verdict| reports.iter().filter(|r| r.verdict == v).count();
    let n_accurate = count(Verdict::Accurate);
    Ok(VideoAccuracyReport {
        video_id: video_id.to_string(),
        n_frames_evaluated: reports.len(),
        n_accurate,
        n_under: count(Verdict::UnderDetection),
        n_over: count(Verdict::OverDetection),
        accuracy: n_accurate as f64 / reports.len() as f64,
    })
}

/// Mean and population standard deviation of per-video accuracy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AccuracySummary {
    pub n_videos: usize,
    pub mean: f64,
    pub sd: f64,
}

pub fn summarize_videos(videos: &[VideoAccuracyReport]) -> Result<AccuracySummary> {
    if videos.is_empty() {
        return Err(Error::InvalidArgument("no videos to summarize".into()));
    }
    let n = videos.len() as f64;
    let mean = videos.iter().map(|v| v.accuracy).sum::<f64>() / n;
    let var = videos.iter().map(|v| (v.accuracy - mean).powi(2)).sum::<f64>() / n;
    Ok(AccuracySummary { n_videos: videos.len(), mean, sd: var.sqrt() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReviewFrame {
    pub index: usize,
    pub path: PathBuf,
}

/// Frames picked for manual review.
#[derive(Clone, Debug, PartialEq)]
pub struct ReviewManifest {
    pub video_id: String,
    pub seed: u64,
    pub frames: Vec<ReviewFrame>,
}

/// Draws `n` distinct frames uniformly without replacement; sorted by index.
pub fn sample_review_frames(video: &FrameSequence, n: usize, seed: u64) -> Result<ReviewManifest> {
    if n > video.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot sample {n} frames from a {}-frame video",
            video.len()
        )));
    }
    let mut picked = index::sample(&mut seeded_rng(seed), video.len(), n).into_vec();
    picked.sort_unstable();
    Ok(ReviewManifest {
        video_id: video.video_id.clone(),
        seed,
        frames: picked.into_iter().map(|i| ReviewFrame { index: i, path: video.frames[i].clone() }).collect(),
    })
}

impl ReviewManifest {
    /// CSV with header `frame,path`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["frame", "path"])?;
        for f in &self.frames {
            w.write_record([f.index.to_string(), f.path.display().to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Per-frame report CSV: `frame,coverage,spill,verdict`.
pub fn write_coverage_csv(out: impl Write, rows: &[(usize, CoverageReport)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["frame", "coverage", "spill", "verdict"])?;
    for (frame, r) in rows {
        w.write_record([
            frame.to_string(),
            format!("{:.6}", r.coverage),
            format!("{:.6}", r.spill),
            r.verdict.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<coverage report>", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_mask(rng: &mut impl Rng, density: f64) -> Mask {
        Mask::from_bits(32, 32, (0..32 * 32).map(|_| rng.gen_bool(density)).collect()).unwrap()
    }

    fn oracle(pred: &Mask, gt: &Mask) -> (f64, f64) {
        let (mut both, mut p_only, mut g) = (0u32, 0u32, 0u32);
        for y in 0..32 {
            for x in 0..32 {
                let (p, t) = (pred.get(x, y), gt.get(x, y));
                if p && t {
                    both += 1;
                }
                if p && !t {
                    p_only += 1;
                }
                if t {
                    g += 1;
                }
            }
        }
        let p = both + p_only;
        (both as f64 / g as f64, if p == 0 { 0.0 } else { p_only as f64 / p as f64 })
    }

    #[test]
    fn identity_and_empty_prediction() {
        let mut rng = seeded_rng(1);
        let gt = random_mask(&mut rng, 0.3);
        assert_eq!(coverage_metrics(&gt, &gt).unwrap(), Coverage { coverage: 1.0, spill: 0.0 });
        let empty = Mask::new(32, 32).unwrap();
        assert_eq!(coverage_metrics(&empty, &gt).unwrap(), Coverage { coverage: 0.0, spill: 0.0 });
        assert!(matches!(coverage_metrics(&gt, &empty), Err(Error::EmptyGroundTruth)));
        assert!(matches!(
            coverage_metrics(&gt, &Mask::new(8, 8).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn matches_pixel_loop_oracle() {
        let mut rng = seeded_rng(2);
        for _ in 0..200 {
            let density = rng.gen_range(0.05..0.9);
            let gt = random_mask(&mut rng, density);
            if gt.is_empty() {
                continue;
            }
            let density = rng.gen_range(0.0..0.9);
            let pred = random_mask(&mut rng, density);
            let c = coverage_metrics(&pred, &gt).unwrap();
            assert_eq!((c.coverage, c.spill), oracle(&pred, &gt));
        }
    }

    #[test]
    fn adding_interior_pixels_is_monotone() {
        let mut rng = seeded_rng(3);
        for _ in 0..50 {
            let gt = random_mask(&mut rng, 0.5);
            let mut pred = random_mask(&mut rng, 0.3);
            let mut last = coverage_metrics(&pred, &gt).unwrap();
            for (x, y) in gt.iter_set().collect::<Vec<_>>().into_iter().take(40) {
                pred.set(x, y, true);
                let now = coverage_metrics(&pred, &gt).unwrap();
                assert!(now.coverage >= last.coverage && now.spill <= last.spill);
                last = now;
            }
        }
    }

    #[test]
    fn verdict_table() {
        assert_eq!(classify_detection(1.0, 0.0).verdict, Verdict::Accurate);
        assert_eq!(classify_detection(0.95, 0.05).verdict, Verdict::Accurate);
        assert_eq!(classify_detection(0.55, 0.01).verdict, Verdict::UnderDetection);
        assert_eq!(classify_detection(0.99, 0.2).verdict, Verdict::OverDetection);
        let both = classify_detection(0.5, 0.5);
        assert_eq!(both.verdict, Verdict::UnderDetection);
        assert!(both.is_under && both.is_over);
    }

    #[test]
    fn frame_with_two_animals_and_a_stray_prediction() {
        let sq = |x0: u32| {
            let mut m = Mask::new(32, 32).unwrap();
            for y in 0..10 {
                for x in x0..x0 + 10 {
                    m.set(x, y, true);
                }
            }
            m
        };
        let gt = vec![sq(0), sq(20)];
        let r = evaluate_frame(&gt, &gt).unwrap();
        assert_eq!((r.coverage, r.spill), (1.0, 0.0));
        let mut stray = Mask::new(32, 32).unwrap();
        for x in 0..10 {
            stray.set(x, 20, true);
        }
        let r = evaluate_frame(&[gt[0].clone(), gt[1].clone(), stray], &gt).unwrap();
        assert_eq!(r.coverage, 1.0);
        assert!((r.spill - 10.0 / 210.0).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::Accurate);
        // one prediction cannot be matched to both animals
        let r = evaluate_frame(&[sq(0)], &gt).unwrap();
        assert_eq!(r.coverage, 0.5);
        assert!(matches!(evaluate_frame(&[], &[]), Err(Error::EmptyGroundTruth)));
    }

    #[test]
    fn single_instance_frame_matches_coverage_metrics() {
        let mut rng = seeded_rng(4);
        for _ in 0..50 {
            let gt = random_mask(&mut rng, 0.4);
            let pred = random_mask(&mut rng, 0.4);
            let direct = coverage_metrics(&pred, &gt).unwrap();
            let framed = evaluate_frame(&[pred], &[gt]).unwrap();
            assert_eq!((framed.coverage, framed.spill), (direct.coverage, direct.spill));
        }
    }

    #[test]
    fn video_accuracy_arithmetic() {
        let a = classify_detection(1.0, 0.0);
        let u = classify_detection(0.5, 0.0);
        let o = classify_detection(1.0, 0.5);
        let r = video_accuracy("v", &[a, a, u, o]).unwrap();
        assert_eq!(r.accuracy, 0.5);
        assert_eq!((r.n_accurate, r.n_under, r.n_over), (2, 1, 1));
        assert_eq!(video_accuracy("v", &[a; 5]).unwrap().accuracy, 1.0);
        assert!(video_accuracy("v", &[]).is_err());
    }

    #[test]
    fn population_sd() {
        let mk = |acc: f64| VideoAccuracyReport {
            video_id: String::new(),
            n_frames_evaluated: 1,
            n_accurate: 0,
            n_under: 0,
            n_over: 0,
            accuracy: acc,
        };
        let s = summarize_videos(&[mk(0.2), mk(0.4)]).unwrap();
        assert!((s.mean - 0.3).abs() < 1e-12 && (s.sd - 0.1).abs() < 1e-12);
    }

    #[test]
    fn review_sampling() {
        let frames = (0..1000).map(|i| PathBuf::from(format!("f{i}"))).collect();
        let seq = FrameSequence::new("v", 24.0, frames).unwrap();
        let m = sample_review_frames(&seq, 100, 5).unwrap();
        assert_eq!(m.frames.len(), 100);
        let mut idx: Vec<_> = m.frames.iter().map(|f| f.index).collect();
        idx.dedup();
        assert_eq!(idx.len(), 100);
        assert_eq!(m, sample_review_frames(&seq, 100, 5).unwrap());
        let all = sample_review_frames(&seq, 1000, 1).unwrap();
        assert!(all.frames.iter().enumerate().all(|(i, f)| f.index == i));
        assert!(sample_review_frames(&seq, 1001, 1).is_err());
    }
}
