// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::{DetectedInstance, FrameDetection};
use crate::annotations::{Dataset, Polygon};
use crate::error::{Error, Result};
use crate::mask::Mask;
use crate::patterns::{mask_file_name, parse_indexed_name};

/// Source of per-frame animal masks. Implementations are shared across
/// workers, so they must be immutable or internally synchronized.
pub trait DetectorAdapter: Send + Sync {
    fn detect(&self, frame: &RgbImage, frame_index: usize) -> Result<FrameDetection>;
}

enum Truth {
    Polygons { width: u32, height: u32, polygons: Vec<Polygon> },
    Masks(Vec<Mask>),
}

/// Replays known instances as detections with confidence 1.0.
pub struct GroundTruthPlayback {
    frames: BTreeMap<usize, Truth>,
}

impl GroundTruthPlayback {
    /// Frame numbers come from `frame_%06d.png` image names; images named
    /// otherwise are numbered by their position in the document.
    pub fn from_dataset(dataset: &Dataset) -> Self {
        let frames = dataset
            .images()
            .iter()
            .enumerate()
            .map(|(pos, img)| {
                let polygons = dataset.annotations_for(img.id).map(|a| a.polygon.clone()).collect();
                (
                    frame_index_of(&img.path).unwrap_or(pos),
                    Truth::Polygons { width: img.width, height: img.height, polygons },
                )
            })
            .collect();
        GroundTruthPlayback { frames }
    }

    /// In-memory playback, `masks[i]` holding the instances of frame `i`.
    pub fn from_masks(masks: Vec<Vec<Mask>>) -> Self {
        GroundTruthPlayback { frames: masks.into_iter().map(Truth::Masks).enumerate().collect() }
    }

    /// Ground-truth masks for a frame of the given size.
    pub fn masks(&self, frame_index: usize, width: u32, height: u32) -> Result<Vec<Mask>> {
        match self.frames.get(&frame_index) {
            None => Ok(Vec::new()),
            Some(Truth::Polygons { width: w, height: h, polygons }) => {
                if (*w, *h) != (width, height) {
                    return Err(Error::DimensionMismatch { expected: (width, height), found: (*w, *h) });
                }
                polygons.iter().map(|p| p.rasterize(width, height)).collect()
            }
            Some(Truth::Masks(masks)) => {
                for m in masks {
                    if m.dims() != (width, height) {
                        return Err(Error::DimensionMismatch { expected: (width, height), found: m.dims() });
                    }
                }
                Ok(masks.clone())
            }
        }
    }
}

/// Frame number encoded in an image path, if it follows `frame_%06d.png`.
pub fn frame_index_of(path: &str) -> Option<usize> {
    let name = path.rsplit(['/', '\\']).next()?;
    parse_indexed_name(name, "frame")
}

impl DetectorAdapter for GroundTruthPlayback {
    fn detect(&self, frame: &RgbImage, frame_index: usize) -> Result<FrameDetection> {
        let masks = self.masks(frame_index, frame.width(), frame.height())?;
        Ok(FrameDetection {
            frame_index,
            instances: masks.into_iter().map(|mask| DetectedInstance { mask, confidence: 1.0 }).collect(),
        })
    }
}

/// One line of the sidecar `index.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskIndexEntry {
    pub frame: usize,
    pub level: u8,
    pub instance: u32,
    #[serde(default = "one")]
    pub confidence: f64,
}

fn one() -> f64 {
    1.0
}

/// Reads masks written by an external detector: one `mask_%06d.png` per
/// frame, 8-bit gray, 0 = background, 255 = animal. Frames with several
/// instances use gray levels 1..=254 listed in `index.jsonl`.
pub struct ExternalMaskImport {
    dir: PathBuf,
    index: BTreeMap<usize, Vec<MaskIndexEntry>>,
}

pub const MASK_INDEX_FILE: &str = "index.jsonl";

impl ExternalMaskImport {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        if !dir.is_dir() {
            return Err(Error::io(&dir, std::io::Error::new(std::io::ErrorKind::NotFound, "mask directory not found")));
        }
        let mut index: BTreeMap<usize, Vec<MaskIndexEntry>> = BTreeMap::new();
        let index_path = dir.join(MASK_INDEX_FILE);
        if index_path.exists() {
            let text = fs::read_to_string(&index_path).map_err(|e| Error::io(&index_path, e))?;
            for (n, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let name = index_path.display().to_string();
                let entry: MaskIndexEntry =
                    serde_json::from_str(line).map_err(|e| Error::format(&name, n + 1, e.to_string()))?;
                if !(1..=254).contains(&entry.level) {
                    return Err(Error::format(&name, n + 1, format!("gray level {} outside 1..=254", entry.level)));
                }
                if !(0.0..=1.0).contains(&entry.confidence) {
                    return Err(Error::format(&name, n + 1, format!("confidence {} outside [0, 1]", entry.confidence)));
                }
                index.entry(entry.frame).or_default().push(entry);
            }
        }
        for entries in index.values_mut() {
            entries.sort_by_key(|e| e.instance);
            let levels: BTreeSet<u8> = entries.iter().map(|e| e.level).collect();
            if levels.len() != entries.len() {
                return Err(Error::format(
                    index_path.display().to_string(),
                    0,
                    format!("frame {} reuses a gray level", entries[0].frame),
                ));
            }
        }
        Ok(ExternalMaskImport { dir, index })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn load(&self, frame_index: usize, width: u32, height: u32) -> Result<Vec<DetectedInstance>> {
        let path = self.dir.join(mask_file_name(frame_index));
        if !path.exists() {
            return Err(Error::MissingMask { frame: frame_index, path });
        }
        let gray = image::open(&path).map_err(|e| Error::image(&path, e))?.to_luma8();
        if gray.dimensions() != (width, height) {
            return Err(Error::DimensionMismatch { expected: (width, height), found: gray.dimensions() });
        }
        let present: BTreeSet<u8> = gray.as_raw().iter().copied().filter(|&v| v != 0).collect();
        match self.index.get(&frame_index) {
            Some(entries) => {
                let known: BTreeSet<u8> = entries.iter().map(|e| e.level).collect();
                if let Some(stray) = present.difference(&known).next() {
                    return Err(Error::InvalidArgument(format!(
                        "{}: gray level {stray} is not listed in {MASK_INDEX_FILE}",
                        path.display()
                    )));
                }
                entries
                    .iter()
                    .map(|e| {
                        Ok(DetectedInstance { mask: Mask::from_gray(&gray, |v| v == e.level)?, confidence: e.confidence })
                    })
                    .collect()
            }
            None => {
                if let Some(stray) = present.iter().find(|&&v| v != 255) {
                    return Err(Error::InvalidArgument(format!(
                        "{}: gray level {stray} needs an {MASK_INDEX_FILE} entry",
                        path.display()
                    )));
                }
                if present.is_empty() {
                    Ok(Vec::new())
                } else {
                    Ok(vec![DetectedInstance { mask: Mask::from_gray(&gray, |v| v == 255)?, confidence: 1.0 }])
                }
            }
        }
    }
}

impl DetectorAdapter for ExternalMaskImport {
    fn detect(&self, frame: &RgbImage, frame_index: usize) -> Result<FrameDetection> {
        let instances = self.load(frame_index, frame.width(), frame.height())?;
        Ok(FrameDetection { frame_index, instances })
    }
}

/// Writes `masks` as one sidecar frame. A single instance is written with
/// level 255; several get levels 1, 2, ... and index lines appended to
/// `index`.
pub fn write_sidecar_mask(
    dir: &Path,
    frame_index: usize,
    masks: &[Mask],
    width: u32,
    height: u32,
    index: &mut Vec<MaskIndexEntry>,
) -> Result<()> {
    if masks.len() > 254 {
        return Err(Error::InvalidArgument(format!("{} instances exceed 254 gray levels", masks.len())));
    }
    let mut gray = image::GrayImage::new(width, height);
    for (k, m) in masks.iter().enumerate() {
        if m.dims() != (width, height) {
            return Err(Error::DimensionMismatch { expected: (width, height), found: m.dims() });
        }
        let level = if masks.len() == 1 { 255 } else { k as u8 + 1 };
        for (x, y) in m.iter_set() {
            gray.put_pixel(x, y, image::Luma([level]));
        }
        if masks.len() > 1 {
            index.push(MaskIndexEntry { frame: frame_index, level, instance: k as u32, confidence: 1.0 });
        }
    }
    let path = dir.join(mask_file_name(frame_index));
    gray.save(&path).map_err(|e| Error::image(&path, e))
}

pub fn write_mask_index(dir: &Path, entries: &[MaskIndexEntry]) -> Result<()> {
    let path = dir.join(MASK_INDEX_FILE);
    let mut text = String::new();
    for e in entries {
        text.push_str(&serde_json::to_string(e).expect("index entry serializes"));
        text.push('\n');
    }
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotations::{Category, ImageRecord, InstanceAnnotation, Point};

    fn square(w: u32, h: u32, x0: u32, y0: u32, side: u32) -> Mask {
        let mut m = Mask::new(w, h).unwrap();
        for y in y0..y0 + side {
            for x in x0..x0 + side {
                m.set(x, y, true);
            }
        }
        m
    }

    #[test]
    fn playback_returns_annotated_instances() {
        let rect = |x: f64| {
            Polygon::new(vec![Point::new(x, 2.0), Point::new(x + 4.0, 2.0), Point::new(x + 4.0, 6.0), Point::new(x, 6.0)])
                .unwrap()
        };
        let d = Dataset::new(
            vec![ImageRecord { id: 9, path: "v/frame_000003.png".into(), width: 20, height: 10 }],
            vec![
                InstanceAnnotation { id: 1, image_id: 9, category: "m".into(), polygon: rect(1.0) },
                InstanceAnnotation { id: 2, image_id: 9, category: "m".into(), polygon: rect(10.0) },
            ],
            vec![Category { id: 1, name: "m".into() }],
        )
        .unwrap();
        let p = GroundTruthPlayback::from_dataset(&d);
        let det = p.detect(&RgbImage::new(20, 10), 3).unwrap();
        assert_eq!(det.instances.len(), 2);
        assert!(det.instances.iter().all(|i| i.confidence == 1.0 && i.mask.count() == 16));
        assert!(p.detect(&RgbImage::new(20, 10), 4).unwrap().instances.is_empty());
        assert!(matches!(p.detect(&RgbImage::new(21, 10), 3), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn external_import_single_and_missing() {
        let dir = tempfile::tempdir().unwrap();
        let m = square(16, 12, 2, 2, 5);
        let mut idx = Vec::new();
        write_sidecar_mask(dir.path(), 0, &[m.clone()], 16, 12, &mut idx).unwrap();
        assert!(idx.is_empty());
        let imp = ExternalMaskImport::open(dir.path()).unwrap();
        let det = imp.detect(&RgbImage::new(16, 12), 0).unwrap();
        assert_eq!(det.instances.len(), 1);
        assert_eq!(det.instances[0].mask, m);
        let err = imp.detect(&RgbImage::new(16, 12), 7).unwrap_err();
        assert!(matches!(err, Error::MissingMask { frame: 7, .. }));
        assert!(err.to_string().contains("frame 7"));
    }

    #[test]
    fn external_import_dimension_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let mut idx = Vec::new();
        write_sidecar_mask(dir.path(), 0, &[square(640, 480, 0, 0, 3)], 640, 480, &mut idx).unwrap();
        let imp = ExternalMaskImport::open(dir.path()).unwrap();
        assert!(matches!(imp.detect(&RgbImage::new(1920, 1080), 0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn external_import_multi_instance() {
        let dir = tempfile::tempdir().unwrap();
        let a = square(16, 12, 0, 0, 3);
        let b = square(16, 12, 8, 4, 4);
        let mut idx = Vec::new();
        write_sidecar_mask(dir.path(), 2, &[a.clone(), b.clone()], 16, 12, &mut idx).unwrap();
        write_mask_index(dir.path(), &idx).unwrap();
        let imp = ExternalMaskImport::open(dir.path()).unwrap();
        let det = imp.detect(&RgbImage::new(16, 12), 2).unwrap();
        assert_eq!(det.instances.iter().map(|i| &i.mask).collect::<Vec<_>>(), vec![&a, &b]);

        // an unindexed level is an error
        let mut gray = image::GrayImage::new(4, 4);
        gray.put_pixel(1, 1, image::Luma([7]));
        gray.save(dir.path().join(mask_file_name(3))).unwrap();
        assert!(imp.detect(&RgbImage::new(4, 4), 3).is_err());
    }
}
