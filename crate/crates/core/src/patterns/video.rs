// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// `frame_%06d.png`
pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:06}.png")
}

/// `mask_%06d.png`
pub fn mask_file_name(index: usize) -> String {
    format!("mask_{index:06}.png")
}

/// Parses `<prefix>_<digits>.png`, e.g. `frame_000012.png` → 12.
pub fn parse_indexed_name(file_name: &str, prefix: &str) -> Option<usize> {
    let rest = file_name.strip_prefix(prefix)?.strip_prefix('_')?;
    let digits = rest.strip_suffix(".png")?;
    if digits.len() < 6 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Ordered, gap-free frames of one video.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSequence {
    pub video_id: String,
    pub fps: f64,
    pub frames: Vec<PathBuf>,
}

impl FrameSequence {
    pub fn new(video_id: impl Into<String>, fps: f64, frames: Vec<PathBuf>) -> Result<Self> {
        if !(fps > 0.0) || !fps.is_finite() {
            return Err(Error::InvalidArgument(format!("fps must be positive, got {fps}")));
        }
        if frames.is_empty() {
            return Err(Error::InvalidArgument("frame sequence is empty".into()));
        }
        Ok(FrameSequence { video_id: video_id.into(), fps, frames })
    }

    /// Reads a frame directory: `frame_%06d.png` files numbered from 0
    /// without gaps, plus `video.meta` holding `fps=<float>`.
    pub fn load(dir: &Path) -> Result<Self> {
        let fps = read_video_meta(&dir.join("video.meta"))?;
        let mut indexed = Vec::new();
        for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let entry = entry.map_err(|e| Error::io(dir, e))?;
            let name = entry.file_name();
            if let Some(i) = name.to_str().and_then(|n| parse_indexed_name(n, "frame")) {
                indexed.push((i, entry.path()));
            }
        }
        indexed.sort();
        for (expected, (i, _)) in indexed.iter().enumerate() {
            if *i != expected {
                return Err(Error::InvalidArgument(format!(
                    "{}: frame sequence has a gap, expected frame {expected} but found {i}",
                    dir.display()
                )));
            }
        }
        let video_id = dir
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("video")
            .to_string();
        FrameSequence::new(video_id, fps, indexed.into_iter().map(|(_, p)| p).collect())
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

pub fn read_video_meta(path: &Path) -> Result<f64> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut fps = None;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::format(path.display().to_string(), n + 1, "expected key=value"));
        };
        if key.trim() == "fps" {
            let v: f64 = value.trim().parse().map_err(|_| {
                Error::format(path.display().to_string(), n + 1, format!("invalid fps `{}`", value.trim()))
            })?;
            fps = Some(v);
        }
    }
    fps.ok_or_else(|| Error::format(path.display().to_string(), 0, "missing fps"))
}

pub fn write_video_meta(path: &Path, fps: f64) -> Result<()> {
    fs::write(path, format!("fps={fps}\n")).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexed_names() {
        assert_eq!(parse_indexed_name("frame_000012.png", "frame"), Some(12));
        assert_eq!(parse_indexed_name(&mask_file_name(7), "mask"), Some(7));
        assert_eq!(parse_indexed_name("frame_12.png", "frame"), None);
        assert_eq!(parse_indexed_name("frame_000012.jpg", "frame"), None);
        assert_eq!(parse_indexed_name("mask_000012.png", "frame"), None);
    }

    #[test]
    fn load_directory() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..3 {
            fs::write(dir.path().join(frame_file_name(i)), b"").unwrap();
        }
        write_video_meta(&dir.path().join("video.meta"), 24.0).unwrap();
        let seq = FrameSequence::load(dir.path()).unwrap();
        assert_eq!(seq.len(), 3);
        assert_eq!(seq.fps, 24.0);
        fs::write(dir.path().join(frame_file_name(5)), b"").unwrap();
        assert!(FrameSequence::load(dir.path()).is_err());
    }

    #[test]
    fn meta_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("video.meta");
        fs::write(&p, "# comment\nfps = 29.97\nsource=cam1\n").unwrap();
        assert_eq!(read_video_meta(&p).unwrap(), 29.97);
        fs::write(&p, "fps=fast\n").unwrap();
        assert!(read_video_meta(&p).is_err());
        assert!(FrameSequence::new("v", 0.0, vec!["a".into()]).is_err());
    }
}
