// SPDX-License-Identifier: Apache-2.0

//! Annotation-aware augmentation of the detector corpus.
//!
//! Each augmented copy applies, in this order: an optional 90° turn, a
//! crop/zoom, an arbitrary rotation, grayscale, Gaussian blur and pixel
//! noise. All parameters come from a random stream seeded by
//! `(seed, source image id, copy index)`, so output does not depend on
//! scheduling.

mod geometric;
mod photometric;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use image::RgbImage;
use rand::Rng;

pub use geometric::{
    crop_zoom, random_crop_zoom, rot90, rotate_arbitrary, CropParams, Rot90, DEFAULT_MIN_AREA_RETAINED,
    MAX_ROTATION_DEG, MIN_CROP_RETAIN,
};
pub use photometric::{
    gaussian_blur, grayscale, pixel_noise, GRAYSCALE_PROB, MAX_BLUR_PX, MAX_BLUR_SIGMA, MAX_NOISE_FRACTION,
};

use crate::annotations::{write_annotation_file, Dataset, ImageRecord, InstanceAnnotation};
use crate::error::{Error, Result};
use crate::parallel::Pool;
use crate::rng::{item_rng, seeded_rng};

/// An image with the annotations that belong to it.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub pixels: RgbImage,
    pub annotations: Vec<InstanceAnnotation>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Transform {
    Rot90,
    Crop,
    Rotate,
    Grayscale,
    Blur,
    Noise,
}

impl Transform {
    pub const ALL: [Transform; 6] =
        [Transform::Rot90, Transform::Crop, Transform::Rotate, Transform::Grayscale, Transform::Blur, Transform::Noise];

    pub fn name(self) -> &'static str {
        match self {
            Transform::Rot90 => "rot90",
            Transform::Crop => "crop",
            Transform::Rotate => "rotate",
            Transform::Grayscale => "grayscale",
            Transform::Blur => "blur",
            Transform::Noise => "noise",
        }
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Transform::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown transform `{s}`")))
    }
}

/// Sampling bounds. Each may be tightened but never loosened past the
/// corpus maxima (the `MAX_*`/`MIN_*` constants).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AugmentBounds {
    pub min_crop_retain: f64,
    pub max_rotation_deg: f64,
    pub grayscale_prob: f64,
    pub max_blur_sigma: f64,
    pub max_noise_fraction: f64,
}

impl Default for AugmentBounds {
    fn default() -> Self {
        AugmentBounds {
            min_crop_retain: MIN_CROP_RETAIN,
            max_rotation_deg: MAX_ROTATION_DEG,
            grayscale_prob: GRAYSCALE_PROB,
            max_blur_sigma: MAX_BLUR_SIGMA,
            max_noise_fraction: MAX_NOISE_FRACTION,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AugmentConfig {
    /// Augmented copies per source image.
    pub multiplier: u32,
    pub seed: u64,
    pub disabled: Vec<Transform>,
    pub bounds: AugmentBounds,
    pub min_area_retained: f64,
}

impl AugmentConfig {
    pub fn new(multiplier: u32, seed: u64) -> Self {
        AugmentConfig {
            multiplier,
            seed,
            disabled: Vec::new(),
            bounds: AugmentBounds::default(),
            min_area_retained: DEFAULT_MIN_AREA_RETAINED,
        }
    }

    pub fn enabled(&self, t: Transform) -> bool {
        !self.disabled.contains(&t)
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.bounds;
        let check = |what: &'static str, ok: bool, value: f64, max: f64| {
            if ok {
                Ok(())
            } else {
                Err(Error::BoundExceeded { what, value, max })
            }
        };
        check("crop retain", (MIN_CROP_RETAIN..=1.0).contains(&b.min_crop_retain), b.min_crop_retain, MIN_CROP_RETAIN)?;
        check("rotation", (0.0..=MAX_ROTATION_DEG).contains(&b.max_rotation_deg), b.max_rotation_deg, MAX_ROTATION_DEG)?;
        check("grayscale probability", (0.0..=GRAYSCALE_PROB).contains(&b.grayscale_prob), b.grayscale_prob, GRAYSCALE_PROB)?;
        check("blur sigma", (0.0..=MAX_BLUR_SIGMA).contains(&b.max_blur_sigma), b.max_blur_sigma, MAX_BLUR_SIGMA)?;
        check("noise fraction", (0.0..=MAX_NOISE_FRACTION).contains(&b.max_noise_fraction), b.max_noise_fraction, MAX_NOISE_FRACTION)?;
        check("area retained", (0.0..=1.0).contains(&self.min_area_retained), self.min_area_retained, 1.0)?;
        Ok(())
    }
}

/// Everything one augmented copy will do, drawn up front.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformParams {
    pub rot90: Option<Rot90>,
    pub crop: Option<CropParams>,
    pub rotation_deg: Option<f64>,
    pub grayscale: bool,
    pub blur_sigma: Option<f64>,
    pub noise_fraction: Option<f64>,
    pub noise_seed: u64,
}

impl TransformParams {
    /// Draws every parameter in a fixed order whether or not its transform is
    /// enabled, so disabling one transform leaves the others' draws intact.
    pub fn sample(cfg: &AugmentConfig, rng: &mut impl Rng, width: u32, height: u32) -> Self {
        let b = &cfg.bounds;
        let turn = rng.gen_bool(0.5);
        let variant = Rot90::ALL[rng.gen_range(0..3)];
        let rot90 = (cfg.enabled(Transform::Rot90) && turn).then_some(variant);
        let (w, h) = rot90.map_or((width, height), |v| v.output_dims(width, height));
        let crop = CropParams::sample(rng, b.min_crop_retain, w, h);
        let angle = rng.gen_range(-b.max_rotation_deg..=b.max_rotation_deg);
        let gray = rng.gen::<f64>() < b.grayscale_prob;
        let sigma = rng.gen_range(0.0..=b.max_blur_sigma);
        let noise = rng.gen_range(0.0..=b.max_noise_fraction);
        let noise_seed = rng.gen();
        TransformParams {
            rot90,
            crop: cfg.enabled(Transform::Crop).then_some(crop),
            rotation_deg: cfg.enabled(Transform::Rotate).then_some(angle),
            grayscale: cfg.enabled(Transform::Grayscale) && gray,
            blur_sigma: cfg.enabled(Transform::Blur).then_some(sigma),
            noise_fraction: cfg.enabled(Transform::Noise).then_some(noise),
            noise_seed,
        }
    }

    pub fn apply(&self, sample: &Sample, cfg: &AugmentConfig) -> Result<(Sample, Vec<String>)> {
        let mut log = Vec::new();
        let mut s = sample.clone();
        if let Some(v) = self.rot90 {
            s = rot90(&s, v);
            log.push(format!("rot90:{}", v.name()));
        }
        if let Some(c) = self.crop {
            s = crop_zoom(&s, c, cfg.min_area_retained);
            log.push(format!("crop:retain={:.6}x{:.6}@{:.3},{:.3}", c.retain_x, c.retain_y, c.x0, c.y0));
        }
        if let Some(a) = self.rotation_deg {
            s = geometric::rotate_bounded(&s, a, cfg.bounds.max_rotation_deg, cfg.min_area_retained)?;
            log.push(format!("rotate:{a:.6}"));
        }
        if self.grayscale {
            s.pixels = grayscale(&s.pixels);
            log.push("grayscale".into());
        }
        if let Some(sigma) = self.blur_sigma {
            s.pixels = gaussian_blur(&s.pixels, sigma)?;
            log.push(format!("blur:sigma={sigma:.6}"));
        }
        if let Some(f) = self.noise_fraction {
            let mut rng = seeded_rng(self.noise_seed);
            s.pixels = photometric::noise_bounded(&s.pixels, f, cfg.bounds.max_noise_fraction, &mut rng)?;
            log.push(format!("noise:fraction={f:.6}"));
        }
        Ok((s, log))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub source_image_id: u64,
    /// 1-based copy number.
    pub copy_index: u32,
    pub seed: u64,
    pub transforms: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedImage {
    pub record: ImageRecord,
    pub pixels: RgbImage,
    pub provenance: Provenance,
}

/// Source images plus every augmented copy, as one dataset.
#[derive(Clone, Debug)]
pub struct AugmentedDataset {
    pub dataset: Dataset,
    pub augmented: Vec<AugmentedImage>,
}

/// File name of copy `k` of `source`: `<dir>/<stem>_aug<k>.png`.
pub fn augmented_path(source: &str, copy: u32) -> String {
    let (dir, file) = match source.rfind('/') {
        Some(i) => (&source[..=i], &source[i + 1..]),
        None => ("", source),
    };
    let stem = file.rfind('.').map_or(file, |i| &file[..i]);
    format!("{dir}{stem}_aug{copy}.png")
}

/// Augments one source image into `cfg.multiplier` copies.
pub fn augment_image(
    record: &ImageRecord,
    source: &Sample,
    cfg: &AugmentConfig,
) -> Result<Vec<(Sample, Provenance)>> {
    (1..=cfg.multiplier)
        .map(|copy| {
            let seed = crate::rng::derive_seed(cfg.seed, &[record.id, copy as u64]);
            let mut rng = item_rng(cfg.seed, &[record.id, copy as u64]);
            let params = TransformParams::sample(cfg, &mut rng, record.width, record.height);
            let (sample, transforms) = params.apply(source, cfg).map_err(|e| Error::Augment {
                image_id: record.id,
                copy,
                source: Box::new(e),
            })?;
            Ok((sample, Provenance { source_image_id: record.id, copy_index: copy, seed, transforms }))
        })
        .collect()
}

/// Augments every image of `dataset`. `load` supplies source pixels.
pub fn augment_dataset<L>(dataset: &Dataset, load: L, cfg: &AugmentConfig, pool: &Pool) -> Result<AugmentedDataset>
where
    L: Fn(&ImageRecord) -> Result<RgbImage> + Sync,
{
    cfg.validate()?;
    let per_image = pool
        .map(dataset.images(), |_, record| {
            let pixels = load(record)?;
            if pixels.dimensions() != (record.width, record.height) {
                return Err(Error::DimensionMismatch {
                    expected: (record.width, record.height),
                    found: pixels.dimensions(),
                });
            }
            let annotations = dataset.annotations_for(record.id).cloned().collect();
            augment_image(record, &Sample { pixels, annotations }, cfg)
        })
        .map_err(|e| match e {
            Error::Job { source, .. } if matches!(*source, Error::Augment { .. }) => *source,
            other => other,
        })?;

    let mut next_image = dataset.images().iter().map(|i| i.id).max().map_or(1, |m| m + 1);
    let mut next_ann = dataset.annotations().iter().map(|a| a.id).max().map_or(1, |m| m + 1);
    let mut images = dataset.images().to_vec();
    let mut annotations = dataset.annotations().to_vec();
    let mut augmented = Vec::new();
    for (record, copies) in dataset.images().iter().zip(per_image) {
        for (sample, provenance) in copies {
            let new = ImageRecord {
                id: next_image,
                path: augmented_path(&record.path, provenance.copy_index),
                width: sample.pixels.width(),
                height: sample.pixels.height(),
            };
            next_image += 1;
            for a in sample.annotations {
                annotations.push(InstanceAnnotation { id: next_ann, image_id: new.id, ..a });
                next_ann += 1;
            }
            images.push(new.clone());
            augmented.push(AugmentedImage { record: new, pixels: sample.pixels, provenance });
        }
    }
    let dataset = Dataset::new(images, annotations, dataset.categories().to_vec())?;
    Ok(AugmentedDataset { dataset, augmented })
}

/// Reads an image file (PNG or JPEG) as RGB.
pub fn load_rgb(path: &Path) -> Result<RgbImage> {
    Ok(image::open(path).map_err(|e| Error::image(path, e))?.to_rgb8())
}

impl AugmentedDataset {
    /// Writes the merged corpus under `out_dir`: original images copied from
    /// `source_dir` byte for byte, augmented copies as PNG at their record
    /// paths, the merged annotation document as `doc_name`, and
    /// `provenance.csv` (`image_id,source_image_id,copy,seed,transforms`).
    pub fn write(&self, source_dir: &Path, out_dir: &Path, doc_name: &str, pool: &Pool) -> Result<()> {
        let augmented_ids: std::collections::BTreeSet<u64> = self.augmented.iter().map(|a| a.record.id).collect();
        let originals: Vec<&ImageRecord> =
            self.dataset.images().iter().filter(|r| !augmented_ids.contains(&r.id)).collect();
        let ensure_parent = |p: &Path| -> Result<()> {
            match p.parent() {
                Some(d) => fs::create_dir_all(d).map_err(|e| Error::io(d, e)),
                None => Ok(()),
            }
        };
        pool.map(&originals, |_, r| {
            let (from, to) = (source_dir.join(&r.path), out_dir.join(&r.path));
            ensure_parent(&to)?;
            fs::copy(&from, &to).map(|_| ()).map_err(|e| Error::io(&from, e))
        })?;
        pool.map(&self.augmented, |_, a| {
            let to = out_dir.join(&a.record.path);
            ensure_parent(&to)?;
            a.pixels.save_with_format(&to, image::ImageFormat::Png).map_err(|e| Error::image(&to, e))
        })?;
        write_annotation_file(&out_dir.join(doc_name), &self.dataset)?;
        let path = out_dir.join("provenance.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["image_id", "source_image_id", "copy", "seed", "transforms"])?;
        for a in &self.augmented {
            let p = &a.provenance;
            w.write_record([
                a.record.id.to_string(),
                p.source_image_id.to_string(),
                p.copy_index.to_string(),
                p.seed.to_string(),
                p.transforms.join(";"),
            ])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))
    }
}
