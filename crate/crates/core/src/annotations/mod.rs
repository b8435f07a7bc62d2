// SPDX-License-Identifier: Apache-2.0

//! Instance-segmentation datasets: images, polygon annotations, and the
//! COCO-style document they are exchanged in.

mod coco;
mod polygon;

use std::collections::{BTreeMap, BTreeSet, HashSet};

pub use coco::{parse_annotation_document, read_annotation_file, serialize_annotation_document, write_annotation_file};
pub use polygon::{Point, Polygon};

use crate::error::{Error, Result};
use crate::mask::Mask;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageRecord {
    pub id: u64,
    /// Path relative to the annotation document's directory.
    pub path: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Category {
    pub id: u64,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceAnnotation {
    pub id: u64,
    pub image_id: u64,
    pub category: String,
    pub polygon: Polygon,
}

/// A validated collection of images and their instance annotations.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    images: Vec<ImageRecord>,
    annotations: Vec<InstanceAnnotation>,
    categories: Vec<Category>,
}

impl Dataset {
    pub fn new(
        images: Vec<ImageRecord>,
        annotations: Vec<InstanceAnnotation>,
        categories: Vec<Category>,
    ) -> Result<Self> {
        let mut image_dims = BTreeMap::new();
        for img in &images {
            if img.width == 0 || img.height == 0 {
                return Err(Error::InvalidDimensions {
                    image_id: img.id,
                    width: img.width,
                    height: img.height,
                });
            }
            if image_dims.insert(img.id, (img.width, img.height)).is_some() {
                return Err(Error::MalformedDocument(format!("duplicate image id {}", img.id)));
            }
        }
        let mut names = HashSet::new();
        let mut cat_ids = HashSet::new();
        for c in &categories {
            if !cat_ids.insert(c.id) || !names.insert(c.name.as_str()) {
                return Err(Error::MalformedDocument(format!(
                    "duplicate category {} `{}`",
                    c.id, c.name
                )));
            }
        }
        let mut ann_ids = HashSet::new();
        for a in &annotations {
            if !ann_ids.insert(a.id) {
                return Err(Error::MalformedDocument(format!("duplicate annotation id {}", a.id)));
            }
            let Some(&(w, h)) = image_dims.get(&a.image_id) else {
                return Err(Error::DanglingImageReference { annotation: a.id, image_id: a.image_id });
            };
            if !names.contains(a.category.as_str()) {
                return Err(Error::UnknownCategory(a.category.clone()));
            }
            if a.polygon.area() <= 0.0 {
                return Err(Error::DegeneratePolygon(format!("annotation {} has zero area", a.id)));
            }
            let (x0, y0, x1, y1) = a.polygon.bounds();
            if x0 < 0.0 || y0 < 0.0 || x1 > w as f64 || y1 > h as f64 {
                return Err(Error::MalformedDocument(format!(
                    "annotation {} extends outside its {w}x{h} image",
                    a.id
                )));
            }
        }
        Ok(Dataset { images, annotations, categories })
    }

    pub fn images(&self) -> &[ImageRecord] {
        &self.images
    }

    pub fn annotations(&self) -> &[InstanceAnnotation] {
        &self.annotations
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn image(&self, id: u64) -> Option<&ImageRecord> {
        self.images.iter().find(|i| i.id == id)
    }

    pub fn annotations_for(&self, image_id: u64) -> impl Iterator<Item = &InstanceAnnotation> {
        self.annotations.iter().filter(move |a| a.image_id == image_id)
    }

    /// The single animal category used by the annotations. Detection runs
    /// handle one animal class at a time.
    pub fn animal_category(&self) -> Result<&str> {
        let used: BTreeSet<&str> = self.annotations.iter().map(|a| a.category.as_str()).collect();
        match used.len() {
            0 => self
                .categories
                .first()
                .map(|c| c.name.as_str())
                .ok_or_else(|| Error::MalformedDocument("no categories".into())),
            1 => Ok(used.into_iter().next().unwrap()),
            _ => Err(Error::InvalidArgument(format!(
                "dataset mixes {} animal categories ({}); one category per run is supported",
                used.len(),
                used.into_iter().collect::<Vec<_>>().join(", ")
            ))),
        }
    }

    /// Rasterized annotation masks for one image, in annotation order.
    pub fn instance_masks(&self, image_id: u64) -> Result<Vec<Mask>> {
        let img = self
            .image(image_id)
            .ok_or_else(|| Error::InvalidArgument(format!("no image with id {image_id}")))?;
        self.annotations_for(image_id)
            .map(|a| a.polygon.rasterize(img.width, img.height))
            .collect()
    }
}

/// Shoelace area of `p`.
pub fn polygon_area(p: &Polygon) -> f64 {
    p.area()
}

/// Pixel-centre, even-odd rasterization of `p` onto a `width`×`height` grid.
pub fn rasterize_polygon(p: &Polygon, width: u32, height: u32) -> Result<Mask> {
    p.rasterize(width, height)
}
