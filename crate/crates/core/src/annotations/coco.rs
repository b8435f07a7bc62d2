// SPDX-License-Identifier: Apache-2.0

//! COCO-style annotation documents, polygon segmentation only.
//!
//! Accepted subset:
//!
//! ```text
//! { "images":      [{ "id", "file_name", "width", "height" }],
//!   "annotations": [{ "id", "image_id", "category_id", "segmentation": [[x0, y0, x1, y1, ...]] }],
//!   "categories":  [{ "id", "name" }] }
//! ```
//!
//! Unknown fields are ignored. Output is canonical: fixed key order,
//! coordinates rounded to six decimals, `area`/`bbox`/`iscrowd` recomputed.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Category, Dataset, ImageRecord, InstanceAnnotation, Polygon};
use crate::error::{Error, Result};

#[derive(Deserialize)]
struct RawDoc {
    images: Vec<RawImage>,
    annotations: Vec<RawAnnotation>,
    categories: Vec<RawCategory>,
}

#[derive(Deserialize)]
struct RawImage {
    id: u64,
    file_name: String,
    width: i64,
    height: i64,
}

#[derive(Deserialize)]
struct RawAnnotation {
    id: u64,
    image_id: u64,
    category_id: u64,
    segmentation: Value,
}

#[derive(Deserialize, Serialize)]
struct RawCategory {
    id: u64,
    name: String,
}

#[derive(Serialize)]
struct OutDoc<'a> {
    images: Vec<OutImage<'a>>,
    annotations: Vec<OutAnnotation>,
    categories: Vec<OutCategory<'a>>,
}

#[derive(Serialize)]
struct OutImage<'a> {
    id: u64,
    file_name: &'a str,
    width: u32,
    height: u32,
}

#[derive(Serialize)]
struct OutAnnotation {
    id: u64,
    image_id: u64,
    category_id: u64,
    segmentation: Vec<Vec<f64>>,
    area: f64,
    bbox: [f64; 4],
    iscrowd: u8,
}

#[derive(Serialize)]
struct OutCategory<'a> {
    id: u64,
    name: &'a str,
}

fn segmentation_coords(ann_id: u64, seg: &Value) -> Result<Vec<f64>> {
    let numbers = |items: &[Value]| -> Result<Vec<f64>> {
        items
            .iter()
            .map(|v| {
                v.as_f64().ok_or_else(|| {
                    Error::MalformedDocument(format!("annotation {ann_id}: non-numeric coordinate"))
                })
            })
            .collect()
    };
    match seg {
        Value::Array(items) if items.iter().all(Value::is_number) => numbers(items),
        Value::Array(parts) => match parts.as_slice() {
            [Value::Array(single)] => numbers(single),
            [] => Err(Error::DegeneratePolygon(format!("annotation {ann_id}: empty segmentation"))),
            _ => Err(Error::MalformedDocument(format!(
                "annotation {ann_id}: multi-part segmentation ({} polygons) is not supported",
                parts.len()
            ))),
        },
        Value::Object(_) => Err(Error::MalformedDocument(format!(
            "annotation {ann_id}: RLE segmentation is not supported"
        ))),
        _ => Err(Error::MalformedDocument(format!("annotation {ann_id}: invalid segmentation"))),
    }
}

pub fn parse_annotation_document(text: &str) -> Result<Dataset> {
    let raw: RawDoc =
        serde_json::from_str(text).map_err(|e| Error::MalformedDocument(e.to_string()))?;

    let mut images = Vec::with_capacity(raw.images.len());
    for img in raw.images {
        let dim = |v: i64| u32::try_from(v).ok().filter(|&d| d > 0);
        let (Some(width), Some(height)) = (dim(img.width), dim(img.height)) else {
            return Err(Error::InvalidDimensions {
                image_id: img.id,
                width: img.width.clamp(0, u32::MAX as i64) as u32,
                height: img.height.clamp(0, u32::MAX as i64) as u32,
            });
        };
        images.push(ImageRecord { id: img.id, path: img.file_name, width, height });
    }
    let dims: HashMap<u64, (u32, u32)> = images.iter().map(|i| (i.id, (i.width, i.height))).collect();
    let names: HashMap<u64, &str> = raw.categories.iter().map(|c| (c.id, c.name.as_str())).collect();

    let mut annotations = Vec::with_capacity(raw.annotations.len());
    for ann in &raw.annotations {
        let Some(&(w, h)) = dims.get(&ann.image_id) else {
            return Err(Error::DanglingImageReference { annotation: ann.id, image_id: ann.image_id });
        };
        let category = names.get(&ann.category_id).ok_or_else(|| {
            Error::MalformedDocument(format!(
                "annotation {} references unknown category {}",
                ann.id, ann.category_id
            ))
        })?;
        let mut polygon = Polygon::from_flat(&segmentation_coords(ann.id, &ann.segmentation)?)
            .map_err(|e| match e {
                Error::DegeneratePolygon(m) => {
                    Error::DegeneratePolygon(format!("annotation {}: {m}", ann.id))
                }
                other => other,
            })?;
        let (x0, y0, x1, y1) = polygon.bounds();
        if x0 < 0.0 || y0 < 0.0 || x1 > w as f64 || y1 > h as f64 {
            polygon = polygon.clip_to_rect(0.0, 0.0, w as f64, h as f64).ok_or_else(|| {
                Error::DegeneratePolygon(format!("annotation {} lies outside its image", ann.id))
            })?;
        }
        if polygon.area() <= 0.0 {
            return Err(Error::DegeneratePolygon(format!("annotation {} has zero area", ann.id)));
        }
        annotations.push(InstanceAnnotation {
            id: ann.id,
            image_id: ann.image_id,
            category: category.to_string(),
            polygon,
        });
    }
    let categories = raw.categories.into_iter().map(|c| Category { id: c.id, name: c.name }).collect();
    Dataset::new(images, annotations, categories)
}

fn round6(x: f64) -> f64 {
    let r = (x * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

pub fn serialize_annotation_document(dataset: &Dataset) -> String {
    let cat_ids: HashMap<&str, u64> =
        dataset.categories().iter().map(|c| (c.name.as_str(), c.id)).collect();
    let doc = OutDoc {
        images: dataset
            .images()
            .iter()
            .map(|i| OutImage { id: i.id, file_name: &i.path, width: i.width, height: i.height })
            .collect(),
        annotations: dataset
            .annotations()
            .iter()
            .map(|a| {
                let rounded = a.polygon.map(|p| super::Point::new(round6(p.x), round6(p.y)));
                let (x0, y0, x1, y1) = rounded.bounds();
                OutAnnotation {
                    id: a.id,
                    image_id: a.image_id,
                    category_id: cat_ids[a.category.as_str()],
                    segmentation: vec![rounded.to_flat()],
                    area: round6(rounded.area()),
                    bbox: [x0, y0, round6(x1 - x0), round6(y1 - y0)],
                    iscrowd: 0,
                }
            })
            .collect(),
        categories: dataset
            .categories()
            .iter()
            .map(|c| OutCategory { id: c.id, name: &c.name })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("document serializes");
    s.push('\n');
    s
}

pub fn read_annotation_file(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_annotation_document(&text)
}

pub fn write_annotation_file(path: &Path, dataset: &Dataset) -> Result<()> {
    std::fs::write(path, serialize_annotation_document(dataset)).map_err(|e| Error::io(path, e))
}
