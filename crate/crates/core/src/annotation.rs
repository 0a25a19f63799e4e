//! JSON annotation files:
//! `{image_id, j_g, j_f, mm_per_pixel, boxes: [[x_min, y_min, x_max, y_max], ...]}`.
//!
//! `width`, `height` and `metadata` are optional extensions. When present the
//! image size is used to bounds-check boxes and to derive the imaged length.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AnnotationSet, BubbleBox, FlowCondition, MmPerPixel};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AnnotationFile {
    image_id: String,
    j_g: f64,
    j_f: f64,
    mm_per_pixel: f64,
    boxes: Vec<[i64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    height: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<serde_json::Value>,
}

pub fn parse_annotation(json: &str) -> Result<AnnotationSet> {
    let raw: AnnotationFile = serde_json::from_str(json)?;
    let condition = FlowCondition::new(raw.j_g, raw.j_f)?;
    let mm_per_pixel = MmPerPixel::new(raw.mm_per_pixel)
        .map_err(|_| Error::Annotation(format!("mm_per_pixel must be > 0, got {}", raw.mm_per_pixel)))?;
    let image_size = match (raw.width, raw.height) {
        (Some(w), Some(h)) => Some((w, h)),
        (None, None) => None,
        _ => {
            return Err(Error::Annotation(
                "width and height must be given together".into(),
            ))
        }
    };
    let mut boxes = Vec::with_capacity(raw.boxes.len());
    for coords in raw.boxes {
        let b = BubbleBox::from_array(coords)?;
        if let Some((w, h)) = image_size {
            b.check_within(w, h)?;
        }
        boxes.push(b);
    }
    Ok(AnnotationSet {
        image_id: raw.image_id,
        condition,
        boxes,
        mm_per_pixel,
        image_size,
        metadata: raw.metadata,
    })
}

pub fn annotation_to_json(set: &AnnotationSet) -> Result<String> {
    let raw = AnnotationFile {
        image_id: set.image_id.clone(),
        j_g: set.condition.j_g(),
        j_f: set.condition.j_f(),
        mm_per_pixel: set.mm_per_pixel.get(),
        boxes: set.boxes.iter().map(|b| b.to_array()).collect(),
        width: set.image_size.map(|s| s.0),
        height: set.image_size.map(|s| s.1),
        metadata: set.metadata.clone(),
    };
    Ok(serde_json::to_string_pretty(&raw)?)
}

pub fn load_annotation(path: impl AsRef<Path>) -> Result<AnnotationSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_annotation(&text)
}

pub fn save_annotation(path: impl AsRef<Path>, set: &AnnotationSet) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, annotation_to_json(set)?).map_err(|e| Error::io(path, e))
}
