use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::mask::{MaskAnnotation, RleMask};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoImage {
    pub id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoAnnotation {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u32,
    /// `[x, y, w, h]` in pixels.
    pub bbox: [f64; 4],
    pub segmentation: RleMask,
    pub area: u64,
    pub iscrowd: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoCategory {
    pub id: u32,
    pub name: String,
    pub supercategory: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CocoDocument {
    pub images: Vec<CocoImage>,
    pub annotations: Vec<CocoAnnotation>,
    pub categories: Vec<CocoCategory>,
}

/// Object name to COCO category id.
pub type CategoryTable = BTreeMap<String, u32>;

/// One image to be indexed: its file and the masks of named objects.
#[derive(Debug, Clone)]
pub struct CocoFrame<'a> {
    pub file_name: String,
    pub width: u32,
    pub height: u32,
    pub objects: Vec<(&'a str, &'a MaskAnnotation)>,
}

/// Builds the document; objects with zero area get no annotation.
pub fn export_coco(frames: &[CocoFrame<'_>], categories: &CategoryTable) -> Result<CocoDocument> {
    let mut doc = CocoDocument {
        categories: categories
            .iter()
            .map(|(name, &id)| CocoCategory {
                id,
                name: name.clone(),
                supercategory: "object".into(),
            })
            .collect(),
        ..Default::default()
    };
    doc.categories.sort_by_key(|c| c.id);
    for (i, f) in frames.iter().enumerate() {
        let image_id = i as u64 + 1;
        doc.images.push(CocoImage {
            id: image_id,
            file_name: f.file_name.clone(),
            width: f.width,
            height: f.height,
        });
        for &(name, m) in &f.objects {
            let category_id = *categories.get(name).ok_or_else(|| Error::MissingCategory(name.to_string()))?;
            if m.area == 0 {
                continue;
            }
            doc.annotations.push(CocoAnnotation {
                id: doc.annotations.len() as u64 + 1,
                image_id,
                category_id,
                bbox: m.bbox.map(f64::from),
                segmentation: m.rle.clone(),
                area: m.area,
                iscrowd: 0,
            });
        }
    }
    Ok(doc)
}
