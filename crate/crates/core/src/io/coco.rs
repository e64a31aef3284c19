//! COCO detection export and import (polygon segmentations only).
//!
//! An outer polygon and the hole polygons that directly follow it in an
//! image's list form one annotation; its `segmentation` lists the outer ring
//! first and then the holes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mask::voc_palette;
use super::project::{AnnotationStatus, ImageEntry, ProjectState};
use crate::category::Category;
use crate::error::{Error, Result};
use crate::geometry::{rasterize_object, Point, Polygon};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoDocument {
    pub images: Vec<CocoImage>,
    pub categories: Vec<CocoCategory>,
    pub annotations: Vec<CocoAnnotation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoImage {
    pub id: u64,
    pub file_name: String,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoCategory {
    pub id: u32,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoAnnotation {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u32,
    pub segmentation: Vec<Vec<f64>>,
    pub area: f64,
    pub bbox: [f64; 4],
    pub iscrowd: u8,
}

impl CocoDocument {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Splits a polygon list into (outer, holes) groups.
pub fn group_objects(polygons: &[Polygon]) -> Result<Vec<(&Polygon, &[Polygon])>> {
    let mut groups = Vec::new();
    let mut i = 0;
    while i < polygons.len() {
        if polygons[i].hole {
            return Err(Error::invalid("polygon list", format!("hole polygon {i} has no outer polygon before it")));
        }
        let mut j = i + 1;
        while j < polygons.len() && polygons[j].hole {
            j += 1;
        }
        groups.push((&polygons[i], &polygons[i + 1..j]));
        i = j;
    }
    Ok(groups)
}

fn flatten(polygon: &Polygon) -> Vec<f64> {
    polygon.vertices.iter().flat_map(|p| [p.x, p.y]).collect()
}

pub fn export_coco(project: &ProjectState) -> Result<CocoDocument> {
    let live: Vec<&Category> = project.categories.iter().filter(|c| !c.deleted).collect();
    let mut doc = CocoDocument {
        images: Vec::with_capacity(project.images.len()),
        categories: live
            .iter()
            .map(|c| CocoCategory {
                id: c.id,
                name: c.comment.clone(),
            })
            .collect(),
        annotations: Vec::new(),
    };
    for (index, entry) in project.images.iter().enumerate() {
        let image_id = index as u64 + 1;
        doc.images.push(CocoImage {
            id: image_id,
            file_name: entry.file_name(),
            width: entry.width,
            height: entry.height,
        });
        for (outer, holes) in group_objects(&entry.polygons)? {
            if !live.iter().any(|c| c.id == outer.category_id) {
                return Err(Error::DanglingCategory(outer.category_id));
            }
            let area = rasterize_object(outer, holes, entry.width, entry.height).count();
            let mut segmentation = vec![flatten(outer)];
            segmentation.extend(holes.iter().map(flatten));
            doc.annotations.push(CocoAnnotation {
                id: doc.annotations.len() as u64 + 1,
                image_id,
                category_id: outer.category_id,
                segmentation,
                area: area as f64,
                bbox: outer.bbox(),
                iscrowd: 0,
            });
        }
    }
    Ok(doc)
}

/// Rebuilds a project from a document. Category colours come from the VOC
/// palette since COCO does not carry them.
pub fn import_coco(doc: &CocoDocument) -> Result<ProjectState> {
    let palette = voc_palette(256)?;
    let mut project = ProjectState::default();
    for c in &doc.categories {
        project.add_category(Category::new(c.id, c.name.clone(), palette[c.id as usize % 256]))?;
    }
    for img in &doc.images {
        project.add_image(ImageEntry::new(img.file_name.clone(), img.width, img.height))?;
    }
    for ann in &doc.annotations {
        let index = doc
            .images
            .iter()
            .position(|i| i.id == ann.image_id)
            .ok_or_else(|| Error::invalid("COCO annotation", format!("unknown image_id {}", ann.image_id)))?;
        if !project.categories.iter().any(|c| c.id == ann.category_id) {
            return Err(Error::DanglingCategory(ann.category_id));
        }
        for (k, ring) in ann.segmentation.iter().enumerate() {
            if ring.len() % 2 != 0 || ring.len() < 6 {
                return Err(Error::invalid(
                    "COCO segmentation",
                    format!("annotation {} ring {k} has {} coordinates", ann.id, ring.len()),
                ));
            }
            let vertices = ring.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect();
            let entry = &mut project.images[index];
            entry.polygons.push(Polygon::new(vertices, ann.category_id, k > 0));
            entry.status = AnnotationStatus::Annotated;
        }
    }
    Ok(project)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn project_with_square() -> ProjectState {
        let mut p = ProjectState::default();
        p.add_category(Category::new(1, "cell", [128, 0, 0])).unwrap();
        p.add_image(ImageEntry::new("imgs/a.png", 20, 10)).unwrap();
        p.set_polygons(0, vec![Polygon::rect(3.0, 2.0, 8.0, 7.0, 1)]).unwrap();
        p
    }

    #[test]
    fn empty_project_exports_empty_arrays() {
        let doc = export_coco(&ProjectState::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&doc.to_json().unwrap()).unwrap();
        assert_eq!(v, serde_json::json!({"images": [], "categories": [], "annotations": []}));
    }

    #[test]
    fn square_area_and_bbox() {
        let doc = export_coco(&project_with_square()).unwrap();
        let ann = &doc.annotations[0];
        assert_eq!(ann.area, 25.0);
        assert_eq!(ann.bbox, [3.0, 2.0, 5.0, 5.0]);
        assert_eq!(ann.segmentation, vec![vec![3.0, 2.0, 8.0, 2.0, 8.0, 7.0, 3.0, 7.0]]);
        assert_eq!(doc.images[0].file_name, "a.png");
    }

    #[test]
    fn hole_reduces_area_and_round_trips() {
        let mut p = project_with_square();
        let mut hole = Polygon::rect(4.0, 3.0, 6.0, 5.0, 1);
        hole.hole = true;
        let mut polys = p.images[0].polygons.clone();
        polys.push(hole);
        polys.push(Polygon::rect(10.0, 1.0, 12.0, 3.0, 1));
        p.set_polygons(0, polys).unwrap();
        let doc = export_coco(&p).unwrap();
        assert_eq!(doc.annotations.len(), 2);
        assert_eq!(doc.annotations[0].area, 21.0);
        assert_eq!(doc.annotations[0].segmentation.len(), 2);
        let first = doc.to_json().unwrap();
        let again = export_coco(&import_coco(&CocoDocument::from_json(&first).unwrap()).unwrap()).unwrap();
        assert_eq!(again.to_json().unwrap(), first);
    }

    #[test]
    fn dangling_category_is_an_error() {
        let mut p = project_with_square();
        p.images[0].polygons[0].category_id = 9;
        assert!(matches!(export_coco(&p), Err(Error::DanglingCategory(9))));
    }
}
