//! Project state for a folder of images: image entries, categories,
//! per-image polygons, settings and the autosave policy.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::categories::{load_categories, CATEGORY_FILE_NAME};
use super::coco::export_coco;
use super::grid::{DEFAULT_OVERLAP, DEFAULT_PATCH_SIZE};
use super::image::{image_dimensions, is_supported_image};
use super::mask::{write_mask, MaskMode};
use crate::category::Category;
use crate::engines::EngineKind;
use crate::error::{Error, Result};
use crate::geometry::{Polygon, DEFAULT_EPSILON};
use crate::raster::LabelMask;

pub const COCO_FILE_NAME: &str = "annotations.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationStatus {
    #[default]
    Unannotated,
    InProgress,
    Annotated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub path: PathBuf,
    pub width: usize,
    pub height: usize,
    pub status: AnnotationStatus,
    pub polygons: Vec<Polygon>,
}

impl ImageEntry {
    pub fn new(path: impl Into<PathBuf>, width: usize, height: usize) -> Self {
        ImageEntry {
            path: path.into(),
            width,
            height,
            status: AnnotationStatus::Unannotated,
            polygons: Vec::new(),
        }
    }

    pub fn file_name(&self) -> String {
        self.path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.path.to_string_lossy().into_owned())
    }

    pub fn stem(&self) -> String {
        self.path
            .file_stem()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "mask".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectSettings {
    pub engine: EngineKind,
    pub epsilon: f64,
    pub autosave: bool,
    pub save_dir: Option<PathBuf>,
    pub mask_mode: MaskMode,
    pub patch_size: usize,
    pub overlap: usize,
}

impl Default for ProjectSettings {
    fn default() -> Self {
        ProjectSettings {
            engine: EngineKind::GraphCut,
            epsilon: DEFAULT_EPSILON,
            autosave: false,
            save_dir: None,
            mask_mode: MaskMode::Grayscale,
            patch_size: DEFAULT_PATCH_SIZE,
            overlap: DEFAULT_OVERLAP,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProjectState {
    pub images: Vec<ImageEntry>,
    pub categories: Vec<Category>,
    pub settings: ProjectSettings,
}

impl ProjectState {
    /// Lists supported images (sorted by file name) and loads
    /// `categories.txt` when the folder has one.
    pub fn open_folder(dir: &Path) -> Result<Self> {
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && is_supported_image(p))
            .collect();
        paths.sort();
        let mut project = ProjectState::default();
        for path in paths {
            let (w, h) = image_dimensions(&path)?;
            project.add_image(ImageEntry::new(path, w, h))?;
        }
        let cat_path = dir.join(CATEGORY_FILE_NAME);
        if cat_path.is_file() {
            for c in load_categories(&cat_path)? {
                project.add_category(c)?;
            }
        }
        Ok(project)
    }

    pub fn add_image(&mut self, entry: ImageEntry) -> Result<usize> {
        if self.images.iter().any(|e| e.path == entry.path) {
            return Err(Error::invalid("project", format!("image {} already listed", entry.path.display())));
        }
        self.images.push(entry);
        Ok(self.images.len() - 1)
    }

    pub fn add_category(&mut self, category: Category) -> Result<()> {
        if category.id == 0 {
            return Err(Error::invalid("category", "id 0 is reserved for background"));
        }
        if self.categories.iter().any(|c| c.id == category.id) {
            return Err(Error::invalid("category", format!("id {} already exists", category.id)));
        }
        self.categories.push(category);
        Ok(())
    }

    pub fn live_category(&self, id: u32) -> Option<&Category> {
        self.categories.iter().find(|c| c.id == id && !c.deleted)
    }

    pub fn category_in_use(&self, id: u32) -> bool {
        self.images
            .iter()
            .flat_map(|e| &e.polygons)
            .any(|p| p.category_id == id)
    }

    /// Marks a category deleted. Refused while polygons still use it.
    pub fn delete_category(&mut self, id: u32) -> Result<()> {
        if self.category_in_use(id) {
            return Err(Error::invalid("category", format!("{id} is still used by polygons")));
        }
        let c = self
            .categories
            .iter_mut()
            .find(|c| c.id == id && !c.deleted)
            .ok_or(Error::DanglingCategory(id))?;
        c.deleted = true;
        Ok(())
    }

    pub fn set_polygons(&mut self, index: usize, polygons: Vec<Polygon>) -> Result<()> {
        if let Some(p) = polygons.iter().find(|p| self.live_category(p.category_id).is_none()) {
            return Err(Error::DanglingCategory(p.category_id));
        }
        let entry = self
            .images
            .get_mut(index)
            .ok_or_else(|| Error::invalid("project", format!("no image at index {index}")))?;
        entry.status = if polygons.is_empty() {
            AnnotationStatus::Unannotated
        } else {
            AnnotationStatus::Annotated
        };
        entry.polygons = polygons;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for (i, a) in self.images.iter().enumerate() {
            if self.images[..i].iter().any(|b| b.path == a.path) {
                return Err(Error::invalid("project", format!("duplicate image {}", a.path.display())));
            }
            if let Some(p) = a.polygons.iter().find(|p| self.live_category(p.category_id).is_none()) {
                return Err(Error::DanglingCategory(p.category_id));
            }
        }
        Ok(())
    }

    /// Runs on image switch: writes `<save_dir>/<stem>.png` and refreshes
    /// the COCO file. Does nothing unless autosave is on and a directory is
    /// set. Returns the written paths.
    pub fn autosave(&self, index: usize, mask: &LabelMask) -> Result<Vec<PathBuf>> {
        let Some(dir) = self.settings.save_dir.as_ref().filter(|_| self.settings.autosave) else {
            return Ok(Vec::new());
        };
        let entry = self
            .images
            .get(index)
            .ok_or_else(|| Error::invalid("project", format!("no image at index {index}")))?;
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mask_path = dir.join(format!("{}.png", entry.stem()));
        write_mask(mask, self.settings.mask_mode, &mask_path)?;
        let coco_path = dir.join(COCO_FILE_NAME);
        export_coco(self)?.save(&coco_path)?;
        Ok(vec![mask_path, coco_path])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{read_mask, save_png, save_categories};
    use crate::raster::RasterImage;

    #[test]
    fn open_folder_lists_images_and_categories() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["b.png", "a.png"] {
            let img = RasterImage::from_fn_u8(6, 4, 3, |_, _| vec![1, 2, 3]).unwrap();
            save_png(&img, &dir.path().join(name)).unwrap();
        }
        fs::write(dir.path().join("notes.txt"), "x").unwrap();
        save_categories(&[Category::new(1, "a", [1, 2, 3])], &dir.path().join(CATEGORY_FILE_NAME)).unwrap();
        let p = ProjectState::open_folder(dir.path()).unwrap();
        assert_eq!(p.images.len(), 2);
        assert_eq!(p.images[0].file_name(), "a.png");
        assert_eq!((p.images[0].width, p.images[0].height), (6, 4));
        assert_eq!(p.categories.len(), 1);
    }

    #[test]
    fn invariants_enforced() {
        let mut p = ProjectState::default();
        p.add_image(ImageEntry::new("x.png", 4, 4)).unwrap();
        assert!(p.add_image(ImageEntry::new("x.png", 4, 4)).is_err());
        assert!(p.set_polygons(0, vec![Polygon::rect(0.0, 0.0, 2.0, 2.0, 5)]).is_err());
        p.add_category(Category::new(5, "c", [0, 0, 0])).unwrap();
        p.set_polygons(0, vec![Polygon::rect(0.0, 0.0, 2.0, 2.0, 5)]).unwrap();
        assert!(p.delete_category(5).is_err());
        p.set_polygons(0, vec![]).unwrap();
        p.delete_category(5).unwrap();
        assert!(p.validate().is_ok());
    }

    #[test]
    fn autosave_writes_mask_and_coco() {
        let dir = tempfile::tempdir().unwrap();
        let mut p = ProjectState::default();
        p.add_image(ImageEntry::new("/data/frame_01.png", 4, 3)).unwrap();
        let mask = LabelMask::new(4, 3, vec![0, 1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 0]).unwrap();
        assert!(p.autosave(0, &mask).unwrap().is_empty());
        p.settings.autosave = true;
        p.settings.save_dir = Some(dir.path().join("out"));
        let written = p.autosave(0, &mask).unwrap();
        assert_eq!(written[0], dir.path().join("out/frame_01.png"));
        assert_eq!(read_mask(&written[0]).unwrap(), mask);
        assert!(written[1].ends_with(COCO_FILE_NAME));
    }
}
