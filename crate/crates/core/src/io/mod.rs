//! File formats and display transforms.

pub mod categories;
pub mod coco;
pub mod display;
pub mod grid;
pub mod image;
pub mod mask;
pub mod project;

pub use categories::{format_categories, load_categories, parse_categories, save_categories, CATEGORY_FILE_NAME};
pub use coco::{export_coco, import_coco, CocoAnnotation, CocoCategory, CocoDocument, CocoImage};
pub use display::{apply_window, select_bands, window_value};
pub use grid::{grid_split, grid_stitch, needs_grid, GridLayout, DEFAULT_OVERLAP, DEFAULT_PATCH_SIZE, GRID_THRESHOLD};
pub use image::{decode_image_bytes, image_dimensions, is_supported_image, load_bands, load_image, read_mask, save_bands, save_png};
pub use mask::{voc_palette, write_mask, MaskMode};
pub use project::{AnnotationStatus, ImageEntry, ProjectSettings, ProjectState, COCO_FILE_NAME};
