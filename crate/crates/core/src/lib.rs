//! Interactive segmentation toolkit.
//!
//! A user places positive and negative clicks on an image; an
//! energy-minimisation engine ([`engines`]) returns a mask and an edge prior
//! for the next round. Masks convert to editable polygons ([`geometry`]),
//! propagate through videos and volumes ([`sequence`]) and are written in
//! the usual annotation formats ([`io`]). [`simclick`] replays the standard
//! simulated-click benchmark (NoC@85/90, mIoU curves).

pub mod category;
pub mod click;
pub mod components;
pub mod distance;
pub mod engines;
pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod raster;
pub mod sequence;
pub mod simclick;
pub mod synth;

pub use category::Category;
pub use click::{Click, ClickSet, Polarity};
pub use components::{connected_components, Components, Connectivity};
pub use distance::distance_transform;
pub use engines::{segment, EngineKind, EngineOutput, EngineParams, Segmenter};
pub use error::{Error, Result};
pub use metrics::iou;
pub use raster::{BinaryMask, BitDepth, EdgeMap, LabelMask, RasterImage};
