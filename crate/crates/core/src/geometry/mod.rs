//! Mask ↔ polygon conversion and polygon editing.
//!
//! Polygon vertices live on the pixel-corner lattice: pixel `(x, y)` spans
//! `[x, x+1] × [y, y+1]` and its centre is `(x + 0.5, y + 0.5)`. Tracing a
//! mask at epsilon 0 and rasterizing the result at pixel centres reproduces
//! the mask exactly.

mod edit;
mod simplify;
mod trace;

use serde::{Deserialize, Serialize};

use crate::raster::{BinaryMask, LabelMask};

pub use edit::{delete_vertex, insert_vertex_on_edge, move_vertex, INSERT_SNAP_DISTANCE};
pub use simplify::simplify;
pub use trace::extract_polygons;

pub const DEFAULT_EPSILON: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Point>,
    pub category_id: u32,
    #[serde(default)]
    pub hole: bool,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>, category_id: u32, hole: bool) -> Self {
        Polygon {
            vertices,
            category_id,
            hole,
        }
    }

    /// Rectangle on the corner lattice covering pixels `[x0, x1) × [y0, y1)`.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64, category_id: u32) -> Self {
        Polygon::new(
            vec![
                Point::new(x0, y0),
                Point::new(x1, y0),
                Point::new(x1, y1),
                Point::new(x0, y1),
            ],
            category_id,
            false,
        )
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// `[x, y, w, h]` of the vertex extent.
    pub fn bbox(&self) -> [f64; 4] {
        let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
        let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            x0 = x0.min(p.x);
            y0 = y0.min(p.y);
            x1 = x1.max(p.x);
            y1 = y1.max(p.y);
        }
        if self.vertices.is_empty() {
            return [0.0; 4];
        }
        [x0, y0, x1 - x0, y1 - y0]
    }

    /// Even-odd membership of the point, using the half-open crossing rule
    /// shared with [`rasterize`].
    pub fn contains(&self, px: f64, py: f64) -> bool {
        let n = self.vertices.len();
        let mut inside = false;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if (a.y > py) != (b.y > py) && px < crossing_x(a, b, py) {
                inside = !inside;
            }
        }
        inside
    }

    fn fill_row(&self, yc: f64, xs: &mut Vec<f64>) {
        xs.clear();
        let n = self.vertices.len();
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if (a.y > yc) != (b.y > yc) {
                xs.push(crossing_x(a, b, yc));
            }
        }
        xs.sort_by(f64::total_cmp);
    }
}

fn crossing_x(a: Point, b: Point, y: f64) -> f64 {
    a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y)
}

/// Calls `paint(x, y)` for every pixel whose centre lies inside `polygon`.
fn scan(polygon: &Polygon, width: usize, height: usize, mut paint: impl FnMut(usize, usize)) {
    if polygon.vertices.len() < 3 {
        return;
    }
    let mut xs = Vec::new();
    for y in 0..height {
        let yc = y as f64 + 0.5;
        polygon.fill_row(yc, &mut xs);
        if xs.is_empty() {
            continue;
        }
        for x in 0..width {
            let xc = x as f64 + 0.5;
            // Crossings strictly right of the centre; odd means inside.
            let right = xs.len() - xs.partition_point(|&v| v <= xc);
            if right % 2 == 1 {
                paint(x, y);
            }
        }
    }
}

/// Fills polygons in list order at pixel centres. Outer polygons paint
/// their `category_id`, holes reset to 0; later polygons overwrite.
pub fn rasterize(polygons: &[Polygon], width: usize, height: usize) -> LabelMask {
    let mut mask = LabelMask::zeros(width, height);
    for polygon in polygons {
        let label = if polygon.hole { 0 } else { polygon.category_id as u16 };
        scan(polygon, width, height, |x, y| mask.set(x, y, label));
    }
    mask
}

/// Foreground of one annotation: the outer polygon minus its holes.
pub fn rasterize_object(outer: &Polygon, holes: &[Polygon], width: usize, height: usize) -> BinaryMask {
    let mut mask = BinaryMask::empty(width, height);
    scan(outer, width, height, |x, y| mask.set(x, y, true));
    for hole in holes {
        scan(hole, width, height, |x, y| mask.set(x, y, false));
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_square_fills_block() {
        let mask = rasterize(&[Polygon::rect(0.0, 0.0, 4.0, 4.0, 1)], 6, 6);
        let expected = BinaryMask::from_fn(6, 6, |x, y| x < 4 && y < 4).to_label_mask(1);
        assert_eq!(mask, expected);
    }

    #[test]
    fn hole_subtracts() {
        let outer = Polygon::rect(1.0, 1.0, 7.0, 7.0, 3);
        let mut hole = Polygon::rect(3.0, 3.0, 5.0, 5.0, 3);
        hole.hole = true;
        let mask = rasterize(&[outer.clone(), hole.clone()], 8, 8);
        for y in 0..8 {
            for x in 0..8 {
                let (xc, yc) = (x as f64 + 0.5, y as f64 + 0.5);
                let want = outer.contains(xc, yc) && !hole.contains(xc, yc);
                assert_eq!(mask.get(x, y), if want { 3 } else { 0 }, "pixel ({x},{y})");
            }
        }
        assert_eq!(mask.foreground().count(), 32);
    }

    #[test]
    fn later_polygon_wins_overlap() {
        let a = Polygon::rect(0.0, 0.0, 4.0, 4.0, 1);
        let b = Polygon::rect(2.0, 2.0, 6.0, 6.0, 2);
        let mask = rasterize(&[a, b], 6, 6);
        assert_eq!(mask.get(3, 3), 2);
        assert_eq!(mask.get(1, 1), 1);
        assert_eq!(mask.get(5, 5), 2);
    }

    #[test]
    fn bbox_of_vertex_extent() {
        let p = Polygon::rect(2.0, 3.0, 7.0, 8.0, 1);
        assert_eq!(p.bbox(), [2.0, 3.0, 5.0, 5.0]);
    }
}
