//! Vertex edits. Each returns a new polygon and leaves every untouched
//! vertex bit-identical.

use super::simplify::segment_distance;
use super::{Point, Polygon};
use crate::error::{Error, Result};

/// How far (in pixels) a click may be from an edge and still insert a vertex.
pub const INSERT_SNAP_DISTANCE: f64 = 2.0;

/// Allowed slack around the image extent.
const BOUNDS_MARGIN: f64 = 0.5;

fn check_index(polygon: &Polygon, index: usize) -> Result<()> {
    if index >= polygon.vertices.len() {
        return Err(Error::PolygonEdit(format!(
            "vertex index {index} out of range for {} vertices",
            polygon.vertices.len()
        )));
    }
    Ok(())
}

pub fn move_vertex(polygon: &Polygon, index: usize, to: Point, bounds: (usize, usize)) -> Result<Polygon> {
    check_index(polygon, index)?;
    let (w, h) = (bounds.0 as f64, bounds.1 as f64);
    let inside = |v: f64, extent: f64| v.is_finite() && v >= -BOUNDS_MARGIN && v <= extent + BOUNDS_MARGIN;
    if !inside(to.x, w) || !inside(to.y, h) {
        return Err(Error::PolygonEdit(format!("target ({}, {}) outside the image", to.x, to.y)));
    }
    let n = polygon.vertices.len();
    let prev = polygon.vertices[(index + n - 1) % n];
    let next = polygon.vertices[(index + 1) % n];
    if to == prev || to == next {
        return Err(Error::PolygonEdit("target duplicates a neighbouring vertex".into()));
    }
    let mut out = polygon.clone();
    out.vertices[index] = to;
    Ok(out)
}

pub fn delete_vertex(polygon: &Polygon, index: usize) -> Result<Polygon> {
    check_index(polygon, index)?;
    if polygon.vertices.len() <= 3 {
        return Err(Error::PolygonEdit("a polygon needs at least 3 vertices".into()));
    }
    let mut out = polygon.clone();
    out.vertices.remove(index);
    let n = out.vertices.len();
    // Removing a vertex can make its two neighbours coincide.
    let at = index % n;
    let before = (at + n - 1) % n;
    if out.vertices[at] == out.vertices[before] {
        return Err(Error::PolygonEdit("deletion would leave duplicate vertices".into()));
    }
    Ok(out)
}

/// Inserts the projection of `click` onto edge `edge` (from vertex `edge`
/// to its successor) as the new vertex `edge + 1`.
pub fn insert_vertex_on_edge(polygon: &Polygon, edge: usize, click: Point) -> Result<Polygon> {
    check_index(polygon, edge)?;
    let n = polygon.vertices.len();
    let a = polygon.vertices[edge];
    let b = polygon.vertices[(edge + 1) % n];
    let distance = segment_distance(click, a, b);
    if distance > INSERT_SNAP_DISTANCE {
        return Err(Error::PolygonEdit(format!(
            "click is {distance:.2} px from edge {edge}; snap distance is {INSERT_SNAP_DISTANCE} px"
        )));
    }
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let t = (((click.x - a.x) * dx + (click.y - a.y) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    let p = if t == 0.0 {
        a
    } else if t == 1.0 {
        b
    } else if click.x == a.x + t * dx && click.y == a.y + t * dy {
        // Exactly on the edge: keep the clicked coordinates unrounded.
        click
    } else {
        Point::new(a.x + t * dx, a.y + t * dy)
    };
    if p == a || p == b {
        return Err(Error::PolygonEdit("inserted vertex would duplicate an endpoint".into()));
    }
    let mut out = polygon.clone();
    out.vertices.insert(edge + 1, p);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Polygon {
        Polygon::rect(0.0, 0.0, 4.0, 4.0, 1)
    }

    #[test]
    fn move_changes_only_target() {
        let sq = square();
        let moved = move_vertex(&sq, 0, Point::new(1.0, 0.0), (10, 10)).unwrap();
        assert_eq!(moved.vertices[0], Point::new(1.0, 0.0));
        assert_eq!(&moved.vertices[1..], &sq.vertices[1..]);
        let back = move_vertex(&moved, 0, Point::new(0.0, 0.0), (10, 10)).unwrap();
        assert_eq!(back, sq);
    }

    #[test]
    fn move_rejects_duplicates_and_out_of_bounds() {
        let sq = square();
        assert!(move_vertex(&sq, 0, Point::new(4.0, 0.0), (10, 10)).is_err());
        assert!(move_vertex(&sq, 0, Point::new(-1.0, 0.0), (10, 10)).is_err());
        assert!(move_vertex(&sq, 0, Point::new(10.5, 10.5), (10, 10)).is_ok());
        assert!(move_vertex(&sq, 9, Point::new(1.0, 1.0), (10, 10)).is_err());
    }

    #[test]
    fn delete_refuses_triangles() {
        let tri = Polygon::new(vec![Point::new(0., 0.), Point::new(3., 0.), Point::new(0., 3.)], 1, false);
        for i in 0..3 {
            assert!(delete_vertex(&tri, i).is_err());
        }
    }

    #[test]
    fn delete_then_insert_restores() {
        let mut five = square();
        five.vertices.insert(2, Point::new(4.0, 2.0));
        let four = delete_vertex(&five, 2).unwrap();
        assert_eq!(four.len(), 4);
        let restored = insert_vertex_on_edge(&four, 1, Point::new(4.0, 2.0)).unwrap();
        assert_eq!(restored, five);
    }

    #[test]
    fn insert_midpoint_and_snap_limit() {
        let sq = square();
        let ins = insert_vertex_on_edge(&sq, 0, Point::new(2.0, 0.0)).unwrap();
        assert_eq!(ins.len(), 5);
        assert_eq!(ins.vertices[1], Point::new(2.0, 0.0));
        assert_eq!(delete_vertex(&ins, 1).unwrap(), sq);
        let near = insert_vertex_on_edge(&sq, 0, Point::new(1.0, 1.5)).unwrap();
        assert_eq!(near.vertices[1], Point::new(1.0, 0.0));
        assert!(insert_vertex_on_edge(&sq, 0, Point::new(2.0, 5.0)).is_err());
    }
}
