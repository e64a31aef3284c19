//! Boundary tracing on the crack-edge lattice.
//!
//! Foreground is 8-connected and background 4-connected. Every foreground
//! component yields one outer loop; every enclosed background component
//! yields one hole loop. Loops are walked with the traced region on the
//! right-hand side, so at a diagonal "saddle" corner the walk turns toward
//! the diagonal pixel for foreground (keeping it in the same loop) and away
//! from it for holes.
//!
//! Output order: outer polygons by the raster position of their first
//! pixel, each immediately followed by its holes in the same order. With
//! that order, painting with [`super::rasterize`] reproduces nested
//! islands correctly.

use super::{simplify, Point, Polygon};
use crate::components::{connected_components, Connectivity};
use crate::raster::BinaryMask;

pub fn extract_polygons(mask: &BinaryMask, epsilon: f64, category_id: u32) -> Vec<Polygon> {
    let (w, h) = mask.dims();
    let fg = connected_components(mask, Connectivity::Eight);
    if fg.count() == 0 {
        return Vec::new();
    }

    // Background components; the ones touching the border are not holes.
    let bg_mask = BinaryMask::from_fn(w, h, |x, y| !mask.get(x, y));
    let bg = connected_components(&bg_mask, Connectivity::Four);
    let mut touches_border = vec![false; bg.count() + 1];
    for y in 0..h {
        for x in 0..w {
            if x == 0 || y == 0 || x + 1 == w || y + 1 == h {
                touches_border[bg.labels[y * w + x] as usize] = true;
            }
        }
    }

    let mut first_fg = vec![usize::MAX; fg.count() + 1];
    let mut first_bg = vec![usize::MAX; bg.count() + 1];
    for (i, (&f, &b)) in fg.labels.iter().zip(&bg.labels).enumerate() {
        if f != 0 && first_fg[f as usize] == usize::MAX {
            first_fg[f as usize] = i;
        }
        if b != 0 && first_bg[b as usize] == usize::MAX {
            first_bg[b as usize] = i;
        }
    }

    // Owner of a hole: the foreground pixel directly above its first pixel.
    let mut holes_of: Vec<Vec<u32>> = vec![Vec::new(); fg.count() + 1];
    for id in 1..=bg.count() as u32 {
        if touches_border[id as usize] {
            continue;
        }
        let start = first_bg[id as usize];
        let owner = fg.labels[start - w];
        debug_assert!(owner != 0);
        holes_of[owner as usize].push(id);
    }

    let mut out = Vec::new();
    for id in 1..=fg.count() as u32 {
        let start = first_fg[id as usize];
        let inside = |x: i64, y: i64| in_bounds(x, y, w, h) && fg.labels[y as usize * w + x as usize] == id;
        let outer = trace_loop(start % w, start / w, inside, true);
        push_simplified(&mut out, outer, epsilon, category_id, false);
        for &hole in &holes_of[id as usize] {
            let start = first_bg[hole as usize];
            let inside = |x: i64, y: i64| in_bounds(x, y, w, h) && bg.labels[y as usize * w + x as usize] == hole;
            let ring = trace_loop(start % w, start / w, inside, false);
            push_simplified(&mut out, ring, epsilon, category_id, true);
        }
    }
    out
}

fn push_simplified(out: &mut Vec<Polygon>, ring: Vec<Point>, epsilon: f64, category_id: u32, hole: bool) {
    let polygon = simplify(&Polygon::new(ring, category_id, hole), epsilon);
    if polygon.vertices.len() >= 3 {
        out.push(polygon);
    }
}

fn in_bounds(x: i64, y: i64, w: usize, h: usize) -> bool {
    x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h
}

/// Walks the boundary of the region containing pixel `(x0, y0)`, which must
/// be the region's first pixel in raster order. Returns the corner vertices,
/// starting at the pixel's top-left corner.
fn trace_loop(x0: usize, y0: usize, inside: impl Fn(i64, i64) -> bool, eight_connected: bool) -> Vec<Point> {
    let start = (x0 as i64, y0 as i64);
    let start_dir = (1i64, 0i64);
    let (mut v, mut d) = (start, start_dir);
    let mut corners = vec![Point::new(start.0 as f64, start.1 as f64)];
    loop {
        v = (v.0 + d.0, v.1 + d.1);
        // Right-hand normal in y-down image coordinates.
        let r = (-d.1, d.0);
        let pixel = |s: i64| {
            // Doubled centre coordinates are odd, so halving is exact.
            let cx = 2 * v.0 + d.0 + s * r.0;
            let cy = 2 * v.1 + d.1 + s * r.1;
            ((cx - 1) / 2, (cy - 1) / 2)
        };
        let (ar, al) = (pixel(1), pixel(-1));
        let right_in = inside(ar.0, ar.1);
        let left_in = inside(al.0, al.1);
        let next = if left_in && (right_in || eight_connected) {
            (d.1, -d.0)
        } else if right_in {
            d
        } else {
            r
        };
        if v == start && next == start_dir {
            break;
        }
        if next != d {
            corners.push(Point::new(v.0 as f64, v.1 as f64));
        }
        d = next;
    }
    corners
}
