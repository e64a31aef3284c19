use clickmask::geometry::{extract_polygons, rasterize, simplify};
use clickmask::BinaryMask;
use proptest::prelude::*;

fn mask() -> impl Strategy<Value = BinaryMask> {
    (1usize..24, 1usize..24, 0.2f64..0.8).prop_flat_map(|(w, h, p)| {
        prop::collection::vec(prop::bool::weighted(p), w * h)
            .prop_map(move |data| BinaryMask::new(w, h, data).unwrap())
    })
}

proptest! {
    #[test]
    fn exact_polygons_rasterize_back_to_the_mask(m in mask(), category in 1u32..50) {
        let (w, h) = m.dims();
        let polygons = extract_polygons(&m, 0.0, category);
        prop_assert!(polygons.iter().all(|p| p.category_id == category));
        let labels = rasterize(&polygons, w, h);
        prop_assert_eq!(labels.foreground(), m.clone());
        prop_assert!(labels.labels().iter().all(|&l| l == 0 || l as u32 == category));
    }

    #[test]
    fn simplified_vertices_stay_within_epsilon(m in mask(), eps in 0.0f64..3.0) {
        for poly in extract_polygons(&m, 0.0, 1) {
            let simple = simplify(&poly, eps);
            prop_assert!(simple.len() <= poly.len());
            // Every dropped vertex lies within eps of the simplified outline.
            for v in &poly.vertices {
                let n = simple.len();
                let d = (0..n)
                    .map(|i| segment_distance(*v, simple.vertices[i], simple.vertices[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min);
                prop_assert!(d <= eps + 1e-9, "vertex {:?} is {} away", v, d);
            }
        }
    }
}

fn segment_distance(p: clickmask::geometry::Point, a: clickmask::geometry::Point, b: clickmask::geometry::Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0) };
    let (cx, cy) = (a.x + t * dx, a.y + t * dy);
    ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt()
}
