use clickmask::distance::squared_distance_transform;
use clickmask::simclick::first_click;
use clickmask::{distance_transform, BinaryMask};
use proptest::prelude::*;

fn mask() -> impl Strategy<Value = BinaryMask> {
    (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
        prop::collection::vec(prop::bool::weighted(0.7), w * h)
            .prop_map(move |data| BinaryMask::new(w, h, data).unwrap())
    })
}

/// Squared distance to the nearest background pixel, where everything
/// outside the image is background.
fn brute_force(m: &BinaryMask) -> Vec<u64> {
    let (w, h) = m.dims();
    let (w, h) = (w as i64, h as i64);
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !m.get_signed(x, y) {
                out.push(0);
                continue;
            }
            let mut best = u64::MAX;
            for by in -1..=h {
                for bx in -1..=w {
                    if !m.get_signed(bx, by) {
                        best = best.min(((bx - x).pow(2) + (by - y).pow(2)) as u64);
                    }
                }
            }
            out.push(best);
        }
    }
    out
}

proptest! {
    #[test]
    fn transform_matches_brute_force(m in mask()) {
        prop_assert_eq!(squared_distance_transform(&m), brute_force(&m));
    }

    #[test]
    fn first_click_is_deepest_foreground_pixel(m in mask()) {
        let dt = distance_transform(&m);
        match first_click(&m) {
            Ok(p) => {
                let i = p.y as usize * m.width() + p.x as usize;
                prop_assert!(m.data()[i]);
                let deepest = dt.iter().cloned().fold(0.0, f64::max);
                prop_assert_eq!(dt[i], deepest);
            }
            Err(_) => prop_assert!(m.data().iter().all(|&b| !b)),
        }
    }
}
