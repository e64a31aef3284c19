use crate::raster::{BinaryMask, EdgeMap};

/// 1.0 on foreground pixels with at least one 4-neighbour that is
/// background or outside the image; 0.0 everywhere else.
pub fn edge_from_mask(mask: &BinaryMask) -> EdgeMap {
    let (w, h) = mask.dims();
    let mut values = vec![0.0; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            if !mask.get_signed(x, y) {
                continue;
            }
            let boundary = [(1, 0), (-1, 0), (0, 1), (0, -1)]
                .iter()
                .any(|&(dx, dy)| !mask.get_signed(x + dx, y + dy));
            if boundary {
                values[y as usize * w + x as usize] = 1.0;
            }
        }
    }
    EdgeMap::new(w, h, values).expect("values are 0 or 1")
}
