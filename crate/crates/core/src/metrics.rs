use crate::error::Result;
use crate::raster::{ensure_same_dims, BinaryMask};

/// Intersection over union. Two empty masks score 1.0.
pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    ensure_same_dims(a.dims(), b.dims())?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &q) in a.data().iter().zip(b.data()) {
        inter += usize::from(p && q);
        union += usize::from(p || q);
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}
