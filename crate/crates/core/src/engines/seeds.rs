use crate::click::ClickSet;
use crate::raster::BinaryMask;

/// Hard-constrained pixels painted around each click.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seeds {
    pub positive: BinaryMask,
    pub negative: BinaryMask,
}

/// Paints a filled disk (squared distance <= radius^2) per click in ordinal
/// order; where disks of opposite polarity overlap, the later click wins.
pub fn rasterize_clicks(clicks: &ClickSet, width: usize, height: usize, radius: u32) -> Seeds {
    let mut positive = BinaryMask::empty(width, height);
    let mut negative = BinaryMask::empty(width, height);
    let r = i64::from(radius);
    for click in clicks {
        let (cx, cy) = (i64::from(click.x), i64::from(click.y));
        let (paint, clear) = if click.polarity.is_positive() {
            (&mut positive, &mut negative)
        } else {
            (&mut negative, &mut positive)
        };
        for y in (cy - r).max(0)..=(cy + r).min(height as i64 - 1) {
            for x in (cx - r).max(0)..=(cx + r).min(width as i64 - 1) {
                if (x - cx).pow(2) + (y - cy).pow(2) <= r * r {
                    paint.set(x as usize, y as usize, true);
                    clear.set(x as usize, y as usize, false);
                }
            }
        }
    }
    Seeds { positive, negative }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::click::Polarity;

    #[test]
    fn empty_clicks_paint_nothing() {
        let s = rasterize_clicks(&ClickSet::new(), 8, 8, 3);
        assert!(s.positive.is_empty() && s.negative.is_empty());
    }

    #[test]
    fn radius_three_disk_has_29_pixels() {
        // Brute-force count of lattice points with dx^2 + dy^2 <= 9.
        let mut expected = 0;
        for dy in -3i32..=3 {
            for dx in -3i32..=3 {
                if dx * dx + dy * dy <= 9 {
                    expected += 1;
                }
            }
        }
        assert_eq!(expected, 29);
        let clicks: ClickSet = [(10, 10, Polarity::Positive)].into_iter().collect();
        let s = rasterize_clicks(&clicks, 32, 32, 3);
        assert_eq!(s.positive.count(), 29);
        assert!(s.negative.is_empty());
    }

    #[test]
    fn later_ordinal_wins() {
        let clicks: ClickSet = [(4, 4, Polarity::Positive), (4, 4, Polarity::Negative)]
            .into_iter()
            .collect();
        let s = rasterize_clicks(&clicks, 9, 9, 1);
        assert!(s.negative.get(4, 4));
        assert!(s.positive.is_empty());
    }

    #[test]
    fn disks_clip_at_borders() {
        let clicks: ClickSet = [(0, 0, Polarity::Positive)].into_iter().collect();
        assert_eq!(rasterize_clicks(&clicks, 8, 8, 1).positive.count(), 3);
    }
}
