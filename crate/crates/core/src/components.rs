use std::collections::VecDeque;

use crate::raster::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    pub(crate) fn offsets(self) -> &'static [(i64, i64)] {
        match self {
            Connectivity::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
            Connectivity::Eight => &[
                (1, 0),
                (-1, 0),
                (0, 1),
                (0, -1),
                (1, 1),
                (1, -1),
                (-1, 1),
                (-1, -1),
            ],
        }
    }
}

/// Labeled foreground regions. `labels` holds 0 for background and
/// `1..=count` for components, numbered in raster order of each
/// component's first pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
    /// `areas[i]` is the pixel count of component `i + 1`.
    pub areas: Vec<usize>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.areas.len()
    }

    pub fn area(&self, id: u32) -> usize {
        self.areas[id as usize - 1]
    }

    pub fn mask_of(&self, id: u32) -> BinaryMask {
        BinaryMask::new(
            self.width,
            self.height,
            self.labels.iter().map(|&l| l == id).collect(),
        )
        .expect("component labels match their own dimensions")
    }
}

pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> Components {
    let (w, h) = mask.dims();
    let mut labels = vec![0u32; w * h];
    let mut areas = Vec::new();
    let mut queue = VecDeque::new();
    let offsets = connectivity.offsets();
    for start in 0..w * h {
        if !mask.data()[start] || labels[start] != 0 {
            continue;
        }
        let id = areas.len() as u32 + 1;
        labels[start] = id;
        queue.push_back(start);
        let mut area = 0;
        while let Some(p) = queue.pop_front() {
            area += 1;
            let (x, y) = ((p % w) as i64, (p / w) as i64);
            for &(dx, dy) in offsets {
                let (nx, ny) = (x + dx, y + dy);
                if mask.get_signed(nx, ny) {
                    let q = ny as usize * w + nx as usize;
                    if labels[q] == 0 {
                        labels[q] = id;
                        queue.push_back(q);
                    }
                }
            }
        }
        areas.push(area);
    }
    Components {
        width: w,
        height: h,
        labels,
        areas,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn diagonal_pair() {
        let m = BinaryMask::from_fn(3, 3, |x, y| (x, y) == (0, 0) || (x, y) == (1, 1));
        assert_eq!(connected_components(&m, Connectivity::Four).count(), 2);
        assert_eq!(connected_components(&m, Connectivity::Eight).count(), 1);
    }

    #[test]
    fn two_blocks() {
        let m = BinaryMask::from_fn(10, 10, |x, y| {
            (x < 2 && y < 2) || ((6..8).contains(&x) && (6..8).contains(&y))
        });
        let c = connected_components(&m, Connectivity::Eight);
        assert_eq!(c.areas, vec![4, 4]);
        assert_eq!(c.labels[0], 1);
        assert_eq!(c.labels[6 * 10 + 6], 2);
    }

    #[test]
    fn empty_mask_has_no_components() {
        assert_eq!(connected_components(&BinaryMask::empty(5, 5), Connectivity::Eight).count(), 0);
    }

    #[test]
    fn ids_follow_raster_order_of_first_pixel() {
        // The U shape's first pixel (0,0) precedes the dot at (2,0), even
        // though most of the U lies below.
        let m = BinaryMask::from_fn(5, 4, |x, y| {
            (x == 0) || (y == 3 && x < 4) || (x == 3 && y >= 1) || (x, y) == (2, 0)
        });
        let c = connected_components(&m, Connectivity::Four);
        assert_eq!(c.labels[0], 1);
        assert_eq!(c.labels[2], 2);
    }

    /// Union-find over the stated adjacency; independent of the BFS above.
    fn oracle_same_component(mask: &BinaryMask, conn: Connectivity) -> Vec<usize> {
        let (w, h) = mask.dims();
        let mut parent: Vec<usize> = (0..w * h).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for y in 0..h {
            for x in 0..w {
                if !mask.get(x, y) {
                    continue;
                }
                for &(dx, dy) in conn.offsets() {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if mask.get_signed(nx, ny) {
                        let a = find(&mut parent, y * w + x);
                        let b = find(&mut parent, ny as usize * w + nx as usize);
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        (0..w * h).map(|i| find(&mut parent, i)).collect()
    }

    proptest! {
        #[test]
        fn matches_union_find(bits in proptest::collection::vec(any::<bool>(), 144), eight in any::<bool>()) {
            let m = BinaryMask::new(12, 12, bits).unwrap();
            let conn = if eight { Connectivity::Eight } else { Connectivity::Four };
            let c = connected_components(&m, conn);
            prop_assert_eq!(c.areas.iter().sum::<usize>(), m.count());
            let roots = oracle_same_component(&m, conn);
            for i in 0..144 {
                for j in 0..144 {
                    if m.data()[i] && m.data()[j] {
                        prop_assert_eq!(roots[i] == roots[j], c.labels[i] == c.labels[j]);
                    }
                }
            }
        }
    }
}
