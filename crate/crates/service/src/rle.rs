//! Run-length mask payloads: alternating run lengths over the row-major
//! mask, starting with a (possibly empty) run of zeros.

use serde::{Deserialize, Serialize};

use clickmask::BinaryMask;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RleMask {
    pub counts: Vec<u64>,
    /// `[height, width]`.
    pub size: [usize; 2],
    pub start_value: u8,
}

impl RleMask {
    pub fn encode(mask: &BinaryMask) -> Self {
        let mut counts = Vec::new();
        let mut current = false;
        let mut run = 0u64;
        for &v in mask.data() {
            if v == current {
                run += 1;
            } else {
                counts.push(run);
                current = v;
                run = 1;
            }
        }
        counts.push(run);
        RleMask {
            counts,
            size: [mask.height(), mask.width()],
            start_value: 0,
        }
    }

    pub fn decode(&self) -> Result<BinaryMask, String> {
        let [h, w] = self.size;
        if self.start_value > 1 {
            return Err(format!("start_value must be 0 or 1, got {}", self.start_value));
        }
        let total: u64 = self.counts.iter().sum();
        if total != (w * h) as u64 {
            return Err(format!("run lengths sum to {total}, mask has {} pixels", w * h));
        }
        let mut data = Vec::with_capacity(w * h);
        let mut value = self.start_value == 1;
        for &c in &self.counts {
            data.extend(std::iter::repeat(value).take(c as usize));
            value = !value;
        }
        BinaryMask::new(w, h, data).map_err(|e| e.to_string())
    }

    pub fn area(&self) -> u64 {
        let skip = usize::from(self.start_value == 0);
        self.counts.iter().skip(skip).step_by(2).sum()
    }
}
