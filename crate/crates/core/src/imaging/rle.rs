use serde::{Deserialize, Serialize};

use super::BinaryMask;
use crate::error::{Error, Result};

/// Row-major run-length encoding. Runs alternate starting with unset pixels,
/// so a mask whose first pixel is set begins with a zero-length run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rle {
    /// `[height, width]`
    pub size: [usize; 2],
    pub counts: Vec<u64>,
}

impl Rle {
    pub fn encode(m: &BinaryMask) -> Rle {
        let mut counts = Vec::new();
        let mut current = false;
        let mut run = 0u64;
        for &b in m.bits() {
            if b != current {
                counts.push(run);
                run = 0;
                current = b;
            }
            run += 1;
        }
        counts.push(run);
        Rle {
            size: [m.height(), m.width()],
            counts,
        }
    }

    pub fn decode(&self) -> Result<BinaryMask> {
        let [h, w] = self.size;
        let expected = (h * w) as u64;
        let sum: u64 = self.counts.iter().sum();
        if sum != expected {
            return Err(Error::RleLength { sum, expected });
        }
        let mut bits = Vec::with_capacity(h * w);
        let mut value = false;
        for &c in &self.counts {
            bits.extend(std::iter::repeat(value).take(c as usize));
            value = !value;
        }
        BinaryMask::new(w, h, bits)
    }
}
