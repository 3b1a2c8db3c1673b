//! Winner-take-all SAD block matching with texture, uniqueness and
//! left-right consistency rejection.

use serde::{Deserialize, Serialize};

use super::RectifiedPair;
use crate::error::{Error, Result};
use crate::imaging::LUMA_SCALE;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StereoConfig {
    pub block_size: usize,
    pub max_disparity: usize,
    /// A match is rejected when best cost / second-best cost exceeds this.
    pub uniqueness_ratio: f64,
    pub lr_consistency_tol: f64,
    /// Minimum summed absolute horizontal gradient over the block (0–255 scale).
    pub min_texture: f64,
}

impl Default for StereoConfig {
    fn default() -> Self {
        Self {
            block_size: 7,
            max_disparity: 64,
            uniqueness_ratio: 0.8,
            lr_consistency_tol: 1.0,
            min_texture: 10.0,
        }
    }
}

impl StereoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.block_size < 3 || self.block_size % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "block_size must be odd and at least 3, got {}",
                self.block_size
            )));
        }
        if self.max_disparity == 0 {
            return Err(Error::InvalidArgument("max_disparity must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-pixel disparity of the left view, `None` where no reliable match exists.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap {
    width: usize,
    height: usize,
    disparity: Vec<f32>,
    valid: Vec<bool>,
}

impl DisparityMap {
    pub fn invalid(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            disparity: vec![0.0; width * height],
            valid: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Option<f32>) -> Self {
        let mut d = Self::invalid(width, height);
        for y in 0..height {
            for x in 0..width {
                if let Some(v) = f(x, y) {
                    d.disparity[y * width + x] = v;
                    d.valid[y * width + x] = true;
                }
            }
        }
        d
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, x: usize, y: usize) -> Option<f32> {
        let i = y * self.width + x;
        self.valid[i].then(|| self.disparity[i])
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }
}

/// Sliding box sums of `src` (row-major `w × h`) over `bs × bs` windows
/// centred on each pixel; entries whose window leaves the image are unused.
fn box_sum(src: &[u32], w: usize, h: usize, bs: usize, out: &mut [u32], rows: &mut [u32]) {
    let half = bs / 2;
    // horizontal pass
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        let dst = &mut rows[y * w..(y + 1) * w];
        if w < bs {
            continue;
        }
        let mut acc: u32 = row[..bs].iter().sum();
        dst[half] = acc;
        for x in half + 1..w - half {
            acc = acc + row[x + half] - row[x - half - 1];
            dst[x] = acc;
        }
    }
    // vertical pass
    if h < bs {
        return;
    }
    for x in 0..w {
        let mut acc: u32 = (0..bs).map(|y| rows[y * w + x]).sum();
        out[half * w + x] = acc;
        for y in half + 1..h - half {
            acc = acc + rows[(y + half) * w + x] - rows[(y - half - 1) * w + x];
            out[y * w + x] = acc;
        }
    }
}

/// Dense SAD block matching on the left view.
///
/// A pixel is invalid when its block leaves the image or the search range
/// leaves the right image, when the block's texture is below
/// `min_texture`, when the best cost is not sufficiently unique (second best
/// is taken outside ±1 of the winner), or when the right-view match disagrees
/// by more than `lr_consistency_tol`.
pub fn block_match(pair: &RectifiedPair, cfg: &StereoConfig) -> Result<DisparityMap> {
    cfg.validate()?;
    let (w, h) = pair.left.dims();
    let bs = cfg.block_size;
    let max_d = cfg.max_disparity;
    if w < bs + max_d {
        return Err(Error::ImageTooNarrow {
            width: w,
            block: bs,
            max_disparity: max_d,
        });
    }
    let mut out = DisparityMap::invalid(w, h);
    if h < bs {
        return Ok(out);
    }
    let half = bs / 2;
    let left = pair.left.pixels();
    let right = pair.right.pixels();
    let nd = max_d + 1;
    let n = w * h;

    // cost[(y * w + x) * nd + d]; u32::MAX where the block is not fully inside both views
    let mut cost = vec![u32::MAX; n * nd];
    let mut ad = vec![0u32; n];
    let mut rows = vec![0u32; n];
    let mut sums = vec![0u32; n];
    for d in 0..nd {
        for y in 0..h {
            for x in 0..w {
                ad[y * w + x] = if x >= d {
                    u32::from(left[y * w + x].abs_diff(right[y * w + x - d]))
                } else {
                    0
                };
            }
        }
        box_sum(&ad, w, h, bs, &mut sums, &mut rows);
        for y in half..h - half {
            for x in (d + half).max(half)..w - half {
                cost[(y * w + x) * nd + d] = sums[y * w + x];
            }
        }
    }

    // texture: summed |L(x+1) - L(x)| over the block
    let mut grad = vec![0u32; n];
    for y in 0..h {
        for x in 0..w - 1 {
            grad[y * w + x] = u32::from(left[y * w + x + 1].abs_diff(left[y * w + x]));
        }
    }
    let mut texture = vec![0u32; n];
    box_sum(&grad, w, h, bs, &mut texture, &mut rows);
    let min_texture = cfg.min_texture * LUMA_SCALE;

    let winner = |costs: &[u32]| -> Option<(usize, u32)> {
        let mut best: Option<(usize, u32)> = None;
        for (d, &c) in costs.iter().enumerate() {
            if c != u32::MAX && best.map_or(true, |(_, b)| c < b) {
                best = Some((d, c));
            }
        }
        best
    };

    // right-view winners: right pixel xr matches left xr + d
    let mut right_disp = vec![usize::MAX; n];
    let mut column = vec![u32::MAX; nd];
    for y in half..h - half {
        for xr in half..w - half {
            for (d, slot) in column.iter_mut().enumerate() {
                *slot = if xr + d < w {
                    cost[(y * w + xr + d) * nd + d]
                } else {
                    u32::MAX
                };
            }
            if let Some((d, _)) = winner(&column) {
                right_disp[y * w + xr] = d;
            }
        }
    }

    for y in half..h - half {
        for x in max_d + half..w - half {
            let i = y * w + x;
            if f64::from(texture[i]) < min_texture {
                continue;
            }
            let costs = &cost[i * nd..(i + 1) * nd];
            let Some((best_d, best)) = winner(costs) else {
                continue;
            };
            let second = costs
                .iter()
                .enumerate()
                .filter(|&(d, &c)| d.abs_diff(best_d) > 1 && c != u32::MAX)
                .map(|(_, &c)| c)
                .min();
            if let Some(second) = second {
                if second == 0 || f64::from(best) / f64::from(second) > cfg.uniqueness_ratio {
                    continue;
                }
            }
            let rd = right_disp[y * w + x - best_d];
            if rd == usize::MAX || (rd as f64 - best_d as f64).abs() > cfg.lr_consistency_tol {
                continue;
            }
            out.disparity[i] = best_d as f32;
            out.valid[i] = true;
        }
    }
    Ok(out)
}
