//! Raster types and geometric primitives shared by every other module.
//!
//! Intensities and depths are 16-bit. Thresholds elsewhere in the crate are
//! expressed on the 0–255 luminance scale; [`LUMA_SCALE`] converts between the
//! two.

mod components;
mod pgm;
mod rle;

pub use components::{connected_components, label_components};
pub use pgm::{read_pgm, read_pgm_depth, read_pgm_intensity, write_pgm, write_pgm_depth, write_pgm_intensity, Pgm};
pub use rle::Rle;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ratio between the 16-bit raster range and the 0–255 luminance scale.
pub const LUMA_SCALE: f64 = 257.0;

/// Number of animal classes (deer, boar, hare, fox).
pub const NUM_CLASSES: usize = 4;

/// Class names in id order.
pub const CLASS_NAMES: [&str; NUM_CLASSES] = ["deer", "boar", "hare", "fox"];

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument(format!(
            "raster dimensions must be positive, got {width}x{height}"
        )));
    }
    if len != width * height {
        return Err(Error::InvalidArgument(format!(
            "raster of {width}x{height} needs {} values, got {len}",
            width * height
        )));
    }
    Ok(())
}

/// 16-bit greyscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntensityImage {
    width: usize,
    height: usize,
    pixels: Vec<u16>,
}

impl IntensityImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u16>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u16) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u16) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u16] {
        &mut self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u16) {
        self.pixels[y * self.width + x] = v;
    }

    /// Pixel value on the 0–255 luminance scale.
    pub fn luma(&self, x: usize, y: usize) -> f64 {
        f64::from(self.get(x, y)) / LUMA_SCALE
    }

    pub fn into_pixels(self) -> Vec<u16> {
        self.pixels
    }
}

/// 16-bit depth in millimetres, row-major; 0 marks missing depth.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DepthMap {
    width: usize,
    height: usize,
    depth: Vec<u16>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, depth: Vec<u16>) -> Result<Self> {
        check_dims(width, height, depth.len())?;
        Ok(Self {
            width,
            height,
            depth,
        })
    }

    pub fn filled(width: usize, height: usize, mm: u16) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        Self {
            width,
            height,
            depth: vec![mm; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u16) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        let mut depth = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                depth.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            depth,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn depths(&self) -> &[u16] {
        &self.depth
    }

    pub fn depths_mut(&mut self) -> &mut [u16] {
        &mut self.depth
    }

    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.depth[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, mm: u16) {
        self.depth[y * self.width + x] = mm;
    }

    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.get(x, y) > 0
    }

    pub fn into_depths(self) -> Vec<u16> {
        self.depth
    }
}

/// One boolean per pixel, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "mask of {width}x{height} needs {} bits, got {}",
                width * height,
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![true; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    /// Mask with exactly the pixels of `bbox` set.
    pub fn from_box(width: usize, height: usize, bbox: BoundingBox) -> Self {
        Self::from_fn(width, height, |x, y| bbox.contains(x, y))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Iterator over `(x, y)` of set pixels in row-major order.
    pub fn iter_set(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % w, i / w))
    }

    fn check_same(&self, other: &BinaryMask) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: other.dims(),
            });
        }
        Ok(())
    }

    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.check_same(other)?;
        let bits = self.bits.iter().zip(&other.bits).map(|(&a, &b)| a && b).collect();
        Ok(BinaryMask {
            width: self.width,
            height: self.height,
            bits,
        })
    }

    pub fn or(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.check_same(other)?;
        let bits = self.bits.iter().zip(&other.bits).map(|(&a, &b)| a || b).collect();
        Ok(BinaryMask {
            width: self.width,
            height: self.height,
            bits,
        })
    }

    pub fn not(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|&b| !b).collect(),
        }
    }
}

/// Integer-pixel axis-aligned box; `w` and `h` count pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "[u32; 4]", from = "[u32; 4]")]
pub struct BoundingBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl From<BoundingBox> for [u32; 4] {
    fn from(b: BoundingBox) -> Self {
        [b.x, b.y, b.w, b.h]
    }
}

impl From<[u32; 4]> for BoundingBox {
    fn from(a: [u32; 4]) -> Self {
        BoundingBox {
            x: a[0],
            y: a[1],
            w: a[2],
            h: a[3],
        }
    }
}

impl BoundingBox {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Result<Self> {
        if w == 0 || h == 0 {
            return Err(Error::InvalidArgument(format!(
                "box extent must be positive, got {w}x{h}"
            )));
        }
        Ok(Self { x, y, w, h })
    }

    pub fn area(&self) -> f64 {
        f64::from(self.w) * f64::from(self.h)
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        let (x, y) = (x as u64, y as u64);
        x >= u64::from(self.x)
            && x < u64::from(self.x) + u64::from(self.w)
            && y >= u64::from(self.y)
            && y < u64::from(self.y) + u64::from(self.h)
    }

    pub fn fits_within(&self, width: usize, height: usize) -> bool {
        (self.x as usize + self.w as usize) <= width && (self.y as usize + self.h as usize) <= height
    }
}

/// Intersection over union of two boxes in continuous area arithmetic.
pub fn bbox_iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let ix0 = a.x.max(b.x) as f64;
    let iy0 = a.y.max(b.y) as f64;
    let ix1 = (f64::from(a.x) + f64::from(a.w)).min(f64::from(b.x) + f64::from(b.w));
    let iy1 = (f64::from(a.y) + f64::from(a.h)).min(f64::from(b.y) + f64::from(b.h));
    let inter = (ix1 - ix0).max(0.0) * (iy1 - iy0).max(0.0);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// `|a ∧ b| / |a ∨ b|`, or 0 when both masks are empty.
pub fn mask_iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    a.check_same(b)?;
    let (mut inter, mut union) = (0u64, 0u64);
    for (&p, &q) in a.bits.iter().zip(&b.bits) {
        inter += u64::from(p && q);
        union += u64::from(p || q);
    }
    Ok(if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    })
}

/// Tight bound over the set pixels of `m`.
pub fn bbox_from_mask(m: &BinaryMask) -> Result<BoundingBox> {
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    for (x, y) in m.iter_set() {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    if x0 == usize::MAX {
        return Err(Error::EmptyMask);
    }
    Ok(BoundingBox {
        x: x0 as u32,
        y: y0 as u32,
        w: (x1 - x0 + 1) as u32,
        h: (y1 - y0 + 1) as u32,
    })
}

/// Ground-truth or predicted object instance.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledInstance {
    pub class_id: u16,
    pub bbox: BoundingBox,
    pub mask: BinaryMask,
    pub score: Option<f64>,
}

impl LabeledInstance {
    /// Builds an instance from its mask; the box is derived as the tight bound.
    pub fn from_mask(class_id: u16, mask: BinaryMask, score: Option<f64>) -> Result<Self> {
        if usize::from(class_id) >= NUM_CLASSES {
            return Err(Error::UnknownClass(class_id));
        }
        let bbox = bbox_from_mask(&mask)?;
        Ok(Self {
            class_id,
            bbox,
            mask,
            score,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(x: u32, y: u32, w: u32, h: u32) -> BoundingBox {
        BoundingBox::new(x, y, w, h).unwrap()
    }

    // Rasterize both boxes and count pixels.
    fn raster_iou(a: BoundingBox, b: BoundingBox) -> f64 {
        let (mut i, mut u) = (0, 0);
        for y in 0..32 {
            for x in 0..32 {
                let (p, q) = (a.contains(x, y), b.contains(x, y));
                i += (p && q) as u32;
                u += (p || q) as u32;
            }
        }
        f64::from(i) / f64::from(u)
    }

    #[test]
    fn bbox_iou_examples() {
        assert_eq!(bbox_iou(&bx(0, 0, 10, 10), &bx(0, 0, 10, 10)), 1.0);
        assert_eq!(bbox_iou(&bx(0, 0, 2, 2), &bx(5, 5, 2, 2)), 0.0);
        let v = bbox_iou(&bx(0, 0, 2, 2), &bx(1, 1, 2, 2));
        assert!((v - raster_iou(bx(0, 0, 2, 2), bx(1, 1, 2, 2))).abs() < 1e-12);
        assert!((v - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn mask_iou_examples() {
        let a = BinaryMask::from_box(4, 4, bx(0, 0, 2, 2));
        let b = BinaryMask::from_box(4, 4, bx(1, 1, 2, 2));
        let c = BinaryMask::from_box(4, 4, bx(2, 2, 2, 2));
        assert_eq!(mask_iou(&a, &a).unwrap(), 1.0);
        assert_eq!(mask_iou(&a, &c).unwrap(), 0.0);
        assert!((mask_iou(&a, &b).unwrap() - 1.0 / 7.0).abs() < 1e-12);
        let e = BinaryMask::empty(4, 4);
        assert_eq!(mask_iou(&e, &e).unwrap(), 0.0);
        assert!(matches!(
            mask_iou(&a, &BinaryMask::empty(3, 4)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn bbox_from_mask_examples() {
        let mut m = BinaryMask::empty(8, 8);
        m.set(3, 4, true);
        assert_eq!(bbox_from_mask(&m).unwrap(), bx(3, 4, 1, 1));
        assert_eq!(bbox_from_mask(&BinaryMask::full(5, 7)).unwrap(), bx(0, 0, 5, 7));
        let mut m = BinaryMask::empty(8, 8);
        m.set(1, 1, true);
        m.set(4, 2, true);
        assert_eq!(bbox_from_mask(&m).unwrap(), bx(1, 1, 4, 2));
        assert!(matches!(
            bbox_from_mask(&BinaryMask::empty(3, 3)),
            Err(Error::EmptyMask)
        ));
    }

    #[test]
    fn rasters_reject_bad_lengths() {
        assert!(IntensityImage::new(2, 2, vec![0; 3]).is_err());
        assert!(DepthMap::new(0, 2, vec![]).is_err());
        assert!(BoundingBox::new(0, 0, 0, 1).is_err());
    }

    #[test]
    fn instance_rejects_unknown_class() {
        let m = BinaryMask::full(2, 2);
        assert!(LabeledInstance::from_mask(4, m.clone(), None).is_err());
        let inst = LabeledInstance::from_mask(1, m, Some(0.5)).unwrap();
        assert_eq!(inst.bbox, bx(0, 0, 2, 2));
    }
}
