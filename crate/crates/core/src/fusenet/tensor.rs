use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

use crate::error::{Error, Result};

/// Scalar type the network runs in: `f32` for training, `f64` for gradient checks.
pub trait Real: Float + FromPrimitive + NumAssign + Sum + Debug + Default + Send + Sync + 'static {
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("representable")
    }
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Dense `[channels, height, width]` array, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T = f32> {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![T::zero(); channels * height * width],
        }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::ShapeMismatch(format!(
                "{} values for shape [{channels}, {height}, {width}]",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.channels, self.height, self.width]
    }

    pub fn plane(&self, c: usize) -> &[T] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [T] {
        let n = self.height * self.width;
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn at(&self, c: usize, y: usize, x: usize) -> T {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }

    /// Horizontal mirror of every plane.
    pub fn flip_horizontal(&self) -> Self {
        let mut out = self.clone();
        for row in out.data.chunks_mut(self.width) {
            row.reverse();
        }
        out
    }

    pub fn add_assign(&mut self, other: &Tensor<T>) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

/// Stacks `a` then `b` along the channel axis.
pub fn concat_channels<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    if (a.height, a.width) != (b.height, b.width) {
        return Err(Error::ShapeMismatch(format!(
            "cannot concatenate {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let mut data = Vec::with_capacity(a.data.len() + b.data.len());
    data.extend_from_slice(&a.data);
    data.extend_from_slice(&b.data);
    Tensor::from_vec(a.channels + b.channels, a.height, a.width, data)
}

/// Inverse of [`concat_channels`]: the first `first` channels, then the rest.
pub fn split_channels<T: Real>(t: &Tensor<T>, first: usize) -> (Tensor<T>, Tensor<T>) {
    let n = first * t.height * t.width;
    (
        Tensor {
            channels: first,
            height: t.height,
            width: t.width,
            data: t.data[..n].to_vec(),
        },
        Tensor {
            channels: t.channels - first,
            height: t.height,
            width: t.width,
            data: t.data[n..].to_vec(),
        },
    )
}

pub fn relu<T: Real>(t: &mut Tensor<T>) {
    for v in &mut t.data {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
}

/// Zeroes gradient entries where the activation was clipped.
pub fn relu_backward<T: Real>(grad: &mut Tensor<T>, activation: &Tensor<T>) {
    for (g, &a) in grad.data.iter_mut().zip(&activation.data) {
        if a <= T::zero() {
            *g = T::zero();
        }
    }
}

fn source_index(i: usize, out: usize, src: usize) -> usize {
    // nearest source cell by centre; exact integer ties cannot occur for odd sizes
    (((2 * i + 1) * src) / (2 * out)).min(src - 1)
}

/// Nearest-neighbour resize to `height × width`. For sizes that are exact
/// multiples this is plain block replication.
pub fn upsample_nearest<T: Real>(t: &Tensor<T>, height: usize, width: usize) -> Tensor<T> {
    let mut out = Tensor::zeros(t.channels, height, width);
    let xs: Vec<usize> = (0..width).map(|x| source_index(x, width, t.width)).collect();
    for c in 0..t.channels {
        let src = t.plane(c);
        let dst = out.plane_mut(c);
        for y in 0..height {
            let sy = source_index(y, height, t.height);
            let srow = &src[sy * t.width..(sy + 1) * t.width];
            for (d, &sx) in dst[y * width..(y + 1) * width].iter_mut().zip(&xs) {
                *d = srow[sx];
            }
        }
    }
    out
}

/// Adjoint of [`upsample_nearest`]: sums gradients back onto source cells.
pub fn upsample_nearest_backward<T: Real>(grad: &Tensor<T>, src_height: usize, src_width: usize) -> Tensor<T> {
    let mut out = Tensor::zeros(grad.channels, src_height, src_width);
    let xs: Vec<usize> = (0..grad.width).map(|x| source_index(x, grad.width, src_width)).collect();
    for c in 0..grad.channels {
        let g = grad.plane(c);
        let dst = out.plane_mut(c);
        for y in 0..grad.height {
            let sy = source_index(y, grad.height, src_height);
            for (x, &sx) in xs.iter().enumerate() {
                dst[sy * src_width + sx] += g[y * grad.width + x];
            }
        }
    }
    out
}

/// Per-pixel softmax over channels.
pub fn softmax<T: Real>(logits: &Tensor<T>) -> Tensor<T> {
    let n = logits.height * logits.width;
    let mut out = logits.clone();
    for p in 0..n {
        let mut max = T::neg_infinity();
        for c in 0..logits.channels {
            max = max.max(logits.data[c * n + p]);
        }
        let mut sum = T::zero();
        for c in 0..logits.channels {
            let e = (logits.data[c * n + p] - max).exp();
            out.data[c * n + p] = e;
            sum += e;
        }
        for c in 0..logits.channels {
            out.data[c * n + p] /= sum;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upsample_is_block_replication_for_multiples() {
        let t = Tensor::from_vec(1, 2, 2, vec![1.0f32, 2.0, 3.0, 4.0]).unwrap();
        let u = upsample_nearest(&t, 8, 8);
        for y in 0..8 {
            for x in 0..8 {
                assert_eq!(u.at(0, y, x), t.at(0, y / 4, x / 4));
            }
        }
    }

    #[test]
    fn upsample_backward_is_adjoint() {
        // <up(a), g> == <a, up^T(g)>
        let a = Tensor::from_vec(2, 3, 5, (0..30).map(|v| v as f64 * 0.1).collect()).unwrap();
        let g = Tensor::from_vec(2, 11, 17, (0..374).map(|v| ((v * 7) % 13) as f64 - 6.0).collect()).unwrap();
        let lhs: f64 = upsample_nearest(&a, 11, 17).data.iter().zip(&g.data).map(|(x, y)| x * y).sum();
        let back = upsample_nearest_backward(&g, 3, 5);
        let rhs: f64 = a.data.iter().zip(&back.data).map(|(x, y)| x * y).sum();
        assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn upsample_commutes_with_flip_on_odd_sizes() {
        let a = Tensor::from_vec(1, 1, 5, vec![1.0f64, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let lhs = upsample_nearest(&a.flip_horizontal(), 1, 17);
        let rhs = upsample_nearest(&a, 1, 17).flip_horizontal();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn softmax_sums_to_one() {
        let t = Tensor::from_vec(3, 1, 2, vec![1.0f32, -50.0, 2.0, 0.0, 80.0, 1.0]).unwrap();
        let s = softmax(&t);
        for p in 0..2 {
            let sum: f32 = (0..3).map(|c| s.data[c * 2 + p]).sum();
            assert!((sum - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn concat_split_roundtrip() {
        let a = Tensor::from_vec(1, 1, 2, vec![1.0f32, 2.0]).unwrap();
        let b = Tensor::from_vec(2, 1, 2, vec![3.0f32, 4.0, 5.0, 6.0]).unwrap();
        let c = concat_channels(&a, &b).unwrap();
        assert_eq!(c.shape(), [3, 1, 2]);
        assert_eq!(split_channels(&c, 1), (a.clone(), b));
        assert!(concat_channels(&a, &Tensor::zeros(1, 2, 2)).is_err());
    }
}
