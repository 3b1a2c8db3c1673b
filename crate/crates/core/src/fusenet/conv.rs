use rand::Rng;

use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

/// 2-D convolution with square odd kernel, zero padding `(k - 1) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer<T = f32> {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    /// `[out, in, k, k]` row-major.
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

/// Parameter gradients of a [`ConvLayer`], same layout as the layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrad<T = f32> {
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> ConvGrad<T> {
    pub fn zeros_like(layer: &ConvLayer<T>) -> Self {
        Self {
            weights: vec![T::zero(); layer.weights.len()],
            bias: vec![T::zero(); layer.bias.len()],
        }
    }

    pub fn add(&mut self, other: &ConvGrad<T>) {
        for (a, &b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, &b) in self.bias.iter_mut().zip(&other.bias) {
            *a += b;
        }
    }
}

fn out_size(n: usize, stride: usize) -> usize {
    n.div_ceil(stride)
}

/// Output columns `ox` for which `ox * stride + k - pad` lands inside `0..len`.
fn valid_range(len: usize, out_len: usize, stride: usize, k: usize, pad: usize) -> (usize, usize) {
    let lo = if k >= pad { 0 } else { (pad - k).div_ceil(stride) };
    let hi = if len + pad <= k {
        0
    } else {
        ((len - 1 + pad - k) / stride + 1).min(out_len)
    };
    (lo, hi.max(lo))
}

impl<T: Real> ConvLayer<T> {
    pub fn zeros(in_channels: usize, out_channels: usize, kernel: usize, stride: usize) -> Result<Self> {
        if kernel % 2 == 0 || stride == 0 || in_channels == 0 || out_channels == 0 {
            return Err(Error::InvalidArgument(format!(
                "conv {in_channels}->{out_channels} kernel {kernel} stride {stride}"
            )));
        }
        Ok(Self {
            in_channels,
            out_channels,
            kernel,
            stride,
            weights: vec![T::zero(); out_channels * in_channels * kernel * kernel],
            bias: vec![T::zero(); out_channels],
        })
    }

    /// Uniform initialisation in `±sqrt(1 / fan_in)`, bias zero.
    pub fn init_uniform<R: Rng>(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut layer = Self::zeros(in_channels, out_channels, kernel, stride)?;
        let bound = (1.0 / (in_channels * kernel * kernel) as f64).sqrt();
        for w in &mut layer.weights {
            *w = T::of(rng.gen_range(-bound..bound));
        }
        Ok(layer)
    }

    pub fn padding(&self) -> usize {
        (self.kernel - 1) / 2
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn weight_index(&self, o: usize, i: usize, ky: usize, kx: usize) -> usize {
        ((o * self.in_channels + i) * self.kernel + ky) * self.kernel + kx
    }

    pub fn output_shape(&self, input: &Tensor<T>) -> [usize; 3] {
        [
            self.out_channels,
            out_size(input.height, self.stride),
            out_size(input.width, self.stride),
        ]
    }

    /// Kernels mirrored left-right.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        let k = self.kernel;
        for row in out.weights.chunks_mut(k) {
            row.reverse();
        }
        debug_assert_eq!(out.weights.len() % k, 0);
        out
    }

    pub fn cast<U: Real>(&self) -> ConvLayer<U> {
        ConvLayer {
            in_channels: self.in_channels,
            out_channels: self.out_channels,
            kernel: self.kernel,
            stride: self.stride,
            weights: self.weights.iter().map(|v| U::of(v.as_f64())).collect(),
            bias: self.bias.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }

    /// `param -= lr * grad`.
    pub fn apply_gradient(&mut self, grad: &ConvGrad<T>, lr: T) {
        for (w, &g) in self.weights.iter_mut().zip(&grad.weights) {
            *w -= lr * g;
        }
        for (b, &g) in self.bias.iter_mut().zip(&grad.bias) {
            *b -= lr * g;
        }
    }

    fn check_input(&self, input: &Tensor<T>) -> Result<()> {
        if input.channels != self.in_channels {
            return Err(Error::ShapeMismatch(format!(
                "conv expects {} input channels, got {}",
                self.in_channels, input.channels
            )));
        }
        Ok(())
    }
}

/// Zero-padded cross-correlation.
pub fn conv2d<T: Real>(input: &Tensor<T>, layer: &ConvLayer<T>) -> Result<Tensor<T>> {
    layer.check_input(input)?;
    let [oc, oh, ow] = layer.output_shape(input);
    let (k, s, p) = (layer.kernel, layer.stride, layer.padding());
    let (ih, iw) = (input.height, input.width);
    let mut out = Tensor::zeros(oc, oh, ow);
    for o in 0..oc {
        let dst = out.plane_mut(o);
        dst.fill(layer.bias[o]);
        for i in 0..layer.in_channels {
            let src = input.plane(i);
            for ky in 0..k {
                let (oy_lo, oy_hi) = valid_range(ih, oh, s, ky, p);
                for kx in 0..k {
                    let w = layer.weights[layer.weight_index(o, i, ky, kx)];
                    if w == T::zero() {
                        continue;
                    }
                    let (ox_lo, ox_hi) = valid_range(iw, ow, s, kx, p);
                    for oy in oy_lo..oy_hi {
                        let iy = oy * s + ky - p;
                        let srow = &src[iy * iw..(iy + 1) * iw];
                        let drow = &mut dst[oy * ow..(oy + 1) * ow];
                        if s == 1 {
                            let off = ox_lo + kx - p;
                            let n = ox_hi - ox_lo;
                            for (d, &v) in drow[ox_lo..ox_hi].iter_mut().zip(&srow[off..off + n]) {
                                *d += w * v;
                            }
                        } else {
                            for ox in ox_lo..ox_hi {
                                drow[ox] += w * srow[ox * s + kx - p];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Backward pass of [`conv2d`]. Returns the input gradient (when
/// `want_input` is set) and the parameter gradients.
pub fn conv2d_backward<T: Real>(
    input: &Tensor<T>,
    layer: &ConvLayer<T>,
    grad_out: &Tensor<T>,
    want_input: bool,
) -> Result<(Option<Tensor<T>>, ConvGrad<T>)> {
    layer.check_input(input)?;
    let [oc, oh, ow] = layer.output_shape(input);
    if grad_out.shape() != [oc, oh, ow] {
        return Err(Error::ShapeMismatch(format!(
            "output gradient {:?} does not match conv output {:?}",
            grad_out.shape(),
            [oc, oh, ow]
        )));
    }
    let (k, s, p) = (layer.kernel, layer.stride, layer.padding());
    let (ih, iw) = (input.height, input.width);
    let mut grad = ConvGrad::zeros_like(layer);
    let mut gin = want_input.then(|| Tensor::zeros(input.channels, ih, iw));
    for o in 0..oc {
        let go = grad_out.plane(o);
        grad.bias[o] = go.iter().copied().sum();
        for i in 0..layer.in_channels {
            let src = input.plane(i);
            for ky in 0..k {
                let (oy_lo, oy_hi) = valid_range(ih, oh, s, ky, p);
                for kx in 0..k {
                    let wi = layer.weight_index(o, i, ky, kx);
                    let w = layer.weights[wi];
                    let (ox_lo, ox_hi) = valid_range(iw, ow, s, kx, p);
                    let mut acc = T::zero();
                    for oy in oy_lo..oy_hi {
                        let iy = oy * s + ky - p;
                        let srow = &src[iy * iw..(iy + 1) * iw];
                        let grow = &go[oy * ow..(oy + 1) * ow];
                        if s == 1 {
                            let off = ox_lo + kx - p;
                            let n = ox_hi - ox_lo;
                            for (&g, &v) in grow[ox_lo..ox_hi].iter().zip(&srow[off..off + n]) {
                                acc += g * v;
                            }
                        } else {
                            for ox in ox_lo..ox_hi {
                                acc += grow[ox] * srow[ox * s + kx - p];
                            }
                        }
                        if let Some(gin) = gin.as_mut() {
                            let dst = &mut gin.plane_mut(i)[iy * iw..(iy + 1) * iw];
                            if s == 1 {
                                let off = ox_lo + kx - p;
                                let n = ox_hi - ox_lo;
                                for (d, &g) in dst[off..off + n].iter_mut().zip(&grow[ox_lo..ox_hi]) {
                                    *d += w * g;
                                }
                            } else {
                                for ox in ox_lo..ox_hi {
                                    dst[ox * s + kx - p] += w * grow[ox];
                                }
                            }
                        }
                    }
                    grad.weights[wi] = acc;
                }
            }
        }
    }
    Ok((gin, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn naive(input: &Tensor<f64>, layer: &ConvLayer<f64>) -> Tensor<f64> {
        let [oc, oh, ow] = layer.output_shape(input);
        let p = layer.padding() as isize;
        let mut out = Tensor::zeros(oc, oh, ow);
        for o in 0..oc {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = layer.bias[o];
                    for i in 0..layer.in_channels {
                        for ky in 0..layer.kernel {
                            for kx in 0..layer.kernel {
                                let iy = (oy * layer.stride + ky) as isize - p;
                                let ix = (ox * layer.stride + kx) as isize - p;
                                if iy >= 0 && ix >= 0 && (iy as usize) < input.height && (ix as usize) < input.width {
                                    acc += layer.weights[layer.weight_index(o, i, ky, kx)]
                                        * input.at(i, iy as usize, ix as usize);
                                }
                            }
                        }
                    }
                    out.data[(o * oh + oy) * ow + ox] = acc;
                }
            }
        }
        out
    }

    fn random_input(rng: &mut ChaCha8Rng, c: usize, h: usize, w: usize) -> Tensor<f64> {
        Tensor::from_vec(c, h, w, (0..c * h * w).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn identity_kernel() {
        let mut layer = ConvLayer::<f32>::zeros(1, 1, 3, 1).unwrap();
        layer.weights[4] = 1.0;
        let input = Tensor::from_vec(1, 3, 4, (0..12).map(|v| v as f32).collect()).unwrap();
        assert_eq!(conv2d(&input, &layer).unwrap(), input);
    }

    #[test]
    fn zero_weights_give_bias() {
        let mut layer = ConvLayer::<f32>::zeros(2, 3, 3, 2).unwrap();
        layer.bias = vec![0.5, -1.0, 2.0];
        let out = conv2d(&Tensor::zeros(2, 5, 5), &layer).unwrap();
        assert_eq!(out.shape(), [3, 3, 3]);
        assert!(out.plane(1).iter().all(|&v| v == -1.0));
    }

    #[test]
    fn ones_kernel_on_ones() {
        let mut layer = ConvLayer::<f32>::zeros(1, 1, 3, 1).unwrap();
        layer.weights.fill(1.0);
        let out = conv2d(&Tensor::from_vec(1, 3, 3, vec![1.0; 9]).unwrap(), &layer).unwrap();
        assert_eq!(out.at(0, 1, 1), 9.0);
        assert_eq!(out.at(0, 0, 0), 4.0);
        assert_eq!(out.at(0, 2, 2), 4.0);
        assert_eq!(out.at(0, 0, 1), 6.0);
    }

    #[test]
    fn matches_naive_for_strides() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (stride, h, w) in [(1, 6, 7), (2, 7, 8), (2, 6, 5), (3, 5, 9)] {
            let layer = ConvLayer::<f64>::init_uniform(3, 4, 3, stride, &mut rng).unwrap();
            let input = random_input(&mut rng, 3, h, w);
            let fast = conv2d(&input, &layer).unwrap();
            let slow = naive(&input, &layer);
            assert_eq!(fast.shape(), slow.shape());
            for (a, b) in fast.data.iter().zip(&slow.data) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_wrong_channels() {
        let layer = ConvLayer::<f32>::zeros(2, 1, 3, 1).unwrap();
        assert!(conv2d(&Tensor::zeros(1, 4, 4), &layer).is_err());
        assert!(ConvLayer::<f32>::zeros(1, 1, 2, 1).is_err());
    }

    #[test]
    fn backward_is_adjoint_of_forward() {
        // For the linear map x -> conv(x) - b: <conv(x) - b, g> == <x, dX>, and
        // the weight gradient equals the same pairing with respect to w.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for stride in [1, 2] {
            let layer = ConvLayer::<f64>::init_uniform(2, 3, 3, stride, &mut rng).unwrap();
            let x = random_input(&mut rng, 2, 7, 6);
            let out = conv2d(&x, &layer).unwrap();
            let g = random_input(&mut rng, out.channels, out.height, out.width);
            let (gx, gw) = conv2d_backward(&x, &layer, &g, true).unwrap();
            let gx = gx.unwrap();
            let lhs: f64 = out
                .data
                .iter()
                .enumerate()
                .map(|(idx, v)| (v - layer.bias[idx / (out.height * out.width)]) * g.data[idx])
                .sum();
            let rhs_x: f64 = x.data.iter().zip(&gx.data).map(|(a, b)| a * b).sum();
            let rhs_w: f64 = layer.weights.iter().zip(&gw.weights).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs_x).abs() < 1e-10);
            assert!((lhs - rhs_w).abs() < 1e-10);
            for o in 0..out.channels {
                let s: f64 = g.plane(o).iter().sum();
                assert!((gw.bias[o] - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mirrored_kernel_flips_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let layer = ConvLayer::<f64>::init_uniform(2, 2, 3, 2, &mut rng).unwrap();
        let x = random_input(&mut rng, 2, 5, 9);
        let a = conv2d(&x.flip_horizontal(), &layer.mirrored()).unwrap();
        let b = conv2d(&x, &layer).unwrap().flip_horizontal();
        for (u, v) in a.data.iter().zip(&b.data) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}
