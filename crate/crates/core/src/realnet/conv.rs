use crate::error::{invalid_input, Result};
use crate::realnet::init_xavier;
use crate::tensor::RealTensor;
use rand::Rng;

/// Zero padding applied to both ends of the length axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Output length `ceil(len / stride)`; any odd pad goes on the right.
    Same,
    Valid,
    Explicit { left: usize, right: usize },
}

impl Padding {
    /// `(left, right, output_len)` for a kernel `width` sliding with `stride`.
    pub fn resolve(&self, width: usize, stride: usize, len: usize) -> Result<(usize, usize, usize)> {
        if stride == 0 || width == 0 {
            return Err(invalid_input!("width and stride must be >= 1"));
        }
        let (left, right) = match *self {
            Padding::Same => {
                let out = len.div_ceil(stride);
                let total = ((out.saturating_sub(1)) * stride + width).saturating_sub(len);
                (total / 2, total - total / 2)
            }
            Padding::Valid => (0, 0),
            Padding::Explicit { left, right } => (left, right),
        };
        let padded = len + left + right;
        if padded < width {
            return Err(invalid_input!("input of length {len} shorter than kernel width {width}"));
        }
        Ok((left, right, (padded - width) / stride + 1))
    }

    pub fn label(&self) -> String {
        match self {
            Padding::Same => "same".into(),
            Padding::Valid => "valid".into(),
            Padding::Explicit { left, right } => format!("{left}:{right}"),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "same" => Some(Padding::Same),
            "valid" => Some(Padding::Valid),
            other => {
                let (l, r) = other.split_once(':')?;
                Some(Padding::Explicit {
                    left: l.trim().parse().ok()?,
                    right: r.trim().parse().ok()?,
                })
            }
        }
    }
}

/// Real 1-D convolution (cross-correlation, no kernel flip).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    /// `[out, in, width]`
    pub weights: RealTensor,
    /// `[out]`
    pub biases: RealTensor,
    pub stride: usize,
    pub padding: Padding,
}

pub struct ConvGrads {
    pub weights: RealTensor,
    pub biases: RealTensor,
    pub input: RealTensor,
}

impl ConvLayer {
    pub fn new(weights: RealTensor, biases: RealTensor, stride: usize, padding: Padding) -> Result<Self> {
        let shape = weights.shape();
        if shape.len() != 3 || shape.contains(&0) {
            return Err(invalid_input!("conv weights must be a non-empty [out, in, width], got {shape:?}"));
        }
        if biases.shape() != [shape[0]] {
            return Err(invalid_input!("conv bias shape {:?} does not match {} outputs", biases.shape(), shape[0]));
        }
        if stride == 0 {
            return Err(invalid_input!("stride must be >= 1"));
        }
        Ok(Self {
            weights,
            biases,
            stride,
            padding,
        })
    }

    /// Xavier-uniform weights (fans `in*width`, `out*width`), zero biases.
    pub fn init(
        in_channels: usize,
        out_channels: usize,
        width: usize,
        stride: usize,
        padding: Padding,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let weights = init_xavier(
            &[out_channels, in_channels, width],
            in_channels * width,
            out_channels * width,
            rng,
        )?;
        Self::new(weights, RealTensor::zeros(&[out_channels]), stride, padding)
    }

    pub fn out_channels(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn width(&self) -> usize {
        self.weights.shape()[2]
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    pub fn output_len(&self, input_len: usize) -> Result<usize> {
        Ok(self.padding.resolve(self.width(), self.stride, input_len)?.2)
    }

    fn geometry(&self, input: &RealTensor) -> Result<Geometry> {
        let (batch, len) = match input.shape() {
            &[b, c, l] if c == self.in_channels() => (b, l),
            other => {
                return Err(invalid_input!(
                    "conv expects [batch, {}, len], got {other:?}",
                    self.in_channels()
                ))
            }
        };
        let (left, _, out_len) = self.padding.resolve(self.width(), self.stride, len)?;
        Ok(Geometry {
            batch,
            len,
            left,
            out_len,
            in_ch: self.in_channels(),
            width: self.width(),
            stride: self.stride,
        })
    }

    pub fn forward(&self, input: &RealTensor) -> Result<RealTensor> {
        let g = self.geometry(input)?;
        let out_ch = self.out_channels();
        let rows = g.in_ch * g.width;
        let mut cols = vec![0.0; rows * g.out_len];
        let mut out = vec![0.0; g.batch * out_ch * g.out_len];

        for b in 0..g.batch {
            let sample = &input.data()[b * g.in_ch * g.len..(b + 1) * g.in_ch * g.len];
            g.im2col(sample, &mut cols);
            let dst = &mut out[b * out_ch * g.out_len..(b + 1) * out_ch * g.out_len];
            for (o, row) in dst.chunks_mut(g.out_len).enumerate() {
                row.fill(self.biases.data()[o]);
            }
            // dst[out, L] += W[out, rows] * cols[rows, L]
            unsafe {
                matrixmultiply::dgemm(
                    out_ch,
                    rows,
                    g.out_len,
                    1.0,
                    self.weights.data().as_ptr(),
                    rows as isize,
                    1,
                    cols.as_ptr(),
                    g.out_len as isize,
                    1,
                    1.0,
                    dst.as_mut_ptr(),
                    g.out_len as isize,
                    1,
                );
            }
        }
        Ok(RealTensor::from_parts(vec![g.batch, out_ch, g.out_len], out))
    }

    pub fn backward(&self, input: &RealTensor, grad_out: &RealTensor) -> Result<ConvGrads> {
        let g = self.geometry(input)?;
        let out_ch = self.out_channels();
        if grad_out.shape() != [g.batch, out_ch, g.out_len] {
            return Err(invalid_input!(
                "conv upstream gradient must be {:?}, got {:?}",
                [g.batch, out_ch, g.out_len],
                grad_out.shape()
            ));
        }
        let rows = g.in_ch * g.width;
        let mut cols = vec![0.0; rows * g.out_len];
        let mut dcols = vec![0.0; rows * g.out_len];
        let mut dw = vec![0.0; self.weights.len()];
        let mut db = vec![0.0; out_ch];
        let mut din = vec![0.0; input.len()];

        for b in 0..g.batch {
            let sample = &input.data()[b * g.in_ch * g.len..(b + 1) * g.in_ch * g.len];
            g.im2col(sample, &mut cols);
            let dout = &grad_out.data()[b * out_ch * g.out_len..(b + 1) * out_ch * g.out_len];
            for (o, row) in dout.chunks(g.out_len).enumerate() {
                db[o] += row.iter().sum::<f64>();
            }
            unsafe {
                // dW[out, rows] += dout[out, L] * cols^T[L, rows]
                matrixmultiply::dgemm(
                    out_ch,
                    g.out_len,
                    rows,
                    1.0,
                    dout.as_ptr(),
                    g.out_len as isize,
                    1,
                    cols.as_ptr(),
                    1,
                    g.out_len as isize,
                    1.0,
                    dw.as_mut_ptr(),
                    rows as isize,
                    1,
                );
                // dcols[rows, L] = W^T[rows, out] * dout[out, L]
                matrixmultiply::dgemm(
                    rows,
                    out_ch,
                    g.out_len,
                    1.0,
                    self.weights.data().as_ptr(),
                    1,
                    rows as isize,
                    dout.as_ptr(),
                    g.out_len as isize,
                    1,
                    0.0,
                    dcols.as_mut_ptr(),
                    g.out_len as isize,
                    1,
                );
            }
            let dsample = &mut din[b * g.in_ch * g.len..(b + 1) * g.in_ch * g.len];
            g.col2im(&dcols, dsample);
        }

        Ok(ConvGrads {
            weights: RealTensor::from_parts(self.weights.shape().to_vec(), dw),
            biases: RealTensor::from_parts(vec![out_ch], db),
            input: RealTensor::from_parts(input.shape().to_vec(), din),
        })
    }
}

struct Geometry {
    batch: usize,
    len: usize,
    left: usize,
    out_len: usize,
    in_ch: usize,
    width: usize,
    stride: usize,
}

impl Geometry {
    #[inline]
    fn source(&self, i: usize, j: usize) -> Option<usize> {
        let pos = (i * self.stride + j) as isize - self.left as isize;
        (pos >= 0 && (pos as usize) < self.len).then_some(pos as usize)
    }

    /// `cols[(c*width + j) * out_len + i] = x[c, i*stride + j - left]`
    fn im2col(&self, sample: &[f64], cols: &mut [f64]) {
        for c in 0..self.in_ch {
            let src = &sample[c * self.len..(c + 1) * self.len];
            for j in 0..self.width {
                let row = &mut cols[(c * self.width + j) * self.out_len..][..self.out_len];
                for (i, v) in row.iter_mut().enumerate() {
                    *v = self.source(i, j).map_or(0.0, |p| src[p]);
                }
            }
        }
    }

    fn col2im(&self, dcols: &[f64], dsample: &mut [f64]) {
        for c in 0..self.in_ch {
            let dst = &mut dsample[c * self.len..(c + 1) * self.len];
            for j in 0..self.width {
                let row = &dcols[(c * self.width + j) * self.out_len..][..self.out_len];
                for (i, v) in row.iter().enumerate() {
                    if let Some(p) = self.source(i, j) {
                        dst[p] += v;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn padding_geometry() {
        assert_eq!(Padding::Same.resolve(5, 1, 128).unwrap(), (2, 2, 128));
        assert_eq!(Padding::Same.resolve(2, 1, 90).unwrap(), (0, 1, 90));
        assert_eq!(Padding::Same.resolve(2, 2, 90).unwrap(), (0, 0, 45));
        assert_eq!(Padding::Same.resolve(2, 2, 151).unwrap(), (0, 1, 76));
        assert_eq!(Padding::Valid.resolve(3, 1, 10).unwrap(), (0, 0, 8));
        assert!(Padding::Valid.resolve(5, 1, 3).is_err());
        assert_eq!(Padding::parse("1:2"), Some(Padding::Explicit { left: 1, right: 2 }));
    }

    #[test]
    fn identity_kernel_copies_interior() {
        let w = RealTensor::new(vec![1, 1, 3], vec![0.0, 1.0, 0.0]).unwrap();
        let layer = ConvLayer::new(w, RealTensor::zeros(&[1]), 1, Padding::Valid).unwrap();
        let x = RealTensor::new(vec![1, 1, 5], vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(layer.forward(&x).unwrap().data(), &[2.0, 3.0, 4.0]);
    }

    #[test]
    fn table_parameter_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(ConvLayer::init(8, 16, 5, 1, Padding::Same, &mut rng).unwrap().param_count(), 656);
        assert_eq!(ConvLayer::init(16, 32, 5, 1, Padding::Same, &mut rng).unwrap().param_count(), 2592);
        assert_eq!(ConvLayer::init(1, 32, 5, 1, Padding::Same, &mut rng).unwrap().param_count(), 192);
        assert_eq!(ConvLayer::init(32, 32, 5, 1, Padding::Same, &mut rng).unwrap().param_count(), 5152);
    }

    #[test]
    fn rejects_channel_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let layer = ConvLayer::init(2, 3, 3, 1, Padding::Same, &mut rng).unwrap();
        assert!(layer.forward(&RealTensor::zeros(&[1, 1, 8])).is_err());
    }
}
