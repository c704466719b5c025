//! Complex-valued 1-D convolution with modulus activation.
//!
//! Forward: `U_i = Z_i^T k + b` (plain bilinear product, no conjugation of the
//! window) and `Y_i = |U_i|`. Backward returns gradients with respect to the
//! conjugated parameters, using `d|u|/du* = u / (2|u|)`:
//!
//! ```text
//! dL/dk* = 1/2 sum_i (dL/dY_i) (U_i / Y_i) conj(Z_i)
//! dL/db* = 1/2 sum_i (dL/dY_i) (U_i / Y_i)
//! ```
//!
//! The `1/Y_i` factor is required by differentiating the modulus; the commonly
//! printed form without it is off by that factor, which the finite-difference
//! tests pin down. For a real loss the steepest-descent step along a real and
//! imaginary part is `2 Re(dL/dk*)` and `2 Im(dL/dk*)` respectively.

use crate::error::{invalid_input, Error, Result};
use crate::realnet::{AdamHyper, Padding};
use crate::tensor::{ComplexTensor, RealTensor};
use rand::Rng;
use std::f64::consts::PI;

/// Guard inside the modulus so `U = 0` never divides by zero in backward.
pub const MODULUS_GUARD: f64 = 1e-12;

/// `sqrt(re^2 + im^2 + guard^2)` elementwise, same shape as `u`.
pub fn modulus(u: &ComplexTensor) -> RealTensor {
    let data = u
        .re()
        .iter()
        .zip(u.im())
        .map(|(r, i)| (r * r + i * i + MODULUS_GUARD * MODULUS_GUARD).sqrt())
        .collect();
    RealTensor::from_parts(u.shape().to_vec(), data)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexConvLayer {
    /// `[out_channels, in_channels, width]`
    pub kernels: ComplexTensor,
    /// `[out_channels]`
    pub biases: ComplexTensor,
    pub stride: usize,
    pub padding: Padding,
}

impl ComplexConvLayer {
    pub fn new(kernels: ComplexTensor, biases: ComplexTensor, stride: usize, padding: Padding) -> Result<Self> {
        if kernels.shape().len() != 3 {
            return Err(invalid_input!("complex kernels must be [out, in, width], got {:?}", kernels.shape()));
        }
        let [out, inp, width] = [kernels.shape()[0], kernels.shape()[1], kernels.shape()[2]];
        if out == 0 || inp == 0 || width == 0 {
            return Err(invalid_input!("complex layer dimensions must be positive, got {:?}", kernels.shape()));
        }
        if biases.shape() != [out] {
            return Err(invalid_input!("bias shape {:?} does not match {out} output channels", biases.shape()));
        }
        if stride == 0 {
            return Err(invalid_input!("stride must be >= 1"));
        }
        Ok(Self {
            kernels,
            biases,
            stride,
            padding,
        })
    }

    /// Rayleigh-modulus, uniform-phase initialisation of kernels and biases.
    pub fn init(
        in_channels: usize,
        out_channels: usize,
        width: usize,
        stride: usize,
        padding: Padding,
        sigma: Option<f64>,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let sigma = sigma.unwrap_or_else(|| default_sigma(in_channels * width));
        let kernels = init_complex(&[out_channels, in_channels, width], sigma, rng)?;
        let biases = init_complex(&[out_channels], sigma, rng)?;
        Self::new(kernels, biases, stride, padding)
    }

    pub fn out_channels(&self) -> usize {
        self.kernels.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.kernels.shape()[1]
    }

    pub fn width(&self) -> usize {
        self.kernels.shape()[2]
    }

    pub fn output_len(&self, input_len: usize) -> Result<usize> {
        Ok(self.padding.resolve(self.width(), self.stride, input_len)?.2)
    }

    /// Real parameter count (two reals per complex weight).
    pub fn param_count(&self) -> usize {
        2 * (self.kernels.len() + self.biases.len())
    }
}

/// Variance-scaled default for the Rayleigh scale: `1 / sqrt(2 fan_in)`.
pub fn default_sigma(fan_in: usize) -> f64 {
    1.0 / ((2 * fan_in.max(1)) as f64).sqrt()
}

fn check_input(input: &ComplexTensor, layer: &ComplexConvLayer) -> Result<(usize, usize)> {
    match input.shape() {
        &[batch, channels, len] if channels == layer.in_channels() && len > 0 => Ok((batch, len)),
        other => Err(invalid_input!(
            "complex conv expects [batch, {}, len], got {other:?}",
            layer.in_channels()
        )),
    }
}

/// Pre-activation `U` and activation `Y = |U|`, both `[batch, out, out_len]`.
pub fn complex_conv_forward(input: &ComplexTensor, layer: &ComplexConvLayer) -> Result<(ComplexTensor, RealTensor)> {
    let (batch, len) = check_input(input, layer)?;
    let (out_ch, in_ch, width) = (layer.out_channels(), layer.in_channels(), layer.width());
    let (left, _, out_len) = layer.padding.resolve(width, layer.stride, len)?;

    let mut ure = vec![0.0; batch * out_ch * out_len];
    let mut uim = vec![0.0; batch * out_ch * out_len];
    let (zre, zim) = (input.re(), input.im());
    let (kre, kim) = (layer.kernels.re(), layer.kernels.im());

    for b in 0..batch {
        for o in 0..out_ch {
            let base = (b * out_ch + o) * out_len;
            let (bre, bim) = (layer.biases.re()[o], layer.biases.im()[o]);
            for i in 0..out_len {
                let (mut sr, mut si) = (bre, bim);
                let start = (i * layer.stride) as isize - left as isize;
                for c in 0..in_ch {
                    let zrow = (b * in_ch + c) * len;
                    let krow = (o * in_ch + c) * width;
                    for j in 0..width {
                        let pos = start + j as isize;
                        if pos < 0 || pos >= len as isize {
                            continue;
                        }
                        let (zr, zi) = (zre[zrow + pos as usize], zim[zrow + pos as usize]);
                        let (wr, wi) = (kre[krow + j], kim[krow + j]);
                        sr += zr * wr - zi * wi;
                        si += zr * wi + zi * wr;
                    }
                }
                ure[base + i] = sr;
                uim[base + i] = si;
            }
        }
    }

    let u = ComplexTensor::from_parts(vec![batch, out_ch, out_len], ure, uim);
    let y = modulus(&u);
    Ok((u, y))
}

/// Gradients `(dL/dk*, dL/db*)` for one forward call's tensors.
pub fn complex_conv_backward(
    input: &ComplexTensor,
    layer: &ComplexConvLayer,
    u: &ComplexTensor,
    y: &RealTensor,
    grad_y: &RealTensor,
) -> Result<(ComplexTensor, ComplexTensor)> {
    let (batch, len) = check_input(input, layer)?;
    let (out_ch, in_ch, width) = (layer.out_channels(), layer.in_channels(), layer.width());
    let (left, _, out_len) = layer.padding.resolve(width, layer.stride, len)?;
    let expected = [batch, out_ch, out_len];
    if u.shape() != expected || y.shape() != expected || grad_y.shape() != expected {
        return Err(invalid_input!(
            "backward tensors must all be {expected:?}; got U {:?}, Y {:?}, dL/dY {:?}",
            u.shape(),
            y.shape(),
            grad_y.shape()
        ));
    }

    let mut dk = ComplexTensor::zeros(layer.kernels.shape());
    let mut db = ComplexTensor::zeros(layer.biases.shape());
    let (zre, zim) = (input.re(), input.im());

    for b in 0..batch {
        for o in 0..out_ch {
            let base = (b * out_ch + o) * out_len;
            for i in 0..out_len {
                let g = grad_y.data()[base + i];
                if g == 0.0 {
                    continue;
                }
                let scale = 0.5 * g / y.data()[base + i];
                let (fr, fi) = (scale * u.re()[base + i], scale * u.im()[base + i]);
                db.re_mut()[o] += fr;
                db.im_mut()[o] += fi;

                let start = (i * layer.stride) as isize - left as isize;
                let (dkre, dkim) = dk.parts_mut();
                for c in 0..in_ch {
                    let zrow = (b * in_ch + c) * len;
                    let krow = (o * in_ch + c) * width;
                    for j in 0..width {
                        let pos = start + j as isize;
                        if pos < 0 || pos >= len as isize {
                            continue;
                        }
                        // f * conj(z)
                        let (zr, zi) = (zre[zrow + pos as usize], zim[zrow + pos as usize]);
                        dkre[krow + j] += fr * zr + fi * zi;
                        dkim[krow + j] += fi * zr - fr * zi;
                    }
                }
            }
        }
    }
    Ok((dk, db))
}

/// Adam state for complex parameters: complex first moment, real `E|g|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexAdamState {
    pub m: ComplexTensor,
    pub v: Vec<f64>,
    pub t: u64,
}

impl ComplexAdamState {
    pub fn new(shape: &[usize]) -> Self {
        let m = ComplexTensor::zeros(shape);
        let v = vec![0.0; m.len()];
        Self { m, v, t: 0 }
    }
}

/// One complex Adam update driven by the conjugate gradient `dL/dW*`.
pub fn complex_adam_step(
    params: &mut ComplexTensor,
    grad_conj: &ComplexTensor,
    state: &mut ComplexAdamState,
    hyper: &AdamHyper,
) -> Result<()> {
    if params.shape() != grad_conj.shape() || state.m.shape() != params.shape() {
        return Err(invalid_input!(
            "complex adam shapes disagree: params {:?}, grad {:?}, state {:?}",
            params.shape(),
            grad_conj.shape(),
            state.m.shape()
        ));
    }
    if !grad_conj.is_finite() {
        return Err(Error::OptimizerDivergence("non-finite complex gradient".into()));
    }

    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - hyper.beta1.powi(t);
    let c2 = 1.0 - hyper.beta2.powi(t);
    let (gre, gim) = (grad_conj.re(), grad_conj.im());
    let (mre, mim) = state.m.parts_mut();
    let (pre, pim) = params.parts_mut();

    for i in 0..pre.len() {
        mre[i] = hyper.beta1 * mre[i] + (1.0 - hyper.beta1) * gre[i];
        mim[i] = hyper.beta1 * mim[i] + (1.0 - hyper.beta1) * gim[i];
        let g2 = gre[i] * gre[i] + gim[i] * gim[i];
        state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g2;
        let denom = (state.v[i] / c2).sqrt() + hyper.eps;
        pre[i] -= hyper.lr * (mre[i] / c1) / denom;
        pim[i] -= hyper.lr * (mim[i] / c1) / denom;
    }
    Ok(())
}

/// `r e^{i theta}` with `r ~ Rayleigh(sigma)` and `theta ~ U[-pi, pi]`.
pub fn init_complex(shape: &[usize], sigma: f64, rng: &mut impl Rng) -> Result<ComplexTensor> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid_input!("rayleigh scale must be positive, got {sigma}"));
    }
    let len: usize = shape.iter().product();
    let mut re = Vec::with_capacity(len);
    let mut im = Vec::with_capacity(len);
    for _ in 0..len {
        // 1 - U[0,1) lies in (0, 1], so the log is finite.
        let u: f64 = 1.0 - rng.random::<f64>();
        let r = sigma * (-2.0 * u.ln()).sqrt();
        let theta = rng.random_range(-PI..=PI);
        re.push(r * theta.cos());
        im.push(r * theta.sin());
    }
    ComplexTensor::new(shape.to_vec(), re, im)
}
