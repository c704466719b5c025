//! Dense row-major tensors. Batched activations use `[batch, channels, len]`.

use crate::error::{invalid_input, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RealTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl RealTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(invalid_input!(
                "shape {shape:?} holds {len} values, got {}",
                data.len()
            ));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(invalid_input!("tensor entry {i} is not finite"));
        }
        Ok(Self { shape, data })
    }

    /// Builds without the finiteness scan; shapes must already agree.
    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self> {
        if shape.iter().product::<usize>() != self.data.len() {
            return Err(invalid_input!("cannot reshape {:?} to {shape:?}", self.shape));
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Complex tensor stored as parallel real and imaginary arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor {
    shape: Vec<usize>,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl ComplexTensor {
    pub fn new(shape: Vec<usize>, re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if re.len() != len || im.len() != len {
            return Err(invalid_input!(
                "shape {shape:?} holds {len} values, got re={} im={}",
                re.len(),
                im.len()
            ));
        }
        if re.iter().chain(&im).any(|v| !v.is_finite()) {
            return Err(invalid_input!("complex tensor has non-finite entries"));
        }
        Ok(Self { shape, re, im })
    }

    pub(crate) fn from_parts(shape: Vec<usize>, re: Vec<f64>, im: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), re.len());
        debug_assert_eq!(re.len(), im.len());
        Self { shape, re, im }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            re: vec![0.0; len],
            im: vec![0.0; len],
        }
    }

    pub fn from_complex(shape: Vec<usize>, values: &[num_complex::Complex64]) -> Result<Self> {
        Self::new(
            shape,
            values.iter().map(|c| c.re).collect(),
            values.iter().map(|c| c.im).collect(),
        )
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn re(&self) -> &[f64] {
        &self.re
    }

    pub fn im(&self) -> &[f64] {
        &self.im
    }

    pub fn re_mut(&mut self) -> &mut [f64] {
        &mut self.re
    }

    pub fn im_mut(&mut self) -> &mut [f64] {
        &mut self.im
    }

    pub fn parts_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.re, &mut self.im)
    }

    pub fn get(&self, i: usize) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re[i], self.im[i])
    }

    pub fn set(&mut self, i: usize, v: num_complex::Complex64) {
        self.re[i] = v.re;
        self.im[i] = v.im;
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.re.iter().chain(&self.im).all(|v| v.is_finite())
    }

    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self> {
        if shape.iter().product::<usize>() != self.re.len() {
            return Err(invalid_input!("cannot reshape {:?} to {shape:?}", self.shape));
        }
        self.shape = shape;
        Ok(self)
    }

    /// Multiplies every entry by `factor`.
    pub fn scale(&mut self, factor: num_complex::Complex64) {
        for (r, i) in self.re.iter_mut().zip(self.im.iter_mut()) {
            let v = num_complex::Complex64::new(*r, *i) * factor;
            *r = v.re;
            *i = v.im;
        }
    }
}
