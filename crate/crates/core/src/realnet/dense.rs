use crate::error::{invalid_input, Result};
use crate::realnet::init_xavier;
use crate::tensor::RealTensor;
use rand::Rng;

/// Affine map `y = W x + b` applied to each row of a `[batch, in]` input.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `[out, in]`
    pub weights: RealTensor,
    /// `[out]`
    pub biases: RealTensor,
}

pub struct DenseGrads {
    pub weights: RealTensor,
    pub biases: RealTensor,
    pub input: RealTensor,
}

impl DenseLayer {
    pub fn new(weights: RealTensor, biases: RealTensor) -> Result<Self> {
        let shape = weights.shape();
        if shape.len() != 2 || shape.contains(&0) {
            return Err(invalid_input!("dense weights must be a non-empty [out, in], got {shape:?}"));
        }
        if biases.shape() != [shape[0]] {
            return Err(invalid_input!("dense bias shape {:?} does not match {} outputs", biases.shape(), shape[0]));
        }
        Ok(Self { weights, biases })
    }

    pub fn init(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Result<Self> {
        let weights = init_xavier(&[outputs, inputs], inputs, outputs, rng)?;
        Self::new(weights, RealTensor::zeros(&[outputs]))
    }

    pub fn inputs(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn outputs(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    fn batch_of(&self, input: &RealTensor) -> Result<usize> {
        match input.shape() {
            &[b, n] if n == self.inputs() => Ok(b),
            other => Err(invalid_input!("dense expects [batch, {}], got {other:?}", self.inputs())),
        }
    }

    pub fn forward(&self, input: &RealTensor) -> Result<RealTensor> {
        let batch = self.batch_of(input)?;
        let (n_in, n_out) = (self.inputs(), self.outputs());
        let mut out = Vec::with_capacity(batch * n_out);
        for _ in 0..batch {
            out.extend_from_slice(self.biases.data());
        }
        // out[B, out] += x[B, in] * W^T[in, out]
        unsafe {
            matrixmultiply::dgemm(
                batch,
                n_in,
                n_out,
                1.0,
                input.data().as_ptr(),
                n_in as isize,
                1,
                self.weights.data().as_ptr(),
                1,
                n_in as isize,
                1.0,
                out.as_mut_ptr(),
                n_out as isize,
                1,
            );
        }
        Ok(RealTensor::from_parts(vec![batch, n_out], out))
    }

    pub fn backward(&self, input: &RealTensor, grad_out: &RealTensor) -> Result<DenseGrads> {
        let batch = self.batch_of(input)?;
        let (n_in, n_out) = (self.inputs(), self.outputs());
        if grad_out.shape() != [batch, n_out] {
            return Err(invalid_input!(
                "dense upstream gradient must be [{batch}, {n_out}], got {:?}",
                grad_out.shape()
            ));
        }
        let mut dw = vec![0.0; n_out * n_in];
        let mut din = vec![0.0; batch * n_in];
        let mut db = vec![0.0; n_out];
        for row in grad_out.data().chunks(n_out) {
            for (d, g) in db.iter_mut().zip(row) {
                *d += g;
            }
        }
        unsafe {
            // dW[out, in] = dY^T[out, B] * x[B, in]
            matrixmultiply::dgemm(
                n_out,
                batch,
                n_in,
                1.0,
                grad_out.data().as_ptr(),
                1,
                n_out as isize,
                input.data().as_ptr(),
                n_in as isize,
                1,
                0.0,
                dw.as_mut_ptr(),
                n_in as isize,
                1,
            );
            // dx[B, in] = dY[B, out] * W[out, in]
            matrixmultiply::dgemm(
                batch,
                n_out,
                n_in,
                1.0,
                grad_out.data().as_ptr(),
                n_out as isize,
                1,
                self.weights.data().as_ptr(),
                n_in as isize,
                1,
                0.0,
                din.as_mut_ptr(),
                n_in as isize,
                1,
            );
        }
        Ok(DenseGrads {
            weights: RealTensor::from_parts(vec![n_out, n_in], dw),
            biases: RealTensor::from_parts(vec![n_out], db),
            input: RealTensor::from_parts(vec![batch, n_in], din),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_map() {
        let w = RealTensor::new(vec![3, 3], vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let layer = DenseLayer::new(w, RealTensor::zeros(&[3])).unwrap();
        let x = RealTensor::new(vec![2, 3], vec![1.0, -2.0, 3.0, 0.5, 0.0, -1.0]).unwrap();
        assert_eq!(layer.forward(&x).unwrap().data(), x.data());
    }

    #[test]
    fn parameter_count() {
        let layer = DenseLayer::init(256, 32, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(layer.param_count(), 8224);
    }

    #[test]
    fn rejects_width_mismatch() {
        let layer = DenseLayer::init(4, 2, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(layer.forward(&RealTensor::zeros(&[1, 5])).is_err());
    }
}
