//! Real-valued building blocks with exact backward passes.

mod conv;
mod dense;

pub use conv::{ConvGrads, ConvLayer, Padding};
pub use dense::{DenseGrads, DenseLayer};

use crate::error::{invalid_input, Error, Result};
use crate::tensor::RealTensor;
use rand::Rng;

pub fn relu(x: &RealTensor) -> RealTensor {
    RealTensor::from_parts(x.shape().to_vec(), x.data().iter().map(|v| v.max(0.0)).collect())
}

/// Passes gradient where the forward output was positive.
pub fn relu_backward(output: &RealTensor, grad_out: &RealTensor) -> RealTensor {
    let data = output
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&y, &g)| if y > 0.0 { g } else { 0.0 })
        .collect();
    RealTensor::from_parts(output.shape().to_vec(), data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolSpec {
    pub size: usize,
    pub stride: usize,
}

impl PoolSpec {
    pub fn new(size: usize, stride: usize) -> Result<Self> {
        if size == 0 || stride == 0 {
            return Err(invalid_input!("pool size and stride must be >= 1"));
        }
        Ok(Self { size, stride })
    }

    /// `floor((len - size) / stride) + 1`
    pub fn output_len(&self, len: usize) -> Result<usize> {
        if len < self.size {
            return Err(invalid_input!("cannot pool length {len} with window {}", self.size));
        }
        Ok((len - self.size) / self.stride + 1)
    }
}

/// Pooled values and, per output, the flat input index it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Pooled {
    pub output: RealTensor,
    pub argmax: Vec<usize>,
}

/// Max pooling over the last axis of `[batch, channels, len]`; ties keep the first index.
pub fn maxpool(x: &RealTensor, spec: PoolSpec) -> Result<Pooled> {
    let (batch, ch, len) = match x.shape() {
        &[b, c, l] => (b, c, l),
        other => return Err(invalid_input!("maxpool expects [batch, channels, len], got {other:?}")),
    };
    let out_len = spec.output_len(len)?;
    let mut out = Vec::with_capacity(batch * ch * out_len);
    let mut argmax = Vec::with_capacity(batch * ch * out_len);
    for row in 0..batch * ch {
        let base = row * len;
        let src = &x.data()[base..base + len];
        for i in 0..out_len {
            let start = i * spec.stride;
            let mut best = start;
            for j in start + 1..start + spec.size {
                if src[j] > src[best] {
                    best = j;
                }
            }
            out.push(src[best]);
            argmax.push(base + best);
        }
    }
    Ok(Pooled {
        output: RealTensor::from_parts(vec![batch, ch, out_len], out),
        argmax,
    })
}

/// Routes each pooled gradient back to its argmax position.
pub fn maxpool_backward(input_shape: &[usize], argmax: &[usize], grad_out: &RealTensor) -> Result<RealTensor> {
    if argmax.len() != grad_out.len() {
        return Err(invalid_input!("argmax and gradient lengths differ"));
    }
    let mut grad = RealTensor::zeros(input_shape);
    for (&idx, &g) in argmax.iter().zip(grad_out.data()) {
        grad.data_mut()[idx] += g;
    }
    Ok(grad)
}

/// Stable softmax probabilities of one logit vector.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `(-log p_label, p - onehot(label))` for a single logit vector.
pub fn softmax_cross_entropy(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if label >= logits.len() {
        return Err(invalid_input!("label {label} out of range for {} classes", logits.len()));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_total = logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    let loss = -(logits[label] - max - log_total);
    let mut grad = softmax(logits);
    grad[label] -= 1.0;
    Ok((loss, grad))
}

/// Adam hyperparameters; the defaults are the usual 1e-3 / 0.9 / 0.999 / 1e-8.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }
}

pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, hyper: &AdamHyper) -> Result<()> {
    if params.len() != grads.len() || state.m.len() != params.len() {
        return Err(invalid_input!(
            "adam lengths disagree: params {}, grads {}, state {}",
            params.len(),
            grads.len(),
            state.m.len()
        ));
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::OptimizerDivergence("non-finite gradient".into()));
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - hyper.beta1.powi(t);
    let c2 = 1.0 - hyper.beta2.powi(t);
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        *m = hyper.beta1 * *m + (1.0 - hyper.beta1) * g;
        *v = hyper.beta2 * *v + (1.0 - hyper.beta2) * g * g;
        *p -= hyper.lr * (*m / c1) / ((*v / c2).sqrt() + hyper.eps);
    }
    Ok(())
}

/// Uniform on `+-sqrt(6 / (fan_in + fan_out))`.
pub fn init_xavier(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Result<RealTensor> {
    let len: usize = shape.iter().product();
    if len == 0 || shape.is_empty() {
        return Err(invalid_input!("cannot initialise an empty tensor of shape {shape:?}"));
    }
    if fan_in == 0 || fan_out == 0 {
        return Err(invalid_input!("xavier fans must be positive"));
    }
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..len).map(|_| rng.random_range(-bound..=bound)).collect();
    RealTensor::new(shape.to_vec(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rand_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> RealTensor {
        let len = shape.iter().product();
        RealTensor::new(shape.to_vec(), (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
    }

    #[test]
    fn relu_values() {
        let x = RealTensor::new(vec![2], vec![-1.0, 2.0]).unwrap();
        assert_eq!(relu(&x).data(), &[0.0, 2.0]);
    }

    #[test]
    fn maxpool_values_and_lengths() {
        let x = RealTensor::new(vec![1, 1, 3], vec![1.0, 3.0, 2.0]).unwrap();
        let p = maxpool(&x, PoolSpec::new(3, 3).unwrap()).unwrap();
        assert_eq!(p.output.data(), &[3.0]);
        assert_eq!(PoolSpec::new(3, 3).unwrap().output_len(128).unwrap(), 42);

        let g = RealTensor::new(vec![1, 1, 1], vec![1.0]).unwrap();
        let back = maxpool_backward(x.shape(), &p.argmax, &g).unwrap();
        assert_eq!(back.data(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn maxpool_tie_takes_first() {
        let x = RealTensor::new(vec![1, 1, 3], vec![2.0, 2.0, 1.0]).unwrap();
        assert_eq!(maxpool(&x, PoolSpec::new(3, 3).unwrap()).unwrap().argmax, vec![0]);
    }

    #[test]
    fn softmax_uniform_case() {
        let (loss, grad) = softmax_cross_entropy(&[0.0, 0.0, 0.0], 0).unwrap();
        assert!((loss - 3f64.ln()).abs() < 1e-12);
        let third = 1.0 / 3.0;
        for (g, e) in grad.iter().zip([third - 1.0, third, third]) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_is_stable() {
        let (loss, grad) = softmax_cross_entropy(&[1000.0, 0.0], 0).unwrap();
        assert!(loss.abs() < 1e-12);
        assert!(grad.iter().all(|g| g.is_finite()));
        assert!(softmax_cross_entropy(&[0.0, 1.0], 2).is_err());
    }

    #[test]
    fn softmax_gradient_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let logits: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
            let label = rng.random_range(0..5);
            let (_, grad) = softmax_cross_entropy(&logits, label).unwrap();
            let h = 1e-5;
            for k in 0..5 {
                let mut p = logits.clone();
                p[k] += h;
                let mut m = logits.clone();
                m[k] -= h;
                let fd = (softmax_cross_entropy(&p, label).unwrap().0 - softmax_cross_entropy(&m, label).unwrap().0)
                    / (2.0 * h);
                assert!((fd - grad[k]).abs() < 1e-6);
            }
            let probs = softmax(&logits);
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn conv_backward_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for case in 0..10 {
            let (cin, cout, width, len) = (1 + case % 3, 1 + (case * 7) % 4, 1 + case % 5, 6 + case);
            let mut layer = ConvLayer::init(cin, cout, width, 1, Padding::Same, &mut rng).unwrap();
            layer.biases = rand_tensor(&[cout], &mut rng);
            let x = rand_tensor(&[2, cin, len], &mut rng);
            let y = layer.forward(&x).unwrap();
            let w = rand_tensor(y.shape(), &mut rng);
            let loss = |l: &ConvLayer, x: &RealTensor| -> f64 {
                l.forward(x).unwrap().data().iter().zip(w.data()).map(|(a, b)| a * b).sum()
            };
            let grads = layer.backward(&x, &w).unwrap();
            let h = 1e-5;
            for i in 0..layer.weights.len() {
                let mut p = layer.clone();
                p.weights.data_mut()[i] += h;
                let mut m = layer.clone();
                m.weights.data_mut()[i] -= h;
                let fd = (loss(&p, &x) - loss(&m, &x)) / (2.0 * h);
                assert!(rel_err(fd, grads.weights.data()[i]) < 1e-6);
            }
            for i in 0..cout {
                let mut p = layer.clone();
                p.biases.data_mut()[i] += h;
                let mut m = layer.clone();
                m.biases.data_mut()[i] -= h;
                let fd = (loss(&p, &x) - loss(&m, &x)) / (2.0 * h);
                assert!(rel_err(fd, grads.biases.data()[i]) < 1e-6);
            }
            for i in 0..x.len() {
                let mut p = x.clone();
                p.data_mut()[i] += h;
                let mut m = x.clone();
                m.data_mut()[i] -= h;
                let fd = (loss(&layer, &p) - loss(&layer, &m)) / (2.0 * h);
                assert!(rel_err(fd, grads.input.data()[i]) < 1e-6);
            }
        }
    }

    #[test]
    fn dense_backward_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut layer = DenseLayer::init(7, 4, &mut rng).unwrap();
        layer.biases = rand_tensor(&[4], &mut rng);
        let x = rand_tensor(&[3, 7], &mut rng);
        let w = rand_tensor(&[3, 4], &mut rng);
        let loss = |l: &DenseLayer, x: &RealTensor| -> f64 {
            l.forward(x).unwrap().data().iter().zip(w.data()).map(|(a, b)| a * b).sum()
        };
        let grads = layer.backward(&x, &w).unwrap();
        let h = 1e-5;
        for i in 0..layer.weights.len() {
            let mut p = layer.clone();
            p.weights.data_mut()[i] += h;
            let mut m = layer.clone();
            m.weights.data_mut()[i] -= h;
            assert!(rel_err((loss(&p, &x) - loss(&m, &x)) / (2.0 * h), grads.weights.data()[i]) < 1e-6);
        }
        for i in 0..x.len() {
            let mut p = x.clone();
            p.data_mut()[i] += h;
            let mut m = x.clone();
            m.data_mut()[i] -= h;
            assert!(rel_err((loss(&layer, &p) - loss(&layer, &m)) / (2.0 * h), grads.input.data()[i]) < 1e-6);
        }
    }

    #[test]
    fn adam_behaviour() {
        let hyper = AdamHyper::default();
        let mut p = vec![1.0, -2.0];
        let mut st = AdamState::new(2);
        adam_step(&mut p, &[0.0, 0.0], &mut st, &hyper).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);

        // constant gradient: each step tends to lr in magnitude
        let mut prev = p.clone();
        let mut st2 = AdamState::new(2);
        for _ in 0..100 {
            prev.clone_from(&p);
            adam_step(&mut p, &[0.5, -3.0], &mut st2, &hyper).unwrap();
        }
        assert!(((prev[0] - p[0]) - hyper.lr).abs() < 1e-6);
        assert!(((p[1] - prev[1]) - hyper.lr).abs() < 1e-6);

        assert!(adam_step(&mut p, &[f64::INFINITY, 0.0], &mut st2, &hyper).is_err());
    }

    #[test]
    fn adam_minimises_quadratic() {
        // lr 1e-3 cannot travel far in 2000 steps; starts within reach converge.
        let hyper = AdamHyper {
            lr: 1e-2,
            ..AdamHyper::default()
        };
        for start in [2.0, 2.5, 3.9, 3.999] {
            let mut w = [start];
            let mut st = AdamState::new(1);
            for _ in 0..2000 {
                let g = [2.0 * (w[0] - 3.0)];
                adam_step(&mut w, &g, &mut st, &hyper).unwrap();
            }
            assert!((w[0] - 3.0).abs() < 1e-4, "{}", w[0]);
        }
    }

    #[test]
    fn xavier_bounds_and_variance() {
        let t = init_xavier(&[100_000], 3, 3, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(t.data().iter().all(|v| (-1.0..=1.0).contains(v)));
        let mean = t.data().iter().sum::<f64>() / t.len() as f64;
        let var = t.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t.len() as f64;
        assert!((var - 1.0 / 3.0).abs() < 0.05 / 3.0, "{var}");

        let a = init_xavier(&[4, 5], 5, 4, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let b = init_xavier(&[4, 5], 5, 4, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(a, b);
        assert!(init_xavier(&[0, 5], 5, 4, &mut ChaCha8Rng::seed_from_u64(2)).is_err());
    }
}
