use cxnet::cvconv::{complex_conv_backward, complex_conv_forward, ComplexConvLayer};
use cxnet::model::{build_hybrid, Batch, Model, ModelConfig};
use cxnet::realnet::Padding;
use cxnet::tensor::{ComplexTensor, RealTensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const H: f64 = 1e-6;

pub fn tiny_hybrid(seed: u64, n_classes: usize) -> Model {
    let mut cfg = ModelConfig::hybrid(30, n_classes);
    cfg.input_len = 16;
    cfg.complex.out_channels = 2;
    cfg.complex.stride = 1;
    cfg.complex.padding = Padding::Same;
    cfg.conv1.channels = 2;
    cfg.conv2.channels = 2;
    cfg.hidden = vec![8];
    cfg.seed = seed;
    build_hybrid(&cfg).unwrap()
}

pub fn random_complex(rng: &mut ChaCha8Rng, shape: &[usize]) -> ComplexTensor {
    let n: usize = shape.iter().product();
    let re = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let im = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    ComplexTensor::new(shape.to_vec(), re, im).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Central differences over every scalar, skipping points where the
/// piecewise pattern changes or a modulus is near its kink.
pub fn check_model(model: &Model, input: &Batch, labels: &[usize], tol: f64) -> (usize, usize) {
    let (_, grads) = model.loss_and_grad(input.clone(), labels).unwrap();
    let analytic = grads.to_real_vec();
    let base = model.parameters();
    assert_eq!(analytic.len(), base.len());
    let trace = model.forward(input.clone()).unwrap();
    let pattern = trace.pattern();
    let (mut checked, mut skipped) = (0, 0);
    let mut probe = model.clone();
    for i in 0..base.len() {
        let mut eval = |delta: f64| {
            let mut p = base.clone();
            p[i] += delta;
            probe.set_parameters(&p).unwrap();
            let (trace, loss, _) = probe.loss_trace(input.clone(), labels).unwrap();
            (loss, trace.pattern(), trace.min_modulus())
        };
        let (lp, pp, mp) = eval(H);
        let (lm, pm, mm) = eval(-H);
        if pp != pattern || pm != pattern || mp.min(mm) < 1e-3 {
            skipped += 1;
            continue;
        }
        let numeric = (lp - lm) / (2.0 * H);
        let err = rel_err(analytic[i], numeric);
        assert!(err < tol, "parameter {i}: analytic {} numeric {numeric} rel {err}", analytic[i]);
        checked += 1;
    }
    (checked, skipped)
}

pub const LAYER_TOL: f64 = 1e-5;

fn weighted_loss(input: &ComplexTensor, layer: &ComplexConvLayer, weights: &[f64]) -> (f64, f64) {
    let (u, y) = complex_conv_forward(input, layer).unwrap();
    let loss = y.data().iter().zip(weights).map(|(a, b)| a * b).sum();
    let min_mod = u.re().iter().zip(u.im()).map(|(r, i)| r.hypot(*i)).fold(f64::INFINITY, f64::min);
    (loss, min_mod)
}

#[derive(Clone, Copy)]
enum Part {
    Re,
    Im,
}

fn perturbed(layer: &ComplexConvLayer, bias: bool, idx: usize, part: Part, delta: f64) -> ComplexConvLayer {
    let mut l = layer.clone();
    let t = if bias { &mut l.biases } else { &mut l.kernels };
    match part {
        Part::Re => t.re_mut()[idx] += delta,
        Part::Im => t.im_mut()[idx] += delta,
    }
    l
}

/// Returns the number of scalars compared, or `None` when the configuration is too close to `U = 0`.
pub fn check_layer(rng: &mut ChaCha8Rng) -> Option<usize> {
    let in_ch = rng.random_range(1..=4);
    let out_ch = rng.random_range(1..=4);
    let width = rng.random_range(1..=5);
    let len = rng.random_range(width..=32);
    let stride = rng.random_range(1..=3);
    let padding = match rng.random_range(0..3) {
        0 => Padding::Same,
        1 => Padding::Valid,
        _ => Padding::Explicit {
            left: rng.random_range(0..width),
            right: rng.random_range(0..width),
        },
    };
    let batch = rng.random_range(1..=2);
    let layer = ComplexConvLayer::init(in_ch, out_ch, width, stride, padding, Some(0.7), rng).unwrap();
    let input = random_complex(rng, &[batch, in_ch, len]);

    let (u, y) = complex_conv_forward(&input, &layer).unwrap();
    let weights: Vec<f64> = (0..y.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let (_, min_mod) = weighted_loss(&input, &layer, &weights);
    if min_mod <= 1e-3 {
        return None;
    }
    let grad_y = RealTensor::new(y.shape().to_vec(), weights.clone()).unwrap();
    let (dk, db) = complex_conv_backward(&input, &layer, &u, &y, &grad_y).unwrap();

    let mut compared = 0;
    for (bias, grad) in [(false, &dk), (true, &db)] {
        for idx in 0..grad.len() {
            for part in [Part::Re, Part::Im] {
                let (lp, mp) = weighted_loss(&input, &perturbed(&layer, bias, idx, part, H), &weights);
                let (lm, mm) = weighted_loss(&input, &perturbed(&layer, bias, idx, part, -H), &weights);
                if mp.min(mm) <= 1e-3 {
                    continue;
                }
                let numeric = (lp - lm) / (2.0 * H);
                // dL/dre = 2 re(dL/dw*), dL/dim = 2 im(dL/dw*)
                let analytic = match part {
                    Part::Re => 2.0 * grad.re()[idx],
                    Part::Im => 2.0 * grad.im()[idx],
                };
                let err = rel_err(analytic, numeric);
                assert!(err <= LAYER_TOL, "bias={bias} idx={idx}: analytic {analytic} numeric {numeric} rel {err}");
                compared += 1;
            }
        }
    }
    Some(compared)
}

/// Complex-layer checks over `configs` random configurations; returns scalars compared.
pub fn layer_suite(configs: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut done, mut compared) = (0, 0);
    while done < configs {
        if let Some(n) = check_layer(&mut rng) {
            done += 1;
            compared += n;
        }
    }
    compared
}

/// End-to-end checks of the tiny hybrid over a few seeds; returns parameters compared.
pub fn hybrid_suite(tol: f64) -> usize {
    let mut total = 0;
    for seed in 0..4 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let model = tiny_hybrid(seed, 3);
        let input = Batch::Complex(random_complex(&mut rng, &[3, 1, 16]));
        let labels: Vec<usize> = (0..3).map(|_| rng.random_range(0..3)).collect();
        let trace = model.forward(input.clone()).unwrap();
        if trace.min_modulus() < 1e-3 {
            continue;
        }
        total += check_model(&model, &input, &labels, tol).0;
    }
    total
}
