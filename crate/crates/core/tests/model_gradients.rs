mod common;

use common::grad::{self, check_model, random_complex, tiny_hybrid};
use cxnet::model::{build, Batch, InputEncoding, ModelConfig};
use cxnet::tensor::RealTensor;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn hybrid_end_to_end_gradients() {
    let checked = grad::hybrid_suite(1e-4);
    assert!(checked > 200, "only {checked} parameters checked");
}

#[test]
fn baseline_end_to_end_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut cfg = ModelConfig::baseline(InputEncoding::ReImTwoChannel, 30, 2);
    cfg.input_len = 16;
    cfg.conv1.channels = 3;
    cfg.conv2.channels = 2;
    cfg.hidden = vec![6, 4];
    let model = build(&cfg).unwrap();
    let data = (0..2 * 2 * 16).map(|_| rng.random_range(-1.0..1.0)).collect();
    let input = Batch::Real(RealTensor::new(vec![2, 2, 16], data).unwrap());
    let (checked, _) = check_model(&model, &input, &[0, 1], 1e-4);
    assert!(checked > 100);
}

#[test]
fn global_phase_leaves_logits_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..5 {
        let model = tiny_hybrid(seed, 4);
        let input = random_complex(&mut rng, &[4, 1, 16]);
        let before = model.logits(Batch::Complex(input.clone())).unwrap();
        let phase = Complex64::from_polar(1.0, rng.random_range(-3.0..3.0));
        let mut rotated_input = input;
        rotated_input.scale(phase);
        let mut rotated = model.clone();
        if let cxnet::model::Layer::ComplexConv(l) = &mut rotated.layers[0] {
            l.biases.scale(phase);
        }
        let after = rotated.logits(Batch::Complex(rotated_input)).unwrap();
        for (a, b) in before.data().iter().zip(after.data()) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }
}
