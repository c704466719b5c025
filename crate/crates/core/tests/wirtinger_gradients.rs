mod common;

use common::grad;
use cxnet::cvconv::{complex_conv_backward, complex_conv_forward, ComplexConvLayer};
use cxnet::realnet::Padding;
use cxnet::tensor::RealTensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn hundred_random_layers() {
    let compared = grad::layer_suite(100, 2024);
    assert!(compared > 1000, "only {compared} scalars compared");
}

#[test]
fn single_window_matches_modulus_derivative() {
    // One output position: L = |b + sum_j k_j z_j|, so dL/dk* = U conj(z) / (2|U|).
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let layer = ComplexConvLayer::init(1, 1, 4, 1, Padding::Valid, Some(0.5), &mut rng).unwrap();
    let input = grad::random_complex(&mut rng, &[1, 1, 4]);
    let (u, y) = complex_conv_forward(&input, &layer).unwrap();
    assert_eq!(y.shape(), &[1, 1, 1]);
    let (dk, db) = complex_conv_backward(&input, &layer, &u, &y, &RealTensor::new(vec![1, 1, 1], vec![1.0]).unwrap()).unwrap();
    let uu = u.get(0);
    for j in 0..4 {
        let expected = uu * input.get(j).conj() / (2.0 * uu.norm());
        assert!((dk.get(j) - expected).norm() < 1e-12);
    }
    assert!((db.get(0) - uu / (2.0 * uu.norm())).norm() < 1e-12);
}
