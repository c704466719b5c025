#![allow(dead_code)]

pub mod grad;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::fmt::Write as _;

/// A recordings file in the public 180-column layout (id, 178 samples, label 1..5),
/// with classes that differ in amplitude and dominant frequency.
pub fn synthetic_uci_csv(per_class: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::from("\"\"");
    for i in 1..=178 {
        let _ = write!(out, ",X{i}");
    }
    out.push_str(",y\n");
    // amplitude and frequency (cycles per segment) per label 1..5
    let shape = [(300.0, 9.0), (60.0, 3.0), (40.0, 5.0), (30.0, 12.0), (20.0, 15.0)];
    for row in 0..5 * per_class {
        let label = row % 5 + 1;
        let (amp, cycles) = shape[label - 1];
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let _ = write!(out, "\"X{}.V1.{row}\"", row % 23 + 1);
        for t in 0..178 {
            let e: f64 = rng.sample(StandardNormal);
            let v = amp * (std::f64::consts::TAU * cycles * t as f64 / 178.0 + phase).sin() + 15.0 * e;
            let _ = write!(out, ",{}", v.round() as i64);
        }
        let _ = writeln!(out, ",{label}");
    }
    out
}
