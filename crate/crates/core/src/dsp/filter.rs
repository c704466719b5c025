//! Butterworth low-pass design as a cascade of second-order sections.
//!
//! Each conjugate pole pair of the analog prototype is mapped through the
//! bilinear transform with the cutoff pre-warped, so the -3 dB point lands
//! exactly on the requested frequency. Sections run in direct form II
//! transposed from a zero initial state, single pass.

use super::Signal;
use crate::error::{invalid_input, Result};
use std::f64::consts::PI;

/// One normalised biquad, `a0 == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    /// `|H(e^{i w})|` at `freq_hz`.
    pub fn magnitude(&self, freq_hz: f64, fs: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / fs;
        let z1 = num_complex::Complex64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        let num = self.b0 + z1 * self.b1 + z2 * self.b2;
        let den = 1.0 + z1 * self.a1 + z2 * self.a2;
        (num / den).norm()
    }
}

/// Designed low-pass cascade; keeps enough metadata to evaluate its response.
#[derive(Debug, Clone, PartialEq)]
pub struct ButterworthLowpass {
    pub sections: Vec<Biquad>,
    pub cutoff_hz: f64,
    pub fs: f64,
    pub order: usize,
}

impl ButterworthLowpass {
    pub fn design(cutoff_hz: f64, order: usize, fs: f64) -> Result<Self> {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(invalid_input!("sampling rate must be positive, got {fs}"));
        }
        if !(cutoff_hz > 0.0 && cutoff_hz < fs / 2.0) {
            return Err(invalid_input!(
                "cutoff {cutoff_hz} Hz must lie strictly inside (0, {}) Hz",
                fs / 2.0
            ));
        }
        if order < 2 || order % 2 != 0 {
            return Err(invalid_input!("order must be even and >= 2, got {order}"));
        }

        let k = (PI * cutoff_hz / fs).tan();
        let k2 = k * k;
        let sections = (1..=order / 2)
            .map(|i| {
                // Pole pair i of the normalised prototype has damping 1/q.
                let theta = (2 * i - 1) as f64 * PI / (2 * order) as f64;
                let inv_q = 2.0 * theta.sin();
                let norm = 1.0 / (1.0 + k * inv_q + k2);
                let b0 = k2 * norm;
                Biquad {
                    b0,
                    b1: 2.0 * b0,
                    b2: b0,
                    a1: 2.0 * (k2 - 1.0) * norm,
                    a2: (1.0 - k * inv_q + k2) * norm,
                }
            })
            .collect();

        Ok(Self {
            sections,
            cutoff_hz,
            fs,
            order,
        })
    }

    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        self.sections
            .iter()
            .map(|s| s.magnitude(freq_hz, self.fs))
            .product()
    }

    pub fn apply(&self, samples: &[f64]) -> Vec<f64> {
        let mut out = samples.to_vec();
        for s in &self.sections {
            let (mut z1, mut z2) = (0.0, 0.0);
            for x in out.iter_mut() {
                let input = *x;
                let y = s.b0 * input + z1;
                z1 = s.b1 * input - s.a1 * y + z2;
                z2 = s.b2 * input - s.a2 * y;
                *x = y;
            }
        }
        out
    }
}

/// Zero-state Butterworth low-pass of `signal`.
pub fn butterworth_lowpass(signal: &Signal, cutoff_hz: f64, order: usize) -> Result<Signal> {
    let filter = ButterworthLowpass::design(cutoff_hz, order, signal.fs())?;
    Signal::new(filter.apply(signal.samples()), signal.fs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, fs: f64, n: usize) -> Signal {
        let s = (0..n).map(|i| (2.0 * PI * freq * i as f64 / fs).sin()).collect();
        Signal::new(s, fs).unwrap()
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn dc_gain_is_unity() {
        let f = ButterworthLowpass::design(60.0, 6, 178.0).unwrap();
        assert!((f.magnitude(0.0) - 1.0).abs() < 1e-6);
        let sig = Signal::new(vec![2.5; 2000], 178.0).unwrap();
        let out = butterworth_lowpass(&sig, 60.0, 6).unwrap();
        for v in &out.samples()[1000..] {
            assert!((v - 2.5).abs() < 1e-6);
        }
    }

    #[test]
    fn cutoff_is_minus_three_db() {
        for (fc, fs, order) in [(60.0, 178.0, 6), (60.0, 400.0, 6), (10.0, 150.0, 4), (30.0, 200.0, 2)] {
            let f = ButterworthLowpass::design(fc, order, fs).unwrap();
            let db = 20.0 * f.magnitude(fc).log10();
            assert!((db + 3.0103).abs() < 0.1, "fc={fc} fs={fs}: {db} dB");
        }
    }

    #[test]
    fn stopband_tone_attenuated() {
        let fs = 400.0;
        let design = ButterworthLowpass::design(60.0, 6, fs).unwrap();
        let oracle_db = 20.0 * design.magnitude(100.0).log10();
        assert!(oracle_db < -25.0);

        let out = butterworth_lowpass(&tone(100.0, fs, 8000), 60.0, 6).unwrap();
        let steady = &out.samples()[4000..];
        let measured_db = 20.0 * (rms(steady) / (0.5f64).sqrt()).log10();
        assert!(measured_db <= -25.0, "{measured_db} dB");
        assert!((measured_db - oracle_db).abs() < 0.5);
    }

    #[test]
    fn tone_at_cutoff_passes_at_half_power() {
        let fs = 400.0;
        let out = butterworth_lowpass(&tone(60.0, fs, 20000), 60.0, 6).unwrap();
        let ratio = rms(&out.samples()[10000..]) / (0.5f64).sqrt();
        assert!((ratio - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.02 * std::f64::consts::FRAC_1_SQRT_2);
    }

    #[test]
    fn response_is_monotone() {
        let f = ButterworthLowpass::design(60.0, 6, 178.0).unwrap();
        let mut prev = f.magnitude(0.0);
        let mut hz = 1.0;
        while hz <= 89.0 {
            let m = f.magnitude(hz);
            assert!(m <= prev + 1e-9, "{hz}: {m} > {prev}");
            prev = m;
            hz += 1.0;
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ButterworthLowpass::design(89.0, 6, 178.0).is_err());
        assert!(ButterworthLowpass::design(60.0, 5, 178.0).is_err());
        assert!(ButterworthLowpass::design(60.0, 0, 178.0).is_err());
        assert!(ButterworthLowpass::design(0.0, 6, 178.0).is_err());
    }
}
