use crate::dsp::{expand_half, idft, Signal, Spectrum, SpectrumKind};
use crate::error::{invalid_input, Result};
use crate::simgen::LabeledDataset;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use statrs::distribution::{ChiSquared, Continuous};
use std::f64::consts::PI;

/// Phase offsets of the five simulated classes, in label order.
pub const SIM1_OFFSETS: [f64; 5] = [0.0, 0.5, 1.0, -0.5, -1.0];

/// `x_t = beta0 + beta1 x_{t-1} + e_t` with Gaussian `e_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Config {
    pub beta0: f64,
    pub beta1: f64,
    pub noise_var: f64,
    pub length: usize,
    pub fs: f64,
}

impl Ar1Config {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_var > 0.0 && self.noise_var.is_finite()) {
            return Err(invalid_input!("AR(1) noise variance must be positive, got {}", self.noise_var));
        }
        if self.length == 0 {
            return Err(invalid_input!("AR(1) length must be positive"));
        }
        Ok(())
    }

    fn noise(&self) -> Result<Normal<f64>> {
        self.validate()?;
        Normal::new(0.0, self.noise_var.sqrt()).map_err(|e| invalid_input!("{e}"))
    }
}

/// Remainder after division by `pi`, carrying the sign of `x` (MATLAB `rem`).
pub fn truncated_rem(x: f64) -> f64 {
    x % PI
}

/// `length` steps after a start drawn from `U[-pi, pi]`; every step is wrapped.
pub fn simulate_phase_ar1(cfg: &Ar1Config, rng: &mut impl Rng) -> Result<Vec<f64>> {
    let noise = cfg.noise()?;
    let mut theta = rng.random_range(-PI..=PI);
    let mut out = Vec::with_capacity(cfg.length);
    for _ in 0..cfg.length {
        theta = truncated_rem(cfg.beta0 + cfg.beta1 * theta + noise.sample(rng));
        out.push(theta);
    }
    Ok(out)
}

/// Unclipped recursion from `x0`.
pub fn ar1_series(cfg: &Ar1Config, x0: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
    let noise = cfg.noise()?;
    let mut x = x0;
    Ok((0..cfg.length)
        .map(|_| {
            x = cfg.beta0 + cfg.beta1 * x + noise.sample(rng);
            x
        })
        .collect())
}

/// Amplitude recursion (`beta0 = 0`, `beta1 = 0.5`, variance 0.5, start 0); negatives clipped to 0.
pub fn simulate_amplitude_ar1(cfg: &Ar1Config, rng: &mut impl Rng) -> Result<Vec<f64>> {
    Ok(ar1_series(cfg, 0.0, rng)?.into_iter().map(|x| x.max(0.0)).collect())
}

/// Multiplies bin `k` by the chi-square pdf at `f_k / hz_per_unit`.
pub fn chi2_shape(amplitude: &[f64], df: f64, n: usize, fs: f64, hz_per_unit: f64) -> Result<Vec<f64>> {
    if !(df >= 1.0) || !(hz_per_unit > 0.0) {
        return Err(invalid_input!("chi-square shaping needs df >= 1 and a positive frequency scale"));
    }
    let pdf = ChiSquared::new(df).map_err(|e| invalid_input!("{e}"))?;
    Ok(amplitude
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let unit = crate::dsp::bin_frequency(k, n, fs) / hz_per_unit;
            let w = if unit > 0.0 { pdf.pdf(unit) } else { pdf.pdf(0.0).max(0.0) };
            a * if w.is_finite() { w } else { 0.0 }
        })
        .collect())
}

/// Real signal whose half spectrum is `amplitude * e^{i phase}`.
pub fn synthesize(amplitude: &[f64], phase: &[f64], n: usize, fs: f64) -> Result<Signal> {
    let bins = n / 2 + 1;
    if amplitude.len() != bins || phase.len() != bins {
        return Err(invalid_input!(
            "need {bins} amplitudes and phases for n = {n}, got {} and {}",
            amplitude.len(),
            phase.len()
        ));
    }
    let half: Vec<Complex64> = amplitude
        .iter()
        .zip(phase)
        .map(|(&a, &p)| Complex64::from_polar(a, p))
        .collect();
    let full = expand_half(&Spectrum::new(half, n, fs, SpectrumKind::Half)?)?;
    Ok(idft(&full)?.signal)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sim1Config {
    pub n: usize,
    pub fs: f64,
    pub chi2_df: f64,
    pub hz_per_unit: f64,
    /// Recursion for amplitudes; its `length` is ignored.
    pub amplitude: Ar1Config,
}

impl Default for Sim1Config {
    fn default() -> Self {
        Self {
            n: 300,
            fs: 200.0,
            chi2_df: 4.0,
            hz_per_unit: 7.5,
            amplitude: Ar1Config {
                beta0: 0.0,
                beta1: 0.5,
                noise_var: 0.5,
                length: 151,
                fs: 200.0,
            },
        }
    }
}

/// Five classes that differ only in the phase offset of their AR(1) spectra.
pub fn gen_sim1_dataset(
    beta1: f64,
    noise_var: f64,
    per_class: usize,
    cfg: &Sim1Config,
    rng: &mut impl Rng,
) -> Result<LabeledDataset> {
    if !(beta1 > 0.0 && beta1 < 1.0) || !(noise_var > 0.0 && noise_var < 1.0) {
        return Err(invalid_input!("beta1 and noise variance must lie in (0, 1), got {beta1} and {noise_var}"));
    }
    if per_class == 0 {
        return Err(invalid_input!("per_class must be >= 1"));
    }
    let bins = cfg.n / 2 + 1;
    let amp_cfg = Ar1Config {
        length: bins,
        fs: cfg.fs,
        ..cfg.amplitude
    };
    let mut signals = Vec::with_capacity(per_class * SIM1_OFFSETS.len());
    let mut labels = Vec::with_capacity(signals.capacity());
    for (label, &beta0) in SIM1_OFFSETS.iter().enumerate() {
        let phase_cfg = Ar1Config {
            beta0,
            beta1,
            noise_var,
            length: bins,
            fs: cfg.fs,
        };
        for _ in 0..per_class {
            let phase = simulate_phase_ar1(&phase_cfg, rng)?;
            let amp = chi2_shape(
                &simulate_amplitude_ar1(&amp_cfg, rng)?,
                cfg.chi2_df,
                cfg.n,
                cfg.fs,
                cfg.hz_per_unit,
            )?;
            signals.push(synthesize(&amp, &phase, cfg.n, cfg.fs)?);
            labels.push(label);
        }
    }
    let names = SIM1_OFFSETS.iter().map(|b| format!("beta0={b}")).collect();
    LabeledDataset::new(signals, labels, names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn degenerate_phase_recursion() {
        let cfg = Ar1Config {
            beta0: 0.5,
            beta1: 0.0,
            noise_var: 1e-20,
            length: 50,
            fs: 1.0,
        };
        let theta = simulate_phase_ar1(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(theta.iter().all(|t| (t - 0.5).abs() < 1e-6));
    }

    #[test]
    fn rem_keeps_sign() {
        assert!((truncated_rem(3.5) - (3.5 - PI)).abs() < 1e-15);
        assert!((truncated_rem(-3.5) + (3.5 - PI)).abs() < 1e-15);
        assert_eq!(truncated_rem(1.0), 1.0);
    }

    #[test]
    fn amplitude_degenerate_and_nonnegative() {
        let mut cfg = Sim1Config::default().amplitude;
        cfg.noise_var = 1e-300;
        let a = simulate_amplitude_ar1(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(a.iter().all(|&v| v.abs() < 1e-100));
        let b = simulate_amplitude_ar1(&Sim1Config::default().amplitude, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(b.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn dc_synthesis() {
        let mut amp = vec![0.0; 151];
        amp[0] = 300.0;
        let s = synthesize(&amp, &vec![0.0; 151], 300, 200.0).unwrap();
        assert_eq!(s.len(), 300);
        assert!(s.samples().iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(synthesize(&amp, &[0.0; 3], 300, 200.0).is_err());
    }

    #[test]
    fn chi2_zero_in_zero_out() {
        assert!(chi2_shape(&[0.0; 151], 4.0, 300, 200.0, 7.5).unwrap().iter().all(|&v| v == 0.0));
    }
}
