use crate::dsp::{bin_frequency, expand_half, idft, Signal, Spectrum, SpectrumKind};
use crate::error::{invalid_input, Result};
use crate::simgen::LabeledDataset;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::{PI, TAU};

const ALPHA_CENTER_HZ: f64 = 10.0;
const ALPHA_WIDTH_HZ: f64 = 1.5;
const ALPHA_GAIN_DB: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theory {
    /// Additive evoked peak on top of ongoing noise.
    Classical,
    /// Ongoing oscillations whose phases are redrawn at the event.
    PhaseReset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    /// Event at the middle of the epoch.
    Fixed,
    /// Event time uniform over the epoch.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErpConfig {
    pub theory: Theory,
    pub location: Location,
    pub fs: f64,
    pub duration: f64,
    pub peak_freq: f64,
    /// Gaussian envelope width of the classical peak, seconds.
    pub envelope_sigma: f64,
    pub band: (f64, f64),
    pub n_sinusoids: usize,
    /// Classical: weight on the peak. Phase reset: noise is scaled by its inverse.
    pub snr_weight: f64,
}

impl ErpConfig {
    pub fn new(theory: Theory, location: Location) -> Self {
        Self {
            theory,
            location,
            fs: 150.0,
            duration: 2.0,
            peak_freq: 5.0,
            envelope_sigma: 0.1,
            band: (4.0, 16.0),
            n_sinusoids: 4,
            snr_weight: match theory {
                Theory::Classical => 2.2,
                Theory::PhaseReset => 15.0,
            },
        }
    }

    pub fn n(&self) -> usize {
        (self.fs * self.duration).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.fs * self.duration;
        if !(self.fs > 0.0 && self.duration > 0.0) || (n - n.round()).abs() > 1e-9 || n < 2.0 {
            return Err(invalid_input!("fs * duration must be a whole number of samples >= 2"));
        }
        let weight_ok = match self.theory {
            Theory::Classical => self.snr_weight >= 0.0,
            Theory::PhaseReset => self.snr_weight > 0.0,
        };
        if !weight_ok || self.snr_weight.is_nan() {
            return Err(invalid_input!("snr_weight {} is out of range", self.snr_weight));
        }
        if !(self.band.0 > 0.0 && self.band.1 > self.band.0) {
            return Err(invalid_input!("bad sinusoid band {:?}", self.band));
        }
        if !(self.envelope_sigma > 0.0) || self.n_sinusoids == 0 {
            return Err(invalid_input!("envelope width and sinusoid count must be positive"));
        }
        Ok(())
    }

    fn event_time(&self, rng: &mut impl Rng) -> f64 {
        match self.location {
            Location::Fixed => self.duration / 2.0,
            Location::Random => rng.random_range(0.0..=self.duration),
        }
    }
}

/// Power spectral density template per half-spectrum bin: `1/f` with an alpha bump.
/// DC takes the value of the first bin so that the epoch mean fluctuates too.
pub fn noise_template(n: usize, fs: f64) -> Vec<f64> {
    let gain = 10f64.powf(ALPHA_GAIN_DB / 10.0) - 1.0;
    (0..=n / 2)
        .map(|k| {
            let f = bin_frequency(k.max(1), n, fs);
            let bump = (-(f - ALPHA_CENTER_HZ).powi(2) / (2.0 * ALPHA_WIDTH_HZ * ALPHA_WIDTH_HZ)).exp();
            (1.0 + gain * bump) / f
        })
        .collect()
}

/// Gaussian noise with the template spectrum, normalised to unit variance.
pub fn eeg_noise(n: usize, fs: f64, rng: &mut impl Rng) -> Result<Signal> {
    if n < 2 {
        return Err(invalid_input!("noise needs at least 2 samples"));
    }
    let half: Vec<Complex64> = noise_template(n, fs)
        .into_iter()
        .enumerate()
        .map(|(k, psd)| {
            let a = psd.sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            if k == 0 || (n % 2 == 0 && k == n / 2) {
                Complex64::new(a * re, 0.0)
            } else {
                Complex64::new(a * re, a * im) / 2f64.sqrt()
            }
        })
        .collect();
    let x = idft(&expand_half(&Spectrum::new(half, n, fs, SpectrumKind::Half)?)?)?.signal.into_samples();
    let mean = x.iter().sum::<f64>() / n as f64;
    let std = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    Signal::new(x.iter().map(|v| v / std).collect(), fs)
}

fn peak(cfg: &ErpConfig, center: f64, t: f64) -> f64 {
    let d = t - center;
    (TAU * cfg.peak_freq * d).cos() * (-d * d / (2.0 * cfg.envelope_sigma * cfg.envelope_sigma)).exp()
}

fn labelled(signals: Vec<Signal>, count_neg: usize, positive: &str) -> Result<LabeledDataset> {
    let labels = (0..signals.len()).map(|i| usize::from(i >= count_neg)).collect();
    LabeledDataset::new(signals, labels, vec!["noise".into(), positive.into()])
}

/// Label 0: noise only. Label 1: noise plus `snr_weight` times a windowed 5 Hz peak.
pub fn gen_classical(cfg: &ErpConfig, count_pos: usize, count_neg: usize, rng: &mut impl Rng) -> Result<LabeledDataset> {
    cfg.validate()?;
    if count_pos == 0 || count_neg == 0 {
        return Err(invalid_input!("need at least one sample per class"));
    }
    let n = cfg.n();
    let mut signals = Vec::with_capacity(count_pos + count_neg);
    for i in 0..count_pos + count_neg {
        let noise = eeg_noise(n, cfg.fs, rng)?;
        if i < count_neg {
            signals.push(noise);
            continue;
        }
        let center = cfg.event_time(rng);
        let x = noise
            .samples()
            .iter()
            .enumerate()
            .map(|(j, v)| v + cfg.snr_weight * peak(cfg, center, j as f64 / cfg.fs))
            .collect();
        signals.push(Signal::new(x, cfg.fs)?);
    }
    labelled(signals, count_neg, "peak")
}

/// Clean four-sinusoid epoch; with `reset_at`, every phase is redrawn from that time on.
fn oscillation(cfg: &ErpConfig, reset_at: Option<f64>, rng: &mut impl Rng) -> Vec<f64> {
    let n = cfg.n();
    let mut x = vec![0.0; n];
    for _ in 0..cfg.n_sinusoids {
        let f = rng.random_range(cfg.band.0..=cfg.band.1);
        let before = rng.random_range(-PI..=PI);
        let after = reset_at.map(|_| rng.random_range(-PI..=PI));
        for (j, v) in x.iter_mut().enumerate() {
            let t = j as f64 / cfg.fs;
            let phase = match (reset_at, after) {
                (Some(c), Some(p)) if t >= c => p,
                _ => before,
            };
            *v += (TAU * f * t + phase).sin();
        }
    }
    x
}

/// Label 0: ongoing oscillations. Label 1: oscillations with a phase reset. Noise is scaled by `1/snr_weight`.
pub fn gen_phase_reset(cfg: &ErpConfig, count_pos: usize, count_neg: usize, rng: &mut impl Rng) -> Result<LabeledDataset> {
    cfg.validate()?;
    if count_pos == 0 || count_neg == 0 {
        return Err(invalid_input!("need at least one sample per class"));
    }
    let n = cfg.n();
    let noise_scale = 1.0 / cfg.snr_weight;
    let mut signals = Vec::with_capacity(count_pos + count_neg);
    for i in 0..count_pos + count_neg {
        let reset = (i >= count_neg).then(|| cfg.event_time(rng));
        let clean = oscillation(cfg, reset, rng);
        let x = if noise_scale == 0.0 {
            clean
        } else {
            let noise = eeg_noise(n, cfg.fs, rng)?;
            clean.iter().zip(noise.samples()).map(|(c, e)| c + noise_scale * e).collect()
        };
        signals.push(Signal::new(x, cfg.fs)?);
    }
    labelled(signals, count_neg, "reset")
}

pub fn gen_erp(cfg: &ErpConfig, count_pos: usize, count_neg: usize, rng: &mut impl Rng) -> Result<LabeledDataset> {
    match cfg.theory {
        Theory::Classical => gen_classical(cfg, count_pos, count_neg, rng),
        Theory::PhaseReset => gen_phase_reset(cfg, count_pos, count_neg, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noise_has_unit_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [300, 301] {
            let x = eeg_noise(n, 150.0, &mut rng).unwrap();
            let mean = x.samples().iter().sum::<f64>() / n as f64;
            let var = x.samples().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            assert!((var - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn dataset_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = ErpConfig::new(Theory::Classical, Location::Random);
        let ds = gen_classical(&cfg, 7, 5, &mut rng).unwrap();
        assert_eq!(ds.class_counts(), vec![5, 7]);
        assert_eq!(ds.signal_len(), Some(300));
        let cfg = ErpConfig::new(Theory::PhaseReset, Location::Fixed);
        let ds = gen_phase_reset(&cfg, 3, 4, &mut rng).unwrap();
        assert_eq!(ds.class_counts(), vec![4, 3]);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = ErpConfig::new(Theory::PhaseReset, Location::Fixed);
        cfg.snr_weight = 0.0;
        assert!(cfg.validate().is_err());
        cfg.theory = Theory::Classical;
        assert!(cfg.validate().is_ok());
        cfg.duration = 2.001;
        assert!(cfg.validate().is_err());
    }
}
