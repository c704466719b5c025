//! Fourier transforms, spectrum bookkeeping, filtering and differencing.
//!
//! Bins are 0-based: bin `k` here is the 1-based bin `k + 1` of the usual
//! `x^(k) = sum_{j=1}^{n} x(j) w^{(j-1)(k-1)}` statement, `w = exp(-2 pi i / n)`.
//! The inverse carries the `1/n` factor.

pub mod fft;
mod filter;

pub use filter::{butterworth_lowpass, Biquad, ButterworthLowpass};

use crate::error::{invalid_input, Error, Result};
use num_complex::Complex64;

/// Tolerance used when checking conjugate symmetry of a real signal's spectrum.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Real time-domain samples with their sampling rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    fs: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, fs: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid_input!("signal has no samples"));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(invalid_input!("sample {i} is not finite"));
        }
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(invalid_input!("sampling rate must be positive, got {fs}"));
        }
        Ok(Self { samples, fs })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    /// All `n` bins.
    Full,
    /// Bins `0..=n/2` of a real signal.
    Half,
}

/// Complex DFT bins tied to the original time-domain length.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    bins: Vec<Complex64>,
    n: usize,
    fs: f64,
    kind: SpectrumKind,
}

impl Spectrum {
    pub fn new(bins: Vec<Complex64>, n: usize, fs: f64, kind: SpectrumKind) -> Result<Self> {
        let expected = match kind {
            SpectrumKind::Full => n,
            SpectrumKind::Half => n / 2 + 1,
        };
        if n == 0 {
            return Err(invalid_input!("spectrum must record a non-zero length"));
        }
        if bins.len() != expected {
            return Err(invalid_input!(
                "{kind:?} spectrum for n={n} needs {expected} bins, got {}",
                bins.len()
            ));
        }
        if let Some(i) = bins.iter().position(|b| !(b.re.is_finite() && b.im.is_finite())) {
            return Err(invalid_input!("bin {i} is not finite"));
        }
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(invalid_input!("sampling rate must be positive, got {fs}"));
        }
        Ok(Self { bins, n, fs, kind })
    }

    pub fn bins(&self) -> &[Complex64] {
        &self.bins
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    /// Frequency in Hz of bin `k`.
    pub fn frequency(&self, k: usize) -> f64 {
        bin_frequency(k, self.n, self.fs)
    }

    /// Largest `|x[k] - conj(x[n-k])|` over `k = 1..n`; full spectra only.
    pub fn symmetry_defect(&self) -> (usize, f64) {
        let n = self.n;
        (1..n)
            .map(|k| (k, (self.bins[k] - self.bins[n - k].conj()).norm()))
            .chain(std::iter::once((0, self.bins[0].im.abs())))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc })
    }
}

pub fn bin_frequency(k: usize, n: usize, fs: f64) -> f64 {
    k as f64 * fs / n as f64
}

/// Full forward DFT of a real signal.
pub fn dft(signal: &Signal) -> Result<Spectrum> {
    if signal.is_empty() {
        return Err(invalid_input!("cannot transform an empty signal"));
    }
    let mut bins: Vec<Complex64> = signal
        .samples()
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .collect();
    fft::fft_in_place(&mut bins, false);
    Spectrum::new(bins, signal.len(), signal.fs(), SpectrumKind::Full)
}

/// Inverse DFT returning complex samples, `1/n` normalised.
pub fn idft_complex(spectrum: &Spectrum) -> Result<Vec<Complex64>> {
    if spectrum.kind() != SpectrumKind::Full {
        return Err(invalid_input!("inverse transform needs a full spectrum; expand the half spectrum first"));
    }
    let mut data = spectrum.bins().to_vec();
    fft::fft_in_place(&mut data, true);
    let scale = 1.0 / spectrum.n() as f64;
    for v in &mut data {
        *v *= scale;
    }
    Ok(data)
}

/// Real part of an inverse transform plus the largest imaginary residue dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub signal: Signal,
    pub max_imag_residue: f64,
}

pub fn idft(spectrum: &Spectrum) -> Result<Reconstruction> {
    let data = idft_complex(spectrum)?;
    let max_imag_residue = data.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    let signal = Signal::new(data.iter().map(|c| c.re).collect(), spectrum.fs())?;
    Ok(Reconstruction {
        signal,
        max_imag_residue,
    })
}

/// Keeps bins `0..=n/2` of a conjugate-symmetric full spectrum.
pub fn half_spectrum(spectrum: &Spectrum) -> Result<Spectrum> {
    match spectrum.kind() {
        SpectrumKind::Half => return Ok(spectrum.clone()),
        SpectrumKind::Full => {}
    }
    let scale = spectrum
        .bins()
        .iter()
        .map(|b| b.norm())
        .fold(1.0, f64::max);
    let (bin, deviation) = spectrum.symmetry_defect();
    if deviation > SYMMETRY_TOL * scale {
        return Err(Error::SymmetryViolation { bin, deviation });
    }
    let n = spectrum.n();
    Spectrum::new(
        spectrum.bins()[..n / 2 + 1].to_vec(),
        n,
        spectrum.fs(),
        SpectrumKind::Half,
    )
}

/// Rebuilds the conjugate-symmetric full spectrum from a half spectrum.
///
/// The DC bin, and the Nyquist bin for even `n`, are their own mirror images,
/// so their imaginary parts are discarded to guarantee a real inverse.
pub fn expand_half(spectrum: &Spectrum) -> Result<Spectrum> {
    match spectrum.kind() {
        SpectrumKind::Full => return Ok(spectrum.clone()),
        SpectrumKind::Half => {}
    }
    let n = spectrum.n();
    let half = spectrum.bins();
    if half.len() != n / 2 + 1 {
        return Err(invalid_input!("half spectrum does not match recorded length {n}"));
    }
    let mut full = vec![Complex64::new(0.0, 0.0); n];
    full[..half.len()].copy_from_slice(half);
    full[0].im = 0.0;
    if n % 2 == 0 {
        full[n / 2].im = 0.0;
    }
    for k in 1..n.div_ceil(2) {
        full[n - k] = full[k].conj();
    }
    Spectrum::new(full, n, spectrum.fs(), SpectrumKind::Full)
}

/// First or second order forward difference; the result is `order` samples shorter.
pub fn difference(signal: &Signal, order: usize) -> Result<Signal> {
    if !(order == 1 || order == 2) {
        return Err(invalid_input!("difference order must be 1 or 2, got {order}"));
    }
    if signal.len() <= order {
        return Err(invalid_input!(
            "signal of length {} too short for order-{order} difference",
            signal.len()
        ));
    }
    let mut x = signal.samples().to_vec();
    for _ in 0..order {
        x = x.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Signal::new(x, signal.fs())
}

/// Analytic signal `x + i H[x]` of a real signal.
pub fn analytic_signal(signal: &Signal) -> Result<Vec<Complex64>> {
    let spec = dft(signal)?;
    let n = spec.n();
    let mut bins = spec.bins().to_vec();
    for (k, b) in bins.iter_mut().enumerate() {
        let weight = if k == 0 || (n % 2 == 0 && k == n / 2) {
            1.0
        } else if k < n.div_ceil(2) {
            2.0
        } else {
            0.0
        };
        *b *= weight;
    }
    let spec = Spectrum::new(bins, n, spec.fs(), SpectrumKind::Full)?;
    idft_complex(&spec)
}

/// Rotates the analytic signal by `angle` about the time axis and projects
/// back onto the real axis.
pub fn analytic_rotate(signal: &Signal, angle: f64) -> Result<Signal> {
    let rot = Complex64::from_polar(1.0, angle);
    let analytic = analytic_signal(signal)?;
    Signal::new(analytic.iter().map(|z| (z * rot).re).collect(), signal.fs())
}
