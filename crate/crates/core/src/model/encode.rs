use crate::dsp::{dft, half_spectrum, Signal};
use crate::error::{invalid_input, Result};
use crate::model::config::InputEncoding;
use crate::model::network::Batch;
use crate::tensor::{ComplexTensor, RealTensor};

const STD_FLOOR: f64 = 1e-12;

/// Raw features of one signal as `(re, im)` rows of `channels * len` values.
/// `im` is empty for real encodings. Spectra are scaled by `1/n`.
fn features(signal: &Signal, encoding: InputEncoding, pad_to: Option<usize>) -> Result<(Vec<f64>, Vec<f64>)> {
    if encoding == InputEncoding::Time {
        return Ok((signal.samples().to_vec(), Vec::new()));
    }
    let n = signal.len() as f64;
    let half = half_spectrum(&dft(signal)?)?;
    let len = encoding.sequence_len(signal.len(), pad_to);
    let mut re: Vec<f64> = half.bins().iter().map(|z| z.re / n).collect();
    let mut im: Vec<f64> = half.bins().iter().map(|z| z.im / n).collect();
    re.resize(len, 0.0);
    im.resize(len, 0.0);
    Ok(match encoding {
        InputEncoding::ComplexHalfSpectrum => (re, im),
        InputEncoding::Amplitude => (re.iter().zip(&im).map(|(a, b)| a.hypot(*b)).collect(), Vec::new()),
        InputEncoding::Phase => (re.iter().zip(&im).map(|(a, b)| b.atan2(*a)).collect(), Vec::new()),
        InputEncoding::RealOnly => (re, Vec::new()),
        InputEncoding::ImagOnly => (im, Vec::new()),
        InputEncoding::ReImTwoChannel => {
            re.extend_from_slice(&im);
            (re, Vec::new())
        }
        InputEncoding::Time => unreachable!(),
    })
}

/// Unstandardized single-sample batch `[1, channels, len]`.
pub fn encode_input(signal: &Signal, encoding: InputEncoding, pad_to: Option<usize>) -> Result<Batch> {
    let (re, im) = features(signal, encoding, pad_to)?;
    let len = encoding.sequence_len(signal.len(), pad_to);
    let shape = vec![1, encoding.channels(), len];
    Ok(if encoding.is_complex() {
        Batch::Complex(ComplexTensor::new(shape, re, im)?)
    } else {
        Batch::Real(RealTensor::new(shape, re)?)
    })
}

/// Affine map fitted on training samples and applied to every split.
#[derive(Debug, Clone, PartialEq)]
pub enum Scaler {
    Identity,
    /// Single mean and spread over all positions.
    Global { mean: f64, std: f64 },
    /// Mean and spread per channel and position.
    PerBin { mean: Vec<f64>, std: Vec<f64> },
    /// Division of each complex bin by a positive real, which keeps every phase intact.
    Modulus { scale: Vec<f64> },
}

/// A dataset after encoding: `[samples, channels, len]` with labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSet {
    pub encoding: InputEncoding,
    pub channels: usize,
    pub len: usize,
    pub n_classes: usize,
    re: Vec<f64>,
    im: Vec<f64>,
    labels: Vec<usize>,
}

pub fn encode_dataset(
    signals: &[Signal],
    labels: &[usize],
    n_classes: usize,
    encoding: InputEncoding,
    pad_to: Option<usize>,
) -> Result<EncodedSet> {
    if signals.len() != labels.len() {
        return Err(invalid_input!("{} signals but {} labels", signals.len(), labels.len()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(invalid_input!("label {bad} out of range for {n_classes} classes"));
    }
    let n = signals.first().map_or(0, |s| s.len());
    if signals.iter().any(|s| s.len() != n) {
        return Err(invalid_input!("all signals must share one length"));
    }
    let len = encoding.sequence_len(n, pad_to);
    let mut re = Vec::with_capacity(signals.len() * len * encoding.channels());
    let mut im = Vec::new();
    for s in signals {
        let (r, i) = features(s, encoding, pad_to)?;
        re.extend(r);
        im.extend(i);
    }
    Ok(EncodedSet {
        encoding,
        channels: encoding.channels(),
        len,
        n_classes,
        re,
        im,
        labels: labels.to_vec(),
    })
}

impl EncodedSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    fn row(&self) -> usize {
        self.channels * self.len
    }

    fn check(&self, indices: &[usize]) -> Result<()> {
        match indices.iter().find(|&&i| i >= self.len()) {
            Some(i) => Err(invalid_input!("sample index {i} out of range for {} samples", self.len())),
            None => Ok(()),
        }
    }

    pub fn subset(&self, indices: &[usize]) -> Result<EncodedSet> {
        self.check(indices)?;
        let row = self.row();
        let gather = |src: &[f64]| -> Vec<f64> {
            if src.is_empty() {
                return Vec::new();
            }
            indices.iter().flat_map(|&i| src[i * row..(i + 1) * row].iter().copied()).collect()
        };
        Ok(EncodedSet {
            re: gather(&self.re),
            im: gather(&self.im),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            ..self.clone_header()
        })
    }

    fn clone_header(&self) -> EncodedSet {
        EncodedSet {
            encoding: self.encoding,
            channels: self.channels,
            len: self.len,
            n_classes: self.n_classes,
            re: Vec::new(),
            im: Vec::new(),
            labels: Vec::new(),
        }
    }

    /// Batch of the given samples, in order.
    pub fn batch(&self, indices: &[usize]) -> Result<(Batch, Vec<usize>)> {
        let sub = self.subset(indices)?;
        let shape = vec![indices.len(), self.channels, self.len];
        let batch = if self.encoding.is_complex() {
            Batch::Complex(ComplexTensor::new(shape, sub.re, sub.im)?)
        } else {
            Batch::Real(RealTensor::new(shape, sub.re)?)
        };
        Ok((batch, sub.labels))
    }

    /// Statistics of the given samples, chosen by encoding.
    pub fn fit_scaler(&self, indices: &[usize]) -> Result<Scaler> {
        self.check(indices)?;
        if indices.is_empty() {
            return Err(invalid_input!("cannot fit a scaler on zero samples"));
        }
        let row = self.row();
        let count = indices.len() as f64;
        Ok(match self.encoding {
            InputEncoding::Phase => Scaler::Identity,
            InputEncoding::ComplexHalfSpectrum => {
                let mut power = vec![0.0; row];
                for &i in indices {
                    for (j, p) in power.iter_mut().enumerate() {
                        *p += self.re[i * row + j].powi(2) + self.im[i * row + j].powi(2);
                    }
                }
                Scaler::Modulus {
                    scale: power.into_iter().map(|p| floor_std((p / count).sqrt())).collect(),
                }
            }
            InputEncoding::Time => {
                let values = || indices.iter().flat_map(|&i| self.re[i * row..(i + 1) * row].iter());
                let total = count * row as f64;
                let mean = values().sum::<f64>() / total;
                let var = values().map(|v| (v - mean).powi(2)).sum::<f64>() / total;
                Scaler::Global {
                    mean,
                    std: floor_std(var.sqrt()),
                }
            }
            _ => {
                let mut mean = vec![0.0; row];
                for &i in indices {
                    for (m, v) in mean.iter_mut().zip(&self.re[i * row..(i + 1) * row]) {
                        *m += v;
                    }
                }
                mean.iter_mut().for_each(|m| *m /= count);
                let mut var = vec![0.0; row];
                for &i in indices {
                    for ((s, v), m) in var.iter_mut().zip(&self.re[i * row..(i + 1) * row]).zip(&mean) {
                        *s += (v - m).powi(2);
                    }
                }
                let std = var.into_iter().map(|s| floor_std((s / count).sqrt())).collect();
                Scaler::PerBin { mean, std }
            }
        })
    }

    pub fn apply(&mut self, scaler: &Scaler) -> Result<()> {
        let row = self.row();
        match scaler {
            Scaler::Identity => {}
            Scaler::Global { mean, std } => self.re.iter_mut().for_each(|v| *v = (*v - mean) / std),
            Scaler::Modulus { scale } => {
                if scale.len() != row {
                    return Err(invalid_input!("scaler fitted on rows of {} values, data has {row}", scale.len()));
                }
                for chunk in self.re.chunks_mut(row).chain(self.im.chunks_mut(row)) {
                    for (v, s) in chunk.iter_mut().zip(scale) {
                        *v /= s;
                    }
                }
            }
            Scaler::PerBin { mean, std } => {
                if mean.len() != row || std.len() != row {
                    return Err(invalid_input!("scaler fitted on rows of {} values, data has {row}", mean.len()));
                }
                for chunk in self.re.chunks_mut(row) {
                    for ((v, m), s) in chunk.iter_mut().zip(mean).zip(std) {
                        *v = (*v - m) / s;
                    }
                }
            }
        }
        Ok(())
    }

    /// Raw values of sample `i` (real part or real features).
    pub fn sample_re(&self, i: usize) -> &[f64] {
        let row = self.row();
        &self.re[i * row..(i + 1) * row]
    }

    pub fn sample_im(&self, i: usize) -> &[f64] {
        let row = self.row();
        if self.im.is_empty() {
            &[]
        } else {
            &self.im[i * row..(i + 1) * row]
        }
    }
}

fn floor_std(s: f64) -> f64 {
    if s > STD_FLOOR {
        s
    } else {
        1.0
    }
}
