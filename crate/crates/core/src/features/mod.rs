//! Entropy and energy features over a filtered signal and its differences,
//! plus a linear SVM baseline.

mod entropy;
mod svm;

pub use entropy::{
    approximate_entropy, exponential_energy, fuzzy_entropy, histogram_probabilities, log_energy_entropy, renyi_entropy,
    renyi_from_probabilities, sample_entropy, sample_entropy_bound, sample_entropy_counts, sample_sd,
    shannon_entropy, shannon_from_probabilities, LOG_ENERGY_EPS,
};
pub use svm::{ecoc_ovo, svm_train, Classifier, EcocModel, LinearSvm, Standardizer, SvmConfig};

use crate::dsp::{butterworth_lowpass, difference, Signal};
use crate::error::{invalid_config, invalid_input, Error, Result};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::Path;

/// The seven features, in mask bit order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Shannon,
    Renyi,
    LogEnergy,
    ApproximateEntropy,
    SampleEntropy,
    FuzzyEntropy,
    ExponentialEnergy,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 7] = [
        FeatureKind::Shannon,
        FeatureKind::Renyi,
        FeatureKind::LogEnergy,
        FeatureKind::ApproximateEntropy,
        FeatureKind::SampleEntropy,
        FeatureKind::FuzzyEntropy,
        FeatureKind::ExponentialEnergy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Shannon => "shannon",
            FeatureKind::Renyi => "renyi",
            FeatureKind::LogEnergy => "log_energy",
            FeatureKind::ApproximateEntropy => "apen",
            FeatureKind::SampleEntropy => "sampen",
            FeatureKind::FuzzyEntropy => "fuzzyen",
            FeatureKind::ExponentialEnergy => "exp_energy",
        }
    }

    pub fn bit(self) -> u8 {
        1 << FeatureKind::ALL.iter().position(|&k| k == self).unwrap_or(0)
    }
}

/// Nonzero 7-bit selection over [`FeatureKind::ALL`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureMask(u8);

impl FeatureMask {
    pub const FULL: FeatureMask = FeatureMask(0x7f);

    pub fn new(bits: u8) -> Result<Self> {
        if bits == 0 || bits > 0x7f {
            return Err(invalid_input!("feature mask must be in 1..=127, got {bits}"));
        }
        Ok(Self(bits))
    }

    /// All 127 nonzero masks in increasing order.
    pub fn all() -> impl Iterator<Item = FeatureMask> {
        (1..=0x7f).map(FeatureMask)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn count(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn kinds(self) -> Vec<FeatureKind> {
        FeatureKind::ALL.into_iter().filter(|k| self.0 & k.bit() != 0).collect()
    }

    /// Column positions of this mask inside a full 21-value vector.
    pub fn columns(self) -> Vec<usize> {
        FeatureKind::ALL
            .iter()
            .enumerate()
            .filter(|(_, k)| self.0 & k.bit() != 0)
            .flat_map(|(i, _)| 3 * i..3 * i + 3)
            .collect()
    }
}

impl std::fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let names: Vec<&str> = self.kinds().into_iter().map(FeatureKind::name).collect();
        write!(f, "{}", names.join("+"))
    }
}

/// Embedding for the template-matching entropies; `r = r_factor * sd`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Embedding {
    pub m: usize,
    pub tau: usize,
    pub r_factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureConfig {
    pub renyi_alpha: f64,
    pub apen: Embedding,
    pub sampen: Embedding,
    pub fuzzy: Embedding,
    pub histogram_bins: usize,
    /// Low-pass applied before feature extraction, `(cutoff_hz, order)`.
    pub lowpass: Option<(f64, usize)>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            renyi_alpha: 0.5,
            apen: Embedding {
                m: 2,
                tau: 1,
                r_factor: 0.2,
            },
            sampen: Embedding {
                m: 2,
                tau: 1,
                r_factor: 0.2,
            },
            fuzzy: Embedding {
                m: 3,
                tau: 3,
                r_factor: 0.15,
            },
            histogram_bins: 64,
            lowpass: Some((60.0, 6)),
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.renyi_alpha > 0.0) || self.renyi_alpha == 1.0 {
            return Err(invalid_config!("renyi_alpha must be positive and not 1"));
        }
        for e in [self.apen, self.sampen, self.fuzzy] {
            if e.m == 0 || e.tau == 0 || !(e.r_factor > 0.0) {
                return Err(invalid_config!("embedding parameters must be positive: {e:?}"));
            }
        }
        if self.histogram_bins == 0 {
            return Err(invalid_config!("histogram_bins must be positive"));
        }
        Ok(())
    }
}

/// Named feature values. `saturated` lists positions where an infinite value was
/// replaced by its finite bound.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub names: Vec<String>,
    pub saturated: Vec<usize>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One feature on one view; infinite results are returned as `Err(bound)`.
fn feature_value(kind: FeatureKind, x: &[f64], cfg: &FeatureConfig) -> Result<std::result::Result<f64, f64>> {
    let sd = sample_sd(x);
    let v = match kind {
        FeatureKind::Shannon => shannon_entropy(x, cfg.histogram_bins)?,
        FeatureKind::Renyi => renyi_entropy(x, cfg.renyi_alpha, cfg.histogram_bins)?,
        FeatureKind::LogEnergy => log_energy_entropy(x)?,
        FeatureKind::ApproximateEntropy => approximate_entropy(x, cfg.apen.m, cfg.apen.tau, cfg.apen.r_factor * sd)?,
        FeatureKind::SampleEntropy => {
            let e = cfg.sampen;
            let v = sample_entropy(x, e.m, e.tau, e.r_factor * sd)?;
            if v.is_infinite() {
                return Ok(Err(sample_entropy_bound(x.len(), e.m, e.tau)));
            }
            v
        }
        FeatureKind::FuzzyEntropy => fuzzy_entropy(x, cfg.fuzzy.m, cfg.fuzzy.tau, cfg.fuzzy.r_factor * sd)?,
        FeatureKind::ExponentialEnergy => {
            let v = exponential_energy(x)?;
            if v.is_infinite() {
                return Ok(Err(f64::MAX));
            }
            v
        }
    };
    if !v.is_finite() {
        return Err(invalid_input!("{} is not finite ({v})", kind.name()));
    }
    Ok(Ok(v))
}

/// Features of the low-passed signal, its first and its second difference.
/// Order: for each selected feature, the three views in that order.
pub fn extract_features(signal: &Signal, mask: FeatureMask, cfg: &FeatureConfig) -> Result<FeatureVector> {
    cfg.validate()?;
    let filtered = match cfg.lowpass {
        Some((cutoff, order)) => butterworth_lowpass(signal, cutoff, order)?,
        None => signal.clone(),
    };
    let d1 = difference(&filtered, 1)?;
    let d2 = difference(&filtered, 2)?;
    let views: [(&str, &[f64]); 3] = [("", filtered.samples()), ("_d1", d1.samples()), ("_d2", d2.samples())];
    let mut out = FeatureVector {
        values: Vec::with_capacity(3 * mask.count()),
        names: Vec::with_capacity(3 * mask.count()),
        saturated: Vec::new(),
    };
    for kind in mask.kinds() {
        for (suffix, x) in views {
            let v = match feature_value(kind, x, cfg)? {
                Ok(v) => v,
                Err(bound) => {
                    out.saturated.push(out.values.len());
                    bound
                }
            };
            out.values.push(v);
            out.names.push(format!("{}{suffix}", kind.name()));
        }
    }
    Ok(out)
}

/// All 21 features of every signal; masks select columns afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl FeatureMatrix {
    pub fn compute(signals: &[Signal], labels: &[usize], n_classes: usize, cfg: &FeatureConfig) -> Result<Self> {
        if signals.len() != labels.len() {
            return Err(invalid_input!("{} signals but {} labels", signals.len(), labels.len()));
        }
        let vectors = signals
            .par_iter()
            .map(|s| extract_features(s, FeatureMask::FULL, cfg))
            .collect::<Result<Vec<_>>>()?;
        let names = vectors.first().map_or_else(Vec::new, |v| v.names.clone());
        Ok(Self {
            names,
            rows: vectors.into_iter().map(|v| v.values).collect(),
            labels: labels.to_vec(),
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Columns of `mask` for the rows at `indices`.
    pub fn select(&self, mask: FeatureMask, indices: &[usize]) -> Vec<Vec<f64>> {
        let cols = mask.columns();
        indices.iter().map(|&i| cols.iter().map(|&c| self.rows[i][c]).collect()).collect()
    }

    /// Header of feature names, one row per sample, label last.
    pub fn to_csv(&self) -> String {
        let mut out = self.names.join(",");
        out.push_str(",label\n");
        for (row, label) in self.rows.iter().zip(&self.labels) {
            for v in row {
                let _ = write!(out, "{v:?},");
            }
            let _ = writeln!(out, "{label}");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}
