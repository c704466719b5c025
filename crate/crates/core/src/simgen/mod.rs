//! Simulated EEG-like datasets: AR(1) spectra and event-related potentials.

mod ar1;
mod erp;

pub use ar1::{
    ar1_series, chi2_shape, gen_sim1_dataset, simulate_amplitude_ar1, simulate_phase_ar1, synthesize, truncated_rem, Ar1Config,
    Sim1Config, SIM1_OFFSETS,
};
pub use erp::{eeg_noise, gen_classical, gen_erp, gen_phase_reset, noise_template, ErpConfig, Location, Theory};

use crate::dsp::Signal;
use crate::error::{invalid_input, Error, Result};
use std::fmt::Write as _;
use std::path::Path;

/// Signals with dense class labels `0..class_names.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub signals: Vec<Signal>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(signals: Vec<Signal>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if signals.len() != labels.len() {
            return Err(invalid_input!("{} signals but {} labels", signals.len(), labels.len()));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(invalid_input!("label {l} has no class name"));
        }
        Ok(Self {
            signals,
            labels,
            class_names,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Common length of every signal, or `None` when empty or ragged.
    pub fn signal_len(&self) -> Option<usize> {
        let n = self.signals.first()?.len();
        self.signals.iter().all(|s| s.len() == n).then_some(n)
    }

    pub fn fs(&self) -> Option<f64> {
        self.signals.first().map(Signal::fs)
    }

    /// CSV dump: `#` comment lines for metadata, then `label,x0,x1,...` rows.
    pub fn to_csv(&self, comments: &[(String, String)]) -> String {
        let mut out = String::new();
        if let Some(fs) = self.fs() {
            let _ = writeln!(out, "# fs={fs:?}");
        }
        let _ = writeln!(out, "# classes={}", self.class_names.join(","));
        for (k, v) in comments {
            let _ = writeln!(out, "# {k}={v}");
        }
        for (s, l) in self.signals.iter().zip(&self.labels) {
            out.push_str(&l.to_string());
            for v in s.samples() {
                let _ = write!(out, ",{v:?}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path, comments: &[(String, String)]) -> Result<()> {
        std::fs::write(path, self.to_csv(comments)).map_err(|e| Error::io(path, e))
    }

    /// Inverse of [`LabeledDataset::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let parse = |line: usize, message: String| Error::Parse { line, message };
        let mut fs = None;
        let mut classes: Option<Vec<String>> = None;
        let mut signals = Vec::new();
        let mut labels = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((k, v)) = meta.trim().split_once('=') {
                    match k.trim() {
                        "fs" => fs = Some(v.trim().parse::<f64>().map_err(|_| parse(line_no, format!("bad fs '{v}'")))?),
                        "classes" => classes = Some(v.trim().split(',').map(str::to_string).collect()),
                        _ => {}
                    }
                }
                continue;
            }
            let mut cells = line.split(',');
            let label: usize = cells
                .next()
                .and_then(|c| c.trim().parse().ok())
                .ok_or_else(|| parse(line_no, "label must be a non-negative integer".into()))?;
            let samples = cells
                .map(|c| c.trim().parse::<f64>().map_err(|_| parse(line_no, format!("'{c}' is not a number"))))
                .collect::<Result<Vec<_>>>()?;
            let fs = fs.ok_or_else(|| parse(line_no, "missing '# fs=' header".into()))?;
            signals.push(Signal::new(samples, fs).map_err(|e| parse(line_no, e.to_string()))?);
            labels.push(label);
        }
        let class_names = classes.unwrap_or_else(|| {
            let n = labels.iter().max().map_or(0, |m| m + 1);
            (0..n).map(|c| c.to_string()).collect()
        });
        Self::new(signals, labels, class_names)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }

    /// Samples at `indices`, in order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            signals: indices.iter().map(|&i| self.signals[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }
}
