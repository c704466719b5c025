use crate::error::{invalid_input, Result};
use rand::seq::index::sample;
use rand::Rng;

/// Pegasos settings. `batch = None` takes the full training set every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub batch: Option<usize>,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            epochs: 300,
            batch: None,
        }
    }
}

/// `sign(w . x + b)`; the bias is regularised like an extra constant feature.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearSvm {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    /// `+1` or `-1`; a zero margin counts as `+1`.
    pub fn predict(&self, x: &[f64]) -> i8 {
        if self.decision(x) >= 0.0 {
            1
        } else {
            -1
        }
    }
}

fn check_rows(rows: &[Vec<f64>]) -> Result<usize> {
    let dim = rows.first().map(Vec::len).ok_or_else(|| invalid_input!("no training samples"))?;
    if dim == 0 || rows.iter().any(|r| r.len() != dim) {
        return Err(invalid_input!("feature rows must share a nonzero length"));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid_input!("features must be finite"));
    }
    Ok(dim)
}

/// Stochastic (or full-batch) subgradient descent on the primal hinge loss with
/// step `1/(lambda t)` and projection onto the ball of radius `1/sqrt(lambda)`.
pub fn svm_train(rows: &[Vec<f64>], labels: &[i8], cfg: &SvmConfig, rng: &mut impl Rng) -> Result<LinearSvm> {
    let dim = check_rows(rows)?;
    if rows.len() != labels.len() {
        return Err(invalid_input!("{} rows but {} labels", rows.len(), labels.len()));
    }
    if labels.iter().any(|&y| y != 1 && y != -1) {
        return Err(invalid_input!("binary labels must be +1 or -1"));
    }
    if !labels.contains(&1) || !labels.contains(&-1) {
        return Err(invalid_input!("both classes need at least one sample"));
    }
    if !(cfg.lambda > 0.0) || cfg.epochs == 0 || cfg.batch == Some(0) {
        return Err(invalid_input!("SVM needs lambda > 0, epochs >= 1 and a nonzero batch"));
    }

    let n = rows.len();
    let radius = 1.0 / cfg.lambda.sqrt();
    // The last coordinate is the bias.
    let mut w = vec![0.0; dim + 1];
    let mut step_grad = vec![0.0; dim + 1];
    let all: Vec<usize> = (0..n).collect();
    let steps_per_epoch = cfg.batch.map_or(1, |b| n.div_ceil(b.min(n)));
    let mut t = 0usize;
    for _ in 0..cfg.epochs {
        for _ in 0..steps_per_epoch {
            t += 1;
            let picked: Vec<usize> = match cfg.batch {
                None => all.clone(),
                Some(b) => sample(rng, n, b.min(n)).into_vec(),
            };
            step_grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in &picked {
                let y = f64::from(labels[i]);
                let margin = y * (rows[i].iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() + w[dim]);
                if margin < 1.0 {
                    for (g, x) in step_grad.iter_mut().zip(&rows[i]) {
                        *g += y * x;
                    }
                    step_grad[dim] += y;
                }
            }
            let eta = 1.0 / (cfg.lambda * t as f64);
            let shrink = 1.0 - eta * cfg.lambda;
            let scale = eta / picked.len() as f64;
            for (wj, g) in w.iter_mut().zip(&step_grad) {
                *wj = shrink * *wj + scale * g;
            }
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > radius {
                w.iter_mut().for_each(|v| *v *= radius / norm);
            }
        }
    }
    let bias = w.pop().unwrap_or(0.0);
    Ok(LinearSvm { weights: w, bias })
}

/// One-vs-one output code: learner `l` separates `pairs[l].0` (+1) from `pairs[l].1` (-1).
#[derive(Debug, Clone, PartialEq)]
pub struct EcocModel {
    pub n_classes: usize,
    pub pairs: Vec<(usize, usize)>,
    pub learners: Vec<LinearSvm>,
}

impl EcocModel {
    /// Code matrix entry for `class` under learner `l`: +1, -1 or 0.
    pub fn code(&self, class: usize, l: usize) -> i8 {
        let (a, b) = self.pairs[l];
        if class == a {
            1
        } else if class == b {
            -1
        } else {
            0
        }
    }

    /// Hamming loss of every codeword against the learners' signs.
    pub fn losses(&self, x: &[f64]) -> Vec<f64> {
        let signs: Vec<i8> = self.learners.iter().map(|m| m.predict(x)).collect();
        (0..self.n_classes)
            .map(|c| {
                signs
                    .iter()
                    .enumerate()
                    .map(|(l, &s)| (1.0 - f64::from(self.code(c, l) * s)) / 2.0)
                    .sum()
            })
            .collect()
    }

    /// Class with the smallest loss; the lowest index wins ties.
    pub fn predict(&self, x: &[f64]) -> usize {
        let losses = self.losses(x);
        let mut best = 0;
        for (c, &l) in losses.iter().enumerate() {
            if l < losses[best] {
                best = c;
            }
        }
        best
    }
}

/// Trains `K (K - 1) / 2` pairwise learners on dense labels `0..n_classes`.
pub fn ecoc_ovo(rows: &[Vec<f64>], labels: &[usize], n_classes: usize, cfg: &SvmConfig, rng: &mut impl Rng) -> Result<EcocModel> {
    if n_classes < 3 {
        return Err(invalid_input!("one-vs-one coding needs at least 3 classes, got {n_classes}"));
    }
    if rows.len() != labels.len() {
        return Err(invalid_input!("{} rows but {} labels", rows.len(), labels.len()));
    }
    let mut counts = vec![0usize; n_classes];
    for &l in labels {
        *counts
            .get_mut(l)
            .ok_or_else(|| invalid_input!("label {l} outside 0..{n_classes}"))? += 1;
    }
    if let Some(c) = counts.iter().position(|&c| c == 0) {
        return Err(invalid_input!("class {c} has no samples"));
    }
    let mut pairs = Vec::new();
    let mut learners = Vec::new();
    for a in 0..n_classes {
        for b in a + 1..n_classes {
            let (sub_rows, sub_labels): (Vec<Vec<f64>>, Vec<i8>) = rows
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == a || l == b)
                .map(|(r, &l)| (r.clone(), if l == a { 1 } else { -1 }))
                .unzip();
            learners.push(svm_train(&sub_rows, &sub_labels, cfg, rng)?);
            pairs.push((a, b));
        }
    }
    Ok(EcocModel {
        n_classes,
        pairs,
        learners,
    })
}

/// Binary SVM for two classes, one-vs-one coding otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Binary(LinearSvm),
    Ecoc(EcocModel),
}

impl Classifier {
    /// Labels are dense `0..n_classes`; for two classes label 0 maps to `+1`.
    pub fn fit(rows: &[Vec<f64>], labels: &[usize], n_classes: usize, cfg: &SvmConfig, rng: &mut impl Rng) -> Result<Self> {
        match n_classes {
            0 | 1 => Err(invalid_input!("need at least two classes")),
            2 => {
                let signs = labels
                    .iter()
                    .map(|&l| match l {
                        0 => Ok(1),
                        1 => Ok(-1),
                        _ => Err(invalid_input!("label {l} outside 0..2")),
                    })
                    .collect::<Result<Vec<i8>>>()?;
                Ok(Classifier::Binary(svm_train(rows, &signs, cfg, rng)?))
            }
            _ => Ok(Classifier::Ecoc(ecoc_ovo(rows, labels, n_classes, cfg, rng)?)),
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        match self {
            Classifier::Binary(m) => usize::from(m.predict(x) < 0),
            Classifier::Ecoc(m) => m.predict(x),
        }
    }
}

/// Column-wise standardisation fitted on training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).ok_or_else(|| invalid_input!("no rows to standardise"))?;
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *s += (v - m).powi(2) / n;
            }
        }
        let std = var.into_iter().map(|v| if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 }).collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| (v - m) / s).collect()
    }
}
