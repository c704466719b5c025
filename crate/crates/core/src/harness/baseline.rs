use crate::error::{invalid_input, Result};
use crate::features::{Classifier, FeatureConfig, FeatureMask, FeatureMatrix, Standardizer, SvmConfig};
use crate::harness::cv::{cross_validate, CvPlan, CvReport, FoldLearner};
use crate::model::Confusion;
use crate::simgen::LabeledDataset;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Linear SVM on a subset of the entropy features. With several `lambdas`, the
/// validation fold picks one before the final fit on train and validation.
#[derive(Debug, Clone)]
pub struct FeatureLearner {
    pub mask: FeatureMask,
    pub features: FeatureConfig,
    pub svm: SvmConfig,
    pub lambdas: Vec<f64>,
    precomputed: Option<Arc<FeatureMatrix>>,
}

pub struct FittedFeatures {
    pub scaler: Standardizer,
    pub classifier: Classifier,
}

impl FeatureLearner {
    pub fn new(mask: FeatureMask) -> Self {
        let svm = SvmConfig::default();
        Self {
            mask,
            features: FeatureConfig::default(),
            svm,
            lambdas: vec![svm.lambda],
            precomputed: None,
        }
    }

    /// Reuses an already computed matrix instead of extracting features again.
    pub fn with_matrix(mut self, matrix: Arc<FeatureMatrix>) -> Self {
        self.precomputed = Some(matrix);
        self
    }

    fn fit_on(&self, data: &FeatureMatrix, idx: &[usize], lambda: f64, seed: u64) -> Result<FittedFeatures> {
        let raw = data.select(self.mask, idx);
        let scaler = Standardizer::fit(&raw.iter().map(Vec::as_slice).collect::<Vec<_>>())?;
        let rows: Vec<Vec<f64>> = raw.iter().map(|r| scaler.apply(r)).collect();
        let labels: Vec<usize> = idx.iter().map(|&i| data.labels[i]).collect();
        let cfg = SvmConfig { lambda, ..self.svm };
        let classifier = Classifier::fit(&rows, &labels, data.n_classes, &cfg, &mut ChaCha8Rng::seed_from_u64(seed))?;
        Ok(FittedFeatures { scaler, classifier })
    }

    fn confusion(&self, data: &FeatureMatrix, fitted: &FittedFeatures, idx: &[usize]) -> Confusion {
        let truth: Vec<usize> = idx.iter().map(|&i| data.labels[i]).collect();
        let predicted: Vec<usize> = data
            .select(self.mask, idx)
            .iter()
            .map(|r| fitted.classifier.predict(&fitted.scaler.apply(r)))
            .collect();
        Confusion::from_predictions(data.n_classes, &truth, &predicted)
    }
}

impl FoldLearner for FeatureLearner {
    type Prepared = Arc<FeatureMatrix>;
    type Fitted = FittedFeatures;

    fn name(&self) -> String {
        format!("features[{}]", self.mask)
    }

    fn fingerprint(&self) -> String {
        format!(
            "mask={};lambdas={:?};epochs={};batch={:?};features={:?}",
            self.mask.bits(),
            self.lambdas,
            self.svm.epochs,
            self.svm.batch,
            self.features
        )
    }

    fn prepare(&self, data: &LabeledDataset) -> Result<Arc<FeatureMatrix>> {
        if let Some(m) = &self.precomputed {
            if m.len() != data.len() || m.labels != data.labels {
                return Err(invalid_input!("precomputed feature matrix does not match the dataset"));
            }
            return Ok(Arc::clone(m));
        }
        Ok(Arc::new(FeatureMatrix::compute(&data.signals, &data.labels, data.n_classes(), &self.features)?))
    }

    fn fit(&self, data: &Arc<FeatureMatrix>, train: &[usize], valid: &[usize], seed: u64) -> Result<(FittedFeatures, Option<usize>)> {
        if self.lambdas.is_empty() {
            return Err(invalid_input!("no SVM regularisation values to try"));
        }
        let mut lambda = self.lambdas[0];
        if self.lambdas.len() > 1 {
            let mut best = f64::NEG_INFINITY;
            for &l in &self.lambdas {
                let acc = self.confusion(data, &self.fit_on(data, train, l, seed)?, valid).accuracy();
                if acc > best {
                    best = acc;
                    lambda = l;
                }
            }
        }
        let merged: Vec<usize> = train.iter().chain(valid).copied().collect();
        Ok((self.fit_on(data, &merged, lambda, seed)?, None))
    }

    fn test(&self, data: &Arc<FeatureMatrix>, fitted: &FittedFeatures, test: &[usize]) -> Result<Confusion> {
        Ok(self.confusion(data, fitted, test))
    }
}

/// Cross-validation report of every feature mask.
#[derive(Debug, Clone)]
pub struct MaskSweep {
    pub reports: Vec<(FeatureMask, CvReport)>,
}

impl MaskSweep {
    /// Highest mean accuracy; the smaller mask wins ties.
    pub fn best(&self) -> Option<&(FeatureMask, CvReport)> {
        let mut best: Option<&(FeatureMask, CvReport)> = None;
        for entry in &self.reports {
            if best.is_none_or(|b| entry.1.mean > b.1.mean) {
                best = Some(entry);
            }
        }
        best
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("mask,features,mean,std\n");
        for (mask, r) in &self.reports {
            out.push_str(&format!("{},{},{:?},{:?}\n", mask.bits(), mask, r.mean, r.std));
        }
        out
    }
}

/// Runs the plan for each mask on one shared feature matrix.
pub fn sweep_masks(
    task: &str,
    data: &LabeledDataset,
    template: &FeatureLearner,
    masks: &[FeatureMask],
    plan: &CvPlan,
) -> Result<MaskSweep> {
    let matrix = Arc::new(FeatureMatrix::compute(&data.signals, &data.labels, data.n_classes(), &template.features)?);
    let mut reports = Vec::with_capacity(masks.len());
    for &mask in masks {
        let learner = FeatureLearner {
            mask,
            ..template.clone()
        }
        .with_matrix(Arc::clone(&matrix));
        reports.push((mask, cross_validate(task, data, &learner, plan)?));
    }
    Ok(MaskSweep { reports })
}
