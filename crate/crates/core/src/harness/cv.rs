use crate::error::{Error, Result};
use crate::model::{
    build, encode_dataset, evaluate, fit_epochs, train, Confusion, EncodedSet, InputEncoding, Model, ModelConfig, Scaler,
};
use crate::simgen::LabeledDataset;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt::Write as _;

/// Repeated k-fold plan. Fold `(test + 1) mod k` validates, the rest train.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CvPlan {
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for CvPlan {
    fn default() -> Self {
        Self {
            k: 5,
            repeats: 10,
            seed: 0,
        }
    }
}

/// Mixes indices into a seed so that neighbouring jobs get unrelated streams.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut h = base ^ 0x9e37_79b9_7f4a_7c15;
    for &p in parts {
        h ^= p.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(h << 6).wrapping_add(h >> 2);
        // splitmix64 finaliser
        h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 31;
    }
    h
}

impl CvPlan {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k < 3 {
            return Err(Error::InvalidPlan(format!("need k >= 3 folds for train/valid/test, got {}", self.k)));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidPlan("repeats must be >= 1".into()));
        }
        if n < self.k {
            return Err(Error::InvalidPlan(format!("{n} samples cannot fill {} folds", self.k)));
        }
        Ok(())
    }

    /// Fold membership for one repeat: shuffled, then dealt round-robin.
    pub fn folds(&self, n: usize, repeat: usize) -> Vec<Vec<usize>> {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &[repeat as u64])));
        let mut folds = vec![Vec::with_capacity(n / self.k + 1); self.k];
        for (pos, idx) in order.into_iter().enumerate() {
            folds[pos % self.k].push(idx);
        }
        folds
    }

    /// `(train, valid, test)` for one test fold.
    pub fn split(&self, folds: &[Vec<usize>], test: usize) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        let valid = (test + 1) % self.k;
        let train = (0..self.k)
            .filter(|&f| f != test && f != valid)
            .flat_map(|f| folds[f].iter().copied())
            .collect();
        (train, folds[valid].clone(), folds[test].clone())
    }
}

/// A method evaluated by cross-validation. `fit` never receives test indices.
pub trait FoldLearner: Sync {
    type Prepared: Sync;
    type Fitted: Send;

    fn name(&self) -> String;

    /// Seed-independent per-sample preprocessing of the whole dataset.
    fn prepare(&self, data: &LabeledDataset) -> Result<Self::Prepared>;

    /// Chooses hyperparameters on `valid`, then refits on `train` and `valid` together.
    fn fit(&self, data: &Self::Prepared, train: &[usize], valid: &[usize], seed: u64) -> Result<(Self::Fitted, Option<usize>)>;

    fn test(&self, data: &Self::Prepared, fitted: &Self::Fitted, test: &[usize]) -> Result<Confusion>;

    /// Smallest usable training split.
    fn min_train_size(&self) -> usize {
        1
    }

    /// Config fingerprint recorded in reports.
    fn fingerprint(&self) -> String {
        self.name()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldRow {
    pub repeat: usize,
    pub fold: usize,
    pub accuracy: f64,
    pub n_test: usize,
    pub best_epoch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub task: String,
    pub method: String,
    pub fingerprint: String,
    pub rows: Vec<FoldRow>,
    pub mean: f64,
    /// Population standard deviation over all fold accuracies.
    pub std: f64,
    pub confusion: Confusion,
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl CvReport {
    pub fn accuracies(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.accuracy).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# task={} method={}", self.task, self.method);
        let _ = writeln!(out, "# config={}", self.fingerprint);
        let _ = writeln!(out, "# std is the population std over all {} fold accuracies", self.rows.len());
        out.push_str("kind,repeat,fold,accuracy,n_test,best_epoch\n");
        for r in &self.rows {
            let epoch = r.best_epoch.map_or(String::new(), |e| e.to_string());
            let _ = writeln!(out, "fold,{},{},{:?},{},{}", r.repeat, r.fold, r.accuracy, r.n_test, epoch);
        }
        let _ = writeln!(out, "mean,,,{:?},,", self.mean);
        let _ = writeln!(out, "std,,,{:?},,", self.std);
        out
    }

    pub fn confusion_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for c in 0..self.confusion.counts.len() {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
        for (i, row) in self.confusion.counts.iter().enumerate() {
            out.push_str(&i.to_string());
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Worker count from `CXNET_THREADS`, else the machine's parallelism.
pub fn thread_count() -> usize {
    std::env::var("CXNET_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn cross_validate<L: FoldLearner>(task: &str, data: &LabeledDataset, learner: &L, plan: &CvPlan) -> Result<CvReport> {
    plan.validate(data.len())?;
    let prepared = learner.prepare(data)?;
    let mut jobs = Vec::with_capacity(plan.k * plan.repeats);
    for repeat in 0..plan.repeats {
        let folds = plan.folds(data.len(), repeat);
        for fold in 0..plan.k {
            let (train, valid, test) = plan.split(&folds, fold);
            if train.len() < learner.min_train_size() {
                return Err(Error::InvalidPlan(format!(
                    "training split of {} samples is smaller than one batch of {}",
                    train.len(),
                    learner.min_train_size()
                )));
            }
            jobs.push((repeat, fold, train, valid, test));
        }
    }
    let run = |(repeat, fold, train, valid, test): &(usize, usize, Vec<usize>, Vec<usize>, Vec<usize>)| {
        let seed = derive_seed(plan.seed, &[*repeat as u64, *fold as u64, 1]);
        let (fitted, best_epoch) = learner.fit(&prepared, train, valid, seed)?;
        let confusion = learner.test(&prepared, &fitted, test)?;
        Ok::<_, Error>((
            FoldRow {
                repeat: *repeat,
                fold: *fold,
                accuracy: confusion.accuracy(),
                n_test: test.len(),
                best_epoch,
            },
            confusion,
        ))
    };
    let threads = thread_count();
    let results: Vec<Result<(FoldRow, Confusion)>> = if threads <= 1 {
        jobs.iter().map(run).collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidPlan(format!("thread pool: {e}")))?
            .install(|| jobs.par_iter().map(run).collect())
    };
    let mut rows = Vec::with_capacity(results.len());
    let mut confusion = Confusion::new(data.n_classes());
    for r in results {
        let (row, c) = r?;
        confusion.add(&c);
        rows.push(row);
    }
    let (mean, std) = mean_std(&rows.iter().map(|r| r.accuracy).collect::<Vec<_>>());
    Ok(CvReport {
        task: task.to_string(),
        method: learner.name(),
        fingerprint: learner.fingerprint(),
        rows,
        mean,
        std,
        confusion,
    })
}

/// Trains a network with validation-based epoch selection.
#[derive(Debug, Clone)]
pub struct NetworkLearner {
    /// Template; `n_classes`, `input_len` and `seed` are filled per dataset and fold.
    pub config: ModelConfig,
}

pub struct FittedNetwork {
    pub model: Model,
    pub scaler: Scaler,
}

impl NetworkLearner {
    pub fn new(config: ModelConfig) -> Self {
        Self { config }
    }

    pub fn for_encoding(encoding: InputEncoding) -> Self {
        Self::new(ModelConfig::for_encoding(encoding, 2, 2))
    }

    fn config_for(&self, data: &EncodedSet, seed: u64) -> ModelConfig {
        ModelConfig {
            input_len: data.len,
            n_classes: data.n_classes,
            seed,
            ..self.config.clone()
        }
    }

    fn scaled(data: &EncodedSet, fit_on: &[usize], take: &[usize]) -> Result<(EncodedSet, Scaler)> {
        let scaler = data.fit_scaler(fit_on)?;
        let mut set = data.subset(take)?;
        set.apply(&scaler)?;
        Ok((set, scaler))
    }
}

impl FoldLearner for NetworkLearner {
    type Prepared = EncodedSet;
    type Fitted = FittedNetwork;

    fn name(&self) -> String {
        if self.config.encoding.is_complex() {
            "hybrid".into()
        } else {
            format!("cnn-{}", self.config.encoding)
        }
    }

    fn min_train_size(&self) -> usize {
        self.config.batch_size
    }

    fn fingerprint(&self) -> String {
        self.config
            .to_kv()
            .into_iter()
            .filter(|(k, _)| k != "seed" && k != "input_len" && k != "n_classes")
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }

    fn prepare(&self, data: &LabeledDataset) -> Result<EncodedSet> {
        encode_dataset(&data.signals, &data.labels, data.n_classes(), self.config.encoding, self.config.pad_to)
    }

    fn fit(&self, data: &EncodedSet, train_idx: &[usize], valid_idx: &[usize], seed: u64) -> Result<(FittedNetwork, Option<usize>)> {
        let config = self.config_for(data, seed);
        let (train_set, scaler) = Self::scaled(data, train_idx, train_idx)?;
        let mut valid_set = data.subset(valid_idx)?;
        valid_set.apply(&scaler)?;
        let outcome = train(build(&config)?, &train_set, &valid_set)?;

        let merged: Vec<usize> = train_idx.iter().chain(valid_idx).copied().collect();
        let (merged_set, scaler) = Self::scaled(data, &merged, &merged)?;
        let (model, _) = fit_epochs(build(&config)?, &merged_set, outcome.best_epoch)?;
        Ok((FittedNetwork { model, scaler }, Some(outcome.best_epoch)))
    }

    fn test(&self, data: &EncodedSet, fitted: &FittedNetwork, test_idx: &[usize]) -> Result<Confusion> {
        let mut test_set = data.subset(test_idx)?;
        test_set.apply(&fitted.scaler)?;
        evaluate(&fitted.model, &test_set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_partition() {
        let plan = CvPlan::default();
        for n in [10, 11, 23] {
            for r in 0..3 {
                let folds = plan.folds(n, r);
                let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
                all.sort();
                assert_eq!(all, (0..n).collect::<Vec<_>>());
                let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
                assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            }
        }
    }

    #[test]
    fn split_rotates_validation() {
        let plan = CvPlan::default();
        let folds = plan.folds(20, 0);
        let (train, valid, test) = plan.split(&folds, 4);
        assert_eq!(valid, folds[0]);
        assert_eq!(test, folds[4]);
        assert_eq!(train.len(), 12);
    }

    #[test]
    fn population_std() {
        let (m, s) = mean_std(&[1.0, 0.0]);
        assert_eq!((m, s), (0.5, 0.5));
    }

    #[test]
    fn invalid_plans() {
        assert!(CvPlan { k: 2, ..CvPlan::default() }.validate(100).is_err());
        assert!(CvPlan { repeats: 0, ..CvPlan::default() }.validate(100).is_err());
        assert!(CvPlan::default().validate(4).is_err());
    }
}
