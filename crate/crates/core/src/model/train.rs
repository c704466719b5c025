use crate::cvconv::{complex_adam_step, ComplexAdamState};
use crate::error::{invalid_input, Error, Result};
use crate::model::config::ModelConfig;
use crate::model::encode::EncodedSet;
use crate::model::network::{build, Gradients, Layer, LayerGrad, Model};
use crate::realnet::{adam_step, AdamHyper, AdamState};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;

const EVAL_BATCH: usize = 256;
const SHUFFLE_STREAM: u64 = 0x7368_7566;

enum Slot {
    Stateless,
    Complex { kernels: ComplexAdamState, biases: ComplexAdamState },
    Real { weights: AdamState, biases: AdamState },
}

/// Adam for real layers and complex Adam for the complex layer.
pub struct Optimizer {
    slots: Vec<Slot>,
    pub hyper: AdamHyper,
}

impl Optimizer {
    pub fn new(model: &Model, lr: f64) -> Self {
        let slots = model
            .layers
            .iter()
            .map(|layer| match layer {
                Layer::ComplexConv(l) => Slot::Complex {
                    kernels: ComplexAdamState::new(l.kernels.shape()),
                    biases: ComplexAdamState::new(l.biases.shape()),
                },
                Layer::Conv(l) => Slot::Real {
                    weights: AdamState::new(l.weights.len()),
                    biases: AdamState::new(l.biases.len()),
                },
                Layer::Dense(l) => Slot::Real {
                    weights: AdamState::new(l.weights.len()),
                    biases: AdamState::new(l.biases.len()),
                },
                _ => Slot::Stateless,
            })
            .collect();
        Self {
            slots,
            hyper: AdamHyper { lr, ..AdamHyper::default() },
        }
    }

    pub fn step(&mut self, model: &mut Model, grads: &Gradients) -> Result<()> {
        if grads.0.len() != model.layers.len() || self.slots.len() != model.layers.len() {
            return Err(invalid_input!("optimizer, gradients and model disagree on layer count"));
        }
        for ((layer, grad), slot) in model.layers.iter_mut().zip(&grads.0).zip(&mut self.slots) {
            match (layer, grad, slot) {
                (Layer::ComplexConv(l), LayerGrad::Complex { kernels, biases }, Slot::Complex { kernels: sk, biases: sb }) => {
                    complex_adam_step(&mut l.kernels, kernels, sk, &self.hyper)?;
                    complex_adam_step(&mut l.biases, biases, sb, &self.hyper)?;
                }
                (Layer::Conv(l), LayerGrad::Real { weights, biases }, Slot::Real { weights: sw, biases: sb }) => {
                    adam_step(l.weights.data_mut(), weights.data(), sw, &self.hyper)?;
                    adam_step(l.biases.data_mut(), biases.data(), sb, &self.hyper)?;
                }
                (Layer::Dense(l), LayerGrad::Real { weights, biases }, Slot::Real { weights: sw, biases: sb }) => {
                    adam_step(l.weights.data_mut(), weights.data(), sw, &self.hyper)?;
                    adam_step(l.biases.data_mut(), biases.data(), sb, &self.hyper)?;
                }
                (_, LayerGrad::None, Slot::Stateless) => {}
                _ => return Err(invalid_input!("gradient kind does not match layer")),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 0 is the untrained model.
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_accuracy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the best epoch.
    pub model: Model,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_accuracy: f64,
}

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,train_loss,valid_accuracy\n");
    for r in history {
        let acc = r.valid_accuracy.map_or(String::new(), |a| format!("{a}"));
        let _ = writeln!(out, "{},{},{}", r.epoch, r.train_loss, acc);
    }
    out
}

/// Rows are true classes, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Confusion {
    pub counts: Vec<Vec<usize>>,
}

impl Confusion {
    pub fn new(n_classes: usize) -> Self {
        Self {
            counts: vec![vec![0; n_classes]; n_classes],
        }
    }

    pub fn from_predictions(n_classes: usize, truth: &[usize], predicted: &[usize]) -> Self {
        let mut c = Self::new(n_classes);
        for (&t, &p) in truth.iter().zip(predicted) {
            c.counts[t][p] += 1;
        }
        c
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            t => self.correct() as f64 / t as f64,
        }
    }

    pub fn add(&mut self, other: &Confusion) {
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(orow) {
                *c += o;
            }
        }
    }
}

/// Predictions on every sample of `set`, in order.
pub fn predict_set(model: &Model, set: &EncodedSet) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(set.len());
    let order: Vec<usize> = (0..set.len()).collect();
    for chunk in order.chunks(EVAL_BATCH) {
        let (batch, _) = set.batch(chunk)?;
        out.extend(model.predict(batch)?);
    }
    Ok(out)
}

pub fn evaluate(model: &Model, set: &EncodedSet) -> Result<Confusion> {
    let predicted = predict_set(model, set)?;
    Ok(Confusion::from_predictions(model.n_classes(), set.labels(), &predicted))
}

/// Mean loss over `set` without updating anything.
pub fn mean_loss(model: &Model, set: &EncodedSet) -> Result<f64> {
    let order: Vec<usize> = (0..set.len()).collect();
    let mut total = 0.0;
    for chunk in order.chunks(EVAL_BATCH) {
        let (batch, labels) = set.batch(chunk)?;
        let (_, loss, _) = model.loss_trace(batch, &labels)?;
        total += loss * chunk.len() as f64;
    }
    Ok(total / set.len().max(1) as f64)
}

fn check_sets(model: &Model, set: &EncodedSet) -> Result<()> {
    if set.is_empty() {
        return Err(invalid_input!("empty training set"));
    }
    if set.encoding != model.config.encoding || set.len != model.config.input_len {
        return Err(invalid_input!(
            "data is {} with length {}, model expects {} with length {}",
            set.encoding,
            set.len,
            model.config.encoding,
            model.config.input_len
        ));
    }
    Ok(())
}

struct Trainer {
    optimizer: Optimizer,
    rng: ChaCha8Rng,
    order: Vec<usize>,
}

impl Trainer {
    fn new(model: &Model, n: usize) -> Self {
        Self {
            optimizer: Optimizer::new(model, model.config.lr),
            rng: ChaCha8Rng::seed_from_u64(model.config.seed ^ SHUFFLE_STREAM),
            order: (0..n).collect(),
        }
    }

    /// One pass over shuffled mini-batches; returns the sample-weighted mean loss.
    fn epoch(&mut self, model: &mut Model, set: &EncodedSet, epoch: usize) -> Result<f64> {
        self.order.shuffle(&mut self.rng);
        let mut total = 0.0;
        for chunk in self.order.chunks(model.config.batch_size) {
            let (batch, labels) = set.batch(chunk)?;
            let (loss, grads) = model.loss_and_grad(batch, &labels)?;
            if !loss.is_finite() {
                return Err(Error::TrainingFailure {
                    epoch,
                    reason: format!("loss became {loss}"),
                });
            }
            self.optimizer.step(model, &grads).map_err(|e| match e {
                Error::OptimizerDivergence(reason) => Error::TrainingFailure { epoch, reason },
                other => other,
            })?;
            total += loss * chunk.len() as f64;
        }
        Ok(total / set.len() as f64)
    }
}

/// Trains up to `max_epochs`, keeping the epoch with the highest validation accuracy.
pub fn train(model: Model, train_set: &EncodedSet, valid_set: &EncodedSet) -> Result<TrainOutcome> {
    check_sets(&model, train_set)?;
    check_sets(&model, valid_set)?;
    let mut model = model;
    let mut trainer = Trainer::new(&model, train_set.len());
    let initial_accuracy = evaluate(&model, valid_set)?.accuracy();
    let mut history = vec![EpochRecord {
        epoch: 0,
        train_loss: mean_loss(&model, train_set)?,
        valid_accuracy: Some(initial_accuracy),
    }];
    let mut best: Option<(usize, f64, Model)> = None;
    for epoch in 1..=model.config.max_epochs {
        let train_loss = trainer.epoch(&mut model, train_set, epoch)?;
        let accuracy = evaluate(&model, valid_set)?.accuracy();
        history.push(EpochRecord {
            epoch,
            train_loss,
            valid_accuracy: Some(accuracy),
        });
        if best.as_ref().is_none_or(|(_, a, _)| accuracy > *a) {
            best = Some((epoch, accuracy, model.clone()));
        }
        let best_epoch = best.as_ref().map_or(epoch, |b| b.0);
        if model.config.patience.is_some_and(|p| epoch - best_epoch >= p) {
            break;
        }
    }
    let (best_epoch, best_accuracy, model) = best.ok_or_else(|| invalid_input!("max_epochs must be >= 1"))?;
    Ok(TrainOutcome {
        model,
        history,
        best_epoch,
        best_accuracy,
    })
}

/// Trains exactly `epochs` epochs; history has no validation column.
pub fn fit_epochs(model: Model, set: &EncodedSet, epochs: usize) -> Result<(Model, Vec<EpochRecord>)> {
    check_sets(&model, set)?;
    let mut model = model;
    let mut trainer = Trainer::new(&model, set.len());
    let mut history = Vec::with_capacity(epochs);
    for epoch in 1..=epochs {
        let train_loss = trainer.epoch(&mut model, set, epoch)?;
        history.push(EpochRecord {
            epoch,
            train_loss,
            valid_accuracy: None,
        });
    }
    Ok((model, history))
}

#[derive(Debug, Clone)]
pub struct TestOutcome {
    pub accuracy: f64,
    pub confusion: Confusion,
    pub model: Model,
}

/// Fresh model from `config`, trained `best_epoch` epochs on `merged`, scored once on `test`.
pub fn retrain_and_test(config: &ModelConfig, merged: &EncodedSet, test: &EncodedSet, best_epoch: usize) -> Result<TestOutcome> {
    if best_epoch == 0 {
        return Err(invalid_input!("best_epoch must be >= 1"));
    }
    let (model, _) = fit_epochs(build(config)?, merged, best_epoch)?;
    check_sets(&model, test)?;
    let confusion = evaluate(&model, test)?;
    Ok(TestOutcome {
        accuracy: confusion.accuracy(),
        confusion,
        model,
    })
}
