//! Hybrid complex/real network, real baseline, input encodings and training.

pub mod checkpoint;
mod config;
mod encode;
mod network;
mod train;

pub use config::{ComplexConvSpec, ConvSpec, InputEncoding, ModelConfig};
pub use encode::{encode_dataset, encode_input, EncodedSet, Scaler};
pub use network::{
    build, build_baseline_real, build_hybrid, Batch, ForwardTrace, Gradients, Layer, LayerGrad, LayerSummary, Model,
    ParamTable,
};
pub use train::{
    evaluate, fit_epochs, history_csv, mean_loss, predict_set, retrain_and_test, train, Confusion, EpochRecord,
    Optimizer, TestOutcome, TrainOutcome,
};
