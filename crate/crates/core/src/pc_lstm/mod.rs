//! Physics-kernel convolution followed by a stacked LSTM that maps fused Green
//! features of a two-element array to its 2x2 port impedance matrix.

pub mod kernel;
pub mod lstm;
pub mod model;

pub use kernel::{build_kernel, raw_kernel_weight, PhysicsKernel};
pub use lstm::{
    lstm_backward, lstm_forward, lstm_forward_batch, lstm_step, LstmGrads, LstmLayer, LstmParams,
    LstmRecord, StepRecord,
};
pub use model::{
    predict_two_port, predict_two_port_batch, relative_errors, split_indices, target_vector,
    train_two_port, two_port_history_csv, EpochRecord, ModelBundle, SampleFeatures,
    TargetNormalization, TwoPortConfig, TwoPortMeta, TwoPortPrediction, TwoPortTraining,
    TARGET_NAMES,
};
