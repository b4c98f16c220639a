//! Small neural-network substrate: dense layers, softmax, MSE, valid 2-D
//! convolution, analytic gradients and an adaptive-moment optimizer.
//!
//! Every backward function takes the record produced by its forward pass, so a
//! gradient cannot be requested for a forward evaluation that was never recorded.

pub mod checkpoint;
pub mod dense;
pub mod gradcheck;
pub mod ops;
pub mod optim;
pub mod tensor;

pub use checkpoint::{Checkpoint, LayerRecord, CHECKPOINT_SCHEMA_VERSION};
pub use dense::{glorot_uniform, sigmoid, Activation, DenseGrads, DenseLayer, DenseRecord};
pub use ops::{conv2d, conv2d_backward, mse, mse_gradient, softmax, softmax_backward};
pub use optim::{cosine_learning_rate, Adam, AdamConfig, ParamSlot};
pub use tensor::Tensor2;
