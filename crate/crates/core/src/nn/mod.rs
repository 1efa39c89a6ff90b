//! Dense feed-forward networks with hand-derived gradients.
//!
//! A [`HeadedNet`] is a shared body of dense layers followed by up to four
//! heads (predictive, selective, auxiliary, uncertainty). All parameters live
//! in one flat `f64` buffer; layers are views into it. Losses are expressed as
//! gradients with respect to head *probabilities* (softmax rows or sigmoid
//! values) and the engine chains them back through the output nonlinearities,
//! the heads and the body.

mod checkpoint;
mod gradcheck;
mod matrix;
mod net;
mod optim;
mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use gradcheck::grad_check;
pub use matrix::{softmax, Matrix};
pub use net::{Activation, ForwardCache, HeadKind, HeadOutputs, HeadSpec, HeadedNet, MlpSpec, ParamGroup};
pub use optim::{Optimizer, OptimizerConfig, OptimizerKind};
pub(crate) use matrix::argmax;
pub(crate) use net::sigmoid;
pub use train::{train, HeadGrads, LossEval, Objective, TrainConfig, TrainReport};
