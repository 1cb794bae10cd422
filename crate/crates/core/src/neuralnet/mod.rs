//! A small CPU convolutional network engine: sequential conv / pool / ReLU /
//! dropout / fully-connected / softmax stacks, softmax cross-entropy
//! gradients, and an SGD solver with momentum, weight decay and `step` / `inv`
//! learning-rate policies.

mod checkpoint;
pub mod gradcheck;
mod network;
mod solver;
mod tensor;

pub use checkpoint::Checkpoint;
pub use network::{ForwardPass, Gradients, LayerSpec, Mode, Network, NetworkSpec};
pub use solver::{
    argmax_rows, evaluate_accuracy, lr_at, sgd_step, train, LabeledTensors, LrPolicy, SolverConfig, TraceRow,
    TrainOutcome,
};
pub use tensor::{Scalar, Tensor};
