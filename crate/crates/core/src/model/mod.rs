//! Encoder/projector stacks, the online/target pair, and the training step.

mod augment;
pub mod checkpoint;
pub mod mlp;
mod network;
mod optim;
mod train;

pub use augment::{augment, AugmentConfig};
pub use mlp::{Activation, ForwardTrace, Layer, LayerGrad, MlpParams, StackGrad};
pub use network::{ema_update, Architecture, EmaMomentum, MccModel, Network, ParamGrad};
pub use optim::{Optimizer, OptimizerKind, Trainable};
pub use train::{
    cc_losses, cc_train_step, four_view_batch, mcc_losses, mcc_train_step, represent, Representations,
    StepConfig, StepLoss, ViewPair, ZERO_ASSIGNMENT_FLOOR,
};
