//! Goal-conditioned link scorer, behavioral cloning and policy-gradient
//! training.

mod checkpoint;
mod model;
mod optim;
mod reinforce;
mod train;

pub use checkpoint::{decode_params, encode_params, load_params, save_params};
pub use model::{
    action_features, argmax_action, backprop, backprop_input, backprop_value, bc_loss_and_grad,
    edge_features, score_actions, score_input, softmax, state_input, Example, GoalMode, NavContext,
    PolicyParams, Scored, ACTION_EXTRA,
};
pub use optim::{AdamW, RmsProp};
pub use reinforce::{discounted_returns, reinforce_train, RlConfig};
pub use train::{continue_bc, train_bc, LogRow, Probe, TrainConfig, TrainLog};
