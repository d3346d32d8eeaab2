//! Function approximation and the two learning algorithms.

mod checkpoint;
mod dqn;
mod log;
mod mlp;
mod model;
mod optim;
mod policy;
mod replay;
mod trpo;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Algorithm,
    CheckpointMeta, Tensor, CHECKPOINT_VERSION, MAGIC,
};
pub use dqn::{argmax, dqn_train, dqn_update, td_target, DqnConfig, DqnModel};
pub use log::{LogRow, TrainingLog};
pub use mlp::{Activations, Architecture, Mlp};
pub use model::{evaluate, run_episodes, EpisodeOutcome, Model};
pub use optim::{clip_norm, Momentum};
pub use policy::{
    gaussian_kl, gaussian_logprob, normal_log_density, squash, unsquash, GaussianPolicy,
    ACTION_BOUNDS, ACTION_DIM, MAX_STD, MIN_STD,
};
pub use replay::{ReplayBuffer, Transition};
pub use trpo::{
    conjugate_gradient, fisher_vector_product, fit_value, gae, kl_gradient, normalize,
    trpo_train, trpo_update, RolloutBatch, Segment, TrpoConfig, TrpoDiagnostics, TrpoModel,
};
