//! From-scratch learning agents in double precision: a small tanh network
//! with hand-written backpropagation and Adam, trained by DQN or PPO through
//! the environment's observation and mask.

pub mod adam;
pub mod dist;
pub mod dqn;
pub mod mlp;
pub mod model_io;
pub mod normalize;
pub mod ppo;

pub use dqn::{train_dqn, DqnAgent, DqnConfig};
pub use mlp::Mlp;
pub use model_io::{load_model, save_model, TrainedModel};
pub use ppo::{train_ppo, PpoAgent, PpoConfig};
