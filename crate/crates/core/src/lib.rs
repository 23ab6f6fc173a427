//! Toolkit for reinforcement-learning experiments on job-shop scheduling:
//! seeded instance generation, an episodic dispatching environment, priority
//! dispatching rules, an exact branch-and-bound solver with brute-force
//! oracles, from-scratch DQN and PPO agents, evaluation tables, metrics logs
//! and SVG Gantt charts.

pub mod agents;
pub mod baselines;
pub mod env;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod gantt;
pub mod instance;
pub mod metrics;
pub mod policy;
pub mod schedule;
pub mod selfcheck;
pub mod solver;
pub mod timeline;

pub use agents::{PpoConfig, DqnConfig, TrainedModel};
pub use baselines::DispatchRule;
pub use env::{reset, EnvState, RewardMode, StepResult};
pub use error::{Error, Result};
pub use instance::{
    generate_batch, generate_instance, instance_digest, read_instances, write_instances,
    GeneratorConfig, Instance, ProblemType, ProofStatus, Task,
};
pub use metrics::{Clock, MetricsEvent, RunLog};
pub use policy::{Policy, PolicyRng};
pub use schedule::{Placement, PlacementMode, Schedule, ScheduleExport, Violation, ViolationKind};
pub use solver::{solve_optimal, SolveLimits, SolveResult};
pub use timeline::{Interval, Timeline};
