//! Episodic dispatching environment.
//!
//! One step dispatches the next unscheduled task of the chosen job and places
//! it at its earliest feasible start without moving existing placements. An
//! episode over a `J x T` instance is exactly `J * T` steps.
//!
//! Rewards are negated and normalized by `UB`, the instance's total
//! processing time, so that maximizing return minimizes makespan:
//!
//! * [`RewardMode::Dense`]: `(C_before - C_after) / UB` every step,
//! * [`RewardMode::Sparse`]: `0` until the final step, then `-C_final / UB`.
//!
//! Both modes yield the same undiscounted episode return.
//!
//! Observation layout (length `4 * J + 1`, every entry in `[0, 1]`), per job:
//! scheduled fraction, next processing time / max processing time, job ready
//! time / UB, earliest start of the next task over its eligible machines / UB;
//! then the current makespan / UB. Finished jobs report 0 for the two
//! next-task features.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::schedule::{Placement, PlacementMode, Schedule};

pub type Observation = Vec<f64>;
pub type ActionMask = Vec<bool>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardMode {
    /// Per-step makespan delta.
    Dense,
    /// Terminal makespan only.
    Sparse,
}

impl std::str::FromStr for RewardMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(RewardMode::Dense),
            "sparse" => Ok(RewardMode::Sparse),
            other => Err(Error::config(
                "reward_mode",
                format!("`{other}` is not one of dense, sparse"),
            )),
        }
    }
}

/// Chooses the machine and start for a job's next task. The default is
/// [`Schedule::best_machine`]; environment variants may substitute their own.
pub type MachineSelector = fn(&Schedule, usize) -> Result<(usize, u32)>;

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub makespan: u32,
    pub last_placement: Placement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub mask: ActionMask,
    pub info: StepInfo,
}

#[derive(Debug, Clone)]
pub struct EnvState {
    schedule: Schedule,
    steps_taken: usize,
    mode: RewardMode,
    ub: u64,
    selector: MachineSelector,
}

/// Starts an episode on `instance`.
pub fn reset(instance: Arc<Instance>, mode: RewardMode) -> (Observation, ActionMask, EnvState) {
    let state = EnvState::new(instance, mode);
    (state.observe(), state.action_mask(), state)
}

fn default_selector(schedule: &Schedule, job: usize) -> Result<(usize, u32)> {
    schedule.best_machine(job)
}

impl EnvState {
    pub fn new(instance: Arc<Instance>, mode: RewardMode) -> Self {
        let ub = instance.total_processing_time().max(1);
        EnvState {
            schedule: Schedule::new(instance),
            steps_taken: 0,
            mode,
            ub,
            selector: default_selector,
        }
    }

    pub fn with_selector(mut self, selector: MachineSelector) -> Self {
        self.selector = selector;
        self
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn into_schedule(self) -> Schedule {
        self.schedule
    }

    pub fn instance(&self) -> &Arc<Instance> {
        self.schedule.instance()
    }

    pub fn mode(&self) -> RewardMode {
        self.mode
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    /// Normalization constant: total processing time.
    pub fn ub(&self) -> u64 {
        self.ub
    }

    pub fn num_jobs(&self) -> usize {
        self.instance().num_jobs
    }

    pub fn observation_len(&self) -> usize {
        observation_len(self.num_jobs())
    }

    pub fn is_done(&self) -> bool {
        self.schedule.is_complete()
    }

    /// Remaining unscheduled task count of `job`.
    pub fn remaining_tasks(&self, job: usize) -> usize {
        self.instance().tasks_per_job - self.schedule.next_op(job)
    }

    /// Processing time of `job`'s next task, if it has one.
    pub fn next_processing_time(&self, job: usize) -> Option<u32> {
        self.schedule.next_task(job).map(|t| t.processing_time)
    }

    pub fn action_mask(&self) -> ActionMask {
        (0..self.num_jobs())
            .map(|j| self.schedule.next_op(j) < self.instance().tasks_per_job)
            .collect()
    }

    pub fn observe(&self) -> Observation {
        let inst = self.instance();
        let ub = self.ub as f64;
        let t = inst.tasks_per_job as f64;
        let p_max = f64::from(inst.max_processing_time().max(1));
        let mut obs = Vec::with_capacity(self.observation_len());
        for j in 0..inst.num_jobs {
            let next = self.schedule.next_task(j);
            obs.push(self.schedule.next_op(j) as f64 / t);
            obs.push(next.map_or(0.0, |task| f64::from(task.processing_time) / p_max));
            obs.push(f64::from(self.schedule.job_ready(j)) / ub);
            let earliest = match next {
                Some(_) => {
                    let (_, start) = self
                        .schedule
                        .best_machine(j)
                        .expect("job with a next task has a best machine");
                    f64::from(start) / ub
                }
                None => 0.0,
            };
            obs.push(earliest);
        }
        obs.push(f64::from(self.schedule.makespan()) / ub);
        obs
    }

    pub fn step(&mut self, action: usize) -> Result<StepResult> {
        if action >= self.num_jobs() {
            return Err(Error::InvalidAction {
                action,
                reason: format!("only {} jobs exist", self.num_jobs()),
            });
        }
        if self.schedule.next_task(action).is_none() {
            return Err(Error::InvalidAction {
                action,
                reason: "job has no unscheduled task".into(),
            });
        }
        let before = self.schedule.makespan();
        let (machine, start) = (self.selector)(&self.schedule, action)?;
        let placement = self
            .schedule
            .place_task(action, machine, start, PlacementMode::Feasible)?;
        self.steps_taken += 1;
        let after = self.schedule.makespan();
        let done = self.is_done();
        let ub = self.ub as f64;
        let reward = match self.mode {
            RewardMode::Dense => -f64::from(after - before) / ub,
            RewardMode::Sparse if done => -f64::from(after) / ub,
            RewardMode::Sparse => 0.0,
        };
        Ok(StepResult {
            observation: self.observe(),
            reward,
            done,
            mask: self.action_mask(),
            info: StepInfo {
                makespan: after,
                last_placement: placement,
            },
        })
    }
}

pub fn observation_len(num_jobs: usize) -> usize {
    4 * num_jobs + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, GeneratorConfig};

    fn single(p: u32) -> Arc<Instance> {
        Arc::new(Instance::from_jobs(1, 0, &[vec![(0, p, None)]]).unwrap())
    }

    #[test]
    fn reset_shapes() {
        let inst = Arc::new(generate_instance(&GeneratorConfig::jssp(6, 6, 6, 42), 0).unwrap());
        let (obs, mask, state) = reset(inst.clone(), RewardMode::Dense);
        assert_eq!(obs.len(), 25);
        assert_eq!(mask, vec![true; 6]);
        assert_eq!(state.steps_taken(), 0);
        let (obs2, mask2, _) = reset(inst, RewardMode::Dense);
        assert_eq!((obs, mask), (obs2, mask2));

        let (obs, mask, _) = reset(single(5), RewardMode::Dense);
        assert_eq!(obs.len(), 5);
        assert_eq!(mask, vec![true]);
    }

    #[test]
    fn single_task_rewards() {
        for mode in [RewardMode::Dense, RewardMode::Sparse] {
            let (_, _, mut state) = reset(single(5), mode);
            let r = state.step(0).unwrap();
            assert_eq!(r.reward, -1.0);
            assert!(r.done);
            assert_eq!(r.info.makespan, 5);
            assert_eq!(r.mask, vec![false]);
        }
    }

    #[test]
    fn dense_two_jobs() {
        let inst = Arc::new(
            Instance::from_jobs(2, 0, &[vec![(0, 3, None)], vec![(1, 4, None)]]).unwrap(),
        );
        let (_, _, mut state) = reset(inst, RewardMode::Dense);
        assert_eq!(state.step(0).unwrap().reward, -3.0 / 7.0);
        assert_eq!(state.step(1).unwrap().reward, -(4.0 - 3.0) / 7.0);
    }

    #[test]
    fn masked_and_out_of_range_actions_fail() {
        let (_, _, mut state) = reset(single(2), RewardMode::Dense);
        assert!(matches!(state.step(1), Err(Error::InvalidAction { action: 1, .. })));
        state.step(0).unwrap();
        assert!(matches!(state.step(0), Err(Error::InvalidAction { action: 0, .. })));
    }

    #[test]
    fn initial_and_terminal_features() {
        let inst = Arc::new(generate_instance(&GeneratorConfig::jssp(3, 2, 2, 1), 0).unwrap());
        let (obs, _, mut state) = reset(inst, RewardMode::Sparse);
        for j in 0..3 {
            assert_eq!(obs[4 * j], 0.0);
        }
        assert_eq!(obs[12], 0.0);
        while let Some(j) = state.action_mask().iter().position(|&m| m) {
            state.step(j).unwrap();
        }
        let obs = state.observe();
        for j in 0..3 {
            assert_eq!(obs[4 * j], 1.0);
            assert_eq!(obs[4 * j + 1], 0.0);
            assert_eq!(obs[4 * j + 3], 0.0);
        }
        assert!(state.action_mask().iter().all(|&m| !m));
        assert!(state.schedule().validate().is_empty());
    }

    #[test]
    fn selector_hook_is_used() {
        fn last_machine(s: &Schedule, job: usize) -> Result<(usize, u32)> {
            let task = s.next_task(job).expect("next task");
            let m = *task.eligible_machines.last().expect("eligible");
            Ok((m, s.earliest_feasible_start(job, m)?))
        }
        let inst = Arc::new(
            generate_instance(&GeneratorConfig::jssp(2, 2, 3, 4).flexible(), 0).unwrap(),
        );
        let mut state = EnvState::new(inst.clone(), RewardMode::Dense).with_selector(last_machine);
        let r = state.step(0).unwrap();
        assert_eq!(
            r.info.last_placement.machine,
            *inst.task(0, 0).eligible_machines.last().unwrap()
        );
    }
}
