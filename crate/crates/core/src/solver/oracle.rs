//! Exhaustive reference solvers for tiny instances.
//!
//! [`permutation_oracle`] enumerates every precedence-consistent dispatch
//! order (and every machine choice) with earliest-gap placement and no
//! pruning. [`timing_oracle`] ignores dispatch orders entirely and searches
//! integer start times directly, so agreement between the two shows that the
//! earliest-gap family contains an optimum.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::schedule::{Placement, Schedule};
use crate::timeline::{overlaps, Interval};

pub const PERMUTATION_ORACLE_LIMIT: usize = 8;
pub const TIMING_ORACLE_LIMIT: usize = 6;

fn guard(instance: &Instance, limit: usize) -> Result<()> {
    instance.check_structure()?;
    if instance.num_tasks() > limit {
        return Err(Error::TooLarge {
            tasks: instance.num_tasks(),
            limit,
        });
    }
    Ok(())
}

pub fn permutation_oracle(instance: &Instance) -> Result<u32> {
    guard(instance, PERMUTATION_ORACLE_LIMIT)?;
    let mut schedule = Schedule::new(Arc::new(instance.clone()));
    Ok(enumerate(&mut schedule))
}

/// Same enumeration from an arbitrary partial schedule: the best makespan
/// over all completions.
pub fn permutation_oracle_from(schedule: &Schedule) -> Result<u32> {
    let remaining = schedule.instance().num_tasks() - schedule.placed_count();
    if remaining > PERMUTATION_ORACLE_LIMIT {
        return Err(Error::TooLarge {
            tasks: remaining,
            limit: PERMUTATION_ORACLE_LIMIT,
        });
    }
    Ok(enumerate(&mut schedule.clone()))
}

fn enumerate(schedule: &mut Schedule) -> u32 {
    if schedule.is_complete() {
        return schedule.makespan();
    }
    let inst = Arc::clone(schedule.instance());
    let mut best = u32::MAX;
    for job in 0..inst.num_jobs {
        let Some(task) = schedule.next_task(job).cloned() else { continue };
        for &machine in &task.eligible_machines {
            let start = schedule
                .earliest_feasible_start(job, machine)
                .expect("dispatchable task");
            schedule.commit(
                Placement {
                    job,
                    op: task.op_index,
                    machine,
                    start,
                    end: start + task.processing_time,
                },
                task.tool,
            );
            best = best.min(enumerate(schedule));
            schedule.unplace_last(job).expect("undo");
        }
    }
    best
}

struct Assigned {
    machine: usize,
    tool: Option<usize>,
    interval: Interval,
}

struct TimingSearch<'a> {
    instance: &'a Instance,
    /// Remaining job work after each task, indexed like `instance.tasks`.
    tails: Vec<u32>,
    assigned: Vec<Assigned>,
    best: u32,
}

impl TimingSearch<'_> {
    fn search(&mut self, idx: usize, makespan: u32) {
        if idx == self.instance.num_tasks() {
            self.best = self.best.min(makespan);
            return;
        }
        let task = &self.instance.tasks[idx];
        let p = task.processing_time;
        let earliest = if task.op_index == 0 {
            0
        } else {
            self.assigned[idx - 1].interval.end
        };
        for &machine in &task.eligible_machines {
            let mut start = earliest;
            // Any later start only delays this job's completion further.
            while start + p + self.tails[idx] < self.best {
                let interval = Interval::new(start, start + p);
                let clash = self.assigned.iter().any(|a| {
                    (a.machine == machine || (task.tool.is_some() && a.tool == task.tool))
                        && overlaps(&a.interval, &interval)
                });
                if !clash {
                    self.assigned.push(Assigned {
                        machine,
                        tool: task.tool,
                        interval,
                    });
                    self.search(idx + 1, makespan.max(interval.end));
                    self.assigned.pop();
                }
                start += 1;
            }
        }
    }
}

/// Minimum makespan over all integer start-time assignments within
/// `horizon` that respect precedence and machine and tool disjointness.
pub fn timing_oracle(instance: &Instance, horizon: u32) -> Result<u32> {
    guard(instance, TIMING_ORACLE_LIMIT)?;
    let ub = instance.total_processing_time();
    if u64::from(horizon) < ub {
        return Err(Error::Precondition(format!(
            "horizon {horizon} is below the serial upper bound {ub}"
        )));
    }
    let mut tails = vec![0; instance.num_tasks()];
    for j in 0..instance.num_jobs {
        let mut tail = 0;
        for k in (0..instance.tasks_per_job).rev() {
            tails[instance.task_index(j, k)] = tail;
            tail += instance.task(j, k).processing_time;
        }
    }
    let mut search = TimingSearch {
        instance,
        tails,
        assigned: Vec::with_capacity(instance.num_tasks()),
        best: horizon + 1,
    };
    search.search(0, 0);
    Ok(search.best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interleave() -> Instance {
        Instance::from_jobs(
            2,
            0,
            &[vec![(0, 2, None), (1, 2, None)], vec![(1, 2, None), (0, 2, None)]],
        )
        .unwrap()
    }

    #[test]
    fn single_task() {
        let inst = Instance::from_jobs(1, 0, &[vec![(0, 5, None)]]).unwrap();
        assert_eq!(permutation_oracle(&inst).unwrap(), 5);
        assert_eq!(timing_oracle(&inst, 5).unwrap(), 5);
    }

    #[test]
    fn perfect_interleave() {
        // The 6 interleavings of two 2-task chains, enumerated by hand: every
        // one packs the other job's first task into the idle machine at time
        // 0, so all reach 4, which is also each job's chain length.
        let inst = interleave();
        assert_eq!(permutation_oracle(&inst).unwrap(), 4);
        assert_eq!(timing_oracle(&inst, 8).unwrap(), 4);
    }

    #[test]
    fn guards() {
        let inst = crate::instance::generate_instance(
            &crate::instance::GeneratorConfig::jssp(3, 3, 3, 0),
            0,
        )
        .unwrap();
        assert!(matches!(
            permutation_oracle(&inst),
            Err(Error::TooLarge { tasks: 9, limit: 8 })
        ));
        assert!(matches!(timing_oracle(&inst, 100), Err(Error::TooLarge { .. })));
        assert!(timing_oracle(&interleave(), 7).is_err());
    }
}
