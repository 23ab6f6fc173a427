//! Exact makespan minimization by depth-first branch-and-bound.
//!
//! Nodes are partial schedules. A child dispatches the next task of some job
//! (on some eligible machine, for flexible instances) at its earliest
//! feasible start, gaps included. Dispatch sequences built this way reach
//! every active schedule, so for makespan the search family contains an
//! optimum; the brute-force oracles in [`oracle`] check this on small
//! instances, tools included.
//!
//! Branching is restricted to a conflict set in the Giffler-Thompson
//! style, widened to cover tools and machine choice; see the private `conflict_set`.

mod bound;
pub mod oracle;

use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::instance::{Instance, ProofStatus};
use crate::schedule::{Placement, Schedule};

pub use bound::lower_bound;
pub use oracle::{permutation_oracle, timing_oracle};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveLimits {
    pub node_limit: u64,
    pub time_limit: Duration,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits {
            node_limit: 10_000_000,
            time_limit: Duration::from_secs(60),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub makespan: u32,
    pub schedule: Schedule,
    pub proof_status: ProofStatus,
    pub nodes_expanded: u64,
    pub wall_time_ms: f64,
    /// `(nodes_expanded, makespan)` each time the incumbent improved,
    /// starting with the SPT rollout at node 0.
    pub incumbent_trace: Vec<(u64, u32)>,
}

/// Schedule produced by dispatching with shortest-processing-time-first, used as the initial incumbent.
pub fn spt_rollout(instance: Arc<Instance>) -> Schedule {
    let mut schedule = Schedule::new(instance);
    let jobs = schedule.instance().num_jobs;
    while !schedule.is_complete() {
        let job = (0..jobs)
            .filter_map(|j| schedule.next_task(j).map(|t| (t.processing_time, j)))
            .min()
            .map(|(_, j)| j)
            .expect("incomplete schedule has a dispatchable job");
        schedule
            .place_earliest(job)
            .expect("next task of a dispatchable job can be placed");
    }
    schedule
}

#[derive(Clone, Copy)]
struct Child {
    end: u32,
    job: usize,
    machine: usize,
    start: u32,
}

impl Child {
    fn shares_resource(&self, other: &Child, inst: &Instance, next_op: &[usize]) -> bool {
        if self.job == other.job || self.machine == other.machine {
            return true;
        }
        let tool = |c: &Child| inst.task(c.job, next_op[c.job]).tool;
        matches!((tool(self), tool(other)), (Some(a), Some(b)) if a == b)
    }
}

/// Keeps the dispatches that can start an active completion.
///
/// Let `c*` be the earliest completion over all candidates, reached by
/// `seed`. The result is the closure, starting from `seed`, of candidates
/// starting before `c*` under "shares a job, a machine or a tool". Suppose
/// some active schedule extends the node, and take the member of the
/// closure that it starts first (on the machine it uses there). That member
/// sits at its earliest start: anything blocking a left shift would start
/// earlier, before `c*`, share a resource with it, and so also be in the
/// closure. Without tools this is exactly the Giffler-Thompson conflict set
/// on the seed's machine.
fn conflict_set(inst: &Instance, next_op: &[usize], candidates: Vec<Child>) -> Vec<Child> {
    let Some(seed) = candidates.iter().copied().min_by_key(|c| (c.end, c.job, c.machine)) else {
        return candidates;
    };
    let mut pool: Vec<Child> = candidates
        .into_iter()
        .filter(|c| c.start < seed.end)
        .collect();
    let mut chosen = Vec::with_capacity(pool.len());
    let mut frontier = vec![seed];
    pool.retain(|c| (c.job, c.machine) != (seed.job, seed.machine));
    while let Some(member) = frontier.pop() {
        let (linked, rest): (Vec<Child>, Vec<Child>) = pool
            .into_iter()
            .partition(|c| member.shares_resource(c, inst, next_op));
        pool = rest;
        frontier.extend(linked);
        chosen.push(member);
    }
    chosen
}

struct Search {
    limits: SolveLimits,
    started: Instant,
    nodes: u64,
    aborted: bool,
    best: u32,
    best_schedule: Schedule,
    trace: Vec<(u64, u32)>,
}

impl Search {
    fn out_of_budget(&mut self) -> bool {
        if self.nodes >= self.limits.node_limit
            || (self.nodes.is_multiple_of(1024) && self.started.elapsed() >= self.limits.time_limit)
        {
            self.aborted = true;
        }
        self.aborted
    }

    fn visit(&mut self, schedule: &mut Schedule) {
        if self.aborted {
            return;
        }
        self.nodes += 1;
        if self.out_of_budget() {
            return;
        }
        if schedule.is_complete() {
            let makespan = schedule.makespan();
            if makespan < self.best {
                self.best = makespan;
                self.best_schedule = schedule.clone();
                self.trace.push((self.nodes, makespan));
            }
            return;
        }

        let inst = Arc::clone(schedule.instance());
        let current = schedule.makespan();
        let mut children = Vec::new();
        for job in 0..inst.num_jobs {
            let Some(task) = schedule.next_task(job) else { continue };
            for &machine in &task.eligible_machines {
                let start = schedule.earliest_start_unchecked(task, machine);
                children.push(Child {
                    end: start + task.processing_time,
                    job,
                    machine,
                    start,
                });
            }
        }
        let next_op: Vec<usize> = (0..inst.num_jobs).map(|j| schedule.next_op(j)).collect();
        let children = conflict_set(&inst, &next_op, children);
        let mut children: Vec<Child> = children
            .into_iter()
            .filter(|c| c.end.max(current) < self.best)
            .collect();
        children.sort_by_key(|c| (c.end, c.job, c.machine));

        for child in children {
            if self.aborted {
                return;
            }
            // The incumbent may have improved since the child was generated.
            if child.end.max(current) >= self.best {
                continue;
            }
            let tool = inst.task(child.job, schedule.next_op(child.job)).tool;
            let placement = Placement {
                job: child.job,
                op: schedule.next_op(child.job),
                machine: child.machine,
                start: child.start,
                end: child.end,
            };
            schedule.commit(placement, tool);
            if lower_bound(schedule) < self.best {
                self.visit(schedule);
            }
            schedule
                .unplace_last(child.job)
                .expect("undo of the placement just made");
        }
    }
}

/// Minimizes makespan over earliest-gap dispatch sequences. Exhausting the
/// search proves optimality; a search that reaches `node_limit` expanded
/// nodes or `time_limit` reports the best incumbent as `Feasible`.
pub fn solve_optimal(instance: &Instance, limits: SolveLimits) -> Result<SolveResult> {
    instance.check_structure()?;
    let started = Instant::now();
    let instance = Arc::new(instance.clone());
    let incumbent = spt_rollout(Arc::clone(&instance));
    let best = incumbent.makespan();
    let mut search = Search {
        limits,
        started,
        nodes: 0,
        aborted: false,
        best,
        best_schedule: incumbent,
        trace: vec![(0, best)],
    };
    let mut root = Schedule::new(instance);
    search.visit(&mut root);
    let proof_status = if search.aborted {
        ProofStatus::Feasible
    } else {
        ProofStatus::Optimal
    };
    Ok(SolveResult {
        makespan: search.best,
        schedule: search.best_schedule,
        proof_status,
        nodes_expanded: search.nodes,
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        incumbent_trace: search.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_batch, GeneratorConfig};

    fn limits() -> SolveLimits {
        SolveLimits::default()
    }

    #[test]
    fn chain_sum() {
        let inst = Instance::from_jobs(2, 0, &[vec![(0, 2, None), (1, 3, None)]]).unwrap();
        let r = solve_optimal(&inst, limits()).unwrap();
        assert_eq!(r.makespan, 5);
        assert_eq!(r.proof_status, ProofStatus::Optimal);
    }

    #[test]
    fn serial_on_one_machine() {
        let inst = Instance::from_jobs(1, 0, &[vec![(0, 3, None)], vec![(0, 4, None)]]).unwrap();
        let r = solve_optimal(&inst, limits()).unwrap();
        assert_eq!(r.makespan, 7);
        assert_eq!(r.proof_status, ProofStatus::Optimal);
        assert!(r.schedule.validate().is_empty());
    }

    #[test]
    fn node_limit_one_returns_spt_incumbent() {
        for inst in generate_batch(&GeneratorConfig::jssp(3, 3, 3, 8).count(5)).unwrap() {
            let r = solve_optimal(
                &inst,
                SolveLimits {
                    node_limit: 1,
                    ..limits()
                },
            )
            .unwrap();
            assert_eq!(r.proof_status, ProofStatus::Feasible);
            assert_eq!(r.makespan, spt_rollout(Arc::new(inst.clone())).makespan());
        }
        let inst = Instance::from_jobs(2, 0, &[vec![(0, 2, None), (1, 3, None)]]).unwrap();
        let r = solve_optimal(&inst, SolveLimits { node_limit: 1, ..limits() }).unwrap();
        assert_eq!(r.proof_status, ProofStatus::Feasible);
    }

    #[test]
    fn interleave_reaches_four() {
        let inst = Instance::from_jobs(
            2,
            0,
            &[vec![(0, 2, None), (1, 2, None)], vec![(1, 2, None), (0, 2, None)]],
        )
        .unwrap();
        assert_eq!(solve_optimal(&inst, limits()).unwrap().makespan, 4);
    }

    #[test]
    fn incumbent_trace_is_non_increasing() {
        for inst in generate_batch(&GeneratorConfig::jssp(4, 4, 4, 3).count(5)).unwrap() {
            let r = solve_optimal(&inst, limits()).unwrap();
            assert!(r.incumbent_trace.windows(2).all(|w| w[0].1 > w[1].1 && w[0].0 <= w[1].0));
            assert_eq!(r.incumbent_trace.last().unwrap().1, r.makespan);
            assert!(lower_bound(&Schedule::new(Arc::new(inst))) <= r.makespan);
        }
    }

    #[test]
    fn time_limit_reports_feasible() {
        let inst = crate::instance::generate_instance(&GeneratorConfig::jssp(8, 8, 8, 1), 0).unwrap();
        let r = solve_optimal(
            &inst,
            SolveLimits {
                node_limit: u64::MAX,
                time_limit: Duration::ZERO,
            },
        )
        .unwrap();
        assert_eq!(r.proof_status, ProofStatus::Feasible);
        assert!(r.schedule.validate().is_empty());
    }
}
