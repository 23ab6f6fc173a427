use crate::schedule::Schedule;
use crate::timeline::Timeline;

/// Per-resource accumulator: earliest release among the remaining tasks that
/// need the resource, their total work, and the smallest tail that must still
/// run after any of them.
#[derive(Clone, Copy)]
struct Load {
    release: u32,
    work: u32,
    min_tail: u32,
}

impl Load {
    const EMPTY: Load = Load {
        release: u32::MAX,
        work: 0,
        min_tail: u32::MAX,
    };

    fn add(&mut self, head: u32, p: u32, tail: u32) {
        self.release = self.release.min(head);
        self.work += p;
        self.min_tail = self.min_tail.min(tail);
    }

    /// The remaining work must fit into idle time after the release; the
    /// last of it finishes no earlier than that, plus the shortest tail.
    fn bound(&self, timeline: &Timeline) -> u32 {
        if self.work == 0 {
            return 0;
        }
        timeline.fill_idle(self.release, self.work) + self.min_tail
    }
}

/// Admissible lower bound on the makespan of any completion of `schedule`
/// reachable without moving existing placements. It is the maximum of
///
/// * the current makespan,
/// * per job: ready time plus remaining processing,
/// * per machine: idle-time fill of the remaining work pinned to it,
/// * per tool: the same over the tool's timeline.
pub fn lower_bound(schedule: &Schedule) -> u32 {
    let inst = schedule.instance();
    let mut bound = schedule.makespan();
    let mut machines = vec![Load::EMPTY; inst.num_machines];
    let mut tools = vec![Load::EMPTY; inst.num_tools];

    for j in 0..inst.num_jobs {
        let remaining = &inst.job_tasks(j)[schedule.next_op(j)..];
        let total: u32 = remaining.iter().map(|t| t.processing_time).sum();
        let mut head = schedule.job_ready(j);
        bound = bound.max(head + total);
        let mut tail = total;
        for task in remaining {
            tail -= task.processing_time;
            if let [m] = task.eligible_machines[..] {
                machines[m].add(head, task.processing_time, tail);
            }
            if let Some(tool) = task.tool {
                tools[tool].add(head, task.processing_time, tail);
            }
            head += task.processing_time;
        }
    }
    for (load, timeline) in machines.iter().zip(schedule.machine_timelines()) {
        bound = bound.max(load.bound(timeline));
    }
    for (load, timeline) in tools.iter().zip(schedule.tool_timelines()) {
        bound = bound.max(load.bound(timeline));
    }
    bound
}
