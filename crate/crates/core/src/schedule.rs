//! Partial schedules with per-resource busy timelines.
//!
//! Every environment, dispatching rule and the exact solver build schedules
//! through [`Schedule::place_task`], which only ever inserts: placements that
//! already exist never move. Candidate starts come from
//! [`Schedule::earliest_feasible_start`], which may fill idle gaps left
//! between earlier placements.

use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Resource, Result};
use crate::instance::{Instance, Task};
use crate::timeline::{earliest_common_fit, overlaps, Interval, Timeline};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Placement {
    pub job: usize,
    pub op: usize,
    pub machine: usize,
    pub start: u32,
    pub end: u32,
}

impl Placement {
    pub fn interval(&self) -> Interval {
        Interval::new(self.start, self.end)
    }
}

/// How strictly [`Schedule::place_task`] checks the requested start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacementMode {
    /// The start must be the earliest feasible one.
    Strict,
    /// Any start that keeps the schedule valid.
    Feasible,
}

#[derive(Debug, Clone)]
pub struct Schedule {
    instance: Arc<Instance>,
    placements: Vec<Option<Placement>>,
    machine_timelines: Vec<Timeline>,
    tool_timelines: Vec<Timeline>,
    job_ready: Vec<u32>,
    next_op: Vec<usize>,
    placed: usize,
}

impl Schedule {
    pub fn new(instance: Arc<Instance>) -> Self {
        Schedule {
            placements: vec![None; instance.num_tasks()],
            machine_timelines: vec![Timeline::new(); instance.num_machines],
            tool_timelines: vec![Timeline::new(); instance.num_tools],
            job_ready: vec![0; instance.num_jobs],
            next_op: vec![0; instance.num_jobs],
            placed: 0,
            instance,
        }
    }

    /// Rebuilds a schedule from raw placements without enforcing any
    /// invariant, so that [`Schedule::validate`] can report what is wrong.
    /// Only indexing problems (unknown job, op, machine or a task placed
    /// twice) are rejected.
    pub fn from_placements(instance: Arc<Instance>, placements: &[Placement]) -> Result<Self> {
        let mut schedule = Schedule::new(instance);
        let inst = Arc::clone(&schedule.instance);
        for p in placements {
            if p.job >= inst.num_jobs || p.op >= inst.tasks_per_job {
                return Err(Error::Precondition(format!(
                    "placement references unknown task ({}, {})",
                    p.job, p.op
                )));
            }
            if p.machine >= inst.num_machines {
                return Err(Error::Precondition(format!(
                    "placement of ({}, {}) references unknown machine {}",
                    p.job, p.op, p.machine
                )));
            }
            let idx = inst.task_index(p.job, p.op);
            if schedule.placements[idx].is_some() {
                return Err(Error::Precondition(format!(
                    "task ({}, {}) placed twice",
                    p.job, p.op
                )));
            }
            schedule.placements[idx] = Some(*p);
            schedule.machine_timelines[p.machine].insert_unchecked(p.interval());
            if let Some(tool) = inst.tasks[idx].tool {
                schedule.tool_timelines[tool].insert_unchecked(p.interval());
            }
            schedule.placed += 1;
        }
        for j in 0..inst.num_jobs {
            let prefix = (0..inst.tasks_per_job)
                .take_while(|&k| schedule.placements[inst.task_index(j, k)].is_some())
                .count();
            schedule.next_op[j] = prefix;
            schedule.job_ready[j] = if prefix == 0 {
                0
            } else {
                schedule.placements[inst.task_index(j, prefix - 1)]
                    .map_or(0, |p| p.end)
            };
        }
        Ok(schedule)
    }

    pub fn instance(&self) -> &Arc<Instance> {
        &self.instance
    }

    pub fn machine_timelines(&self) -> &[Timeline] {
        &self.machine_timelines
    }

    pub fn tool_timelines(&self) -> &[Timeline] {
        &self.tool_timelines
    }

    pub fn job_ready(&self, job: usize) -> u32 {
        self.job_ready[job]
    }

    /// Number of scheduled tasks of `job`.
    pub fn next_op(&self, job: usize) -> usize {
        self.next_op[job]
    }

    pub fn placed_count(&self) -> usize {
        self.placed
    }

    pub fn is_complete(&self) -> bool {
        self.placed == self.placements.len()
    }

    pub fn placement(&self, job: usize, op: usize) -> Option<&Placement> {
        self.placements[self.instance.task_index(job, op)].as_ref()
    }

    /// All placements in task order.
    pub fn placements(&self) -> impl Iterator<Item = &Placement> + '_ {
        self.placements.iter().flatten()
    }

    /// Next unscheduled task of `job`, if any.
    pub fn next_task(&self, job: usize) -> Option<&Task> {
        let k = self.next_op[job];
        (k < self.instance.tasks_per_job).then(|| self.instance.task(job, k))
    }

    pub fn makespan(&self) -> u32 {
        self.placements().map(|p| p.end).max().unwrap_or(0)
    }

    fn require_next(&self, job: usize) -> Result<&Task> {
        if job >= self.instance.num_jobs {
            return Err(Error::Precondition(format!(
                "job {job} out of range (instance has {} jobs)",
                self.instance.num_jobs
            )));
        }
        self.next_task(job)
            .ok_or_else(|| Error::Precondition(format!("job {job} has no unscheduled task")))
    }

    fn require_eligible(task: &Task, machine: usize) -> Result<()> {
        if task.eligible_machines.binary_search(&machine).is_err() {
            return Err(Error::Precondition(format!(
                "machine {machine} is not eligible for job {} op {}",
                task.job_id, task.op_index
            )));
        }
        Ok(())
    }

    /// Earliest start of `job`'s next task on `machine`: not before the job's
    /// previous task ends, and idle on the machine and on the task's tool.
    pub fn earliest_feasible_start(&self, job: usize, machine: usize) -> Result<u32> {
        let task = self.require_next(job)?;
        Self::require_eligible(task, machine)?;
        Ok(self.earliest_start_unchecked(task, machine))
    }

    #[inline]
    pub(crate) fn earliest_start_unchecked(&self, task: &Task, machine: usize) -> u32 {
        let from = self.job_ready[task.job_id];
        let machine_tl = &self.machine_timelines[machine];
        match task.tool {
            Some(tool) => earliest_common_fit(
                &[machine_tl, &self.tool_timelines[tool]],
                from,
                task.processing_time,
            ),
            None => machine_tl.earliest_fit(from, task.processing_time),
        }
    }

    /// Eligible machine giving the earliest start, lowest machine id on ties.
    pub fn best_machine(&self, job: usize) -> Result<(usize, u32)> {
        let task = self.require_next(job)?;
        Ok(task
            .eligible_machines
            .iter()
            .map(|&m| (m, self.earliest_start_unchecked(task, m)))
            .min_by_key(|&(m, start)| (start, m))
            .expect("eligible machines are non-empty"))
    }

    /// Places `job`'s next task on `machine` at `start`.
    pub fn place_task(
        &mut self,
        job: usize,
        machine: usize,
        start: u32,
        mode: PlacementMode,
    ) -> Result<Placement> {
        let task = self.require_next(job)?;
        Self::require_eligible(task, machine)?;
        let (op, tool, p) = (task.op_index, task.tool, task.processing_time);
        let placement = Placement {
            job,
            op,
            machine,
            start,
            end: start + p,
        };
        let iv = placement.interval();
        let constraint = |resource, busy: Interval| Error::Constraint {
            job,
            op,
            start,
            end: iv.end,
            resource,
            busy_start: busy.start,
            busy_end: busy.end,
        };
        let ready = self.job_ready[job];
        if start < ready {
            let prev = self.placements[self.instance.task_index(job, op - 1)]
                .expect("predecessor of a ready job is placed");
            return Err(constraint(Resource::Job(job), prev.interval()));
        }
        if let Some(busy) = self.machine_timelines[machine].conflict(iv) {
            return Err(constraint(Resource::Machine(machine), busy));
        }
        if let Some(tool) = tool {
            if let Some(busy) = self.tool_timelines[tool].conflict(iv) {
                return Err(constraint(Resource::Tool(tool), busy));
            }
        }
        if mode == PlacementMode::Strict {
            let earliest = self.earliest_feasible_start(job, machine)?;
            if start != earliest {
                return Err(Error::Precondition(format!(
                    "strict placement of job {job} op {op} on machine {machine} must start at {earliest}, not {start}"
                )));
            }
        }
        self.commit(placement, tool);
        Ok(placement)
    }

    /// Places `job`'s next task at its earliest start on the best machine.
    pub fn place_earliest(&mut self, job: usize) -> Result<Placement> {
        let (machine, start) = self.best_machine(job)?;
        let task = self.instance.task(job, self.next_op[job]);
        let (tool, op, p) = (task.tool, task.op_index, task.processing_time);
        let placement = Placement {
            job,
            op,
            machine,
            start,
            end: start + p,
        };
        self.commit(placement, tool);
        Ok(placement)
    }

    /// Commits a placement already known to be feasible.
    pub(crate) fn commit(&mut self, placement: Placement, tool: Option<usize>) {
        let iv = placement.interval();
        self.machine_timelines[placement.machine].insert_unchecked(iv);
        if let Some(tool) = tool {
            self.tool_timelines[tool].insert_unchecked(iv);
        }
        self.placements[self.instance.task_index(placement.job, placement.op)] = Some(placement);
        self.job_ready[placement.job] = placement.end;
        self.next_op[placement.job] += 1;
        self.placed += 1;
    }

    /// Removes the most recently scheduled task of `job`.
    pub fn unplace_last(&mut self, job: usize) -> Result<Placement> {
        let k = self.next_op[job];
        if k == 0 {
            return Err(Error::Precondition(format!("job {job} has nothing scheduled")));
        }
        let idx = self.instance.task_index(job, k - 1);
        let placement = self.placements[idx].take().expect("scheduled prefix is placed");
        self.machine_timelines[placement.machine].remove(placement.interval());
        if let Some(tool) = self.instance.tasks[idx].tool {
            self.tool_timelines[tool].remove(placement.interval());
        }
        self.next_op[job] = k - 1;
        self.job_ready[job] = if k == 1 {
            0
        } else {
            self.placements[idx - 1].map_or(0, |p| p.end)
        };
        self.placed -= 1;
        Ok(placement)
    }

    /// Recomputes every invariant from the raw placements and reports all
    /// violations. Empty means the schedule is valid.
    pub fn validate(&self) -> Vec<Violation> {
        self.validate_with(overlaps)
    }

    /// [`Schedule::validate`] with a caller-supplied interval overlap test.
    #[doc(hidden)]
    pub fn validate_with(&self, overlap: fn(&Interval, &Interval) -> bool) -> Vec<Violation> {
        let inst = &self.instance;
        let mut out = Vec::new();
        let mut by_machine: Vec<Vec<&Placement>> = vec![Vec::new(); inst.num_machines];
        let mut by_tool: Vec<Vec<&Placement>> = vec![Vec::new(); inst.num_tools];

        for (idx, slot) in self.placements.iter().enumerate() {
            let Some(p) = slot else { continue };
            let task = &inst.tasks[idx];
            let id = (task.job_id, task.op_index);
            if p.job != task.job_id || p.op != task.op_index {
                out.push(Violation::new(
                    ViolationKind::Eligibility,
                    vec![id],
                    format!("placement labelled ({}, {}) stored for task {id:?}", p.job, p.op),
                ));
            }
            if task.eligible_machines.binary_search(&p.machine).is_err() {
                out.push(Violation::new(
                    ViolationKind::Eligibility,
                    vec![id],
                    format!("machine {} not in {:?}", p.machine, task.eligible_machines),
                ));
            }
            if p.end <= p.start || p.end - p.start != task.processing_time {
                out.push(Violation::new(
                    ViolationKind::NegativeTime,
                    vec![id],
                    format!(
                        "interval [{}, {}) does not span processing time {}",
                        p.start, p.end, task.processing_time
                    ),
                ));
            }
            if task.op_index > 0 {
                match self.placements[idx - 1] {
                    None => out.push(Violation::new(
                        ViolationKind::Precedence,
                        vec![(task.job_id, task.op_index - 1), id],
                        "placed before its predecessor".into(),
                    )),
                    Some(prev) if p.start < prev.end => out.push(Violation::new(
                        ViolationKind::Precedence,
                        vec![(task.job_id, task.op_index - 1), id],
                        format!("starts at {} before predecessor ends at {}", p.start, prev.end),
                    )),
                    Some(_) => {}
                }
            }
            if p.machine < inst.num_machines {
                by_machine[p.machine].push(p);
            }
            if let Some(tool) = task.tool {
                by_tool[tool].push(p);
            }
        }

        let mut pairwise = |groups: &[Vec<&Placement>], kind: ViolationKind, label: &str| {
            for (r, group) in groups.iter().enumerate() {
                for (i, a) in group.iter().enumerate() {
                    for b in &group[i + 1..] {
                        if overlap(&a.interval(), &b.interval()) {
                            out.push(Violation::new(
                                kind,
                                vec![(a.job, a.op), (b.job, b.op)],
                                format!(
                                    "{label} {r}: [{}, {}) overlaps [{}, {})",
                                    a.start, a.end, b.start, b.end
                                ),
                            ));
                        }
                    }
                }
            }
        };
        pairwise(&by_machine, ViolationKind::MachineOverlap, "machine");
        pairwise(&by_tool, ViolationKind::ToolOverlap, "tool");
        out
    }

    pub fn to_export(&self) -> ScheduleExport {
        ScheduleExport {
            instance_id: self.instance.id.clone(),
            makespan: self.makespan(),
            placements: self
                .placements
                .iter()
                .enumerate()
                .filter_map(|(idx, p)| {
                    p.map(|p| PlacementRecord {
                        job: p.job,
                        op: p.op,
                        machine: p.machine,
                        start: p.start,
                        end: p.end,
                        tool: self.instance.tasks[idx].tool,
                    })
                })
                .collect(),
            instance: (*self.instance).clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Precedence,
    MachineOverlap,
    ToolOverlap,
    Eligibility,
    NegativeTime,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::Precedence => "precedence",
            ViolationKind::MachineOverlap => "machine-overlap",
            ViolationKind::ToolOverlap => "tool-overlap",
            ViolationKind::Eligibility => "eligibility",
            ViolationKind::NegativeTime => "negative-time",
        };
        f.write_str(s)
    }
}

/// One broken invariant and the `(job, op)` tasks involved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub tasks: Vec<(usize, usize)>,
    pub detail: String,
}

impl Violation {
    fn new(kind: ViolationKind, tasks: Vec<(usize, usize)>, detail: String) -> Self {
        Violation {
            kind,
            tasks,
            detail,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:?}: {}", self.kind, self.tasks, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementRecord {
    pub job: usize,
    pub op: usize,
    pub machine: usize,
    pub start: u32,
    pub end: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool: Option<usize>,
}

/// Self-contained schedule file: the instance plus its placements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleExport {
    pub instance_id: String,
    pub makespan: u32,
    pub placements: Vec<PlacementRecord>,
    pub instance: Instance,
}

impl ScheduleExport {
    pub fn to_json(&self) -> String {
        serde_json::to_value(self).expect("export serializes").to_string()
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            line: e.line(),
            reason: e.to_string(),
        })
    }

    /// Rebuilds the schedule. The instance digest and the recorded makespan
    /// are checked; schedule invariants are left to [`Schedule::validate`].
    pub fn to_schedule(&self) -> Result<Schedule> {
        self.instance.validate()?;
        if self.instance.id != self.instance_id {
            return Err(Error::InvalidInstance(format!(
                "export names instance {} but embeds {}",
                self.instance_id, self.instance.id
            )));
        }
        let placements: Vec<Placement> = self
            .placements
            .iter()
            .map(|r| Placement {
                job: r.job,
                op: r.op,
                machine: r.machine,
                start: r.start,
                end: r.end,
            })
            .collect();
        let schedule = Schedule::from_placements(Arc::new(self.instance.clone()), &placements)?;
        if schedule.makespan() != self.makespan {
            return Err(Error::InvalidInstance(format!(
                "recorded makespan {} differs from placements ({})",
                self.makespan,
                schedule.makespan()
            )));
        }
        Ok(schedule)
    }
}
