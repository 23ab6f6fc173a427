//! Scheduling problem instances: data model, seeded generation, canonical
//! digests and the newline-delimited JSON instance file format.
//!
//! Generation is a pure function of `(config, stream_index)`. The random
//! source is ChaCha8 seeded from `config.seed`, with `stream_index` selecting
//! the ChaCha stream, so every instance of a batch has an independent and
//! platform-independent sequence. Draws happen job by job, task by task, in
//! this order: machine(s), processing time, tool.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const GENERATOR_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemType {
    #[serde(rename = "JSSP")]
    Jssp,
    #[serde(rename = "FJSSP")]
    Fjssp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProofStatus {
    Optimal,
    Feasible,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub job_id: usize,
    pub op_index: usize,
    pub eligible_machines: Vec<usize>,
    pub processing_time: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceMeta {
    pub seed: u64,
    pub generator_version: u32,
}

/// An immutable scheduling problem. `tasks` is ordered by `(job_id, op_index)`,
/// so the task of job `j` at position `k` lives at index `j * tasks_per_job + k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub id: String,
    pub problem_type: ProblemType,
    pub with_tools: bool,
    pub num_jobs: usize,
    pub tasks_per_job: usize,
    pub num_machines: usize,
    pub num_tools: usize,
    pub tasks: Vec<Task>,
    pub meta: InstanceMeta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimal_makespan: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proof_status: Option<ProofStatus>,
}

/// The digest covers everything except `id` and the solver annotation.
#[derive(Serialize)]
struct CanonicalView<'a> {
    problem_type: ProblemType,
    with_tools: bool,
    num_jobs: usize,
    tasks_per_job: usize,
    num_machines: usize,
    num_tools: usize,
    tasks: &'a [Task],
    meta: &'a InstanceMeta,
}

impl Instance {
    /// Builds an instance from its parts, computing the digest id.
    pub fn new(
        problem_type: ProblemType,
        num_machines: usize,
        num_tools: usize,
        jobs: Vec<Vec<Task>>,
        meta: InstanceMeta,
    ) -> Result<Self> {
        let num_jobs = jobs.len();
        let tasks_per_job = jobs.first().map_or(0, Vec::len);
        let tasks: Vec<Task> = jobs.into_iter().flatten().collect();
        let mut instance = Instance {
            id: String::new(),
            problem_type,
            with_tools: num_tools > 0,
            num_jobs,
            tasks_per_job,
            num_machines,
            num_tools,
            tasks,
            meta,
            optimal_makespan: None,
            proof_status: None,
        };
        instance.check_structure()?;
        instance.id = instance_digest(&instance);
        Ok(instance)
    }

    /// Convenience constructor for hand-written JSSP instances: one
    /// `(machine, processing_time, tool)` triple per task, per job.
    pub fn from_jobs(
        num_machines: usize,
        num_tools: usize,
        jobs: &[Vec<(usize, u32, Option<usize>)>],
    ) -> Result<Self> {
        let jobs = jobs
            .iter()
            .enumerate()
            .map(|(j, ops)| {
                ops.iter()
                    .enumerate()
                    .map(|(k, &(m, p, tool))| Task {
                        job_id: j,
                        op_index: k,
                        eligible_machines: vec![m],
                        processing_time: p,
                        tool,
                    })
                    .collect()
            })
            .collect();
        let meta = InstanceMeta {
            seed: 0,
            generator_version: GENERATOR_VERSION,
        };
        Instance::new(ProblemType::Jssp, num_machines, num_tools, jobs, meta)
    }

    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }

    #[inline]
    pub fn task_index(&self, job: usize, op: usize) -> usize {
        job * self.tasks_per_job + op
    }

    #[inline]
    pub fn task(&self, job: usize, op: usize) -> &Task {
        &self.tasks[self.task_index(job, op)]
    }

    pub fn job_tasks(&self, job: usize) -> &[Task] {
        let start = job * self.tasks_per_job;
        &self.tasks[start..start + self.tasks_per_job]
    }

    /// Sum of all processing times; a makespan upper bound under
    /// earliest-gap placement and the environment's normalization constant.
    pub fn total_processing_time(&self) -> u64 {
        self.tasks.iter().map(|t| u64::from(t.processing_time)).sum()
    }

    pub fn max_processing_time(&self) -> u32 {
        self.tasks.iter().map(|t| t.processing_time).max().unwrap_or(0)
    }

    /// The proven optimum, if the instance carries one.
    pub fn proven_optimum(&self) -> Option<u32> {
        match self.proof_status {
            Some(ProofStatus::Optimal) => self.optimal_makespan,
            _ => None,
        }
    }

    pub fn shape(&self) -> String {
        format!("{}x{}", self.num_jobs, self.tasks_per_job)
    }

    /// Checks every structural invariant except the digest.
    pub fn check_structure(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        if self.num_jobs == 0 || self.tasks_per_job == 0 || self.num_machines == 0 {
            return bad("num_jobs, tasks_per_job and num_machines must be at least 1".into());
        }
        if self.with_tools != (self.num_tools > 0) {
            return bad(format!(
                "with_tools = {} inconsistent with num_tools = {}",
                self.with_tools, self.num_tools
            ));
        }
        if self.tasks.len() != self.num_jobs * self.tasks_per_job {
            return bad(format!(
                "expected {} tasks, found {}",
                self.num_jobs * self.tasks_per_job,
                self.tasks.len()
            ));
        }
        if let Some(0) = self.optimal_makespan {
            return bad("optimal_makespan must be positive".into());
        }
        if self.optimal_makespan.is_some() != self.proof_status.is_some() {
            return bad("optimal_makespan and proof_status must appear together".into());
        }
        for (i, task) in self.tasks.iter().enumerate() {
            let (j, k) = (i / self.tasks_per_job, i % self.tasks_per_job);
            let at = format!("task ({j}, {k})");
            if task.job_id != j || task.op_index != k {
                return bad(format!(
                    "{at} is labelled ({}, {})",
                    task.job_id, task.op_index
                ));
            }
            if task.processing_time == 0 {
                return bad(format!("{at} has zero processing time"));
            }
            if task.eligible_machines.is_empty() {
                return bad(format!("{at} has no eligible machine"));
            }
            if task.eligible_machines.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("{at} eligible machines are not strictly ascending"));
            }
            if task.eligible_machines.iter().any(|&m| m >= self.num_machines) {
                return bad(format!("{at} references a machine >= {}", self.num_machines));
            }
            if self.problem_type == ProblemType::Jssp && task.eligible_machines.len() != 1 {
                return bad(format!("{at} is a JSSP task with several eligible machines"));
            }
            match task.tool {
                Some(tool) if tool >= self.num_tools => {
                    return bad(format!("{at} references tool {tool} >= {}", self.num_tools))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Structural check plus digest verification.
    pub fn validate(&self) -> Result<()> {
        self.check_structure()?;
        let computed = instance_digest(self);
        if computed != self.id {
            return Err(Error::InvalidInstance(format!(
                "id {} does not match digest {computed}",
                self.id
            )));
        }
        Ok(())
    }

    /// Canonical single-line JSON record (sorted keys).
    pub fn to_record(&self) -> String {
        let value = serde_json::to_value(self).expect("instance serializes");
        value.to_string()
    }
}

/// Canonical bytes hashed into the instance id: sorted-key compact JSON of all
/// fields except `id`, `optimal_makespan` and `proof_status`.
pub fn canonical_bytes(instance: &Instance) -> Vec<u8> {
    let view = CanonicalView {
        problem_type: instance.problem_type,
        with_tools: instance.with_tools,
        num_jobs: instance.num_jobs,
        tasks_per_job: instance.tasks_per_job,
        num_machines: instance.num_machines,
        num_tools: instance.num_tools,
        tasks: &instance.tasks,
        meta: &instance.meta,
    };
    // Round-trip through `Value`, whose object map is ordered by key.
    serde_json::to_value(&view)
        .expect("canonical view serializes")
        .to_string()
        .into_bytes()
}

/// SHA-256 hex of [`canonical_bytes`].
pub fn instance_digest(instance: &Instance) -> String {
    hex::encode(Sha256::digest(canonical_bytes(instance)))
}

fn default_count() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub problem_type: ProblemType,
    #[serde(default)]
    pub with_tools: bool,
    pub num_jobs: usize,
    pub tasks_per_job: usize,
    pub num_machines: usize,
    #[serde(default)]
    pub num_tools: usize,
    pub runtime_lo: u32,
    pub runtime_hi: u32,
    #[serde(default = "default_count")]
    pub count: usize,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn jssp(num_jobs: usize, tasks_per_job: usize, num_machines: usize, seed: u64) -> Self {
        GeneratorConfig {
            problem_type: ProblemType::Jssp,
            with_tools: false,
            num_jobs,
            tasks_per_job,
            num_machines,
            num_tools: 0,
            runtime_lo: 1,
            runtime_hi: 10,
            count: 1,
            seed,
        }
    }

    pub fn with_tools(mut self, num_tools: usize) -> Self {
        self.with_tools = true;
        self.num_tools = num_tools;
        self
    }

    pub fn flexible(mut self) -> Self {
        self.problem_type = ProblemType::Fjssp;
        self
    }

    pub fn runtimes(mut self, lo: u32, hi: u32) -> Self {
        self.runtime_lo = lo;
        self.runtime_hi = hi;
        self
    }

    pub fn count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (field, value) in [
            ("num_jobs", self.num_jobs),
            ("tasks_per_job", self.tasks_per_job),
            ("num_machines", self.num_machines),
            ("count", self.count),
        ] {
            if value == 0 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        if self.with_tools && self.num_tools == 0 {
            return Err(Error::config("num_tools", "must be at least 1 when with_tools is set"));
        }
        if !self.with_tools && self.num_tools != 0 {
            return Err(Error::config("num_tools", "must be 0 when with_tools is false"));
        }
        if self.runtime_lo == 0 {
            return Err(Error::config("runtime_lo", "must be at least 1"));
        }
        if self.runtime_lo > self.runtime_hi {
            return Err(Error::config("runtime_hi", "must be >= runtime_lo"));
        }
        Ok(())
    }
}

/// Uniform integer in `lo..=hi`, sampled on `u64` so results do not depend on
/// the platform's pointer width.
fn uniform(rng: &mut ChaCha8Rng, lo: u64, hi: u64) -> u64 {
    rng.gen_range(lo..=hi)
}

fn shuffle<T>(rng: &mut ChaCha8Rng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = uniform(rng, 0, i as u64) as usize;
        items.swap(i, j);
    }
}

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn generate_instance(config: &GeneratorConfig, stream_index: usize) -> Result<Instance> {
    config.validate()?;
    if stream_index >= config.count {
        return Err(Error::config(
            "count",
            format!("stream index {stream_index} is outside the batch of {}", config.count),
        ));
    }
    let mut rng = stream_rng(config.seed, stream_index as u64);
    let m = config.num_machines;
    let permuted = config.problem_type == ProblemType::Jssp && config.tasks_per_job == m;

    let mut jobs = Vec::with_capacity(config.num_jobs);
    for j in 0..config.num_jobs {
        let route = if permuted {
            let mut route: Vec<usize> = (0..m).collect();
            shuffle(&mut rng, &mut route);
            Some(route)
        } else {
            None
        };
        let mut ops = Vec::with_capacity(config.tasks_per_job);
        for k in 0..config.tasks_per_job {
            let eligible_machines = match (config.problem_type, &route) {
                (ProblemType::Jssp, Some(route)) => vec![route[k]],
                (ProblemType::Jssp, None) => vec![uniform(&mut rng, 0, m as u64 - 1) as usize],
                (ProblemType::Fjssp, _) => {
                    let size = uniform(&mut rng, 1, m as u64) as usize;
                    let mut all: Vec<usize> = (0..m).collect();
                    shuffle(&mut rng, &mut all);
                    let mut subset = all[..size].to_vec();
                    subset.sort_unstable();
                    subset
                }
            };
            let processing_time = uniform(
                &mut rng,
                u64::from(config.runtime_lo),
                u64::from(config.runtime_hi),
            ) as u32;
            let tool = config
                .with_tools
                .then(|| uniform(&mut rng, 0, config.num_tools as u64 - 1) as usize);
            ops.push(Task {
                job_id: j,
                op_index: k,
                eligible_machines,
                processing_time,
                tool,
            });
        }
        jobs.push(ops);
    }
    let meta = InstanceMeta {
        seed: config.seed,
        generator_version: GENERATOR_VERSION,
    };
    let num_tools = if config.with_tools { config.num_tools } else { 0 };
    Instance::new(config.problem_type, m, num_tools, jobs, meta)
}

pub fn generate_batch(config: &GeneratorConfig) -> Result<Vec<Instance>> {
    config.validate()?;
    let mut seen = HashSet::with_capacity(config.count);
    (0..config.count)
        .map(|i| {
            let instance = generate_instance(config, i)?;
            if !seen.insert(instance.id.clone()) {
                return Err(Error::DuplicateDigest(instance.id));
            }
            Ok(instance)
        })
        .collect()
}

pub fn write_instances(instances: &[Instance], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for instance in instances {
        writeln!(out, "{}", instance.to_record()).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_instances(path: impl AsRef<Path>) -> Result<Vec<Instance>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut instances = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| Error::Malformed {
            path: path.to_path_buf(),
            line: i + 1,
            reason,
        };
        let instance: Instance =
            serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        instance
            .check_structure()
            .map_err(|e| malformed(e.to_string()))?;
        let computed = instance_digest(&instance);
        if computed != instance.id {
            return Err(Error::DigestMismatch {
                path: path.to_path_buf(),
                line: i + 1,
                stored: instance.id,
                computed,
            });
        }
        instances.push(instance);
    }
    Ok(instances)
}
