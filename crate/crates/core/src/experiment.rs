//! Config-file-driven pipelines: generate, solve, train and test.
//!
//! One JSON document describes an experiment. Artifacts land in fixed places
//! under the configured directories:
//!
//! ```text
//! <instances_dir>/train.jsonl, test.jsonl
//! <models_dir>/<run_id>.model
//! <results_dir>/<run_id>.metrics.jsonl, <run_id>.eval.csv
//! ```
//!
//! The run id is the first 16 hex digits of the config digest plus the
//! training seed. Paths are left out of the digest so the same experiment run
//! from different directories keeps its id.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agents::{load_model, save_model, train_dqn, train_ppo, DqnConfig, PpoConfig, TrainedModel};
use crate::env::{EnvState, RewardMode};
use crate::error::{Error, Result};
use crate::eval::{check_method_name, evaluate, summarize, write_records_csv, ComparisonTable, EvalOptions, EvalRecord, Method};
use crate::instance::{generate_batch, read_instances, write_instances, GeneratorConfig, Instance, ProofStatus};
use crate::schedule::Schedule;
use crate::metrics::{write_metrics, Clock, MetricsEvent, RunLog};
use crate::solver::{solve_optimal, SolveLimits};

pub const TRAIN_FILE: &str = "train.jsonl";
pub const TEST_FILE: &str = "test.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Split {
    pub train_count: usize,
    pub test_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgoConfig {
    Ppo(PpoConfig),
    Dqn(DqnConfig),
}

impl AlgoConfig {
    pub fn name(&self) -> &'static str {
        match self {
            AlgoConfig::Ppo(_) => "ppo",
            AlgoConfig::Dqn(_) => "dqn",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            AlgoConfig::Ppo(c) => c.seed,
            AlgoConfig::Dqn(c) => c.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSettings {
    pub methods: Vec<String>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    pub node_limit: u64,
    pub time_limit_s: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let limits = SolveLimits::default();
        SolverSettings {
            node_limit: limits.node_limit,
            time_limit_s: limits.time_limit.as_secs_f64(),
        }
    }
}

impl SolverSettings {
    pub fn limits(&self) -> SolveLimits {
        SolveLimits {
            node_limit: self.node_limit,
            time_limit: Duration::from_secs_f64(self.time_limit_s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub instances_dir: PathBuf,
    pub models_dir: PathBuf,
    pub results_dir: PathBuf,
}

/// `problem.count` is ignored: the batch is always `train_count +
/// test_count` instances, train taking the leading stream indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: GeneratorConfig,
    pub split: Split,
    pub algo: AlgoConfig,
    pub reward_mode: RewardMode,
    pub eval: EvalSettings,
    #[serde(default)]
    pub solver: SolverSettings,
    pub paths: Paths,
}

impl ExperimentConfig {
    /// Parses and validates; schema errors name the offending field path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(if path == "." { "<root>".into() } else { path }, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.validate().map_err(|e| match e {
            Error::Config { field, reason } => Error::config(format!("problem.{field}"), reason),
            other => other,
        })?;
        if self.split.train_count == 0 {
            return Err(Error::config("split.train_count", "must be at least 1"));
        }
        if self.split.test_count == 0 {
            return Err(Error::config("split.test_count", "must be at least 1"));
        }
        match &self.algo {
            AlgoConfig::Ppo(c) => c.validate(),
            AlgoConfig::Dqn(c) => c.validate(),
        }
        .map_err(|e| match e {
            Error::Config { field, reason } => Error::config(format!("algo.{}.{field}", self.algo.name()), reason),
            other => other,
        })?;
        for method in &self.eval.methods {
            check_method_name(method)?;
        }
        if self.eval.seeds.is_empty() {
            return Err(Error::config("eval.seeds", "must list at least one seed"));
        }
        if !(self.solver.time_limit_s.is_finite() && self.solver.time_limit_s >= 0.0) {
            return Err(Error::config("solver.time_limit_s", "must be a non-negative number"));
        }
        Ok(())
    }

    /// SHA-256 over the config with paths blanked, hex encoded.
    pub fn digest(&self) -> String {
        let mut view = self.clone();
        view.paths = Paths {
            instances_dir: PathBuf::new(),
            models_dir: PathBuf::new(),
            results_dir: PathBuf::new(),
        };
        let bytes = serde_json::to_vec(&view).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn run_id(&self) -> String {
        format!("{}-s{}", &self.digest()[..16], self.algo.seed())
    }

    pub fn model_path(&self) -> PathBuf {
        self.paths.models_dir.join(format!("{}.model", self.run_id()))
    }

    pub fn metrics_path(&self) -> PathBuf {
        self.paths.results_dir.join(format!("{}.metrics.jsonl", self.run_id()))
    }

    pub fn eval_csv_path(&self) -> PathBuf {
        self.paths.results_dir.join(format!("{}.eval.csv", self.run_id()))
    }

    /// The train and test sets, drawn from disjoint stream indices of one
    /// seeded batch.
    pub fn split_instances(&self) -> Result<(Vec<Instance>, Vec<Instance>)> {
        let mut generator = self.problem.clone();
        generator.count = self.split.train_count + self.split.test_count;
        let mut train = generate_batch(&generator)?;
        let test = train.split_off(self.split.train_count);
        Ok((train, test))
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[derive(Debug, Clone)]
pub struct GenerateReport {
    pub train_path: PathBuf,
    pub test_path: PathBuf,
    pub train: Vec<Instance>,
    pub test: Vec<Instance>,
}

pub fn generate(config: &ExperimentConfig, out_dir: &Path) -> Result<GenerateReport> {
    let (train, test) = config.split_instances()?;
    create_dir(out_dir)?;
    let train_path = out_dir.join(TRAIN_FILE);
    let test_path = out_dir.join(TEST_FILE);
    write_instances(&train, &train_path)?;
    write_instances(&test, &test_path)?;
    Ok(GenerateReport {
        train_path,
        test_path,
        train,
        test,
    })
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub instance_id: String,
    pub makespan: u32,
    pub status: ProofStatus,
    pub nodes_expanded: u64,
    pub schedule: Schedule,
}

/// Solves every instance of a file and rewrites it with the annotations.
pub fn solve_file(path: &Path, limits: SolveLimits) -> Result<Vec<SolveOutcome>> {
    let mut instances = read_instances(path)?;
    let mut outcomes = Vec::with_capacity(instances.len());
    for instance in &mut instances {
        let result = solve_optimal(instance, limits)?;
        instance.optimal_makespan = Some(result.makespan);
        instance.proof_status = Some(result.proof_status);
        outcomes.push(SolveOutcome {
            instance_id: instance.id.clone(),
            makespan: result.makespan,
            status: result.proof_status,
            nodes_expanded: result.nodes_expanded,
            schedule: result.schedule,
        });
    }
    write_instances(&instances, path)?;
    Ok(outcomes)
}

fn load_set(config: &ExperimentConfig, file: &str) -> Result<Vec<Arc<Instance>>> {
    let path = config.paths.instances_dir.join(file);
    if !path.exists() {
        return Err(Error::Precondition(format!(
            "{} does not exist; run `generate` first",
            path.display()
        )));
    }
    Ok(read_instances(&path)?.into_iter().map(Arc::new).collect())
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub run_id: String,
    pub model_path: PathBuf,
    pub metrics_path: PathBuf,
    pub events: Vec<MetricsEvent>,
    pub model: TrainedModel,
}

/// Trains on the generated train set. The metrics file is replaced, not
/// appended to, so a rerun reproduces it byte for byte.
pub fn train(config: &ExperimentConfig) -> Result<TrainReport> {
    let instances = load_set(config, TRAIN_FILE)?;
    let mode = config.reward_mode;
    let make_env = move |instance: Arc<Instance>| EnvState::new(instance, mode);
    let mut log = RunLog::new(config.run_id(), Clock::Frozen);
    let model = match &config.algo {
        AlgoConfig::Ppo(c) => TrainedModel::Ppo(train_ppo(&instances, &make_env, c, &mut log)?),
        AlgoConfig::Dqn(c) => TrainedModel::Dqn(train_dqn(&instances, &make_env, c, &mut log)?),
    };
    create_dir(&config.paths.models_dir)?;
    create_dir(&config.paths.results_dir)?;
    let model_path = config.model_path();
    save_model(&model, &model_path)?;
    let metrics_path = config.metrics_path();
    if metrics_path.exists() {
        std::fs::remove_file(&metrics_path).map_err(|e| Error::io(&metrics_path, e))?;
    }
    let events = log.into_events();
    write_metrics(&events, &metrics_path)?;
    Ok(TrainReport {
        run_id: config.run_id(),
        model_path,
        metrics_path,
        events,
        model,
    })
}

#[derive(Debug, Clone)]
pub struct TestReport {
    pub records: Vec<EvalRecord>,
    pub table: ComparisonTable,
    pub csv_path: PathBuf,
}

/// Evaluates the configured methods on the test set. The trained model is
/// loaded from `model` or the run's default model path, and only when a
/// method needs it.
pub fn test(config: &ExperimentConfig, model: Option<&Path>) -> Result<TestReport> {
    let instances = load_set(config, TEST_FILE)?;
    let needs_model = config.eval.methods.iter().any(|m| m == "ppo" || m == "dqn");
    let model = if needs_model {
        let path = model.map_or_else(|| config.model_path(), Path::to_path_buf);
        if !path.exists() {
            return Err(Error::Precondition(format!(
                "model {} does not exist; run `train` first or pass --model",
                path.display()
            )));
        }
        Some(load_model(&path)?)
    } else {
        None
    };
    let limits = config.solver.limits();
    let mut methods = config
        .eval
        .methods
        .iter()
        .map(|name| Method::from_name(name, model.as_ref(), limits))
        .collect::<Result<Vec<_>>>()?;
    let options = EvalOptions {
        mode: config.reward_mode,
        seeds: config.eval.seeds.clone(),
        clock: Clock::Frozen,
    };
    let records = evaluate(&mut methods, &instances, &options)?;
    create_dir(&config.paths.results_dir)?;
    let csv_path = config.eval_csv_path();
    write_records_csv(&records, &csv_path)?;
    Ok(TestReport {
        table: summarize(&records),
        records,
        csv_path,
    })
}
