//! Running methods over instance sets and tabulating the results.
//!
//! Gap is `(C - C*) / C*`, filled only when the instance carries a proven
//! optimum. Stochastic methods run once per seed; their record holds the
//! per-seed runs and their means.

use std::fmt;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;

use crate::agents::TrainedModel;
use crate::baselines::DispatchRule;
use crate::env::{reset, RewardMode};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::metrics::Clock;
use crate::policy::{Policy, PolicyRng};
use crate::schedule::Schedule;
use crate::solver::{solve_optimal, SolveLimits};

pub const CSV_HEADER: [&str; 7] = [
    "method",
    "instance_id",
    "seed",
    "makespan",
    "return",
    "gap",
    "wall_time_ms",
];

#[derive(Debug, Clone)]
pub struct Episode {
    pub makespan: u32,
    pub episode_return: f64,
    pub schedule: Schedule,
}

/// Plays one full episode. The policy's choices are checked against the
/// mask and the final schedule is validated from scratch.
pub fn run_episode(
    policy: &mut dyn Policy,
    instance: Arc<Instance>,
    mode: RewardMode,
    seed: u64,
) -> Result<Episode> {
    let mut rng = PolicyRng::seed_from_u64(seed);
    let (mut observation, mut mask, mut state) = reset(instance, mode);
    let mut episode_return = 0.0;
    while !state.is_done() {
        let action = policy.select(&state, &observation, &mask, &mut rng)?;
        if !mask.get(action).copied().unwrap_or(false) {
            return Err(Error::PolicyAction {
                policy: policy.name(),
                action,
            });
        }
        let step = state.step(action)?;
        episode_return += step.reward;
        observation = step.observation;
        mask = step.mask;
    }
    let schedule = state.into_schedule();
    let violations = schedule.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidSchedule(violations));
    }
    Ok(Episode {
        makespan: schedule.makespan(),
        episode_return,
        schedule,
    })
}

pub enum Method {
    Policy(Box<dyn Policy>),
    Solver(SolveLimits),
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::Policy(p) => p.name(),
            Method::Solver(_) => "solver".into(),
        }
    }

    /// Resolves a method name. `ppo` and `dqn` name the trained model, which
    /// must be supplied and of that kind.
    pub fn from_name(name: &str, model: Option<&TrainedModel>, limits: SolveLimits) -> Result<Self> {
        if let Ok(rule) = name.parse::<DispatchRule>() {
            return Ok(Method::Policy(Box::new(rule)));
        }
        match (name, model) {
            ("solver", _) => Ok(Method::Solver(limits)),
            (algo, Some(model)) if model.algo() == algo => Ok(Method::Policy(Box::new(model.clone()))),
            ("ppo" | "dqn", _) => Err(Error::Precondition(format!(
                "method `{name}` needs a trained {name} model"
            ))),
            _ => Err(Error::UnknownMethod {
                name: name.to_string(),
                valid: VALID_METHODS.to_string(),
            }),
        }
    }
}

pub const VALID_METHODS: &str = "spt, lpt, mtr, random, solver, ppo, dqn";

/// Checks method names without building anything.
pub fn check_method_name(name: &str) -> Result<()> {
    if name.parse::<DispatchRule>().is_ok() || matches!(name, "solver" | "ppo" | "dqn") {
        Ok(())
    } else {
        Err(Error::UnknownMethod {
            name: name.to_string(),
            valid: VALID_METHODS.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub method: String,
    pub instance_id: String,
    /// `None` for deterministic methods and for the mean over seeds.
    pub seed: Option<u64>,
    pub makespan: f64,
    pub episode_return: f64,
    pub gap: Option<f64>,
    pub wall_time_ms: f64,
    /// One entry per seed for stochastic methods, else empty.
    pub per_seed: Vec<EvalRecord>,
}

fn gap(instance: &Instance, makespan: f64) -> Option<f64> {
    instance
        .proven_optimum()
        .map(|opt| (makespan - f64::from(opt)) / f64::from(opt))
}

fn elapsed_ms(started: Instant, clock: Clock) -> f64 {
    match clock {
        Clock::Frozen => 0.0,
        Clock::Wall => started.elapsed().as_secs_f64() * 1e3,
    }
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub mode: RewardMode,
    pub seeds: Vec<u64>,
    /// A frozen clock reports 0 ms so result files are reproducible.
    pub clock: Clock,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            mode: RewardMode::Dense,
            seeds: vec![0],
            clock: Clock::Frozen,
        }
    }
}

fn single_run(
    method: &mut Method,
    instance: &Arc<Instance>,
    options: &EvalOptions,
    seed: Option<u64>,
) -> Result<EvalRecord> {
    let started = Instant::now();
    let (makespan, episode_return) = match method {
        Method::Policy(policy) => {
            let episode = run_episode(
                policy.as_mut(),
                Arc::clone(instance),
                options.mode,
                seed.unwrap_or(0),
            )?;
            (episode.makespan, episode.episode_return)
        }
        Method::Solver(limits) => {
            let result = solve_optimal(instance, *limits)?;
            let violations = result.schedule.validate();
            if !violations.is_empty() {
                return Err(Error::InvalidSchedule(violations));
            }
            // Every action sequence returns -C / UB in either reward mode.
            let ub = instance.total_processing_time().max(1) as f64;
            (result.makespan, -f64::from(result.makespan) / ub)
        }
    };
    let makespan = f64::from(makespan);
    Ok(EvalRecord {
        method: method.name(),
        instance_id: instance.id.clone(),
        seed,
        makespan,
        episode_return,
        gap: gap(instance, makespan),
        wall_time_ms: elapsed_ms(started, options.clock),
        per_seed: Vec::new(),
    })
}

/// One record per (method, instance), methods outermost, in input order.
pub fn evaluate(
    methods: &mut [Method],
    instances: &[Arc<Instance>],
    options: &EvalOptions,
) -> Result<Vec<EvalRecord>> {
    if instances.is_empty() {
        return Err(Error::Precondition("evaluation needs at least one instance".into()));
    }
    if options.seeds.is_empty() {
        return Err(Error::config("eval.seeds", "must list at least one seed"));
    }
    let mut records = Vec::with_capacity(methods.len() * instances.len());
    for method in methods.iter_mut() {
        let stochastic = matches!(method, Method::Policy(p) if p.is_stochastic());
        for instance in instances {
            if !stochastic {
                records.push(single_run(method, instance, options, None)?);
                continue;
            }
            let runs = options
                .seeds
                .iter()
                .map(|&s| single_run(method, instance, options, Some(s)))
                .collect::<Result<Vec<_>>>()?;
            let n = runs.len() as f64;
            let mean = |f: fn(&EvalRecord) -> f64| runs.iter().map(f).sum::<f64>() / n;
            let makespan = mean(|r| r.makespan);
            records.push(EvalRecord {
                method: method.name(),
                instance_id: instance.id.clone(),
                seed: None,
                makespan,
                episode_return: mean(|r| r.episode_return),
                gap: gap(instance, makespan),
                wall_time_ms: mean(|r| r.wall_time_ms),
                per_seed: runs,
            });
        }
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub count: usize,
    pub mean_makespan: f64,
    pub min_makespan: f64,
    pub max_makespan: f64,
    pub mean_return: f64,
    /// Over the records that have a gap; `None` if none do.
    pub mean_gap: Option<f64>,
    pub mean_wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComparisonTable {
    pub rows: Vec<SummaryRow>,
}

impl ComparisonTable {
    pub fn row(&self, method: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

/// Per-method aggregates ordered by mean makespan, then name. Records are
/// folded in a canonical order, so any permutation of the input gives the
/// identical table.
pub fn summarize(records: &[EvalRecord]) -> ComparisonTable {
    let mut sorted: Vec<&EvalRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.method, &a.instance_id, a.seed)
            .cmp(&(&b.method, &b.instance_id, b.seed))
            .then(a.makespan.total_cmp(&b.makespan))
            .then(a.episode_return.total_cmp(&b.episode_return))
            .then(a.wall_time_ms.total_cmp(&b.wall_time_ms))
    });
    let mut rows: Vec<SummaryRow> = Vec::new();
    for group in sorted.chunk_by(|a, b| a.method == b.method) {
        let n = group.len() as f64;
        let gaps: Vec<f64> = group.iter().filter_map(|r| r.gap).collect();
        rows.push(SummaryRow {
            method: group[0].method.clone(),
            count: group.len(),
            mean_makespan: group.iter().map(|r| r.makespan).sum::<f64>() / n,
            min_makespan: group.iter().map(|r| r.makespan).fold(f64::INFINITY, f64::min),
            max_makespan: group.iter().map(|r| r.makespan).fold(f64::NEG_INFINITY, f64::max),
            mean_return: group.iter().map(|r| r.episode_return).sum::<f64>() / n,
            mean_gap: (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64),
            mean_wall_time_ms: group.iter().map(|r| r.wall_time_ms).sum::<f64>() / n,
        });
    }
    rows.sort_by(|a, b| {
        a.mean_makespan
            .total_cmp(&b.mean_makespan)
            .then_with(|| a.method.cmp(&b.method))
    });
    ComparisonTable { rows }
}

impl fmt::Display for ComparisonTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<10} {:>5} {:>10} {:>8} {:>8} {:>10} {:>9} {:>10}",
            "method", "n", "makespan", "min", "max", "return", "gap", "wall_ms"
        )?;
        for r in &self.rows {
            let gap = r.mean_gap.map_or("-".to_string(), |g| format!("{:.2}%", 100.0 * g));
            writeln!(
                f,
                "{:<10} {:>5} {:>10.2} {:>8} {:>8} {:>10.4} {:>9} {:>10.1}",
                r.method, r.count, r.mean_makespan, r.min_makespan, r.max_makespan, r.mean_return, gap,
                r.mean_wall_time_ms
            )?;
        }
        Ok(())
    }
}

/// Writes one row per deterministic record. A stochastic record contributes
/// its per-seed rows, then its mean with the seed column set to `mean`.
pub fn write_records_csv(records: &[EvalRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let csv_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Precondition(format!("{}: csv: {other:?}", path.display())),
    };
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    writer.write_record(CSV_HEADER).map_err(csv_err)?;
    let mut row = |r: &EvalRecord, seed: String| {
        writer.write_record([
            r.method.clone(),
            r.instance_id.clone(),
            seed,
            r.makespan.to_string(),
            r.episode_return.to_string(),
            r.gap.map(|g| g.to_string()).unwrap_or_default(),
            r.wall_time_ms.to_string(),
        ])
    };
    for record in records {
        if record.per_seed.is_empty() {
            row(record, record.seed.map(|s| s.to_string()).unwrap_or_default()).map_err(csv_err)?;
        } else {
            for run in &record.per_seed {
                row(run, run.seed.map(|s| s.to_string()).unwrap_or_default()).map_err(csv_err)?;
            }
            row(record, "mean".into()).map_err(csv_err)?;
        }
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_batch, GeneratorConfig, ProofStatus};

    fn one_task(p: u32) -> Arc<Instance> {
        Arc::new(Instance::from_jobs(1, 0, &[vec![(0, p, None)]]).unwrap())
    }

    fn annotated(count: usize) -> Vec<Arc<Instance>> {
        generate_batch(&GeneratorConfig::jssp(3, 3, 3, 12).count(count))
            .unwrap()
            .into_iter()
            .map(|mut inst| {
                let r = solve_optimal(&inst, SolveLimits::default()).unwrap();
                inst.optimal_makespan = Some(r.makespan);
                inst.proof_status = Some(r.proof_status);
                Arc::new(inst)
            })
            .collect()
    }

    fn methods(names: &[&str]) -> Vec<Method> {
        names
            .iter()
            .map(|n| Method::from_name(n, None, SolveLimits::default()).unwrap())
            .collect()
    }

    #[test]
    fn spt_single_task() {
        let mut spt = DispatchRule::Spt;
        let e = run_episode(&mut spt, one_task(5), RewardMode::Dense, 0).unwrap();
        assert_eq!(e.makespan, 5);
        assert_eq!(e.episode_return, -1.0);
    }

    #[test]
    fn masked_choice_is_attributed_to_the_policy() {
        struct Stubborn;
        impl Policy for Stubborn {
            fn name(&self) -> String {
                "stubborn".into()
            }
            fn select(&mut self, _: &crate::env::EnvState, _: &[f64], _: &[bool], _: &mut PolicyRng) -> Result<usize> {
                Ok(3)
            }
        }
        let err = run_episode(&mut Stubborn, one_task(2), RewardMode::Dense, 0).unwrap_err();
        assert!(matches!(err, Error::PolicyAction { policy, action: 3 } if policy == "stubborn"));
    }

    #[test]
    fn random_is_reproducible_per_seed() {
        let inst = annotated(1).remove(0);
        let mut r = DispatchRule::Random;
        let a = run_episode(&mut r, inst.clone(), RewardMode::Dense, 7).unwrap();
        let b = run_episode(&mut r, inst, RewardMode::Dense, 7).unwrap();
        assert_eq!(a.schedule.to_export(), b.schedule.to_export());
    }

    #[test]
    fn aggregate_records_and_gaps() {
        let instances = annotated(10);
        let options = EvalOptions {
            seeds: vec![1, 2, 3],
            ..EvalOptions::default()
        };
        let records = evaluate(&mut methods(&["spt", "random"]), &instances, &options).unwrap();
        assert_eq!(records.len(), 20);
        assert!(records.iter().all(|r| r.gap.unwrap() >= 0.0));
        let random = &records[10];
        assert_eq!(random.per_seed.len(), 3);
        let mean = random.per_seed.iter().map(|r| r.makespan).sum::<f64>() / 3.0;
        assert_eq!(random.makespan, mean);
        assert!(records[..10].iter().all(|r| r.per_seed.is_empty() && r.seed.is_none()));
    }

    #[test]
    fn unannotated_instances_have_no_gap() {
        let instances = vec![one_task(3)];
        let records = evaluate(&mut methods(&["mtr"]), &instances, &EvalOptions::default()).unwrap();
        assert_eq!(records[0].gap, None);
    }

    #[test]
    fn solver_as_method_has_zero_gap() {
        let instances = annotated(6);
        assert!(instances.iter().all(|i| i.proof_status == Some(ProofStatus::Optimal)));
        let records = evaluate(&mut methods(&["solver"]), &instances, &EvalOptions::default()).unwrap();
        assert!(records.iter().all(|r| r.gap == Some(0.0)));
    }

    #[test]
    fn unknown_method_lists_valid_names() {
        let err = Method::from_name("fifo", None, SolveLimits::default()).err().unwrap();
        assert!(err.to_string().contains("spt, lpt, mtr, random, solver"));
        assert!(check_method_name("fifo").is_err());
        assert!(check_method_name("ppo").is_ok());
        assert!(Method::from_name("ppo", None, SolveLimits::default()).is_err());
    }

    fn record(method: &str, id: &str, makespan: f64) -> EvalRecord {
        EvalRecord {
            method: method.into(),
            instance_id: id.into(),
            seed: None,
            makespan,
            episode_return: -makespan / 10.0,
            gap: None,
            wall_time_ms: 0.0,
            per_seed: vec![],
        }
    }

    #[test]
    fn summary_means_and_order() {
        let single = summarize(&[record("spt", "a", 5.0)]);
        assert_eq!(single.rows[0].mean_makespan, 5.0);
        assert_eq!(single.rows[0].mean_return, -0.5);

        let two = summarize(&[record("spt", "a", 5.0), record("spt", "b", 7.0)]);
        assert_eq!(two.rows[0].mean_makespan, 6.0);
        assert_eq!((two.rows[0].min_makespan, two.rows[0].max_makespan), (5.0, 7.0));

        let tie = summarize(&[record("mtr", "a", 6.0), record("lpt", "a", 6.0), record("spt", "a", 5.0)]);
        let order: Vec<&str> = tie.rows.iter().map(|r| r.method.as_str()).collect();
        assert_eq!(order, ["spt", "lpt", "mtr"]);
        assert!(summarize(&[]).rows.is_empty());
    }

    #[test]
    fn summary_ignores_input_order() {
        let records: Vec<EvalRecord> = (0..30)
            .map(|i| record(["a", "b", "c"][i % 3], &format!("i{i}"), 0.1 * i as f64 + 1.0 / 3.0))
            .collect();
        let mut reversed = records.clone();
        reversed.reverse();
        assert_eq!(summarize(&records), summarize(&reversed));
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let instances = annotated(2);
        let options = EvalOptions {
            seeds: vec![4, 5],
            ..EvalOptions::default()
        };
        let records = evaluate(&mut methods(&["spt", "random"]), &instances, &options).unwrap();
        write_records_csv(&records, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "method,instance_id,seed,makespan,return,gap,wall_time_ms");
        // 2 spt rows, then per instance 2 seeds + mean for random.
        assert_eq!(lines.len(), 1 + 2 + 2 * 3);
        assert!(lines[1].starts_with("spt,") && lines[1].split(',').nth(2) == Some(""));
        assert_eq!(lines[5].split(',').nth(2), Some("mean"));

        let again = dir.path().join("r2.csv");
        let records = evaluate(&mut methods(&["spt", "random"]), &instances, &options).unwrap();
        write_records_csv(&records, &again).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
    }
}
