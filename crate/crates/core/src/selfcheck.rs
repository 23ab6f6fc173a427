//! A runtime property runner that ships with the library, so an installed
//! binary can check itself (`shoplab selftest`) without the test harness.
//!
//! Each property is a function of one `u64` seed; case `i` of a run uses seed
//! `base_seed + i`, and a failure reports that seed so the case can be
//! replayed alone.

use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::agents::{Mlp, PpoAgent, TrainedModel};
use crate::env::{EnvState, RewardMode};
use crate::instance::{generate_instance, GeneratorConfig, Instance};
use crate::policy::PolicyRng;
use crate::schedule::{Schedule, ScheduleExport};
use crate::solver::oracle::{permutation_oracle, timing_oracle};
use crate::solver::{solve_optimal, SolveLimits};
use crate::timeline::{overlaps, Interval};

pub type CaseResult = std::result::Result<(), String>;

/// A random instance generator config. Shapes stay within `max_jobs` x
/// `max_tasks` and at most `max_total` tasks; problem type and tools vary.
pub fn random_config(rng: &mut PolicyRng, max_jobs: usize, max_tasks: usize, max_total: usize) -> GeneratorConfig {
    let jobs = rng.gen_range(1..=max_jobs.min(max_total));
    let tasks = rng.gen_range(1..=max_tasks.min(max_total / jobs));
    let machines = rng.gen_range(1..=max_tasks.max(2));
    let mut config = GeneratorConfig::jssp(jobs, tasks, machines, rng.gen()).runtimes(1, rng.gen_range(1..=9));
    if rng.gen_bool(0.5) {
        config = config.flexible();
    }
    if rng.gen_bool(0.5) {
        config = config.with_tools(rng.gen_range(1..=3));
    }
    config
}

fn random_instance(rng: &mut PolicyRng, max_jobs: usize, max_tasks: usize, max_total: usize) -> Arc<Instance> {
    let config = random_config(rng, max_jobs, max_tasks, max_total);
    Arc::new(generate_instance(&config, 0).expect("random_config yields valid configs"))
}

/// Plays uniformly random valid actions to the end; returns the actions.
fn random_rollout(env: &mut EnvState, rng: &mut PolicyRng) -> std::result::Result<Vec<usize>, String> {
    let mut actions = Vec::new();
    while !env.is_done() {
        let valid: Vec<usize> = (0..env.num_jobs()).filter(|&j| env.action_mask()[j]).collect();
        let action = *valid.choose(rng).ok_or("no valid action before the episode ended")?;
        env.step(action).map_err(|e| e.to_string())?;
        actions.push(action);
    }
    Ok(actions)
}

/// Complete random episodes on shapes up to 6x6 produce valid schedules
/// under the given interval-overlap predicate.
pub fn validity_case(seed: u64, overlap: fn(&Interval, &Interval) -> bool) -> CaseResult {
    let mut rng = PolicyRng::seed_from_u64(seed);
    let instance = random_instance(&mut rng, 6, 6, 36);
    let mut env = EnvState::new(instance, RewardMode::Dense);
    random_rollout(&mut env, &mut rng)?;
    let schedule = env.schedule();
    if !schedule.is_complete() {
        return Err("episode ended with unplaced tasks".into());
    }
    match schedule.validate_with(overlap).first() {
        Some(v) => Err(format!("{} violation(s), first: {v}", schedule.validate_with(overlap).len())),
        None => Ok(()),
    }
}

/// Dense rewards sum to `-C/UB` and match the sparse return of the same
/// action sequence.
pub fn telescoping_case(seed: u64) -> CaseResult {
    let mut rng = PolicyRng::seed_from_u64(seed);
    let instance = random_instance(&mut rng, 6, 6, 36);
    let mut dense = EnvState::new(Arc::clone(&instance), RewardMode::Dense);
    let mut sparse = EnvState::new(instance, RewardMode::Sparse);
    let (mut dense_sum, mut sparse_sum) = (0.0, 0.0);
    while !dense.is_done() {
        let valid: Vec<usize> = (0..dense.num_jobs()).filter(|&j| dense.action_mask()[j]).collect();
        let action = *valid.choose(&mut rng).ok_or("no valid action")?;
        dense_sum += dense.step(action).map_err(|e| e.to_string())?.reward;
        sparse_sum += sparse.step(action).map_err(|e| e.to_string())?.reward;
    }
    let target = -f64::from(dense.schedule().makespan()) / dense.ub() as f64;
    if (dense_sum - target).abs() > 1e-12 || (dense_sum - sparse_sum).abs() > 1e-12 {
        return Err(format!("dense {dense_sum:e}, sparse {sparse_sum:e}, -C/UB {target:e}"));
    }
    Ok(())
}

/// The branch-and-bound optimum equals the permutation oracle on instances
/// of at most 8 tasks.
pub fn solver_oracle_case(seed: u64) -> CaseResult {
    let mut rng = PolicyRng::seed_from_u64(seed);
    let instance = random_instance(&mut rng, 4, 4, 8);
    let solved = solve_optimal(&instance, SolveLimits::default()).map_err(|e| e.to_string())?;
    let oracle = permutation_oracle(&instance).map_err(|e| e.to_string())?;
    if solved.proof_status != crate::instance::ProofStatus::Optimal || solved.makespan != oracle {
        return Err(format!(
            "solver {} ({:?}) vs oracle {oracle} on {}",
            solved.makespan,
            solved.proof_status,
            instance.shape()
        ));
    }
    Ok(())
}

/// The permutation oracle equals the time-indexed oracle on instances of at
/// most 6 tasks.
pub fn timing_oracle_case(seed: u64) -> CaseResult {
    let mut rng = PolicyRng::seed_from_u64(seed);
    let instance = random_instance(&mut rng, 3, 3, 6);
    let permutation = permutation_oracle(&instance).map_err(|e| e.to_string())?;
    let horizon = instance.total_processing_time() as u32;
    let timing = timing_oracle(&instance, horizon).map_err(|e| e.to_string())?;
    if permutation != timing {
        return Err(format!("permutation {permutation} vs timing {timing} on {}", instance.shape()));
    }
    Ok(())
}

/// Largest relative error between the analytic gradient of `sum_b u_b .
/// net(x_b)` and central differences, for a random network and batch.
pub fn gradient_error(seed: u64) -> f64 {
    let mut rng = PolicyRng::seed_from_u64(seed);
    let depth = rng.gen_range(1..=3);
    let dims: Vec<usize> = (0..=depth).map(|_| rng.gen_range(1..=6)).collect();
    let mut net = Mlp::random(&dims, 1.0, &mut rng).expect("positive dims");
    for p in net.params_mut() {
        *p += rng.gen_range(-0.5..0.5);
    }
    let batch: Vec<(Vec<f64>, Vec<f64>)> = (0..rng.gen_range(1..=4))
        .map(|_| {
            let x = (0..dims[0]).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let u = (0..dims[depth]).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (x, u)
        })
        .collect();
    let loss = |net: &Mlp| -> f64 {
        batch
            .iter()
            .map(|(x, u)| {
                let y = net.forward(x).expect("dims match");
                y.iter().zip(u).map(|(a, b)| a * b).sum::<f64>()
            })
            .sum()
    };
    let mut analytic = vec![0.0; net.num_params()];
    for (x, u) in &batch {
        for (a, g) in analytic.iter_mut().zip(net.gradient(x, u).expect("dims match")) {
            *a += g;
        }
    }
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..net.num_params() {
        let original = net.params()[i];
        net.params_mut()[i] = original + h;
        let up = loss(&net);
        net.params_mut()[i] = original - h;
        let down = loss(&net);
        net.params_mut()[i] = original;
        let numeric = (up - down) / (2.0 * h);
        let scale = analytic[i].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((analytic[i] - numeric).abs() / scale);
    }
    worst
}

pub fn gradient_case(seed: u64) -> CaseResult {
    let err = gradient_error(seed);
    if err < 1e-4 {
        Ok(())
    } else {
        Err(format!("max relative gradient error {err:e}"))
    }
}

/// Generation and seeded rollouts repeat exactly.
pub fn determinism_case(seed: u64) -> CaseResult {
    let mut rng = PolicyRng::seed_from_u64(seed);
    let config = random_config(&mut rng, 6, 6, 36);
    let a = generate_instance(&config, 0).map_err(|e| e.to_string())?;
    let b = generate_instance(&config, 0).map_err(|e| e.to_string())?;
    if a != b {
        return Err("generation is not repeatable".into());
    }
    let rollout = || {
        let mut env = EnvState::new(Arc::new(a.clone()), RewardMode::Dense);
        let actions = random_rollout(&mut env, &mut PolicyRng::seed_from_u64(seed))?;
        Ok::<_, String>((actions, env.into_schedule().to_export().to_json()))
    };
    if rollout()? != rollout()? {
        return Err("seeded rollout is not repeatable".into());
    }
    Ok(())
}

/// Instance records, schedule exports and model files survive a round trip.
pub fn round_trip_case(seed: u64) -> CaseResult {
    let mut rng = PolicyRng::seed_from_u64(seed);
    let instance = random_instance(&mut rng, 6, 6, 36);
    let parsed: Instance = serde_json::from_str(&instance.to_record()).map_err(|e| e.to_string())?;
    if parsed != *instance {
        return Err("instance record round trip changed the instance".into());
    }

    let mut env = EnvState::new(Arc::clone(&instance), RewardMode::Dense);
    random_rollout(&mut env, &mut rng)?;
    let schedule: Schedule = env.into_schedule();
    let export: ScheduleExport = serde_json::from_str(&schedule.to_export().to_json()).map_err(|e| e.to_string())?;
    let back = export.to_schedule().map_err(|e| e.to_string())?;
    if !back.placements().eq(schedule.placements()) {
        return Err("schedule export round trip changed placements".into());
    }

    let jobs = instance.num_jobs;
    let agent = PpoAgent::new(crate::env::observation_len(jobs), jobs, &[5], rng.gen()).map_err(|e| e.to_string())?;
    let model = TrainedModel::Ppo(agent);
    let loaded = TrainedModel::from_text(&model.to_text(), std::path::Path::new("<memory>")).map_err(|e| e.to_string())?;
    if loaded != model {
        return Err("model text round trip changed the model".into());
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseFailure {
    pub case: usize,
    pub seed: u64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub cases: usize,
    /// Only the first failing case is kept; later cases are not run.
    pub failure: Option<CaseFailure>,
}

impl PropertyOutcome {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

pub fn check_property(name: &'static str, cases: usize, base_seed: u64, property: impl Fn(u64) -> CaseResult) -> PropertyOutcome {
    let failure = (0..cases).find_map(|case| {
        let seed = base_seed.wrapping_add(case as u64);
        property(seed).err().map(|detail| CaseFailure { case, seed, detail })
    });
    PropertyOutcome { name, cases, failure }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfCheckReport {
    pub outcomes: Vec<PropertyOutcome>,
}

impl SelfCheckReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(PropertyOutcome::passed)
    }

    pub fn outcome(&self, name: &str) -> Option<&PropertyOutcome> {
        self.outcomes.iter().find(|o| o.name == name)
    }
}

impl fmt::Display for SelfCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in &self.outcomes {
            match &o.failure {
                None => writeln!(f, "PASS {:<22} {} cases", o.name, o.cases)?,
                Some(c) => writeln!(f, "FAIL {:<22} case {} seed {}: {}", o.name, c.case, c.seed, c.detail)?,
            }
        }
        let passed = self.outcomes.iter().filter(|o| o.passed()).count();
        write!(f, "{passed}/{} properties passed", self.outcomes.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelfCheckOptions {
    pub cases: usize,
    pub base_seed: u64,
}

impl Default for SelfCheckOptions {
    fn default() -> Self {
        SelfCheckOptions { cases: 100, base_seed: 0 }
    }
}

pub fn run_all_tests(options: SelfCheckOptions) -> SelfCheckReport {
    run_all_tests_with(options, overlaps)
}

/// Like [`run_all_tests`], with the validator's interval-overlap predicate
/// replaced. Lets a deliberately broken predicate show that the fuzzing
/// notices it.
pub fn run_all_tests_with(options: SelfCheckOptions, overlap: fn(&Interval, &Interval) -> bool) -> SelfCheckReport {
    let SelfCheckOptions { cases, base_seed } = options;
    let oracle_cases = cases.min(50);
    SelfCheckReport {
        outcomes: vec![
            check_property("schedule_validity", cases, base_seed, |s| validity_case(s, overlap)),
            check_property("telescoping_reward", cases, base_seed, telescoping_case),
            check_property("solver_vs_permutation", oracle_cases, base_seed, solver_oracle_case),
            check_property("permutation_vs_timing", oracle_cases, base_seed, timing_oracle_case),
            check_property("gradient_check", cases.min(20), base_seed, gradient_case),
            check_property("determinism", cases, base_seed, determinism_case),
            check_property("serialization", cases, base_seed, round_trip_case),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_build_passes() {
        let report = run_all_tests(SelfCheckOptions { cases: 30, base_seed: 7 });
        assert!(report.all_passed(), "{report}");
        assert!(report.to_string().ends_with("7/7 properties passed"));
    }

    #[test]
    fn off_by_one_overlap_is_caught_with_its_seed() {
        fn touching_counts(a: &Interval, b: &Interval) -> bool {
            a.start <= b.end && b.start <= a.end
        }
        let report = run_all_tests_with(SelfCheckOptions { cases: 30, base_seed: 7 }, touching_counts);
        let fuzz = report.outcome("schedule_validity").unwrap();
        let failure = fuzz.failure.as_ref().expect("mutation must be detected");
        assert_eq!(failure.seed, 7 + failure.case as u64);
        assert!(validity_case(failure.seed, touching_counts).is_err());
        assert!(validity_case(failure.seed, overlaps).is_ok());
        assert!(report.to_string().contains(&format!("seed {}", failure.seed)));
    }

    #[test]
    fn shapes_respect_bounds() {
        let mut rng = PolicyRng::seed_from_u64(1);
        for _ in 0..500 {
            let c = random_config(&mut rng, 4, 4, 8);
            assert!(c.num_jobs * c.tasks_per_job <= 8 && c.num_jobs <= 4 && c.tasks_per_job <= 4);
            assert!(c.validate().is_ok());
        }
    }
}
