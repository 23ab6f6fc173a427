use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use shoplab::baselines::select_action;
use shoplab::solver::oracle::permutation_oracle_from;
use shoplab::solver::{lower_bound, permutation_oracle, timing_oracle};
use shoplab::{
    generate_instance, reset, solve_optimal, DispatchRule, GeneratorConfig, Instance,
    PolicyRng, ProofStatus, RewardMode, Schedule, SolveLimits,
};

/// Small instance of any kind with at most `max_tasks` tasks.
fn small_instance(max_tasks: usize, max_p: u32) -> impl Strategy<Value = Instance> {
    (1..=3usize, 1..=3usize, 1..=3usize, 0..=2usize, any::<bool>(), any::<u64>())
        .prop_filter("task budget", move |(j, t, ..)| j * t <= max_tasks)
        .prop_map(move |(j, t, m, tools, flexible, seed)| {
            let mut config = GeneratorConfig::jssp(j, t, m, seed).runtimes(1, max_p);
            if tools > 0 {
                config = config.with_tools(tools);
            }
            if flexible {
                config = config.flexible();
            }
            generate_instance(&config, 0).unwrap()
        })
}

fn rollout(instance: &Instance, rule: DispatchRule) -> u32 {
    let (_, mut mask, mut state) = reset(Arc::new(instance.clone()), RewardMode::Dense);
    let mut rng = PolicyRng::seed_from_u64(0);
    while !state.is_done() {
        let action = select_action(rule, &state, &mask, &mut rng).unwrap();
        mask = state.step(action).unwrap().mask;
    }
    state.schedule().makespan()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn solver_matches_permutation_oracle(inst in small_instance(8, 9)) {
        let r = solve_optimal(&inst, SolveLimits::default()).unwrap();
        prop_assert_eq!(r.proof_status, ProofStatus::Optimal);
        prop_assert_eq!(r.makespan, permutation_oracle(&inst).unwrap());
        prop_assert!(r.schedule.validate().is_empty());
        prop_assert!(r.schedule.is_complete());
        prop_assert_eq!(r.schedule.makespan(), r.makespan);
    }

    #[test]
    fn permutation_oracle_matches_timing_oracle(inst in small_instance(6, 5)) {
        let ub = inst.total_processing_time() as u32;
        prop_assert_eq!(permutation_oracle(&inst).unwrap(), timing_oracle(&inst, ub).unwrap());
    }

    #[test]
    fn solver_dominates_rules(inst in small_instance(8, 9)) {
        let best = solve_optimal(&inst, SolveLimits::default()).unwrap().makespan;
        for rule in DispatchRule::ALL {
            prop_assert!(best <= rollout(&inst, rule));
        }
    }

    #[test]
    fn bound_is_admissible_along_random_paths(inst in small_instance(8, 9), seed in any::<u64>()) {
        let mut rng = PolicyRng::seed_from_u64(seed);
        let mut schedule = Schedule::new(Arc::new(inst.clone()));
        while !schedule.is_complete() {
            prop_assert!(lower_bound(&schedule) <= permutation_oracle_from(&schedule).unwrap());
            let open: Vec<usize> =
                (0..inst.num_jobs).filter(|&j| schedule.next_task(j).is_some()).collect();
            let job = open[rng.gen_range(0..open.len())];
            let task = schedule.next_task(job).unwrap().clone();
            let machine = task.eligible_machines[rng.gen_range(0..task.eligible_machines.len())];
            let start = schedule.earliest_feasible_start(job, machine).unwrap();
            schedule
                .place_task(job, machine, start, shoplab::PlacementMode::Strict)
                .unwrap();
        }
        prop_assert_eq!(lower_bound(&schedule), schedule.makespan());
    }
}
