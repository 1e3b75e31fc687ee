mod common;

use common::{small_instance, small_rb_choices};
use mecpart::solvers::oracle::enumerate_optimum;
use mecpart::*;

const INSTANCES: u64 = 50;

#[test]
fn exact_matches_enumeration_on_small_instances() {
    let system = SystemModel::default();
    for seed in 0..INSTANCES {
        let tasks = small_instance(seed);
        let rb_choices = small_rb_choices(seed);
        for mode in Mode::ALL {
            let cfg = ExactConfig {
                p_grid_step: 0.25,
                rb_choices: rb_choices.clone(),
                node_limit: u64::MAX,
            };
            let exact = solve_exact(&tasks, mode, &cfg, &system).unwrap();
            let brute = enumerate_optimum(&tasks, mode, 0.25, &rb_choices, &system).unwrap();
            assert!(exact.proven_optimal);
            assert!(
                (exact.best_value.total - brute.best_value.total).abs() <= 1e-9,
                "seed {seed} {mode}: exact {} enumeration {}",
                exact.best_value.total,
                brute.best_value.total
            );
        }
    }
}

#[test]
fn exact_matches_enumeration_under_global_drop_accounting() {
    let system = SystemModel {
        drop_accounting: DropAccounting::Global,
        ..SystemModel::default()
    };
    for seed in 0..20 {
        let tasks = small_instance(seed);
        let cfg = ExactConfig {
            p_grid_step: 0.25,
            rb_choices: vec![100],
            node_limit: u64::MAX,
        };
        let exact = solve_exact(&tasks, Mode::OffloadOnly, &cfg, &system).unwrap();
        let brute = enumerate_optimum(&tasks, Mode::OffloadOnly, 0.25, &[100], &system).unwrap();
        assert!(
            (exact.best_value.total - brute.best_value.total).abs() <= 1e-9,
            "seed {seed}"
        );
    }
}

#[test]
fn four_tasks_five_grid_points_two_rb_choices() {
    let system = SystemModel::default();
    let tasks = small_instance(3);
    assert_eq!(tasks.len(), 4);
    let cfg = ExactConfig {
        p_grid_step: 0.25,
        rb_choices: vec![30, 100],
        node_limit: u64::MAX,
    };
    let exact = solve_exact(&tasks, Mode::Partition, &cfg, &system).unwrap();
    let brute = enumerate_optimum(&tasks, Mode::Partition, 0.25, &[30, 100], &system).unwrap();
    assert!((exact.best_value.total - brute.best_value.total).abs() <= 1e-9);
}

#[test]
fn single_task_single_server_grid_optimum() {
    let system = SystemModel {
        servers: vec![ServerSpec::new(0, 1, 1.0).unwrap()],
        ..SystemModel::default()
    };
    let tasks = [Task::new(0, 0, 8e6, 0.0, 0.4).unwrap()];
    let cfg = ExactConfig {
        p_grid_step: 0.05,
        ..ExactConfig::default()
    };
    let exact = solve_exact(&tasks, Mode::Partition, &cfg, &system).unwrap();
    // Scan every grid point by hand.
    let mut best = f64::INFINITY;
    for k in 0..=20 {
        let p = k as f64 / 20.0;
        let choice = if k == 20 {
            TaskDecision::local(100)
        } else {
            TaskDecision::partial(p, Some(0), 100)
        };
        let v = evaluate(&tasks, &Decision(vec![choice]), Mode::Partition, &system).unwrap();
        if v.feasible {
            best = best.min(v.total);
        }
    }
    assert_eq!(exact.best_value.total, best);
    // The deadline forces part of the work onto the UE.
    let p = exact.best_decision[0].local_fraction;
    assert!(p > 0.0 && p < 1.0, "p = {p}");
}

#[test]
fn cuckoo_never_beats_exact_and_stays_close() {
    let system = SystemModel::default();
    for mode in [Mode::OffloadOnly, Mode::Partition] {
        let mut close = 0;
        for seed in 0..INSTANCES {
            let tasks = small_instance(seed);
            let rb_choices = small_rb_choices(seed);
            let exact = solve_exact(
                &tasks,
                mode,
                &ExactConfig {
                    p_grid_step: 0.25,
                    rb_choices: rb_choices.clone(),
                    node_limit: u64::MAX,
                },
                &system,
            )
            .unwrap();
            let cfg = CuckooConfig {
                seed,
                p_grid_step: Some(0.25),
                rb_choices,
                ..CuckooConfig::default()
            };
            let cuckoo = solve_cuckoo(&tasks, mode, &cfg, &system).unwrap();
            let (c, e) = (cuckoo.best_value.total, exact.best_value.total);
            assert!(
                c >= e - 1e-9,
                "seed {seed} {mode}: cuckoo {c} below exact {e}"
            );
            if c <= 1.2 * e + 1e-9 {
                close += 1;
            }
            assert!(cuckoo
                .trace
                .windows(2)
                .all(|w| w[1].best_objective <= w[0].best_objective));
        }
        assert!(
            close * 10 >= INSTANCES * 9,
            "{mode}: only {close}/{INSTANCES} within 20%"
        );
    }
}

#[test]
fn cuckoo_seeded_runs_on_one_four_task_instance() {
    let system = SystemModel::default();
    let tasks = small_instance(7);
    let exact = solve_exact(
        &tasks,
        Mode::Partition,
        &ExactConfig {
            p_grid_step: 0.25,
            node_limit: u64::MAX,
            ..ExactConfig::default()
        },
        &system,
    )
    .unwrap();
    let mut close = 0;
    for seed in 0..10 {
        let cfg = CuckooConfig {
            seed,
            p_grid_step: Some(0.25),
            ..CuckooConfig::default()
        };
        let c = solve_cuckoo(&tasks, Mode::Partition, &cfg, &system)
            .unwrap()
            .best_value
            .total;
        assert!(c >= exact.best_value.total - 1e-9);
        if c <= 1.2 * exact.best_value.total {
            close += 1;
        }
    }
    assert!(close >= 9, "{close}/10 within 20%");
}

#[test]
fn greedy_offloading_is_no_better_than_exact() {
    let system = SystemModel::default();
    for seed in 0..INSTANCES {
        let tasks = small_instance(seed);
        let exact = solve_exact(
            &tasks,
            Mode::OffloadOnly,
            &ExactConfig {
                node_limit: u64::MAX,
                ..ExactConfig::default()
            },
            &system,
        )
        .unwrap();
        let greedy = solve_baseline(&tasks, Mode::OffloadOnly, &system).unwrap();
        assert!(
            greedy.best_value.total >= exact.best_value.total - 1e-9,
            "seed {seed}"
        );
    }
}

#[test]
fn partition_optimum_dominates_local_only() {
    let system = SystemModel::default();
    for seed in 0..INSTANCES {
        let tasks = small_instance(seed);
        let cfg = ExactConfig {
            p_grid_step: 0.25,
            node_limit: u64::MAX,
            ..ExactConfig::default()
        };
        let partition = solve_exact(&tasks, Mode::Partition, &cfg, &system).unwrap();
        let local = solve_baseline(&tasks, Mode::LocalOnly, &system).unwrap();
        assert!(
            partition.best_value.total <= local.best_value.total + 1e-12,
            "seed {seed}"
        );
    }
}

#[test]
fn pre_seeded_optimum_gives_a_flat_trace() {
    let system = SystemModel::default();
    let tasks = [Task::new(0, 0, 2e6, 0.0, 1.0).unwrap()];
    let exact = solve_exact(&tasks, Mode::Partition, &ExactConfig::default(), &system).unwrap();
    let cfg = CuckooConfig {
        abandonment_prob: 0.0,
        ..CuckooConfig::default()
    };
    let search = CuckooSearch::new(&tasks, Mode::Partition, &cfg, &system).unwrap();
    let seed = search.encode(&exact.best_decision);
    let result = search
        .with_initial_nests(vec![seed])
        .unwrap()
        .run()
        .unwrap();
    assert_eq!(result.trace.len(), 101);
    for point in &result.trace {
        assert_eq!(point.best_objective, exact.best_value.total);
    }
}

#[test]
fn large_instance_cuckoo_trails_exact() {
    let system = SystemModel::default();
    let tasks = generate_workload(&WorkloadSpec::for_users(400, 0.1, 11)).unwrap();
    let exact = solve_exact(&tasks, Mode::Partition, &ExactConfig::default(), &system).unwrap();
    let cuckoo = solve_cuckoo(&tasks, Mode::Partition, &CuckooConfig::default(), &system).unwrap();
    assert!(cuckoo
        .trace
        .windows(2)
        .all(|w| w[1].best_objective <= w[0].best_objective));
    assert!(cuckoo.best_value.total > exact.best_value.total);
}

#[test]
fn small_instances_exercise_drops_and_splits() {
    let system = SystemModel::default();
    let cfg = ExactConfig {
        p_grid_step: 0.25,
        node_limit: u64::MAX,
        ..ExactConfig::default()
    };
    let (mut with_drops, mut with_splits) = (0, 0);
    for seed in 0..INSTANCES {
        let tasks = small_instance(seed);
        if solve_exact(&tasks, Mode::OffloadOnly, &cfg, &system)
            .unwrap()
            .best_value
            .drops
            > 0
        {
            with_drops += 1;
        }
        let partition = solve_exact(&tasks, Mode::Partition, &cfg, &system).unwrap();
        if partition
            .best_decision
            .iter()
            .any(|c| c.local_fraction > 0.0 && c.local_fraction < 1.0)
        {
            with_splits += 1;
        }
    }
    println!(
        "offload optima with drops: {with_drops}, partition optima with splits: {with_splits}"
    );
    assert!(with_drops >= 5 && with_splits >= 5);
}
