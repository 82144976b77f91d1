mod common;

use lgt_core::baselines::{best_index, run_grid_search, run_no_tuning, run_random_search};
use lgt_core::orchestrator::{Budget, Method, RunConfig};
use lgt_core::space::{enumerate_grid, validate, GridResolution};

fn run(method: Method, seed: u64, max_configurations: usize) -> RunConfig {
    RunConfig {
        dataset: "blobs".into(),
        method,
        seed,
        budget: Budget {
            max_configurations,
            epochs_per_evaluation: 3,
            iterations: 3,
        },
    }
}

fn resolution(pairs: &[(&str, usize)]) -> GridResolution {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[test]
fn no_tuning_trains_the_default_once() {
    let splits = common::blobs_splits(1);
    let r = run_no_tuning(&run(Method::NoTuning, 1, 50), &splits, &common::blobs_space());
    assert!(r.status.is_completed());
    assert_eq!(r.budget.used(), 1);
    assert_eq!(r.final_config, common::blobs_default());
    assert_eq!(r.initial_config, r.final_config);
    assert_eq!(r.history.len(), 3);
    assert!(r.final_test_loss.is_some());
}

#[test]
fn random_search_spends_exactly_its_budget() {
    let splits = common::blobs_splits(2);
    let space = common::blobs_space();
    for n in [1, 7] {
        let (r, s) = run_random_search(&run(Method::Random, 2, n), &splits, &space);
        assert_eq!(s.evaluated.len(), n);
        assert_eq!(s.budget_used, n);
        assert_eq!(r.budget.used(), n);
        for e in &s.evaluated {
            assert!(validate(&e.config, &space).is_ok());
        }
        // Re-scan for the minimum independently of best_index.
        let mut expected = None;
        for (i, e) in s.evaluated.iter().enumerate() {
            if let Some(v) = e.val_loss {
                if expected.is_none_or(|(_, b)| v < b) {
                    expected = Some((i, v));
                }
            }
        }
        assert_eq!(s.best, expected.map(|(i, _)| i));
        assert_eq!(s.best, best_index(&s.evaluated));
        let best = &s.evaluated[s.best.unwrap()];
        assert_eq!(r.final_config, best.config);
        assert_eq!(r.final_test_loss, best.test_loss);
    }
}

#[test]
fn random_search_is_deterministic() {
    let splits = common::blobs_splits(3);
    let space = common::blobs_space();
    let (a, _) = run_random_search(&run(Method::Random, 3, 4), &splits, &space);
    let (b, _) = run_random_search(&run(Method::Random, 3, 4), &splits, &space);
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn grid_search_covers_the_grid_in_order() {
    let splits = common::blobs_splits(4);
    let space = common::blobs_space();
    let res = resolution(&[("learning_rate", 3), ("dropout", 2)]);
    let grid = enumerate_grid(&space, &res).unwrap();
    assert_eq!(grid.len(), 6);
    let (_, s) = run_grid_search(&run(Method::Grid, 4, 50), &splits, &space, &res).unwrap();
    assert_eq!(s.evaluated.len(), 6);
    let configs: Vec<_> = s.evaluated.iter().map(|e| e.config.clone()).collect();
    assert_eq!(configs, grid);

    let (r, s) = run_grid_search(&run(Method::Grid, 4, 4), &splits, &space, &res).unwrap();
    assert_eq!(s.evaluated.len(), 4);
    assert_eq!(r.budget.used(), 4);
    let configs: Vec<_> = s.evaluated.iter().map(|e| e.config.clone()).collect();
    assert_eq!(configs, grid[..4]);
}

#[test]
fn unit_resolution_gives_one_point() {
    let space = common::blobs_space();
    let res = resolution(&[("learning_rate", 1), ("weight_decay", 1), ("dropout", 1)]);
    let grid = enumerate_grid(&space, &res).unwrap();
    assert_eq!(grid.len(), 1);
    assert!(validate(&grid[0], &space).is_ok());
}
