//! Parallel vs sequential throughput of the data-parallel inner loops:
//! one full subproblem sweep and the tree-oracle enumeration.
//!
//! The `parallel` feature (default) backs the library paths with rayon; the
//! sequential baselines below run identical code through plain iterators, so
//! a diff in output would be a bug, not a tuning artifact.

use comets_core::dual::{self, DualState};
use comets_core::gen;
use comets_core::oracle::{ilp_optimum_tree, OracleLimits};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

fn bench_subproblem_sweep(c: &mut Criterion) {
    let scenario = gen::sweep_tree(300, 7);
    let mut dual = DualState::zeros(&scenario);
    // non-trivial prices so the knapsacks have real work to do
    for (i, v) in dual.lambda1.iter_mut().enumerate() {
        *v = (i % 13) as f64 * 0.17;
    }
    for (i, v) in dual.lambda2.iter_mut().enumerate() {
        *v = (i % 7) as f64 * 0.11;
    }

    let mut group = c.benchmark_group("subproblem_sweep_300_users");
    group.bench_function("library_path", |b| {
        b.iter(|| dual::solve_all_subproblems(&scenario, &dual).unwrap())
    });
    group.bench_function("sequential_baseline", |b| {
        b.iter(|| solve_all_sequential(&scenario, &dual))
    });
    group.finish();
}

/// Same math as `solve_all_subproblems`, forced through sequential loops.
fn solve_all_sequential(
    scenario: &comets_core::Scenario,
    dual: &DualState,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    use comets_core::dual::subproblems as sp;
    use comets_core::NodeRole;
    let g = &scenario.graph;
    let bw = scenario.catalog.bandwidths();
    let q = scenario.catalog.qualities();
    let x: Vec<Vec<f64>> = g
        .node_indices()
        .map(|n| match g.role(n) {
            NodeRole::Server => vec![1.0; scenario.levels()],
            NodeRole::User => {
                let p = scenario.profile_of_node(n).unwrap();
                sp::solve_user(p.weight, &q, dual.lambda1_row(n), &p.supported_levels).unwrap()
            }
            NodeRole::Forwarder => {
                let rows: Vec<&[f64]> = g.outgoing(n).iter().map(|&e| dual.lambda2_row(e)).collect();
                sp::solve_forwarder_selection(dual.lambda1_row(n), &rows)
            }
        })
        .collect();
    let y: Vec<Vec<f64>> = (0..g.edge_count())
        .map(|e| {
            let (from, to) = g.endpoints(e);
            match g.role(from) {
                NodeRole::Server => {
                    sp::solve_server_edge(dual.lambda1_row(to), &bw, g.capacity(e)).unwrap()
                }
                _ => sp::solve_forwarder_edge(
                    dual.lambda1_row(to),
                    dual.lambda2_row(e),
                    &bw,
                    g.capacity(e),
                )
                .unwrap(),
            }
        })
        .collect();
    (x, y)
}

fn bench_tree_oracle(c: &mut Criterion) {
    let cfg = gen::TreeGenConfig {
        seed: 4,
        users: 8,
        max_forwarders: 5,
        levels: 4,
        ..Default::default()
    };
    let scenario = gen::random_tree(&cfg);
    let limits = OracleLimits::default();
    c.bench_function("tree_oracle_8_users", |b| {
        b.iter_batched(
            || scenario.clone(),
            |s| ilp_optimum_tree(&s, &limits).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, bench_subproblem_sweep, bench_tree_oracle);
criterion_main!(benches);
