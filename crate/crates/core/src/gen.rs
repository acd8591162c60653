//! Seeded scenario generators for tests, verification runs, and sweeps.
//!
//! All randomness flows through `ChaCha8Rng`, so a given seed produces the
//! same scenario on every platform.

use crate::catalog::ResolutionCatalog;
use crate::graph::{EdgeDecl, NodeDecl, NodeRole};
use crate::scenario::{Scenario, ScenarioFile, SimParams, UserProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn catalog_with_levels(levels: usize) -> ResolutionCatalog {
    let mut cat = ResolutionCatalog::default_ladder();
    cat.levels.truncate(levels.clamp(1, cat.levels.len()));
    cat
}

fn build(file: ScenarioFile) -> Scenario {
    let s = Scenario::from_file_struct(file).expect("generated scenario is structurally sound");
    debug_assert!(s.validate().is_empty(), "generator bug:\n{}", s.validate());
    s
}

/// `S -> F -> ... -> U` chain with `n` nodes and uniform capacity.
pub fn chain_scenario(n: usize, capacity_mbps: f64) -> Scenario {
    assert!(n >= 2);
    let nodes: Vec<NodeDecl> = (0..n as u32)
        .map(|id| NodeDecl {
            id,
            role: if id == 0 {
                NodeRole::Server
            } else if id == n as u32 - 1 {
                NodeRole::User
            } else {
                NodeRole::Forwarder
            },
        })
        .collect();
    let edges = (0..n as u32 - 1)
        .map(|i| EdgeDecl {
            from: i,
            to: i + 1,
            capacity_mbps,
            delay_ms: 5.0,
        })
        .collect();
    let catalog = ResolutionCatalog::default_ladder();
    let users = vec![UserProfile {
        id: n as u32 - 1,
        supported_levels: (1..=catalog.len()).collect(),
        weight: 1.0,
    }];
    build(ScenarioFile {
        catalog,
        nodes,
        edges,
        users,
        sim: SimParams::default(),
    })
}

/// One server, one forwarder, `users` clients behind it.
pub fn star_scenario(users: usize, capacity_mbps: f64) -> Scenario {
    let mut nodes = vec![
        NodeDecl { id: 0, role: NodeRole::Server },
        NodeDecl { id: 1, role: NodeRole::Forwarder },
    ];
    let mut edges = vec![EdgeDecl {
        from: 0,
        to: 1,
        capacity_mbps,
        delay_ms: 5.0,
    }];
    let catalog = ResolutionCatalog::default_ladder();
    let mut profiles = Vec::new();
    for u in 0..users as u32 {
        let id = 2 + u;
        nodes.push(NodeDecl { id, role: NodeRole::User });
        edges.push(EdgeDecl {
            from: 1,
            to: id,
            capacity_mbps,
            delay_ms: 5.0,
        });
        profiles.push(UserProfile {
            id,
            supported_levels: (1..=catalog.len()).collect(),
            weight: 1.0,
        });
    }
    build(ScenarioFile {
        catalog,
        nodes,
        edges,
        users: profiles,
        sim: SimParams::default(),
    })
}

/// Parameters for [`random_tree`].
#[derive(Debug, Clone)]
pub struct TreeGenConfig {
    pub seed: u64,
    pub users: usize,
    pub max_forwarders: usize,
    pub levels: usize,
    /// Capacities are drawn as `factor * demand` where demand is the
    /// multicast load if every user streamed a random target level; the
    /// factor is uniform in this range. Feasibility at each user's lowest
    /// supported level is always preserved.
    pub capacity_factor: (f64, f64),
}

impl Default for TreeGenConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            users: 6,
            max_forwarders: 5,
            levels: 4,
            capacity_factor: (0.6, 1.3),
        }
    }
}

/// Seeded random tree rooted at a single server. Every instance is feasible:
/// each edge can at least carry the multicast of its users' lowest supported
/// levels.
pub fn random_tree(cfg: &TreeGenConfig) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let catalog = catalog_with_levels(cfg.levels);
    let levels = catalog.len();
    let bw = catalog.bandwidths();

    let n_fwd = rng.gen_range(1..=cfg.max_forwarders.max(1));
    let mut nodes = vec![NodeDecl { id: 0, role: NodeRole::Server }];
    // parent[i] = node idx of the parent of node i (tree edges parent -> child)
    let mut parent: Vec<usize> = vec![usize::MAX];
    for f in 0..n_fwd {
        let id = 1 + f as u32;
        nodes.push(NodeDecl { id, role: NodeRole::Forwarder });
        // first forwarder hangs off the server, the rest off a random forwarder
        let p = if f == 0 { 0 } else { 1 + rng.gen_range(0..f) };
        parent.push(p);
    }
    let mut profiles = Vec::new();
    for u in 0..cfg.users {
        let id = 1 + n_fwd as u32 + u as u32;
        nodes.push(NodeDecl { id, role: NodeRole::User });
        parent.push(1 + rng.gen_range(0..n_fwd));
        let hi = rng.gen_range(1..=levels);
        let lo = rng.gen_range(1..=hi);
        profiles.push(UserProfile {
            id,
            supported_levels: (lo..=hi).collect(),
            weight: (rng.gen_range(0.5..2.0f64) * 100.0).round() / 100.0,
        });
    }

    // Demand per edge: multicast load of (a) lowest supported levels, which
    // bounds feasibility, and (b) random per-user target levels.
    let n = nodes.len();
    let mut targets = Vec::new();
    for p in &profiles {
        let t = p.supported_levels[rng.gen_range(0..p.supported_levels.len())];
        targets.push(t);
    }
    let mut edges = Vec::new();
    for child in 1..n {
        let p = parent[child];
        // users in the subtree of `child`
        let mut floor_levels = std::collections::BTreeSet::new();
        let mut target_levels = std::collections::BTreeSet::new();
        for (ui, prof) in profiles.iter().enumerate() {
            let unode = 1 + n_fwd + ui;
            let mut cur = unode;
            let mut below = false;
            while cur != usize::MAX {
                if cur == child {
                    below = true;
                    break;
                }
                cur = parent[cur];
            }
            if below {
                floor_levels.insert(prof.supported_levels[0]);
                target_levels.insert(targets[ui]);
            }
        }
        let floor: f64 = floor_levels.iter().map(|&l| bw[l - 1]).sum();
        let demand: f64 = target_levels.iter().map(|&l| bw[l - 1]).sum();
        let factor = rng.gen_range(cfg.capacity_factor.0..cfg.capacity_factor.1);
        let capacity = (factor * demand).max(floor).max(bw[0]);
        edges.push(EdgeDecl {
            from: nodes[p].id,
            to: nodes[child].id,
            capacity_mbps: (capacity * 1000.0).round() / 1000.0,
            delay_ms: 5.0,
        });
    }

    build(ScenarioFile {
        catalog,
        nodes,
        edges,
        users: profiles,
        sim: SimParams::default(),
    })
}

/// Layered random DAG (servers, two forwarder layers, users) where non-root
/// nodes may have several upstream parents. Used to exercise repair and
/// constraint checking off the tree case.
pub fn random_dag(seed: u64, users: usize, levels: usize) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let catalog = catalog_with_levels(levels);
    let n_levels = catalog.len();
    let servers = rng.gen_range(1..=2usize);
    let layer1 = rng.gen_range(1..=3usize);
    let layer2 = rng.gen_range(1..=3usize);

    let mut nodes = Vec::new();
    let mut next_id = 0u32;
    let mut take = |role: NodeRole, nodes: &mut Vec<NodeDecl>| {
        let id = next_id;
        next_id += 1;
        nodes.push(NodeDecl { id, role });
        id
    };
    let server_ids: Vec<u32> = (0..servers).map(|_| take(NodeRole::Server, &mut nodes)).collect();
    let l1_ids: Vec<u32> = (0..layer1).map(|_| take(NodeRole::Forwarder, &mut nodes)).collect();
    let l2_ids: Vec<u32> = (0..layer2).map(|_| take(NodeRole::Forwarder, &mut nodes)).collect();
    let user_ids: Vec<u32> = (0..users).map(|_| take(NodeRole::User, &mut nodes)).collect();

    let mut edges = Vec::new();
    let mut connect = |from: u32, to: u32, rng: &mut ChaCha8Rng, edges: &mut Vec<EdgeDecl>| {
        edges.push(EdgeDecl {
            from,
            to,
            capacity_mbps: (rng.gen_range(3.0..40.0f64) * 100.0).round() / 100.0,
            delay_ms: 5.0,
        });
    };
    // every layer-1 forwarder gets at least one server parent; extras at random
    for &f in &l1_ids {
        let s = server_ids[rng.gen_range(0..server_ids.len())];
        connect(s, f, &mut rng, &mut edges);
        for &s2 in &server_ids {
            if s2 != s && rng.gen_bool(0.3) {
                connect(s2, f, &mut rng, &mut edges);
            }
        }
    }
    for &f in &l2_ids {
        let p = l1_ids[rng.gen_range(0..l1_ids.len())];
        connect(p, f, &mut rng, &mut edges);
        for &p2 in &l1_ids {
            if p2 != p && rng.gen_bool(0.35) {
                connect(p2, f, &mut rng, &mut edges);
            }
        }
        // occasional shortcut straight from a server
        if rng.gen_bool(0.25) {
            let s = server_ids[rng.gen_range(0..server_ids.len())];
            connect(s, f, &mut rng, &mut edges);
        }
    }
    let mut profiles = Vec::new();
    for &u in &user_ids {
        let p = l2_ids[rng.gen_range(0..l2_ids.len())];
        connect(p, u, &mut rng, &mut edges);
        if rng.gen_bool(0.3) {
            let p2 = l2_ids[rng.gen_range(0..l2_ids.len())];
            if p2 != p {
                connect(p2, u, &mut rng, &mut edges);
            }
        }
        let hi = rng.gen_range(1..=n_levels);
        let lo = rng.gen_range(1..=hi);
        profiles.push(UserProfile {
            id: u,
            supported_levels: (lo..=hi).collect(),
            weight: (rng.gen_range(0.5..2.0f64) * 100.0).round() / 100.0,
        });
    }

    build(ScenarioFile {
        catalog,
        nodes,
        edges,
        users: profiles,
        sim: SimParams::default(),
    })
}

/// Fixed-shape scaling topology: one server, 4 aggregation forwarders, 20
/// leaf forwarders, `users` clients attached round-robin to the leaves.
/// Only the user count varies, so optimizer timing scales with it.
pub fn sweep_tree(users: usize, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let catalog = ResolutionCatalog::default_ladder();
    let levels = catalog.len();
    let mut nodes = vec![NodeDecl { id: 0, role: NodeRole::Server }];
    let mut edges = Vec::new();
    let aggs = 4u32;
    let leaves_per_agg = 5u32;
    for a in 0..aggs {
        let agg_id = 1 + a;
        nodes.push(NodeDecl { id: agg_id, role: NodeRole::Forwarder });
        edges.push(EdgeDecl { from: 0, to: agg_id, capacity_mbps: 400.0, delay_ms: 5.0 });
        for l in 0..leaves_per_agg {
            let leaf_id = 1 + aggs + a * leaves_per_agg + l;
            nodes.push(NodeDecl { id: leaf_id, role: NodeRole::Forwarder });
            edges.push(EdgeDecl { from: agg_id, to: leaf_id, capacity_mbps: 400.0, delay_ms: 5.0 });
        }
    }
    let leaf_ids: Vec<u32> = (0..aggs * leaves_per_agg)
        .map(|i| 1 + aggs + i)
        .collect();
    let base = 1 + aggs + aggs * leaves_per_agg;
    let mut profiles = Vec::new();
    for u in 0..users {
        let id = base + u as u32;
        nodes.push(NodeDecl { id, role: NodeRole::User });
        let leaf = leaf_ids[u % leaf_ids.len()];
        edges.push(EdgeDecl { from: leaf, to: id, capacity_mbps: 100.0, delay_ms: 5.0 });
        let hi = rng.gen_range(3..=levels);
        profiles.push(UserProfile {
            id,
            supported_levels: (1..=hi).collect(),
            weight: 1.0,
        });
    }
    build(ScenarioFile {
        catalog,
        nodes,
        edges,
        users: profiles,
        sim: SimParams::default(),
    })
}

/// Reference delivery tree for simulator experiments: one server, one core
/// forwarder, `edge_count` edge forwarders, clients split evenly. Client
/// links run at 100 Mbps, the backbone at 400 Mbps, 5 ms per hop.
pub fn reference_tree(clients: usize, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let catalog = ResolutionCatalog::default_ladder();
    let edge_count = ((clients + 24) / 25).max(1) as u32;
    let mut nodes = vec![
        NodeDecl { id: 0, role: NodeRole::Server },
        NodeDecl { id: 1, role: NodeRole::Forwarder },
    ];
    let mut edges = vec![EdgeDecl { from: 0, to: 1, capacity_mbps: 400.0, delay_ms: 5.0 }];
    for e in 0..edge_count {
        let id = 2 + e;
        nodes.push(NodeDecl { id, role: NodeRole::Forwarder });
        edges.push(EdgeDecl { from: 1, to: id, capacity_mbps: 400.0, delay_ms: 5.0 });
    }
    let base = 2 + edge_count;
    let mut profiles = Vec::new();
    for c in 0..clients {
        let id = base + c as u32;
        nodes.push(NodeDecl { id, role: NodeRole::User });
        let fwd = 2 + (c as u32 % edge_count);
        edges.push(EdgeDecl { from: fwd, to: id, capacity_mbps: 100.0, delay_ms: 5.0 });
        // heterogeneous displays, capped at 1440p to keep chunk sizes sane
        let hi = rng.gen_range(2..=4usize);
        profiles.push(UserProfile {
            id,
            supported_levels: (1..=hi).collect(),
            weight: 1.0,
        });
    }
    build(ScenarioFile {
        catalog,
        nodes,
        edges,
        users: profiles,
        sim: SimParams::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_trees_validate_and_are_trees() {
        for seed in 0..30 {
            let cfg = TreeGenConfig { seed, users: 8, ..Default::default() };
            let s = random_tree(&cfg);
            assert!(s.validate().is_empty(), "seed {seed}:\n{}", s.validate());
            for i in s.graph.node_indices() {
                if s.graph.role(i) != NodeRole::Server {
                    assert_eq!(s.graph.incoming(i).len(), 1, "tree node has one parent");
                }
            }
        }
    }

    #[test]
    fn random_dags_validate() {
        for seed in 0..30 {
            let s = random_dag(seed, 5, 4);
            assert!(s.validate().is_empty(), "seed {seed}:\n{}", s.validate());
        }
    }

    #[test]
    fn sweep_tree_shape_is_fixed() {
        let a = sweep_tree(50, 7);
        let b = sweep_tree(300, 7);
        let fwd = |s: &Scenario| {
            s.graph
                .node_indices()
                .filter(|&i| s.graph.role(i) == NodeRole::Forwarder)
                .count()
        };
        assert_eq!(fwd(&a), fwd(&b));
        assert_eq!(a.user_nodes().len(), 50);
        assert_eq!(b.user_nodes().len(), 300);
    }

    #[test]
    fn generators_are_deterministic() {
        let a = random_tree(&TreeGenConfig { seed: 42, ..Default::default() });
        let b = random_tree(&TreeGenConfig { seed: 42, ..Default::default() });
        assert_eq!(a.to_json_pretty(), b.to_json_pretty());
    }
}
