//! Brute-force reference solvers for small instances.
//!
//! Everything here is deliberately independent of the dual-decomposition
//! path: optima come from exhaustive enumeration, so these functions are the
//! ground truth the solver is tested against.

use crate::exec;
use crate::milp;
use crate::scenario::Scenario;
use crate::state::{SelectionState, TransmissionState};
use crate::NodeRole;
use thiserror::Error;

/// Enumeration budgets. Exceeding one is an error, not a silent truncation.
#[derive(Debug, Clone)]
pub struct OracleLimits {
    /// Tree mode: product of per-user level choices.
    pub max_tree_assignments: u64,
    /// DAG mode: total binary variables `(|F u U| + |E|) * L`.
    pub max_dag_bits: u32,
    /// DAG mode: search nodes actually visited.
    pub max_dag_states: u64,
    /// Grid mode: search nodes actually visited.
    pub max_grid_states: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_tree_assignments: 1_000_000,
            max_dag_bits: 24,
            max_dag_states: 1 << 26,
            max_grid_states: 1 << 26,
        }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("not a tree rooted at a single server: {0}")]
    NotATree(String),
    #[error("enumeration limit exceeded: {0}")]
    LimitsExceeded(String),
    #[error("scenario invalid:\n{0}")]
    InvalidScenario(crate::scenario::ValidationReport),
    #[error(transparent)]
    Milp(#[from] milp::MilpError),
}

/// Exact optimum, or proof that no integral assignment is feasible.
#[derive(Debug, Clone)]
pub enum OracleOutcome {
    Optimal {
        x: SelectionState,
        y: TransmissionState,
        z: f64,
    },
    Infeasible,
}

impl OracleOutcome {
    pub fn z(&self) -> Option<f64> {
        match self {
            OracleOutcome::Optimal { z, .. } => Some(*z),
            OracleOutcome::Infeasible => None,
        }
    }
}

struct TreeShape {
    /// user node idx, profile idx, in node-index order
    users: Vec<(usize, usize)>,
    /// per user: edges on the path root -> user
    paths: Vec<Vec<usize>>,
}

fn tree_shape(scenario: &Scenario) -> Result<TreeShape, OracleError> {
    let g = &scenario.graph;
    let servers: Vec<usize> = g.nodes_with_role(NodeRole::Server).collect();
    if servers.len() != 1 {
        return Err(OracleError::NotATree(format!(
            "{} servers, expected 1",
            servers.len()
        )));
    }
    for i in g.node_indices() {
        let indeg = g.incoming(i).len();
        match g.role(i) {
            NodeRole::Server if indeg != 0 => {
                return Err(OracleError::NotATree("server has a parent".into()))
            }
            NodeRole::Server => {}
            _ if indeg != 1 => {
                return Err(OracleError::NotATree(format!(
                    "node {} has {} parents",
                    g.id(i),
                    indeg
                )))
            }
            _ => {}
        }
    }
    let mut users = Vec::new();
    let mut paths = Vec::new();
    for nidx in g.node_indices() {
        if g.role(nidx) != NodeRole::User {
            continue;
        }
        let Some(profile) = scenario.profile_of_node(nidx) else {
            return Err(OracleError::NotATree(format!(
                "user {} has no profile",
                g.id(nidx)
            )));
        };
        let uidx = scenario
            .users
            .iter()
            .position(|p| p.id == profile.id)
            .expect("profile exists");
        let mut path = Vec::new();
        let mut cur = nidx;
        while g.role(cur) != NodeRole::Server {
            let eidx = g.incoming(cur)[0];
            path.push(eidx);
            cur = g.endpoints(eidx).0;
        }
        path.reverse();
        users.push((nidx, uidx));
        paths.push(path);
    }
    Ok(TreeShape { users, paths })
}

/// Exact ILP optimum on a tree rooted at one server.
///
/// Enumerates every per-user level choice; each choice induces a unique
/// minimal transmission set (an edge carries a level iff some user below it
/// selected that level), which only capacity can reject. Extra transmissions
/// never raise the objective, so the minimal closure is the only candidate
/// per assignment.
pub fn ilp_optimum_tree(
    scenario: &Scenario,
    limits: &OracleLimits,
) -> Result<OracleOutcome, OracleError> {
    let report = scenario.validate();
    if !report.is_empty() {
        return Err(OracleError::InvalidScenario(report));
    }
    let shape = tree_shape(scenario)?;
    let levels = scenario.levels();
    assert!(levels <= 63, "level bitmask");
    let bw = scenario.catalog.bandwidths();
    let q = scenario.catalog.qualities();
    let g = &scenario.graph;

    let radices: Vec<u64> = shape
        .users
        .iter()
        .map(|&(_, uidx)| scenario.users[uidx].supported_levels.len() as u64)
        .collect();
    let total: u64 = radices.iter().try_fold(1u64, |acc, &r| {
        acc.checked_mul(r).filter(|&t| t <= limits.max_tree_assignments)
    })
    .ok_or_else(|| {
        OracleError::LimitsExceeded(format!(
            "tree assignments exceed {}",
            limits.max_tree_assignments
        ))
    })?;
    if total == 0 {
        return Ok(OracleOutcome::Infeasible);
    }

    let weights: Vec<f64> = shape
        .users
        .iter()
        .map(|&(_, uidx)| scenario.users[uidx].weight)
        .collect();
    let supported: Vec<&[usize]> = shape
        .users
        .iter()
        .map(|&(_, uidx)| scenario.users[uidx].supported_levels.as_slice())
        .collect();

    // score one flat assignment index; returns (z, feasible)
    let evaluate = |index: u64, carried: &mut [u64]| -> (f64, bool) {
        carried.fill(0);
        let mut rem = index;
        let mut z = 0.0;
        for (u, radix) in radices.iter().enumerate() {
            let choice = (rem % radix) as usize;
            rem /= radix;
            let level = supported[u][choice];
            z += weights[u] * q[level - 1];
            let bit = 1u64 << (level - 1);
            for &e in &shape.paths[u] {
                carried[e] |= bit;
            }
        }
        for (e, mask) in carried.iter().enumerate() {
            if *mask == 0 {
                continue;
            }
            let mut load = 0.0;
            let mut m = *mask;
            while m != 0 {
                let l = m.trailing_zeros() as usize;
                load += bw[l];
                m &= m - 1;
            }
            if load > g.capacity(e) + milp::TOLERANCE {
                return (z, false);
            }
        }
        (z, true)
    };

    // chunked scan, deterministic merge: higher z wins, ties to lower index
    const CHUNK: u64 = 8192;
    let chunks: Vec<(u64, u64)> = (0..total)
        .step_by(CHUNK as usize)
        .map(|start| (start, (start + CHUNK).min(total)))
        .collect();
    let best_per_chunk = exec::map_collect(&chunks, |&(start, end)| {
        let mut carried = vec![0u64; g.edge_count()];
        let mut best: Option<(f64, u64)> = None;
        for index in start..end {
            let (z, feasible) = evaluate(index, &mut carried);
            if feasible && best.map_or(true, |(bz, _)| z > bz) {
                best = Some((z, index));
            }
        }
        best
    });
    let mut best: Option<(f64, u64)> = None;
    for candidate in best_per_chunk.into_iter().flatten() {
        best = match best {
            None => Some(candidate),
            Some((bz, bi)) => {
                if candidate.0 > bz || (candidate.0 == bz && candidate.1 < bi) {
                    Some(candidate)
                } else {
                    Some((bz, bi))
                }
            }
        };
    }

    let Some((_, index)) = best else {
        return Ok(OracleOutcome::Infeasible);
    };

    // materialize the winner
    let mut x = SelectionState::zeros(g.node_count(), levels);
    let mut y = TransmissionState::zeros(g.edge_count(), levels);
    for s in g.nodes_with_role(NodeRole::Server) {
        for l in 0..levels {
            x.set(s, l, 1.0);
        }
    }
    let mut rem = index;
    for (u, radix) in radices.iter().enumerate() {
        let choice = (rem % radix) as usize;
        rem /= radix;
        let level = supported[u][choice];
        x.set(shape.users[u].0, level - 1, 1.0);
        for &e in &shape.paths[u] {
            y.set(e, level - 1, 1.0);
        }
    }
    for f in g.nodes_with_role(NodeRole::Forwarder) {
        for l in 0..levels {
            let carried = g.incoming(f).iter().any(|&e| y.get(e, l) > 0.5);
            x.set(f, l, if carried { 1.0 } else { 0.0 });
        }
    }
    let z = milp::objective(scenario, &x)?;
    Ok(OracleOutcome::Optimal { x, y, z })
}

/// Exact ILP optimum on any small DAG by depth-first enumeration of every
/// binary variable, with feasibility pruning along the way.
pub fn ilp_optimum_small_dag(
    scenario: &Scenario,
    limits: &OracleLimits,
) -> Result<OracleOutcome, OracleError> {
    let report = scenario.validate();
    if !report.is_empty() {
        return Err(OracleError::InvalidScenario(report));
    }
    let g = &scenario.graph;
    let levels = scenario.levels();
    let fu: Vec<usize> = g
        .node_indices()
        .filter(|&i| g.role(i) != NodeRole::Server)
        .collect();
    let bits = (fu.len() + g.edge_count()) as u32 * levels as u32;
    if bits > limits.max_dag_bits {
        return Err(OracleError::LimitsExceeded(format!(
            "{bits} binary variables exceed {}",
            limits.max_dag_bits
        )));
    }

    let bw = scenario.catalog.bandwidths();
    let q = scenario.catalog.qualities();
    let mut x = SelectionState::zeros(g.node_count(), levels);
    for s in g.nodes_with_role(NodeRole::Server) {
        for l in 0..levels {
            x.set(s, l, 1.0);
        }
    }
    let mut y = TransmissionState::zeros(g.edge_count(), levels);

    struct Search<'a> {
        scenario: &'a Scenario,
        fu: &'a [usize],
        bw: &'a [f64],
        q: &'a [f64],
        levels: usize,
        states: u64,
        max_states: u64,
        best: Option<(f64, SelectionState, TransmissionState)>,
    }

    impl Search<'_> {
        /// upper bound on Z completion: users not yet fully decided take
        /// their best supported quality
        fn optimistic_z(&self, x: &SelectionState, next_node_pos: usize) -> f64 {
            let mut z = 0.0;
            for (pos, &nidx) in self.fu.iter().enumerate() {
                if self.scenario.graph.role(nidx) != NodeRole::User {
                    continue;
                }
                let p = self.scenario.profile_of_node(nidx).expect("validated");
                if pos < next_node_pos {
                    let picked: f64 = x
                        .row(nidx)
                        .iter()
                        .enumerate()
                        .map(|(l, &v)| v * self.q[l])
                        .sum();
                    z += p.weight * picked;
                } else {
                    let best_q = p
                        .supported_levels
                        .iter()
                        .map(|&l| self.q[l - 1])
                        .fold(f64::NEG_INFINITY, f64::max);
                    z += p.weight * best_q;
                }
            }
            z
        }

        fn assign_nodes(
            &mut self,
            pos: usize,
            x: &mut SelectionState,
            y: &mut TransmissionState,
        ) -> Result<(), OracleError> {
            self.states += 1;
            if self.states > self.max_states {
                return Err(OracleError::LimitsExceeded(format!(
                    "DAG search states exceed {}",
                    self.max_states
                )));
            }
            if let Some((bz, _, _)) = &self.best {
                if self.optimistic_z(x, pos) <= *bz {
                    return Ok(());
                }
            }
            if pos == self.fu.len() {
                let mut load = vec![0.0; self.scenario.graph.edge_count()];
                return self.assign_edges(0, 0, x, y, &mut load);
            }
            let nidx = self.fu[pos];
            match self.scenario.graph.role(nidx) {
                NodeRole::User => {
                    let p = self.scenario.profile_of_node(nidx).expect("validated");
                    // exactly one supported level
                    for &level in &p.supported_levels {
                        x.set(nidx, level - 1, 1.0);
                        self.assign_nodes(pos + 1, x, y)?;
                        x.set(nidx, level - 1, 0.0);
                    }
                }
                NodeRole::Forwarder => {
                    // all 2^L subsets of carried levels
                    for mask in 0..(1u32 << self.levels) {
                        for l in 0..self.levels {
                            x.set(nidx, l, if mask & (1 << l) != 0 { 1.0 } else { 0.0 });
                        }
                        self.assign_nodes(pos + 1, x, y)?;
                    }
                    for l in 0..self.levels {
                        x.set(nidx, l, 0.0);
                    }
                }
                NodeRole::Server => unreachable!("servers are fixed"),
            }
            Ok(())
        }

        fn assign_edges(
            &mut self,
            eidx: usize,
            level: usize,
            x: &mut SelectionState,
            y: &mut TransmissionState,
            load: &mut [f64],
        ) -> Result<(), OracleError> {
            self.states += 1;
            if self.states > self.max_states {
                return Err(OracleError::LimitsExceeded(format!(
                    "DAG search states exceed {}",
                    self.max_states
                )));
            }
            let g = &self.scenario.graph;
            if eidx == g.edge_count() {
                // C-FWD-IN: every carried level must arrive from upstream
                for &nidx in self.fu {
                    for l in 0..self.levels {
                        if x.get(nidx, l) > 0.5 {
                            let fed = g.incoming(nidx).iter().any(|&e| y.get(e, l) > 0.5);
                            if !fed {
                                return Ok(());
                            }
                        }
                    }
                }
                let z = milp::objective(self.scenario, x)?;
                let better = match &self.best {
                    None => true,
                    Some((bz, _, _)) => z > *bz,
                };
                if better {
                    self.best = Some((z, x.clone(), y.clone()));
                }
                return Ok(());
            }
            let (next_e, next_l) = if level + 1 == self.levels {
                (eidx + 1, 0)
            } else {
                (eidx, level + 1)
            };
            // y = 0 branch
            y.set(eidx, level, 0.0);
            self.assign_edges(next_e, next_l, x, y, load)?;
            // y = 1 branch, if the source carries the level and capacity allows
            let (from, _) = g.endpoints(eidx);
            if x.get(from, level) > 0.5
                && load[eidx] + self.bw[level] <= g.capacity(eidx) + milp::TOLERANCE
            {
                y.set(eidx, level, 1.0);
                load[eidx] += self.bw[level];
                self.assign_edges(next_e, next_l, x, y, load)?;
                load[eidx] -= self.bw[level];
                y.set(eidx, level, 0.0);
            }
            Ok(())
        }
    }

    let mut search = Search {
        scenario,
        fu: &fu,
        bw: &bw,
        q: &q,
        levels,
        states: 0,
        max_states: limits.max_dag_states,
        best: None,
    };
    search.assign_nodes(0, &mut x, &mut y)?;
    Ok(match search.best {
        Some((z, x, y)) => OracleOutcome::Optimal { x, y, z },
        None => OracleOutcome::Infeasible,
    })
}

/// Exhaustive search of the fractional knapsack over the grid
/// `{0, step, ..., 1}^L` under the capacity constraint, returning the best
/// objective value found.
///
/// The search is exact: branches are only cut when a capacity-ignoring or
/// residual-capacity relaxation proves they cannot beat the incumbent.
pub fn knapsack_grid_check(
    values: &[f64],
    weights: &[f64],
    capacity: f64,
    step: f64,
    max_states: u64,
) -> Result<f64, OracleError> {
    assert_eq!(values.len(), weights.len());
    assert!(step > 0.0 && step <= 1.0, "step in (0, 1]");
    let k_max = (1.0 / step).round() as u64;

    // items with non-positive value never help; drop them up front
    let mut items: Vec<(f64, f64)> = values
        .iter()
        .zip(weights)
        .filter(|(v, _)| **v > 0.0)
        .map(|(&v, &w)| (v, w))
        .collect();
    if items.is_empty() || capacity <= 0.0 {
        return Ok(0.0);
    }
    // density order makes the greedy-first incumbent strong; ties keep the
    // original relative order (sort is stable)
    items.sort_by(|a, b| (b.0 / b.1).partial_cmp(&(a.0 / a.1)).expect("finite"));

    struct Grid<'a> {
        items: &'a [(f64, f64)],
        step: f64,
        k_max: u64,
        states: u64,
        max_states: u64,
        best: f64,
    }

    impl Grid<'_> {
        /// residual continuous relaxation: fill leftover capacity with the
        /// remaining items in density order, fractional tail allowed
        fn bound(&self, idx: usize, cap_left: f64) -> f64 {
            let mut cap = cap_left;
            let mut v = 0.0;
            for &(value, weight) in &self.items[idx..] {
                if cap <= 0.0 {
                    break;
                }
                let take = (cap / weight).min(1.0);
                v += value * take;
                cap -= weight * take;
            }
            v
        }

        fn dfs(&mut self, idx: usize, cap_left: f64, acc: f64) -> Result<(), OracleError> {
            self.states += 1;
            if self.states > self.max_states {
                return Err(OracleError::LimitsExceeded(format!(
                    "grid search states exceed {}",
                    self.max_states
                )));
            }
            if idx == self.items.len() {
                if acc > self.best {
                    self.best = acc;
                }
                return Ok(());
            }
            if acc + self.bound(idx, cap_left) <= self.best {
                return Ok(());
            }
            let (value, weight) = self.items[idx];
            let fit = (cap_left / (weight * self.step)).floor() as i64;
            let k_hi = (self.k_max as i64).min(fit).max(0) as u64;
            for k in (0..=k_hi).rev() {
                let frac = k as f64 * self.step;
                let used = weight * frac;
                if used > cap_left {
                    continue;
                }
                self.dfs(idx + 1, cap_left - used, acc + value * frac)?;
            }
            Ok(())
        }
    }

    let mut grid = Grid {
        items: &items,
        step,
        k_max,
        states: 0,
        max_states,
        best: 0.0,
    };
    grid.dfs(0, capacity, 0.0)?;
    Ok(grid.best)
}

/// Plain nested enumeration of the same grid, with no pruning at all. Only
/// usable for tiny grids; exists to validate [`knapsack_grid_check`].
pub fn knapsack_grid_exhaustive(
    values: &[f64],
    weights: &[f64],
    capacity: f64,
    step: f64,
) -> f64 {
    let k_max = (1.0 / step).round() as u64;
    let n = values.len();
    let mut ks = vec![0u64; n];
    let mut best = 0.0f64;
    loop {
        let mut load = 0.0;
        let mut val = 0.0;
        for i in 0..n {
            let frac = ks[i] as f64 * step;
            load += weights[i] * frac;
            val += values[i] * frac;
        }
        if load <= capacity && val > best {
            best = val;
        }
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            ks[i] += 1;
            if ks[i] <= k_max {
                break;
            }
            ks[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_user_unconstrained_picks_top_level() {
        let s = gen::chain_scenario(2, 1000.0); // S -> U direct edge
        let out = ilp_optimum_tree(&s, &OracleLimits::default()).unwrap();
        let OracleOutcome::Optimal { x, z, .. } = out else {
            panic!("feasible")
        };
        let unode = s.user_nodes()[0];
        let top = s.levels() - 1;
        assert_eq!(x.get(unode, top), 1.0);
        let expect = milp::objective(&s, &x).unwrap();
        assert_eq!(z, expect);
    }

    #[test]
    fn capacity_forces_level_one() {
        // B = [2, 5], C = 3: only level 1 fits
        let mut f = gen::chain_scenario(2, 3.0).to_file_struct();
        f.catalog.levels.truncate(2);
        f.catalog.levels[0].bandwidth_mbps = 2.0;
        f.catalog.levels[1].bandwidth_mbps = 5.0;
        f.users[0].supported_levels = vec![1, 2];
        let s = crate::Scenario::from_file_struct(f).unwrap();
        let out = ilp_optimum_tree(&s, &OracleLimits::default()).unwrap();
        let OracleOutcome::Optimal { x, z, .. } = out else {
            panic!("feasible")
        };
        assert_eq!(x.get(s.user_nodes()[0], 0), 1.0);
        assert!((z - s.catalog.quality(1).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn starved_path_is_infeasible() {
        let mut f = gen::chain_scenario(3, 1.0).to_file_struct();
        // bandwidths all above the only path's capacity
        for l in &mut f.catalog.levels {
            l.bandwidth_mbps += 10.0;
        }
        let s = crate::Scenario::from_file_struct(f).unwrap();
        let out = ilp_optimum_tree(&s, &OracleLimits::default()).unwrap();
        assert!(matches!(out, OracleOutcome::Infeasible));
    }

    #[test]
    fn tree_and_dag_oracles_agree() {
        for seed in 0..8 {
            let cfg = gen::TreeGenConfig {
                seed,
                users: 2,
                max_forwarders: 2,
                levels: 2,
                ..Default::default()
            };
            let s = gen::random_tree(&cfg);
            let limits = OracleLimits::default();
            let tree = ilp_optimum_tree(&s, &limits).unwrap();
            let dag = ilp_optimum_small_dag(&s, &limits).unwrap();
            match (&tree, &dag) {
                (
                    OracleOutcome::Optimal { z: zt, .. },
                    OracleOutcome::Optimal { z: zd, .. },
                ) => assert!((zt - zd).abs() < 1e-12, "seed {seed}: {zt} vs {zd}"),
                (OracleOutcome::Infeasible, OracleOutcome::Infeasible) => {}
                _ => panic!("seed {seed}: oracles disagree on feasibility"),
            }
        }
    }

    #[test]
    fn zero_capacity_dag_is_infeasible() {
        let mut f = gen::chain_scenario(3, 1.0).to_file_struct();
        f.catalog.levels.truncate(1);
        for e in &mut f.edges {
            e.capacity_mbps = 0.5; // below B_1 = 1.5
        }
        let s = crate::Scenario::from_file_struct(f).unwrap();
        let out = ilp_optimum_small_dag(&s, &OracleLimits::default()).unwrap();
        assert!(matches!(out, OracleOutcome::Infeasible));
    }

    #[test]
    fn parallel_paths_use_the_sufficient_one() {
        // S -> F1 -> U with C too small; S -> F2 -> U with enough capacity
        let f: crate::scenario::ScenarioFile = serde_json::from_str(
            r#"{
              "catalog": {"levels": [
                {"pixel_height": 480, "bandwidth_mbps": 2.0},
                {"pixel_height": 960, "bandwidth_mbps": 5.0}
              ]},
              "nodes": [
                {"id": 0, "role": "server"},
                {"id": 1, "role": "forwarder"},
                {"id": 2, "role": "forwarder"},
                {"id": 3, "role": "user"}
              ],
              "edges": [
                {"from": 0, "to": 1, "capacity_mbps": 2.0},
                {"from": 0, "to": 2, "capacity_mbps": 50.0},
                {"from": 1, "to": 3, "capacity_mbps": 2.0},
                {"from": 2, "to": 3, "capacity_mbps": 50.0}
              ],
              "users": [{"id": 3, "supported_levels": [1, 2], "weight": 1.0}]
            }"#,
        )
        .unwrap();
        let s = crate::Scenario::from_file_struct(f).unwrap();
        let out = ilp_optimum_small_dag(&s, &OracleLimits::default()).unwrap();
        let OracleOutcome::Optimal { x, y, z } = out else {
            panic!("feasible")
        };
        // level 2 reachable only through forwarder 2
        assert_eq!(x.get(3, 1), 1.0);
        assert!(y.get(1, 1) > 0.5 && y.get(3, 1) > 0.5);
        assert!((z - s.catalog.quality(2).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn tree_solution_passes_integral_check() {
        for seed in 0..10 {
            let cfg = gen::TreeGenConfig { seed, ..Default::default() };
            let s = gen::random_tree(&cfg);
            let out = ilp_optimum_tree(&s, &OracleLimits::default()).unwrap();
            if let OracleOutcome::Optimal { x, y, .. } = out {
                let rep = milp::check(&s, &x, &y, true).unwrap();
                assert!(rep.is_empty(), "seed {seed}: {:?}", rep.entries);
            }
        }
    }

    #[test]
    fn tree_transmissions_are_minimal() {
        // removing any carried level from any edge must strand a node
        let cfg = gen::TreeGenConfig { seed: 3, ..Default::default() };
        let s = gen::random_tree(&cfg);
        let out = ilp_optimum_tree(&s, &OracleLimits::default()).unwrap();
        let OracleOutcome::Optimal { x, y, .. } = out else {
            panic!("feasible")
        };
        for e in 0..s.graph.edge_count() {
            for l in 0..s.levels() {
                if y.get(e, l) < 0.5 {
                    continue;
                }
                let mut trimmed = y.clone();
                trimmed.set(e, l, 0.0);
                let rep = milp::check(&s, &x, &trimmed, true).unwrap();
                assert!(
                    rep.count(milp::Family::FwdIn) > 0,
                    "edge {e} level {l} was removable"
                );
            }
        }
    }

    #[test]
    fn grid_single_item_half_capacity() {
        let v = knapsack_grid_check(&[1.0], &[1.0], 0.5, 0.1, 1 << 20).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn grid_all_zero_values() {
        let v = knapsack_grid_check(&[0.0, 0.0], &[1.0, 2.0], 3.0, 0.1, 1 << 20).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn grid_reference_instance() {
        let v = knapsack_grid_check(&[6.0, 4.0, 5.0], &[2.0, 3.0, 5.0], 6.0, 1e-3, 1 << 26)
            .unwrap();
        assert!((v - 11.0).abs() < 3.0 * 1e-3 * 6.0, "got {v}");
    }

    #[test]
    fn pruned_grid_matches_plain_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..40 {
            let n = rng.gen_range(1..=3usize);
            let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..8.0)).collect();
            let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..4.0)).collect();
            let cap = rng.gen_range(0.5..6.0);
            let fast = knapsack_grid_check(&values, &weights, cap, 0.05, 1 << 24).unwrap();
            let slow = knapsack_grid_exhaustive(&values, &weights, cap, 0.05);
            assert!(
                (fast - slow).abs() < 1e-9,
                "values {values:?} weights {weights:?} cap {cap}: {fast} vs {slow}"
            );
        }
    }
}
