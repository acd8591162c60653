//! Feasibility repair: turn a (possibly fractional, possibly inconsistent)
//! relaxation point into an integral feasible one.
//!
//! Transmissions are floored first, which can only reduce link loads. Nodes
//! are then repaired in non-decreasing depth (ties by ascending node id), so
//! every upstream decision is final before a node is touched: forwarders
//! carry exactly what still arrives and clamp their outgoing transmissions
//! to it; users take the best-quality supported level that still arrives, or
//! are reported unserved when nothing does. Server rows are fixed to all
//! ones. The pass is a pure function of its inputs.

use crate::milp;
use crate::scenario::Scenario;
use crate::state::{SelectionState, TransmissionState};
use crate::NodeRole;
use thiserror::Error;

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub x: SelectionState,
    pub y: TransmissionState,
    /// External ids of users left without any deliverable supported level.
    /// These are the only permitted exactly-one violations in the output.
    pub unserved_users: Vec<u32>,
    /// Node ids in the order they were repaired (depth order; used by tests
    /// to assert upstream-before-downstream processing).
    pub processing_order: Vec<u32>,
}

#[derive(Debug, Error)]
pub enum ReconstructError {
    #[error(transparent)]
    Shape(#[from] milp::MilpError),
    #[error("scenario invalid:\n{0}")]
    InvalidScenario(crate::scenario::ValidationReport),
}

pub fn reconstruct(
    scenario: &Scenario,
    _x: &SelectionState,
    y: &TransmissionState,
) -> Result<ReconstructionResult, ReconstructError> {
    let report = scenario.validate();
    if !report.is_empty() {
        return Err(ReconstructError::InvalidScenario(report));
    }
    let g = &scenario.graph;
    let levels = scenario.levels();
    if y.levels() != levels || y.edges() != g.edge_count() {
        return Err(milp::MilpError::Shape(format!(
            "y is {}x{}, expected {}x{}",
            y.edges(),
            y.levels(),
            g.edge_count(),
            levels
        ))
        .into());
    }

    let mut yi = TransmissionState::zeros(g.edge_count(), levels);
    for e in 0..g.edge_count() {
        for l in 0..levels {
            yi.set(e, l, y.get(e, l).clamp(0.0, 1.0).floor());
        }
    }

    let depths = g.compute_depths().expect("validated scenarios are DAGs");
    let mut order: Vec<usize> = g.node_indices().collect();
    order.sort_by_key(|&i| (depths[i].unwrap_or(usize::MAX), g.id(i)));

    let mut xi = SelectionState::zeros(g.node_count(), levels);
    let mut unserved = Vec::new();
    let mut processing_order = Vec::with_capacity(order.len());
    let q = scenario.catalog.qualities();

    for &nidx in &order {
        processing_order.push(g.id(nidx));
        match g.role(nidx) {
            NodeRole::Server => {
                for l in 0..levels {
                    xi.set(nidx, l, 1.0);
                }
            }
            NodeRole::Forwarder => {
                for l in 0..levels {
                    let supplied: f64 = g.incoming(nidx).iter().map(|&e| yi.get(e, l)).sum();
                    xi.set(nidx, l, supplied.min(1.0));
                }
                for &e in g.outgoing(nidx) {
                    for l in 0..levels {
                        let clamped = yi.get(e, l).min(xi.get(nidx, l));
                        yi.set(e, l, clamped);
                    }
                }
            }
            NodeRole::User => {
                let p = scenario.profile_of_node(nidx).expect("validated scenario");
                let mut best: Option<usize> = None;
                for &level in &p.supported_levels {
                    let supplied: f64 = g
                        .incoming(nidx)
                        .iter()
                        .map(|&e| yi.get(e, level - 1))
                        .sum();
                    if supplied > 0.0 {
                        let better = match best {
                            None => true,
                            Some(b) => q[level - 1] >= q[b - 1],
                        };
                        if better {
                            best = Some(level);
                        }
                    }
                }
                match best {
                    Some(level) => xi.set(nidx, level - 1, 1.0),
                    None => unserved.push(g.id(nidx)),
                }
            }
        }
    }

    Ok(ReconstructionResult {
        x: xi,
        y: yi,
        unserved_users: unserved,
        processing_order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::graph::{EdgeDecl, NodeDecl};
    use crate::scenario::{ScenarioFile, SimParams, UserProfile};

    /// S(0) -> F(1) -> {U(2), U(3)}, two levels.
    fn fork_scenario() -> Scenario {
        let mut cat = crate::ResolutionCatalog::default_ladder();
        cat.levels.truncate(2);
        Scenario::from_file_struct(ScenarioFile {
            catalog: cat,
            nodes: vec![
                NodeDecl { id: 0, role: NodeRole::Server },
                NodeDecl { id: 1, role: NodeRole::Forwarder },
                NodeDecl { id: 2, role: NodeRole::User },
                NodeDecl { id: 3, role: NodeRole::User },
            ],
            edges: vec![
                EdgeDecl { from: 0, to: 1, capacity_mbps: 100.0, delay_ms: 5.0 },
                EdgeDecl { from: 1, to: 2, capacity_mbps: 100.0, delay_ms: 5.0 },
                EdgeDecl { from: 1, to: 3, capacity_mbps: 100.0, delay_ms: 5.0 },
            ],
            users: vec![
                UserProfile { id: 2, supported_levels: vec![1, 2], weight: 1.0 },
                UserProfile { id: 3, supported_levels: vec![1, 2], weight: 1.0 },
            ],
            sim: SimParams::default(),
        })
        .unwrap()
    }

    #[test]
    fn fractional_upstream_level_is_dropped_and_users_fall_back() {
        let s = fork_scenario();
        let x = SelectionState::zeros(4, 2);
        let mut y = TransmissionState::zeros(3, 2);
        // server -> forwarder carries level 1 fully, level 2 at 0.6
        y.set(0, 0, 1.0);
        y.set(0, 1, 0.6);
        // forwarder claims both levels toward both users
        for e in [1, 2] {
            y.set(e, 0, 1.0);
            y.set(e, 1, 1.0);
        }
        let out = reconstruct(&s, &x, &y).unwrap();
        // floor drops the fractional level 2; forwarder carries level 1 only
        assert_eq!(out.x.row(1), &[1.0, 0.0]);
        for e in [1, 2] {
            assert_eq!(out.y.row(e), &[1.0, 0.0]);
        }
        // both users settle on level 1
        assert_eq!(out.x.row(2), &[1.0, 0.0]);
        assert_eq!(out.x.row(3), &[1.0, 0.0]);
        assert!(out.unserved_users.is_empty());
        let rep = milp::check(&s, &out.x, &out.y, true).unwrap();
        assert!(rep.is_empty(), "{:?}", rep.entries);
    }

    #[test]
    fn integral_feasible_input_passes_through() {
        let s = fork_scenario();
        let x = SelectionState::zeros(4, 2);
        let mut y = TransmissionState::zeros(3, 2);
        for e in 0..3 {
            y.set(e, 1, 1.0);
        }
        let out = reconstruct(&s, &x, &y).unwrap();
        assert_eq!(out.y.as_slice(), y.as_slice());
        assert_eq!(out.x.row(2), &[0.0, 1.0]);
        assert!(out.unserved_users.is_empty());
    }

    #[test]
    fn zero_transmissions_strand_every_user() {
        let s = fork_scenario();
        let out = reconstruct(
            &s,
            &SelectionState::zeros(4, 2),
            &TransmissionState::zeros(3, 2),
        )
        .unwrap();
        assert_eq!(out.unserved_users, vec![2, 3]);
        assert_eq!(out.x.row(2), &[0.0, 0.0]);
        assert_eq!(out.x.row(3), &[0.0, 0.0]);
        // the only violations are exactly-one for the stranded users
        let rep = milp::check(&s, &out.x, &out.y, true).unwrap();
        assert_eq!(rep.count(milp::Family::One), 2);
        assert_eq!(rep.count_excluding(milp::Family::One), 0);
    }

    #[test]
    fn processing_respects_depth_order() {
        let s = gen::random_dag(3, 4, 3);
        let out = reconstruct(
            &s,
            &SelectionState::zeros(s.graph.node_count(), 3),
            &TransmissionState::zeros(s.graph.edge_count(), 3),
        )
        .unwrap();
        let depths = s.graph.compute_depths().unwrap();
        let pos: std::collections::BTreeMap<u32, usize> = out
            .processing_order
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, i))
            .collect();
        for e in 0..s.graph.edge_count() {
            let (i, j) = s.graph.endpoints(e);
            assert!(
                pos[&s.graph.id(i)] < pos[&s.graph.id(j)],
                "upstream not final before downstream"
            );
        }
        // depth ties resolved by ascending id
        for w in out.processing_order.windows(2) {
            let (a, b) = (s.graph.idx_of(w[0]).unwrap(), s.graph.idx_of(w[1]).unwrap());
            if depths[a] == depths[b] {
                assert!(w[0] < w[1]);
            }
        }
    }

    #[test]
    fn deterministic_for_identical_inputs() {
        let s = gen::random_dag(8, 5, 4);
        let n = s.graph.node_count();
        let m = s.graph.edge_count();
        let x = SelectionState::zeros(n, 4);
        let mut y = TransmissionState::zeros(m, 4);
        for e in 0..m {
            for l in 0..4 {
                y.set(e, l, ((e * 7 + l * 3) % 10) as f64 / 10.0);
            }
        }
        let a = reconstruct(&s, &x, &y).unwrap();
        let b = reconstruct(&s, &x, &y).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
        assert_eq!(a.unserved_users, b.unserved_users);
    }
}
