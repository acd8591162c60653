//! Objective and constraint checking for the selection program.
//!
//! Seven constraint families tie `x` and `y` together:
//!
//! * `C-SRV`    — servers carry every level (`x[s,l] = 1`)
//! * `C-CAP-USR`— users only select supported levels (`x[u,l] = 0` outside)
//! * `C-ONE`    — each user selects exactly one level (`sum_l x[u,l] = 1`)
//! * `C-FWD-OUT`— an edge only transmits levels its source carries
//!                (`y[i,j,l] <= x[i,l]`)
//! * `C-FWD-IN` — a non-server node only carries levels delivered upstream
//!                (`x[i,l] <= sum_j y[j,i,l]`)
//! * `C-BW`     — per-edge bandwidth (`sum_l B_l y[i,j,l] <= C_ij`)
//! * `C-INT`    — integrality, when requested
//!
//! Residual conventions: `max(0, lhs - rhs)` for inequalities,
//! `|sum - 1|` for the exactly-one rule, `|value - required|` for the fixed
//! rules, and distance to the nearest integer for integrality. Violations
//! smaller than [`TOLERANCE`] are absorbed as rounding noise.

use crate::scenario::Scenario;
use crate::state::{SelectionState, TransmissionState};
use crate::NodeRole;
use serde::Serialize;
use thiserror::Error;

/// Absolute tolerance below which a residual counts as satisfied.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    #[serde(rename = "C-SRV")]
    Srv,
    #[serde(rename = "C-CAP-USR")]
    CapUsr,
    #[serde(rename = "C-ONE")]
    One,
    #[serde(rename = "C-FWD-OUT")]
    FwdOut,
    #[serde(rename = "C-FWD-IN")]
    FwdIn,
    #[serde(rename = "C-BW")]
    Bw,
    #[serde(rename = "C-INT")]
    Int,
}

pub const ALL_FAMILIES: [Family; 7] = [
    Family::Srv,
    Family::CapUsr,
    Family::One,
    Family::FwdOut,
    Family::FwdIn,
    Family::Bw,
    Family::Int,
];

/// One violated constraint instance.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualEntry {
    pub family: Family,
    /// External node id, when the constraint is per-node.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node: Option<u32>,
    /// External `(from, to)` ids, when the constraint is per-edge.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge: Option<(u32, u32)>,
    /// 1-based level, when the constraint is per-level.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    pub residual: f64,
}

/// All violations found by [`check`]; empty iff the point is feasible.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ConstraintReport {
    pub entries: Vec<ResidualEntry>,
}

impl ConstraintReport {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, family: Family) -> usize {
        self.entries.iter().filter(|e| e.family == family).count()
    }

    pub fn entries_of(&self, family: Family) -> impl Iterator<Item = &ResidualEntry> {
        self.entries.iter().filter(move |e| e.family == family)
    }

    /// Entries outside the given family.
    pub fn count_excluding(&self, family: Family) -> usize {
        self.entries.iter().filter(|e| e.family != family).count()
    }

    fn push(&mut self, entry: ResidualEntry) {
        if entry.residual > TOLERANCE {
            self.entries.push(entry);
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MilpError {
    #[error("state shape mismatch: {0}")]
    Shape(String),
    #[error("unknown edge {0} -> {1}")]
    UnknownEdge(u32, u32),
}

fn check_shapes(
    scenario: &Scenario,
    x: &SelectionState,
    y: &TransmissionState,
) -> Result<(), MilpError> {
    let l = scenario.levels();
    if x.levels() != l || x.nodes() != scenario.graph.node_count() {
        return Err(MilpError::Shape(format!(
            "x is {}x{}, expected {}x{}",
            x.nodes(),
            x.levels(),
            scenario.graph.node_count(),
            l
        )));
    }
    if y.levels() != l || y.edges() != scenario.graph.edge_count() {
        return Err(MilpError::Shape(format!(
            "y is {}x{}, expected {}x{}",
            y.edges(),
            y.levels(),
            scenario.graph.edge_count(),
            l
        )));
    }
    Ok(())
}

/// Weighted sum QoE: `Z = sum_u w_u sum_l Q_l x[u,l]`.
pub fn objective(scenario: &Scenario, x: &SelectionState) -> Result<f64, MilpError> {
    if x.levels() != scenario.levels() || x.nodes() != scenario.graph.node_count() {
        return Err(MilpError::Shape(format!(
            "x is {}x{}, expected {}x{}",
            x.nodes(),
            x.levels(),
            scenario.graph.node_count(),
            scenario.levels()
        )));
    }
    let q = scenario.catalog.qualities();
    let mut z = 0.0;
    for nidx in scenario.user_nodes() {
        let profile = scenario
            .profile_of_node(nidx)
            .ok_or_else(|| MilpError::Shape(format!("user node {} has no profile", scenario.graph.id(nidx))))?;
        let row = x.row(nidx);
        let mut inner = 0.0;
        for (l, &xv) in row.iter().enumerate() {
            inner += q[l] * xv;
        }
        z += profile.weight * inner;
    }
    Ok(z)
}

/// Bandwidth carried by one edge: `sum_l B_l y[edge,l]` in Mbps.
pub fn link_load(
    scenario: &Scenario,
    y: &TransmissionState,
    from: u32,
    to: u32,
) -> Result<f64, MilpError> {
    let eidx = (0..scenario.graph.edge_count())
        .find(|&e| {
            let d = scenario.graph.edge(e);
            d.from == from && d.to == to
        })
        .ok_or(MilpError::UnknownEdge(from, to))?;
    Ok(link_load_idx(scenario, y, eidx))
}

/// Same as [`link_load`] by internal edge index.
pub fn link_load_idx(scenario: &Scenario, y: &TransmissionState, eidx: usize) -> f64 {
    let b = scenario.catalog.bandwidths();
    y.row(eidx)
        .iter()
        .zip(b.iter())
        .map(|(yl, bl)| yl * bl)
        .sum()
}

/// Evaluate every constraint family and report residuals.
pub fn check(
    scenario: &Scenario,
    x: &SelectionState,
    y: &TransmissionState,
    integral: bool,
) -> Result<ConstraintReport, MilpError> {
    check_shapes(scenario, x, y)?;
    let graph = &scenario.graph;
    let levels = scenario.levels();
    let b = scenario.catalog.bandwidths();
    let mut rep = ConstraintReport::default();

    for nidx in graph.node_indices() {
        let id = graph.id(nidx);
        match graph.role(nidx) {
            NodeRole::Server => {
                for l in 0..levels {
                    rep.push(ResidualEntry {
                        family: Family::Srv,
                        node: Some(id),
                        edge: None,
                        level: Some(l + 1),
                        residual: (x.get(nidx, l) - 1.0).abs(),
                    });
                }
            }
            NodeRole::User => {
                let supported: &[usize] = scenario
                    .profile_of_node(nidx)
                    .map(|p| p.supported_levels.as_slice())
                    .unwrap_or(&[]);
                let mut sum = 0.0;
                for l in 0..levels {
                    let xv = x.get(nidx, l);
                    sum += xv;
                    if !supported.contains(&(l + 1)) {
                        rep.push(ResidualEntry {
                            family: Family::CapUsr,
                            node: Some(id),
                            edge: None,
                            level: Some(l + 1),
                            residual: xv.abs(),
                        });
                    }
                }
                rep.push(ResidualEntry {
                    family: Family::One,
                    node: Some(id),
                    edge: None,
                    level: None,
                    residual: (sum - 1.0).abs(),
                });
            }
            NodeRole::Forwarder => {}
        }

        // C-FWD-IN applies to every non-server node.
        if graph.role(nidx) != NodeRole::Server {
            for l in 0..levels {
                let supplied: f64 = graph
                    .incoming(nidx)
                    .iter()
                    .map(|&e| y.get(e, l))
                    .sum();
                rep.push(ResidualEntry {
                    family: Family::FwdIn,
                    node: Some(id),
                    edge: None,
                    level: Some(l + 1),
                    residual: (x.get(nidx, l) - supplied).max(0.0),
                });
            }
        }
    }

    for eidx in 0..graph.edge_count() {
        let decl = graph.edge(eidx);
        let (from, _) = graph.endpoints(eidx);
        let mut load = 0.0;
        for l in 0..levels {
            let yv = y.get(eidx, l);
            load += b[l] * yv;
            rep.push(ResidualEntry {
                family: Family::FwdOut,
                node: None,
                edge: Some((decl.from, decl.to)),
                level: Some(l + 1),
                residual: (yv - x.get(from, l)).max(0.0),
            });
        }
        rep.push(ResidualEntry {
            family: Family::Bw,
            node: None,
            edge: Some((decl.from, decl.to)),
            level: None,
            residual: (load - decl.capacity_mbps).max(0.0),
        });
    }

    if integral {
        for nidx in graph.node_indices() {
            for l in 0..levels {
                let v = x.get(nidx, l);
                rep.push(ResidualEntry {
                    family: Family::Int,
                    node: Some(graph.id(nidx)),
                    edge: None,
                    level: Some(l + 1),
                    residual: (v - v.round()).abs(),
                });
            }
        }
        for eidx in 0..graph.edge_count() {
            let decl = graph.edge(eidx);
            for l in 0..levels {
                let v = y.get(eidx, l);
                rep.push(ResidualEntry {
                    family: Family::Int,
                    node: None,
                    edge: Some((decl.from, decl.to)),
                    level: Some(l + 1),
                    residual: (v - v.round()).abs(),
                });
            }
        }
    }

    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;

    /// Hand-built feasible integral point on the S -> F -> U chain:
    /// everything at level 1, server carrying all levels.
    fn feasible_chain() -> (Scenario, SelectionState, TransmissionState) {
        let s = gen::chain_scenario(3, 100.0);
        let levels = s.levels();
        let mut x = SelectionState::zeros(3, levels);
        let mut y = TransmissionState::zeros(2, levels);
        for l in 0..levels {
            x.set(0, l, 1.0); // server row all ones
        }
        x.set(1, 0, 1.0);
        x.set(2, 0, 1.0);
        y.set(0, 0, 1.0);
        y.set(1, 0, 1.0);
        (s, x, y)
    }

    #[test]
    fn feasible_point_has_empty_report() {
        let (s, x, y) = feasible_chain();
        let rep = check(&s, &x, &y, true).unwrap();
        assert!(rep.is_empty(), "{:?}", rep.entries);
    }

    #[test]
    fn transmitting_unacquired_level_is_fwd_out() {
        let (s, x, mut y) = feasible_chain();
        // forwarder sends level 2 without carrying it
        y.set(1, 1, 1.0);
        let rep = check(&s, &x, &y, false).unwrap();
        assert_eq!(rep.count(Family::FwdOut), 1);
        let e = rep.entries_of(Family::FwdOut).next().unwrap();
        assert_eq!(e.residual, 1.0);
        assert_eq!(e.edge, Some((1, 2)));
        assert_eq!(e.level, Some(2));
    }

    #[test]
    fn bandwidth_residual_is_excess() {
        let (mut s, x, mut y) = feasible_chain();
        // shrink capacity so level-1 load of 1.5 exceeds it by 0.5
        {
            let mut f = s.to_file_struct();
            f.edges[1].capacity_mbps = 1.0;
            s = Scenario::from_file_struct(f).unwrap();
        }
        y.set(1, 0, 1.0);
        let rep = check(&s, &x, &y, false).unwrap();
        assert_eq!(rep.count(Family::Bw), 1);
        let e = rep.entries_of(Family::Bw).next().unwrap();
        assert!((e.residual - 0.5).abs() < 1e-12);
    }

    #[test]
    fn objective_zero_when_x_zero() {
        let s = gen::chain_scenario(3, 100.0);
        let x = SelectionState::zeros(3, s.levels());
        assert_eq!(objective(&s, &x).unwrap(), 0.0);
    }

    #[test]
    fn objective_two_users_hand_value() {
        // two users with weights 1 and 2 selecting levels 1 and 2 of a
        // ladder where R2/R1 = 2: Z = 1*1 + 2*(1 + ln 2)
        let mut f = gen::star_scenario(2, 100.0).to_file_struct();
        f.catalog.levels.truncate(2);
        f.catalog.levels[0].pixel_height = 480;
        f.catalog.levels[1].pixel_height = 960;
        for u in &mut f.users {
            u.supported_levels = vec![1, 2];
        }
        f.users[1].weight = 2.0;
        let s = Scenario::from_file_struct(f).unwrap();
        let u_nodes = s.user_nodes();
        let mut x = SelectionState::zeros(s.graph.node_count(), 2);
        x.set(u_nodes[0], 0, 1.0);
        x.set(u_nodes[1], 1, 1.0);
        let z = objective(&s, &x).unwrap();
        let expect = 1.0 + 2.0 * (1.0 + std::f64::consts::LN_2);
        assert!((z - expect).abs() < 1e-12);
        assert!((z - 4.386294).abs() < 1e-6);
    }

    #[test]
    fn objective_is_linear_in_weights() {
        let (s, x, _) = feasible_chain();
        let z1 = objective(&s, &x).unwrap();
        let mut f = s.to_file_struct();
        for u in &mut f.users {
            u.weight *= 2.0;
        }
        let s2 = Scenario::from_file_struct(f).unwrap();
        let z2 = objective(&s2, &x).unwrap();
        assert!((z2 - 2.0 * z1).abs() < 1e-12);
    }

    #[test]
    fn link_load_sums_bandwidths() {
        let mut f = gen::chain_scenario(3, 100.0).to_file_struct();
        f.catalog.levels.truncate(2);
        f.catalog.levels[0].bandwidth_mbps = 2.0;
        f.catalog.levels[1].bandwidth_mbps = 3.0;
        let s = Scenario::from_file_struct(f).unwrap();
        let mut y = TransmissionState::zeros(2, 2);
        assert_eq!(link_load(&s, &y, 0, 1).unwrap(), 0.0);
        y.set(0, 0, 1.0);
        y.set(0, 1, 0.5);
        assert!((link_load(&s, &y, 0, 1).unwrap() - 3.5).abs() < 1e-12);
        y.set(0, 1, 1.0);
        assert!((link_load(&s, &y, 0, 1).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(
            link_load(&s, &y, 5, 6).unwrap_err(),
            MilpError::UnknownEdge(5, 6)
        );
    }
}
