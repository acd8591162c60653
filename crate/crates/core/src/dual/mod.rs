//! Dual-decomposition solver for the continuous relaxation.
//!
//! The coupling constraints (upstream supply and carried-before-transmitted)
//! are priced by multipliers `lambda1[node, level]` (non-server nodes) and
//! `lambda2[forwarder edge, level]`. At each iteration every node solves its
//! closed-form subproblem against the current prices, then the prices take a
//! projected subgradient step with a diminishing `1/t` schedule.
//!
//! Price movement follows the usual economics: when a node selects a level
//! nothing delivers (`x > sum y`), its `lambda1` rises, which makes upstream
//! edges value that level more and the node itself value it less; when an
//! edge transmits a level its source does not carry (`y > x`), `lambda2`
//! rises, pushing the forwarder to carry it and the edge to drop it.

pub mod message;
pub mod subproblems;

use crate::exec;
use crate::milp;
use crate::scenario::Scenario;
use crate::state::{SelectionState, TransmissionState};
use crate::NodeRole;
use message::MultiplierMessage;
use serde::Serialize;
use std::time::Instant;
use thiserror::Error;

/// Non-negative price vectors. `lambda1` is dense over all nodes (server
/// rows stay zero and unused); `lambda2` is dense over all edges (rows of
/// server-sourced edges stay zero and unused).
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    levels: usize,
}

impl DualState {
    pub fn zeros(scenario: &Scenario) -> Self {
        let levels = scenario.levels();
        Self {
            lambda1: vec![0.0; scenario.graph.node_count() * levels],
            lambda2: vec![0.0; scenario.graph.edge_count() * levels],
            levels,
        }
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn lambda1_row(&self, node: usize) -> &[f64] {
        &self.lambda1[node * self.levels..(node + 1) * self.levels]
    }

    pub fn lambda2_row(&self, edge: usize) -> &[f64] {
        &self.lambda2[edge * self.levels..(edge + 1) * self.levels]
    }
}

/// Diminishing step sizes `alpha0/t` and `beta0/t`; square-summable but not
/// summable, as the convergence argument requires.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepSchedule {
    pub alpha0: f64,
    pub beta0: f64,
}

impl Default for StepSchedule {
    fn default() -> Self {
        Self {
            alpha0: 1.0,
            beta0: 1.0,
        }
    }
}

impl StepSchedule {
    pub fn alpha(&self, t: usize) -> f64 {
        self.alpha0 / t as f64
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.beta0 / t as f64
    }
}

/// How multiplier values travel between subproblem solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerMode {
    /// All subproblems read the shared price state directly.
    Centralized,
    /// Each price row is encoded to its owner's wire message and decoded by
    /// the neighbors before the next solve — one synchronous round per
    /// iteration. The codec is lossless, so traces match centralized mode
    /// bit for bit.
    Distributed,
}

impl std::str::FromStr for OptimizerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "centralized" => Ok(Self::Centralized),
            "distributed" => Ok(Self::Distributed),
            other => Err(format!("unknown mode `{other}` (centralized|distributed)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub schedule: StepSchedule,
    pub t_max: usize,
    pub eps: f64,
    pub mode: OptimizerMode,
    /// Keep every iteration's `(x, y)` in the trace (memory-heavy; used by
    /// verification suites).
    pub keep_iterates: bool,
    /// Start from a previous run's prices instead of zero.
    pub warm_start: Option<DualState>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schedule: StepSchedule::default(),
            t_max: 500,
            eps: 1e-4,
            mode: OptimizerMode::Centralized,
            keep_iterates: false,
            warm_start: None,
        }
    }
}

/// One iteration record.
#[derive(Debug, Clone, Serialize)]
pub struct IterRow {
    pub t: usize,
    pub dual_value: f64,
    pub sup_norm_change: f64,
    pub wall_ms: f64,
}

/// Scalar per-iteration trace plus (optionally) the full iterates.
#[derive(Debug, Clone, Default)]
pub struct IterationTrace {
    pub rows: Vec<IterRow>,
    pub iterates: Option<Vec<(SelectionState, TransmissionState)>>,
}

impl IterationTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,dual_value,sup_norm_change,wall_ms\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.12},{:.12},{:.3}\n",
                r.t, r.dual_value, r.sup_norm_change, r.wall_ms
            ));
        }
        out
    }

    /// Best (lowest) dual value seen up to each iteration.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.rows
            .iter()
            .map(|r| {
                best = best.min(r.dual_value);
                best
            })
            .collect()
    }
}

/// Whether the subproblem maximizers at the final prices were unique, per
/// the closed-form tie conditions. `x`/`y` integrality is reported alongside
/// since optimality of the final iterate for the integer program additionally
/// needs integral values.
#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    /// No user argmax tie, no forwarder net price at exactly zero (unless
    /// structurally inactive), no density tie among positive-value knapsack
    /// items.
    pub unique: bool,
    pub x_integral: bool,
    pub y_integral: bool,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub trace: IterationTrace,
    pub x: SelectionState,
    pub y: TransmissionState,
    pub dual: DualState,
    pub uniqueness: UniquenessReport,
    /// Multiplier bytes exchanged per iteration in distributed mode.
    pub message_bytes_per_iteration: usize,
}

#[derive(Debug, Error)]
pub enum DualError {
    #[error("scenario invalid:\n{0}")]
    InvalidScenario(crate::scenario::ValidationReport),
    #[error(transparent)]
    Subproblem(#[from] subproblems::SubproblemError),
    #[error(transparent)]
    Message(#[from] message::MessageError),
    #[error("dual decomposition mismatch: groups {groups}, lagrangian {lagrangian}")]
    DecompositionMismatch { groups: f64, lagrangian: f64 },
    #[error(transparent)]
    Milp(#[from] milp::MilpError),
}

/// Solve every subproblem at the given prices. Server selection rows are
/// fixed to one. Independent per node/edge, so the map is parallel under the
/// `parallel` feature.
pub fn solve_all_subproblems(
    scenario: &Scenario,
    dual: &DualState,
) -> Result<(SelectionState, TransmissionState), DualError> {
    let g = &scenario.graph;
    let levels = scenario.levels();
    let bw = scenario.catalog.bandwidths();
    let q = scenario.catalog.qualities();

    let x_rows = exec::map_range(g.node_count(), |nidx| -> Result<Vec<f64>, DualError> {
        match g.role(nidx) {
            NodeRole::Server => Ok(vec![1.0; levels]),
            NodeRole::User => {
                let p = scenario.profile_of_node(nidx).expect("validated scenario");
                Ok(subproblems::solve_user(
                    p.weight,
                    &q,
                    dual.lambda1_row(nidx),
                    &p.supported_levels,
                )?)
            }
            NodeRole::Forwarder => {
                let out_rows: Vec<&[f64]> = g
                    .outgoing(nidx)
                    .iter()
                    .map(|&e| dual.lambda2_row(e))
                    .collect();
                Ok(subproblems::solve_forwarder_selection(
                    dual.lambda1_row(nidx),
                    &out_rows,
                ))
            }
        }
    });
    let y_rows = exec::map_range(g.edge_count(), |eidx| -> Result<Vec<f64>, DualError> {
        let (from, to) = g.endpoints(eidx);
        let cap = g.capacity(eidx);
        match g.role(from) {
            NodeRole::Server => Ok(subproblems::solve_server_edge(
                dual.lambda1_row(to),
                &bw,
                cap,
            )?),
            NodeRole::Forwarder => Ok(subproblems::solve_forwarder_edge(
                dual.lambda1_row(to),
                dual.lambda2_row(eidx),
                &bw,
                cap,
            )?),
            NodeRole::User => unreachable!("validated scenarios have no user-sourced edges"),
        }
    });

    let mut x = SelectionState::zeros(g.node_count(), levels);
    for (nidx, row) in x_rows.into_iter().enumerate() {
        x.row_mut(nidx).copy_from_slice(&row?);
    }
    let mut y = TransmissionState::zeros(g.edge_count(), levels);
    for (eidx, row) in y_rows.into_iter().enumerate() {
        y.row_mut(eidx).copy_from_slice(&row?);
    }
    Ok((x, y))
}

/// Subgradients of the dual function at the current maximizers:
/// `d lambda1[i,l] = sum_j y[j,i,l] - x[i,l]` for non-server `i`, and
/// `d lambda2[(f,k),l] = x[f,l] - y[f,k,l]` for forwarder-sourced edges.
pub fn subgradients(
    scenario: &Scenario,
    x: &SelectionState,
    y: &TransmissionState,
) -> (Vec<f64>, Vec<f64>) {
    let g = &scenario.graph;
    let levels = scenario.levels();
    let mut g1 = vec![0.0; g.node_count() * levels];
    let mut g2 = vec![0.0; g.edge_count() * levels];
    for nidx in g.node_indices() {
        if g.role(nidx) == NodeRole::Server {
            continue;
        }
        for l in 0..levels {
            let supplied: f64 = g.incoming(nidx).iter().map(|&e| y.get(e, l)).sum();
            g1[nidx * levels + l] = supplied - x.get(nidx, l);
        }
    }
    for eidx in 0..g.edge_count() {
        let (from, _) = g.endpoints(eidx);
        if g.role(from) != NodeRole::Forwarder {
            continue;
        }
        for l in 0..levels {
            g2[eidx * levels + l] = x.get(from, l) - y.get(eidx, l);
        }
    }
    (g1, g2)
}

/// Projected subgradient step: `lambda <- max(0, lambda - step * grad)`.
pub fn update_multipliers(
    dual: &mut DualState,
    grad1: &[f64],
    grad2: &[f64],
    alpha: f64,
    beta: f64,
) {
    for (l, g) in dual.lambda1.iter_mut().zip(grad1) {
        *l = (*l - alpha * g).max(0.0);
    }
    for (l, g) in dual.lambda2.iter_mut().zip(grad2) {
        *l = (*l - beta * g).max(0.0);
    }
}

/// Dual value at the given prices and subproblem maximizers, computed two
/// ways: as the sum of the four separable groups, and as the Lagrangian
/// evaluated directly. The two must agree; a mismatch is an internal error.
pub fn dual_value(
    scenario: &Scenario,
    dual: &DualState,
    x: &SelectionState,
    y: &TransmissionState,
) -> Result<f64, DualError> {
    let g = &scenario.graph;
    let levels = scenario.levels();
    let q = scenario.catalog.qualities();

    let mut groups = 0.0;
    // server-edge group: sum lambda1[to] * y
    for eidx in 0..g.edge_count() {
        let (from, to) = g.endpoints(eidx);
        if g.role(from) != NodeRole::Server {
            continue;
        }
        for l in 0..levels {
            groups += dual.lambda1_row(to)[l] * y.get(eidx, l);
        }
    }
    // user group: sum (w Q - lambda1) x
    for nidx in g.nodes_with_role(NodeRole::User) {
        let p = scenario.profile_of_node(nidx).expect("validated scenario");
        for l in 0..levels {
            groups += (p.weight * q[l] - dual.lambda1_row(nidx)[l]) * x.get(nidx, l);
        }
    }
    // forwarder selection group: sum (sum lambda2 - lambda1) x
    for nidx in g.nodes_with_role(NodeRole::Forwarder) {
        for l in 0..levels {
            let out_price: f64 = g
                .outgoing(nidx)
                .iter()
                .map(|&e| dual.lambda2_row(e)[l])
                .sum();
            groups += (out_price - dual.lambda1_row(nidx)[l]) * x.get(nidx, l);
        }
    }
    // forwarder-edge group: sum (lambda1[to] - lambda2) * y
    for eidx in 0..g.edge_count() {
        let (from, to) = g.endpoints(eidx);
        if g.role(from) != NodeRole::Forwarder {
            continue;
        }
        for l in 0..levels {
            groups += (dual.lambda1_row(to)[l] - dual.lambda2_row(eidx)[l]) * y.get(eidx, l);
        }
    }

    // direct Lagrangian: Z + lambda1 . (supply - x) + lambda2 . (x - y)
    let mut lagrangian = milp::objective(scenario, x)?;
    for nidx in g.node_indices() {
        if g.role(nidx) == NodeRole::Server {
            continue;
        }
        for l in 0..levels {
            let supplied: f64 = g.incoming(nidx).iter().map(|&e| y.get(e, l)).sum();
            lagrangian += dual.lambda1_row(nidx)[l] * (supplied - x.get(nidx, l));
        }
    }
    for eidx in 0..g.edge_count() {
        let (from, _) = g.endpoints(eidx);
        if g.role(from) != NodeRole::Forwarder {
            continue;
        }
        for l in 0..levels {
            lagrangian += dual.lambda2_row(eidx)[l] * (x.get(from, l) - y.get(eidx, l));
        }
    }

    let tol = 1e-9f64.max(lagrangian.abs() * 1e-12);
    if (groups - lagrangian).abs() > tol {
        return Err(DualError::DecompositionMismatch { groups, lagrangian });
    }
    Ok(groups)
}

/// Route every price row through its owner's wire message and decode it
/// back, as the per-iteration exchange does in deployment. Returns the
/// reassembled state and total bytes moved.
fn exchange_via_messages(
    scenario: &Scenario,
    dual: &DualState,
    iteration: u32,
) -> Result<(DualState, usize), DualError> {
    let g = &scenario.graph;
    let levels = scenario.levels();
    let mut next = DualState::zeros(scenario);
    let mut bytes = 0usize;
    for nidx in g.node_indices() {
        if g.role(nidx) == NodeRole::Server {
            continue;
        }
        let msg = MultiplierMessage::new(g.id(nidx), iteration, dual.lambda1_row(nidx).to_vec());
        let encoded = msg.encode();
        bytes += encoded.len();
        let decoded = MultiplierMessage::decode_expecting(&encoded, levels)?;
        next.lambda1[nidx * levels..(nidx + 1) * levels].copy_from_slice(&decoded.values);
    }
    for eidx in 0..g.edge_count() {
        let (from, _) = g.endpoints(eidx);
        if g.role(from) != NodeRole::Forwarder {
            continue;
        }
        let msg = MultiplierMessage::new(g.id(from), iteration, dual.lambda2_row(eidx).to_vec());
        let encoded = msg.encode();
        bytes += encoded.len();
        let decoded = MultiplierMessage::decode_expecting(&encoded, levels)?;
        next.lambda2[eidx * levels..(eidx + 1) * levels].copy_from_slice(&decoded.values);
    }
    Ok((next, bytes))
}

fn uniqueness_at(
    scenario: &Scenario,
    dual: &DualState,
    x: &SelectionState,
    y: &TransmissionState,
) -> UniquenessReport {
    let g = &scenario.graph;
    let levels = scenario.levels();
    let q = scenario.catalog.qualities();
    let bw = scenario.catalog.bandwidths();
    let mut unique = true;

    for nidx in g.nodes_with_role(NodeRole::User) {
        let p = scenario.profile_of_node(nidx).expect("validated scenario");
        let scores: Vec<f64> = p
            .supported_levels
            .iter()
            .map(|&l| p.weight * q[l - 1] - dual.lambda1_row(nidx)[l - 1])
            .collect();
        let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if scores.iter().filter(|s| **s == best).count() > 1 {
            unique = false;
        }
    }
    for nidx in g.nodes_with_role(NodeRole::Forwarder) {
        for l in 0..levels {
            let out_price: f64 = g
                .outgoing(nidx)
                .iter()
                .map(|&e| dual.lambda2_row(e)[l])
                .sum();
            let l1 = dual.lambda1_row(nidx)[l];
            // a zero net price from cancellation means two maximizers; a
            // structurally inactive level (both prices zero) is fixed at 0
            if out_price - l1 == 0.0 && (out_price != 0.0 || l1 != 0.0) {
                unique = false;
            }
        }
    }
    for eidx in 0..g.edge_count() {
        let (from, to) = g.endpoints(eidx);
        let values: Vec<f64> = match g.role(from) {
            NodeRole::Server => dual.lambda1_row(to).to_vec(),
            NodeRole::Forwarder => dual
                .lambda1_row(to)
                .iter()
                .zip(dual.lambda2_row(eidx))
                .map(|(a, b)| a - b)
                .collect(),
            NodeRole::User => continue,
        };
        let mut densities: Vec<f64> = values
            .iter()
            .zip(&bw)
            .filter(|(v, _)| **v > 0.0)
            .map(|(v, b)| v / b)
            .collect();
        densities.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        if densities.windows(2).any(|w| w[0] == w[1]) {
            unique = false;
        }
    }

    UniquenessReport {
        unique,
        x_integral: x.is_integral(milp::TOLERANCE),
        y_integral: y.is_integral(milp::TOLERANCE),
    }
}

/// Run the full iteration loop: solve all subproblems, take a projected
/// subgradient step, stop when the sup-norm multiplier change drops below
/// `eps` or `t_max` is reached. Prices start at zero unless warm-started.
pub fn run(scenario: &Scenario, config: &RunConfig) -> Result<RunResult, DualError> {
    let report = scenario.validate();
    if !report.is_empty() {
        return Err(DualError::InvalidScenario(report));
    }
    let mut dual = config
        .warm_start
        .clone()
        .unwrap_or_else(|| DualState::zeros(scenario));
    let mut trace = IterationTrace {
        rows: Vec::new(),
        iterates: config.keep_iterates.then(Vec::new),
    };
    let mut message_bytes = 0usize;
    let mut x = SelectionState::zeros(scenario.graph.node_count(), scenario.levels());
    let mut y = TransmissionState::zeros(scenario.graph.edge_count(), scenario.levels());

    for t in 1..=config.t_max.max(1) {
        let started = Instant::now();
        let view = match config.mode {
            OptimizerMode::Centralized => dual.clone(),
            OptimizerMode::Distributed => {
                let (view, bytes) = exchange_via_messages(scenario, &dual, t as u32)?;
                message_bytes = bytes;
                view
            }
        };
        let (xt, yt) = solve_all_subproblems(scenario, &view)?;
        let g = dual_value(scenario, &view, &xt, &yt)?;
        let (g1, g2) = subgradients(scenario, &xt, &yt);
        let before = dual.clone();
        update_multipliers(
            &mut dual,
            &g1,
            &g2,
            config.schedule.alpha(t),
            config.schedule.beta(t),
        );
        let change = before
            .lambda1
            .iter()
            .zip(&dual.lambda1)
            .chain(before.lambda2.iter().zip(&dual.lambda2))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);

        trace.rows.push(IterRow {
            t,
            dual_value: g,
            sup_norm_change: change,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });
        if let Some(iterates) = trace.iterates.as_mut() {
            iterates.push((xt.clone(), yt.clone()));
        }
        x = xt;
        y = yt;
        if change < config.eps {
            break;
        }
    }

    let uniqueness = uniqueness_at(scenario, &dual, &x, &y);
    Ok(RunResult {
        trace,
        x,
        y,
        dual,
        uniqueness,
        message_bytes_per_iteration: message_bytes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;

    #[test]
    fn subgradients_match_coupling_residuals() {
        let s = gen::chain_scenario(3, 100.0);
        let levels = s.levels();
        let mut x = SelectionState::zeros(3, levels);
        let mut y = TransmissionState::zeros(2, levels);
        // balanced: x = supply everywhere -> all-zero subgradients
        x.set(1, 0, 1.0);
        x.set(2, 0, 1.0);
        y.set(0, 0, 1.0);
        y.set(1, 0, 1.0);
        let (g1, g2) = subgradients(&s, &x, &y);
        assert!(g1.iter().all(|v| *v == 0.0));
        assert!(g2.iter().all(|v| *v == 0.0));

        // forwarder edge transmits a level the forwarder does not carry:
        // lambda2 must rise, so its subgradient goes negative
        let mut y2 = TransmissionState::zeros(2, levels);
        y2.set(1, 2, 1.0);
        let (_, g2) = subgradients(&s, &SelectionState::zeros(3, levels), &y2);
        assert_eq!(g2[1 * levels + 2], -1.0);

        // user selects with no supply: lambda1 subgradient is -1
        let mut x3 = SelectionState::zeros(3, levels);
        x3.set(2, 1, 1.0);
        let (g1, _) = subgradients(&s, &x3, &TransmissionState::zeros(2, levels));
        assert_eq!(g1[2 * levels + 1], -1.0);
    }

    #[test]
    fn update_projects_to_nonnegative() {
        let s = gen::chain_scenario(3, 100.0);
        let mut dual = DualState::zeros(&s);
        let n = dual.lambda1.len();
        let m = dual.lambda2.len();
        dual.lambda1[0] = 2.0;
        dual.lambda1[1] = 0.1;
        let mut grad1 = vec![0.0; n];
        grad1[0] = 3.0;
        grad1[1] = 1.0;
        update_multipliers(&mut dual, &grad1, &vec![0.0; m], 0.5, 0.5);
        assert!((dual.lambda1[0] - 0.5).abs() < 1e-15);
        assert_eq!(dual.lambda1[1], 0.0); // projection active
        // zero gradient is a fixed point
        let snapshot = dual.clone();
        update_multipliers(&mut dual, &vec![0.0; n], &vec![0.0; m], 0.9, 0.9);
        assert_eq!(dual, snapshot);
    }

    #[test]
    fn dual_value_at_zero_prices_is_sum_of_best_levels() {
        let s = gen::star_scenario(3, 100.0);
        let dual = DualState::zeros(&s);
        let (x, y) = solve_all_subproblems(&s, &dual).unwrap();
        let g = dual_value(&s, &dual, &x, &y).unwrap();
        let q = s.catalog.qualities();
        let expect: f64 = s
            .users
            .iter()
            .map(|u| {
                u.weight
                    * u.supported_levels
                        .iter()
                        .map(|&l| q[l - 1])
                        .fold(f64::NEG_INFINITY, f64::max)
            })
            .sum();
        assert!((g - expect).abs() < 1e-12);
    }

    #[test]
    fn single_user_direct_edge_converges_to_top_level() {
        let s = gen::chain_scenario(2, 1000.0);
        let out = run(&s, &RunConfig::default()).unwrap();
        let unode = s.user_nodes()[0];
        assert_eq!(out.x.get(unode, s.levels() - 1), 1.0);
    }

    #[test]
    fn infinite_eps_stops_after_one_iteration() {
        let s = gen::chain_scenario(3, 100.0);
        let cfg = RunConfig {
            eps: f64::INFINITY,
            ..Default::default()
        };
        let out = run(&s, &cfg).unwrap();
        assert_eq!(out.trace.rows.len(), 1);
    }

    #[test]
    fn modes_produce_identical_traces() {
        let cfg_tree = gen::TreeGenConfig {
            seed: 11,
            users: 5,
            ..Default::default()
        };
        let s = gen::random_tree(&cfg_tree);
        let base = RunConfig {
            t_max: 120,
            keep_iterates: true,
            ..Default::default()
        };
        let central = run(&s, &base).unwrap();
        let distributed = run(
            &s,
            &RunConfig {
                mode: OptimizerMode::Distributed,
                ..base
            },
        )
        .unwrap();
        assert_eq!(central.trace.rows.len(), distributed.trace.rows.len());
        for (a, b) in central.trace.rows.iter().zip(&distributed.trace.rows) {
            assert_eq!(a.dual_value.to_bits(), b.dual_value.to_bits());
            assert_eq!(a.sup_norm_change.to_bits(), b.sup_norm_change.to_bits());
        }
        let (ci, di) = (
            central.trace.iterates.as_ref().unwrap(),
            distributed.trace.iterates.as_ref().unwrap(),
        );
        for ((xa, ya), (xb, yb)) in ci.iter().zip(di) {
            assert_eq!(xa, xb);
            assert_eq!(ya, yb);
        }
        assert!(distributed.message_bytes_per_iteration > 0);
    }

    #[test]
    fn multipliers_stay_nonnegative_along_the_run() {
        let s = gen::random_tree(&gen::TreeGenConfig {
            seed: 5,
            ..Default::default()
        });
        let out = run(
            &s,
            &RunConfig {
                t_max: 200,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(out.dual.lambda1.iter().all(|v| *v >= 0.0));
        assert!(out.dual.lambda2.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn step_schedule_is_square_summable_not_summable() {
        let sched = StepSchedule::default();
        // partial sums of alpha exceed any bound via the harmonic lower
        // bound sum(1/t) >= ln(n+1)
        let target = 10.0f64;
        let n = (target.exp() as usize) + 1;
        let lower = ((n + 1) as f64).ln() * sched.alpha0;
        assert!(lower > target);
        // sum of squares bounded by alpha0^2 * pi^2 / 6
        let bound = sched.alpha0 * sched.alpha0 * std::f64::consts::PI.powi(2) / 6.0;
        let partial: f64 = (1..10_000).map(|t| sched.alpha(t).powi(2)).sum();
        assert!(partial < bound);
    }
}
