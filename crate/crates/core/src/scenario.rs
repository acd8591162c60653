//! Problem instances: topology + resolution ladder + user profiles +
//! simulation parameters, with strict JSON (de)serialization and validation.

use crate::catalog::ResolutionCatalog;
use crate::graph::{EdgeDecl, NetworkGraph, NodeDecl, NodeRole};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

/// Per-user streaming profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserProfile {
    pub id: u32,
    /// Supported resolution levels, 1-based into the catalog.
    pub supported_levels: Vec<usize>,
    /// Priority weight, > 0.
    pub weight: f64,
}

/// Client window control parameters (additive increase, multiplicative
/// decrease).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AimdParams {
    pub initial_window: u32,
    pub min_window: u32,
    pub max_window: u32,
}

impl Default for AimdParams {
    fn default() -> Self {
        Self {
            initial_window: 4,
            min_window: 1,
            max_window: 64,
        }
    }
}

/// Optimizer knobs used when the simulator re-solves the assignment each
/// adaptation interval. Kept smaller than the batch defaults so control
/// traffic stays bounded.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimOptParams {
    pub t_max: usize,
    pub eps: f64,
    pub alpha0: f64,
    pub beta0: f64,
}

impl Default for SimOptParams {
    fn default() -> Self {
        Self {
            t_max: 40,
            eps: 1e-3,
            alpha0: 1.0,
            beta0: 1.0,
        }
    }
}

/// Simulation parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimParams {
    pub duration_s: f64,
    /// Adaptation interval `T`: clients re-announce capabilities and the
    /// network re-optimizes on this cadence.
    pub adaptation_interval_s: f64,
    pub chunk_duration_s: f64,
    pub loss_rate: f64,
    pub seed: u64,
    /// Content store capacity per forwarder, in entries.
    pub cache_capacity: usize,
    pub aimd: AimdParams,
    pub opt: SimOptParams,
    /// Title component used in content names.
    pub title: String,
    /// Pending-interest entry lifetime. Defaults to one adaptation interval.
    pub pit_lifetime_s: f64,
    /// Egress queue delay above which a forwarder emits a congestion NACK.
    pub backpressure_threshold_ms: f64,
    /// Retransmission timeout floor.
    pub rto_min_ms: f64,
    /// Buffered seconds required before playback starts.
    pub startup_threshold_s: f64,
    /// Forwarders pre-fetch the recommended next chunk for their clients.
    pub prefetch: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            duration_s: 30.0,
            adaptation_interval_s: 4.0,
            chunk_duration_s: 2.0,
            loss_rate: 0.0,
            seed: 1,
            cache_capacity: 256,
            aimd: AimdParams::default(),
            opt: SimOptParams::default(),
            title: "video1".to_string(),
            pit_lifetime_s: 4.0,
            backpressure_threshold_ms: 50.0,
            rto_min_ms: 50.0,
            startup_threshold_s: 2.0,
            prefetch: true,
        }
    }
}

/// On-disk scenario document. Top-level keys: `catalog`, `nodes`, `edges`,
/// `users`, `sim`. Unknown keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub catalog: ResolutionCatalog,
    pub nodes: Vec<NodeDecl>,
    pub edges: Vec<EdgeDecl>,
    pub users: Vec<UserProfile>,
    #[serde(default)]
    pub sim: SimParams,
}

/// A parsed and indexed problem instance. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub catalog: ResolutionCatalog,
    pub graph: NetworkGraph,
    pub users: Vec<UserProfile>,
    pub sim: SimParams,
    /// node idx -> position in `users`, for user nodes.
    user_of_node: BTreeMap<usize, usize>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("graph: {0}")]
    Graph(#[from] crate::graph::GraphError),
    #[error("invalid scenario:\n{0}")]
    Invalid(ValidationReport),
}

/// One invariant violation, with enough coordinates to locate it.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Violation {
    pub rule: String,
    pub detail: String,
}

/// Outcome of `Scenario::validate`: empty iff every invariant holds.
#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, rule: &str, detail: String) {
        self.violations.push(Violation {
            rule: rule.to_string(),
            detail,
        });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for v in &self.violations {
            writeln!(f, "{}: {}", v.rule, v.detail)?;
        }
        Ok(())
    }
}

impl Scenario {
    /// Build from the on-disk representation without validating invariants.
    /// Only structural errors (bad references, duplicates) are rejected here.
    pub fn from_file_struct(file: ScenarioFile) -> Result<Self, ScenarioError> {
        let graph = NetworkGraph::new(&file.nodes, file.edges)?;
        let mut user_of_node = BTreeMap::new();
        for (uidx, u) in file.users.iter().enumerate() {
            if let Some(nidx) = graph.idx_of(u.id) {
                user_of_node.entry(nidx).or_insert(uidx);
            }
        }
        Ok(Self {
            catalog: file.catalog,
            graph,
            users: file.users,
            sim: file.sim,
            user_of_node,
        })
    }

    pub fn from_json(json: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(json)?;
        Self::from_file_struct(file)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let raw = std::fs::read_to_string(path)?;
        Self::from_json(&raw)
    }

    /// Load and validate; refuses scenarios with any invariant violation.
    pub fn load_valid(path: &Path) -> Result<Self, ScenarioError> {
        let s = Self::load(path)?;
        let report = s.validate();
        if report.is_empty() {
            Ok(s)
        } else {
            Err(ScenarioError::Invalid(report))
        }
    }

    pub fn to_file_struct(&self) -> ScenarioFile {
        ScenarioFile {
            catalog: self.catalog.clone(),
            nodes: self
                .graph
                .node_indices()
                .map(|i| NodeDecl {
                    id: self.graph.id(i),
                    role: self.graph.role(i),
                })
                .collect(),
            edges: (0..self.graph.edge_count())
                .map(|e| self.graph.edge(e).clone())
                .collect(),
            users: self.users.clone(),
            sim: self.sim.clone(),
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_file_struct()).expect("scenario serializes")
    }

    pub fn levels(&self) -> usize {
        self.catalog.len()
    }

    /// The profile attached to a user node index, if any.
    pub fn profile_of_node(&self, nidx: usize) -> Option<&UserProfile> {
        self.user_of_node.get(&nidx).map(|&u| &self.users[u])
    }

    /// User node indexes in declaration order.
    pub fn user_nodes(&self) -> Vec<usize> {
        self.graph.nodes_with_role(NodeRole::User).collect()
    }

    /// Check every typed invariant; returns an empty report iff all hold.
    pub fn validate(&self) -> ValidationReport {
        let mut rep = ValidationReport::default();
        for v in self.catalog.invariant_violations() {
            rep.push("catalog", v);
        }
        let levels = self.catalog.len();

        // Edge orientation and capacity.
        for e in 0..self.graph.edge_count() {
            let (from, to) = self.graph.endpoints(e);
            let decl = self.graph.edge(e);
            if !(decl.capacity_mbps > 0.0) {
                rep.push(
                    "edge-capacity",
                    format!("edge {} -> {}: capacity must be > 0", decl.from, decl.to),
                );
            }
            if self.graph.role(from) == NodeRole::User {
                rep.push(
                    "user-outgoing-edge",
                    format!("user {} has outgoing edge to {}", decl.from, decl.to),
                );
            }
            if self.graph.role(to) == NodeRole::Server {
                rep.push(
                    "server-incoming-edge",
                    format!("server {} has incoming edge from {}", decl.to, decl.from),
                );
            }
        }

        // Acyclicity and reachability.
        match self.graph.compute_depths() {
            Err(_) => rep.push("acyclic", "graph not acyclic".to_string()),
            Ok(depths) => {
                for i in self.graph.node_indices() {
                    if depths[i].is_none() {
                        rep.push(
                            "reachable",
                            format!(
                                "node {} not reachable from any server",
                                self.graph.id(i)
                            ),
                        );
                    }
                }
            }
        }

        // User profiles: exactly one per user node, none dangling.
        let mut profile_count: BTreeMap<u32, usize> = BTreeMap::new();
        for u in &self.users {
            *profile_count.entry(u.id).or_insert(0) += 1;
        }
        for (id, count) in &profile_count {
            match self.graph.idx_of(*id) {
                None => rep.push("profile-node", format!("profile for unknown node {id}")),
                Some(nidx) if self.graph.role(nidx) != NodeRole::User => rep.push(
                    "profile-node",
                    format!("profile attached to non-user node {id}"),
                ),
                Some(_) if *count > 1 => {
                    rep.push("profile-unique", format!("node {id} has {count} profiles"))
                }
                Some(_) => {}
            }
        }
        for nidx in self.graph.nodes_with_role(NodeRole::User) {
            let id = self.graph.id(nidx);
            if !profile_count.contains_key(&id) {
                rep.push("profile-missing", format!("user {id} has no profile"));
            }
        }
        for u in &self.users {
            if u.supported_levels.is_empty() {
                rep.push("supported-levels", format!("user {}: empty level set", u.id));
            }
            if !(u.weight > 0.0) {
                rep.push("user-weight", format!("user {}: weight must be > 0", u.id));
            }
            for &l in &u.supported_levels {
                if l < 1 || l > levels {
                    rep.push(
                        "supported-levels",
                        format!("user {}: level {} outside 1..={}", u.id, l, levels),
                    );
                }
            }
        }

        if !(self.sim.duration_s > 0.0) {
            rep.push("sim-duration", "duration must be > 0".to_string());
        }
        if !(0.0..1.0).contains(&self.sim.loss_rate) {
            rep.push("sim-loss", format!("loss rate {} outside [0,1)", self.sim.loss_rate));
        }
        rep
    }
}
