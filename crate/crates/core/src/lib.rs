//! Coordinated multi-destination video rate adaptation toolkit.
//!
//! The crate has three layers:
//!
//! * an optimization core — the weighted-QoE selection program over a
//!   delivery DAG ([`milp`]), its dual-decomposition solver with closed-form
//!   per-node subproblems ([`dual`]), and the depth-ordered feasibility
//!   repair pass ([`reconstruct`]);
//! * brute-force reference solvers used to verify the core ([`oracle`]);
//! * a deterministic discrete-event simulator of the range-interest delivery
//!   protocol ([`sim`]) with QoE metric reporting ([`metrics`]).
//!
//! Problem instances are described by a [`scenario::Scenario`] (JSON on
//! disk); [`gen`] builds seeded synthetic ones for experiments.

pub mod catalog;
pub mod dual;
mod exec;
pub mod gen;
pub mod graph;
pub mod metrics;
pub mod milp;
pub mod oracle;
pub mod reconstruct;
pub mod scenario;
pub mod sim;
pub mod state;

pub use catalog::ResolutionCatalog;
pub use graph::{NetworkGraph, NodeRole};
pub use scenario::{Scenario, UserProfile};
pub use state::{SelectionState, TransmissionState};
