//! Deterministic discrete-event simulator of the range-interest delivery
//! protocol.
//!
//! Clients announce capability ranges on a fixed cadence; forwarders
//! aggregate them, re-run the optimizer, steer clients via recommendation
//! NACKs, and move chunks through PIT-aggregated, cache-assisted links with
//! seeded loss. The event log and every report are pure functions of
//! `(scenario, seed, loss rate, mode)`.

mod client;
mod engine;
pub mod name;
mod pit;

pub use client::{AimdWindow, TimeoutAction};
pub use pit::{backpressure_recommendation, ContentStore, Pit, PitAction};

use crate::dual::OptimizerMode;
use crate::metrics::{ClientTrace, MetricsReport};
use crate::scenario::Scenario;
use serde::Serialize;
use thiserror::Error;

/// Simulation drive parameters; everything else comes from `scenario.sim`.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub seed: u64,
    pub loss_rate: f64,
    pub mode: OptimizerMode,
    /// Override `scenario.sim.duration_s` when set.
    pub duration_s: Option<f64>,
}

impl SimConfig {
    pub fn from_scenario(scenario: &Scenario) -> Self {
        Self {
            seed: scenario.sim.seed,
            loss_rate: scenario.sim.loss_rate,
            mode: OptimizerMode::Centralized,
            duration_s: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario invalid:\n{0}")]
    InvalidScenario(crate::scenario::ValidationReport),
    #[error("duration must be > 0")]
    BadDuration,
    #[error(transparent)]
    Dual(#[from] crate::dual::DualError),
    #[error(transparent)]
    Reconstruct(#[from] crate::reconstruct::ReconstructError),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
}

/// What happened, where, and how big it was.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    SendRangeInterest,
    RecvRangeInterest,
    SendInterest,
    RecvInterest,
    AggregateInterest,
    CacheHit,
    SendData,
    RecvData,
    SendNack,
    RecvNack,
    Drop,
    Timeout,
    Retransmit,
    AbandonChunk,
    Assign,
    SendReport,
    SendConfig,
    StateExchange,
    Prefetch,
    PlaybackStart,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::SendRangeInterest => "send_range_interest",
            EventKind::RecvRangeInterest => "recv_range_interest",
            EventKind::SendInterest => "send_interest",
            EventKind::RecvInterest => "recv_interest",
            EventKind::AggregateInterest => "aggregate_interest",
            EventKind::CacheHit => "cache_hit",
            EventKind::SendData => "send_data",
            EventKind::RecvData => "recv_data",
            EventKind::SendNack => "send_nack",
            EventKind::RecvNack => "recv_nack",
            EventKind::Drop => "drop",
            EventKind::Timeout => "timeout",
            EventKind::Retransmit => "retransmit",
            EventKind::AbandonChunk => "abandon_chunk",
            EventKind::Assign => "assign",
            EventKind::SendReport => "send_report",
            EventKind::SendConfig => "send_config",
            EventKind::StateExchange => "state_exchange",
            EventKind::Prefetch => "prefetch",
            EventKind::PlaybackStart => "playback_start",
        }
    }
}

/// One event-log row.
#[derive(Debug, Clone, Serialize)]
pub struct EventRecord {
    pub time_us: u64,
    /// External id of the node where the event happened.
    pub node: u32,
    pub kind: EventKind,
    pub name: String,
    pub size_bytes: u64,
}

/// Render the event log as CSV: `time_s,node,event,name,size_bytes`.
pub fn events_to_csv(events: &[EventRecord]) -> String {
    let mut out = String::from("time_s,node,event,name,size_bytes\n");
    for e in events {
        out.push_str(&format!(
            "{}.{:06},{},{},{},{}\n",
            e.time_us / 1_000_000,
            e.time_us % 1_000_000,
            e.node,
            e.kind.as_str(),
            e.name,
            e.size_bytes
        ));
    }
    out
}

/// Complete simulation output.
#[derive(Debug)]
pub struct SimOutput {
    pub events: Vec<EventRecord>,
    pub report: MetricsReport,
    pub client_traces: Vec<ClientTrace>,
    /// Users the final assignment could not serve.
    pub unserved: usize,
    /// The event queue drained before the hard time cap (no livelock).
    pub completed: bool,
    /// Every client either received all chunks or is flagged downgraded.
    pub all_clients_resolved: bool,
}

pub fn run_simulation(scenario: &Scenario, config: &SimConfig) -> Result<SimOutput, SimError> {
    engine::Engine::new(scenario, config)?.run()
}
