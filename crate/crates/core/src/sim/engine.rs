//! The event loop: links with serialized transmission and seeded loss,
//! forwarder PIT/cache handling, client transport, and the periodic
//! optimizer invocation that steers resolution assignments.
//!
//! Determinism: one ChaCha stream drawn in event order, a total event order
//! `(time, sequence)`, integer-microsecond time, and BTree-backed state
//! everywhere. No wall-clock value ever reaches an output.

use super::client::{on_timeout, AimdWindow, PlayoutBuffer, RttEstimator, TimeoutAction};
use super::name::Name;
use super::pit::{backpressure_recommendation, ContentStore, Face, Pit, PitAction};
use super::{EventKind, EventRecord, SimConfig, SimError, SimOutput};
use crate::dual::{self, message, OptimizerMode, RunConfig, StepSchedule};
use crate::metrics::{self, ClientTrace};
use crate::reconstruct;
use crate::scenario::{Scenario, UserProfile};
use crate::NodeRole;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::cmp::Reverse;
use std::collections::{BinaryHeap, BTreeMap, BTreeSet};

const INTEREST_BYTES: u64 = 100;
const NACK_BYTES: u64 = 150;
const DATA_HEADER_BYTES: u64 = 64;
const REPORT_FLUSH_MS: u64 = 20;
const CENTRAL_SOLVE_MS: u64 = 100;
const DISTRIBUTED_SOLVE_MS: u64 = 50;
const STATE_ROUND_MS: u64 = 2;
const FALLBACK_MS: u64 = 500;
const SAMPLE_MS: u64 = 500;
/// Retransmission timeout before any RTT sample exists.
const INITIAL_RTO_US: u64 = 2_000_000;

#[derive(Debug, Clone)]
enum PktKind {
    RangeInterest {
        client: u32,
        levels: Vec<usize>,
        weight: f64,
        next_seq: u64,
    },
    Interest {
        level: usize,
        chunk: u64,
    },
    Data {
        level: usize,
        chunk: u64,
        authentic: bool,
    },
    /// RECOMMEND_RESOLUTION: carries the recommended name's parts.
    NackRecommend {
        level: usize,
        chunk: u64,
        version: u64,
    },
    /// CONGESTION: optional lower-level recommendation.
    NackCongestion {
        recommended: Option<usize>,
        chunk: u64,
        level: usize,
    },
    Report {
        forwarder: u32,
        interval: u64,
        clients: Vec<(u32, Vec<usize>, f64, u64)>,
    },
    Config {
        version: u64,
        target: usize,
        route: Vec<usize>,
        assignments: Vec<(u32, usize)>,
    },
    State {
        owner: u32,
        var: &'static str,
        iteration: u32,
    },
}

#[derive(Debug, Clone)]
struct Packet {
    kind: PktKind,
    size: u64,
    lost: bool,
}

#[derive(Debug)]
enum Ev {
    Arrive { eidx: usize, down: bool, pkt: Packet },
    Kick { interval: u64 },
    FlushReports { interval: u64 },
    Solve { interval: u64 },
    SendState { eidx: usize, down: bool, owner: u32, var: &'static str, iteration: u32 },
    ApplyLocal { version: u64, assignments: Vec<(u32, usize)> },
    Fallback { client: usize },
    Timeout { client: usize, chunk: u64, stamp: u64 },
    Sample,
}

struct QEv {
    time: u64,
    seq: u64,
    ev: Ev,
}

impl PartialEq for QEv {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}
impl Eq for QEv {}
impl PartialOrd for QEv {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QEv {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

/// Learned capability of a client, as seen by access nodes and the optimizer.
#[derive(Debug, Clone)]
struct Cap {
    levels: Vec<usize>,
    weight: f64,
    access_node: usize,
    face_edge: usize,
    next_seq: u64,
}

/// Per-node protocol state (meaningful for forwarders and servers).
struct NodeSim {
    pit: Pit,
    cs: ContentStore,
    known: BTreeMap<u32, Cap>,
    assignments: BTreeMap<u32, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ChunkState {
    Unsent,
    Outstanding {
        retransmissions: u32,
        sent_at: u64,
        level: usize,
        stamp: u64,
    },
    Done,
    Abandoned,
}

struct Cl {
    node: usize,
    id: u32,
    profile: UserProfile,
    access_edge: usize,
    window: AimdWindow,
    rtt: RttEstimator,
    buffer: PlayoutBuffer,
    assigned: Option<usize>,
    level_cap: usize,
    downgrade_pending: bool,
    downgraded_flag: bool,
    started: bool,
    chunks: Vec<ChunkState>,
    next_chunk: u64,
    in_flight: u32,
    stamp_counter: u64,
    arrivals: Vec<(u64, usize)>,
    buffer_samples: Vec<f64>,
    range_seq: u64,
}

pub(super) struct Engine<'a> {
    s: &'a Scenario,
    cfg: SimConfig,
    levels: usize,
    chunk_bytes: Vec<u64>,
    level_names: Vec<String>,
    title: String,
    total_chunks: u64,
    duration_us: u64,
    interval_us: u64,
    pit_lifetime_us: u64,
    parent_edge: Vec<Option<usize>>,
    up_path: Vec<Vec<usize>>,
    heap: BinaryHeap<Reverse<QEv>>,
    seq: u64,
    now: u64,
    rng: ChaCha8Rng,
    /// busy-until per `(edge, direction)`; index 0 = down, 1 = up.
    links: Vec<[u64; 2]>,
    nodes: Vec<NodeSim>,
    clients: Vec<Cl>,
    client_of_node: Vec<Option<usize>>,
    optimizer_known: BTreeMap<u32, Cap>,
    events: Vec<EventRecord>,
    unserved_last: usize,
    version: u64,
}

impl<'a> Engine<'a> {
    pub(super) fn new(scenario: &'a Scenario, cfg: &SimConfig) -> Result<Self, SimError> {
        let report = scenario.validate();
        if !report.is_empty() {
            return Err(SimError::InvalidScenario(report));
        }
        let duration_s = cfg.duration_s.unwrap_or(scenario.sim.duration_s);
        if !(duration_s > 0.0) {
            return Err(SimError::BadDuration);
        }
        let g = &scenario.graph;
        let levels = scenario.levels();
        let chunk_s = scenario.sim.chunk_duration_s;
        let chunk_bytes = scenario
            .catalog
            .bandwidths()
            .iter()
            .map(|b| (b * chunk_s * 125_000.0).round() as u64)
            .collect();
        let level_names = (1..=levels).map(|l| scenario.catalog.level_name(l)).collect();

        // FIB: deterministic parent = incoming edge from the lowest-id
        // upstream neighbor; up_path chains parents to a server.
        let mut parent_edge = vec![None; g.node_count()];
        for n in g.node_indices() {
            parent_edge[n] = g
                .incoming(n)
                .iter()
                .copied()
                .min_by_key(|&e| g.id(g.endpoints(e).0));
        }
        let mut up_path = vec![Vec::new(); g.node_count()];
        for n in g.node_indices() {
            let mut path = Vec::new();
            let mut cur = n;
            while let Some(e) = parent_edge[cur] {
                path.push(e);
                cur = g.endpoints(e).0;
            }
            up_path[n] = path;
        }

        let mut clients = Vec::new();
        let mut client_of_node = vec![None; g.node_count()];
        for n in g.nodes_with_role(NodeRole::User) {
            let profile = scenario.profile_of_node(n).expect("validated").clone();
            let access_edge = parent_edge[n].expect("users are reachable");
            client_of_node[n] = Some(clients.len());
            let cap_level = *profile.supported_levels.iter().max().expect("nonempty");
            clients.push(Cl {
                node: n,
                id: profile.id,
                access_edge,
                window: AimdWindow::new(
                    scenario.sim.aimd.initial_window,
                    scenario.sim.aimd.min_window,
                    scenario.sim.aimd.max_window,
                ),
                rtt: RttEstimator::new((scenario.sim.rto_min_ms * 1e3) as u64),
                buffer: PlayoutBuffer::new(scenario.sim.startup_threshold_s),
                assigned: None,
                level_cap: cap_level,
                downgrade_pending: false,
                downgraded_flag: false,
                started: false,
                chunks: vec![ChunkState::Unsent; (duration_s / chunk_s).ceil() as usize],
                next_chunk: 0,
                in_flight: 0,
                stamp_counter: 0,
                arrivals: Vec::new(),
                buffer_samples: Vec::new(),
                range_seq: 0,
                profile,
            });
        }
        let nodes = g
            .node_indices()
            .map(|_| NodeSim {
                pit: Pit::default(),
                cs: ContentStore::new(scenario.sim.cache_capacity),
                known: BTreeMap::new(),
                assignments: BTreeMap::new(),
            })
            .collect();

        Ok(Self {
            s: scenario,
            cfg: cfg.clone(),
            levels,
            chunk_bytes,
            level_names,
            title: scenario.sim.title.clone(),
            total_chunks: (duration_s / chunk_s).ceil() as u64,
            duration_us: (duration_s * 1e6) as u64,
            interval_us: (scenario.sim.adaptation_interval_s * 1e6) as u64,
            pit_lifetime_us: (scenario.sim.pit_lifetime_s * 1e6) as u64,
            parent_edge,
            up_path,
            heap: BinaryHeap::new(),
            seq: 0,
            now: 0,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            links: vec![[0, 0]; g.edge_count()],
            nodes,
            clients,
            client_of_node,
            optimizer_known: BTreeMap::new(),
            events: Vec::new(),
            unserved_last: 0,
            version: 0,
        })
    }

    fn schedule(&mut self, at: u64, ev: Ev) {
        let seq = self.seq;
        self.seq += 1;
        self.heap.push(Reverse(QEv { time: at, seq, ev }));
    }

    fn log(&mut self, node: usize, kind: EventKind, name: String, size: u64) {
        self.events.push(EventRecord {
            time_us: self.now,
            node: self.s.graph.id(node),
            kind,
            name,
            size_bytes: size,
        });
    }

    fn data_name(&self, level: usize, chunk: u64) -> Name {
        Name::video_data(&self.title, &self.level_names[level - 1], chunk)
    }

    fn packet_name(&self, pkt: &Packet) -> String {
        match &pkt.kind {
            PktKind::RangeInterest { next_seq, .. } => {
                Name::range_interest(&self.title, *next_seq, None).to_string()
            }
            PktKind::Interest { level, chunk } | PktKind::Data { level, chunk, .. } => {
                self.data_name(*level, *chunk).to_string()
            }
            PktKind::NackRecommend { level, chunk, .. } => {
                self.data_name(*level, *chunk).to_string()
            }
            PktKind::NackCongestion { recommended, chunk, level } => match recommended {
                Some(l) => self.data_name(*l, *chunk).to_string(),
                None => self.data_name(*level, *chunk).to_string(),
            },
            PktKind::Report { forwarder, interval, .. } => {
                Name::opt_report(*forwarder, *interval).to_string()
            }
            PktKind::Config { version, target, .. } => {
                Name::opt_config(self.s.graph.id(*target), *version).to_string()
            }
            // the level component carries the row width: one message moves a
            // node's whole multiplier row
            PktKind::State { owner, var, iteration } => {
                Name::state_exchange(*owner, var, self.levels, u64::from(*iteration)).to_string()
            }
        }
    }

    /// Queue a packet on a link direction: serialized transmission, then
    /// propagation. Loss is drawn per packet at send time; a lost packet
    /// still consumes the link and is logged as a drop at the receiver.
    fn send(&mut self, eidx: usize, down: bool, mut pkt: Packet, send_kind: EventKind) {
        let decl = self.s.graph.edge(eidx);
        let (from, to) = self.s.graph.endpoints(eidx);
        let sender = if down { from } else { to };
        let tx_us = ((pkt.size * 8) as f64 / decl.capacity_mbps).round() as u64;
        let dir = usize::from(!down);
        let depart = self.links[eidx][dir].max(self.now);
        self.links[eidx][dir] = depart + tx_us;
        let arrive = depart + tx_us + (decl.delay_ms * 1e3).round() as u64;
        pkt.lost = self.cfg.loss_rate > 0.0 && self.rng.gen::<f64>() < self.cfg.loss_rate;
        let name = self.packet_name(&pkt);
        let size = pkt.size;
        self.log(sender, send_kind, name, size);
        self.schedule(arrive, Ev::Arrive { eidx, down, pkt });
    }

    /// Egress backlog a new packet would wait behind, in milliseconds.
    fn queue_delay_ms(&self, eidx: usize, down: bool) -> f64 {
        let dir = usize::from(!down);
        (self.links[eidx][dir].saturating_sub(self.now)) as f64 / 1e3
    }

    pub(super) fn run(mut self) -> Result<SimOutput, SimError> {
        let mut interval = 0u64;
        let mut at = 0u64;
        while at < self.duration_us {
            self.schedule(at, Ev::Kick { interval });
            interval += 1;
            at += self.interval_us;
        }
        let mut t = SAMPLE_MS * 1_000;
        while t < self.duration_us {
            self.schedule(t, Ev::Sample);
            t += SAMPLE_MS * 1_000;
        }

        let hard_cap = self.duration_us * 10 + 60_000_000;
        let mut completed = true;
        while let Some(Reverse(q)) = self.heap.pop() {
            if q.time > hard_cap {
                completed = false;
                break;
            }
            self.now = q.time;
            self.dispatch(q.ev)?;
        }

        let all_clients_resolved = self.clients.iter().all(|c| {
            c.chunks.iter().all(|ch| matches!(ch, ChunkState::Done))
                || (c.downgraded_flag
                    && c.chunks
                        .iter()
                        .all(|ch| matches!(ch, ChunkState::Done | ChunkState::Abandoned)))
        });

        let traces: Vec<ClientTrace> = self
            .clients
            .iter()
            .map(|c| ClientTrace {
                client_id: c.id,
                arrivals_s: c.arrivals.iter().map(|(t, _)| *t as f64 / 1e6).collect(),
                levels: c.arrivals.iter().map(|(_, l)| *l).collect(),
                buffer_samples_s: c.buffer_samples.clone(),
                startup_s: c.buffer.started_at_us.map(|t| t as f64 / 1e6),
                downgraded: c.downgraded_flag,
            })
            .collect();
        let report = metrics::build_report(&self.s.catalog, self.cfg.seed, &traces, self.unserved_last)?;
        Ok(SimOutput {
            events: self.events,
            report,
            client_traces: traces,
            unserved: self.unserved_last,
            completed,
            all_clients_resolved,
        })
    }

    fn dispatch(&mut self, ev: Ev) -> Result<(), SimError> {
        match ev {
            Ev::Kick { interval } => self.on_kick(interval),
            Ev::FlushReports { interval } => {
                self.flush_reports(interval);
                Ok(())
            }
            Ev::Solve { interval } => self.on_solve(interval),
            Ev::SendState { eidx, down, owner, var, iteration } => {
                let pkt = Packet {
                    kind: PktKind::State { owner, var, iteration },
                    size: message::encoded_len(self.levels) as u64,
                    lost: false,
                };
                self.send(eidx, down, pkt, EventKind::StateExchange);
                Ok(())
            }
            Ev::ApplyLocal { version, assignments } => {
                let mut by_access: BTreeMap<usize, Vec<(u32, usize)>> = BTreeMap::new();
                for (client_id, level) in assignments {
                    if let Some(cap) = self.optimizer_known.get(&client_id) {
                        by_access.entry(cap.access_node).or_default().push((client_id, level));
                    }
                }
                for (node, assigns) in by_access {
                    self.apply_assignments(node, &assigns, version);
                }
                Ok(())
            }
            Ev::Fallback { client } => {
                if !self.clients[client].started {
                    let floor = self.clients[client].profile.supported_levels[0];
                    self.clients[client].assigned = Some(floor);
                    self.clients[client].started = true;
                    let name = self.data_name(floor, 0).to_string();
                    let node = self.clients[client].node;
                    self.log(node, EventKind::Assign, name, 0);
                    self.pump(client);
                }
                Ok(())
            }
            Ev::Timeout { client, chunk, stamp } => {
                self.on_timeout_event(client, chunk, stamp);
                Ok(())
            }
            Ev::Sample => {
                let now = self.now;
                for c in &mut self.clients {
                    let level = c.buffer.level_s(now);
                    c.buffer_samples.push(level);
                }
                Ok(())
            }
            Ev::Arrive { eidx, down, pkt } => self.on_arrive(eidx, down, pkt),
        }
    }

    fn on_kick(&mut self, interval: u64) -> Result<(), SimError> {
        // per-interval client adaptation: consume downgrade-pending, or relax
        // the self-imposed cap after a clean interval
        for c in &mut self.clients {
            if c.downgrade_pending {
                let base = c.assigned.unwrap_or(c.level_cap);
                c.level_cap = base.saturating_sub(1).max(1);
                if let Some(a) = c.assigned.as_mut() {
                    *a = (*a).min(c.level_cap);
                }
                c.downgrade_pending = false;
            } else if interval > 0 {
                let max_sup = *c.profile.supported_levels.iter().max().expect("nonempty");
                c.level_cap = (c.level_cap + 1).min(max_sup);
            }
        }
        // range interests
        for ci in 0..self.clients.len() {
            let (edge, pkt, node) = {
                let c = &mut self.clients[ci];
                c.range_seq = interval;
                let pkt = Packet {
                    kind: PktKind::RangeInterest {
                        client: c.id,
                        levels: c.profile.supported_levels.clone(),
                        weight: c.profile.weight,
                        next_seq: c.next_chunk,
                    },
                    size: INTEREST_BYTES + 4 * c.profile.supported_levels.len() as u64,
                    lost: false,
                };
                (c.access_edge, pkt, c.node)
            };
            let _ = node;
            self.send(edge, false, pkt, EventKind::SendRangeInterest);
            if interval == 0 {
                self.schedule(self.now + FALLBACK_MS * 1_000, Ev::Fallback { client: ci });
            }
        }
        match self.cfg.mode {
            OptimizerMode::Centralized => {
                self.schedule(self.now + REPORT_FLUSH_MS * 1_000, Ev::FlushReports { interval });
                self.schedule(self.now + CENTRAL_SOLVE_MS * 1_000, Ev::Solve { interval });
            }
            OptimizerMode::Distributed => {
                self.schedule(self.now + DISTRIBUTED_SOLVE_MS * 1_000, Ev::Solve { interval });
            }
        }
        Ok(())
    }

    /// Centralized mode: each forwarder that heard clients sends one report
    /// toward its root server.
    fn flush_reports(&mut self, interval: u64) {
        for n in self.s.graph.node_indices() {
            if self.s.graph.role(n) != NodeRole::Forwarder || self.nodes[n].known.is_empty() {
                continue;
            }
            let Some(up) = self.parent_edge[n] else { continue };
            let clients: Vec<(u32, Vec<usize>, f64, u64)> = self.nodes[n]
                .known
                .iter()
                .map(|(id, cap)| (*id, cap.levels.clone(), cap.weight, cap.next_seq))
                .collect();
            let pkt = Packet {
                size: 32 + 20 * clients.len() as u64,
                kind: PktKind::Report {
                    forwarder: self.s.graph.id(n),
                    interval,
                    clients,
                },
                lost: false,
            };
            self.send(up, false, pkt, EventKind::SendReport);
        }
    }

    /// Build the solve input from currently known capabilities and run the
    /// optimizer plus repair, returning per-client levels.
    fn solve_known(
        &mut self,
        known: &BTreeMap<u32, Cap>,
    ) -> Result<(Vec<(u32, usize)>, usize, usize), SimError> {
        if known.is_empty() {
            return Ok((Vec::new(), 0, 0));
        }
        let mut file = self.s.to_file_struct();
        let known_ids: BTreeSet<u32> = known.keys().copied().collect();
        let drop_users: BTreeSet<u32> = self
            .clients
            .iter()
            .filter(|c| !known_ids.contains(&c.id))
            .map(|c| c.id)
            .collect();
        file.nodes.retain(|n| !drop_users.contains(&n.id));
        file.edges.retain(|e| !drop_users.contains(&e.from) && !drop_users.contains(&e.to));
        file.users.retain(|u| known_ids.contains(&u.id));
        // capabilities as reported, not as configured
        for u in &mut file.users {
            let cap = &known[&u.id];
            u.supported_levels = cap.levels.clone();
            u.weight = cap.weight;
        }
        let sub = Scenario::from_file_struct(file).expect("filtered scenario is structural");
        let run_cfg = RunConfig {
            schedule: StepSchedule {
                alpha0: self.s.sim.opt.alpha0,
                beta0: self.s.sim.opt.beta0,
            },
            t_max: self.s.sim.opt.t_max,
            eps: self.s.sim.opt.eps,
            mode: self.cfg.mode,
            keep_iterates: false,
            warm_start: None,
        };
        let solved = dual::run(&sub, &run_cfg)?;
        let repaired = reconstruct::reconstruct(&sub, &solved.x, &solved.y)?;
        let mut assignments = Vec::new();
        for nidx in sub.user_nodes() {
            let id = sub.graph.id(nidx);
            let row = repaired.x.row(nidx);
            match row.iter().position(|v| *v > 0.5) {
                Some(l) => assignments.push((id, l + 1)),
                None => {
                    // unserved: steer to the lowest supported level anyway
                    let floor = known[&id].levels[0];
                    assignments.push((id, floor));
                }
            }
        }
        let unserved = repaired.unserved_users.len();
        Ok((assignments, unserved, solved.trace.rows.len()))
    }

    fn on_solve(&mut self, interval: u64) -> Result<(), SimError> {
        self.version = interval + 1;
        match self.cfg.mode {
            OptimizerMode::Centralized => {
                let known = self.optimizer_known.clone();
                let (assignments, unserved, _iters) = self.solve_known(&known)?;
                if assignments.is_empty() {
                    return Ok(());
                }
                self.unserved_last = unserved;
                // group by access node; servers apply locally, forwarders get
                // a routed config packet from their root
                let mut by_access: BTreeMap<usize, Vec<(u32, usize)>> = BTreeMap::new();
                for (id, level) in assignments {
                    if let Some(cap) = known.get(&id) {
                        by_access.entry(cap.access_node).or_default().push((id, level));
                    }
                }
                let version = self.version;
                for (node, assigns) in by_access {
                    if self.s.graph.role(node) == NodeRole::Server {
                        self.apply_assignments(node, &assigns, version);
                        continue;
                    }
                    // route: reverse of the forwarder's path to its root
                    let mut route: Vec<usize> = self.up_path[node].clone();
                    route.reverse();
                    let Some(first) = route.first().copied() else { continue };
                    let rest = route[1..].to_vec();
                    let pkt = Packet {
                        size: 32 + 12 * assigns.len() as u64,
                        kind: PktKind::Config {
                            version,
                            target: node,
                            route: rest,
                            assignments: assigns,
                        },
                        lost: false,
                    };
                    self.send(first, true, pkt, EventKind::SendConfig);
                }
            }
            OptimizerMode::Distributed => {
                let mut known: BTreeMap<u32, Cap> = BTreeMap::new();
                for n in self.s.graph.node_indices() {
                    for (id, cap) in &self.nodes[n].known {
                        known.insert(*id, cap.clone());
                    }
                }
                self.optimizer_known = known.clone();
                let (assignments, unserved, iters) = self.solve_known(&known)?;
                if assignments.is_empty() {
                    return Ok(());
                }
                self.unserved_last = unserved;
                // per-iteration synchronous rounds: multiplier rows move up,
                // edge prices move down, on every non-user link
                let g = &self.s.graph;
                let mut exchange_edges = Vec::new();
                for eidx in 0..g.edge_count() {
                    let (_, to) = g.endpoints(eidx);
                    if g.role(to) == NodeRole::Forwarder {
                        exchange_edges.push(eidx);
                    }
                }
                for i in 0..iters as u32 {
                    let at = self.now + u64::from(i) * STATE_ROUND_MS * 1_000;
                    for &eidx in &exchange_edges {
                        let (from, to) = g.endpoints(eidx);
                        self.schedule(
                            at,
                            Ev::SendState {
                                eidx,
                                down: false,
                                owner: g.id(to),
                                var: "lambda1",
                                iteration: i + 1,
                            },
                        );
                        self.schedule(
                            at,
                            Ev::SendState {
                                eidx,
                                down: true,
                                owner: g.id(from),
                                var: "lambda2",
                                iteration: i + 1,
                            },
                        );
                    }
                }
                let done = self.now + iters as u64 * STATE_ROUND_MS * 1_000;
                self.schedule(
                    done,
                    Ev::ApplyLocal {
                        version: self.version,
                        assignments,
                    },
                );
            }
        }
        Ok(())
    }

    /// Apply assignments at an access node: remember them, notify each
    /// client with a recommendation NACK, and pre-fetch the recommended
    /// chunk so it is cached when the client's interest lands.
    fn apply_assignments(&mut self, node: usize, assigns: &[(u32, usize)], version: u64) {
        for &(client_id, level) in assigns {
            let Some(cap) = self.nodes[node].known.get(&client_id).cloned().or_else(|| {
                self.optimizer_known.get(&client_id).cloned()
            }) else {
            continue;
        };
            self.nodes[node].assignments.insert(client_id, level);
            let name = self.data_name(level, cap.next_seq).to_string();
            self.log(node, EventKind::Assign, name, 0);
            let nack = Packet {
                size: NACK_BYTES,
                kind: PktKind::NackRecommend {
                    level,
                    chunk: cap.next_seq,
                    version,
                },
                lost: false,
            };
            self.send(cap.face_edge, true, nack, EventKind::SendNack);
            if self.s.sim.prefetch && self.s.graph.role(node) == NodeRole::Forwarder {
                self.prefetch(node, level, cap.next_seq);
            }
        }
    }

    fn prefetch(&mut self, node: usize, level: usize, chunk: u64) {
        let name = self.data_name(level, chunk);
        if self.nodes[node].cs.lookup(&name).is_some() {
            return;
        }
        let action =
            self.nodes[node]
                .pit
                .insert_or_aggregate(&name, Face::Local, self.now, self.pit_lifetime_us);
        self.log(node, EventKind::Prefetch, name.to_string(), 0);
        if action == PitAction::Forwarded {
            if let Some(up) = self.parent_edge[node] {
                let pkt = Packet {
                    size: INTEREST_BYTES,
                    kind: PktKind::Interest { level, chunk },
                    lost: false,
                };
                self.send(up, false, pkt, EventKind::SendInterest);
            }
        }
    }

    /// Keep the client's interest pipeline full.
    fn pump(&mut self, ci: usize) {
        loop {
            let (edge, pkt, chunk, rto) = {
                let c = &mut self.clients[ci];
                let Some(level) = c.assigned else { return };
                if !c.started || c.in_flight >= c.window.window() {
                    return;
                }
                while (c.next_chunk as usize) < c.chunks.len()
                    && c.chunks[c.next_chunk as usize] != ChunkState::Unsent
                {
                    c.next_chunk += 1;
                }
                if c.next_chunk as usize >= c.chunks.len() {
                    return;
                }
                let chunk = c.next_chunk;
                c.stamp_counter += 1;
                let stamp = c.stamp_counter;
                c.chunks[chunk as usize] = ChunkState::Outstanding {
                    retransmissions: 0,
                    sent_at: self.now,
                    level,
                    stamp,
                };
                c.in_flight += 1;
                c.next_chunk += 1;
                let rto = c.rtt.rto_us().max(INITIAL_RTO_US.min(c.rtt.rto_us() * 8));
                (
                    c.access_edge,
                    Packet {
                        size: INTEREST_BYTES,
                        kind: PktKind::Interest { level, chunk },
                        lost: false,
                    },
                    chunk,
                    rto,
                )
            };
            let stamp = self.clients[ci].stamp_counter;
            self.send(edge, false, pkt, EventKind::SendInterest);
            self.schedule(self.now + rto, Ev::Timeout { client: ci, chunk, stamp });
        }
    }

    fn on_timeout_event(&mut self, ci: usize, chunk: u64, stamp: u64) {
        let (level, retransmissions) = {
            let c = &self.clients[ci];
            match c.chunks[chunk as usize] {
                ChunkState::Outstanding {
                    retransmissions,
                    level,
                    stamp: s,
                    ..
                } if s == stamp => (level, retransmissions),
                _ => return,
            }
        };
        let name = self.data_name(level, chunk).to_string();
        let node = self.clients[ci].node;
        self.log(node, EventKind::Timeout, name.clone(), 0);
        let guard = self.clients[ci].rtt.rto_us();
        self.clients[ci].window.on_loss_event(self.now, guard);
        match on_timeout(retransmissions) {
            TimeoutAction::Retransmit { attempt } => {
                let (edge, pkt, rto) = {
                    let c = &mut self.clients[ci];
                    c.stamp_counter += 1;
                    let stamp = c.stamp_counter;
                    c.chunks[chunk as usize] = ChunkState::Outstanding {
                        retransmissions: attempt,
                        sent_at: self.now,
                        level,
                        stamp,
                    };
                    (
                        c.access_edge,
                        Packet {
                            size: INTEREST_BYTES,
                            kind: PktKind::Interest { level, chunk },
                            lost: false,
                        },
                        c.rtt.rto_us(),
                    )
                };
                self.log(node, EventKind::Retransmit, name, 0);
                let stamp = self.clients[ci].stamp_counter;
                self.send(edge, false, pkt, EventKind::SendInterest);
                self.schedule(self.now + rto, Ev::Timeout { client: ci, chunk, stamp });
            }
            TimeoutAction::Abandon => {
                let c = &mut self.clients[ci];
                c.chunks[chunk as usize] = ChunkState::Abandoned;
                c.in_flight = c.in_flight.saturating_sub(1);
                c.downgrade_pending = true;
                c.downgraded_flag = true;
                self.log(node, EventKind::AbandonChunk, name, 0);
                self.pump(ci);
            }
        }
    }

    fn on_arrive(&mut self, eidx: usize, down: bool, pkt: Packet) -> Result<(), SimError> {
        let (from, to) = self.s.graph.endpoints(eidx);
        let dest = if down { to } else { from };
        if pkt.lost {
            let name = self.packet_name(&pkt);
            let size = pkt.size;
            self.log(dest, EventKind::Drop, name, size);
            return Ok(());
        }
        match pkt.kind.clone() {
            PktKind::RangeInterest { client, levels, weight, next_seq } => {
                let name = self.packet_name(&pkt);
                self.log(dest, EventKind::RecvRangeInterest, name, pkt.size);
                let cap = Cap {
                    levels,
                    weight,
                    access_node: dest,
                    face_edge: eidx,
                    next_seq,
                };
                self.nodes[dest].known.insert(client, cap.clone());
                if self.s.graph.role(dest) == NodeRole::Server {
                    // directly attached client: the optimizer co-located here
                    // learns it without a report hop
                    self.optimizer_known.insert(client, cap);
                }
            }
            PktKind::Interest { level, chunk } => self.on_interest(dest, eidx, level, chunk),
            PktKind::Data { level, chunk, authentic } => {
                self.on_data(dest, level, chunk, authentic, pkt.size)
            }
            PktKind::NackRecommend { level, chunk, version } => {
                let name = self.data_name(level, chunk).to_string();
                self.log(dest, EventKind::RecvNack, name, pkt.size);
                let _ = version;
                if let Some(ci) = self.client_of_node[dest] {
                    let c = &mut self.clients[ci];
                    let capped = level.min(c.level_cap);
                    c.assigned = Some(capped);
                    if !c.started {
                        c.started = true;
                    }
                    self.pump(ci);
                }
            }
            PktKind::NackCongestion { recommended, chunk, level } => {
                let name = self.data_name(recommended.unwrap_or(level), chunk).to_string();
                self.log(dest, EventKind::RecvNack, name, pkt.size);
                if let Some(ci) = self.client_of_node[dest] {
                    let guard = self.clients[ci].rtt.rto_us();
                    self.clients[ci].window.on_loss_event(self.now, guard);
                    if let Some(rec) = recommended {
                        let c = &mut self.clients[ci];
                        c.level_cap = c.level_cap.min(rec).max(1);
                        if let Some(a) = c.assigned.as_mut() {
                            *a = (*a).min(rec).max(1);
                        }
                    }
                }
            }
            PktKind::Report { forwarder, interval, clients } => {
                match self.s.graph.role(dest) {
                    NodeRole::Server => {
                        for (id, levels, weight, next_seq) in clients {
                            // access node for config routing is the
                            // reporting forwarder
                            let access = self
                                .s
                                .graph
                                .idx_of(forwarder)
                                .expect("reporting forwarder exists");
                            let face = self.nodes[access]
                                .known
                                .get(&id)
                                .map(|c| c.face_edge)
                                .unwrap_or(eidx);
                            self.optimizer_known.insert(
                                id,
                                Cap {
                                    levels,
                                    weight,
                                    access_node: access,
                                    face_edge: face,
                                    next_seq,
                                },
                            );
                        }
                    }
                    NodeRole::Forwarder => {
                        // relay toward the root
                        if let Some(up) = self.parent_edge[dest] {
                            let relay = Packet {
                                kind: PktKind::Report { forwarder, interval, clients },
                                size: pkt.size,
                                lost: false,
                            };
                            self.send(up, false, relay, EventKind::SendReport);
                        }
                    }
                    NodeRole::User => {}
                }
            }
            PktKind::Config { version, target, route, assignments } => {
                if dest == target || route.is_empty() {
                    self.apply_assignments(dest, &assignments, version);
                } else {
                    let next = route[0];
                    let rest = route[1..].to_vec();
                    let pkt = Packet {
                        size: pkt.size,
                        kind: PktKind::Config { version, target, route: rest, assignments },
                        lost: false,
                    };
                    self.send(next, true, pkt, EventKind::SendConfig);
                }
            }
            PktKind::State { .. } => {
                // accounting traffic only; the synchronized solve already ran
            }
        }
        Ok(())
    }

    fn on_interest(&mut self, dest: usize, eidx: usize, level: usize, chunk: u64) {
        let name = self.data_name(level, chunk);
        self.log(dest, EventKind::RecvInterest, name.to_string(), INTEREST_BYTES);
        match self.s.graph.role(dest) {
            NodeRole::Server => {
                let payload = self.chunk_bytes[level - 1] + DATA_HEADER_BYTES;
                let pkt = Packet {
                    size: payload,
                    kind: PktKind::Data { level, chunk, authentic: true },
                    lost: false,
                };
                self.send(eidx, true, pkt, EventKind::SendData);
            }
            NodeRole::Forwarder => {
                if let Some(size) = self.nodes[dest].cs.lookup(&name) {
                    self.log(dest, EventKind::CacheHit, name.to_string(), size);
                    self.deliver_data(dest, eidx, level, chunk, size);
                    return;
                }
                let action = self.nodes[dest].pit.insert_or_aggregate(
                    &name,
                    Face::Edge(eidx),
                    self.now,
                    self.pit_lifetime_us,
                );
                match action {
                    PitAction::Aggregated => {
                        self.log(dest, EventKind::AggregateInterest, name.to_string(), 0);
                    }
                    PitAction::Forwarded => {
                        if let Some(up) = self.parent_edge[dest] {
                            let pkt = Packet {
                                size: INTEREST_BYTES,
                                kind: PktKind::Interest { level, chunk },
                                lost: false,
                            };
                            self.send(up, false, pkt, EventKind::SendInterest);
                        }
                    }
                }
            }
            NodeRole::User => {}
        }
    }

    /// Send one cached/arrived data copy down a face, with the backpressure
    /// check ahead of the enqueue.
    fn deliver_data(&mut self, node: usize, face_edge: usize, level: usize, chunk: u64, size: u64) {
        let delay_ms = self.queue_delay_ms(face_edge, true);
        if let Some(recommended) = backpressure_recommendation(
            delay_ms,
            self.s.sim.backpressure_threshold_ms,
            self.current_level_for_face(node, face_edge, level),
        ) {
            let nack = Packet {
                size: NACK_BYTES,
                kind: PktKind::NackCongestion { recommended, chunk, level },
                lost: false,
            };
            self.send(face_edge, true, nack, EventKind::SendNack);
        }
        let pkt = Packet {
            size,
            kind: PktKind::Data { level, chunk, authentic: true },
            lost: false,
        };
        self.send(face_edge, true, pkt, EventKind::SendData);
    }

    /// The level currently assigned to the client behind a face, falling
    /// back to the level in flight.
    fn current_level_for_face(&self, node: usize, face_edge: usize, level: usize) -> usize {
        let (_, to) = self.s.graph.endpoints(face_edge);
        if let Some(ci) = self.client_of_node[to] {
            let id = self.clients[ci].id;
            if let Some(l) = self.nodes[node].assignments.get(&id) {
                return *l;
            }
        }
        level
    }

    fn on_data(&mut self, dest: usize, level: usize, chunk: u64, authentic: bool, size: u64) {
        let name = self.data_name(level, chunk);
        self.log(dest, EventKind::RecvData, name.to_string(), size);
        if !authentic {
            // signature check failed: treat as never received
            self.log(dest, EventKind::Drop, name.to_string(), size);
            return;
        }
        match self.s.graph.role(dest) {
            NodeRole::Forwarder => {
                self.nodes[dest].cs.insert(name.clone(), size);
                let faces = self.nodes[dest].pit.consume(&name, self.now);
                for face in faces {
                    match face {
                        Face::Edge(e) => self.deliver_data(dest, e, level, chunk, size),
                        Face::Local => {}
                    }
                }
            }
            NodeRole::User => {
                let Some(ci) = self.client_of_node[dest] else { return };
                let c = &mut self.clients[ci];
                let ChunkState::Outstanding { retransmissions, sent_at, level: want, .. } =
                    c.chunks[chunk as usize]
                else {
                    return; // duplicate or late recovery of an abandoned chunk
                };
                if want != level {
                    return;
                }
                c.chunks[chunk as usize] = ChunkState::Done;
                c.in_flight = c.in_flight.saturating_sub(1);
                if retransmissions == 0 {
                    c.rtt.observe(self.now - sent_at);
                }
                c.window.on_success();
                let chunk_s = self.s.sim.chunk_duration_s;
                let was_playing = c.buffer.started_at_us.is_some();
                c.buffer.on_chunk(self.now, chunk_s);
                c.arrivals.push((self.now, level));
                let started = c.buffer.started_at_us;
                if !was_playing {
                    if let Some(at) = started {
                        debug_assert_eq!(at, self.now);
                        self.log(dest, EventKind::PlaybackStart, name.to_string(), 0);
                    }
                }
                self.pump(ci);
            }
            NodeRole::Server => {}
        }
    }
}
