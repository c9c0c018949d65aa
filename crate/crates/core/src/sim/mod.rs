//! Deterministic discrete-event simulator.
//!
//! One run owns a single seeded RNG stream, an event queue ordered by
//! `(time, sequence)` and one [`Router`] per node. Routers return action
//! lists; the engine turns transmissions into arrivals over a unit-disk
//! channel and keeps the per-packet bookkeeping behind the metrics.

mod event;
pub mod mobility;
mod packet;
mod radio;
mod scenario;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use event::{EventKind, EventQueue, SimEvent};
pub use mobility::{Arena, MobileNode};
pub use packet::{Packet, PacketKind, ADDRESS_BYTES, DEFAULT_DATA_SIZE};
pub use radio::Radio;
pub use scenario::{Flow, FlowConfig, FlowSpec, Placement, ScenarioConfig};

use crate::error::Result;
use crate::metrics::{MetricsReport, RunTally};
use crate::protocols::{Action, ProtocolFeatureSet, Router, Timer};
use crate::NodeId;

/// Checks the engine makes on itself during a run; all zero in a sound run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RunDiagnostics {
    /// Generated DATA packets with no recorded fate.
    pub unaccounted: u64,
    /// A node emitted the same RREQ id twice.
    pub duplicate_rreq_emissions: u64,
    /// An event ran earlier than the event that scheduled it.
    pub causality_violations: u64,
    pub events: u64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: MetricsReport,
    pub diagnostics: RunDiagnostics,
}

/// Run `config` under `features` to the end of its duration.
pub fn run(config: &ScenarioConfig, features: &ProtocolFeatureSet) -> Result<MetricsReport> {
    Ok(Simulation::new(config, features)?.run()?.report)
}

#[derive(Serialize)]
struct TraceRecord<'a> {
    t: f64,
    seq: u64,
    event: &'a str,
    node: Option<NodeId>,
    kind: Option<PacketKind>,
    src: Option<NodeId>,
    id: Option<u64>,
}

pub struct Simulation<'w> {
    config: ScenarioConfig,
    arena: Arena,
    radio: Radio,
    rng: ChaCha8Rng,
    nodes: Vec<MobileNode>,
    routers: Vec<Router>,
    flows: Vec<Flow>,
    flow_sent: Vec<u64>,
    queue: EventQueue,
    now: f64,
    next_data_id: u64,
    tally: RunTally,
    generated: Vec<(NodeId, u64)>,
    delivered: BTreeSet<(NodeId, u64)>,
    dropped: BTreeSet<(NodeId, u64)>,
    rreq_emitted: BTreeSet<(NodeId, u64, NodeId)>,
    diagnostics: RunDiagnostics,
    trace: Option<&'w mut dyn Write>,
}

impl<'w> Simulation<'w> {
    pub fn new(config: &ScenarioConfig, features: &ProtocolFeatureSet) -> Result<Self> {
        config.validate()?;
        features.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let arena = config.arena();
        let positions = config.positions(&mut rng)?;
        let mut nodes = Vec::with_capacity(positions.len());
        for (i, p) in positions.iter().enumerate() {
            let waypoint = if config.speed > 0.0 {
                arena.random_point(&mut rng)
            } else {
                *p
            };
            nodes.push(MobileNode {
                id: NodeId(i as u32),
                position: *p,
                waypoint,
                speed: config.speed,
                range: config.radio_range,
            });
        }
        let routers = (0..nodes.len())
            .map(|i| Router::new(NodeId(i as u32), features.clone(), config.params.clone()))
            .collect::<Result<Vec<_>>>()?;
        let flows = config.resolve_flows(nodes.len(), &mut rng);
        let radio = Radio {
            range: config.radio_range,
            bandwidth: config.bandwidth,
            propagation: config.propagation_delay,
        };
        let mut sim = Simulation {
            config: config.clone(),
            arena,
            radio,
            rng,
            nodes,
            routers,
            flow_sent: vec![0; flows.len()],
            flows,
            queue: EventQueue::default(),
            now: 0.0,
            next_data_id: 0,
            tally: RunTally::default(),
            generated: Vec::new(),
            delivered: BTreeSet::new(),
            dropped: BTreeSet::new(),
            rreq_emitted: BTreeSet::new(),
            diagnostics: RunDiagnostics::default(),
            trace: None,
        };
        sim.bootstrap();
        Ok(sim)
    }

    /// Write one JSON line per executed event to `sink`.
    pub fn with_trace(mut self, sink: &'w mut dyn Write) -> Self {
        self.trace = Some(sink);
        self
    }

    pub fn routers(&self) -> &[Router] {
        &self.routers
    }

    pub fn nodes(&self) -> &[MobileNode] {
        &self.nodes
    }

    pub fn flows(&self) -> &[Flow] {
        &self.flows
    }

    fn bootstrap(&mut self) {
        if self.config.preinstall_routes {
            self.preinstall();
        }
        for (i, f) in self.flows.iter().enumerate() {
            if f.start <= f.stop {
                self.queue.push(f.start, EventKind::Traffic { flow: i });
            }
        }
        if self.config.speed > 0.0 {
            self.queue.push(self.config.mobility_step, EventKind::Mobility);
        }
        let interval = self.config.params.hello_interval;
        for i in 0..self.routers.len() {
            if self.routers[i].wants_hello() {
                let offset = self.rng.random_range(0.0..interval);
                self.queue.push(
                    offset,
                    EventKind::Timer {
                        node: NodeId(i as u32),
                        timer: Timer::Hello,
                    },
                );
            }
        }
    }

    /// Hop-shortest path on the current connectivity graph.
    pub fn shortest_path(&self, src: NodeId, dst: NodeId) -> Option<Vec<NodeId>> {
        let n = self.nodes.len();
        let mut prev: Vec<Option<usize>> = vec![None; n];
        let mut seen = vec![false; n];
        let mut frontier = VecDeque::from([src.index()]);
        seen[src.index()] = true;
        while let Some(u) = frontier.pop_front() {
            if u == dst.index() {
                let mut path = vec![dst];
                let mut cur = u;
                while let Some(p) = prev[cur] {
                    path.push(NodeId(p as u32));
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            for v in 0..n {
                if !seen[v] && self.radio.in_range(self.nodes[u].position, self.nodes[v].position) {
                    seen[v] = true;
                    prev[v] = Some(u);
                    frontier.push_back(v);
                }
            }
        }
        None
    }

    fn preinstall(&mut self) {
        let pairs: Vec<(NodeId, NodeId)> = self.flows.iter().map(|f| (f.src, f.dst)).collect();
        for (src, dst) in pairs {
            let Some(path) = self.shortest_path(src, dst) else {
                continue;
            };
            for k in 0..path.len() {
                let forward = &path[k..];
                let backward: Vec<NodeId> = path[..=k].iter().rev().copied().collect();
                let router = &mut self.routers[path[k].index()];
                router.install_static_route(forward);
                router.install_static_route(&backward);
            }
        }
    }

    /// Execute events up to the configured duration and account for every
    /// generated packet.
    pub fn run(mut self) -> Result<RunOutcome> {
        let end = self.config.duration;
        while self.queue.peek_time().is_some_and(|t| t <= end) {
            let Some(ev) = self.queue.pop() else { break };
            if ev.time < self.now {
                self.diagnostics.causality_violations += 1;
            }
            self.now = ev.time;
            self.diagnostics.events += 1;
            self.dispatch(ev)?;
        }
        self.finish()
    }

    fn trace_event(&mut self, ev: &SimEvent) -> Result<()> {
        let Some(sink) = self.trace.as_mut() else { return Ok(()) };
        let rec = match &ev.kind {
            EventKind::Arrival {
                receiver,
                packet,
                addressed,
            } => TraceRecord {
                t: ev.time,
                seq: ev.sequence,
                event: if *addressed { "arrival" } else { "overheard" },
                node: Some(*receiver),
                kind: Some(packet.kind),
                src: Some(packet.src),
                id: Some(packet.id),
            },
            EventKind::Timer { node, timer } => TraceRecord {
                t: ev.time,
                seq: ev.sequence,
                event: match timer {
                    Timer::Discovery { .. } => "timer-discovery",
                    Timer::Hello => "timer-hello",
                    Timer::Ack { .. } => "timer-ack",
                },
                node: Some(*node),
                kind: None,
                src: None,
                id: None,
            },
            EventKind::Traffic { flow } => TraceRecord {
                t: ev.time,
                seq: ev.sequence,
                event: "traffic",
                node: Some(self.flows[*flow].src),
                kind: Some(PacketKind::Data),
                src: None,
                id: None,
            },
            EventKind::Mobility => TraceRecord {
                t: ev.time,
                seq: ev.sequence,
                event: "mobility",
                node: None,
                kind: None,
                src: None,
                id: None,
            },
        };
        serde_json::to_writer(&mut *sink, &rec)?;
        sink.write_all(b"\n")?;
        Ok(())
    }

    fn dispatch(&mut self, ev: SimEvent) -> Result<()> {
        self.trace_event(&ev)?;
        let now = self.now;
        match ev.kind {
            EventKind::Arrival {
                receiver,
                packet,
                addressed,
            } => {
                let r = &mut self.routers[receiver.index()];
                let actions = if addressed {
                    r.receive(now, packet)
                } else {
                    r.overhear(now, packet)
                };
                self.apply(receiver, actions);
            }
            EventKind::Timer { node, timer } => {
                let actions = self.routers[node.index()].timer(now, timer);
                self.apply(node, actions);
            }
            EventKind::Traffic { flow } => self.generate(flow),
            EventKind::Mobility => {
                let step = self.config.mobility_step;
                for n in &mut self.nodes {
                    n.advance(step, &self.arena, &mut self.rng);
                }
                self.queue.push(now + step, EventKind::Mobility);
            }
        }
        Ok(())
    }

    fn generate(&mut self, flow: usize) {
        let f = self.flows[flow].clone();
        let id = self.next_data_id;
        self.next_data_id += 1;
        let packet = Packet::data(f.src, f.dst, id, self.config.data_size, self.now);
        self.generated.push(packet.data_key());
        self.tally.generated += 1;
        self.flow_sent[flow] += 1;
        let actions = self.routers[f.src.index()].originate(self.now, packet);
        self.apply(f.src, actions);
        let next = self.now + f.interval;
        if next <= f.stop && f.packets.is_none_or(|cap| self.flow_sent[flow] < cap) {
            self.queue.push(next, EventKind::Traffic { flow });
        }
    }

    fn apply(&mut self, node: NodeId, actions: Vec<Action>) {
        for action in actions {
            match action {
                Action::Transmit(p) => self.transmit(node, p),
                Action::Schedule { delay, timer } => {
                    self.queue
                        .push(self.now + delay.max(0.0), EventKind::Timer { node, timer });
                }
                Action::Deliver(p) => {
                    if self.delivered.insert(p.data_key()) {
                        self.tally.latencies.push(self.now - p.created_at);
                        self.tally.delivered_bytes += u64::from(p.payload);
                    }
                }
                Action::Drop { packet, .. } => {
                    if packet.kind == PacketKind::Data {
                        self.dropped.insert(packet.data_key());
                    }
                }
                Action::DiscoveryFailed { .. } => self.tally.discovery_failures += 1,
            }
        }
    }

    fn transmit(&mut self, sender: NodeId, p: Packet) {
        self.tally.tx.record(p.kind);
        match p.kind {
            PacketKind::Rreq => {
                if !self.rreq_emitted.insert((p.origin, p.id, sender)) {
                    self.diagnostics.duplicate_rreq_emissions += 1;
                }
            }
            PacketKind::Rrep if p.src == p.origin && p.origin != p.target => self.tally.gratuitous_rreps += 1,
            _ => {}
        }
        let mut delay = self.radio.hop_delay(p.size());
        if p.is_broadcast() && self.config.jitter > 0.0 {
            delay += self.rng.random_range(0.0..self.config.jitter);
        }
        let at = self.now + delay;
        let (addressed, overheard) = self.radio.deliver(&self.nodes[sender.index()], &self.nodes, &p);
        if !p.is_broadcast() && addressed.is_empty() && p.kind == PacketKind::Data {
            // Next hop out of range: lost on the channel.
            self.dropped.insert(p.data_key());
        }
        for r in overheard {
            if self.routers[r.index()].features().promiscuous {
                self.queue.push(
                    at,
                    EventKind::Arrival {
                        receiver: r,
                        packet: p.clone(),
                        addressed: false,
                    },
                );
            }
        }
        for r in addressed {
            self.queue.push(
                at,
                EventKind::Arrival {
                    receiver: r,
                    packet: p.clone(),
                    addressed: true,
                },
            );
        }
    }

    fn finish(mut self) -> Result<RunOutcome> {
        let mut in_flight: BTreeSet<(NodeId, u64)> = BTreeSet::new();
        for ev in self.queue.iter() {
            if let EventKind::Arrival {
                packet,
                addressed: true,
                ..
            } = &ev.kind
            {
                if packet.kind == PacketKind::Data {
                    in_flight.insert(packet.data_key());
                }
            }
        }
        for r in &self.routers {
            in_flight.extend(r.buffered_data().map(Packet::data_key));
        }
        let mut fates: BTreeMap<&str, u64> = BTreeMap::new();
        for key in &self.generated {
            let fate = if self.delivered.contains(key) {
                "delivered"
            } else if in_flight.contains(key) {
                "in_flight"
            } else if self.dropped.contains(key) {
                "dropped"
            } else {
                "unaccounted"
            };
            *fates.entry(fate).or_default() += 1;
        }
        self.tally.delivered = fates.get("delivered").copied().unwrap_or(0);
        self.tally.in_flight = fates.get("in_flight").copied().unwrap_or(0);
        self.tally.dropped = fates.get("dropped").copied().unwrap_or(0);
        self.diagnostics.unaccounted = fates.get("unaccounted").copied().unwrap_or(0);
        let report = MetricsReport::from_tally(self.tally, self.config.duration)?;
        Ok(RunOutcome {
            report,
            diagnostics: self.diagnostics,
        })
    }
}
