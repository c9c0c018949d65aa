use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use super::table::{RouteCache, RoutingTable};
use super::{ErsSchedule, LinkMonitor, ProtocolFeatureSet, ProtocolParams, RouteStore};
use crate::error::Result;
use crate::sim::{Packet, PacketKind};
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Timer {
    /// Reply wait of one discovery attempt; stale if the RREQ id moved on.
    Discovery {
        target: NodeId,
        rreq_id: u64,
    },
    Hello,
    Ack {
        origin: NodeId,
        id: u64,
        attempt: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    NoRoute,
    QueueFull,
    DiscoveryFailed,
    RepairFailed,
    LinkBreak,
}

/// Side effects requested by a [`Router`]; the host executes them.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Transmit(Packet),
    Schedule { delay: f64, timer: Timer },
    Deliver(Packet),
    Drop { packet: Packet, reason: DropReason },
    DiscoveryFailed { target: NodeId },
}

#[derive(Debug, Clone)]
struct Discovery {
    rreq_id: u64,
    attempt: usize,
    repair: bool,
}

#[derive(Debug, Clone)]
struct AckWait {
    packet: Packet,
    next_hop: NodeId,
    attempt: u32,
}

/// Control plane of one node.
///
/// Every input returns the list of actions it causes and nothing else
/// happens; the router never reads a clock or a random source.
#[derive(Debug, Clone)]
pub struct Router {
    id: NodeId,
    features: ProtocolFeatureSet,
    params: ProtocolParams,
    schedule: ErsSchedule,
    monitor: LinkMonitor,
    seq: u32,
    next_rreq_id: u64,
    seen_rreq: BTreeSet<(NodeId, u64)>,
    replies_sent: BTreeMap<(NodeId, u64), u32>,
    seen_data: BTreeSet<(NodeId, u64)>,
    table: RoutingTable,
    cache: RouteCache,
    pending: BTreeMap<NodeId, Discovery>,
    queue: BTreeMap<NodeId, VecDeque<Packet>>,
    last_heard: BTreeMap<NodeId, f64>,
    awaiting: BTreeMap<(NodeId, u64), AckWait>,
    /// Destinations under local repair, with the sources to notify if it fails.
    repairs: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl Router {
    pub fn new(id: NodeId, features: ProtocolFeatureSet, params: ProtocolParams) -> Result<Self> {
        features.validate()?;
        params.validate()?;
        let schedule = ErsSchedule::for_protocol(&features, &params)?;
        let monitor = features.link_monitor();
        Ok(Router {
            id,
            features,
            params,
            schedule,
            monitor,
            seq: 0,
            next_rreq_id: 0,
            seen_rreq: BTreeSet::new(),
            replies_sent: BTreeMap::new(),
            seen_data: BTreeSet::new(),
            table: RoutingTable::default(),
            cache: RouteCache::default(),
            pending: BTreeMap::new(),
            queue: BTreeMap::new(),
            last_heard: BTreeMap::new(),
            awaiting: BTreeMap::new(),
            repairs: BTreeMap::new(),
        })
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn features(&self) -> &ProtocolFeatureSet {
        &self.features
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn table(&self) -> &RoutingTable {
        &self.table
    }

    pub fn cache(&self) -> &RouteCache {
        &self.cache
    }

    pub fn wants_hello(&self) -> bool {
        self.features.periodic_hello
    }

    pub fn is_discovering(&self, target: NodeId) -> bool {
        self.pending.contains_key(&target)
    }

    pub fn is_repairing(&self, target: NodeId) -> bool {
        self.repairs.contains_key(&target)
    }

    /// DATA held by this node: queued for a route or awaiting a link ACK.
    pub fn buffered_data(&self) -> impl Iterator<Item = &Packet> {
        self.queue
            .values()
            .flatten()
            .chain(self.awaiting.values().map(|w| &w.packet))
    }

    fn uses_cache(&self) -> bool {
        self.features.store == RouteStore::RouteCache
    }

    fn lifetime(&self) -> f64 {
        self.params.route_timeout
    }

    /// Install a never-expiring route along `path`, which starts at this node.
    pub fn install_static_route(&mut self, path: &[NodeId]) {
        if path.len() < 2 || path[0] != self.id {
            return;
        }
        if self.uses_cache() {
            self.cache.install_static(path.to_vec());
        } else {
            for (j, node) in path.iter().enumerate().skip(1) {
                self.table.install_static(*node, path[1], j as u32);
            }
        }
    }

    // ---- inputs ----

    /// A DATA packet generated at this node.
    pub fn originate(&mut self, now: f64, mut data: Packet) -> Vec<Action> {
        let mut out = Vec::new();
        data.src = self.id;
        data.hops = 0;
        data.route.clear();
        self.seen_data.insert(data.data_key());
        let dst = data.dst;
        if self.route_available(dst, now) {
            self.route_data(now, data, &mut out);
            if !self.features.check_store_before_discovery && !self.pending.contains_key(&dst) {
                self.start_discovery(now, dst, None, &mut out);
            }
        } else {
            self.enqueue(data, &mut out);
            if !self.pending.contains_key(&dst) {
                self.start_discovery(now, dst, None, &mut out);
            }
        }
        out
    }

    /// A broadcast, or a unicast addressed to this node.
    pub fn receive(&mut self, now: f64, packet: Packet) -> Vec<Action> {
        let mut out = Vec::new();
        self.last_heard.insert(packet.src, now);
        match packet.kind {
            PacketKind::Rreq => self.on_rreq(now, packet, &mut out),
            PacketKind::Rrep => self.on_rrep(now, packet, &mut out),
            PacketKind::Rerr => self.on_rerr(now, packet, &mut out),
            PacketKind::Hello => {}
            PacketKind::Ack => self.on_ack(packet),
            PacketKind::Data => self.on_data(now, packet, &mut out),
        }
        out
    }

    /// A unicast addressed to another node, caught in promiscuous mode.
    pub fn overhear(&mut self, now: f64, packet: Packet) -> Vec<Action> {
        if !self.features.promiscuous {
            return Vec::new();
        }
        self.last_heard.insert(packet.src, now);
        match packet.kind {
            PacketKind::Data => {
                let key = packet.data_key();
                if self.awaiting.get(&key).is_some_and(|w| w.next_hop == packet.src) {
                    self.awaiting.remove(&key);
                }
                self.learn_source_route(now, &packet);
            }
            PacketKind::Rrep => self.learn_source_route(now, &packet),
            PacketKind::Rerr => {
                if let Some((a, b)) = packet.broken_link {
                    self.cache.remove_link(a, b);
                }
            }
            _ => {}
        }
        Vec::new()
    }

    pub fn timer(&mut self, now: f64, timer: Timer) -> Vec<Action> {
        let mut out = Vec::new();
        match timer {
            Timer::Discovery { target, rreq_id } => self.on_discovery_timeout(now, target, rreq_id, &mut out),
            Timer::Hello => self.hello_tick_into(now, &mut out),
            Timer::Ack { origin, id, attempt } => self.on_ack_timeout(now, (origin, id), attempt, &mut out),
        }
        out
    }

    /// One HELLO to each neighbour on an active route, and liveness checks.
    pub fn hello_tick(&mut self, now: f64) -> Vec<Action> {
        let mut out = Vec::new();
        self.hello_tick_into(now, &mut out);
        out
    }

    pub fn link_break(&mut self, now: f64, neighbor: NodeId) -> Vec<Action> {
        let mut out = Vec::new();
        self.on_link_break(now, neighbor, &mut out);
        out
    }

    // ---- discovery ----

    fn start_discovery(&mut self, now: f64, target: NodeId, repair_ttl: Option<u32>, out: &mut Vec<Action>) {
        let (ttl, timeout) = match repair_ttl {
            Some(ttl) => (ttl, self.params.ring_timeout(ttl)),
            None => (
                self.schedule.ttl(0).expect("schedule has at least one attempt"),
                self.schedule.timeout(0, &self.params),
            ),
        };
        let rreq_id = self.send_rreq(now, target, ttl, out);
        self.pending.insert(
            target,
            Discovery {
                rreq_id,
                attempt: 0,
                repair: repair_ttl.is_some(),
            },
        );
        out.push(Action::Schedule {
            delay: timeout,
            timer: Timer::Discovery { target, rreq_id },
        });
    }

    fn send_rreq(&mut self, now: f64, target: NodeId, ttl: u32, out: &mut Vec<Action>) -> u64 {
        self.seq = self.seq.wrapping_add(1);
        let id = self.next_rreq_id;
        self.next_rreq_id += 1;
        self.seen_rreq.insert((self.id, id));
        let mut p = Packet::new(PacketKind::Rreq, self.id, target);
        p.ttl = ttl;
        p.id = id;
        p.origin_seq = self.seq;
        p.dst_seq = self.table.get(target).map_or(0, |e| e.dst_seq);
        p.created_at = now;
        if self.features.source_routing {
            p.route = vec![self.id];
        }
        out.push(Action::Transmit(p));
        id
    }

    fn on_discovery_timeout(&mut self, now: f64, target: NodeId, rreq_id: u64, out: &mut Vec<Action>) {
        let Some(d) = self.pending.get(&target) else { return };
        if d.rreq_id != rreq_id {
            return;
        }
        if d.repair {
            self.repair_failed(now, target, out);
            return;
        }
        let attempt = d.attempt + 1;
        match self.schedule.ttl(attempt) {
            Some(ttl) => {
                let id = self.send_rreq(now, target, ttl, out);
                self.pending.insert(
                    target,
                    Discovery {
                        rreq_id: id,
                        attempt,
                        repair: false,
                    },
                );
                out.push(Action::Schedule {
                    delay: self.schedule.timeout(attempt, &self.params),
                    timer: Timer::Discovery { target, rreq_id: id },
                });
            }
            None => {
                self.pending.remove(&target);
                self.drop_queue(target, DropReason::DiscoveryFailed, out);
                out.push(Action::DiscoveryFailed { target });
            }
        }
    }

    fn repair_failed(&mut self, now: f64, target: NodeId, out: &mut Vec<Action>) {
        self.pending.remove(&target);
        self.drop_queue(target, DropReason::RepairFailed, out);
        let sources = self.repairs.remove(&target).unwrap_or_default();
        for s in sources {
            if s != self.id {
                self.send_rerr(now, s, vec![target], out);
            }
        }
    }

    fn on_rreq(&mut self, now: f64, p: Packet, out: &mut Vec<Action>) {
        if p.origin == self.id {
            return;
        }
        let key = (p.origin, p.id);
        if !self.seen_rreq.insert(key) {
            // Duplicates are dropped, except that a caching destination
            // answers a few extra copies to learn alternate paths.
            if self.uses_cache() && p.target == self.id {
                let sent = self.replies_sent.entry(key).or_insert(0);
                if *sent < self.params.max_destination_replies {
                    *sent += 1;
                    self.learn_from_rreq(now, &p);
                    self.reply_as_destination(now, &p, out);
                }
            }
            return;
        }
        self.learn_from_rreq(now, &p);
        if p.target == self.id {
            self.replies_sent.insert(key, 1);
            self.reply_as_destination(now, &p, out);
            return;
        }
        if self.features.gratuitous_rrep && self.try_gratuitous_reply(now, &p, out) {
            return;
        }
        if p.ttl > 1 {
            let mut q = p;
            q.src = self.id;
            q.next_hop = None;
            q.ttl -= 1;
            q.hops += 1;
            if self.features.source_routing {
                q.route.push(self.id);
            }
            out.push(Action::Transmit(q));
        }
    }

    fn learn_from_rreq(&mut self, now: f64, p: &Packet) {
        let lifetime = self.lifetime();
        if self.uses_cache() {
            if !p.route.is_empty() {
                let limit = self.params.cache_routes_per_destination;
                self.cache
                    .learn(self.id, &p.route, p.route.len() - 1, now, lifetime, limit);
            }
            return;
        }
        self.offer(p.origin, p.src, p.hops + 1, p.origin_seq, now);
        if self.features.source_routing && !p.route.is_empty() {
            let back: Vec<NodeId> = std::iter::once(self.id).chain(p.route.iter().rev().copied()).collect();
            self.learn_path_in_table(&back, now);
        }
    }

    /// Table routes to every node on `path` (self first) through `path[1]`.
    /// Nodes other than the endpoints carry no sequence number.
    fn learn_path_in_table(&mut self, path: &[NodeId], now: f64) {
        if path.len() < 3 || path[0] != self.id || !super::table::is_loop_free(path) {
            return;
        }
        for (j, node) in path.iter().enumerate().skip(1).take(path.len() - 2) {
            if self.table.usable(*node, now).is_none() {
                self.offer(*node, path[1], j as u32, 0, now);
            }
        }
    }

    fn offer(&mut self, dst: NodeId, next_hop: NodeId, hops: u32, seq: u32, now: f64) -> bool {
        if dst == self.id || next_hop == self.id {
            return false;
        }
        let lifetime = self.lifetime();
        self.table.offer(dst, next_hop, hops, seq, now, lifetime)
    }

    fn reply_as_destination(&mut self, now: f64, p: &Packet, out: &mut Vec<Action>) {
        self.seq = self.seq.max(p.dst_seq).wrapping_add(1);
        let mut r = Packet::new(PacketKind::Rrep, self.id, p.origin);
        r.target = self.id;
        r.dst_seq = self.seq;
        r.id = p.id;
        r.created_at = now;
        if self.features.source_routing {
            r.route = p.route.clone();
            r.route.push(self.id);
        }
        let next = if self.uses_cache() {
            p.src
        } else {
            self.table.usable(p.origin, now).map_or(p.src, |e| e.next_hop)
        };
        r.next_hop = Some(next);
        out.push(Action::Transmit(r));
    }

    fn try_gratuitous_reply(&mut self, now: f64, p: &Packet, out: &mut Vec<Action>) -> bool {
        let mut r = Packet::new(PacketKind::Rrep, self.id, p.origin);
        r.target = p.target;
        r.id = p.id;
        r.gratuitous = true;
        r.created_at = now;
        r.next_hop = Some(p.src);
        if self.uses_cache() {
            let Some(cached) = self.cache.best(p.target, now) else {
                return false;
            };
            if cached.path[1..].iter().any(|n| p.route.contains(n)) {
                return false;
            }
            r.hops = cached.hops() as u32;
            r.route = p.route.iter().chain(cached.path.iter()).copied().collect();
        } else {
            let Some(e) = self.table.usable(p.target, now) else {
                return false;
            };
            if e.dst_seq < p.dst_seq || e.next_hop == p.src || e.next_hop == p.origin {
                return false;
            }
            r.hops = e.hops;
            r.dst_seq = e.dst_seq;
            if self.features.source_routing {
                r.route = p.route.clone();
                r.route.push(self.id);
            }
            if let Some(back) = self.table.usable(p.origin, now) {
                r.next_hop = Some(back.next_hop);
            }
            self.mark_active(now, p.target, Some(p.origin));
        }
        out.push(Action::Transmit(r));
        true
    }

    fn on_rrep(&mut self, now: f64, p: Packet, out: &mut Vec<Action>) {
        if self.uses_cache() {
            self.learn_source_route(now, &p);
            if p.dst == self.id {
                if self.pending.get(&p.target).is_some_and(|d| !d.repair) {
                    self.pending.remove(&p.target);
                    self.flush(now, p.target, out);
                }
                return;
            }
            let Some(k) = p.route.iter().position(|n| *n == self.id) else {
                return;
            };
            if k == 0 {
                return;
            }
            let mut q = p;
            q.next_hop = Some(q.route[k - 1]);
            q.src = self.id;
            q.hops += 1;
            out.push(Action::Transmit(q));
            return;
        }

        if p.dst == self.id {
            // Only the first reply to an outstanding discovery is taken.
            let Some(d) = self.pending.get(&p.target) else { return };
            let repair = d.repair;
            self.pending.remove(&p.target);
            self.offer(p.target, p.src, p.hops + 1, p.dst_seq, now);
            self.learn_rrep_record(now, &p);
            if repair {
                if let Some(sources) = self.repairs.remove(&p.target) {
                    if let Some(e) = self.table.get_mut(p.target) {
                        e.sources.extend(sources);
                    }
                }
            }
            self.flush(now, p.target, out);
            return;
        }

        self.offer(p.target, p.src, p.hops + 1, p.dst_seq, now);
        self.learn_rrep_record(now, &p);
        let Some(back) = self.table.usable(p.dst, now).map(|e| e.next_hop) else {
            return;
        };
        self.mark_active(now, p.target, Some(p.dst));
        self.mark_active(now, p.dst, None);
        let mut q = p;
        q.src = self.id;
        q.next_hop = Some(back);
        q.hops += 1;
        out.push(Action::Transmit(q));
    }

    fn learn_rrep_record(&mut self, now: f64, p: &Packet) {
        if !self.features.source_routing || p.route.is_empty() {
            return;
        }
        // Nodes between the transmitter and the advertised destination.
        if let Some(k) = p.route.iter().position(|n| *n == p.src) {
            let fwd: Vec<NodeId> = std::iter::once(self.id).chain(p.route[k..].iter().copied()).collect();
            self.learn_path_in_table(&fwd, now);
        }
    }

    fn learn_source_route(&mut self, now: f64, p: &Packet) {
        if !self.uses_cache() || p.route.is_empty() {
            return;
        }
        let Some(tx) = p.route.iter().position(|n| *n == p.src) else {
            return;
        };
        let limit = self.params.cache_routes_per_destination;
        let lifetime = self.lifetime();
        self.cache.learn(self.id, &p.route, tx, now, lifetime, limit);
    }

    // ---- errors ----

    fn send_rerr(&mut self, now: f64, source: NodeId, unreachable: Vec<NodeId>, out: &mut Vec<Action>) {
        let Some(e) = self.table.usable(source, now) else {
            return;
        };
        let mut r = Packet::new(PacketKind::Rerr, self.id, source);
        r.next_hop = Some(e.next_hop);
        r.unreachable = unreachable;
        r.created_at = now;
        out.push(Action::Transmit(r));
    }

    fn on_rerr(&mut self, now: f64, p: Packet, out: &mut Vec<Action>) {
        if self.uses_cache() {
            if let Some((a, b)) = p.broken_link {
                self.cache.remove_link(a, b);
            }
            if p.dst == self.id {
                return;
            }
            let Some(k) = p.route.iter().position(|n| *n == self.id) else {
                return;
            };
            if k + 1 < p.route.len() {
                let mut q = p;
                q.next_hop = Some(q.route[k + 1]);
                q.src = self.id;
                out.push(Action::Transmit(q));
            }
            return;
        }

        let mut notify: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for u in &p.unreachable {
            let Some(e) = self.table.get(*u) else { continue };
            if !e.is_usable(now) || e.next_hop != p.src {
                continue;
            }
            let sources = e.sources.clone();
            self.table.invalidate(*u);
            for s in sources {
                if s != self.id {
                    notify.entry(s).or_default().push(*u);
                }
            }
        }
        // Propagates only past nodes that lost a route, so it cannot cycle.
        for (s, us) in notify {
            self.send_rerr(now, s, us, out);
        }
    }

    // ---- data ----

    fn route_available(&self, dst: NodeId, now: f64) -> bool {
        if self.uses_cache() {
            self.cache.best(dst, now).is_some()
        } else {
            self.table.usable(dst, now).is_some() && !self.repairs.contains_key(&dst)
        }
    }

    fn enqueue(&mut self, data: Packet, out: &mut Vec<Action>) {
        let q = self.queue.entry(data.dst).or_default();
        if q.len() >= self.params.queue_limit {
            out.push(Action::Drop {
                packet: data,
                reason: DropReason::QueueFull,
            });
        } else {
            q.push_back(data);
        }
    }

    fn drop_queue(&mut self, dst: NodeId, reason: DropReason, out: &mut Vec<Action>) {
        for packet in self.queue.remove(&dst).unwrap_or_default() {
            out.push(Action::Drop { packet, reason });
        }
    }

    fn flush(&mut self, now: f64, dst: NodeId, out: &mut Vec<Action>) {
        for p in self.queue.remove(&dst).unwrap_or_default() {
            self.route_data(now, p, out);
        }
    }

    /// Send a packet whose `hops` is already set, picking the next hop from
    /// the store (or the cached source route at its origin).
    fn route_data(&mut self, now: f64, mut p: Packet, out: &mut Vec<Action>) {
        if self.uses_cache() {
            let Some(route) = self.cache.best(p.dst, now).map(|r| r.path.clone()) else {
                out.push(Action::Drop {
                    packet: p,
                    reason: DropReason::NoRoute,
                });
                return;
            };
            if self.monitor == LinkMonitor::Ack {
                let limit = self.params.cache_routes_per_destination;
                self.cache.add(route.clone(), now, self.lifetime(), limit);
            }
            let next = route[1];
            p.route = route;
            self.transmit_data(p, next, out);
            return;
        }
        let Some(next) = self.table.usable(p.dst, now).map(|e| e.next_hop) else {
            out.push(Action::Drop {
                packet: p,
                reason: DropReason::NoRoute,
            });
            return;
        };
        self.mark_active(now, p.dst, Some(p.origin));
        if p.origin != self.id {
            self.mark_active(now, p.origin, None);
        }
        self.transmit_data(p, next, out);
    }

    fn transmit_data(&mut self, mut p: Packet, next: NodeId, out: &mut Vec<Action>) {
        p.src = self.id;
        p.next_hop = Some(next);
        if self.features.ack_link_monitor {
            let (origin, id) = p.data_key();
            self.awaiting.insert(
                (origin, id),
                AckWait {
                    packet: p.clone(),
                    next_hop: next,
                    attempt: 0,
                },
            );
            out.push(Action::Schedule {
                delay: self.params.ack_timeout,
                timer: Timer::Ack { origin, id, attempt: 0 },
            });
        }
        out.push(Action::Transmit(p));
    }

    fn mark_active(&mut self, now: f64, dst: NodeId, source: Option<NodeId>) {
        let refresh = self.monitor != LinkMonitor::RouteTimeout;
        let lifetime = self.lifetime();
        let Some(e) = self.table.get_mut(dst) else { return };
        if !e.is_usable(now) {
            return;
        }
        e.active = true;
        if let Some(s) = source {
            e.sources.insert(s);
        }
        if refresh {
            e.expiry = e.expiry.max(now + lifetime);
        }
        let next = e.next_hop;
        self.last_heard.entry(next).or_insert(now);
    }

    fn send_ack(&self, now: f64, data: &Packet, out: &mut Vec<Action>) {
        let mut a = Packet::new(PacketKind::Ack, data.origin, data.src);
        a.src = self.id;
        a.next_hop = Some(data.src);
        a.id = data.id;
        a.created_at = now;
        out.push(Action::Transmit(a));
    }

    fn on_data(&mut self, now: f64, p: Packet, out: &mut Vec<Action>) {
        let duplicate = !self.seen_data.insert(p.data_key());
        if self.features.ack_link_monitor && (duplicate || p.dst == self.id || !self.features.promiscuous) {
            self.send_ack(now, &p, out);
        }
        if duplicate {
            return;
        }
        if self.uses_cache() {
            self.learn_source_route(now, &p);
        } else if self.table.usable(p.origin, now).is_none() {
            self.offer(p.origin, p.src, p.hops + 1, 0, now);
        }
        if p.dst == self.id {
            self.mark_active(now, p.origin, None);
            out.push(Action::Deliver(p));
            return;
        }

        let mut q = p;
        q.hops += 1;
        if self.uses_cache() {
            let next = q
                .route
                .iter()
                .position(|n| *n == self.id)
                .and_then(|k| q.route.get(k + 1))
                .copied();
            match next {
                Some(next) => self.transmit_data(q, next, out),
                None => out.push(Action::Drop {
                    packet: q,
                    reason: DropReason::NoRoute,
                }),
            }
            return;
        }
        if self.repairs.contains_key(&q.dst) {
            self.enqueue(q, out);
        } else if self.table.usable(q.dst, now).is_some() {
            self.route_data(now, q, out);
        } else {
            let (origin, dst) = (q.origin, q.dst);
            out.push(Action::Drop {
                packet: q,
                reason: DropReason::NoRoute,
            });
            self.send_rerr(now, origin, vec![dst], out);
        }
    }

    fn on_ack(&mut self, p: Packet) {
        let key = (p.origin, p.id);
        if self.awaiting.get(&key).is_some_and(|w| w.next_hop == p.src) {
            self.awaiting.remove(&key);
        }
    }

    fn on_ack_timeout(&mut self, now: f64, key: (NodeId, u64), attempt: u32, out: &mut Vec<Action>) {
        let Some(w) = self.awaiting.get_mut(&key) else { return };
        if w.attempt != attempt {
            return;
        }
        if attempt == 0 {
            w.attempt = 1;
            let packet = w.packet.clone();
            out.push(Action::Schedule {
                delay: self.params.ack_timeout,
                timer: Timer::Ack {
                    origin: key.0,
                    id: key.1,
                    attempt: 1,
                },
            });
            out.push(Action::Transmit(packet));
            return;
        }
        let Some(w) = self.awaiting.remove(&key) else { return };
        let nb = w.next_hop;
        if self.uses_cache() && w.packet.origin != self.id {
            if let Some(k) = w.packet.route.iter().position(|n| *n == self.id) {
                let back: Vec<NodeId> = w.packet.route[..=k].iter().rev().copied().collect();
                if back.len() >= 2 {
                    let mut r = Packet::new(PacketKind::Rerr, self.id, w.packet.origin);
                    r.next_hop = Some(back[1]);
                    r.route = back;
                    r.broken_link = Some((self.id, nb));
                    r.created_at = now;
                    out.push(Action::Transmit(r));
                }
            }
        }
        out.push(Action::Drop {
            packet: w.packet,
            reason: DropReason::LinkBreak,
        });
        self.on_link_break(now, nb, out);
    }

    // ---- monitoring ----

    fn hello_tick_into(&mut self, now: f64, out: &mut Vec<Action>) {
        if !self.features.periodic_hello {
            return;
        }
        let interval = self.params.hello_interval;
        let allowed = f64::from(self.params.allowed_hello_loss) * interval;
        let neighbors: BTreeSet<NodeId> = if self.uses_cache() {
            self.cache
                .iter()
                .filter(|r| r.expiry > now)
                .map(|r| r.path[1])
                .collect()
        } else {
            self.table.active_neighbors(now)
        };
        let mut broken = Vec::new();
        for nb in neighbors {
            let last = *self.last_heard.entry(nb).or_insert(now);
            if now - last > allowed {
                broken.push(nb);
            } else {
                let mut h = Packet::new(PacketKind::Hello, self.id, nb);
                h.next_hop = Some(nb);
                h.ttl = 1;
                h.created_at = now;
                out.push(Action::Transmit(h));
            }
        }
        for nb in broken {
            self.on_link_break(now, nb, out);
        }
        out.push(Action::Schedule {
            delay: interval,
            timer: Timer::Hello,
        });
    }

    fn on_link_break(&mut self, now: f64, nb: NodeId, out: &mut Vec<Action>) {
        self.last_heard.remove(&nb);
        if self.uses_cache() {
            self.cache.remove_link(self.id, nb);
            return;
        }
        let mut notify: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for dst in self.table.destinations_via(nb, now) {
            let was_active = self.table.get(dst).is_some_and(|e| e.active);
            let Some(e) = self.table.invalidate(dst) else { continue };
            if !was_active {
                continue;
            }
            let repairable = self.features.local_repair
                && e.hops <= self.params.local_repair_max_hops
                && !e.sources.contains(&self.id)
                && !self.pending.contains_key(&dst);
            if repairable {
                self.repairs.insert(dst, e.sources.clone());
                self.start_discovery(now, dst, Some(e.hops + self.params.local_add_ttl), out);
            } else {
                for s in e.sources {
                    if s != self.id {
                        notify.entry(s).or_default().push(dst);
                    }
                }
            }
        }
        for (s, us) in notify {
            self.send_rerr(now, s, us, out);
        }
    }
}
