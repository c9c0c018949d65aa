use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RouteState {
    Valid,
    Invalid,
}

/// Next-hop route to one destination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteEntry {
    pub destination: NodeId,
    pub next_hop: NodeId,
    pub hops: u32,
    pub expiry: f64,
    pub state: RouteState,
    pub dst_seq: u32,
    /// Carried data or a reply; only active routes are link-monitored.
    pub active: bool,
    /// Originators whose data used this entry; they receive the RERR when
    /// it breaks.
    pub sources: BTreeSet<NodeId>,
}

impl RouteEntry {
    pub fn is_usable(&self, now: f64) -> bool {
        self.state == RouteState::Valid && now < self.expiry
    }
}

/// At most one entry per destination.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RoutingTable {
    entries: BTreeMap<NodeId, RouteEntry>,
}

impl RoutingTable {
    pub fn get(&self, dst: NodeId) -> Option<&RouteEntry> {
        self.entries.get(&dst)
    }

    pub fn get_mut(&mut self, dst: NodeId) -> Option<&mut RouteEntry> {
        self.entries.get_mut(&dst)
    }

    pub fn usable(&self, dst: NodeId, now: f64) -> Option<&RouteEntry> {
        self.entries.get(&dst).filter(|e| e.is_usable(now))
    }

    pub fn iter(&self) -> impl Iterator<Item = &RouteEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Install or update a route if it is fresher than what is held: a
    /// newer sequence number, the same number with fewer hops, or any
    /// offer replacing an unusable entry. Returns whether the entry now
    /// points at `next_hop`.
    pub fn offer(&mut self, dst: NodeId, next_hop: NodeId, hops: u32, seq: u32, now: f64, lifetime: f64) -> bool {
        let fresh = RouteEntry {
            destination: dst,
            next_hop,
            hops,
            expiry: now + lifetime,
            state: RouteState::Valid,
            dst_seq: seq,
            active: false,
            sources: BTreeSet::new(),
        };
        match self.entries.get_mut(&dst) {
            None => {
                self.entries.insert(dst, fresh);
                true
            }
            Some(e) => {
                let replace = !e.is_usable(now) || seq > e.dst_seq || (seq == e.dst_seq && hops < e.hops);
                if replace {
                    if e.next_hop == next_hop && e.is_usable(now) {
                        e.hops = hops;
                        e.dst_seq = seq;
                        e.expiry = e.expiry.max(fresh.expiry);
                    } else {
                        *e = fresh;
                    }
                    true
                } else if e.next_hop == next_hop && seq == e.dst_seq {
                    e.expiry = e.expiry.max(fresh.expiry);
                    true
                } else {
                    false
                }
            }
        }
    }

    /// Entry that never expires, for pre-provisioned routes.
    pub fn install_static(&mut self, dst: NodeId, next_hop: NodeId, hops: u32) {
        self.entries.insert(
            dst,
            RouteEntry {
                destination: dst,
                next_hop,
                hops,
                expiry: f64::INFINITY,
                state: RouteState::Valid,
                dst_seq: 0,
                active: false,
                sources: BTreeSet::new(),
            },
        );
    }

    pub fn refresh(&mut self, dst: NodeId, now: f64, lifetime: f64) {
        if let Some(e) = self.entries.get_mut(&dst) {
            if e.is_usable(now) {
                e.expiry = e.expiry.max(now + lifetime);
            }
        }
    }

    /// Mark invalid and bump the sequence number so stale copies elsewhere
    /// cannot answer for it.
    pub fn invalidate(&mut self, dst: NodeId) -> Option<RouteEntry> {
        let e = self.entries.get_mut(&dst)?;
        if e.state == RouteState::Invalid {
            return None;
        }
        e.state = RouteState::Invalid;
        e.active = false;
        e.dst_seq = e.dst_seq.wrapping_add(1);
        Some(e.clone())
    }

    /// Destinations whose usable entry forwards through `neighbor`.
    pub fn destinations_via(&self, neighbor: NodeId, now: f64) -> Vec<NodeId> {
        self.entries
            .values()
            .filter(|e| e.is_usable(now) && e.next_hop == neighbor)
            .map(|e| e.destination)
            .collect()
    }

    /// Neighbours this node shares an active, unexpired route link with.
    pub fn active_neighbors(&self, now: f64) -> BTreeSet<NodeId> {
        self.entries
            .values()
            .filter(|e| e.active && e.is_usable(now))
            .map(|e| e.next_hop)
            .collect()
    }
}

/// A full source route starting at the cache owner.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CachedRoute {
    pub path: Vec<NodeId>,
    pub expiry: f64,
}

impl CachedRoute {
    pub fn hops(&self) -> usize {
        self.path.len() - 1
    }

    pub fn uses_link(&self, a: NodeId, b: NodeId) -> bool {
        self.path
            .windows(2)
            .any(|w| (w[0] == a && w[1] == b) || (w[0] == b && w[1] == a))
    }
}

pub fn is_loop_free(path: &[NodeId]) -> bool {
    let mut seen = BTreeSet::new();
    path.iter().all(|n| seen.insert(*n))
}

/// Several source routes per destination.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RouteCache {
    routes: BTreeMap<NodeId, Vec<CachedRoute>>,
}

impl RouteCache {
    /// Cache `path` (owner first) unless it loops. The oldest route is
    /// evicted once `limit` routes to the destination are held.
    pub fn add(&mut self, path: Vec<NodeId>, now: f64, lifetime: f64, limit: usize) -> bool {
        if path.len() < 2 || !is_loop_free(&path) {
            return false;
        }
        let dst = path[path.len() - 1];
        let list = self.routes.entry(dst).or_default();
        list.retain(|r| r.expiry > now);
        let expiry = now + lifetime;
        if let Some(existing) = list.iter_mut().find(|r| r.path == path) {
            existing.expiry = existing.expiry.max(expiry);
            return true;
        }
        if list.len() >= limit {
            let oldest = list
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.expiry.total_cmp(&b.1.expiry))
                .map(|(i, _)| i);
            if let Some(i) = oldest {
                list.remove(i);
            }
        }
        list.push(CachedRoute { path, expiry });
        true
    }

    pub fn install_static(&mut self, path: Vec<NodeId>) {
        if path.len() >= 2 && is_loop_free(&path) {
            let dst = path[path.len() - 1];
            self.routes.entry(dst).or_default().push(CachedRoute {
                path,
                expiry: f64::INFINITY,
            });
        }
    }

    /// Shortest unexpired route to `dst`; ties go to the earliest cached.
    pub fn best(&self, dst: NodeId, now: f64) -> Option<&CachedRoute> {
        self.routes
            .get(&dst)?
            .iter()
            .filter(|r| r.expiry > now)
            .min_by_key(|r| r.hops())
    }

    pub fn routes_to(&self, dst: NodeId) -> &[CachedRoute] {
        self.routes.get(&dst).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = &CachedRoute> {
        self.routes.values().flatten()
    }

    pub fn len(&self) -> usize {
        self.routes.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drop every route crossing the link `a – b`; returns how many.
    pub fn remove_link(&mut self, a: NodeId, b: NodeId) -> usize {
        let mut removed = 0;
        for list in self.routes.values_mut() {
            let before = list.len();
            list.retain(|r| !r.uses_link(a, b));
            removed += before - list.len();
        }
        self.routes.retain(|_, l| !l.is_empty());
        removed
    }

    /// Harvest sub-routes from a source route `path` heard from the node at
    /// `transmitter` (an index into `path`).
    ///
    /// The owner is assumed adjacent to the transmitter and links are taken
    /// as bidirectional. When the owner is itself on the path its own
    /// position is used, so an addressed and an overheard copy of the same
    /// packet teach the same routes.
    pub fn learn(&mut self, owner: NodeId, path: &[NodeId], transmitter: usize, now: f64, lifetime: f64, limit: usize) {
        if transmitter >= path.len() {
            return;
        }
        let (forward, backward): (Vec<NodeId>, Vec<NodeId>) = match path.iter().position(|n| *n == owner) {
            Some(k) => (path[k..].to_vec(), path[..=k].iter().rev().copied().collect()),
            None => (
                std::iter::once(owner)
                    .chain(path[transmitter..].iter().copied())
                    .collect(),
                std::iter::once(owner)
                    .chain(path[..=transmitter].iter().rev().copied())
                    .collect(),
            ),
        };
        for route in [forward, backward] {
            for end in 1..route.len() {
                self.add(route[..=end].to_vec(), now, lifetime, limit);
            }
        }
    }
}
