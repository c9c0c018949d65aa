//! Simplified AODV, DSR and DYMO control planes.
//!
//! All three are one state machine ([`Router`]) parameterized by a
//! [`ProtocolFeatureSet`]. The presets switch on each protocol's
//! characteristic mechanisms; custom sets can toggle any mechanism
//! for ablation runs.

mod router;
mod table;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use router::{Action, DropReason, Router, Timer};
pub use table::{CachedRoute, RouteCache, RouteEntry, RouteState, RoutingTable};

/// Where a protocol keeps learned routes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteStore {
    /// One next-hop entry per destination.
    RoutingTable,
    /// Several full source routes per destination.
    RouteCache,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Backoff {
    /// Wait before the first network-wide retry, seconds; doubles per retry.
    pub base: f64,
    pub max_retries: u32,
}

impl Default for Backoff {
    fn default() -> Self {
        Backoff {
            base: 0.5,
            max_retries: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolFeatureSet {
    pub name: String,
    pub source_routing: bool,
    pub store: RouteStore,
    pub multiple_routes: bool,
    pub gratuitous_rrep: bool,
    pub periodic_hello: bool,
    pub ack_link_monitor: bool,
    pub promiscuous: bool,
    pub local_repair: bool,
    pub check_store_before_discovery: bool,
    pub ers_enabled: bool,
    #[serde(default)]
    pub backoff: Backoff,
}

/// How a node notices that a next hop has gone away.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkMonitor {
    /// Missed HELLOs.
    Hello,
    /// Missing acknowledgement after one retransmission.
    Ack,
    /// Nothing; stale routes simply time out.
    RouteTimeout,
}

impl ProtocolFeatureSet {
    pub fn aodv() -> Self {
        ProtocolFeatureSet {
            name: "AODV".into(),
            source_routing: false,
            store: RouteStore::RoutingTable,
            multiple_routes: false,
            gratuitous_rrep: true,
            periodic_hello: true,
            ack_link_monitor: false,
            promiscuous: false,
            local_repair: true,
            check_store_before_discovery: true,
            ers_enabled: true,
            backoff: Backoff::default(),
        }
    }

    pub fn dsr() -> Self {
        ProtocolFeatureSet {
            name: "DSR".into(),
            source_routing: true,
            store: RouteStore::RouteCache,
            multiple_routes: true,
            gratuitous_rrep: true,
            periodic_hello: false,
            ack_link_monitor: true,
            promiscuous: true,
            local_repair: false,
            check_store_before_discovery: true,
            ers_enabled: true,
            backoff: Backoff::default(),
        }
    }

    pub fn dymo() -> Self {
        ProtocolFeatureSet {
            name: "DYMO".into(),
            source_routing: true,
            store: RouteStore::RoutingTable,
            multiple_routes: false,
            gratuitous_rrep: false,
            periodic_hello: false,
            ack_link_monitor: false,
            promiscuous: false,
            local_repair: false,
            check_store_before_discovery: false,
            ers_enabled: true,
            backoff: Backoff::default(),
        }
    }

    /// Look up a preset by case-insensitive name.
    pub fn preset(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "aodv" => Ok(Self::aodv()),
            "dsr" => Ok(Self::dsr()),
            "dymo" => Ok(Self::dymo()),
            other => Err(invalid(format!(
                "unknown protocol preset '{other}' (expected aodv, dsr or dymo)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.store == RouteStore::RouteCache && !self.source_routing {
            return Err(invalid(format!("{}: a route cache needs source routing", self.name)));
        }
        if !(self.backoff.base.is_finite() && self.backoff.base > 0.0) {
            return Err(invalid(format!("{}: backoff base must be positive", self.name)));
        }
        Ok(())
    }

    pub fn link_monitor(&self) -> LinkMonitor {
        if self.periodic_hello {
            LinkMonitor::Hello
        } else if self.ack_link_monitor {
            LinkMonitor::Ack
        } else {
            LinkMonitor::RouteTimeout
        }
    }
}

/// Protocol timers and limits. The feature sets do not pin any of these;
/// the defaults follow common simulator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolParams {
    pub hello_interval: f64,
    pub allowed_hello_loss: u32,
    pub route_timeout: f64,
    /// Expanding-ring TTLs below the network diameter.
    pub ers_ttls: Vec<u32>,
    pub net_diameter: u32,
    pub node_traversal_time: f64,
    pub timeout_buffer: u32,
    pub ack_timeout: f64,
    pub local_repair_max_hops: u32,
    pub local_add_ttl: u32,
    pub queue_limit: usize,
    pub cache_routes_per_destination: usize,
    pub max_destination_replies: u32,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams {
            hello_interval: 1.0,
            allowed_hello_loss: 2,
            route_timeout: 10.0,
            ers_ttls: vec![1, 3, 7],
            net_diameter: 10,
            node_traversal_time: 0.01,
            timeout_buffer: 2,
            ack_timeout: 0.05,
            local_repair_max_hops: 3,
            local_add_ttl: 2,
            queue_limit: 64,
            cache_routes_per_destination: 4,
            max_destination_replies: 3,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("hello_interval", self.hello_interval),
            ("route_timeout", self.route_timeout),
            ("node_traversal_time", self.node_traversal_time),
            ("ack_timeout", self.ack_timeout),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.net_diameter == 0 {
            return Err(invalid("net_diameter must be at least 1"));
        }
        if self.allowed_hello_loss == 0 || self.queue_limit == 0 || self.cache_routes_per_destination == 0 {
            return Err(invalid("hello loss, queue limit and cache size must be positive"));
        }
        Ok(())
    }

    /// Time to wait for a reply to a RREQ sent with `ttl`.
    pub fn ring_timeout(&self, ttl: u32) -> f64 {
        2.0 * self.node_traversal_time * f64::from(ttl + self.timeout_buffer)
    }
}

/// TTL progression and retry budget of one route discovery.
#[derive(Debug, Clone, PartialEq)]
pub struct ErsSchedule {
    ttls: Vec<u32>,
    backoff: Backoff,
}

impl ErsSchedule {
    pub fn new(ttls: Vec<u32>, backoff: Backoff) -> Result<Self> {
        if ttls.is_empty() {
            return Err(invalid("ERS schedule needs at least one TTL"));
        }
        if ttls.windows(2).any(|w| w[0] >= w[1]) || ttls[0] == 0 {
            return Err(invalid(format!(
                "ERS TTLs must be positive and strictly increasing: {ttls:?}"
            )));
        }
        Ok(ErsSchedule { ttls, backoff })
    }

    /// Ring TTLs below the diameter followed by the diameter itself, or just
    /// the diameter when expanding ring search is off.
    pub fn for_protocol(features: &ProtocolFeatureSet, params: &ProtocolParams) -> Result<Self> {
        let diameter = params.net_diameter;
        let mut ttls: Vec<u32> = if features.ers_enabled {
            params.ers_ttls.iter().copied().filter(|t| *t < diameter).collect()
        } else {
            Vec::new()
        };
        ttls.push(diameter);
        Self::new(ttls, features.backoff)
    }

    pub fn ttls(&self) -> &[u32] {
        &self.ttls
    }

    /// Total attempts: every ring plus the retries at full TTL.
    pub fn attempts(&self) -> usize {
        self.ttls.len() + self.backoff.max_retries as usize
    }

    /// TTL of attempt `k` (0-based); `None` once the budget is spent.
    pub fn ttl(&self, attempt: usize) -> Option<u32> {
        if attempt >= self.attempts() {
            None
        } else {
            Some(self.ttls[attempt.min(self.ttls.len() - 1)])
        }
    }

    /// How long attempt `k` waits for a reply.
    pub fn timeout(&self, attempt: usize, params: &ProtocolParams) -> f64 {
        let rings = self.ttls.len();
        if attempt < rings {
            params.ring_timeout(self.ttls[attempt])
        } else {
            let retry = (attempt - rings) as i32;
            self.backoff.base * 2f64.powi(retry)
        }
    }
}
