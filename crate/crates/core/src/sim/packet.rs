use serde::{Deserialize, Serialize};

use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PacketKind {
    Rreq,
    Rrep,
    Rerr,
    Hello,
    Ack,
    Data,
}

impl PacketKind {
    pub const ALL: [PacketKind; 6] = [
        PacketKind::Rreq,
        PacketKind::Rrep,
        PacketKind::Rerr,
        PacketKind::Hello,
        PacketKind::Ack,
        PacketKind::Data,
    ];

    pub fn is_routing(self) -> bool {
        self != PacketKind::Data
    }

    fn base_size(self) -> u32 {
        match self {
            PacketKind::Rreq => 48,
            PacketKind::Rrep => 44,
            PacketKind::Rerr => 32,
            PacketKind::Hello => 20,
            PacketKind::Ack => 16,
            PacketKind::Data => DEFAULT_DATA_SIZE,
        }
    }
}

pub const DEFAULT_DATA_SIZE: u32 = 512;
/// Bytes per address carried in a route record or an unreachable list.
pub const ADDRESS_BYTES: u32 = 4;

/// A packet on the air.
///
/// `origin` is the node that created the packet and `dst` the node it is
/// ultimately for; `src` and `next_hop` are the per-hop link addresses
/// (`next_hop == None` is a broadcast). `target` names the destination a
/// control packet is about: the sought node of a RREQ, the advertised node
/// of a RREP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Packet {
    pub kind: PacketKind,
    pub src: NodeId,
    pub next_hop: Option<NodeId>,
    pub origin: NodeId,
    pub dst: NodeId,
    pub target: NodeId,
    pub ttl: u32,
    pub hops: u32,
    /// RREQ id for discovery packets, run-unique sequence for DATA.
    pub id: u64,
    pub origin_seq: u32,
    pub dst_seq: u32,
    /// Route record (RREQ/RREP of source-routing protocols) or source route
    /// (DATA/RERR of route-cache protocols).
    pub route: Vec<NodeId>,
    pub unreachable: Vec<NodeId>,
    pub broken_link: Option<(NodeId, NodeId)>,
    pub gratuitous: bool,
    pub payload: u32,
    pub created_at: f64,
}

impl Packet {
    pub fn new(kind: PacketKind, origin: NodeId, dst: NodeId) -> Self {
        Packet {
            kind,
            src: origin,
            next_hop: None,
            origin,
            dst,
            target: dst,
            ttl: 0,
            hops: 0,
            id: 0,
            origin_seq: 0,
            dst_seq: 0,
            route: Vec::new(),
            unreachable: Vec::new(),
            broken_link: None,
            gratuitous: false,
            payload: 0,
            created_at: 0.0,
        }
    }

    pub fn data(origin: NodeId, dst: NodeId, id: u64, payload: u32, created_at: f64) -> Self {
        Packet {
            id,
            payload,
            created_at,
            ..Packet::new(PacketKind::Data, origin, dst)
        }
    }

    /// Size on the air in bytes.
    pub fn size(&self) -> u32 {
        let addresses = (self.route.len() + self.unreachable.len()) as u32 * ADDRESS_BYTES;
        match self.kind {
            PacketKind::Data => self.payload + addresses,
            kind => kind.base_size() + addresses,
        }
    }

    pub fn is_broadcast(&self) -> bool {
        self.next_hop.is_none()
    }

    /// Key identifying one DATA packet across hops and retransmissions.
    pub fn data_key(&self) -> (NodeId, u64) {
        (self.origin, self.id)
    }
}
