use serde::{Deserialize, Serialize};

use super::mobility::{distance, MobileNode};
use super::Packet;
use crate::NodeId;

/// Unit-disk channel with an idealized MAC: no contention, no collisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Radio {
    pub range: f64,
    /// bits/s
    pub bandwidth: f64,
    pub propagation: f64,
}

impl Radio {
    /// Serialization plus propagation delay of one hop, before jitter.
    pub fn hop_delay(&self, size_bytes: u32) -> f64 {
        f64::from(size_bytes) * 8.0 / self.bandwidth + self.propagation
    }

    pub fn in_range(&self, a: [f64; 2], b: [f64; 2]) -> bool {
        distance(a, b) <= self.range
    }

    /// Every node other than `sender` within range of it.
    pub fn receivers<'a>(
        &'a self,
        sender: &'a MobileNode,
        nodes: &'a [MobileNode],
    ) -> impl Iterator<Item = NodeId> + 'a {
        nodes
            .iter()
            .filter(move |n| n.id != sender.id && self.in_range(sender.position, n.position))
            .map(|n| n.id)
    }

    /// Receivers of `packet`, split into the addressed ones and the rest.
    /// A broadcast addresses everyone in range.
    pub fn deliver(&self, sender: &MobileNode, nodes: &[MobileNode], packet: &Packet) -> (Vec<NodeId>, Vec<NodeId>) {
        let mut addressed = Vec::new();
        let mut overheard = Vec::new();
        for r in self.receivers(sender, nodes) {
            if packet.next_hop.is_none_or(|h| h == r) {
                addressed.push(r);
            } else {
                overheard.push(r);
            }
        }
        (addressed, overheard)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::PacketKind;

    fn at(i: u32, x: f64) -> MobileNode {
        MobileNode {
            id: NodeId(i),
            position: [x, 0.0],
            waypoint: [x, 0.0],
            speed: 0.0,
            range: 250.0,
        }
    }

    const RADIO: Radio = Radio {
        range: 250.0,
        bandwidth: 2e6,
        propagation: 0.0,
    };

    #[test]
    fn data_serialization_delay() {
        assert!((RADIO.hop_delay(512) - 2.048e-3).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_not_received() {
        let nodes = [at(0, 0.0), at(1, 300.0)];
        assert_eq!(RADIO.receivers(&nodes[0], &nodes).count(), 0);
    }

    #[test]
    fn broadcast_reaches_all_in_range() {
        let nodes = [at(0, 0.0), at(1, 10.0), at(2, 20.0)];
        let p = Packet::new(PacketKind::Rreq, NodeId(0), NodeId(2));
        let (addressed, overheard) = RADIO.deliver(&nodes[0], &nodes, &p);
        assert_eq!(addressed, vec![NodeId(1), NodeId(2)]);
        assert!(overheard.is_empty());
    }

    #[test]
    fn unicast_is_overheard_by_others() {
        let nodes = [at(0, 0.0), at(1, 10.0), at(2, 20.0)];
        let mut p = Packet::new(PacketKind::Data, NodeId(0), NodeId(2));
        p.next_hop = Some(NodeId(2));
        let (addressed, overheard) = RADIO.deliver(&nodes[0], &nodes, &p);
        assert_eq!(addressed, vec![NodeId(2)]);
        assert_eq!(overheard, vec![NodeId(1)]);
    }
}
