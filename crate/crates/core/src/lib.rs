//! Routing-load model and simulator for reactive routing in wireless
//! multihop networks.
//!
//! The crate has two halves that cross-check each other:
//!
//! * a closed-form overhead model ([`overhead`]) with its parameter
//!   sensitivities ([`sensitivity`]), evaluated on lattice topologies
//!   ([`grid`]);
//! * a deterministic discrete-event simulator ([`sim`]) hosting simplified
//!   AODV, DSR and DYMO control planes ([`protocols`]) and reporting
//!   throughput, delay and routing load ([`metrics`]).
//!
//! [`experiment`] ties both to config files, sweeps and CSV output.

pub mod error;
pub mod experiment;
pub mod grid;
pub mod metrics;
pub mod overhead;
pub mod protocols;
pub mod sensitivity;
pub mod sim;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};

/// Identifier of a node, dense from zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}
