use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mobility::Arena;
use super::packet::DEFAULT_DATA_SIZE;
use crate::error::{invalid, Result};
use crate::grid::{BlackoutRegion, GridNetwork};
use crate::protocols::ProtocolParams;
use crate::NodeId;

/// Initial node positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Placement {
    /// `nodes` uniform points in the arena.
    Random,
    /// Alive cells of a lattice at `(col · spacing, row · spacing)`; node ids
    /// follow row-major order of the alive cells. Overrides `nodes`.
    Grid {
        rows: usize,
        cols: usize,
        spacing: f64,
        #[serde(default)]
        blackouts: Vec<BlackoutRegion>,
    },
    /// `nodes` points along the x axis, `spacing` apart.
    Line { spacing: f64 },
    /// Fixed coordinates. Overrides `nodes`.
    Explicit { positions: Vec<[f64; 2]> },
}

/// One constant-bit-rate flow between fixed endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub src: u32,
    pub dst: u32,
    /// Packets per second; defaults to the flow set's rate.
    #[serde(default)]
    pub rate: Option<f64>,
    #[serde(default)]
    pub start: Option<f64>,
    /// Stop after this many packets.
    #[serde(default)]
    pub packets: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    /// Random distinct-endpoint flows drawn when `explicit` is empty.
    pub count: usize,
    /// Packets per second per flow.
    pub rate: f64,
    /// Random flows start at `start` plus a uniform offset below one packet
    /// interval.
    pub start: f64,
    /// Last generation time; defaults to the run duration.
    pub stop: Option<f64>,
    pub explicit: Vec<FlowSpec>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            count: 10,
            rate: 4.0,
            start: 1.0,
            stop: None,
            explicit: Vec::new(),
        }
    }
}

/// A resolved flow.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Flow {
    pub src: NodeId,
    pub dst: NodeId,
    pub interval: f64,
    pub start: f64,
    pub stop: f64,
    pub packets: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub nodes: usize,
    /// Width and height, meters.
    pub arena: [f64; 2],
    /// Random-waypoint speed, m/s; 0 is static.
    pub speed: f64,
    /// bits/s
    pub bandwidth: f64,
    pub radio_range: f64,
    /// Seconds of simulated time.
    pub duration: f64,
    pub seed: u64,
    pub protocol: String,
    pub placement: Placement,
    pub flows: FlowConfig,
    /// DATA payload, bytes.
    pub data_size: u32,
    /// Upper bound of the uniform delay added to each broadcast, seconds.
    pub jitter: f64,
    pub propagation_delay: f64,
    /// Mobility update period, seconds.
    pub mobility_step: f64,
    /// Seed shortest-path routes for every flow at t = 0 that never expire.
    pub preinstall_routes: bool,
    pub params: ProtocolParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl ScenarioConfig {
    /// 50 walking-speed nodes on a 1 km square at 2 Mbps.
    pub fn reference() -> Self {
        ScenarioConfig {
            nodes: 50,
            arena: [1000.0, 1000.0],
            ..Self::desk()
        }
    }

    /// 25 nodes for 300 s on a square of about the same node density.
    pub fn desk() -> Self {
        ScenarioConfig {
            nodes: 25,
            arena: [700.0, 700.0],
            speed: 2.0,
            bandwidth: 2e6,
            radio_range: 250.0,
            duration: 300.0,
            seed: 1,
            protocol: "AODV".into(),
            placement: Placement::Random,
            flows: FlowConfig::default(),
            data_size: DEFAULT_DATA_SIZE,
            jitter: 1e-3,
            propagation_delay: 1e-6,
            mobility_step: 0.5,
            preinstall_routes: false,
            params: ProtocolParams::default(),
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "reference" => Ok(Self::reference()),
            "desk" => Ok(Self::desk()),
            other => Err(invalid(format!(
                "unknown scenario preset '{other}' (expected reference or desk)"
            ))),
        }
    }

    pub fn arena(&self) -> Arena {
        Arena {
            width: self.arena[0],
            height: self.arena[1],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("arena width", self.arena[0]),
            ("arena height", self.arena[1]),
            ("bandwidth", self.bandwidth),
            ("radio_range", self.radio_range),
            ("duration", self.duration),
            ("mobility_step", self.mobility_step),
            ("flow rate", self.flows.rate),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("speed", self.speed),
            ("jitter", self.jitter),
            ("propagation_delay", self.propagation_delay),
            ("flow start", self.flows.start),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.data_size == 0 {
            return Err(invalid("data_size must be positive"));
        }
        self.params.validate()?;
        let n = self.node_count()?;
        if n < 2 {
            return Err(invalid(format!("a scenario needs at least 2 nodes, got {n}")));
        }
        if let Placement::Grid { spacing, .. } | Placement::Line { spacing } = &self.placement {
            if !(spacing.is_finite() && *spacing > 0.0) {
                return Err(invalid(format!("placement spacing must be positive, got {spacing}")));
            }
        }
        for f in &self.flows.explicit {
            if f.src == f.dst || f.src as usize >= n || f.dst as usize >= n {
                return Err(invalid(format!("flow {} -> {} invalid for {} nodes", f.src, f.dst, n)));
            }
            if f.rate.is_some_and(|r| !(r.is_finite() && r > 0.0)) {
                return Err(invalid("flow rate must be positive"));
            }
        }
        Ok(())
    }

    fn grid(rows: usize, cols: usize, spacing: f64, blackouts: &[BlackoutRegion]) -> Result<GridNetwork> {
        let mut g = GridNetwork::build(rows, cols, spacing)?;
        for b in blackouts {
            g = g.apply_blackout(b)?;
        }
        Ok(g)
    }

    pub fn node_count(&self) -> Result<usize> {
        Ok(match &self.placement {
            Placement::Random | Placement::Line { .. } => self.nodes,
            Placement::Grid {
                rows,
                cols,
                spacing,
                blackouts,
            } => Self::grid(*rows, *cols, *spacing, blackouts)?.node_count(),
            Placement::Explicit { positions } => positions.len(),
        })
    }

    /// Initial positions; random placement draws from `rng`.
    pub fn positions<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<[f64; 2]>> {
        let arena = self.arena();
        let pts: Vec<[f64; 2]> = match &self.placement {
            Placement::Random => (0..self.nodes).map(|_| arena.random_point(rng)).collect(),
            Placement::Line { spacing } => (0..self.nodes).map(|i| [i as f64 * spacing, 0.0]).collect(),
            Placement::Grid {
                rows,
                cols,
                spacing,
                blackouts,
            } => {
                let g = Self::grid(*rows, *cols, *spacing, blackouts)?;
                g.alive_nodes()
                    .map(|id| {
                        let (x, y) = g.position(id);
                        [x, y]
                    })
                    .collect()
            }
            Placement::Explicit { positions } => positions.clone(),
        };
        if let Some(p) = pts.iter().find(|p| !arena.contains(**p)) {
            return Err(invalid(format!(
                "node position {p:?} lies outside the {:?} arena",
                self.arena
            )));
        }
        Ok(pts)
    }

    /// Explicit flows as given, otherwise `count` random flows with
    /// distinct endpoints.
    pub fn resolve_flows<R: Rng + ?Sized>(&self, node_count: usize, rng: &mut R) -> Vec<Flow> {
        let fc = &self.flows;
        let stop = fc.stop.unwrap_or(self.duration).min(self.duration);
        if !fc.explicit.is_empty() {
            return fc
                .explicit
                .iter()
                .map(|f| Flow {
                    src: NodeId(f.src),
                    dst: NodeId(f.dst),
                    interval: 1.0 / f.rate.unwrap_or(fc.rate),
                    start: f.start.unwrap_or(fc.start),
                    stop,
                    packets: f.packets,
                })
                .collect();
        }
        let interval = 1.0 / fc.rate;
        let ids: Vec<u32> = (0..node_count as u32).collect();
        (0..fc.count)
            .map(|_| {
                let pair: Vec<u32> = ids.choose_multiple(rng, 2).copied().collect();
                Flow {
                    src: NodeId(pair[0]),
                    dst: NodeId(pair[1]),
                    interval,
                    start: fc.start + rng.random_range(0.0..interval),
                    stop,
                    packets: None,
                }
            })
            .collect()
    }
}
