use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{BlackoutRegion, GridNetwork};
use crate::overhead::{rreq_overhead, AnalyticalParams, CoverageIndexTable};
use crate::protocols::ProtocolFeatureSet;
use crate::sim::{FlowConfig, FlowSpec, Placement, ScenarioConfig, Simulation};
use crate::NodeId;

/// Grids to compare the three RREQ counters on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationSpec {
    /// `[rows, cols]` per grid, in the order used for the monotonicity check.
    pub grids: Vec<[usize; 2]>,
    pub spacing: f64,
    pub blackouts: Vec<BlackoutRegion>,
    /// `[row, col]`; defaults to the top-left corner.
    pub source: Option<[usize; 2]>,
    /// `[row, col]`; defaults to the opposite corner.
    pub destination: Option<[usize; 2]>,
    pub coverage: CoverageIndexTable,
    pub forward_prob: f64,
    pub protocol: String,
}

impl Default for ValidationSpec {
    fn default() -> Self {
        ValidationSpec {
            grids: vec![[3, 3], [4, 4], [5, 5], [6, 6]],
            spacing: 100.0,
            blackouts: Vec::new(),
            source: None,
            destination: None,
            coverage: CoverageIndexTable::default(),
            forward_prob: 1.0,
            protocol: "AODV".into(),
        }
    }
}

impl ValidationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grids.is_empty() {
            return Err(invalid("validation needs at least one grid"));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(invalid("grid spacing must be positive"));
        }
        if !(0.0..=1.0).contains(&self.forward_prob) {
            return Err(invalid("forward_prob outside [0, 1]"));
        }
        self.coverage.validate()?;
        ProtocolFeatureSet::preset(&self.protocol)?;
        Ok(())
    }
}

/// One grid's three RREQ counts. Counts are `None` when the endpoints are
/// not connected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub rows: usize,
    pub cols: usize,
    pub nodes: usize,
    pub reachable: bool,
    pub hops: Option<u32>,
    pub analytical: Option<f64>,
    pub oracle: Option<u64>,
    pub simulated: Option<u64>,
    pub analytical_over_oracle: Option<f64>,
    pub simulated_over_oracle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub rows: Vec<ValidationRow>,
    /// All three counters grow strictly from each reachable grid to the next.
    pub monotone_agreement: bool,
}

/// Static scenario reproducing one discovery on `grid`: zero jitter,
/// 4-neighbour radio range, TTL equal to the grid diameter and a single
/// packet from `src` to `dst`. Returns the scenario and the simulator ids of
/// the two endpoints.
pub fn static_grid_scenario(grid: &GridNetwork, src: NodeId, dst: NodeId) -> Result<(ScenarioConfig, NodeId, NodeId)> {
    let alive: Vec<NodeId> = grid.alive_nodes().collect();
    let sim_id = |g: NodeId| -> Result<NodeId> {
        alive
            .iter()
            .position(|a| *a == g)
            .map(|i| NodeId(i as u32))
            .ok_or_else(|| invalid(format!("grid node {g} is not alive")))
    };
    let (s, d) = (sim_id(src)?, sim_id(dst)?);
    let positions: Vec<[f64; 2]> = alive
        .iter()
        .map(|id| {
            let (x, y) = grid.position(*id);
            [x, y]
        })
        .collect();
    let spacing = grid.spacing();
    let mut cfg = ScenarioConfig::desk();
    cfg.arena = [
        (grid.cols().max(2) - 1) as f64 * spacing,
        (grid.rows().max(2) - 1) as f64 * spacing,
    ];
    cfg.placement = Placement::Explicit { positions };
    cfg.speed = 0.0;
    cfg.jitter = 0.0;
    cfg.radio_range = 1.2 * spacing;
    cfg.duration = 10.0;
    cfg.params.net_diameter = grid.diameter().max(1);
    cfg.flows = FlowConfig {
        start: 0.0,
        explicit: vec![FlowSpec {
            src: s.0,
            dst: d.0,
            rate: None,
            start: None,
            packets: Some(1),
        }],
        ..FlowConfig::default()
    };
    Ok((cfg, s, d))
}

/// RREQ transmissions of the single discovery in [`static_grid_scenario`],
/// flooding straight at full TTL.
pub fn simulated_rreq_count(
    grid: &GridNetwork,
    src: NodeId,
    dst: NodeId,
    features: &ProtocolFeatureSet,
) -> Result<u64> {
    let (cfg, _, _) = static_grid_scenario(grid, src, dst)?;
    let mut f = features.clone();
    f.ers_enabled = false;
    let outcome = Simulation::new(&cfg, &f)?.run()?;
    Ok(outcome.report.tx.rreq)
}

fn cell(grid: &GridNetwork, rc: [usize; 2]) -> Result<NodeId> {
    if rc[0] >= grid.rows() || rc[1] >= grid.cols() {
        return Err(invalid(format!(
            "cell {rc:?} outside {}x{} grid",
            grid.rows(),
            grid.cols()
        )));
    }
    Ok(grid.id(rc[0], rc[1]))
}

pub fn validate_grid(dims: [usize; 2], spec: &ValidationSpec) -> Result<ValidationRow> {
    let [rows, cols] = dims;
    let mut grid = GridNetwork::build(rows, cols, spec.spacing)?;
    for b in &spec.blackouts {
        grid = grid.apply_blackout(b)?;
    }
    let src = cell(&grid, spec.source.unwrap_or([0, 0]))?;
    let dst = cell(&grid, spec.destination.unwrap_or([rows - 1, cols - 1]))?;
    let mut row = ValidationRow {
        rows,
        cols,
        nodes: grid.node_count(),
        reachable: false,
        hops: None,
        analytical: None,
        oracle: None,
        simulated: None,
        analytical_over_oracle: None,
        simulated_over_oracle: None,
    };
    if !grid.is_alive(src) || !grid.is_alive(dst) {
        return Ok(row);
    }
    let Some(hops) = grid.hop_count(src, dst)? else {
        return Ok(row);
    };
    row.reachable = true;
    row.hops = Some(hops);
    if hops == 0 {
        return Err(invalid("source and destination coincide"));
    }

    let params = AnalyticalParams::new(grid.node_count() as f64, f64::from(hops), 1.0, 1.0, spec.forward_prob)?;
    let tiers = grid.tier_profile(src, hops - 1)?;
    let analytical = rreq_overhead(&params, &spec.coverage, &tiers)?;
    let oracle = grid
        .flood_oracle(src, Some(grid.diameter().max(1)), Some(dst))?
        .transmissions as u64;
    let features = ProtocolFeatureSet::preset(&spec.protocol)?;
    let simulated = simulated_rreq_count(&grid, src, dst, &features)?;

    row.analytical = Some(analytical);
    row.oracle = Some(oracle);
    row.simulated = Some(simulated);
    row.analytical_over_oracle = Some(analytical / oracle as f64);
    row.simulated_over_oracle = Some(simulated as f64 / oracle as f64);
    Ok(row)
}

pub fn monotone_agreement(rows: &[ValidationRow]) -> bool {
    let reachable: Vec<&ValidationRow> = rows.iter().filter(|r| r.reachable).collect();
    reachable.len() >= 2
        && reachable.windows(2).all(|w| {
            let grows = |a: Option<f64>, b: Option<f64>| matches!((a, b), (Some(a), Some(b)) if b > a);
            grows(w[0].analytical, w[1].analytical)
                && grows(w[0].oracle.map(|v| v as f64), w[1].oracle.map(|v| v as f64))
                && grows(w[0].simulated.map(|v| v as f64), w[1].simulated.map(|v| v as f64))
        })
}

/// Analytical RREQ overhead against the flooding oracle and the simulator on
/// every grid in `spec`.
pub fn validate_model(spec: &ValidationSpec) -> Result<ValidationReport> {
    spec.validate()?;
    let rows = spec
        .grids
        .iter()
        .map(|d| validate_grid(*d, spec))
        .collect::<Result<Vec<_>>>()?;
    let monotone_agreement = monotone_agreement(&rows);
    Ok(ValidationReport {
        rows,
        monotone_agreement,
    })
}
