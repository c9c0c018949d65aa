//! Lattice topology with blackout regions, hop queries and a brute-force
//! flooding oracle.
//!
//! Nodes sit on a `rows × cols` lattice and talk to their 4-connected alive
//! neighbours. Node ids are row-major and stable across blackouts: a dead
//! cell keeps its id, it just stops participating.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::NodeId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridNetwork {
    rows: usize,
    cols: usize,
    spacing: f64,
    alive: Vec<bool>,
}

/// Inclusive rectangle of cells that fail together (power loss, jamming).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlackoutRegion {
    pub row_start: usize,
    pub row_end: usize,
    pub col_start: usize,
    pub col_end: usize,
}

impl BlackoutRegion {
    pub fn new(rows: std::ops::RangeInclusive<usize>, cols: std::ops::RangeInclusive<usize>) -> Self {
        BlackoutRegion {
            row_start: *rows.start(),
            row_end: *rows.end(),
            col_start: *cols.start(),
            col_end: *cols.end(),
        }
    }

    pub fn cell(row: usize, col: usize) -> Self {
        Self::new(row..=row, col..=col)
    }
}

/// Hop limit for a flood. `None` floods the whole component.
pub type Ttl = Option<u32>;

/// Outcome of one blind flood with duplicate suppression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FloodTrace {
    pub transmissions: usize,
    pub reached: BTreeSet<NodeId>,
    /// `(tier, emissions)` pairs; tier 0 is the source.
    pub per_tier: Vec<(u32, usize)>,
}

impl GridNetwork {
    pub fn build(rows: usize, cols: usize, spacing: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid(format!("grid dimensions must be positive, got {rows}x{cols}")));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(invalid(format!("grid spacing must be positive, got {spacing}")));
        }
        Ok(GridNetwork {
            rows,
            cols,
            spacing,
            alive: vec![true; rows * cols],
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Number of alive nodes.
    pub fn node_count(&self) -> usize {
        self.alive.iter().filter(|a| **a).count()
    }

    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn id(&self, row: usize, col: usize) -> NodeId {
        NodeId((row * self.cols + col) as u32)
    }

    pub fn coords(&self, id: NodeId) -> (usize, usize) {
        (id.index() / self.cols, id.index() % self.cols)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.index() < self.cell_count()
    }

    pub fn is_alive(&self, id: NodeId) -> bool {
        self.contains(id) && self.alive[id.index()]
    }

    /// Alive node ids in row-major order.
    pub fn alive_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.alive
            .iter()
            .enumerate()
            .filter(|(_, a)| **a)
            .map(|(i, _)| NodeId(i as u32))
    }

    /// Planar position of a cell in meters, origin at cell (0, 0).
    pub fn position(&self, id: NodeId) -> (f64, f64) {
        let (r, c) = self.coords(id);
        (c as f64 * self.spacing, r as f64 * self.spacing)
    }

    pub fn apply_blackout(&self, region: &BlackoutRegion) -> Result<Self> {
        if region.row_start > region.row_end
            || region.col_start > region.col_end
            || region.row_end >= self.rows
            || region.col_end >= self.cols
        {
            return Err(invalid(format!(
                "blackout rows {}..={} cols {}..={} outside {}x{} grid",
                region.row_start, region.row_end, region.col_start, region.col_end, self.rows, self.cols
            )));
        }
        let mut out = self.clone();
        for r in region.row_start..=region.row_end {
            for c in region.col_start..=region.col_end {
                out.alive[r * self.cols + c] = false;
            }
        }
        Ok(out)
    }

    /// Alive 4-connected neighbours, in a fixed order (up, left, right, down).
    pub fn neighbors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let (r, c) = self.coords(id);
        let candidates = [
            (r.checked_sub(1), Some(c)),
            (Some(r), c.checked_sub(1)),
            (Some(r), (c + 1 < self.cols).then_some(c + 1)),
            ((r + 1 < self.rows).then_some(r + 1), Some(c)),
        ];
        candidates.into_iter().filter_map(move |cell| match cell {
            (Some(r), Some(c)) if self.alive[r * self.cols + c] => Some(self.id(r, c)),
            _ => None,
        })
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.neighbors(id).count()
    }

    fn require_alive(&self, id: NodeId, what: &str) -> Result<()> {
        if self.is_alive(id) {
            Ok(())
        } else {
            Err(invalid(format!("{what} {id} is not an alive grid node")))
        }
    }

    /// Breadth-first hop distance from `src` to every cell; `None` for dead
    /// or unreachable cells.
    pub fn distances_from(&self, src: NodeId) -> Result<Vec<Option<u32>>> {
        self.require_alive(src, "source")?;
        let mut dist = vec![None; self.cell_count()];
        let mut queue = VecDeque::new();
        dist[src.index()] = Some(0);
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let du = dist[u.index()].unwrap_or(0);
            for v in self.neighbors(u) {
                if dist[v.index()].is_none() {
                    dist[v.index()] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        Ok(dist)
    }

    /// Shortest path length over alive cells, or `None` when `dst` cannot be
    /// reached.
    pub fn hop_count(&self, src: NodeId, dst: NodeId) -> Result<Option<u32>> {
        self.require_alive(dst, "destination")?;
        Ok(self.distances_from(src)?[dst.index()])
    }

    /// Mean effective forward neighbour count of the nodes at breadth-first
    /// tier `tier` from `src`.
    ///
    /// A node's effective neighbours are its alive neighbours minus the one
    /// it heard the packet from. Returns `Ok(None)` when the tier is empty.
    pub fn expected_neighbors_at_tier(&self, src: NodeId, tier: u32) -> Result<Option<f64>> {
        if tier == 0 {
            return Err(invalid("tier index starts at 1"));
        }
        let dist = self.distances_from(src)?;
        let counts: Vec<usize> = dist
            .iter()
            .enumerate()
            .filter(|(_, d)| **d == Some(tier))
            .map(|(i, _)| self.degree(NodeId(i as u32)).saturating_sub(1))
            .collect();
        if counts.is_empty() {
            return Ok(None);
        }
        Ok(Some(counts.iter().sum::<usize>() as f64 / counts.len() as f64))
    }

    /// `N_1 .. N_{count}` from `src`; empty tiers contribute zero.
    pub fn tier_profile(&self, src: NodeId, count: u32) -> Result<Vec<f64>> {
        (1..=count)
            .map(|j| Ok(self.expected_neighbors_at_tier(src, j)?.unwrap_or(0.0)))
            .collect()
    }

    /// Blind flood from `src` with per-node duplicate suppression.
    ///
    /// The source always emits. A node first reached at tier `d` re-emits
    /// once iff it is not `dst` and `d < ttl`.
    pub fn flood_oracle(&self, src: NodeId, ttl: Ttl, dst: Option<NodeId>) -> Result<FloodTrace> {
        self.require_alive(src, "source")?;
        let mut tier = vec![None; self.cell_count()];
        let mut reached = BTreeSet::new();
        let mut emitters = VecDeque::new();
        let mut per_tier: Vec<(u32, usize)> = Vec::new();
        let mut transmissions = 0usize;

        tier[src.index()] = Some(0u32);
        reached.insert(src);
        emitters.push_back(src);

        while let Some(u) = emitters.pop_front() {
            let tu = tier[u.index()].unwrap_or(0);
            transmissions += 1;
            match per_tier.last_mut() {
                Some((t, n)) if *t == tu => *n += 1,
                _ => per_tier.push((tu, 1)),
            }
            for v in self.neighbors(u) {
                if tier[v.index()].is_some() {
                    continue;
                }
                let tv = tu + 1;
                tier[v.index()] = Some(tv);
                reached.insert(v);
                let within_ttl = ttl.is_none_or(|limit| tv < limit);
                if Some(v) != dst && within_ttl {
                    emitters.push_back(v);
                }
            }
        }

        Ok(FloodTrace {
            transmissions,
            reached,
            per_tier,
        })
    }

    /// Number of connected components among alive cells.
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.cell_count()];
        let mut components = 0;
        for start in self.alive_nodes() {
            if seen[start.index()] {
                continue;
            }
            components += 1;
            let mut stack = vec![start];
            seen[start.index()] = true;
            while let Some(u) = stack.pop() {
                for v in self.neighbors(u) {
                    if !seen[v.index()] {
                        seen[v.index()] = true;
                        stack.push(v);
                    }
                }
            }
        }
        components
    }

    /// Largest finite hop distance between any two alive nodes.
    pub fn diameter(&self) -> u32 {
        self.alive_nodes()
            .filter_map(|s| self.distances_from(s).ok())
            .flat_map(|d| d.into_iter().flatten())
            .max()
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_by_five_corner_has_two_neighbors() {
        let g = GridNetwork::build(5, 5, 100.0).unwrap();
        assert_eq!(g.node_count(), 25);
        assert_eq!(g.degree(g.id(0, 0)), 2);
    }

    #[test]
    fn single_cell_grid() {
        let g = GridNetwork::build(1, 1, 1.0).unwrap();
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.degree(NodeId(0)), 0);
    }

    #[test]
    fn interior_node_has_four_neighbors() {
        let g = GridNetwork::build(3, 3, 50.0).unwrap();
        assert_eq!(g.degree(g.id(1, 1)), 4);
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(GridNetwork::build(0, 3, 1.0).is_err());
        assert!(GridNetwork::build(3, 0, 1.0).is_err());
        assert!(GridNetwork::build(3, 3, 0.0).is_err());
    }

    #[test]
    fn row_major_ids() {
        let g = GridNetwork::build(3, 4, 1.0).unwrap();
        assert_eq!(g.id(1, 2), NodeId(6));
        assert_eq!(g.coords(NodeId(6)), (1, 2));
        assert_eq!(g.position(NodeId(6)), (2.0, 1.0));
    }

    #[test]
    fn blackout_center_cell() {
        let g = GridNetwork::build(3, 3, 1.0).unwrap();
        let b = g.apply_blackout(&BlackoutRegion::cell(1, 1)).unwrap();
        assert_eq!(b.node_count(), 8);
    }

    #[test]
    fn blackout_middle_column_splits_grid() {
        let g = GridNetwork::build(5, 5, 1.0).unwrap();
        let b = g.apply_blackout(&BlackoutRegion::new(0..=4, 2..=2)).unwrap();
        assert_eq!(b.node_count(), 20);
        assert_eq!(b.component_count(), 2);
    }

    #[test]
    fn blackout_is_idempotent() {
        let g = GridNetwork::build(4, 4, 1.0).unwrap();
        let r = BlackoutRegion::new(1..=2, 0..=1);
        let once = g.apply_blackout(&r).unwrap();
        let twice = once.apply_blackout(&r).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    #[allow(clippy::reversed_empty_ranges)]
    fn blackout_out_of_bounds_rejected() {
        let g = GridNetwork::build(3, 3, 1.0).unwrap();
        assert!(g.apply_blackout(&BlackoutRegion::new(0..=3, 0..=0)).is_err());
        assert!(g.apply_blackout(&BlackoutRegion::new(2..=1, 0..=0)).is_err());
    }

    #[test]
    fn opposite_corners_hop_count() {
        let g = GridNetwork::build(5, 5, 1.0).unwrap();
        assert_eq!(g.hop_count(g.id(0, 0), g.id(4, 4)).unwrap(), Some(8));
    }

    #[test]
    fn hop_count_around_blacked_out_center() {
        let g = GridNetwork::build(3, 3, 1.0)
            .unwrap()
            .apply_blackout(&BlackoutRegion::cell(1, 1))
            .unwrap();
        assert_eq!(g.hop_count(g.id(0, 0), g.id(2, 2)).unwrap(), Some(4));
    }

    #[test]
    fn hop_count_across_split_is_unreachable() {
        let g = GridNetwork::build(5, 5, 1.0)
            .unwrap()
            .apply_blackout(&BlackoutRegion::new(0..=4, 2..=2))
            .unwrap();
        assert_eq!(g.hop_count(g.id(0, 0), g.id(4, 4)).unwrap(), None);
    }

    #[test]
    fn hop_count_dead_endpoint_is_error() {
        let g = GridNetwork::build(3, 3, 1.0)
            .unwrap()
            .apply_blackout(&BlackoutRegion::cell(1, 1))
            .unwrap();
        assert!(g.hop_count(g.id(1, 1), g.id(0, 0)).is_err());
        assert!(g.hop_count(g.id(0, 0), g.id(1, 1)).is_err());
    }

    #[test]
    fn first_tier_of_large_grid_has_three_forward_neighbors() {
        let g = GridNetwork::build(21, 21, 1.0).unwrap();
        let center = g.id(10, 10);
        assert_eq!(g.expected_neighbors_at_tier(center, 1).unwrap(), Some(3.0));
        assert_eq!(g.degree(center), 4);
    }

    #[test]
    fn single_cell_has_no_tiers() {
        let g = GridNetwork::build(1, 1, 1.0).unwrap();
        assert_eq!(g.expected_neighbors_at_tier(NodeId(0), 1).unwrap(), None);
        assert_eq!(g.expected_neighbors_at_tier(NodeId(0), 4).unwrap(), None);
    }

    #[test]
    fn corner_tier_one_on_three_by_three() {
        // Tier-1 nodes (0,1) and (1,0) each have degree 3, minus the upstream link.
        let g = GridNetwork::build(3, 3, 1.0).unwrap();
        assert_eq!(g.expected_neighbors_at_tier(g.id(0, 0), 1).unwrap(), Some(2.0));
    }

    #[test]
    fn flood_three_by_three_corner_to_corner() {
        let g = GridNetwork::build(3, 3, 1.0).unwrap();
        let t = g.flood_oracle(g.id(0, 0), None, Some(g.id(2, 2))).unwrap();
        assert_eq!(t.transmissions, 8);
        assert_eq!(t.reached.len(), 9);
        assert_eq!(t.per_tier, vec![(0, 1), (1, 2), (2, 3), (3, 2)]);
    }

    #[test]
    fn flood_ttl_zero_only_source_emits() {
        let g = GridNetwork::build(4, 4, 1.0).unwrap();
        let src = g.id(1, 1);
        let t = g.flood_oracle(src, Some(0), None).unwrap();
        assert_eq!(t.transmissions, 1);
        let mut expected: BTreeSet<_> = g.neighbors(src).collect();
        expected.insert(src);
        assert_eq!(t.reached, expected);
    }

    #[test]
    fn flood_destination_never_reemits() {
        let g = GridNetwork::build(1, 2, 1.0).unwrap();
        let t = g.flood_oracle(NodeId(0), None, Some(NodeId(1))).unwrap();
        assert_eq!(t.transmissions, 1);
    }

    #[test]
    fn flood_from_dead_source_is_error() {
        let g = GridNetwork::build(2, 2, 1.0)
            .unwrap()
            .apply_blackout(&BlackoutRegion::cell(0, 0))
            .unwrap();
        assert!(g.flood_oracle(NodeId(0), None, None).is_err());
    }

    #[test]
    fn diameter_of_full_grid() {
        assert_eq!(GridNetwork::build(3, 5, 1.0).unwrap().diameter(), 6);
        assert_eq!(GridNetwork::build(1, 1, 1.0).unwrap().diameter(), 0);
    }
}
