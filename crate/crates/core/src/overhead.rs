//! Closed-form routing overhead of reactive route discovery and route
//! monitoring.
//!
//! Discovery cost is the RREQ flood plus the RREP return; monitoring cost is
//! the periodic per-link HELLO traffic of each live route. All results are
//! packet counts in real arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Inputs of the discovery model.
///
/// `nodes` and `hops` are real-valued so the model can be differentiated;
/// the RREQ tier sum rounds `hops` to the nearest whole tier count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticalParams {
    /// Node count `n`.
    pub nodes: f64,
    /// Expected hop count `H` between source and destination.
    pub hops: f64,
    /// Route life time `T`, seconds.
    pub route_life: f64,
    /// Periodic HELLO interval `t`, seconds.
    pub hello_interval: f64,
    /// Per-node forwarding probability `p`.
    #[serde(default = "default_forward_prob")]
    pub forward_prob: f64,
}

fn default_forward_prob() -> f64 {
    1.0
}

impl AnalyticalParams {
    pub fn new(nodes: f64, hops: f64, route_life: f64, hello_interval: f64, forward_prob: f64) -> Result<Self> {
        let p = AnalyticalParams {
            nodes,
            hops,
            route_life,
            hello_interval,
            forward_prob,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.nodes,
            self.hops,
            self.route_life,
            self.hello_interval,
            self.forward_prob,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(invalid("analytical parameters must be finite"));
        }
        if self.nodes < 2.0 {
            return Err(invalid(format!("node count must be >= 2, got {}", self.nodes)));
        }
        if self.hops < 1.0 {
            return Err(invalid(format!("hop count must be >= 1, got {}", self.hops)));
        }
        if self.route_life <= 0.0 || self.hello_interval <= 0.0 {
            return Err(invalid("route life and hello interval must be positive"));
        }
        if self.hello_interval > self.route_life {
            return Err(invalid(format!(
                "hello interval {} exceeds route life {}",
                self.hello_interval, self.route_life
            )));
        }
        if !(0.0..=1.0).contains(&self.forward_prob) {
            return Err(invalid(format!(
                "forwarding probability {} outside [0, 1]",
                self.forward_prob
            )));
        }
        Ok(())
    }

    /// Whole number of hop tiers used by the RREQ sum.
    pub fn tier_count(&self) -> usize {
        self.hops.round().max(1.0) as usize
    }

    /// The single route this parameter set describes: `H` links monitored
    /// for `T` seconds every `t` seconds.
    pub fn default_route(&self) -> RouteDescriptor {
        RouteDescriptor {
            links: self.hops.round().max(1.0) as u32,
            route_life: self.route_life,
            interval: self.hello_interval,
        }
    }
}

/// Additional coverage index `C_i` for a rebroadcasting node with `i`
/// neighbours, `i ∈ {2, 3, 4}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageIndexTable {
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl Default for CoverageIndexTable {
    fn default() -> Self {
        CoverageIndexTable {
            c2: 0.19,
            c3: 0.33,
            c4: 0.41,
        }
    }
}

impl CoverageIndexTable {
    pub fn uniform(c: f64) -> Self {
        CoverageIndexTable { c2: c, c3: c, c4: c }
    }

    pub fn validate(&self) -> Result<()> {
        if [self.c2, self.c3, self.c4].iter().all(|c| (0.0..=1.0).contains(c)) {
            Ok(())
        } else {
            Err(invalid("coverage indices must lie in [0, 1]"))
        }
    }

    /// `(i, C_i)` for `i = 2, 3, 4`.
    pub fn entries(&self) -> [(f64, f64); 3] {
        [(2.0, self.c2), (3.0, self.c3), (4.0, self.c4)]
    }

    pub fn scaled(&self, k: f64) -> Self {
        CoverageIndexTable {
            c2: self.c2 * k,
            c3: self.c3 * k,
            c4: self.c4 * k,
        }
    }
}

/// One monitored route: `links` hops kept alive for `route_life` seconds,
/// probed every `interval` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteDescriptor {
    pub links: u32,
    pub route_life: f64,
    pub interval: f64,
}

impl RouteDescriptor {
    pub fn new(links: u32, route_life: f64, interval: f64) -> Result<Self> {
        let r = RouteDescriptor {
            links,
            route_life,
            interval,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.links == 0 {
            return Err(invalid("a route needs at least one link"));
        }
        if !(self.interval.is_finite() && self.interval > 0.0) {
            return Err(invalid(format!(
                "monitor interval must be positive, got {}",
                self.interval
            )));
        }
        if !(self.route_life.is_finite() && self.route_life > 0.0) {
            return Err(invalid(format!("route life must be positive, got {}", self.route_life)));
        }
        Ok(())
    }
}

/// How `T / t` is turned into a number of monitoring periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodCounting {
    /// `T / t` as a real ratio.
    #[default]
    Continuous,
    /// `floor(T / t)` whole periods.
    WholePeriods,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverheadBreakdown {
    pub rreq: f64,
    pub rrep: f64,
    pub discovery: f64,
    pub hello: f64,
    pub aggregate: f64,
}

/// Per-tier idealized neighbour profile: three effective forward
/// neighbours at every tier.
pub fn idealized_tiers(hops: usize) -> Vec<f64> {
    vec![3.0; hops.saturating_sub(1)]
}

/// Flood weight of hop tier `h` (1-based): `4 · 3^(h-1)`.
pub(crate) fn tier_weight(h: usize) -> f64 {
    4.0 * 3f64.powi(h as i32 - 1)
}

/// Unclamped bracket `(n - 1 - i) - Σ_{j<h} N_j` for every tier and every
/// `i`, in tier order. Each item is `(h, i, C_i, bracket)`.
pub(crate) fn bracket_terms(
    params: &AnalyticalParams,
    cov: &CoverageIndexTable,
    tiers: &[f64],
) -> Result<Vec<(usize, f64, f64, f64)>> {
    let tier_count = params.tier_count();
    if tiers.len() + 1 < tier_count {
        return Err(invalid(format!(
            "{} hop tiers need {} neighbour expectations, got {}",
            tier_count,
            tier_count - 1,
            tiers.len()
        )));
    }
    let mut out = Vec::with_capacity(tier_count * 3);
    let mut prefix = 0.0;
    for h in 1..=tier_count {
        for (i, c) in cov.entries() {
            out.push((h, i, c, (params.nodes - 1.0 - i) - prefix));
        }
        if h < tier_count {
            prefix += tiers[h - 1];
        }
    }
    Ok(out)
}

/// RREQ flood overhead: sum over hop tiers `h = 1..H` of
/// `4·3^(h-1) · Σ_i max(0, (n-1-i) - Σ_{j<h} N_j) · p · C_i`.
pub fn rreq_overhead(params: &AnalyticalParams, cov: &CoverageIndexTable, tiers: &[f64]) -> Result<f64> {
    let total = bracket_terms(params, cov, tiers)?
        .into_iter()
        .map(|(h, _, c, bracket)| tier_weight(h) * bracket.max(0.0) * params.forward_prob * c)
        .sum();
    Ok(total)
}

/// RREP overhead `H + (H/2)(n - H - 2)p`, never below the `H` reverse hops.
pub fn rrep_overhead(params: &AnalyticalParams) -> f64 {
    let h = params.hops;
    let raw = h + h / 2.0 * (params.nodes - h - 2.0) * params.forward_prob;
    raw.max(h)
}

pub fn discovery_overhead(params: &AnalyticalParams, cov: &CoverageIndexTable, tiers: &[f64]) -> Result<f64> {
    Ok(rreq_overhead(params, cov, tiers)? + rrep_overhead(params))
}

/// HELLO messages for one route: `2 (T/t) l`, both ends of every link.
pub fn hello_overhead_route(route: &RouteDescriptor) -> Result<f64> {
    hello_overhead_route_with(route, PeriodCounting::Continuous)
}

pub fn hello_overhead_route_with(route: &RouteDescriptor, counting: PeriodCounting) -> Result<f64> {
    route.validate()?;
    let periods = route.route_life / route.interval;
    let periods = match counting {
        PeriodCounting::Continuous => periods,
        PeriodCounting::WholePeriods => periods.floor(),
    };
    Ok(2.0 * periods * f64::from(route.links))
}

pub fn hello_overhead_total(routes: &[RouteDescriptor]) -> Result<f64> {
    routes.iter().map(hello_overhead_route).sum()
}

/// Route discovery plus route monitoring.
pub fn aggregate_overhead(
    params: &AnalyticalParams,
    cov: &CoverageIndexTable,
    tiers: &[f64],
    routes: &[RouteDescriptor],
) -> Result<OverheadBreakdown> {
    params.validate()?;
    cov.validate()?;
    let rreq = rreq_overhead(params, cov, tiers)?;
    let rrep = rrep_overhead(params);
    let discovery = rreq + rrep;
    let hello = hello_overhead_total(routes)?;
    Ok(OverheadBreakdown {
        rreq,
        rrep,
        discovery,
        hello,
        aggregate: discovery + hello,
    })
}
