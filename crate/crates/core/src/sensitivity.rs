//! Rates of change of the overhead model with respect to node count `n`,
//! hop count `H`, route life `T` and monitor interval `t`, and the total
//! differentials built from them.
//!
//! Two derivative paths exist. [`DerivativeMode::PaperLiteral`] evaluates
//! the customary closed-form rate expressions term by term; they are not the
//! calculus derivatives of the discovery model. [`DerivativeMode::Exact`] returns the
//! true derivatives, computed analytically and cross-checked against central
//! finite differences.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::overhead::{
    bracket_terms, hello_overhead_total, rreq_overhead, tier_weight, AnalyticalParams, CoverageIndexTable,
    RouteDescriptor,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    PaperLiteral,
    #[default]
    Exact,
}

impl DerivativeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DerivativeMode::PaperLiteral => "paper_literal",
            DerivativeMode::Exact => "exact",
        }
    }
}

/// Displacement applied to `(n, H, T, t)`. `life` and `interval` shift every
/// route by the same amount.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Deltas {
    pub nodes: f64,
    pub hops: f64,
    pub life: f64,
    pub interval: f64,
}

impl Deltas {
    pub fn scaled(&self, k: f64) -> Self {
        Deltas {
            nodes: self.nodes * k,
            hops: self.hops * k,
            life: self.life * k,
            interval: self.interval * k,
        }
    }
}

/// An exact partial derivative with its numerical cross-check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactPartial {
    pub value: f64,
    pub finite_difference: f64,
    /// The evaluation point sits within one finite-difference step of a kink
    /// (a clamp or a tier-rounding jump), so `value` is one-sided.
    pub near_boundary: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub mode: DerivativeMode,
    pub dy_dn: f64,
    pub dy_dhops: f64,
    pub dy_dlife: f64,
    pub dy_dinterval: f64,
    pub dx: f64,
    pub dz: f64,
    pub dy: f64,
    pub near_boundary: bool,
}

const REL_STEP: f64 = 1e-6;
const ABS_STEP: f64 = 1e-9;

pub fn fd_step(x: f64) -> f64 {
    (REL_STEP * x.abs()).max(ABS_STEP)
}

/// `∂y/∂T`: `Σ (2/t_i) l_i`.
pub fn partial_life(routes: &[RouteDescriptor]) -> f64 {
    routes.iter().map(|r| 2.0 / r.interval * f64::from(r.links)).sum()
}

/// `∂y/∂t`: `Σ -2 (T_i / t_i²) l_i`.
pub fn partial_interval(routes: &[RouteDescriptor]) -> f64 {
    routes
        .iter()
        .map(|r| -2.0 * r.route_life / (r.interval * r.interval) * f64::from(r.links))
        .sum()
}

/// Discovery evaluator `x(n, H)` with the hop count treated as real.
pub fn discovery_at(params: &AnalyticalParams, cov: &CoverageIndexTable, tiers: &[f64]) -> Result<f64> {
    Ok(rreq_overhead(params, cov, tiers)? + crate::overhead::rrep_overhead(params))
}

/// Aggregate evaluator at a displaced point: `x(n+Δn, H+ΔH)` plus HELLO
/// overhead of every route shifted by `(ΔT, Δt)`.
pub fn overhead_at(
    params: &AnalyticalParams,
    cov: &CoverageIndexTable,
    tiers: &[f64],
    routes: &[RouteDescriptor],
    deltas: &Deltas,
) -> Result<f64> {
    let moved = AnalyticalParams {
        nodes: params.nodes + deltas.nodes,
        hops: params.hops + deltas.hops,
        ..*params
    };
    let shifted: Vec<RouteDescriptor> = routes
        .iter()
        .map(|r| RouteDescriptor {
            links: r.links,
            route_life: r.route_life + deltas.life,
            interval: r.interval + deltas.interval,
        })
        .collect();
    Ok(discovery_at(&moved, cov, tiers)? + hello_overhead_total(&shifted)?)
}

/// Sum over tiers of the tier weight times the clamped bracket, with the
/// bracket offset `n - 1 - i` replaced by `offset(i)`.
fn tier_sum(
    params: &AnalyticalParams,
    cov: &CoverageIndexTable,
    tiers: &[f64],
    weight: impl Fn(usize) -> f64,
    offset: impl Fn(f64) -> f64,
) -> Result<f64> {
    let p = params.forward_prob;
    let mut total = 0.0;
    for (h, i, c, bracket) in bracket_terms(params, cov, tiers)? {
        // bracket = (n - 1 - i) - prefix; swap in the requested offset
        let prefix = (params.nodes - 1.0 - i) - bracket;
        let b = (offset(i) - prefix).max(0.0);
        total += weight(h) * b * p * c;
    }
    Ok(total)
}

/// Literal node-count rate: the RREQ sum with `(n-1-i)` replaced by
/// `(-i)`, plus `H + (H/2)(-H-2)p`.
pub fn partial_n_literal(params: &AnalyticalParams, cov: &CoverageIndexTable, tiers: &[f64]) -> Result<f64> {
    let h = params.hops;
    let rreq = tier_sum(params, cov, tiers, tier_weight, |i| -i)?;
    Ok(rreq + h + h / 2.0 * (-h - 2.0) * params.forward_prob)
}

/// Literal hop-count rate: tier coefficient `4·3^(h-1) + (h-1)·3^(h-1)`
/// on the RREQ bracket, plus `1 + (n-3)p/2`.
pub fn partial_hops_literal(params: &AnalyticalParams, cov: &CoverageIndexTable, tiers: &[f64]) -> Result<f64> {
    let n = params.nodes;
    let weight = |h: usize| tier_weight(h) + (h as f64 - 1.0) * 3f64.powi(h as i32 - 1);
    let rreq = tier_sum(params, cov, tiers, weight, |i| n - 1.0 - i)?;
    Ok(rreq + 1.0 + 0.5 * (n - 3.0) * params.forward_prob)
}

/// Literal discovery differential. Its `dn` coefficient repeats the full
/// discovery expression and its `dH` coefficient is `Σ 4·3^(h-1)[..] + 1 +
/// (n-3)p/2`; a trailing `+` with no operand is dropped.
pub fn dx_literal(params: &AnalyticalParams, cov: &CoverageIndexTable, tiers: &[f64], deltas: &Deltas) -> Result<f64> {
    let (n, h, p) = (params.nodes, params.hops, params.forward_prob);
    let rreq = rreq_overhead(params, cov, tiers)?;
    let dn_coef = rreq + h + h / 2.0 * (n - h - 2.0) * p;
    let dh_coef = rreq + 1.0 + 0.5 * (n - 3.0) * p;
    Ok(dn_coef * deltas.nodes + dh_coef * deltas.hops)
}

fn rrep_clamped(params: &AnalyticalParams) -> bool {
    let h = params.hops;
    h / 2.0 * (params.nodes - h - 2.0) * params.forward_prob <= 0.0
}

fn near_kink(params: &AnalyticalParams, cov: &CoverageIndexTable, tiers: &[f64]) -> Result<bool> {
    let step_n = fd_step(params.nodes);
    let step_h = fd_step(params.hops);
    let bracket_kink = bracket_terms(params, cov, tiers)?
        .into_iter()
        .any(|(_, _, c, b)| c > 0.0 && b.abs() <= 2.0 * step_n.max(step_h));
    let h = params.hops;
    let p = params.forward_prob;
    let rrep_gap = (h / 2.0 * (params.nodes - h - 2.0) * p).abs();
    let rrep_kink = p > 0.0 && rrep_gap <= 2.0 * h * p * step_n.max(step_h);
    let frac = h - h.floor();
    let rounding_kink = (frac - 0.5).abs() <= 2.0 * step_h;
    Ok(bracket_kink || rrep_kink || rounding_kink)
}

fn central_difference(f: impl Fn(f64) -> Result<f64>, x: f64) -> Result<f64> {
    let h = fd_step(x);
    Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
}

/// True `∂x/∂n`: each unclamped bracket contributes `4·3^(h-1) p C_i`, and
/// an unclamped RREP term contributes `(H/2) p`.
pub fn partial_n_exact(params: &AnalyticalParams, cov: &CoverageIndexTable, tiers: &[f64]) -> Result<ExactPartial> {
    let p = params.forward_prob;
    let mut value: f64 = bracket_terms(params, cov, tiers)?
        .into_iter()
        .filter(|(_, _, _, b)| *b > 0.0)
        .map(|(h, _, c, _)| tier_weight(h) * p * c)
        .sum();
    if !rrep_clamped(params) {
        value += params.hops / 2.0 * p;
    }
    let numeric = central_difference(
        |n| {
            let q = AnalyticalParams { nodes: n, ..*params };
            discovery_at(&q, cov, tiers)
        },
        params.nodes,
    )?;
    Ok(ExactPartial {
        value,
        finite_difference: numeric,
        near_boundary: near_kink(params, cov, tiers)?,
    })
}

/// True `∂x/∂H` with `H` relaxed to a real. The tier sum is piecewise
/// constant in `H`, so only the RREP term contributes:
/// `1 + (p/2)(n - 2H - 2)` when unclamped, `1` otherwise.
pub fn partial_hops_exact(params: &AnalyticalParams, cov: &CoverageIndexTable, tiers: &[f64]) -> Result<ExactPartial> {
    let (n, h, p) = (params.nodes, params.hops, params.forward_prob);
    let value = if rrep_clamped(params) {
        1.0
    } else {
        1.0 + p / 2.0 * (n - 2.0 * h - 2.0)
    };
    let numeric = central_difference(
        |hops| {
            let q = AnalyticalParams { hops, ..*params };
            discovery_at(&q, cov, tiers)
        },
        h,
    )?;
    Ok(ExactPartial {
        value,
        finite_difference: numeric,
        near_boundary: near_kink(params, cov, tiers)?,
    })
}

/// Assemble `dx` (discovery), `dz` (monitoring) and `dy = dx + dz` for the
/// given displacement.
pub fn total_differential(
    params: &AnalyticalParams,
    cov: &CoverageIndexTable,
    tiers: &[f64],
    routes: &[RouteDescriptor],
    deltas: &Deltas,
    mode: DerivativeMode,
) -> Result<SensitivityReport> {
    let dy_dlife = partial_life(routes);
    let dy_dinterval = partial_interval(routes);
    let dz = dy_dlife * deltas.life + dy_dinterval * deltas.interval;

    let report = match mode {
        DerivativeMode::Exact => {
            let dn = partial_n_exact(params, cov, tiers)?;
            let dh = partial_hops_exact(params, cov, tiers)?;
            let dx = dn.value * deltas.nodes + dh.value * deltas.hops;
            SensitivityReport {
                mode,
                dy_dn: dn.value,
                dy_dhops: dh.value,
                dy_dlife,
                dy_dinterval,
                dx,
                dz,
                dy: dx + dz,
                near_boundary: dn.near_boundary || dh.near_boundary,
            }
        }
        DerivativeMode::PaperLiteral => {
            let dx = dx_literal(params, cov, tiers, deltas)?;
            SensitivityReport {
                mode,
                dy_dn: partial_n_literal(params, cov, tiers)?,
                dy_dhops: partial_hops_literal(params, cov, tiers)?,
                dy_dlife,
                dy_dinterval,
                dx,
                dz,
                dy: dx + dz,
                near_boundary: false,
            }
        }
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::overhead::idealized_tiers;

    fn route(links: u32, life: f64, interval: f64) -> RouteDescriptor {
        RouteDescriptor::new(links, life, interval).unwrap()
    }

    #[test]
    fn partial_life_examples() {
        assert_eq!(partial_life(&[route(3, 10.0, 2.0)]), 3.0);
        assert_eq!(partial_life(&[route(3, 10.0, 2.0), route(5, 10.0, 2.0)]), 8.0);
    }

    #[test]
    fn partial_interval_examples() {
        assert_eq!(partial_interval(&[route(3, 10.0, 2.0)]), -15.0);
        assert_eq!(partial_interval(&[]), 0.0);
    }

    #[test]
    fn literal_rates_with_zero_p() {
        let p = AnalyticalParams::new(20.0, 4.0, 10.0, 1.0, 0.0).unwrap();
        let cov = CoverageIndexTable::default();
        let tiers = idealized_tiers(4);
        assert_eq!(partial_n_literal(&p, &cov, &tiers).unwrap(), 4.0);
        assert_eq!(partial_hops_literal(&p, &cov, &tiers).unwrap(), 1.0);
    }

    #[test]
    fn literal_rates_golden() {
        // n=10, H=1, p=1, C=1.
        // node rate: brackets (-i) clamp to zero; 1 + (1/2)(-3) = -0.5
        // hop rate:  coefficient 4 on (7+6+5); 72 + 1 + 7/2 = 76.5
        let p = AnalyticalParams::new(10.0, 1.0, 10.0, 2.0, 1.0).unwrap();
        let cov = CoverageIndexTable::uniform(1.0);
        assert_eq!(partial_n_literal(&p, &cov, &[]).unwrap(), -0.5);
        assert_eq!(partial_hops_literal(&p, &cov, &[]).unwrap(), 76.5);
    }

    #[test]
    fn exact_n_rate_zero_when_p_zero() {
        let p = AnalyticalParams::new(20.0, 3.0, 10.0, 1.0, 0.0).unwrap();
        let r = partial_n_exact(&p, &CoverageIndexTable::default(), &idealized_tiers(3)).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn exact_n_rate_linear_in_coverage() {
        let p = AnalyticalParams::new(20.0, 3.0, 10.0, 1.0, 0.5).unwrap();
        let tiers = idealized_tiers(3);
        let cov = CoverageIndexTable::default();
        let base = partial_n_exact(&p, &cov, &tiers).unwrap().value;
        let rrep_part = 3.0 / 2.0 * 0.5;
        let doubled = partial_n_exact(&p, &cov.scaled(2.0), &tiers).unwrap().value;
        assert!((doubled - rrep_part - 2.0 * (base - rrep_part)).abs() < 1e-12);
    }

    #[test]
    fn exact_rates_agree_with_their_finite_differences() {
        let p = AnalyticalParams::new(20.0, 3.0, 10.0, 1.0, 0.5).unwrap();
        let tiers = idealized_tiers(3);
        let cov = CoverageIndexTable::default();
        for r in [
            partial_n_exact(&p, &cov, &tiers).unwrap(),
            partial_hops_exact(&p, &cov, &tiers).unwrap(),
        ] {
            assert!(!r.near_boundary);
            let rel = (r.value - r.finite_difference).abs() / r.value.abs().max(1e-12);
            assert!(rel < 1e-6, "{r:?}");
        }
    }

    #[test]
    fn boundary_is_flagged() {
        // n=6, H=2: tier-2 bracket for i=2 is exactly zero.
        let p = AnalyticalParams::new(6.0, 2.0, 10.0, 1.0, 1.0).unwrap();
        let r = partial_n_exact(&p, &CoverageIndexTable::default(), &[3.0]).unwrap();
        assert!(r.near_boundary);
    }

    #[test]
    fn zero_displacement_gives_zero_differential() {
        let p = AnalyticalParams::new(20.0, 3.0, 10.0, 2.0, 0.5).unwrap();
        let routes = [route(3, 10.0, 2.0)];
        for mode in [DerivativeMode::Exact, DerivativeMode::PaperLiteral] {
            let r = total_differential(
                &p,
                &CoverageIndexTable::default(),
                &idealized_tiers(3),
                &routes,
                &Deltas::default(),
                mode,
            )
            .unwrap();
            assert_eq!(r.dy, 0.0);
            assert_eq!(r.mode, mode);
        }
    }

    #[test]
    fn life_only_displacement_is_linear() {
        let p = AnalyticalParams::new(20.0, 3.0, 10.0, 2.0, 0.5).unwrap();
        let routes = [route(3, 10.0, 2.0)];
        let d = Deltas {
            life: 0.7,
            ..Deltas::default()
        };
        let r = total_differential(
            &p,
            &CoverageIndexTable::default(),
            &idealized_tiers(3),
            &routes,
            &d,
            DerivativeMode::Exact,
        )
        .unwrap();
        assert_eq!(r.dy, 3.0 * 0.7);
        assert_eq!(r.dz, r.dy);
    }

    #[test]
    fn interval_displacement_first_order_error() {
        let p = AnalyticalParams::new(20.0, 3.0, 10.0, 2.0, 0.5).unwrap();
        let cov = CoverageIndexTable::default();
        let tiers = idealized_tiers(3);
        let routes = [route(3, 10.0, 2.0)];
        let err = |dt: f64| {
            let d = Deltas {
                interval: dt,
                ..Deltas::default()
            };
            let r = total_differential(&p, &cov, &tiers, &routes, &d, DerivativeMode::Exact).unwrap();
            let actual = overhead_at(&p, &cov, &tiers, &routes, &d).unwrap()
                - overhead_at(&p, &cov, &tiers, &routes, &Deltas::default()).unwrap();
            (r.dz, actual, (actual - r.dy).abs())
        };
        let (dz, actual, e1) = err(0.01);
        assert!((dz + 0.15).abs() < 1e-12);
        // 2·10·3·(1/2.01 - 1/2)
        assert!((actual - 60.0 * (1.0 / 2.01 - 0.5)).abs() < 1e-9);
        assert!(e1 < 1e-3);
        let (_, _, e2) = err(0.005);
        assert!(e1 / e2 > 3.5);
    }
}
