use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::validate::ValidationSpec;
use crate::error::{Error, Result};
use crate::grid::GridNetwork;
use crate::overhead::{idealized_tiers, AnalyticalParams, CoverageIndexTable, RouteDescriptor};
use crate::protocols::ProtocolFeatureSet;
use crate::sensitivity::{Deltas, DerivativeMode};
use crate::sim::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Analytic,
    Simulate,
    Sensitivity,
    Compare,
    Validate,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Analytic => "analytic",
            Mode::Simulate => "simulate",
            Mode::Sensitivity => "sensitivity",
            Mode::Compare => "compare",
            Mode::Validate => "validate",
        }
    }

    pub fn is_simulation(self) -> bool {
        matches!(self, Mode::Simulate | Mode::Compare)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: String,
    pub values: Vec<f64>,
}

/// Analytic and sensitivity inputs as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyticSpec {
    pub params: AnalyticalParams,
    pub coverage: CoverageIndexTable,
    /// Expected forward neighbours per tier; three per tier when absent.
    pub tiers: Option<Vec<f64>>,
    /// Monitored routes; one `H`-link route over `(T, t)` when absent.
    pub routes: Option<Vec<RouteDescriptor>>,
    pub derivative: DerivativeMode,
    pub deltas: Deltas,
}

impl Default for AnalyticSpec {
    fn default() -> Self {
        AnalyticSpec {
            params: AnalyticalParams {
                nodes: 25.0,
                hops: 4.0,
                route_life: 10.0,
                hello_interval: 1.0,
                forward_prob: 1.0,
            },
            coverage: CoverageIndexTable::default(),
            tiers: None,
            routes: None,
            derivative: DerivativeMode::default(),
            deltas: Deltas::default(),
        }
    }
}

/// Fully resolved inputs of one analytic or sensitivity evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticInputs {
    pub params: AnalyticalParams,
    pub coverage: CoverageIndexTable,
    pub tiers: Vec<f64>,
    pub routes: Vec<RouteDescriptor>,
    pub derivative: DerivativeMode,
    pub deltas: Deltas,
}

fn integer(parameter: &str, v: f64) -> Result<usize> {
    if v.fract() != 0.0 || v < 0.0 {
        return Err(Error::Config(format!(
            "sweep parameter '{parameter}' needs whole numbers, got {v}"
        )));
    }
    Ok(v as usize)
}

impl AnalyticSpec {
    /// Resolve defaults after applying an optional sweep point.
    pub fn resolve(&self, point: Option<(&str, f64)>) -> Result<AnalyticInputs> {
        let mut params = self.params;
        let mut routes = self.routes.clone();
        let mut tiers = self.tiers.clone();
        if let Some((name, v)) = point {
            match name {
                "nodes" => params.nodes = v,
                "hops" => params.hops = v,
                "forward_prob" => params.forward_prob = v,
                "route_life" => {
                    params.route_life = v;
                    routes.iter_mut().flatten().for_each(|r| r.route_life = v);
                }
                "hello_interval" => {
                    params.hello_interval = v;
                    routes.iter_mut().flatten().for_each(|r| r.interval = v);
                }
                "grid_side" => {
                    // Corner-to-corner on a side × side lattice.
                    let side = integer(name, v)?;
                    let grid = GridNetwork::build(side, side, 1.0)?;
                    let h = 2 * side as u32 - 2;
                    params.nodes = (side * side) as f64;
                    params.hops = f64::from(h);
                    if self.tiers.is_none() {
                        tiers = Some(grid.tier_profile(grid.id(0, 0), h.saturating_sub(1))?);
                    }
                }
                other => {
                    return Err(Error::Config(format!(
                        "unknown analytic sweep parameter '{other}' \
                         (expected nodes, hops, route_life, hello_interval, forward_prob or grid_side)"
                    )))
                }
            }
        }
        params.validate()?;
        self.coverage.validate()?;
        let tiers = tiers.unwrap_or_else(|| idealized_tiers(params.tier_count()));
        let routes = routes.unwrap_or_else(|| vec![params.default_route()]);
        for r in &routes {
            r.validate()?;
        }
        Ok(AnalyticInputs {
            params,
            coverage: self.coverage,
            tiers,
            routes,
            derivative: self.derivative,
            deltas: self.deltas,
        })
    }
}

/// Apply one sweep point to a scenario.
pub fn apply_scenario_sweep(cfg: &mut ScenarioConfig, parameter: &str, v: f64) -> Result<()> {
    match parameter {
        "speed" => cfg.speed = v,
        "nodes" => cfg.nodes = integer(parameter, v)?,
        "duration" => cfg.duration = v,
        "flows" => cfg.flows.count = integer(parameter, v)?,
        "rate" => cfg.flows.rate = v,
        "bandwidth" => cfg.bandwidth = v,
        "radio_range" => cfg.radio_range = v,
        "jitter" => cfg.jitter = v,
        "hello_interval" => cfg.params.hello_interval = v,
        "route_timeout" => cfg.params.route_timeout = v,
        "data_size" => cfg.data_size = integer(parameter, v)? as u32,
        other => {
            return Err(Error::Config(format!(
                "unknown scenario sweep parameter '{other}' (expected speed, nodes, duration, flows, rate, \
                 bandwidth, radio_range, jitter, hello_interval, route_timeout or data_size)"
            )))
        }
    }
    Ok(())
}

/// On-disk experiment definition.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentFile {
    name: String,
    mode: Mode,
    #[serde(default)]
    preset: Option<String>,
    #[serde(default)]
    scenario: Option<toml::Table>,
    #[serde(default)]
    analytic: Option<AnalyticSpec>,
    #[serde(default)]
    validate: Option<ValidationSpec>,
    #[serde(default)]
    protocols: Vec<String>,
    #[serde(default)]
    custom_protocols: Vec<ProtocolFeatureSet>,
    #[serde(default)]
    sweep: Option<Sweep>,
    #[serde(default)]
    seeds: Vec<u64>,
    #[serde(default)]
    output: Option<PathBuf>,
    #[serde(default)]
    records: Option<PathBuf>,
    #[serde(default)]
    parallelism: Option<usize>,
}

/// A validated experiment ready to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub name: String,
    pub mode: Mode,
    pub scenario: ScenarioConfig,
    pub analytic: AnalyticSpec,
    pub validation: ValidationSpec,
    pub protocols: Vec<ProtocolFeatureSet>,
    pub sweep: Option<Sweep>,
    pub seeds: Vec<u64>,
    /// CSV destination.
    pub output: Option<PathBuf>,
    /// Line-delimited JSON run records.
    pub records: Option<PathBuf>,
    pub parallelism: usize,
}

/// Overlay `over` onto `base`. A table whose `kind` changes replaces the
/// base table outright so variant fields never mix.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o))
                if b.get("kind") == o.get("kind") || o.get("kind").is_none() =>
            {
                merge(b, o)
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn resolve_protocol(name: &str, custom: &[ProtocolFeatureSet]) -> Result<ProtocolFeatureSet> {
    if let Some(f) = custom.iter().find(|f| f.name.eq_ignore_ascii_case(name)) {
        f.validate()?;
        return Ok(f.clone());
    }
    ProtocolFeatureSet::preset(name)
}

impl Experiment {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ExperimentFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::resolve(file)
    }

    /// Built-in experiment for `mode`: desk preset, seed 1, no sweep.
    pub fn default_for(mode: Mode) -> Result<Self> {
        let name = mode.as_str();
        let mut text = format!("name = \"{name}\"\nmode = \"{name}\"\nseeds = [1]\n");
        if mode == Mode::Sensitivity {
            // one more node and one more second of route life
            text.push_str("[analytic.deltas]\nnodes = 1.0\nlife = 1.0\n");
        }
        Self::from_toml_str(&text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn resolve(file: ExperimentFile) -> Result<Self> {
        let base = ScenarioConfig::preset(file.preset.as_deref().unwrap_or("desk"))?;
        let scenario = match file.scenario {
            None => base,
            Some(over) => {
                let mut table = toml::Table::try_from(&base).map_err(|e| Error::Config(e.to_string()))?;
                merge(&mut table, over);
                table
                    .try_into::<ScenarioConfig>()
                    .map_err(|e| Error::Config(format!("[scenario]: {e}")))?
            }
        };
        let names = if !file.protocols.is_empty() {
            file.protocols.clone()
        } else if file.mode == Mode::Compare {
            vec!["AODV".into(), "DSR".into(), "DYMO".into()]
        } else {
            vec![scenario.protocol.clone()]
        };
        let protocols = names
            .iter()
            .map(|n| resolve_protocol(n, &file.custom_protocols))
            .collect::<Result<Vec<_>>>()?;
        let e = Experiment {
            name: file.name,
            mode: file.mode,
            scenario,
            analytic: file.analytic.unwrap_or_default(),
            validation: file.validate.unwrap_or_default(),
            protocols,
            sweep: file.sweep,
            seeds: file.seeds,
            output: file.output,
            records: file.records,
            parallelism: file.parallelism.unwrap_or(1),
        };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.name.trim().is_empty() {
            return cfg("experiment name must not be empty".into());
        }
        if self.parallelism == 0 {
            return cfg("parallelism must be at least 1".into());
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return cfg(format!("sweep over '{}' has no values", s.parameter));
            }
            if let Some(v) = s.values.iter().find(|v| !v.is_finite()) {
                return cfg(format!("sweep over '{}' has non-finite value {v}", s.parameter));
            }
        }
        match self.mode {
            Mode::Simulate | Mode::Compare => {
                if self.seeds.is_empty() {
                    return cfg(format!("{} mode needs at least one seed", self.mode.as_str()));
                }
                if self.protocols.is_empty() {
                    return cfg("no protocol selected".into());
                }
                self.scenario.validate()?;
                if let Some(s) = &self.sweep {
                    for v in &s.values {
                        let mut c = self.scenario.clone();
                        apply_scenario_sweep(&mut c, &s.parameter, *v)?;
                        c.validate()?;
                    }
                }
            }
            Mode::Analytic | Mode::Sensitivity => match &self.sweep {
                None => {
                    self.analytic.resolve(None)?;
                }
                Some(s) => {
                    for v in &s.values {
                        self.analytic.resolve(Some((&s.parameter, *v)))?;
                    }
                }
            },
            Mode::Validate => {
                if self.sweep.is_some() {
                    return cfg("validate mode takes its grids from [validate], not a sweep".into());
                }
                self.validation.validate()?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_overrides_merge_onto_preset() {
        let e = Experiment::from_toml_str(
            r#"
            name = "t"
            mode = "simulate"
            preset = "reference"
            seeds = [1]
            [scenario]
            speed = 5.0
            [scenario.params]
            hello_interval = 2.0
            "#,
        )
        .unwrap();
        assert_eq!(e.scenario.nodes, 50);
        assert_eq!(e.scenario.speed, 5.0);
        assert_eq!(e.scenario.params.hello_interval, 2.0);
        assert_eq!(e.scenario.params.route_timeout, 10.0);
        assert_eq!(e.protocols[0].name, "AODV");
    }

    #[test]
    fn placement_kind_change_replaces_table() {
        let e = Experiment::from_toml_str(
            r#"
            name = "t"
            mode = "simulate"
            seeds = [1]
            [scenario]
            arena = [500.0, 500.0]
            placement = { kind = "grid", rows = 3, cols = 3, spacing = 100.0 }
            "#,
        )
        .unwrap();
        assert_eq!(e.scenario.node_count().unwrap(), 9);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = Experiment::from_toml_str("name = \"t\"\nmode = \"simulate\"\nseeds = [1]\nbogus = 3\n").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let err =
            Experiment::from_toml_str("name = \"t\"\nmode = \"simulate\"\nseeds = [1]\n[scenario]\nspeeed = 3.0\n")
                .unwrap_err();
        assert!(err.to_string().contains("speeed"), "{err}");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = Experiment::from_toml_str("name = \"t\"\nmode = 7\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn simulate_requires_seeds_and_finite_sweep() {
        assert!(Experiment::from_toml_str("name = \"t\"\nmode = \"simulate\"\n").is_err());
        let text = "name = \"t\"\nmode = \"analytic\"\n[sweep]\nparameter = \"nodes\"\nvalues = []\n";
        assert!(Experiment::from_toml_str(text).is_err());
    }

    #[test]
    fn compare_defaults_to_three_protocols() {
        let e = Experiment::from_toml_str("name = \"t\"\nmode = \"compare\"\nseeds = [1, 2]\n").unwrap();
        let names: Vec<_> = e.protocols.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["AODV", "DSR", "DYMO"]);
    }

    #[test]
    fn custom_protocol_by_name() {
        let e = Experiment::from_toml_str(
            r#"
            name = "t"
            mode = "simulate"
            seeds = [1]
            protocols = ["quiet-aodv"]
            [[custom_protocols]]
            name = "quiet-aodv"
            source_routing = false
            store = "routing_table"
            multiple_routes = false
            gratuitous_rrep = true
            periodic_hello = false
            ack_link_monitor = false
            promiscuous = false
            local_repair = true
            check_store_before_discovery = true
            ers_enabled = true
            "#,
        )
        .unwrap();
        assert!(!e.protocols[0].periodic_hello);
    }

    #[test]
    fn grid_side_sweep_sets_lattice_inputs() {
        let spec = AnalyticSpec::default();
        let inputs = spec.resolve(Some(("grid_side", 4.0))).unwrap();
        assert_eq!(inputs.params.nodes, 16.0);
        assert_eq!(inputs.params.hops, 6.0);
        assert_eq!(inputs.tiers.len(), 5);
        assert!(spec.resolve(Some(("grid_side", 2.5))).is_err());
    }
}
