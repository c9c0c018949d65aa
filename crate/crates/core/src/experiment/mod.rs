//! Experiment runner: config files, sweeps over seeds and protocols, CSV
//! and JSONL persistence, and summary tables.
//!
//! Runs are numbered in cartesian-product order (sweep value, then
//! protocol, then seed) and written in that order whatever the
//! parallelism.

mod config;
mod output;
mod summary;
mod validate;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{apply_scenario_sweep, AnalyticInputs, AnalyticSpec, Experiment, Mode, Sweep};
pub use summary::{Ranking, Summary, SummaryRow};
pub use validate::{
    monotone_agreement, simulated_rreq_count, static_grid_scenario, validate_grid, validate_model, ValidationReport,
    ValidationRow, ValidationSpec,
};

use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::overhead::{aggregate_overhead, OverheadBreakdown};
use crate::protocols::ProtocolFeatureSet;
use crate::sensitivity::{total_differential, SensitivityReport};
use crate::sim::{self, ScenarioConfig};

/// Everything needed to repeat one run exactly.
// Runs are planned once and held in a short list; boxing buys nothing.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RunInputs {
    Analytic(AnalyticInputs),
    Sensitivity(AnalyticInputs),
    Simulate {
        scenario: ScenarioConfig,
        protocol: ProtocolFeatureSet,
    },
    Validate {
        grid: [usize; 2],
        spec: ValidationSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunOutput {
    Overhead(OverheadBreakdown),
    Sensitivity(SensitivityReport),
    Metrics(MetricsReport),
    Validation(ValidationRow),
}

impl RunInputs {
    pub fn execute(&self) -> Result<RunOutput> {
        Ok(match self {
            RunInputs::Analytic(a) => {
                RunOutput::Overhead(aggregate_overhead(&a.params, &a.coverage, &a.tiers, &a.routes)?)
            }
            RunInputs::Sensitivity(a) => RunOutput::Sensitivity(total_differential(
                &a.params,
                &a.coverage,
                &a.tiers,
                &a.routes,
                &a.deltas,
                a.derivative,
            )?),
            RunInputs::Simulate { scenario, protocol } => RunOutput::Metrics(sim::run(scenario, protocol)?),
            RunInputs::Validate { grid, spec } => RunOutput::Validation(validate_grid(*grid, spec)?),
        })
    }

    pub fn protocol_name(&self) -> Option<&str> {
        match self {
            RunInputs::Simulate { protocol, .. } => Some(&protocol.name),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: String,
    pub run_id: usize,
    pub sweep_parameter: Option<String>,
    pub sweep_value: Option<f64>,
    pub seed: Option<u64>,
    pub inputs: RunInputs,
    pub output: RunOutput,
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone)]
pub struct PlannedRun {
    pub run_id: usize,
    pub sweep_value: Option<f64>,
    pub seed: Option<u64>,
    pub inputs: RunInputs,
}

/// Expand an experiment into its runs, in run-id order.
pub fn plan(e: &Experiment) -> Result<Vec<PlannedRun>> {
    let points: Vec<Option<f64>> = match &e.sweep {
        Some(s) => s.values.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let param = e.sweep.as_ref().map(|s| s.parameter.as_str());
    let mut runs = Vec::new();
    let mut push = |sweep_value, seed, inputs| {
        runs.push(PlannedRun {
            run_id: runs.len(),
            sweep_value,
            seed,
            inputs,
        })
    };
    match e.mode {
        Mode::Analytic | Mode::Sensitivity => {
            for v in &points {
                let inputs = e.analytic.resolve(param.zip(*v))?;
                let inputs = if e.mode == Mode::Analytic {
                    RunInputs::Analytic(inputs)
                } else {
                    RunInputs::Sensitivity(inputs)
                };
                push(*v, None, inputs);
            }
        }
        Mode::Simulate | Mode::Compare => {
            for v in &points {
                let mut base = e.scenario.clone();
                if let (Some(p), Some(v)) = (param, v) {
                    apply_scenario_sweep(&mut base, p, *v)?;
                }
                for protocol in &e.protocols {
                    for seed in &e.seeds {
                        let mut scenario = base.clone();
                        scenario.seed = *seed;
                        scenario.protocol = protocol.name.clone();
                        push(
                            *v,
                            Some(*seed),
                            RunInputs::Simulate {
                                scenario,
                                protocol: protocol.clone(),
                            },
                        );
                    }
                }
            }
        }
        Mode::Validate => {
            for grid in &e.validation.grids {
                push(
                    None,
                    None,
                    RunInputs::Validate {
                        grid: *grid,
                        spec: e.validation.clone(),
                    },
                );
            }
        }
    }
    Ok(runs)
}

pub struct ExperimentResult {
    pub records: Vec<RunRecord>,
    pub summary: Summary,
}

struct Sinks {
    csv: Option<csv::Writer<File>>,
    jsonl: Option<BufWriter<File>>,
}

impl Sinks {
    fn open(e: &Experiment) -> Result<Self> {
        let csv = match &e.output {
            Some(path) => {
                let mut w = csv::Writer::from_path(path)?;
                w.write_record(output::header(e.mode))?;
                w.flush()?;
                Some(w)
            }
            None => None,
        };
        let jsonl = match &e.records {
            Some(path) => Some(BufWriter::new(File::create(path)?)),
            None => None,
        };
        Ok(Sinks { csv, jsonl })
    }

    fn write(&mut self, mode: Mode, record: &RunRecord) -> Result<()> {
        if let Some(w) = &mut self.csv {
            w.write_record(output::row(mode, record))?;
        }
        if let Some(w) = &mut self.jsonl {
            serde_json::to_writer(&mut *w, record)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        if let Some(w) = &mut self.csv {
            w.flush()?;
        }
        if let Some(w) = &mut self.jsonl {
            w.flush()?;
        }
        Ok(())
    }
}

fn execute(experiment: &str, param: Option<&str>, run: &PlannedRun) -> Result<RunRecord> {
    let started = Instant::now();
    let output = run.inputs.execute().map_err(|e| Error::Run {
        run_id: run.run_id,
        source: Box::new(e),
    })?;
    Ok(RunRecord {
        experiment: experiment.to_string(),
        run_id: run.run_id,
        sweep_parameter: param.map(str::to_string),
        sweep_value: run.sweep_value,
        seed: run.seed,
        inputs: run.inputs.clone(),
        output,
        wall_clock_s: started.elapsed().as_secs_f64(),
    })
}

/// Execute every run of `e`, streaming rows to the configured outputs as
/// each batch of `parallelism` runs completes.
///
/// A failing run stops the experiment; rows of all earlier runs are kept.
pub fn run_experiment(e: &Experiment) -> Result<ExperimentResult> {
    e.validate()?;
    let runs = plan(e)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(e.parallelism)
        .build()
        .map_err(|err| Error::Config(format!("cannot start worker pool: {err}")))?;
    let mut sinks = Sinks::open(e)?;
    let param = e.sweep.as_ref().map(|s| s.parameter.as_str());
    let mut records = Vec::with_capacity(runs.len());
    for batch in runs.chunks(e.parallelism) {
        let results: Vec<Result<RunRecord>> =
            pool.install(|| batch.par_iter().map(|r| execute(&e.name, param, r)).collect());
        for result in results {
            match result {
                Ok(record) => {
                    sinks.write(e.mode, &record)?;
                    records.push(record);
                }
                Err(err) => {
                    sinks.flush()?;
                    return Err(err);
                }
            }
        }
        sinks.flush()?;
    }
    let summary = Summary::build(e, &records);
    Ok(ExperimentResult { records, summary })
}
