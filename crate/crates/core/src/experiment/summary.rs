use std::fmt;

use serde::Serialize;

use super::{Experiment, Mode, RunOutput, RunRecord};
use crate::metrics::median;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Better {
    Higher,
    Lower,
}

fn metrics(mode: Mode) -> &'static [(&'static str, Option<Better>)] {
    match mode {
        Mode::Simulate | Mode::Compare => &[
            ("throughput", Some(Better::Higher)),
            ("e2e_delay_mean", Some(Better::Lower)),
            ("nrl_conventional", Some(Better::Lower)),
            ("delivery_ratio", Some(Better::Higher)),
            ("e2e_delay_paper", None),
            ("routing_load_paper", None),
        ],
        Mode::Analytic => &[
            ("rreq", None),
            ("rrep", None),
            ("discovery", None),
            ("hello", None),
            ("aggregate", None),
        ],
        Mode::Sensitivity => &[("dx", None), ("dz", None), ("dy", None)],
        Mode::Validate => &[("analytical", None), ("oracle", None), ("simulated", None)],
    }
}

fn values(output: &RunOutput) -> Vec<Option<f64>> {
    match output {
        RunOutput::Metrics(m) => vec![
            Some(m.throughput),
            m.e2e_delay_mean,
            m.nrl_conventional,
            m.delivery_ratio,
            m.e2e_delay_paper,
            Some(m.routing_load_paper),
        ],
        RunOutput::Overhead(o) => [o.rreq, o.rrep, o.discovery, o.hello, o.aggregate].map(Some).to_vec(),
        RunOutput::Sensitivity(s) => [s.dx, s.dz, s.dy].map(Some).to_vec(),
        RunOutput::Validation(v) => vec![v.analytical, v.oracle.map(|x| x as f64), v.simulated.map(|x| x as f64)],
    }
}

/// Medians of one (sweep value, protocol) group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub sweep_value: Option<f64>,
    pub group: String,
    pub runs: usize,
    pub medians: Vec<Option<f64>>,
}

/// Protocols ordered best first by their median of one metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ranking {
    pub sweep_value: Option<f64>,
    pub metric: String,
    pub order: Vec<(String, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub mode: Mode,
    pub sweep_parameter: Option<String>,
    pub metrics: Vec<String>,
    pub rows: Vec<SummaryRow>,
    pub rankings: Vec<Ranking>,
    pub monotone_agreement: Option<bool>,
}

impl Summary {
    pub fn build(e: &Experiment, records: &[RunRecord]) -> Self {
        let spec = metrics(e.mode);
        let mut rows: Vec<(SummaryRow, Vec<Vec<f64>>)> = Vec::new();
        for r in records {
            let group = match e.mode {
                Mode::Validate => match &r.output {
                    RunOutput::Validation(v) => format!("{}x{}", v.rows, v.cols),
                    _ => String::new(),
                },
                _ => r.inputs.protocol_name().unwrap_or("-").to_string(),
            };
            let key = (r.sweep_value.map(f64::to_bits), group.clone());
            let idx = match rows
                .iter()
                .position(|(row, _)| (row.sweep_value.map(f64::to_bits), row.group.clone()) == key)
            {
                Some(i) => i,
                None => {
                    rows.push((
                        SummaryRow {
                            sweep_value: r.sweep_value,
                            group,
                            runs: 0,
                            medians: Vec::new(),
                        },
                        vec![Vec::new(); spec.len()],
                    ));
                    rows.len() - 1
                }
            };
            rows[idx].0.runs += 1;
            for (slot, v) in rows[idx].1.iter_mut().zip(values(&r.output)) {
                slot.extend(v);
            }
        }
        let rows: Vec<SummaryRow> = rows
            .into_iter()
            .map(|(mut row, samples)| {
                row.medians = samples.into_iter().map(median).collect();
                row
            })
            .collect();

        let mut rankings = Vec::new();
        if e.mode == Mode::Compare {
            let mut points: Vec<Option<f64>> = Vec::new();
            for r in &rows {
                if !points
                    .iter()
                    .any(|p| p.map(f64::to_bits) == r.sweep_value.map(f64::to_bits))
                {
                    points.push(r.sweep_value);
                }
            }
            for point in points {
                for (i, (name, better)) in spec.iter().enumerate() {
                    let Some(better) = better else { continue };
                    let mut order: Vec<(String, Option<f64>)> = rows
                        .iter()
                        .filter(|r| r.sweep_value.map(f64::to_bits) == point.map(f64::to_bits))
                        .map(|r| (r.group.clone(), r.medians[i]))
                        .collect();
                    order.sort_by(|a, b| match (a.1, b.1) {
                        (Some(x), Some(y)) => match better {
                            Better::Higher => y.total_cmp(&x),
                            Better::Lower => x.total_cmp(&y),
                        },
                        (Some(_), None) => std::cmp::Ordering::Less,
                        (None, Some(_)) => std::cmp::Ordering::Greater,
                        (None, None) => std::cmp::Ordering::Equal,
                    });
                    rankings.push(Ranking {
                        sweep_value: point,
                        metric: name.to_string(),
                        order,
                    });
                }
            }
        }

        let monotone_agreement = (e.mode == Mode::Validate).then(|| {
            let rows: Vec<_> = records
                .iter()
                .filter_map(|r| match &r.output {
                    RunOutput::Validation(v) => Some(v.clone()),
                    _ => None,
                })
                .collect();
            super::monotone_agreement(&rows)
        });

        Summary {
            experiment: e.name.clone(),
            mode: e.mode,
            sweep_parameter: e.sweep.as_ref().map(|s| s.parameter.clone()),
            metrics: spec.iter().map(|(n, _)| n.to_string()).collect(),
            rows,
            rankings,
            monotone_agreement,
        }
    }

    /// Median of `metric` for `group` at `sweep_value`.
    pub fn median_of(&self, group: &str, sweep_value: Option<f64>, metric: &str) -> Option<f64> {
        let i = self.metrics.iter().position(|m| m == metric)?;
        self.rows
            .iter()
            .find(|r| r.group == group && r.sweep_value.map(f64::to_bits) == sweep_value.map(f64::to_bits))
            .and_then(|r| r.medians[i])
    }
}

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) if x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e7) => format!("{x:.4e}"),
        Some(x) => format!("{x:.4}"),
        None => "NA".into(),
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} ({}), medians per group", self.experiment, self.mode.as_str())?;
        let sweep = self.sweep_parameter.as_deref().unwrap_or("sweep");
        write!(f, "{sweep:>14} {:>10} {:>5}", "group", "runs")?;
        for m in &self.metrics {
            write!(f, " {m:>18}")?;
        }
        writeln!(f)?;
        for r in &self.rows {
            write!(f, "{:>14} {:>10} {:>5}", cell(r.sweep_value), r.group, r.runs)?;
            for v in &r.medians {
                write!(f, " {:>18}", cell(*v))?;
            }
            writeln!(f)?;
        }
        if !self.rankings.is_empty() {
            writeln!(f, "\nranking (best first)")?;
            for rk in &self.rankings {
                let order: Vec<String> = rk.order.iter().map(|(g, v)| format!("{g} {}", cell(*v))).collect();
                writeln!(
                    f,
                    "{:>14} {:>18}: {}",
                    cell(rk.sweep_value),
                    rk.metric,
                    order.join(" > ")
                )?;
            }
        }
        if let Some(m) = self.monotone_agreement {
            writeln!(f, "\nmonotone agreement: {m}")?;
        }
        Ok(())
    }
}
