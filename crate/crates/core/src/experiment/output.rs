//! CSV row layout per mode. Undefined values are written as `NA`.

use super::{Mode, RunInputs, RunOutput, RunRecord};

const NA: &str = "NA";

const SIM_HEADER: &[&str] = &[
    "run_id",
    "experiment",
    "protocol",
    "seed",
    "sweep_parameter",
    "sweep_value",
    "nodes",
    "speed",
    "flows",
    "duration",
    "tx_rreq",
    "tx_rrep",
    "tx_rerr",
    "tx_hello",
    "tx_ack",
    "tx_data",
    "routing_tx",
    "generated",
    "delivered",
    "dropped",
    "in_flight",
    "delivered_bytes",
    "gratuitous_rreps",
    "discovery_failures",
    "throughput",
    "e2e_delay_mean",
    "e2e_delay_paper",
    "nrl_conventional",
    "routing_load_paper",
    "delivery_ratio",
];

const ANALYTIC_HEADER: &[&str] = &[
    "run_id",
    "experiment",
    "sweep_parameter",
    "sweep_value",
    "nodes",
    "hops",
    "route_life",
    "hello_interval",
    "forward_prob",
    "routes",
    "rreq",
    "rrep",
    "discovery",
    "hello",
    "aggregate",
];

const SENSITIVITY_HEADER: &[&str] = &[
    "run_id",
    "experiment",
    "sweep_parameter",
    "sweep_value",
    "nodes",
    "hops",
    "route_life",
    "hello_interval",
    "forward_prob",
    "derivative",
    "dy_dn",
    "dy_dhops",
    "dy_dlife",
    "dy_dinterval",
    "dx",
    "dz",
    "dy",
    "near_boundary",
];

const VALIDATE_HEADER: &[&str] = &[
    "run_id",
    "experiment",
    "rows",
    "cols",
    "nodes",
    "reachable",
    "hops",
    "analytical_rreq",
    "oracle_rreq",
    "simulated_rreq",
    "analytical_over_oracle",
    "simulated_over_oracle",
];

pub fn header(mode: Mode) -> &'static [&'static str] {
    match mode {
        Mode::Simulate | Mode::Compare => SIM_HEADER,
        Mode::Analytic => ANALYTIC_HEADER,
        Mode::Sensitivity => SENSITIVITY_HEADER,
        Mode::Validate => VALIDATE_HEADER,
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| NA.to_string(), |v| v.to_string())
}

pub fn row(mode: Mode, r: &RunRecord) -> Vec<String> {
    let mut out = vec![r.run_id.to_string(), r.experiment.clone()];
    match (&r.inputs, &r.output) {
        (RunInputs::Simulate { scenario, protocol }, RunOutput::Metrics(m)) => {
            let flows = if scenario.flows.explicit.is_empty() {
                scenario.flows.count
            } else {
                scenario.flows.explicit.len()
            };
            out.extend([
                protocol.name.clone(),
                scenario.seed.to_string(),
                opt(r.sweep_parameter.as_ref()),
                opt(r.sweep_value),
                opt(scenario.node_count().ok()),
                scenario.speed.to_string(),
                flows.to_string(),
                scenario.duration.to_string(),
            ]);
            let t = &m.tx;
            out.extend([t.rreq, t.rrep, t.rerr, t.hello, t.ack, t.data, t.routing_total()].map(|v| v.to_string()));
            out.extend(
                [
                    m.generated,
                    m.delivered,
                    m.dropped,
                    m.in_flight,
                    m.delivered_bytes,
                    m.gratuitous_rreps,
                    m.discovery_failures,
                ]
                .map(|v| v.to_string()),
            );
            out.extend([
                m.throughput.to_string(),
                opt(m.e2e_delay_mean),
                opt(m.e2e_delay_paper),
                opt(m.nrl_conventional),
                m.routing_load_paper.to_string(),
                opt(m.delivery_ratio),
            ]);
        }
        (RunInputs::Analytic(a), RunOutput::Overhead(o)) => {
            out.extend([opt(r.sweep_parameter.as_ref()), opt(r.sweep_value)]);
            let p = &a.params;
            out.extend([p.nodes, p.hops, p.route_life, p.hello_interval, p.forward_prob].map(|v| v.to_string()));
            out.push(a.routes.len().to_string());
            out.extend([o.rreq, o.rrep, o.discovery, o.hello, o.aggregate].map(|v| v.to_string()));
        }
        (RunInputs::Sensitivity(a), RunOutput::Sensitivity(s)) => {
            out.extend([opt(r.sweep_parameter.as_ref()), opt(r.sweep_value)]);
            let p = &a.params;
            out.extend([p.nodes, p.hops, p.route_life, p.hello_interval, p.forward_prob].map(|v| v.to_string()));
            out.push(s.mode.as_str().to_string());
            out.extend([s.dy_dn, s.dy_dhops, s.dy_dlife, s.dy_dinterval, s.dx, s.dz, s.dy].map(|v| v.to_string()));
            out.push(s.near_boundary.to_string());
        }
        (RunInputs::Validate { .. }, RunOutput::Validation(v)) => {
            out.extend([v.rows, v.cols, v.nodes].map(|x| x.to_string()));
            out.push(v.reachable.to_string());
            out.extend([
                opt(v.hops),
                opt(v.analytical),
                opt(v.oracle),
                opt(v.simulated),
                opt(v.analytical_over_oracle),
                opt(v.simulated_over_oracle),
            ]);
        }
        _ => {}
    }
    debug_assert!(
        out.len() == header(mode).len(),
        "row shape does not match the {mode:?} header"
    );
    out
}
