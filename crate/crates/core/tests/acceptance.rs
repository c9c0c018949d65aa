//! Exit-gate checks. Each test prints one PASS/FAIL line and then asserts.
//!
//! Run with `cargo test -p rload-core --test acceptance -- --nocapture` to
//! see the lines.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rload::experiment::{run_experiment, validate_model, Experiment, RunOutput, ValidationSpec};
use rload::grid::GridNetwork;
use rload::metrics::{median, MetricsReport};
use rload::overhead::{
    aggregate_overhead, hello_overhead_route, rrep_overhead, AnalyticalParams, CoverageIndexTable, RouteDescriptor,
};
use rload::protocols::ProtocolFeatureSet;
use rload::sensitivity::{
    overhead_at, partial_hops_exact, partial_interval, partial_life, partial_n_exact, total_differential, Deltas,
    DerivativeMode,
};
use rload::sim::{self, FlowConfig, FlowSpec, Placement, ScenarioConfig};

fn verdict(n: u32, title: &str, pass: bool, detail: impl AsRef<str>) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("criterion {n} [{tag}] {title}: {}", detail.as_ref());
    assert!(pass, "criterion {n} failed: {}", detail.as_ref());
}

/// Discovery count written out directly from its definition, as a check on
/// the library evaluator: tier sum of clamped brackets plus the floored
/// RREP term.
fn discovery_oracle(n: f64, hops: f64, p: f64, c: [f64; 3], tiers: &[f64]) -> f64 {
    let tier_count = hops.round().max(1.0) as usize;
    let mut rreq = 0.0;
    let mut reached = 0.0;
    for h in 1..=tier_count {
        let weight = 4.0 * 3f64.powi(h as i32 - 1);
        for (k, ci) in c.iter().enumerate() {
            let i = (k + 2) as f64;
            rreq += weight * ((n - 1.0 - i) - reached).max(0.0) * p * ci;
        }
        if h < tier_count {
            reached += tiers[h - 1];
        }
    }
    let rrep = (hops + hops / 2.0 * (n - hops - 2.0) * p).max(hops);
    rreq + rrep
}

fn hello_oracle(routes: &[(u32, f64, f64)]) -> f64 {
    routes.iter().map(|&(l, life, t)| 2.0 * life / t * f64::from(l)).sum()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

#[test]
fn criterion_1_closed_form_exactness() {
    let started = Instant::now();
    let hello = hello_overhead_route(&RouteDescriptor::new(3, 10.0, 2.0).unwrap()).unwrap();
    let rrep = rrep_overhead(&AnalyticalParams::new(25.0, 4.0, 10.0, 2.0, 1.0).unwrap());
    let elapsed = started.elapsed();
    verdict(
        1,
        "closed-form exactness",
        hello == 30.0 && rrep == 42.0 && elapsed.as_millis() < 1,
        format!("hello(T=10,t=2,l=3) = {hello}, rrep(H=4,n=25,p=1) = {rrep}, {elapsed:?}"),
    );
}

#[test]
fn criterion_2_derivative_correctness() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x2d);
    let (mut worst_t, mut worst_i) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let routes: Vec<(u32, f64, f64)> = (0..rng.random_range(1..4))
            .map(|_| {
                let t = rng.random_range(0.2..5.0);
                (rng.random_range(1..10), rng.random_range(t..60.0), t)
            })
            .collect();
        let desc: Vec<RouteDescriptor> = routes
            .iter()
            .map(|&(l, life, t)| RouteDescriptor::new(l, life, t).unwrap())
            .collect();
        // perturb every route's T (or t) together, as a shared displacement does
        let shift = |dl: f64, dt: f64| -> f64 {
            hello_oracle(
                &routes
                    .iter()
                    .map(|&(l, life, t)| (l, life + dl, t + dt))
                    .collect::<Vec<_>>(),
            )
        };
        let h = 1e-4;
        let fd_life = (shift(h, 0.0) - shift(-h, 0.0)) / (2.0 * h);
        let h = 1e-6;
        let fd_interval = (shift(0.0, h) - shift(0.0, -h)) / (2.0 * h);
        worst_t = worst_t.max(rel_err(partial_life(&desc), fd_life));
        worst_i = worst_i.max(rel_err(partial_interval(&desc), fd_interval));
    }

    let mut worst_n = 0.0f64;
    let mut worst_h = 0.0f64;
    let mut checked = 0;
    while checked < 100 {
        let n = rng.random_range(6.0..80.0);
        let hops = rng.random_range(1.0..6.0);
        let p = rng.random_range(0.05..1.0);
        let c = [
            rng.random_range(0.0..1.0),
            rng.random_range(0.0..1.0),
            rng.random_range(0.0..1.0),
        ];
        let tiers: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..8.0)).collect();
        let params = AnalyticalParams::new(n, hops, 10.0, 1.0, p).unwrap();
        let cov = CoverageIndexTable {
            c2: c[0],
            c3: c[1],
            c4: c[2],
        };
        let dn = partial_n_exact(&params, &cov, &tiers).unwrap();
        let dh = partial_hops_exact(&params, &cov, &tiers).unwrap();
        if dn.near_boundary || dh.near_boundary {
            continue;
        }
        let step = 1e-5;
        let fd_n = (discovery_oracle(n + step, hops, p, c, &tiers) - discovery_oracle(n - step, hops, p, c, &tiers))
            / (2.0 * step);
        let fd_h = (discovery_oracle(n, hops + step, p, c, &tiers) - discovery_oracle(n, hops - step, p, c, &tiers))
            / (2.0 * step);
        worst_n = worst_n.max(rel_err(dn.value, fd_n));
        worst_h = worst_h.max(rel_err(dh.value, fd_h));
        checked += 1;
    }
    let elapsed = started.elapsed();
    verdict(
        2,
        "derivative correctness",
        worst_t <= 1e-9 && worst_i <= 1e-6 && worst_n <= 1e-6 && worst_h <= 1e-6 && elapsed.as_secs_f64() < 1.0,
        format!("max rel err dT {worst_t:.2e}, dt {worst_i:.2e}, dn {worst_n:.2e}, dH {worst_h:.2e}, {elapsed:?}"),
    );
}

#[test]
fn criterion_3_total_differential_convergence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x3d);
    let cov = CoverageIndexTable::default();
    let tiers = vec![3.0; 10];
    let mut worst_ratio = f64::INFINITY;
    for _ in 0..20 {
        // fractional parts keep the whole displacement inside one smooth
        // piece of the discovery model
        let n = rng.random_range(10..60) as f64 + rng.random_range(0.2..0.8);
        let hops = rng.random_range(1..6) as f64 + rng.random_range(0.0..0.3);
        let t = rng.random_range(0.5..4.0);
        let life = rng.random_range(2.0 * t..60.0);
        let params = AnalyticalParams::new(n, hops, life, t, rng.random_range(0.1..1.0)).unwrap();
        let routes = [RouteDescriptor::new(rng.random_range(1..8), life, t).unwrap()];
        let base = Deltas {
            nodes: 0.1,
            hops: 0.1,
            // unequal relative shifts so T/t actually moves
            life: 0.05 * life,
            interval: -0.03 * t,
        };
        let origin = overhead_at(&params, &cov, &tiers, &routes, &Deltas::default()).unwrap();
        let errors: Vec<f64> = (0..4)
            .map(|k| {
                let d = base.scaled(0.5f64.powi(k));
                let predicted = total_differential(&params, &cov, &tiers, &routes, &d, DerivativeMode::Exact)
                    .unwrap()
                    .dy;
                let actual = overhead_at(&params, &cov, &tiers, &routes, &d).unwrap() - origin;
                (actual - predicted).abs()
            })
            .collect();
        for w in errors.windows(2) {
            worst_ratio = worst_ratio.min(w[0] / w[1]);
        }
    }
    let elapsed = started.elapsed();
    verdict(
        3,
        "total-differential convergence",
        worst_ratio >= 3.5 && elapsed.as_secs_f64() < 1.0,
        format!("smallest error reduction per halving {worst_ratio:.3} over 20 points x 3 halvings, {elapsed:?}"),
    );
}

#[test]
fn criterion_4_oracle_equivalence() {
    let started = Instant::now();
    let report = validate_model(&ValidationSpec::default()).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for row in &report.rows {
        let grid = GridNetwork::build(row.rows, row.cols, 100.0).unwrap();
        let src = grid.id(0, 0);
        let dst = grid.id(row.rows - 1, row.cols - 1);
        let trace = grid.flood_oracle(src, Some(grid.diameter()), Some(dst)).unwrap();
        // every node closer than the far corner re-emits once
        let expected = (row.rows * row.cols - 1) as u64;
        pass &= row.simulated == Some(trace.transmissions as u64)
            && row.oracle == Some(trace.transmissions as u64)
            && row.simulated == Some(expected);
        detail.push(format!(
            "{}x{} sim {:?} oracle {:?}",
            row.rows, row.cols, row.simulated, row.oracle
        ));
    }
    let three = report.rows.iter().find(|r| r.rows == 3 && r.cols == 3);
    pass &= three.is_some_and(|r| r.simulated == Some(8) && r.oracle == Some(8));
    pass &= report.rows.len() == 4;
    let elapsed = started.elapsed();
    pass &= elapsed.as_secs_f64() < 5.0;
    verdict(
        4,
        "oracle equivalence",
        pass,
        format!("{}, {elapsed:?}", detail.join("; ")),
    );
}

#[test]
fn criterion_5_hello_model_agreement() {
    let started = Instant::now();
    let links = 3u32;
    let mut scenario = ScenarioConfig {
        nodes: links as usize + 1,
        arena: [400.0, 100.0],
        speed: 0.0,
        radio_range: 120.0,
        duration: 30.0,
        placement: Placement::Line { spacing: 100.0 },
        flows: FlowConfig {
            explicit: vec![FlowSpec {
                src: 0,
                dst: links,
                rate: Some(1.0),
                start: Some(1.0),
                packets: Some(1),
            }],
            ..FlowConfig::default()
        },
        ..ScenarioConfig::default()
    };
    scenario.params.route_timeout = 10.0;
    scenario.params.hello_interval = 1.0;
    let report = sim::run(&scenario, &ProtocolFeatureSet::aodv()).unwrap();
    let model = hello_overhead_route(&RouteDescriptor::new(links, 10.0, 1.0).unwrap()).unwrap();
    let measured = report.tx.hello as f64;
    let elapsed = started.elapsed();
    let tolerance = 2.0 * f64::from(links);
    verdict(
        5,
        "HELLO model agreement",
        (measured - model).abs() <= tolerance && report.delivered == 1 && elapsed.as_secs_f64() < 5.0,
        format!("simulated {measured} vs model {model} (+/-{tolerance}), {elapsed:?}"),
    );
}

#[test]
fn criterion_6_conservation_and_determinism() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    let mut conserved = true;
    let mut runs = 0;
    for rep in 0..5 {
        let path = dir.path().join(format!("rep{rep}.csv"));
        let toml = format!(
            "name = \"determinism\"\nmode = \"compare\"\nseeds = [11, 12]\nparallelism = 4\noutput = {:?}\n\
             [scenario]\nduration = 60.0\nspeed = 5.0\n",
            path.to_str().unwrap()
        );
        let e = Experiment::from_toml_str(&toml).unwrap();
        let result = run_experiment(&e).unwrap();
        for r in &result.records {
            if let RunOutput::Metrics(m) = &r.output {
                runs += 1;
                conserved &= m.is_conserved() && m.generated == m.delivered + m.dropped + m.in_flight;
            }
        }
        outputs.push(std::fs::read(&path).unwrap());
    }
    let identical = outputs.windows(2).all(|w| w[0] == w[1]);
    let rows = outputs[0].iter().filter(|b| **b == b'\n').count() - 1;
    let elapsed = started.elapsed();
    verdict(
        6,
        "conservation and determinism",
        conserved && identical && rows == 6 && elapsed.as_secs_f64() < 30.0,
        format!(
            "{runs} runs conserved: {conserved}; 5 CSV repetitions of {rows} rows identical: {identical}, {elapsed:?}"
        ),
    );
}

fn desk_compare(seeds: &[u64]) -> Vec<(String, MetricsReport)> {
    let seeds: Vec<String> = seeds.iter().map(u64::to_string).collect();
    let toml = format!(
        "name = \"ordering\"\nmode = \"compare\"\nseeds = [{}]\nparallelism = {}\n",
        seeds.join(", "),
        std::thread::available_parallelism().map_or(2, |n| n.get())
    );
    let e = Experiment::from_toml_str(&toml).unwrap();
    assert!(e.scenario.speed > 0.0, "desk preset must be a mobility scenario");
    run_experiment(&e)
        .unwrap()
        .records
        .into_iter()
        .filter_map(|r| {
            let name = r.inputs.protocol_name()?.to_string();
            match r.output {
                RunOutput::Metrics(m) => Some((name, m)),
                _ => None,
            }
        })
        .collect()
}

#[test]
fn criterion_7_qualitative_ordering() {
    let started = Instant::now();
    let runs = desk_compare(&[1, 2, 3, 4, 5]);
    let med = |proto: &str, f: fn(&MetricsReport) -> Option<f64>| {
        median(runs.iter().filter(|(p, _)| p == proto).filter_map(|(_, m)| f(m))).unwrap_or(f64::NAN)
    };
    let nrl = |m: &MetricsReport| m.nrl_conventional;
    let delay = |m: &MetricsReport| m.e2e_delay_mean;
    let (nrl_aodv, nrl_dsr, nrl_dymo) = (med("AODV", nrl), med("DSR", nrl), med("DYMO", nrl));
    let (d_aodv, d_dymo) = (med("AODV", delay), med("DYMO", delay));
    let elapsed = started.elapsed();
    verdict(
        7,
        "qualitative ordering",
        runs.len() == 15 && nrl_dymo > nrl_aodv && nrl_dymo > nrl_dsr && d_dymo < d_aodv && elapsed.as_secs() < 300,
        format!(
            "median NRL DYMO {nrl_dymo:.3} AODV {nrl_aodv:.3} DSR {nrl_dsr:.3}; \
             median delay DYMO {d_dymo:.5} s AODV {d_aodv:.5} s, {elapsed:?}"
        ),
    );
}

#[test]
fn criterion_8_feature_flag_soundness() {
    let started = Instant::now();
    let mut grat_dymo = 0;
    let mut hello_dsr = 0;
    let mut runs = 0;
    for seed in 21..25 {
        for speed in [0.0, 2.0, 10.0] {
            let scenario = ScenarioConfig {
                seed,
                speed,
                duration: 100.0,
                ..ScenarioConfig::default()
            };
            grat_dymo += sim::run(&scenario, &ProtocolFeatureSet::dymo())
                .unwrap()
                .gratuitous_rreps;
            hello_dsr += sim::run(&scenario, &ProtocolFeatureSet::dsr()).unwrap().tx.hello;
            runs += 1;
        }
    }
    let elapsed = started.elapsed();
    verdict(
        8,
        "feature-flag soundness",
        grat_dymo == 0 && hello_dsr == 0 && elapsed.as_secs_f64() < 30.0,
        format!("{runs} scenarios each: DYMO gratuitous RREPs {grat_dymo}, DSR HELLOs {hello_dsr}, {elapsed:?}"),
    );
}

#[test]
fn criterion_9_monotonicity() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x9d);
    let cov = CoverageIndexTable::default();
    let tiers = vec![3.0; 8];
    let mut violations = Vec::new();
    for draw in 0..1000 {
        let n = rng.random_range(2.0..100.0);
        let hops = rng.random_range(1.0..6.0);
        let t = rng.random_range(0.1..5.0);
        let life = rng.random_range(t..100.0);
        let l = rng.random_range(1..10u32);
        let p = rng.random_range(0.0..=1.0);
        let eval = |n: f64, life: f64, t: f64, l: u32| {
            let params = AnalyticalParams::new(n, hops, life, t, p).unwrap();
            aggregate_overhead(&params, &cov, &tiers, &[RouteDescriptor::new(l, life, t).unwrap()])
                .unwrap()
                .aggregate
        };
        let y = eval(n, life, t, l);
        let step = rng.random_range(1e-3..5.0);
        let checks = [
            ("n", eval(n + step, life, t, l) >= y),
            ("T", eval(n, life + step, t, l) >= y),
            ("l", eval(n, life, t, l + 1) >= y),
            ("t", eval(n, life, (t + step).min(life), l) <= y),
        ];
        for (name, ok) in checks {
            if !ok {
                violations.push(format!("draw {draw}: {name}"));
            }
        }
    }
    let elapsed = started.elapsed();
    verdict(
        9,
        "monotonicity",
        violations.is_empty() && elapsed.as_secs_f64() < 1.0,
        format!(
            "1000 draws, violations {:?}, {elapsed:?}",
            violations.iter().take(5).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn discovery_oracle_matches_library() {
    let params = AnalyticalParams::new(25.0, 4.0, 10.0, 2.0, 1.0).unwrap();
    let cov = CoverageIndexTable::default();
    let tiers = [3.0, 3.0, 3.0];
    let lib = rload::sensitivity::discovery_at(&params, &cov, &tiers).unwrap();
    let oracle = discovery_oracle(25.0, 4.0, 1.0, [0.19, 0.33, 0.41], &tiers);
    assert!((lib - oracle).abs() < 1e-9 * oracle);
}
