use rload::protocols::ProtocolFeatureSet;
use rload::sim::{self, FlowConfig, FlowSpec, Placement, ScenarioConfig, Simulation};

fn presets() -> [ProtocolFeatureSet; 3] {
    [
        ProtocolFeatureSet::aodv(),
        ProtocolFeatureSet::dsr(),
        ProtocolFeatureSet::dymo(),
    ]
}

fn one_packet(nodes: usize, spacing: f64, range: f64) -> ScenarioConfig {
    ScenarioConfig {
        nodes,
        arena: [spacing * nodes as f64, 100.0],
        speed: 0.0,
        radio_range: range,
        duration: 20.0,
        placement: Placement::Line { spacing },
        flows: FlowConfig {
            explicit: vec![FlowSpec {
                src: 0,
                dst: nodes as u32 - 1,
                rate: Some(1.0),
                start: Some(1.0),
                packets: Some(1),
            }],
            ..FlowConfig::default()
        },
        ..ScenarioConfig::default()
    }
}

#[test]
fn two_nodes_in_range_need_one_request_and_one_reply() {
    for features in presets() {
        let report = sim::run(&one_packet(2, 100.0, 250.0), &features).unwrap();
        assert_eq!(report.generated, 1, "{}", features.name);
        assert_eq!(report.delivery_ratio, Some(1.0), "{}", features.name);
        assert_eq!(report.tx.rreq, 1, "{}", features.name);
        assert_eq!(report.tx.rrep, 1, "{}", features.name);
        assert_eq!(report.tx.rerr, 0, "{}", features.name);
    }
}

#[test]
fn two_nodes_out_of_range_deliver_nothing() {
    for features in presets() {
        let report = sim::run(&one_packet(2, 400.0, 250.0), &features).unwrap();
        assert_eq!(report.delivered, 0);
        assert_eq!(report.dropped, 1, "{}", features.name);
        assert_eq!(report.discovery_failures, 1, "{}", features.name);
        assert_eq!(report.tx.rrep, 0);
        assert_eq!(report.delivery_ratio, Some(0.0));
    }
}

#[test]
fn one_packet_over_a_chain_costs_what_the_flood_costs() {
    // 5 nodes in a line, one hop apart; ring TTLs 1 and 3 fail before 7
    // covers the 4 hops, so the flood runs three times.
    let cfg = one_packet(5, 100.0, 120.0);
    let report = sim::run(&cfg, &ProtocolFeatureSet::aodv()).unwrap();
    assert_eq!(report.delivered, 1);
    // ttl 1: source only; ttl 3: nodes 0..=2; ttl 7: nodes 0..=3
    assert_eq!(report.tx.rreq, 1 + 3 + 4);
    assert_eq!(report.tx.rrep, 4);
    assert_eq!(report.tx.data, 4);
}

#[test]
fn preinstalled_routes_skip_discovery() {
    let mut cfg = one_packet(5, 100.0, 120.0);
    cfg.preinstall_routes = true;
    for features in presets() {
        let report = sim::run(&cfg, &features).unwrap();
        assert_eq!(report.delivered, 1, "{}", features.name);
        if features.check_store_before_discovery {
            assert_eq!(report.tx.rreq, 0, "{}", features.name);
        }
    }
}

#[test]
fn desk_runs_are_sound_for_every_preset() {
    for features in presets() {
        let cfg = ScenarioConfig {
            duration: 60.0,
            speed: 5.0,
            seed: 3,
            ..ScenarioConfig::default()
        };
        let outcome = Simulation::new(&cfg, &features).unwrap().run().unwrap();
        let d = &outcome.diagnostics;
        assert_eq!(d.unaccounted, 0, "{}", features.name);
        assert_eq!(d.duplicate_rreq_emissions, 0, "{}", features.name);
        assert_eq!(d.causality_violations, 0, "{}", features.name);
        assert!(outcome.report.is_conserved());
        assert!(outcome.report.delivered > 0);
    }
}

#[test]
fn same_seed_same_report_other_seed_differs() {
    let cfg = ScenarioConfig {
        duration: 40.0,
        ..ScenarioConfig::default()
    };
    let a = sim::run(&cfg, &ProtocolFeatureSet::aodv()).unwrap();
    let b = sim::run(&cfg, &ProtocolFeatureSet::aodv()).unwrap();
    assert_eq!(a, b);
    let c = sim::run(
        &ScenarioConfig {
            seed: cfg.seed + 1,
            ..cfg
        },
        &ProtocolFeatureSet::aodv(),
    )
    .unwrap();
    assert_ne!(a, c);
}

#[test]
fn static_network_stays_connected_when_dense() {
    let cfg = ScenarioConfig {
        speed: 0.0,
        duration: 30.0,
        placement: Placement::Grid {
            rows: 4,
            cols: 4,
            spacing: 100.0,
            blackouts: Vec::new(),
        },
        radio_range: 150.0,
        ..ScenarioConfig::default()
    };
    for features in presets() {
        let report = sim::run(&cfg, &features).unwrap();
        // nothing moves, so every packet but the tail in the air arrives
        assert_eq!(report.dropped, 0, "{}", features.name);
        assert!(report.delivery_ratio.unwrap() > 0.99, "{}", features.name);
    }
}

#[test]
fn trace_is_line_delimited_json() {
    let cfg = one_packet(3, 100.0, 120.0);
    let mut sink = Vec::new();
    let outcome = Simulation::new(&cfg, &ProtocolFeatureSet::dsr())
        .unwrap()
        .with_trace(&mut sink)
        .run()
        .unwrap();
    let text = String::from_utf8(sink).unwrap();
    let mut last = 0.0;
    let mut lines = 0;
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let t = v["t"].as_f64().unwrap();
        assert!(t >= last);
        last = t;
        lines += 1;
    }
    assert!(lines as u64 >= outcome.diagnostics.events);
}

#[test]
fn unknown_protocol_or_bad_scenario_is_rejected() {
    let cfg = ScenarioConfig {
        duration: -1.0,
        ..ScenarioConfig::default()
    };
    assert!(sim::run(&cfg, &ProtocolFeatureSet::aodv()).is_err());
    assert!(ProtocolFeatureSet::preset("olsr").is_err());
}
