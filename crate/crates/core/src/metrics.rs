//! Per-run counters and the evaluation metrics.
//!
//! Every report carries two forms of delay and routing load: the
//! conventional ones (mean one-way latency, routing packets per delivered
//! packet) used for comparisons, and literal evaluations of the textbook
//! formulas `generated · RTT / delivered` and
//! `routing + data transmissions − data sent`. Undefined values are `None`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::sim::PacketKind;

/// Transmissions per packet kind, counted once per hop.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketCounts {
    pub rreq: u64,
    pub rrep: u64,
    pub rerr: u64,
    pub hello: u64,
    pub ack: u64,
    pub data: u64,
}

impl PacketCounts {
    pub fn get(&self, kind: PacketKind) -> u64 {
        match kind {
            PacketKind::Rreq => self.rreq,
            PacketKind::Rrep => self.rrep,
            PacketKind::Rerr => self.rerr,
            PacketKind::Hello => self.hello,
            PacketKind::Ack => self.ack,
            PacketKind::Data => self.data,
        }
    }

    pub fn record(&mut self, kind: PacketKind) {
        let slot = match kind {
            PacketKind::Rreq => &mut self.rreq,
            PacketKind::Rrep => &mut self.rrep,
            PacketKind::Rerr => &mut self.rerr,
            PacketKind::Hello => &mut self.hello,
            PacketKind::Ack => &mut self.ack,
            PacketKind::Data => &mut self.data,
        };
        *slot += 1;
    }

    /// RREQ + RREP + RERR + HELLO + ACK.
    pub fn routing_total(&self) -> u64 {
        self.rreq + self.rrep + self.rerr + self.hello + self.ack
    }
}

/// Raw outcome of a run, before metrics are derived.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTally {
    pub tx: PacketCounts,
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub in_flight: u64,
    pub delivered_bytes: u64,
    pub latencies: Vec<f64>,
    pub gratuitous_rreps: u64,
    pub discovery_failures: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tx: PacketCounts,
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub in_flight: u64,
    pub delivered_bytes: u64,
    /// One-way latency of each delivered packet, in delivery order.
    pub latencies: Vec<f64>,
    pub duration: f64,
    pub throughput: f64,
    pub e2e_delay_mean: Option<f64>,
    pub e2e_delay_paper: Option<f64>,
    pub nrl_conventional: Option<f64>,
    /// Can be negative when few generated packets were ever transmitted.
    pub routing_load_paper: f64,
    pub delivery_ratio: Option<f64>,
    /// RREPs originated by a node other than the destination they advertise.
    pub gratuitous_rreps: u64,
    pub discovery_failures: u64,
}

impl MetricsReport {
    pub fn from_tally(t: RunTally, duration: f64) -> Result<Self> {
        let throughput = throughput(t.delivered_bytes, duration)?;
        let (mean, per_transmission) = e2e_delay(&t.latencies, t.generated);
        let (nrl, load) = routing_load(&t.tx, t.delivered, t.generated);
        let delivery_ratio = (t.generated > 0).then(|| t.delivered as f64 / t.generated as f64);
        Ok(MetricsReport {
            tx: t.tx,
            generated: t.generated,
            delivered: t.delivered,
            dropped: t.dropped,
            in_flight: t.in_flight,
            delivered_bytes: t.delivered_bytes,
            latencies: t.latencies,
            duration,
            throughput,
            e2e_delay_mean: mean,
            e2e_delay_paper: per_transmission,
            nrl_conventional: nrl,
            routing_load_paper: load,
            delivery_ratio,
            gratuitous_rreps: t.gratuitous_rreps,
            discovery_failures: t.discovery_failures,
        })
    }

    /// `generated == delivered + dropped + in_flight`.
    pub fn is_conserved(&self) -> bool {
        self.generated == self.delivered + self.dropped + self.in_flight
    }
}

/// Delivered bytes per second.
pub fn throughput(delivered_bytes: u64, duration: f64) -> Result<f64> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(invalid(format!("duration must be positive, got {duration}")));
    }
    Ok(delivered_bytes as f64 / duration)
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// `transmitted · rtt / received`.
pub fn transmissions_delay(transmitted: u64, rtt: f64, received: u64) -> Option<f64> {
    (received > 0).then(|| transmitted as f64 * rtt / received as f64)
}

/// Conventional mean latency and the literal form with an RTT of twice
/// that mean. Both are `None` when nothing was delivered.
pub fn e2e_delay(latencies: &[f64], generated: u64) -> (Option<f64>, Option<f64>) {
    let m = mean(latencies);
    let literal = m.and_then(|m| transmissions_delay(generated, 2.0 * m, latencies.len() as u64));
    (m, literal)
}

/// Conventional routing packets per delivered packet (`None` if nothing was
/// delivered) and the literal `routing + data transmissions − data sent`.
pub fn routing_load(tx: &PacketCounts, delivered: u64, generated: u64) -> (Option<f64>, f64) {
    let routing = tx.routing_total();
    let nrl = (delivered > 0).then(|| routing as f64 / delivered as f64);
    let literal = (routing + tx.data) as f64 - generated as f64;
    (nrl, literal)
}

/// Median of the finite values, `None` if there are none.
pub fn median(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}
