//! Synthetic ping traffic, replay through a switch, and ping-style reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::net::Ipv4Addr;

use crate::net::{MacAddr, PortId, ETHERNET_HEADER_LEN};
use crate::pipeline_engine::{FlowId, Outcome, PacketMeta, SwitchState, Verdict};

pub const ICMP_HEADER_LEN: u32 = 8;
pub const IPV4_HEADER_LEN: u32 = 20;
pub const DEFAULT_PING_PAYLOAD: u32 = 56;
pub const IP_PROTO_ICMP: u8 = 1;

/// Parameters of an ICMP echo stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PingSpec {
    pub in_port: PortId,
    pub src_mac: MacAddr,
    pub dst_mac: MacAddr,
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    pub count: usize,
    pub payload_bytes: u32,
}

impl PingSpec {
    /// `count` default-size pings from a host towards the gateway.
    pub fn to_gateway(
        in_port: PortId,
        src_mac: MacAddr,
        gateway_mac: MacAddr,
        src_ip: Ipv4Addr,
        dst_ip: Ipv4Addr,
        count: usize,
    ) -> Self {
        PingSpec { in_port, src_mac, dst_mac: gateway_mac, src_ip, dst_ip, count, payload_bytes: DEFAULT_PING_PAYLOAD }
    }

    /// IP datagram size as ping prints it, e.g. the `84` in `56(84)`.
    pub fn ip_len(&self) -> u32 {
        self.payload_bytes + ICMP_HEADER_LEN + IPV4_HEADER_LEN
    }

    pub fn wire_len(&self) -> u32 {
        self.ip_len() + ETHERNET_HEADER_LEN
    }
}

pub fn make_ping_stream(spec: &PingSpec) -> Vec<PacketMeta> {
    let pkt = PacketMeta::ipv4(
        spec.in_port,
        spec.src_mac,
        spec.dst_mac,
        spec.src_ip,
        spec.dst_ip,
        IP_PROTO_ICMP,
        spec.wire_len(),
    );
    vec![pkt; spec.count]
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplaySummary {
    pub transmitted: u64,
    pub delivered: u64,
    pub dropped_by_flow: BTreeMap<FlowId, u64>,
    /// Neither delivered nor dropped by a flow: table misses, and outputs
    /// on a port other than the expected egress.
    pub missed: u64,
    pub loss_pct: f64,
    pub elapsed_virtual_s: u64,
}

impl ReplaySummary {
    pub fn dropped(&self) -> u64 {
        self.dropped_by_flow.values().sum()
    }

    fn record(&mut self, verdict: &Verdict, expected_egress: Option<PortId>) {
        self.transmitted += 1;
        match verdict.outcome {
            Outcome::Output(p) if expected_egress.is_none_or(|e| e == p) => self.delivered += 1,
            Outcome::Dropped { flow, .. } => *self.dropped_by_flow.entry(flow).or_default() += 1,
            _ => self.missed += 1,
        }
    }

    fn finish(&mut self) {
        self.loss_pct = if self.transmitted == 0 {
            0.0
        } else {
            100.0 * (self.transmitted - self.delivered) as f64 / self.transmitted as f64
        };
    }

    /// One `key=value` per line. `dropped_by_flow` is `id:count` pairs
    /// joined by commas, empty when nothing was dropped.
    pub fn to_kv(&self) -> String {
        let drops: Vec<String> = self.dropped_by_flow.iter().map(|(id, n)| format!("{id}:{n}")).collect();
        format!(
            "transmitted={}\ndelivered={}\ndropped_by_flow={}\nmissed={}\nloss_pct={}\nelapsed_virtual_s={}\n",
            self.transmitted,
            self.delivered,
            drops.join(","),
            self.missed,
            format_pct(self.loss_pct),
            self.elapsed_virtual_s
        )
    }
}

/// Processes `packets` in order, advancing the switch clock by
/// `inter_packet_s` between consecutive packets. A packet counts as
/// delivered when it is output on `expected_egress`, or on any port when no
/// egress is given.
pub fn replay(
    state: &mut SwitchState,
    packets: &[PacketMeta],
    expected_egress: Option<PortId>,
    inter_packet_s: u64,
) -> ReplaySummary {
    let mut summary = ReplaySummary::default();
    if packets.is_empty() {
        summary.finish();
        return summary;
    }
    let verdicts = state.process_stream(packets, inter_packet_s);
    for v in &verdicts {
        summary.record(v, expected_egress);
    }
    summary.elapsed_virtual_s = (packets.len() as u64 - 1) * inter_packet_s;
    summary.finish();
    summary
}

fn format_pct(p: f64) -> String {
    if p.fract() == 0.0 {
        format!("{p:.0}")
    } else {
        let s = format!("{p:.4}");
        s.trim_end_matches('0').to_string()
    }
}

/// The `PING ...` banner line.
pub fn render_ping_banner(spec: &PingSpec) -> String {
    format!("PING {dst} ({dst}) {}({}) bytes of data.\n", spec.payload_bytes, spec.ip_len(), dst = spec.dst_ip)
}

/// The closing statistics block of a ping run.
pub fn render_ping_report(summary: &ReplaySummary, dst_ip: Ipv4Addr) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "--- {dst_ip} ping statistics ---");
    let _ = writeln!(
        s,
        "{} packets transmitted, {} received, {}% packet loss, time {}ms",
        summary.transmitted,
        summary.delivered,
        format_pct(summary.loss_pct),
        summary.elapsed_virtual_s * 1000
    );
    s
}
