//! `key=value` traffic scenarios for `ctiflow simulate`.

use std::collections::BTreeMap;
use std::net::Ipv4Addr;

use anyhow::{anyhow, bail, Context, Result};
use ctiflow::flow_compiler::{HostEntry, TopologyConfig};
use ctiflow::net::{parse_ipv4_lenient, MacAddr, PortId};
use ctiflow::replay_harness::{PingSpec, DEFAULT_PING_PAYLOAD};

/// Destination MAC used for inbound traffic when none is given: a station
/// behind the internal uplink rather than one of the directly attached hosts.
pub const INTERNAL_STATION_MAC: MacAddr = MacAddr([0x02, 0, 0, 0, 0, 0x01]);

const KEYS: &[&str] = &[
    "direction",
    "src_host",
    "dst_host",
    "src_mac",
    "dst_mac",
    "src_ip",
    "dst_ip",
    "count",
    "payload",
    "interval",
    "expect",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Host towards the gateway; checked against table 1.
    Outbound,
    /// Gateway towards the inside; checked against table 2.
    Inbound,
    /// Host to host; never leaves table 0.
    Internal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    Deliver,
    Drop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub direction: Direction,
    pub ping: PingSpec,
    pub egress: PortId,
    pub interval_s: u64,
    pub expect: Option<Expect>,
}

fn host_ref(topo: &TopologyConfig, s: &str) -> Result<(usize, HostEntry)> {
    let idx = if let Some(n) = s.strip_prefix('h') {
        n.parse::<usize>().ok().filter(|&n| n >= 1).map(|n| n - 1)
    } else {
        let mac: MacAddr = s.parse().map_err(|e| anyhow!("host {s:?}: {e}"))?;
        topo.host_entries.iter().position(|h| h.mac == mac)
    };
    idx.and_then(|i| topo.host_entries.get(i).map(|h| (i, *h))).ok_or_else(|| anyhow!("no such host {s:?} in topology"))
}

fn default_host_ip(index: usize) -> Ipv4Addr {
    Ipv4Addr::new(10, 0, 0, (index + 1) as u8)
}

pub fn parse(text: &str, topo: &TopologyConfig) -> Result<Scenario> {
    let mut kv: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key=value", i + 1))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            bail!("line {}: unknown key {k:?}", i + 1);
        }
        if kv.insert(k, (i + 1, v.trim())).is_some() {
            bail!("line {}: {k} given twice", i + 1);
        }
    }
    let get = |k: &str| kv.get(k).copied();
    let ctx = |k: &str| match kv.get(k) {
        Some((line, _)) => format!("line {line}: {k}"),
        None => k.to_string(),
    };
    let ip = |k: &str| -> Result<Option<Ipv4Addr>> {
        get(k).map(|(_, v)| parse_ipv4_lenient(v).map_err(|e| anyhow!("{e}")).with_context(|| ctx(k))).transpose()
    };
    let mac = |k: &str| -> Result<Option<MacAddr>> {
        get(k).map(|(_, v)| v.parse::<MacAddr>().map_err(|e| anyhow!("{e}")).with_context(|| ctx(k))).transpose()
    };
    let host = |k: &str| -> Result<Option<(usize, HostEntry)>> {
        get(k).map(|(_, v)| host_ref(topo, v).with_context(|| ctx(k))).transpose()
    };

    let direction = match get("direction").map(|(_, v)| v) {
        None | Some("outbound") => Direction::Outbound,
        Some("inbound") => Direction::Inbound,
        Some("internal") => Direction::Internal,
        Some(other) => bail!("{}: expected outbound, inbound or internal, got {other:?}", ctx("direction")),
    };
    let count = match get("count") {
        Some((_, v)) => v.parse::<usize>().map_err(|_| anyhow!("{}: bad count {v:?}", ctx("count")))?,
        None => 1,
    };
    let payload_bytes = match get("payload") {
        Some((_, v)) => v.parse::<u32>().map_err(|_| anyhow!("{}: bad payload {v:?}", ctx("payload")))?,
        None => DEFAULT_PING_PAYLOAD,
    };
    if payload_bytes > 65_507 {
        bail!("{}: payload larger than an IPv4 datagram allows", ctx("payload"));
    }
    let interval_s = match get("interval") {
        Some((_, v)) => v.parse::<u64>().map_err(|_| anyhow!("{}: bad interval {v:?}", ctx("interval")))?,
        None => 1,
    };
    let expect = match get("expect").map(|(_, v)| v) {
        None => None,
        Some("deliver") | Some("delivered") => Some(Expect::Deliver),
        Some("drop") | Some("dropped") => Some(Expect::Drop),
        Some(other) => bail!("{}: expected deliver or drop, got {other:?}", ctx("expect")),
    };

    let src_host = host("src_host")?;
    let dst_host = host("dst_host")?;
    let (in_port, src_mac, dst_mac, egress, src_ip, dst_ip) = match direction {
        Direction::Outbound => {
            let (i, h) = src_host.ok_or_else(|| anyhow!("outbound scenario needs src_host"))?;
            let dst_ip = ip("dst_ip")?.ok_or_else(|| anyhow!("outbound scenario needs dst_ip"))?;
            let src_ip = ip("src_ip")?.unwrap_or(default_host_ip(i));
            (h.port, h.mac, topo.gateway_mac, topo.gateway_port, src_ip, dst_ip)
        }
        Direction::Inbound => {
            let src_ip = ip("src_ip")?.ok_or_else(|| anyhow!("inbound scenario needs src_ip"))?;
            let (dst_mac, egress, default_dst) = match (dst_host, mac("dst_mac")?) {
                (Some((i, h)), _) => (h.mac, h.port, Some(default_host_ip(i))),
                (None, Some(m)) => (m, topo.host(m).map_or(topo.internal_port, |h| h.port), None),
                (None, None) => (INTERNAL_STATION_MAC, topo.internal_port, None),
            };
            let dst_ip = ip("dst_ip")?.or(default_dst).ok_or_else(|| anyhow!("inbound scenario needs dst_ip"))?;
            (topo.gateway_port, topo.gateway_mac, dst_mac, egress, src_ip, dst_ip)
        }
        Direction::Internal => {
            let (i, s) = src_host.ok_or_else(|| anyhow!("internal scenario needs src_host"))?;
            let (j, d) = dst_host.ok_or_else(|| anyhow!("internal scenario needs dst_host"))?;
            let src_ip = ip("src_ip")?.unwrap_or(default_host_ip(i));
            let dst_ip = ip("dst_ip")?.unwrap_or(default_host_ip(j));
            (s.port, s.mac, d.mac, d.port, src_ip, dst_ip)
        }
    };
    let src_mac = mac("src_mac")?.unwrap_or(src_mac);
    Ok(Scenario {
        direction,
        ping: PingSpec { in_port, src_mac, dst_mac, src_ip, dst_ip, count, payload_bytes },
        egress,
        interval_s,
        expect,
    })
}
