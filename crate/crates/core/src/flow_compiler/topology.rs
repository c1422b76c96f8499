use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::{CompileError, FormatError};
use crate::net::{MacAddr, PortId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HostEntry {
    pub mac: MacAddr,
    pub port: PortId,
}

/// What the edge switch needs to know about its neighbourhood.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TopologyConfig {
    pub host_entries: Vec<HostEntry>,
    pub gateway_mac: MacAddr,
    pub gateway_port: PortId,
    pub internal_port: PortId,
}

impl TopologyConfig {
    pub fn validate(&self) -> Result<(), CompileError> {
        if self.gateway_port == self.internal_port {
            return Err(CompileError::InvalidTopology("gateway_port must differ from internal_port".into()));
        }
        let mut seen = BTreeSet::new();
        for h in &self.host_entries {
            if h.mac == self.gateway_mac {
                return Err(CompileError::InvalidTopology(format!("host MAC {} equals gateway_mac", h.mac)));
            }
            if !seen.insert(h.mac) {
                return Err(CompileError::InvalidTopology(format!("duplicate host MAC {}", h.mac)));
            }
        }
        Ok(())
    }

    pub fn host(&self, mac: MacAddr) -> Option<&HostEntry> {
        self.host_entries.iter().find(|h| h.mac == mac)
    }

    /// Parses `host <mac> <port>`, `gateway <mac> <port>` and
    /// `internal <port>` lines. `#` starts a comment.
    pub fn parse(text: &str) -> Result<TopologyConfig, FormatError> {
        let mut hosts = Vec::new();
        let mut gateway = None;
        let mut internal = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |reason: String| FormatError { line: line_no, reason };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            let mac = |s: &str| s.parse::<MacAddr>().map_err(|e| err(e.to_string()));
            let port = |s: &str| s.parse::<PortId>().map_err(|_| err(format!("bad port {s:?}")));
            match words.as_slice() {
                ["host", m, p] => hosts.push(HostEntry { mac: mac(m)?, port: port(p)? }),
                ["gateway", m, p] => {
                    if gateway.replace((mac(m)?, port(p)?)).is_some() {
                        return Err(err("gateway given twice".into()));
                    }
                }
                ["internal", p] => {
                    if internal.replace(port(p)?).is_some() {
                        return Err(err("internal given twice".into()));
                    }
                }
                _ => return Err(err(format!("unrecognized line {line:?}"))),
            }
        }
        let end = text.lines().count().max(1);
        let (gateway_mac, gateway_port) =
            gateway.ok_or(FormatError { line: end, reason: "missing gateway line".into() })?;
        let internal_port = internal.ok_or(FormatError { line: end, reason: "missing internal line".into() })?;
        Ok(TopologyConfig { host_entries: hosts, gateway_mac, gateway_port, internal_port })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for h in &self.host_entries {
            let _ = writeln!(s, "host {} {}", h.mac, h.port);
        }
        let _ = writeln!(s, "gateway {} {}", self.gateway_mac, self.gateway_port);
        let _ = writeln!(s, "internal {}", self.internal_port);
        s
    }

    /// Three hosts on ports 1..=3, gateway `00:00:00:00:00:fe` on port 4,
    /// internal uplink on port 5.
    pub fn three_host_testbed() -> TopologyConfig {
        TopologyConfig {
            host_entries: (1..=3).map(|i| HostEntry { mac: MacAddr::from_low_byte(i), port: i as PortId }).collect(),
            gateway_mac: MacAddr::from_low_byte(0xfe),
            gateway_port: 4,
            internal_port: 5,
        }
    }
}
