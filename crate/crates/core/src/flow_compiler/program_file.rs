//! Line format for compiled programs:
//!
//! ```text
//! ctiflow-program v1
//! 1,65000,eth_type=0x0800 ipv4_dst=198.51.100.7,drop,0/0,0x0
//! ```
//!
//! Fields are `table,priority,match-pairs,instruction,timeouts,cookie`.
//! A wildcard match is written `*`, timeouts as `hard/idle` seconds.

use std::fmt::Write as _;

use super::compile::FlowProgram;
use super::topology::TopologyConfig;
use super::types::{FlowEntry, Instruction, MatchSet};
use super::FormatError;

pub const PROGRAM_HEADER: &str = "ctiflow-program v1";

pub fn match_to_text(m: &MatchSet) -> String {
    let mut parts = Vec::new();
    if let Some(t) = m.eth_type {
        parts.push(format!("eth_type=0x{t:04x}"));
    }
    if let Some(mac) = m.eth_src {
        parts.push(format!("eth_src={mac}"));
    }
    if let Some(mac) = m.eth_dst {
        parts.push(format!("eth_dst={mac}"));
    }
    if let Some(a) = m.ipv4_src {
        parts.push(format!("ipv4_src={a}"));
    }
    if let Some(a) = m.ipv4_dst {
        parts.push(format!("ipv4_dst={a}"));
    }
    if parts.is_empty() {
        "*".into()
    } else {
        parts.join(" ")
    }
}

pub fn match_from_text(s: &str) -> Result<MatchSet, String> {
    let s = s.trim();
    let mut m = MatchSet::default();
    if s == "*" {
        return Ok(m);
    }
    for pair in s.split_whitespace() {
        let (k, v) = pair.split_once('=').ok_or_else(|| format!("bad match pair {pair:?}"))?;
        let dup = || format!("repeated match field {k}");
        match k {
            "eth_type" => {
                let hex = v.strip_prefix("0x").ok_or_else(|| format!("bad eth_type {v:?}"))?;
                let t = u16::from_str_radix(hex, 16).map_err(|_| format!("bad eth_type {v:?}"))?;
                if m.eth_type.replace(t).is_some() {
                    return Err(dup());
                }
            }
            "eth_src" | "eth_dst" => {
                let mac = v.parse().map_err(|e| format!("{e}"))?;
                let slot = if k == "eth_src" { &mut m.eth_src } else { &mut m.eth_dst };
                if slot.replace(mac).is_some() {
                    return Err(dup());
                }
            }
            "ipv4_src" | "ipv4_dst" => {
                let a = v.parse().map_err(|_| format!("bad address {v:?}"))?;
                let slot = if k == "ipv4_src" { &mut m.ipv4_src } else { &mut m.ipv4_dst };
                if slot.replace(a).is_some() {
                    return Err(dup());
                }
            }
            other => return Err(format!("unknown match field {other:?}")),
        }
    }
    Ok(m)
}

pub fn instruction_from_text(s: &str) -> Result<Instruction, String> {
    let s = s.trim();
    if s == "drop" {
        return Ok(Instruction::Drop);
    }
    if let Some(p) = s.strip_prefix("output:") {
        return p.parse().map(Instruction::Output).map_err(|_| format!("bad port {p:?}"));
    }
    if let Some(t) = s.strip_prefix("goto:") {
        return t.parse().map(Instruction::GotoTable).map_err(|_| format!("bad table {t:?}"));
    }
    Err(format!("unknown instruction {s:?}"))
}

pub fn entry_to_line(e: &FlowEntry) -> String {
    format!(
        "{},{},{},{},{}/{},0x{:x}",
        e.table_id,
        e.priority,
        match_to_text(&e.match_set),
        e.instruction,
        e.hard_timeout_s,
        e.idle_timeout_s,
        e.cookie
    )
}

pub fn entry_from_line(line: &str) -> Result<FlowEntry, String> {
    let fields: Vec<&str> = line.trim().split(',').collect();
    if fields.len() != 6 {
        return Err("wrong field count".into());
    }
    let table_id = fields[0].trim().parse().map_err(|_| format!("bad table {:?}", fields[0]))?;
    let priority = fields[1].trim().parse().map_err(|_| format!("bad priority {:?}", fields[1]))?;
    let match_set = match_from_text(fields[2])?;
    let instruction = instruction_from_text(fields[3])?;
    let (hard, idle) = fields[4].trim().split_once('/').ok_or("bad timeouts")?;
    let hard_timeout_s = hard.parse().map_err(|_| "bad hard timeout")?;
    let idle_timeout_s = idle.parse().map_err(|_| "bad idle timeout")?;
    let cookie_hex = fields[5].trim().strip_prefix("0x").ok_or("bad cookie")?;
    let cookie = u64::from_str_radix(cookie_hex, 16).map_err(|_| "bad cookie")?;
    let entry = FlowEntry {
        hard_timeout_s,
        idle_timeout_s,
        cookie,
        ..FlowEntry::new(table_id, priority, match_set, instruction)
    };
    entry.validate().map_err(|e| e.to_string())?;
    Ok(entry)
}

impl FlowProgram {
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(64 * (self.entries.len() + 1));
        s.push_str(PROGRAM_HEADER);
        s.push('\n');
        for e in &self.entries {
            let _ = writeln!(s, "{}", entry_to_line(e));
        }
        s
    }

    /// Parses a program file. The topology is supplied separately since the
    /// file only carries entries.
    pub fn parse(text: &str, topology: &TopologyConfig) -> Result<FlowProgram, FormatError> {
        let mut lines = text.lines();
        if lines.next().map(str::trim_end) != Some(PROGRAM_HEADER) {
            return Err(FormatError { line: 1, reason: format!("expected header {PROGRAM_HEADER:?}") });
        }
        let mut entries = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry = entry_from_line(line).map_err(|reason| FormatError { line: i + 2, reason })?;
            entries.push(entry);
        }
        let program = FlowProgram { entries, topology: topology.clone(), skipped_indicators: Vec::new() };
        program.check().map_err(|reason| FormatError { line: 0, reason })?;
        Ok(program)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::net::Ipv4Addr;

    #[test]
    fn drop_line_layout() {
        let e = FlowEntry::new(1, 65000, MatchSet::ipv4_dst(Ipv4Addr::new(198, 51, 100, 7)), Instruction::Drop);
        assert_eq!(entry_to_line(&e), "1,65000,eth_type=0x0800 ipv4_dst=198.51.100.7,drop,0/0,0x0");
        assert_eq!(entry_from_line(&entry_to_line(&e)).unwrap(), e);
    }

    #[test]
    fn wildcard_and_goto() {
        let e = FlowEntry::new(0, 90, MatchSet::wildcard(), Instruction::GotoTable(2)).with_timeouts(30, 5);
        assert_eq!(entry_to_line(&e), "0,90,*,goto:2,30/5,0x0");
        assert_eq!(entry_from_line("0,90,*,goto:2,30/5,0x0").unwrap(), e);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(entry_from_line("0,90,*,goto:0,0/0,0x0").unwrap_err().contains("bad instruction"));
        assert!(entry_from_line("1,1,ipv4_dst=1.2.3.4,drop,0/0,0x0").unwrap_err().contains("bad match"));
        assert!(entry_from_line("1,1,*,flood,0/0,0x0").is_err());
        assert!(entry_from_line("1,1,*,drop,0/0").is_err());
        assert!(entry_from_line("1,1,vlan=3,drop,0/0,0x0").is_err());
        assert!(entry_from_line("1,1,eth_type=0x0800 eth_type=0x0800,drop,0/0,0x0").is_err());
    }

    #[test]
    fn program_header_and_line_numbers() {
        let t = TopologyConfig::three_host_testbed();
        assert_eq!(FlowProgram::parse("nope\n", &t).unwrap_err().line, 1);
        let e = FlowProgram::parse("ctiflow-program v1\n0,0,*,drop,0/0,0x0\n0,0,*,bogus,0/0,0x0\n", &t).unwrap_err();
        assert_eq!(e.line, 3);
        let dup = "ctiflow-program v1\n0,0,*,drop,0/0,0x0\n0,0,*,output:1,0/0,0x0\n";
        assert!(FlowProgram::parse(dup, &t).unwrap_err().reason.contains("duplicate"));
    }
}
