//! Text snapshot of a [`SwitchState`] so batch commands can hand switch
//! state to one another.
//!
//! ```text
//! ctiflow-state v1
//! clock 999
//! next_id 97
//! table 0 <lookups> <matches> <bytes>
//! flow <id> <install_time> <last_match> <packets> <bytes> <program line>
//! ```

use std::fmt::Write as _;

use super::switch::{InstalledFlow, SwitchState, TableCounters};
use crate::flow_compiler::{entry_from_line, entry_to_line, FormatError};
use crate::net::{TableId, NUM_TABLES};

pub const STATE_HEADER: &str = "ctiflow-state v1";

impl SwitchState {
    pub fn to_snapshot(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{STATE_HEADER}");
        let _ = writeln!(s, "clock {}", self.clock);
        let _ = writeln!(s, "next_id {}", self.next_id);
        for (t, c) in self.counters.iter().enumerate() {
            let _ = writeln!(s, "table {t} {} {} {}", c.lookups, c.matches, c.bytes);
        }
        for f in self.tables.iter().flatten() {
            let c = &f.entry.counters;
            let _ = writeln!(
                s,
                "flow {} {} {} {} {} {}",
                f.id,
                c.install_time,
                f.last_match,
                c.packet_count,
                c.byte_count,
                entry_to_line(&f.entry)
            );
        }
        s
    }

    pub fn from_snapshot(text: &str) -> Result<SwitchState, FormatError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end() == STATE_HEADER => {}
            _ => return Err(FormatError { line: 1, reason: format!("expected header {STATE_HEADER:?}") }),
        }
        let mut state = SwitchState::new();
        let mut saw_next_id = false;
        for (i, line) in lines {
            let line_no = i + 1;
            let err = |reason: &str| FormatError { line: line_no, reason: reason.to_string() };
            let num = |s: Option<&str>| -> Result<u64, FormatError> {
                s.and_then(|v| v.parse().ok()).ok_or_else(|| err("bad number"))
            };
            if line.trim().is_empty() {
                continue;
            }
            let mut words = line.splitn(7, ' ');
            match words.next() {
                Some("clock") => state.clock = num(words.next())?,
                Some("next_id") => {
                    state.next_id = num(words.next())?;
                    saw_next_id = true;
                }
                Some("table") => {
                    let t = num(words.next())? as usize;
                    if t >= NUM_TABLES {
                        return Err(err("bad table"));
                    }
                    state.counters[t] = TableCounters {
                        lookups: num(words.next())?,
                        matches: num(words.next())?,
                        bytes: num(words.next())?,
                    };
                }
                Some("flow") => {
                    let id = num(words.next())?;
                    let install_time = num(words.next())?;
                    let last_match = num(words.next())?;
                    let packets = num(words.next())?;
                    let bytes = num(words.next())?;
                    let mut entry =
                        entry_from_line(words.next().ok_or_else(|| err("missing entry"))?).map_err(|r| err(&r))?;
                    entry.counters.install_time = install_time;
                    entry.counters.packet_count = packets;
                    entry.counters.byte_count = bytes;
                    let table: TableId = entry.table_id;
                    if state.index.insert(id, table).is_some() {
                        return Err(err("duplicate flow id"));
                    }
                    if state.find(&entry.overlap_key()).is_some() {
                        return Err(err("duplicate (table, priority, match)"));
                    }
                    state.insert_sorted(InstalledFlow { id, entry, last_match });
                }
                _ => return Err(err("unrecognized line")),
            }
        }
        let max_id = state.index.keys().copied().max().unwrap_or(0);
        if !saw_next_id || state.next_id <= max_id {
            return Err(FormatError { line: 0, reason: "next_id missing or not above every flow id".into() });
        }
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow_compiler::{compile_indicators, TopologyConfig};
    use crate::net::MacAddr;
    use crate::pipeline_engine::PacketMeta;
    use std::net::Ipv4Addr;

    #[test]
    fn snapshot_roundtrip_preserves_counters() {
        let topo = TopologyConfig::three_host_testbed();
        let prog = compile_indicators(&topo, std::iter::empty()).unwrap();
        let mut sw = SwitchState::new();
        sw.install_program(&prog).unwrap();
        sw.advance_clock(3);
        let p = PacketMeta::ipv4(
            1,
            MacAddr::from_low_byte(1),
            topo.gateway_mac,
            Ipv4Addr::new(10, 0, 0, 1),
            Ipv4Addr::new(8, 8, 8, 8),
            1,
            98,
        );
        sw.process(&p);
        sw.advance_clock(2);
        let back = SwitchState::from_snapshot(&sw.to_snapshot()).unwrap();
        assert_eq!(back, sw);
    }

    #[test]
    fn snapshot_errors() {
        assert_eq!(SwitchState::from_snapshot("nope").unwrap_err().line, 1);
        let e = SwitchState::from_snapshot("ctiflow-state v1\nclock x\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(SwitchState::from_snapshot("ctiflow-state v1\nclock 1\n").is_err());
    }
}
