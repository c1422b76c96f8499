//! Human-readable dumps in the layout of a Zodiac FX style switch console.

use std::fmt::Write as _;

use super::switch::{FlowStats, SwitchState, TableStats};
use crate::flow_compiler::{Instruction, MatchSet};
use crate::net::ETH_TYPE_IPV4;

fn hms(secs: u64) -> String {
    format!("{:02}:{:02}:{:02}", secs / 3600, (secs / 60) % 60, secs % 60)
}

fn match_lines(m: &MatchSet, out: &mut String) {
    if m.is_wildcard() {
        out.push_str("  ANY\n");
        return;
    }
    match m.eth_type {
        Some(ETH_TYPE_IPV4) => out.push_str("  ETH Type: IPv4\n"),
        Some(t) => {
            let _ = writeln!(out, "  ETH Type: 0x{t:04x}");
        }
        None => {}
    }
    if let Some(mac) = m.eth_src {
        let _ = writeln!(out, "  Source MAC: {mac}");
    }
    if let Some(mac) = m.eth_dst {
        let _ = writeln!(out, "  Destination MAC: {mac}");
    }
    if let Some(a) = m.ipv4_src {
        let _ = writeln!(out, "  Source IP: {a}");
    }
    if let Some(a) = m.ipv4_dst {
        let _ = writeln!(out, "  Destination IP: {a}");
    }
}

/// One flow block: `Match:`, `Attributes:` and `Instructions:` sections.
pub fn render_flow(stats: &FlowStats) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Flow {}", stats.flow_id);
    s.push_str("Match:\n");
    match_lines(&stats.match_set, &mut s);
    s.push_str("Attributes:\n");
    let _ = writeln!(s, "  Table ID: {}", stats.table_id);
    let _ = writeln!(s, "  Priority: {}", stats.priority);
    let _ = writeln!(s, "  Hard Timeout: {} secs", stats.hard_timeout_s);
    let _ = writeln!(s, "  Byte Count: {}", stats.byte_count);
    let _ = writeln!(s, "  Last Match: {}", hms(stats.since_last_match_s));
    let _ = writeln!(s, "  Cookie:0x{:x}", stats.cookie);
    let _ = writeln!(s, "  Duration: {} secs", stats.duration_s);
    let _ = writeln!(s, "  Idle Timeout: {} secs", stats.idle_timeout_s);
    let _ = writeln!(s, "  Packet Count: {}", stats.packet_count);
    s.push_str("Instructions:\n");
    match stats.instruction {
        Instruction::Drop => s.push_str("  Apply Actions:\n  DROP\n"),
        Instruction::Output(p) => {
            let _ = write!(s, "  Apply Actions:\n  Output Port: {p}\n");
        }
        Instruction::GotoTable(t) => {
            let _ = writeln!(s, "  Goto Table: {t}");
        }
    }
    s
}

/// Every installed flow, optionally restricted to one table, separated by
/// blank lines.
pub fn render_flows(state: &SwitchState, table: Option<u8>) -> String {
    state
        .flows()
        .filter(|(_, e)| table.is_none_or(|t| e.table_id == t))
        .map(|(id, _)| render_flow(&state.flow_stats(id).expect("listed flow exists")))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Per-table block with `Table:/Flows:/Lookups:/Matches:/Bytes:` lines.
pub fn render_table_stats(stats: &[TableStats]) -> String {
    let mut s = String::from("-----\n");
    for (i, t) in stats.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        let _ = write!(
            s,
            "Table: {}\nFlows: {}\nLookups: {}\nMatches: {}\nBytes: {}\n",
            t.table_id, t.flows, t.lookups, t.matches, t.bytes
        );
    }
    s.push_str("-----\n");
    s
}
