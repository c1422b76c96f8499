//! Brute-force reference switch and random program / packet generators
//! shared by the integration tests.

#![allow(dead_code)]

use std::net::Ipv4Addr;

use ctiflow::flow_compiler::{FlowEntry, Instruction, MatchSet};
use ctiflow::net::MacAddr;
use ctiflow::pipeline_engine::{FlowId, Outcome, PacketMeta, TraceStep, Verdict};
use rand::seq::SliceRandom;
use rand::Rng;

pub const MAC_POOL: [u8; 5] = [0x01, 0x02, 0x03, 0x10, 0xfe];
pub const IP_POOL: [[u8; 4]; 6] =
    [[10, 0, 0, 1], [10, 0, 0, 2], [198, 51, 100, 7], [203, 0, 113, 9], [203, 0, 113, 10], [8, 8, 8, 8]];

pub fn mac(rng: &mut impl Rng) -> MacAddr {
    MacAddr::from_low_byte(*MAC_POOL.choose(rng).unwrap())
}

pub fn ip(rng: &mut impl Rng) -> Ipv4Addr {
    Ipv4Addr::from(*IP_POOL.choose(rng).unwrap())
}

/// A valid entry over small address pools so that overlaps are common.
pub fn random_entry(rng: &mut impl Rng) -> FlowEntry {
    let table = rng.gen_range(0..3u8);
    let priority = *[0u16, 0, 10, 90, 100, 100, 65000, 65000].choose(rng).unwrap();
    let mut m = MatchSet::default();
    if rng.gen_bool(0.4) {
        m.eth_src = Some(mac(rng));
    }
    if rng.gen_bool(0.4) {
        m.eth_dst = Some(mac(rng));
    }
    if rng.gen_bool(0.35) {
        m.ipv4_src = Some(ip(rng));
    }
    if rng.gen_bool(0.35) {
        m.ipv4_dst = Some(ip(rng));
    }
    if m.ipv4_src.is_some() || m.ipv4_dst.is_some() {
        m.eth_type = Some(0x0800);
    } else if rng.gen_bool(0.2) {
        m.eth_type = Some(*[0x0800u16, 0x0806].choose(rng).unwrap());
    }
    let instruction = match rng.gen_range(0..3) {
        0 => Instruction::Drop,
        1 if table < 2 => Instruction::GotoTable(rng.gen_range(table + 1..3)),
        _ => Instruction::Output(rng.gen_range(1..=5)),
    };
    FlowEntry::new(table, priority, m, instruction)
}

pub fn random_program(rng: &mut impl Rng, max_len: usize) -> Vec<FlowEntry> {
    let n = rng.gen_range(0..=max_len);
    (0..n).map(|_| random_entry(rng)).collect()
}

pub fn random_packet(rng: &mut impl Rng) -> PacketMeta {
    let in_port = rng.gen_range(1..=5);
    let len = rng.gen_range(42..=1514);
    if rng.gen_bool(0.8) {
        PacketMeta::ipv4(in_port, mac(rng), mac(rng), ip(rng), ip(rng), *[1u8, 6, 17].choose(rng).unwrap(), len)
    } else {
        PacketMeta::l2(in_port, mac(rng), mac(rng), 0x0806, len)
    }
}

#[derive(Debug, Clone)]
pub struct OracleFlow {
    pub id: FlowId,
    pub entry: FlowEntry,
    pub packets: u64,
    pub bytes: u64,
}

/// Linear-scan switch: every lookup walks the whole flow list.
#[derive(Debug, Default)]
pub struct Oracle {
    pub flows: Vec<OracleFlow>,
    pub lookups: [u64; 3],
    pub matches: [u64; 3],
    pub bytes: [u64; 3],
    next_id: FlowId,
}

fn field_ok<T: PartialEq>(want: Option<T>, have: Option<T>) -> bool {
    match want {
        None => true,
        Some(w) => have == Some(w),
    }
}

pub fn oracle_matches(m: &MatchSet, p: &PacketMeta) -> bool {
    field_ok(m.eth_type, Some(p.eth_type))
        && field_ok(m.eth_src, Some(p.eth_src))
        && field_ok(m.eth_dst, Some(p.eth_dst))
        && field_ok(m.ipv4_src, p.ipv4_src)
        && field_ok(m.ipv4_dst, p.ipv4_dst)
}

impl Oracle {
    pub fn new() -> Self {
        Oracle { next_id: 1, ..Default::default() }
    }

    /// Same `(table, priority, match)` replaces in place, keeping the id.
    pub fn install(&mut self, entry: FlowEntry) -> FlowId {
        for f in &mut self.flows {
            if f.entry.table_id == entry.table_id
                && f.entry.priority == entry.priority
                && f.entry.match_set == entry.match_set
            {
                f.entry = entry;
                f.packets = 0;
                f.bytes = 0;
                return f.id;
            }
        }
        let id = self.next_id;
        self.next_id += 1;
        self.flows.push(OracleFlow { id, entry, packets: 0, bytes: 0 });
        id
    }

    pub fn process(&mut self, p: &PacketMeta) -> Verdict {
        let mut table = 0u8;
        let mut trace = Vec::new();
        loop {
            let t = usize::from(table);
            self.lookups[t] += 1;
            let mut best: Option<usize> = None;
            for (i, f) in self.flows.iter().enumerate() {
                if f.entry.table_id != table || !oracle_matches(&f.entry.match_set, p) {
                    continue;
                }
                best = match best {
                    None => Some(i),
                    Some(b) => {
                        let cur = &self.flows[b];
                        if f.entry.priority > cur.entry.priority
                            || (f.entry.priority == cur.entry.priority && f.id < cur.id)
                        {
                            Some(i)
                        } else {
                            Some(b)
                        }
                    }
                };
            }
            let Some(i) = best else {
                trace.push(TraceStep { table, flow: None });
                return Verdict { outcome: Outcome::NoMatchDrop(table), trace };
            };
            self.matches[t] += 1;
            self.bytes[t] += u64::from(p.wire_len);
            let f = &mut self.flows[i];
            f.packets += 1;
            f.bytes += u64::from(p.wire_len);
            trace.push(TraceStep { table, flow: Some(f.id) });
            match f.entry.instruction {
                Instruction::Drop => return Verdict { outcome: Outcome::Dropped { table, flow: f.id }, trace },
                Instruction::Output(port) => return Verdict { outcome: Outcome::Output(port), trace },
                Instruction::GotoTable(next) => table = next,
            }
        }
    }
}
