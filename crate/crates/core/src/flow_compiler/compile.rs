use std::collections::{BTreeMap, BTreeSet};
use std::net::Ipv4Addr;

use super::topology::TopologyConfig;
use super::types::*;
use super::CompileError;
use crate::ioc_store::{Indicator, IndicatorStore};

pub const SKIP_NOT_L3: &str = "not compilable to L3 match";

/// Everything the edge switch runs, in deterministic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowProgram {
    pub entries: Vec<FlowEntry>,
    pub topology: TopologyConfig,
    pub skipped_indicators: Vec<(Indicator, String)>,
}

impl FlowProgram {
    pub fn table(&self, table_id: u8) -> impl Iterator<Item = &FlowEntry> {
        self.entries.iter().filter(move |e| e.table_id == table_id)
    }

    pub fn count_in_table(&self, table_id: u8) -> usize {
        self.table(table_id).count()
    }

    /// Drop entries in `table_id`, i.e. the compiled indicators for that direction.
    pub fn drop_entries(&self, table_id: u8) -> impl Iterator<Item = &FlowEntry> {
        self.table(table_id).filter(|e| e.is_drop() && e.priority == PRIORITY_DROP)
    }

    /// Checks every structural property a compiled or parsed program must have.
    pub fn check(&self) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            e.validate().map_err(|err| format!("{err} in {e:?}"))?;
            if !seen.insert(e.overlap_key()) {
                return Err(format!("duplicate (table, priority, match) in {e:?}"));
            }
        }
        Ok(())
    }
}

/// Orders entries by table, then descending priority, then match.
pub fn sort_entries(entries: &mut [FlowEntry]) {
    entries.sort_by(|a, b| {
        a.table_id
            .cmp(&b.table_id)
            .then(b.priority.cmp(&a.priority))
            .then(a.match_set.cmp(&b.match_set))
            .then(a.instruction.cmp(&b.instruction))
    });
}

/// Forwarding skeleton: host delivery and gateway steering in table 0,
/// pass-through defaults in tables 1 and 2.
pub fn compile_base(topology: &TopologyConfig) -> Result<Vec<FlowEntry>, CompileError> {
    topology.validate()?;
    let mut out = Vec::with_capacity(topology.host_entries.len() + 5);
    for h in &topology.host_entries {
        out.push(FlowEntry::new(TABLE_FORWARD, PRIORITY_HOST, MatchSet::eth_dst(h.mac), Instruction::Output(h.port)));
    }
    out.push(FlowEntry::new(
        TABLE_FORWARD,
        PRIORITY_GOTO,
        MatchSet::eth_dst(topology.gateway_mac),
        Instruction::GotoTable(TABLE_DST_DROP),
    ));
    out.push(FlowEntry::new(
        TABLE_FORWARD,
        PRIORITY_GOTO,
        MatchSet::eth_src(topology.gateway_mac),
        Instruction::GotoTable(TABLE_SRC_DROP),
    ));
    out.push(FlowEntry::new(TABLE_FORWARD, PRIORITY_DEFAULT, MatchSet::wildcard(), Instruction::Drop));
    out.push(FlowEntry::new(
        TABLE_DST_DROP,
        PRIORITY_DEFAULT,
        MatchSet::wildcard(),
        Instruction::Output(topology.gateway_port),
    ));
    out.push(FlowEntry::new(
        TABLE_SRC_DROP,
        PRIORITY_DEFAULT,
        MatchSet::wildcard(),
        Instruction::Output(topology.internal_port),
    ));
    Ok(out)
}

/// One destination drop (table 1) and one source drop (table 2) per
/// distinct IPv4 indicator. Everything else is reported as skipped.
pub fn compile_drops<'a, I>(indicators: I) -> (Vec<FlowEntry>, Vec<(Indicator, String)>)
where
    I: IntoIterator<Item = &'a Indicator>,
{
    let mut addrs: BTreeSet<Ipv4Addr> = BTreeSet::new();
    let mut skipped = Vec::new();
    for ind in indicators {
        match ind.ipv4() {
            Some(a) => {
                addrs.insert(a);
            }
            None => skipped.push((ind.clone(), SKIP_NOT_L3.to_string())),
        }
    }
    let mut entries = Vec::with_capacity(addrs.len() * 2);
    for &a in &addrs {
        entries.push(FlowEntry::new(TABLE_DST_DROP, PRIORITY_DROP, MatchSet::ipv4_dst(a), Instruction::Drop));
    }
    for &a in &addrs {
        entries.push(FlowEntry::new(TABLE_SRC_DROP, PRIORITY_DROP, MatchSet::ipv4_src(a), Instruction::Drop));
    }
    (entries, skipped)
}

pub fn compile_indicators<'a, I>(topology: &TopologyConfig, indicators: I) -> Result<FlowProgram, CompileError>
where
    I: IntoIterator<Item = &'a Indicator>,
{
    let mut entries = compile_base(topology)?;
    let (drops, skipped) = compile_drops(indicators);
    entries.extend(drops);
    sort_entries(&mut entries);
    Ok(FlowProgram { entries, topology: topology.clone(), skipped_indicators: skipped })
}

/// Full program for `topology` from every stored indicator at or above
/// `min_confidence`. Non-IPv4 indicators show up in `skipped_indicators`.
pub fn compile_program(
    topology: &TopologyConfig,
    store: &IndicatorStore,
    min_confidence: u8,
) -> Result<FlowProgram, CompileError> {
    compile_indicators(topology, store.query(None, min_confidence))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UpdatePlan {
    pub to_add: Vec<FlowEntry>,
    pub to_remove: Vec<FlowEntry>,
}

impl UpdatePlan {
    pub fn is_empty(&self) -> bool {
        self.to_add.is_empty() && self.to_remove.is_empty()
    }
}

/// Minimal add/remove sets turning `current` into `next`. Entries equal in
/// `(table, priority, match, instruction)` are not touched, so their
/// counters survive on a live switch.
pub fn plan_update(current: &FlowProgram, next: &FlowProgram) -> Result<UpdatePlan, CompileError> {
    if current.topology != next.topology {
        return Err(CompileError::TopologyMismatch);
    }
    let cur: BTreeMap<IdentityKey, &FlowEntry> = current.entries.iter().map(|e| (e.identity_key(), e)).collect();
    let nxt: BTreeMap<IdentityKey, &FlowEntry> = next.entries.iter().map(|e| (e.identity_key(), e)).collect();
    let mut plan = UpdatePlan {
        to_remove: cur.iter().filter(|(k, _)| !nxt.contains_key(k)).map(|(_, e)| (*e).clone()).collect(),
        to_add: nxt.iter().filter(|(k, _)| !cur.contains_key(k)).map(|(_, e)| (*e).clone()).collect(),
    };
    sort_entries(&mut plan.to_remove);
    sort_entries(&mut plan.to_add);
    Ok(plan)
}
