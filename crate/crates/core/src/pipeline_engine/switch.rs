use std::collections::HashMap;

use super::packet::PacketMeta;
use super::SwitchError;
use crate::flow_compiler::{FlowEntry, FlowProgram, IdentityKey, Instruction, MatchSet, OverlapKey, UpdatePlan};
use crate::net::{PortId, TableId, NUM_TABLES};
use crate::par;

pub type FlowId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Dropped { table: TableId, flow: FlowId },
    Output(PortId),
    NoMatchDrop(TableId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TraceStep {
    pub table: TableId,
    /// `None` on a table miss.
    pub flow: Option<FlowId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Verdict {
    pub outcome: Outcome,
    pub trace: Vec<TraceStep>,
}

impl Verdict {
    pub fn is_output(&self) -> bool {
        matches!(self.outcome, Outcome::Output(_))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct TableCounters {
    pub lookups: u64,
    pub matches: u64,
    pub bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableStats {
    pub table_id: TableId,
    pub flows: usize,
    pub lookups: u64,
    pub matches: u64,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowStats {
    pub flow_id: FlowId,
    pub table_id: TableId,
    pub priority: u16,
    pub match_set: MatchSet,
    pub instruction: Instruction,
    pub packet_count: u64,
    pub byte_count: u64,
    pub duration_s: u64,
    /// Seconds since the last matched packet, or since install if none.
    pub since_last_match_s: u64,
    pub hard_timeout_s: u32,
    pub idle_timeout_s: u32,
    pub cookie: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct InstalledFlow {
    pub id: FlowId,
    pub entry: FlowEntry,
    pub last_match: u64,
}

/// Which slot matched in each visited table. Slots are positions in the
/// table vectors and stay valid only until the next mutation.
#[derive(Debug, Clone, Copy)]
struct Path {
    steps: [(TableId, Option<usize>); NUM_TABLES],
    len: usize,
    outcome: Outcome,
}

/// An emulated OpenFlow 1.3 switch with three flow tables.
///
/// Within a table, flows are kept ordered by descending priority, then
/// ascending flow id; lookup takes the first match in that order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SwitchState {
    pub(crate) tables: [Vec<InstalledFlow>; NUM_TABLES],
    pub(crate) counters: [TableCounters; NUM_TABLES],
    pub(crate) clock: u64,
    pub(crate) next_id: FlowId,
    pub(crate) index: HashMap<FlowId, TableId>,
}

impl SwitchState {
    pub fn new() -> Self {
        SwitchState { next_id: 1, ..Default::default() }
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn flow_count(&self) -> usize {
        self.index.len()
    }

    /// Adds `entry` with zeroed counters. An entry with the same
    /// `(table, priority, match)` is overwritten in place: it keeps its flow
    /// id and its counters restart from zero.
    pub fn install(&mut self, entry: FlowEntry) -> Result<FlowId, SwitchError> {
        entry.validate()?;
        let mut entry = entry;
        entry.counters = Default::default();
        entry.counters.install_time = self.clock;
        let table = &mut self.tables[entry.table_id as usize];
        if let Some(existing) = table.iter_mut().find(|f| f.entry.overlap_key() == entry.overlap_key()) {
            existing.entry = entry;
            existing.last_match = self.clock;
            return Ok(existing.id);
        }
        let id = self.next_id;
        self.next_id += 1;
        let table_id = entry.table_id;
        self.insert_sorted(InstalledFlow { id, entry, last_match: self.clock });
        self.index.insert(id, table_id);
        Ok(id)
    }

    pub(crate) fn insert_sorted(&mut self, flow: InstalledFlow) {
        let table = &mut self.tables[flow.entry.table_id as usize];
        let key = (std::cmp::Reverse(flow.entry.priority), flow.id);
        let pos = table.partition_point(|f| (std::cmp::Reverse(f.entry.priority), f.id) < key);
        table.insert(pos, flow);
    }

    /// Removes a flow and hands back its final state, counters included.
    pub fn remove(&mut self, id: FlowId) -> Result<FlowEntry, SwitchError> {
        let table_id = self.index.remove(&id).ok_or(SwitchError::NoSuchFlow(id))?;
        let table = &mut self.tables[table_id as usize];
        let pos = table.iter().position(|f| f.id == id).expect("index and table agree");
        Ok(table.remove(pos).entry)
    }

    pub fn find(&self, key: &OverlapKey) -> Option<FlowId> {
        self.tables.get(key.0 as usize)?.iter().find(|f| f.entry.overlap_key() == *key).map(|f| f.id)
    }

    fn find_identity(&self, key: &IdentityKey) -> Option<FlowId> {
        self.tables.get(key.0 as usize)?.iter().find(|f| f.entry.identity_key() == *key).map(|f| f.id)
    }

    pub fn entry(&self, id: FlowId) -> Option<&FlowEntry> {
        self.installed(id).map(|f| &f.entry)
    }

    fn installed(&self, id: FlowId) -> Option<&InstalledFlow> {
        let t = *self.index.get(&id)?;
        self.tables[t as usize].iter().find(|f| f.id == id)
    }

    /// Installed flows in pipeline order: table, then lookup order.
    pub fn flows(&self) -> impl Iterator<Item = (FlowId, &FlowEntry)> {
        self.tables.iter().flatten().map(|f| (f.id, &f.entry))
    }

    pub fn install_program(&mut self, program: &FlowProgram) -> Result<Vec<FlowId>, SwitchError> {
        program.entries.iter().map(|e| self.install(e.clone())).collect()
    }

    /// Removals first, then additions. Untouched flows keep their counters.
    pub fn apply_plan(&mut self, plan: &UpdatePlan) -> Result<(), SwitchError> {
        for e in &plan.to_remove {
            if let Some(id) = self.find_identity(&e.identity_key()) {
                self.remove(id)?;
            }
        }
        for e in &plan.to_add {
            self.install(e.clone())?;
        }
        Ok(())
    }

    pub fn has_timed_flows(&self) -> bool {
        self.tables.iter().flatten().any(|f| f.entry.hard_timeout_s > 0 || f.entry.idle_timeout_s > 0)
    }

    fn lookup_slot(&self, table: TableId, pkt: &PacketMeta) -> Option<usize> {
        self.tables[table as usize].iter().position(|f| f.entry.match_set.matches(pkt))
    }

    fn classify_path(&self, pkt: &PacketMeta) -> Path {
        let mut path = Path { steps: [(0, None); NUM_TABLES], len: 0, outcome: Outcome::NoMatchDrop(0) };
        let mut table: TableId = 0;
        loop {
            let slot = self.lookup_slot(table, pkt);
            path.steps[path.len] = (table, slot);
            path.len += 1;
            let Some(slot) = slot else {
                path.outcome = Outcome::NoMatchDrop(table);
                return path;
            };
            let flow = &self.tables[table as usize][slot];
            match flow.entry.instruction {
                Instruction::Drop => {
                    path.outcome = Outcome::Dropped { table, flow: flow.id };
                    return path;
                }
                Instruction::Output(p) => {
                    path.outcome = Outcome::Output(p);
                    return path;
                }
                // install() guarantees the target is a later, existing table
                Instruction::GotoTable(t) => table = t,
            }
        }
    }

    fn to_verdict(&self, path: &Path) -> Verdict {
        Verdict {
            outcome: path.outcome,
            trace: path.steps[..path.len]
                .iter()
                .map(|&(table, slot)| TraceStep { table, flow: slot.map(|s| self.tables[table as usize][s].id) })
                .collect(),
        }
    }

    fn commit(&mut self, path: &Path, wire_len: u32) {
        let bytes = u64::from(wire_len);
        for &(table, slot) in &path.steps[..path.len] {
            let c = &mut self.counters[table as usize];
            c.lookups += 1;
            if let Some(s) = slot {
                c.matches += 1;
                c.bytes += bytes;
                let f = &mut self.tables[table as usize][s];
                f.entry.counters.packet_count += 1;
                f.entry.counters.byte_count += bytes;
                f.last_match = self.clock;
            }
        }
    }

    /// Pipeline decision for `pkt` without touching any counter.
    pub fn classify(&self, pkt: &PacketMeta) -> Verdict {
        self.to_verdict(&self.classify_path(pkt))
    }

    /// Runs one packet through the pipeline, updating table and flow counters.
    pub fn process(&mut self, pkt: &PacketMeta) -> Verdict {
        let path = self.classify_path(pkt);
        let verdict = self.to_verdict(&path);
        self.commit(&path, pkt.wire_len);
        verdict
    }

    /// Same result as calling [`process`](Self::process) on each packet in
    /// order at the current clock. Lookups fan out across threads with the
    /// `parallel` feature; counters are then applied in packet order.
    pub fn process_batch(&mut self, pkts: &[PacketMeta]) -> Vec<Verdict> {
        let paths = par::map_slice(pkts, |p| self.classify_path(p));
        self.commit_paths(pkts, &paths)
    }

    pub fn process_batch_seq(&mut self, pkts: &[PacketMeta]) -> Vec<Verdict> {
        let paths = par::map_slice_seq(pkts, |p| self.classify_path(p));
        self.commit_paths(pkts, &paths)
    }

    /// Processes `pkts` in order, advancing the clock by `step_s` between
    /// consecutive packets, exactly as interleaving [`advance_clock`] and
    /// [`process`] would. When no installed flow has a timeout nothing can
    /// expire mid-stream, so lookups are batched up front.
    ///
    /// [`advance_clock`]: Self::advance_clock
    /// [`process`]: Self::process
    pub fn process_stream(&mut self, pkts: &[PacketMeta], step_s: u64) -> Vec<Verdict> {
        if self.has_timed_flows() && step_s > 0 {
            let mut out = Vec::with_capacity(pkts.len());
            for (i, p) in pkts.iter().enumerate() {
                if i > 0 {
                    self.advance_clock(step_s);
                }
                out.push(self.process(p));
            }
            return out;
        }
        let paths = par::map_slice(pkts, |p| self.classify_path(p));
        let verdicts: Vec<Verdict> = paths.iter().map(|p| self.to_verdict(p)).collect();
        for (i, (pkt, path)) in pkts.iter().zip(&paths).enumerate() {
            if i > 0 {
                self.clock += step_s;
            }
            self.commit(path, pkt.wire_len);
        }
        verdicts
    }

    fn commit_paths(&mut self, pkts: &[PacketMeta], paths: &[Path]) -> Vec<Verdict> {
        let verdicts: Vec<Verdict> = paths.iter().map(|p| self.to_verdict(p)).collect();
        for (pkt, path) in pkts.iter().zip(paths) {
            self.commit(path, pkt.wire_len);
        }
        verdicts
    }

    pub fn flow_stats(&self, id: FlowId) -> Result<FlowStats, SwitchError> {
        let f = self.installed(id).ok_or(SwitchError::NoSuchFlow(id))?;
        let e = &f.entry;
        Ok(FlowStats {
            flow_id: id,
            table_id: e.table_id,
            priority: e.priority,
            match_set: e.match_set,
            instruction: e.instruction,
            packet_count: e.counters.packet_count,
            byte_count: e.counters.byte_count,
            duration_s: self.clock - e.counters.install_time,
            since_last_match_s: self.clock - f.last_match,
            hard_timeout_s: e.hard_timeout_s,
            idle_timeout_s: e.idle_timeout_s,
            cookie: e.cookie,
        })
    }

    pub fn table_stats(&self) -> [TableStats; NUM_TABLES] {
        std::array::from_fn(|t| TableStats {
            table_id: t as TableId,
            flows: self.tables[t].len(),
            lookups: self.counters[t].lookups,
            matches: self.counters[t].matches,
            bytes: self.counters[t].bytes,
        })
    }

    /// Moves the clock forward and evicts flows whose hard or idle timeout
    /// has been exceeded. A zero timeout never expires.
    pub fn advance_clock(&mut self, seconds: u64) -> Vec<FlowId> {
        self.clock += seconds;
        let now = self.clock;
        let mut expired = Vec::new();
        for table in &mut self.tables {
            table.retain(|f| {
                let e = &f.entry;
                let hard = e.hard_timeout_s > 0 && now - e.counters.install_time > u64::from(e.hard_timeout_s);
                let idle = e.idle_timeout_s > 0 && now - f.last_match > u64::from(e.idle_timeout_s);
                if hard || idle {
                    expired.push(f.id);
                }
                !(hard || idle)
            });
        }
        for id in &expired {
            self.index.remove(id);
        }
        expired.sort_unstable();
        expired
    }
}
