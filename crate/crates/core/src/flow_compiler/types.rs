use std::fmt;
use std::net::Ipv4Addr;

use crate::net::{MacAddr, PortId, TableId, ETH_TYPE_IPV4, NUM_TABLES};

/// Threat drops sit above every forwarding rule.
pub const PRIORITY_DROP: u16 = 65000;
pub const PRIORITY_HOST: u16 = 100;
pub const PRIORITY_GOTO: u16 = 90;
pub const PRIORITY_DEFAULT: u16 = 0;

pub const TABLE_FORWARD: TableId = 0;
pub const TABLE_DST_DROP: TableId = 1;
pub const TABLE_SRC_DROP: TableId = 2;

/// Header fields a flow can match on. `None` is a wildcard.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MatchSet {
    pub eth_type: Option<u16>,
    pub eth_src: Option<MacAddr>,
    pub eth_dst: Option<MacAddr>,
    pub ipv4_src: Option<Ipv4Addr>,
    pub ipv4_dst: Option<Ipv4Addr>,
}

impl MatchSet {
    pub fn wildcard() -> Self {
        Self::default()
    }

    pub fn is_wildcard(&self) -> bool {
        *self == Self::default()
    }

    pub fn eth_dst(mac: MacAddr) -> Self {
        MatchSet { eth_dst: Some(mac), ..Self::default() }
    }

    pub fn eth_src(mac: MacAddr) -> Self {
        MatchSet { eth_src: Some(mac), ..Self::default() }
    }

    pub fn ipv4_dst(addr: Ipv4Addr) -> Self {
        MatchSet { eth_type: Some(ETH_TYPE_IPV4), ipv4_dst: Some(addr), ..Self::default() }
    }

    pub fn ipv4_src(addr: Ipv4Addr) -> Self {
        MatchSet { eth_type: Some(ETH_TYPE_IPV4), ipv4_src: Some(addr), ..Self::default() }
    }

    /// OpenFlow 1.3 prerequisite: IPv4 fields need `eth_type=0x0800`.
    pub fn prerequisites_hold(&self) -> bool {
        let has_ip = self.ipv4_src.is_some() || self.ipv4_dst.is_some();
        !has_ip || self.eth_type == Some(ETH_TYPE_IPV4)
    }

    pub fn has_ipv4_field(&self) -> bool {
        self.ipv4_src.is_some() || self.ipv4_dst.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Instruction {
    Drop,
    Output(PortId),
    GotoTable(TableId),
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Drop => f.write_str("drop"),
            Instruction::Output(p) => write!(f, "output:{p}"),
            Instruction::GotoTable(t) => write!(f, "goto:{t}"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct FlowCounters {
    pub packet_count: u64,
    pub byte_count: u64,
    pub install_time: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FlowEntry {
    pub table_id: TableId,
    pub priority: u16,
    pub match_set: MatchSet,
    pub instruction: Instruction,
    pub hard_timeout_s: u32,
    pub idle_timeout_s: u32,
    pub cookie: u64,
    pub counters: FlowCounters,
}

/// `(table, priority, match)`: what OpenFlow uses to decide that an add
/// overwrites an existing flow.
pub type OverlapKey = (TableId, u16, MatchSet);

/// `(table, priority, match, instruction)`: entries equal under this key are
/// left alone by incremental updates.
pub type IdentityKey = (TableId, u16, MatchSet, Instruction);

impl FlowEntry {
    /// Permanent entry with cookie 0 and zeroed counters.
    pub fn new(table_id: TableId, priority: u16, match_set: MatchSet, instruction: Instruction) -> Self {
        FlowEntry {
            table_id,
            priority,
            match_set,
            instruction,
            hard_timeout_s: 0,
            idle_timeout_s: 0,
            cookie: 0,
            counters: FlowCounters::default(),
        }
    }

    pub fn with_timeouts(mut self, hard_s: u32, idle_s: u32) -> Self {
        self.hard_timeout_s = hard_s;
        self.idle_timeout_s = idle_s;
        self
    }

    pub fn overlap_key(&self) -> OverlapKey {
        (self.table_id, self.priority, self.match_set)
    }

    pub fn identity_key(&self) -> IdentityKey {
        (self.table_id, self.priority, self.match_set, self.instruction)
    }

    pub fn is_drop(&self) -> bool {
        self.instruction == Instruction::Drop
    }

    pub fn validate(&self) -> Result<(), EntryError> {
        if self.table_id as usize >= NUM_TABLES {
            return Err(EntryError::BadTable(self.table_id));
        }
        if !self.match_set.prerequisites_hold() {
            return Err(EntryError::BadMatch);
        }
        if let Instruction::GotoTable(t) = self.instruction {
            if t <= self.table_id || t as usize >= NUM_TABLES {
                return Err(EntryError::BadInstruction);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum EntryError {
    #[error("bad table {0}")]
    BadTable(TableId),
    #[error("bad match")]
    BadMatch,
    #[error("bad instruction")]
    BadInstruction,
}
