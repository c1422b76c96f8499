//! Compiles a topology and indicator set into the three-table edge program.
//!
//! Table 0 forwards between hosts and steers gateway traffic: packets headed
//! to the gateway MAC go to table 1, packets arriving from it go to table 2.
//! Table 1 drops by destination address, table 2 by source address; both
//! fall through to a priority-0 default that forwards.

mod compile;
mod program_file;
mod topology;
mod types;

use thiserror::Error;

pub use compile::{
    compile_base, compile_drops, compile_indicators, compile_program, plan_update, sort_entries, FlowProgram,
    UpdatePlan, SKIP_NOT_L3,
};
pub use program_file::{
    entry_from_line, entry_to_line, instruction_from_text, match_from_text, match_to_text, PROGRAM_HEADER,
};
pub use topology::{HostEntry, TopologyConfig};
pub use types::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("programs were compiled for different topologies")]
    TopologyMismatch,
}

/// A text-format problem, with the 1-based line it was found on (0 when it
/// concerns the document as a whole).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct FormatError {
    pub line: usize,
    pub reason: String,
}
