//! Emulated OpenFlow 1.3 multi-table pipeline with flow and table counters.
//!
//! Each table picks its highest-priority matching flow (lowest flow id on
//! ties). Byte counters use the full Ethernet frame length. The clock only
//! moves through [`SwitchState::advance_clock`].

mod dump;
mod packet;
mod snapshot;
mod switch;

use thiserror::Error;

use crate::flow_compiler::EntryError;

pub use dump::{render_flow, render_flows, render_table_stats};
pub use packet::PacketMeta;
pub use snapshot::STATE_HEADER;
pub use switch::{FlowId, FlowStats, Outcome, SwitchState, TableCounters, TableStats, TraceStep, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SwitchError {
    #[error("bad match")]
    BadMatch,
    #[error("bad instruction")]
    BadInstruction,
    #[error("bad table {0}")]
    BadTable(u8),
    #[error("no such flow {0}")]
    NoSuchFlow(FlowId),
}

impl From<EntryError> for SwitchError {
    fn from(e: EntryError) -> Self {
        match e {
            EntryError::BadMatch => SwitchError::BadMatch,
            EntryError::BadInstruction => SwitchError::BadInstruction,
            EntryError::BadTable(t) => SwitchError::BadTable(t),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow_compiler::{compile_indicators, FlowEntry, Instruction, MatchSet, TopologyConfig};
    use crate::ioc_store::{Indicator, IndicatorType};
    use crate::net::{MacAddr, ETH_TYPE_IPV4};
    use std::net::Ipv4Addr;

    const BAD: Ipv4Addr = Ipv4Addr::new(198, 51, 100, 7);

    fn compiled() -> (TopologyConfig, SwitchState) {
        let topo = TopologyConfig::three_host_testbed();
        let ind = Indicator::new(IndicatorType::Ipv4, "198.51.100.7", Some(85), "feedA", None, ["scanner"]).unwrap();
        let prog = compile_indicators(&topo, [&ind]).unwrap();
        let mut sw = SwitchState::new();
        sw.install_program(&prog).unwrap();
        (topo, sw)
    }

    fn drop_entry() -> FlowEntry {
        FlowEntry::new(1, 65000, MatchSet::ipv4_dst(BAD), Instruction::Drop)
    }

    #[test]
    fn install_starts_with_zero_counters() {
        let mut sw = SwitchState::new();
        let id = sw.install(drop_entry()).unwrap();
        let st = sw.flow_stats(id).unwrap();
        assert_eq!((st.packet_count, st.byte_count, st.duration_s), (0, 0, 0));
        assert_eq!(sw.table_stats()[1].flows, 1);
    }

    #[test]
    fn install_rejects_bad_entries() {
        let mut sw = SwitchState::new();
        let mut m = MatchSet::ipv4_dst(BAD);
        m.eth_type = None;
        assert_eq!(sw.install(FlowEntry::new(1, 1, m, Instruction::Drop)), Err(SwitchError::BadMatch));
        assert_eq!(
            sw.install(FlowEntry::new(2, 1, MatchSet::wildcard(), Instruction::GotoTable(1))),
            Err(SwitchError::BadInstruction)
        );
        assert_eq!(
            sw.install(FlowEntry::new(3, 1, MatchSet::wildcard(), Instruction::Drop)),
            Err(SwitchError::BadTable(3))
        );
        assert_eq!(sw.flow_count(), 0);
    }

    #[test]
    fn install_overwrite_resets_counters() {
        let mut sw = SwitchState::new();
        let id = sw.install(drop_entry()).unwrap();
        let p = PacketMeta::ipv4(1, MacAddr::from_low_byte(1), MacAddr::from_low_byte(2), BAD, BAD, 1, 98);
        sw.install(FlowEntry::new(0, 0, MatchSet::wildcard(), Instruction::GotoTable(1))).unwrap();
        sw.process(&p);
        assert_eq!(sw.flow_stats(id).unwrap().packet_count, 1);
        assert_eq!(sw.install(drop_entry()).unwrap(), id);
        assert_eq!(sw.table_stats()[1].flows, 1);
        assert_eq!(sw.flow_stats(id).unwrap().packet_count, 0);
    }

    #[test]
    fn remove_semantics() {
        let mut sw = SwitchState::new();
        assert_eq!(sw.remove(1), Err(SwitchError::NoSuchFlow(1)));
        let id = sw.install(drop_entry()).unwrap();
        sw.install(FlowEntry::new(0, 0, MatchSet::wildcard(), Instruction::GotoTable(1))).unwrap();
        let p = PacketMeta::ipv4(1, MacAddr::from_low_byte(1), MacAddr::from_low_byte(2), BAD, BAD, 1, 98);
        for _ in 0..1000 {
            sw.process(&p);
        }
        let gone = sw.remove(id).unwrap();
        assert_eq!(gone.counters.packet_count, 1000);
        assert_eq!(sw.table_stats()[1].flows, 0);
        assert_eq!(sw.remove(id), Err(SwitchError::NoSuchFlow(id)));
        assert!(sw.flow_stats(id).is_err());
    }

    #[test]
    fn outbound_to_malicious_destination_drops_in_table_1() {
        let (topo, mut sw) = compiled();
        let p =
            PacketMeta::ipv4(1, MacAddr::from_low_byte(1), topo.gateway_mac, Ipv4Addr::new(10, 0, 0, 1), BAD, 1, 98);
        let v = sw.process(&p);
        let goto = sw.find(&(0, 90, MatchSet::eth_dst(topo.gateway_mac))).unwrap();
        let drop = sw.find(&(1, 65000, MatchSet::ipv4_dst(BAD))).unwrap();
        assert_eq!(v.outcome, Outcome::Dropped { table: 1, flow: drop });
        assert_eq!(v.trace, vec![TraceStep { table: 0, flow: Some(goto) }, TraceStep { table: 1, flow: Some(drop) }]);
        let st = sw.flow_stats(drop).unwrap();
        assert_eq!((st.packet_count, st.byte_count), (1, 98));
    }

    #[test]
    fn host_traffic_stays_in_table_0() {
        let (_, mut sw) = compiled();
        let p = PacketMeta::ipv4(
            1,
            MacAddr::from_low_byte(1),
            MacAddr::from_low_byte(2),
            Ipv4Addr::new(10, 0, 0, 1),
            Ipv4Addr::new(10, 0, 0, 2),
            1,
            98,
        );
        let v = sw.process(&p);
        assert_eq!(v.outcome, Outcome::Output(2));
        assert_eq!(v.trace.len(), 1);
        let ts = sw.table_stats();
        assert_eq!((ts[1].lookups, ts[2].lookups), (0, 0));
    }

    #[test]
    fn inbound_benign_forwards_to_internal_port() {
        let (topo, mut sw) = compiled();
        let p = PacketMeta::ipv4(
            topo.gateway_port,
            topo.gateway_mac,
            MacAddr::from_low_byte(0x10),
            Ipv4Addr::new(203, 0, 113, 9),
            Ipv4Addr::new(10, 0, 0, 1),
            1,
            98,
        );
        let v = sw.process(&p);
        let goto = sw.find(&(0, 90, MatchSet::eth_src(topo.gateway_mac))).unwrap();
        let default = sw.find(&(2, 0, MatchSet::wildcard())).unwrap();
        assert_eq!(v.outcome, Outcome::Output(topo.internal_port));
        assert_eq!(
            v.trace,
            vec![TraceStep { table: 0, flow: Some(goto) }, TraceStep { table: 2, flow: Some(default) }]
        );
    }

    #[test]
    fn table_stats_accounting() {
        let (topo, mut sw) = compiled();
        for s in sw.table_stats() {
            assert_eq!((s.lookups, s.matches, s.bytes), (0, 0, 0));
        }
        assert_eq!(sw.table_stats().map(|s| s.flows), [6, 2, 2]);
        let benign_out = PacketMeta::ipv4(
            1,
            MacAddr::from_low_byte(1),
            topo.gateway_mac,
            Ipv4Addr::new(10, 0, 0, 1),
            Ipv4Addr::new(8, 8, 8, 8),
            1,
            98,
        );
        for _ in 0..10 {
            assert_eq!(sw.process(&benign_out).outcome, Outcome::Output(topo.gateway_port));
        }
        let ts = sw.table_stats();
        assert_eq!((ts[0].lookups, ts[0].matches), (10, 10));
        assert_eq!((ts[1].lookups, ts[1].matches), (10, 10));

        // Strip table 0's miss entry so unknown destinations miss outright.
        let miss = sw.find(&(0, 0, MatchSet::wildcard())).unwrap();
        sw.remove(miss).unwrap();
        let stray = PacketMeta::l2(7, MacAddr::from_low_byte(0x42), MacAddr::from_low_byte(0x43), 0x0806, 60);
        for _ in 0..5 {
            assert_eq!(sw.process(&stray).outcome, Outcome::NoMatchDrop(0));
        }
        let ts = sw.table_stats();
        assert_eq!((ts[0].lookups, ts[0].matches), (15, 10));
    }

    #[test]
    fn flow_stats_duration_and_bytes() {
        let (topo, mut sw) = compiled();
        let drop = sw.find(&(1, 65000, MatchSet::ipv4_dst(BAD))).unwrap();
        sw.advance_clock(2070);
        let p =
            PacketMeta::ipv4(1, MacAddr::from_low_byte(1), topo.gateway_mac, Ipv4Addr::new(10, 0, 0, 1), BAD, 1, 98);
        for _ in 0..1000 {
            sw.process(&p);
        }
        let st = sw.flow_stats(drop).unwrap();
        assert_eq!((st.duration_s, st.packet_count, st.byte_count), (2070, 1000, 98000));
    }

    #[test]
    fn zero_timeouts_never_expire() {
        let (_, mut sw) = compiled();
        assert!(sw.advance_clock(1_000_000).is_empty());
        assert_eq!(sw.flow_count(), 10);
    }

    #[test]
    fn hard_timeout_expiry() {
        let mut sw = SwitchState::new();
        let id = sw.install(drop_entry().with_timeouts(5, 0)).unwrap();
        assert!(sw.advance_clock(5).is_empty());
        let mut sw2 = SwitchState::new();
        let id2 = sw2.install(drop_entry().with_timeouts(5, 0)).unwrap();
        assert_eq!(sw2.advance_clock(6), vec![id2]);
        assert_eq!(sw2.table_stats()[1].flows, 0);
        assert_eq!(sw.advance_clock(1), vec![id]);
    }

    #[test]
    fn idle_timeout_tracks_last_match() {
        let mut sw = SwitchState::new();
        sw.install(FlowEntry::new(0, 0, MatchSet::wildcard(), Instruction::GotoTable(1))).unwrap();
        let id = sw.install(drop_entry().with_timeouts(0, 5)).unwrap();
        let p = PacketMeta::ipv4(1, MacAddr::from_low_byte(1), MacAddr::from_low_byte(2), BAD, BAD, 1, 98);
        sw.advance_clock(4);
        sw.process(&p);
        assert!(sw.advance_clock(4).is_empty()); // t=8
        assert_eq!(sw.advance_clock(2), vec![id]); // t=10
    }

    #[test]
    fn batch_matches_sequential_processing() {
        let (topo, sw) = compiled();
        let mut pkts = Vec::new();
        for i in 0..600u32 {
            let dst = if i % 3 == 0 { BAD } else { Ipv4Addr::new(8, 8, 8, (i % 250) as u8) };
            pkts.push(PacketMeta::ipv4(
                1,
                MacAddr::from_low_byte(1),
                topo.gateway_mac,
                Ipv4Addr::new(10, 0, 0, 1),
                dst,
                1,
                60 + i,
            ));
        }
        let mut a = sw.clone();
        let mut b = sw.clone();
        let mut c = sw;
        let va: Vec<Verdict> = pkts.iter().map(|p| a.process(p)).collect();
        let vb = b.process_batch(&pkts);
        let vc = c.process_batch_seq(&pkts);
        assert_eq!(va, vb);
        assert_eq!(va, vc);
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn classify_has_no_side_effects() {
        let (topo, sw) = compiled();
        let before = sw.clone();
        let p =
            PacketMeta::ipv4(1, MacAddr::from_low_byte(1), topo.gateway_mac, Ipv4Addr::new(10, 0, 0, 1), BAD, 1, 98);
        assert!(matches!(sw.classify(&p).outcome, Outcome::Dropped { table: 1, .. }));
        assert_eq!(sw, before);
        assert_eq!(ETH_TYPE_IPV4, p.eth_type);
    }
}
