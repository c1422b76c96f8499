mod common;

use common::{random_entry, random_packet, random_program, Oracle};
use ctiflow::flow_compiler::{FlowEntry, Instruction, MatchSet};
use ctiflow::net::MacAddr;
use ctiflow::pipeline_engine::{Outcome, PacketMeta, SwitchState};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn build(seed: u64, max_len: usize) -> (SwitchState, Oracle, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sw = SwitchState::new();
    let mut oracle = Oracle::new();
    for e in random_program(&mut rng, max_len) {
        let a = sw.install(e.clone()).unwrap();
        let b = oracle.install(e);
        assert_eq!(a, b);
    }
    (sw, oracle, rng)
}

fn assert_counters_agree(sw: &SwitchState, oracle: &Oracle) {
    for (t, ts) in sw.table_stats().iter().enumerate() {
        assert_eq!(
            (ts.lookups, ts.matches, ts.bytes),
            (oracle.lookups[t], oracle.matches[t], oracle.bytes[t]),
            "table {t}"
        );
    }
    assert_eq!(sw.flow_count(), oracle.flows.len());
    for f in &oracle.flows {
        let s = sw.flow_stats(f.id).unwrap();
        assert_eq!((s.packet_count, s.byte_count), (f.packets, f.bytes), "flow {}", f.id);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_linear_scan_oracle(seed in any::<u64>()) {
        let (mut sw, mut oracle, mut rng) = build(seed, 64);
        for _ in 0..300 {
            let p = random_packet(&mut rng);
            prop_assert_eq!(sw.process(&p), oracle.process(&p));
        }
        assert_counters_agree(&sw, &oracle);
    }

    #[test]
    fn batch_paths_equal_per_packet(seed in any::<u64>()) {
        let (sw, _, mut rng) = build(seed, 64);
        let pkts: Vec<PacketMeta> = (0..600).map(|_| random_packet(&mut rng)).collect();
        let mut one = sw.clone();
        let per: Vec<_> = pkts.iter().map(|p| one.process(p)).collect();
        let mut par = sw.clone();
        let mut seq = sw.clone();
        prop_assert_eq!(&par.process_batch(&pkts), &per);
        prop_assert_eq!(&seq.process_batch_seq(&pkts), &per);
        prop_assert_eq!(&par, &one);
        prop_assert_eq!(&seq, &one);
    }

    #[test]
    fn counters_are_conserved(seed in any::<u64>()) {
        let (mut sw, _, mut rng) = build(seed, 64);
        let pkts: Vec<PacketMeta> = (0..300).map(|_| random_packet(&mut rng)).collect();
        let verdicts = sw.process_batch(&pkts);
        let ts = sw.table_stats();
        prop_assert_eq!(ts[0].lookups, pkts.len() as u64);
        for t in 0..3u8 {
            let (pk, by) = sw
                .flows()
                .filter(|(_, e)| e.table_id == t)
                .fold((0, 0), |(p, b), (_, e)| (p + e.counters.packet_count, b + e.counters.byte_count));
            prop_assert_eq!(ts[t as usize].matches, pk);
            prop_assert_eq!(ts[t as usize].bytes, by);
            let entered = verdicts.iter().filter(|v| v.trace.iter().any(|s| s.table == t)).count() as u64;
            prop_assert_eq!(ts[t as usize].lookups, entered);
        }
        let total_bytes: u64 = pkts.iter().map(|p| u64::from(p.wire_len)).sum();
        prop_assert!(ts[0].bytes <= total_bytes);
    }

    #[test]
    fn higher_priority_drop_dominates(seed in any::<u64>(), extra in 0usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_packet(&mut rng);
        let mut sw = SwitchState::new();
        let mut lower = Vec::new();
        for _ in 0..extra {
            let mut e = random_entry(&mut rng);
            e.table_id = 0;
            e.priority = e.priority.min(64999);
            if let Ok(id) = sw.install(e) {
                lower.push(id);
            }
        }
        let mut m = MatchSet { eth_src: Some(p.eth_src), ..Default::default() };
        if let Some(dst) = p.ipv4_dst {
            m = MatchSet::ipv4_dst(dst);
        }
        let drop = sw.install(FlowEntry::new(0, 65000, m, Instruction::Drop)).unwrap();
        let v = sw.process(&p);
        prop_assert_eq!(v.outcome, Outcome::Dropped { table: 0, flow: drop });
        prop_assert_eq!(sw.flow_stats(drop).unwrap().packet_count, 1);
        for id in lower {
            prop_assert_eq!(sw.flow_stats(id).unwrap().packet_count, 0);
        }
    }

    #[test]
    fn stream_equals_interleaved_clock(seed in any::<u64>(), step in 0u64..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sw = SwitchState::new();
        for _ in 0..30 {
            let e = random_entry(&mut rng).with_timeouts(rand::Rng::gen_range(&mut rng, 0..6), rand::Rng::gen_range(&mut rng, 0..6));
            sw.install(e).unwrap();
        }
        let pkts: Vec<PacketMeta> = (0..80).map(|_| random_packet(&mut rng)).collect();
        let mut manual = sw.clone();
        let mut want = Vec::new();
        for (i, p) in pkts.iter().enumerate() {
            if i > 0 {
                manual.advance_clock(step);
            }
            want.push(manual.process(p));
        }
        let got = sw.process_stream(&pkts, step);
        prop_assert_eq!(got, want);
        prop_assert_eq!(sw, manual);
    }

    #[test]
    fn timeouts_fire_strictly_after(hard in 0u32..20, idle in 0u32..20, hit_at in 0u64..30, check in 0u64..60) {
        let mut sw = SwitchState::new();
        let id = sw.install(FlowEntry::new(0, 1, MatchSet::wildcard(), Instruction::Output(1)).with_timeouts(hard, idle)).unwrap();
        let pkt = PacketMeta::l2(1, MacAddr::from_low_byte(1), MacAddr::from_low_byte(2), 0x0806, 60);
        let mut alive = true;
        let mut last = 0u64;
        let mut now = 0u64;
        for target in [hit_at, hit_at.max(check)] {
            let expired = sw.advance_clock(target - now);
            now = target;
            let hard_gone = hard > 0 && now > u64::from(hard);
            let idle_gone = idle > 0 && now - last > u64::from(idle);
            let should_expire = alive && (hard_gone || idle_gone);
            prop_assert_eq!(expired.contains(&id), should_expire);
            alive &= !should_expire;
            if alive && target == hit_at {
                sw.process(&pkt);
                last = now;
            }
        }
        prop_assert_eq!(sw.entry(id).is_some(), alive);
    }
}

#[test]
fn ties_go_to_the_older_flow() {
    let mut sw = SwitchState::new();
    let a =
        sw.install(FlowEntry::new(0, 5, MatchSet::eth_src(MacAddr::from_low_byte(1)), Instruction::Output(1))).unwrap();
    let b =
        sw.install(FlowEntry::new(0, 5, MatchSet::eth_dst(MacAddr::from_low_byte(2)), Instruction::Output(2))).unwrap();
    assert!(a < b);
    let p = PacketMeta::l2(3, MacAddr::from_low_byte(1), MacAddr::from_low_byte(2), 0x0806, 60);
    assert_eq!(sw.process(&p).outcome, Outcome::Output(1));
}

#[test]
fn ipv4_fields_need_ipv4_eth_type() {
    let mut sw = SwitchState::new();
    let addr = std::net::Ipv4Addr::new(198, 51, 100, 7);
    let mut m = MatchSet::ipv4_dst(addr);
    m.eth_type = None;
    assert!(sw.install(FlowEntry::new(1, 65000, m, Instruction::Drop)).is_err());
    m.eth_type = Some(0x86dd);
    assert!(sw.install(FlowEntry::new(1, 65000, m, Instruction::Drop)).is_err());
    assert!(sw.install(FlowEntry::new(0, 1, MatchSet::wildcard(), Instruction::GotoTable(0))).is_err());
    assert!(sw.install(FlowEntry::new(3, 1, MatchSet::wildcard(), Instruction::Drop)).is_err());
    assert_eq!(sw.flow_count(), 0);
}
