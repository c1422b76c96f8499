use std::net::Ipv4Addr;

use crate::flow_compiler::MatchSet;
use crate::net::{MacAddr, PortId, ETHERNET_HEADER_LEN, ETH_TYPE_IPV4};

/// Header tuple of a synthetic packet plus its length on the wire
/// (Ethernet header included).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PacketMeta {
    pub in_port: PortId,
    pub eth_src: MacAddr,
    pub eth_dst: MacAddr,
    pub eth_type: u16,
    pub ipv4_src: Option<Ipv4Addr>,
    pub ipv4_dst: Option<Ipv4Addr>,
    pub ip_proto: Option<u8>,
    pub wire_len: u32,
}

impl PacketMeta {
    #[allow(clippy::too_many_arguments)]
    pub fn ipv4(
        in_port: PortId,
        eth_src: MacAddr,
        eth_dst: MacAddr,
        ipv4_src: Ipv4Addr,
        ipv4_dst: Ipv4Addr,
        ip_proto: u8,
        wire_len: u32,
    ) -> Self {
        PacketMeta {
            in_port,
            eth_src,
            eth_dst,
            eth_type: ETH_TYPE_IPV4,
            ipv4_src: Some(ipv4_src),
            ipv4_dst: Some(ipv4_dst),
            ip_proto: Some(ip_proto),
            wire_len,
        }
    }

    /// A non-IP frame, e.g. ARP (`0x0806`).
    pub fn l2(in_port: PortId, eth_src: MacAddr, eth_dst: MacAddr, eth_type: u16, wire_len: u32) -> Self {
        PacketMeta { in_port, eth_src, eth_dst, eth_type, ipv4_src: None, ipv4_dst: None, ip_proto: None, wire_len }
    }

    pub fn validate(&self) -> Result<(), String> {
        let has_ip = self.ipv4_src.is_some() && self.ipv4_dst.is_some();
        let any_ip = self.ipv4_src.is_some() || self.ipv4_dst.is_some() || self.ip_proto.is_some();
        if (self.eth_type == ETH_TYPE_IPV4) != has_ip || (!has_ip && any_ip) {
            return Err("eth_type 0x0800 requires both IPv4 addresses, and only it may carry them".into());
        }
        if self.wire_len < ETHERNET_HEADER_LEN {
            return Err(format!("wire_len {} shorter than an Ethernet header", self.wire_len));
        }
        Ok(())
    }
}

impl MatchSet {
    /// Every present field equals the packet's; absent fields match anything.
    #[inline]
    pub fn matches(&self, pkt: &PacketMeta) -> bool {
        fn field<T: PartialEq>(want: Option<T>, have: T) -> bool {
            want.is_none_or(|w| w == have)
        }
        field(self.eth_type, pkt.eth_type)
            && field(self.eth_src, pkt.eth_src)
            && field(self.eth_dst, pkt.eth_dst)
            && (self.ipv4_src.is_none() || self.ipv4_src == pkt.ipv4_src)
            && (self.ipv4_dst.is_none() || self.ipv4_dst == pkt.ipv4_dst)
    }
}
