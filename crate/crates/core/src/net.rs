//! Address and identifier newtypes shared by every layer.

use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use thiserror::Error;

/// Switch port number.
pub type PortId = u32;

/// Flow table number. The edge program uses tables 0, 1 and 2.
pub type TableId = u8;

/// Number of flow tables in the emulated pipeline.
pub const NUM_TABLES: usize = 3;

/// EtherType for IPv4.
pub const ETH_TYPE_IPV4: u16 = 0x0800;

/// Ethernet header length counted in every byte counter.
pub const ETHERNET_HEADER_LEN: u32 = 14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AddrError {
    #[error("malformed MAC address {0:?}")]
    Mac(String),
    #[error("wrong octet count")]
    OctetCount,
    #[error("octet out of range")]
    OctetRange,
    #[error("non-numeric octet")]
    OctetSyntax,
    #[error("prefix masks are not supported")]
    Cidr,
}

/// 48-bit Ethernet address.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MacAddr(pub [u8; 6]);

impl MacAddr {
    pub const fn new(bytes: [u8; 6]) -> Self {
        MacAddr(bytes)
    }

    /// Convenience for test topologies: `00:00:00:00:00:nn`.
    pub const fn from_low_byte(b: u8) -> Self {
        MacAddr([0, 0, 0, 0, 0, b])
    }

    /// Dash separated form, safe inside URL path segments.
    pub fn to_dashed(&self) -> String {
        self.to_string().replace(':', "-")
    }
}

impl fmt::Display for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.0;
        write!(f, "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}", b[0], b[1], b[2], b[3], b[4], b[5])
    }
}

impl fmt::Debug for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for MacAddr {
    type Err = AddrError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let sep = if s.contains('-') { '-' } else { ':' };
        let mut out = [0u8; 6];
        let mut n = 0;
        for part in s.split(sep) {
            if n == 6 || part.len() != 2 {
                return Err(AddrError::Mac(s.to_string()));
            }
            out[n] = u8::from_str_radix(part, 16).map_err(|_| AddrError::Mac(s.to_string()))?;
            n += 1;
        }
        if n != 6 {
            return Err(AddrError::Mac(s.to_string()));
        }
        Ok(MacAddr(out))
    }
}

/// Parses a dotted-quad IPv4 address, tolerating leading zeros in each octet
/// (`198.051.100.007` is `198.51.100.7`). Prefix notation is rejected.
pub fn parse_ipv4_lenient(s: &str) -> Result<Ipv4Addr, AddrError> {
    if s.contains('/') {
        return Err(AddrError::Cidr);
    }
    let mut octets = [0u8; 4];
    let mut n = 0;
    for part in s.split('.') {
        if n == 4 {
            return Err(AddrError::OctetCount);
        }
        if part.is_empty() || !part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(AddrError::OctetSyntax);
        }
        // Strip leading zeros before the width check so "0000001" is still 1.
        let digits = part.trim_start_matches('0');
        if digits.len() > 3 {
            return Err(AddrError::OctetRange);
        }
        let value: u16 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| AddrError::OctetSyntax)? };
        if value > 255 {
            return Err(AddrError::OctetRange);
        }
        octets[n] = value as u8;
        n += 1;
    }
    if n != 4 {
        return Err(AddrError::OctetCount);
    }
    Ok(Ipv4Addr::from(octets))
}
