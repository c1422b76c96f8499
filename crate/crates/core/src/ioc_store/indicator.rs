use std::collections::BTreeSet;
use std::fmt;
use std::net::{Ipv4Addr, Ipv6Addr};
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};

use super::feed::RawFeedRecord;
use crate::net::{parse_ipv4_lenient, AddrError};

/// Confidence assigned when a feed leaves the column empty.
pub const DEFAULT_CONFIDENCE: u8 = 50;

/// Observable kinds a feed may carry. Declaration order is the query sort order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IndicatorType {
    Ipv4,
    Ipv6,
    Fqdn,
    Url,
    Email,
}

impl IndicatorType {
    pub const ALL: [IndicatorType; 5] =
        [IndicatorType::Ipv4, IndicatorType::Ipv6, IndicatorType::Fqdn, IndicatorType::Url, IndicatorType::Email];

    pub fn as_str(self) -> &'static str {
        match self {
            IndicatorType::Ipv4 => "ipv4",
            IndicatorType::Ipv6 => "ipv6",
            IndicatorType::Fqdn => "fqdn",
            IndicatorType::Url => "url",
            IndicatorType::Email => "email",
        }
    }
}

impl fmt::Display for IndicatorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IndicatorType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        IndicatorType::ALL
            .into_iter()
            .find(|it| it.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| format!("unknown itype {t:?}"))
    }
}

/// Why a record could not become an [`Indicator`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reject {
    pub line_number: usize,
    pub reason: String,
}

impl fmt::Display for Reject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line_number, self.reason)
    }
}

/// A normalized observable. Only constructible through [`Indicator::new`] or
/// [`normalize`], so every instance holds a canonical value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Indicator {
    itype: IndicatorType,
    value: String,
    confidence: u8,
    provider: String,
    lasttime: DateTime<Utc>,
    tags: BTreeSet<String>,
}

impl Indicator {
    pub fn new<I, S>(
        itype: IndicatorType,
        value: &str,
        confidence: Option<u8>,
        provider: &str,
        lasttime: Option<DateTime<Utc>>,
        tags: I,
    ) -> Result<Self, String>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let value = canonicalize(itype, value)?;
        let confidence = confidence.unwrap_or(DEFAULT_CONFIDENCE);
        if confidence > 100 {
            return Err(format!("confidence {confidence} out of range"));
        }
        let provider = provider.trim();
        if provider.contains([',', '\n', '\r']) {
            return Err("unencodable provider".into());
        }
        let mut tag_set = BTreeSet::new();
        for t in tags {
            let t = t.as_ref().trim();
            if t.is_empty() {
                continue;
            }
            if t.contains([',', ';', '\n', '\r']) {
                return Err(format!("unencodable tag {t:?}"));
            }
            tag_set.insert(t.to_string());
        }
        Ok(Indicator {
            itype,
            value,
            confidence,
            provider: provider.to_string(),
            lasttime: lasttime.unwrap_or(DateTime::<Utc>::UNIX_EPOCH),
            tags: tag_set,
        })
    }

    pub fn itype(&self) -> IndicatorType {
        self.itype
    }

    pub fn value(&self) -> &str {
        &self.value
    }

    pub fn confidence(&self) -> u8 {
        self.confidence
    }

    pub fn provider(&self) -> &str {
        &self.provider
    }

    pub fn lasttime(&self) -> DateTime<Utc> {
        self.lasttime
    }

    pub fn tags(&self) -> &BTreeSet<String> {
        &self.tags
    }

    pub fn key(&self) -> (IndicatorType, String) {
        (self.itype, self.value.clone())
    }

    /// The address, for ipv4 indicators.
    pub fn ipv4(&self) -> Option<Ipv4Addr> {
        match self.itype {
            IndicatorType::Ipv4 => self.value.parse().ok(),
            _ => None,
        }
    }

    /// Folds a duplicate observation into this one: highest confidence,
    /// latest sighting, union of tags. The first provider is kept.
    pub(crate) fn merge_from(&mut self, other: &Indicator) {
        debug_assert_eq!(self.key(), other.key());
        self.confidence = self.confidence.max(other.confidence);
        self.lasttime = self.lasttime.max(other.lasttime);
        self.tags.extend(other.tags.iter().cloned());
    }

    /// One line in feed field order, `value,itype,confidence,provider,lasttime,tags`.
    pub fn to_record_line(&self) -> String {
        let tags: Vec<&str> = self.tags.iter().map(String::as_str).collect();
        format!(
            "{},{},{},{},{},{}",
            self.value,
            self.itype,
            self.confidence,
            self.provider,
            format_timestamp(self.lasttime),
            tags.join(";")
        )
    }
}

pub fn format_timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

pub fn parse_timestamp(s: &str) -> Result<DateTime<Utc>, String> {
    DateTime::parse_from_rfc3339(s.trim())
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| format!("bad timestamp {s:?}: {e}"))
}

/// Turns a parsed feed row into an indicator, or explains why not.
pub fn normalize(record: &RawFeedRecord) -> Result<Indicator, Reject> {
    let reject = |reason: String| Reject { line_number: record.line_number, reason };
    let itype: IndicatorType = record.itype.parse().map_err(reject)?;
    let lasttime = match record.lasttime.as_deref() {
        Some(t) => Some(parse_timestamp(t).map_err(reject)?),
        None => None,
    };
    Indicator::new(itype, &record.value, record.confidence, &record.provider, lasttime, &record.tags).map_err(reject)
}

/// Canonical text for a value of the given type. Idempotent on success.
pub fn canonicalize(itype: IndicatorType, raw: &str) -> Result<String, String> {
    let v = raw.trim();
    if v.is_empty() {
        return Err("empty value".into());
    }
    if v.contains([',', '\n', '\r']) {
        return Err("unencodable character in value".into());
    }
    match itype {
        IndicatorType::Ipv4 => parse_ipv4_lenient(v).map(|a| a.to_string()).map_err(|e| match e {
            AddrError::Cidr => "prefix masks are not supported".to_string(),
            other => other.to_string(),
        }),
        IndicatorType::Ipv6 => {
            if v.contains('/') {
                return Err("prefix masks are not supported".into());
            }
            v.parse::<Ipv6Addr>().map(|a| a.to_string()).map_err(|_| "malformed ipv6 address".to_string())
        }
        IndicatorType::Fqdn => canonical_fqdn(v),
        IndicatorType::Email => canonical_email(v),
        IndicatorType::Url => canonical_url(v),
    }
}

fn canonical_fqdn(v: &str) -> Result<String, String> {
    let lower = v.to_ascii_lowercase();
    let name = lower.strip_suffix('.').unwrap_or(&lower);
    if name.is_empty() || name.len() > 253 {
        return Err("bad fqdn length".into());
    }
    for label in name.split('.') {
        if label.is_empty() || label.len() > 63 {
            return Err("bad fqdn label".into());
        }
        if !label.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_') {
            return Err("bad fqdn character".into());
        }
    }
    Ok(name.to_string())
}

fn canonical_email(v: &str) -> Result<String, String> {
    let lower = v.to_lowercase();
    let mut parts = lower.split('@');
    let (local, domain) = match (parts.next(), parts.next(), parts.next()) {
        (Some(l), Some(d), None) => (l, d),
        _ => return Err("email needs exactly one '@'".into()),
    };
    if local.is_empty() || domain.is_empty() || lower.chars().any(char::is_whitespace) {
        return Err("malformed email".into());
    }
    Ok(lower)
}

fn canonical_url(v: &str) -> Result<String, String> {
    let (scheme, rest) = v.split_once("://").ok_or("url missing scheme")?;
    let valid_scheme = scheme.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
        && scheme.chars().all(|c| c.is_ascii_alphanumeric() || "+-.".contains(c));
    if !valid_scheme {
        return Err("bad url scheme".into());
    }
    if v.chars().any(char::is_whitespace) {
        return Err("whitespace in url".into());
    }
    let split = rest.find(['/', '?', '#']).unwrap_or(rest.len());
    let (authority, tail) = rest.split_at(split);
    // userinfo keeps its case; only the host part folds
    let (userinfo, host) = match authority.rfind('@') {
        Some(i) => authority.split_at(i + 1),
        None => ("", authority),
    };
    if host.is_empty() {
        return Err("url missing host".into());
    }
    Ok(format!("{}://{}{}{}", scheme.to_ascii_lowercase(), userinfo, host.to_ascii_lowercase(), tail))
}
