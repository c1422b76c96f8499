use std::fmt;
use std::io::{BufRead, BufReader, Read};

use super::StoreError;

const FIELD_COUNT: usize = 6;

/// One well-formed feed row, before type-specific validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawFeedRecord {
    pub line_number: usize,
    pub value: String,
    pub itype: String,
    pub confidence: Option<u8>,
    pub provider: String,
    pub lasttime: Option<String>,
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line_number: usize,
    pub reason: String,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line_number, self.reason)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedFeed {
    pub feed_name: String,
    pub records: Vec<RawFeedRecord>,
    pub errors: Vec<LineError>,
}

/// Reads a `value,itype,confidence,provider,lasttime,tags` feed.
///
/// Blank lines and `#` comments are ignored. A malformed line produces a
/// [`LineError`] and parsing carries on; only a failing reader is fatal.
/// An empty provider column falls back to `feed_name`.
pub fn parse_feed<R: Read>(reader: R, feed_name: &str) -> Result<ParsedFeed, StoreError> {
    let mut reader = BufReader::new(reader);
    let mut out = ParsedFeed { feed_name: feed_name.to_string(), ..Default::default() };
    let mut buf = Vec::new();
    let mut line_number = 0;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_number += 1;
        let line = match std::str::from_utf8(&buf) {
            Ok(s) => s,
            Err(_) => {
                out.errors.push(LineError { line_number, reason: "invalid utf-8".into() });
                continue;
            }
        };
        match parse_line(line, line_number, feed_name) {
            Ok(Some(rec)) => out.records.push(rec),
            Ok(None) => {}
            Err(reason) => out.errors.push(LineError { line_number, reason }),
        }
    }
    Ok(out)
}

pub(crate) fn parse_line(line: &str, line_number: usize, feed_name: &str) -> Result<Option<RawFeedRecord>, String> {
    let line = line.trim_end_matches(['\n', '\r']);
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != FIELD_COUNT {
        return Err("wrong field count".into());
    }
    if fields[0].is_empty() {
        return Err("empty value".into());
    }
    let confidence = match fields[2] {
        "" => None,
        c => match c.parse::<u8>() {
            Ok(n) if n <= 100 => Some(n),
            _ => return Err(format!("bad confidence {c:?}")),
        },
    };
    let provider = if fields[3].is_empty() { feed_name } else { fields[3] };
    let lasttime = (!fields[4].is_empty()).then(|| fields[4].to_string());
    let tags = fields[5].split(';').map(str::trim).filter(|t| !t.is_empty()).map(String::from).collect();
    Ok(Some(RawFeedRecord {
        line_number,
        value: fields[0].to_string(),
        itype: fields[1].to_string(),
        confidence,
        provider: provider.to_string(),
        lasttime,
        tags,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> ParsedFeed {
        parse_feed(s.as_bytes(), "feedA").unwrap()
    }

    #[test]
    fn direct_field_mapping() {
        let p = parse("198.51.100.7,ipv4,85,feedA,2019-04-01T00:00:00Z,scanner\n");
        assert!(p.errors.is_empty());
        assert_eq!(
            p.records,
            vec![RawFeedRecord {
                line_number: 1,
                value: "198.51.100.7".into(),
                itype: "ipv4".into(),
                confidence: Some(85),
                provider: "feedA".into(),
                lasttime: Some("2019-04-01T00:00:00Z".into()),
                tags: vec!["scanner".into()],
            }]
        );
    }

    #[test]
    fn empty_input() {
        let p = parse("");
        assert!(p.records.is_empty() && p.errors.is_empty());
    }

    #[test]
    fn wrong_field_count() {
        let p = parse("nonsense-without-commas");
        assert!(p.records.is_empty());
        assert_eq!(p.errors, vec![LineError { line_number: 1, reason: "wrong field count".into() }]);
    }

    #[test]
    fn comments_blank_lines_and_bad_rows_do_not_abort() {
        let feed = "# header\n\n1.1.1.1,ipv4,,,,\n  ,ipv4,1,p,,\n2.2.2.2,ipv4,101,p,,\r\n3.3.3.3,ipv4,7,,,a; b;;\r\n";
        let p = parse(feed);
        assert_eq!(p.records.len(), 2);
        assert_eq!(p.records[0].line_number, 3);
        assert_eq!(p.records[0].confidence, None);
        assert_eq!(p.records[0].provider, "feedA");
        assert_eq!(p.records[1].tags, vec!["a".to_string(), "b".to_string()]);
        assert_eq!(p.errors.iter().map(|e| e.line_number).collect::<Vec<_>>(), vec![4, 5]);
        assert_eq!(p.errors[0].reason, "empty value");
    }

    #[test]
    fn invalid_utf8_is_a_line_error() {
        let bytes = b"1.1.1.1,ipv4,,,,\n\xff\xfe,ipv4,,,,\n";
        let p = parse_feed(&bytes[..], "x").unwrap();
        assert_eq!(p.records.len(), 1);
        assert_eq!(p.errors[0].reason, "invalid utf-8");
    }

    #[test]
    fn reader_failure_is_fatal() {
        struct Broken;
        impl Read for Broken {
            fn read(&mut self, _: &mut [u8]) -> std::io::Result<usize> {
                Err(std::io::Error::other("boom"))
            }
        }
        assert!(matches!(parse_feed(Broken, "x"), Err(StoreError::Io(_))));
    }
}
