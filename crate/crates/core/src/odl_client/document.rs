use std::fmt::Write as _;
use std::net::Ipv4Addr;

use quick_xml::events::Event;
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::schema::*;
use super::OdlError;
use crate::flow_compiler::{FlowEntry, Instruction, MatchSet, PRIORITY_DROP, TABLE_DST_DROP, TABLE_SRC_DROP};

/// Structured encodings the controller accepts on its config interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DocumentFormat {
    #[default]
    Json,
    Xml,
}

impl DocumentFormat {
    pub fn media_type(self) -> &'static str {
        match self {
            DocumentFormat::Json => MEDIA_JSON,
            DocumentFormat::Xml => MEDIA_XML,
        }
    }
}

impl std::str::FromStr for DocumentFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" | MEDIA_JSON => Ok(DocumentFormat::Json),
            "xml" | MEDIA_XML => Ok(DocumentFormat::Xml),
            other => Err(format!("unknown document format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowDoc {
    pub id: String,
    pub table_id: u8,
    pub priority: u16,
    #[serde(rename = "flow-name")]
    pub flow_name: String,
    #[serde(rename = "hard-timeout")]
    pub hard_timeout: u32,
    #[serde(rename = "idle-timeout")]
    pub idle_timeout: u32,
    pub cookie: u64,
    #[serde(rename = "match", default)]
    pub match_: MatchDoc,
    pub instructions: InstructionsDoc,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchDoc {
    #[serde(rename = "ethernet-match", default, skip_serializing_if = "Option::is_none")]
    pub ethernet_match: Option<EthernetMatchDoc>,
    #[serde(rename = "ipv4-source", default, skip_serializing_if = "Option::is_none")]
    pub ipv4_source: Option<String>,
    #[serde(rename = "ipv4-destination", default, skip_serializing_if = "Option::is_none")]
    pub ipv4_destination: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EthernetMatchDoc {
    #[serde(rename = "ethernet-type", default, skip_serializing_if = "Option::is_none")]
    pub ethernet_type: Option<EthernetTypeDoc>,
    #[serde(rename = "ethernet-source", default, skip_serializing_if = "Option::is_none")]
    pub ethernet_source: Option<AddressDoc>,
    #[serde(rename = "ethernet-destination", default, skip_serializing_if = "Option::is_none")]
    pub ethernet_destination: Option<AddressDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EthernetTypeDoc {
    #[serde(rename = "type")]
    pub type_: u16,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AddressDoc {
    pub address: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InstructionsDoc {
    #[serde(default)]
    pub instruction: Vec<InstructionDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionDoc {
    pub order: u32,
    #[serde(rename = "apply-actions", default, skip_serializing_if = "Option::is_none")]
    pub apply_actions: Option<ApplyActionsDoc>,
    #[serde(rename = "go-to-table", default, skip_serializing_if = "Option::is_none")]
    pub go_to_table: Option<GoToTableDoc>,
}

/// An empty action list is how the controller spells "drop".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ApplyActionsDoc {
    #[serde(default)]
    pub action: Vec<ActionDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionDoc {
    pub order: u32,
    #[serde(rename = "output-action", default, skip_serializing_if = "Option::is_none")]
    pub output_action: Option<OutputActionDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputActionDoc {
    #[serde(rename = "output-node-connector")]
    pub output_node_connector: String,
    #[serde(rename = "max-length")]
    pub max_length: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonWrapper {
    #[serde(rename = "flow-node-inventory:flow")]
    pub flow: Vec<FlowDoc>,
}

/// Stable, path-safe name for an entry. Threat drops are named
/// `cti-ipv4-<addr>-dst|src`; everything else is derived from the
/// `(table, priority, match)` key, which is unique within a program.
pub fn flow_name(entry: &FlowEntry) -> String {
    let m = &entry.match_set;
    if entry.is_drop() && entry.priority == PRIORITY_DROP {
        if entry.table_id == TABLE_DST_DROP && *m == MatchSet::ipv4_dst(m.ipv4_dst.unwrap_or(Ipv4Addr::UNSPECIFIED)) {
            return format!("cti-ipv4-{}-dst", m.ipv4_dst.unwrap());
        }
        if entry.table_id == TABLE_SRC_DROP && *m == MatchSet::ipv4_src(m.ipv4_src.unwrap_or(Ipv4Addr::UNSPECIFIED)) {
            return format!("cti-ipv4-{}-src", m.ipv4_src.unwrap());
        }
    }
    let mut parts = Vec::new();
    if let Some(t) = m.eth_type {
        parts.push(format!("type-{t:04x}"));
    }
    if let Some(mac) = m.eth_src {
        parts.push(format!("src-{}", mac.to_dashed()));
    }
    if let Some(mac) = m.eth_dst {
        parts.push(format!("dst-{}", mac.to_dashed()));
    }
    if let Some(a) = m.ipv4_src {
        parts.push(format!("ipsrc-{a}"));
    }
    if let Some(a) = m.ipv4_dst {
        parts.push(format!("ipdst-{a}"));
    }
    if parts.is_empty() {
        parts.push("any".into());
    }
    format!("t{}-p{}-{}", entry.table_id, entry.priority, parts.join("-"))
}

impl FlowDoc {
    pub fn from_entry(entry: &FlowEntry, name: &str) -> FlowDoc {
        let m = &entry.match_set;
        let eth = EthernetMatchDoc {
            ethernet_type: m.eth_type.map(|t| EthernetTypeDoc { type_: t }),
            ethernet_source: m.eth_src.map(|a| AddressDoc { address: a.to_string() }),
            ethernet_destination: m.eth_dst.map(|a| AddressDoc { address: a.to_string() }),
        };
        let has_eth = eth != EthernetMatchDoc::default();
        let instruction = match entry.instruction {
            Instruction::Drop => {
                InstructionDoc { order: 0, apply_actions: Some(ApplyActionsDoc::default()), go_to_table: None }
            }
            Instruction::Output(p) => InstructionDoc {
                order: 0,
                apply_actions: Some(ApplyActionsDoc {
                    action: vec![ActionDoc {
                        order: 0,
                        output_action: Some(OutputActionDoc {
                            output_node_connector: p.to_string(),
                            max_length: OUTPUT_MAX_LEN,
                        }),
                    }],
                }),
                go_to_table: None,
            },
            Instruction::GotoTable(t) => {
                InstructionDoc { order: 0, apply_actions: None, go_to_table: Some(GoToTableDoc { table_id: t }) }
            }
        };
        FlowDoc {
            id: name.to_string(),
            table_id: entry.table_id,
            priority: entry.priority,
            flow_name: name.to_string(),
            hard_timeout: entry.hard_timeout_s,
            idle_timeout: entry.idle_timeout_s,
            cookie: entry.cookie,
            match_: MatchDoc {
                ethernet_match: has_eth.then_some(eth),
                ipv4_source: m.ipv4_src.map(|a| format!("{a}/32")),
                ipv4_destination: m.ipv4_dst.map(|a| format!("{a}/32")),
            },
            instructions: InstructionsDoc { instruction: vec![instruction] },
        }
    }

    pub fn to_entry(&self) -> Result<FlowEntry, OdlError> {
        let bad = |m: String| OdlError::Document(m);
        let mut m = MatchSet::default();
        if let Some(eth) = &self.match_.ethernet_match {
            m.eth_type = eth.ethernet_type.as_ref().map(|t| t.type_);
            m.eth_src =
                eth.ethernet_source.as_ref().map(|a| a.address.parse().map_err(|e| bad(format!("{e}")))).transpose()?;
            m.eth_dst = eth
                .ethernet_destination
                .as_ref()
                .map(|a| a.address.parse().map_err(|e| bad(format!("{e}"))))
                .transpose()?;
        }
        m.ipv4_src = self.match_.ipv4_source.as_deref().map(parse_host_prefix).transpose()?;
        m.ipv4_dst = self.match_.ipv4_destination.as_deref().map(parse_host_prefix).transpose()?;

        let [ins] = self.instructions.instruction.as_slice() else {
            return Err(bad("expected exactly one instruction".into()));
        };
        let instruction = match (&ins.apply_actions, &ins.go_to_table) {
            (Some(aa), None) => match aa.action.as_slice() {
                [] => Instruction::Drop,
                [ActionDoc { output_action: Some(o), .. }] => {
                    Instruction::Output(parse_connector(&o.output_node_connector)?)
                }
                _ => return Err(bad("unsupported action list".into())),
            },
            (None, Some(g)) => Instruction::GotoTable(g.table_id),
            _ => return Err(bad("instruction must be apply-actions or go-to-table".into())),
        };
        let entry = FlowEntry {
            hard_timeout_s: self.hard_timeout,
            idle_timeout_s: self.idle_timeout,
            cookie: self.cookie,
            ..FlowEntry::new(self.table_id, self.priority, m, instruction)
        };
        entry.validate().map_err(|e| bad(e.to_string()))?;
        Ok(entry)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoToTableDoc {
    pub table_id: u8,
}

fn parse_host_prefix(s: &str) -> Result<Ipv4Addr, OdlError> {
    let (addr, len) = s.split_once('/').unwrap_or((s, "32"));
    if len != "32" {
        return Err(OdlError::Document(format!("only /32 matches are supported, got {s:?}")));
    }
    addr.parse().map_err(|_| OdlError::Document(format!("bad ipv4 prefix {s:?}")))
}

/// Accepts both a bare port number and `openflow:<dpid>:<port>`.
fn parse_connector(s: &str) -> Result<u32, OdlError> {
    s.rsplit(':')
        .next()
        .and_then(|p| p.parse().ok())
        .ok_or_else(|| OdlError::Document(format!("bad output connector {s:?}")))
}

/// Single-flow configuration document for `entry`.
pub fn to_flow_document(entry: &FlowEntry, flow_name: &str, format: DocumentFormat) -> String {
    let doc = FlowDoc::from_entry(entry, flow_name);
    match format {
        DocumentFormat::Json => {
            serde_json::to_string_pretty(&JsonWrapper { flow: vec![doc] }).expect("flow documents always serialize")
        }
        DocumentFormat::Xml => {
            let value = serde_json::to_value(&doc).expect("flow documents always serialize");
            let mut s = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n");
            let _ = writeln!(s, "<flow xmlns=\"{XML_FLOW_NAMESPACE}\">");
            if let Value::Object(map) = &value {
                for (k, v) in map {
                    write_xml(&mut s, k, v, 1);
                }
            }
            s.push_str("</flow>\n");
            s
        }
    }
}

/// Inverse of [`to_flow_document`]: the entry (counters zeroed) and its name.
pub fn from_flow_document(text: &str, format: DocumentFormat) -> Result<(FlowEntry, String), OdlError> {
    let doc: FlowDoc = match format {
        DocumentFormat::Json => {
            let wrapper: JsonWrapper =
                serde_json::from_str(text).map_err(|e| OdlError::Document(format!("json: {e}")))?;
            let mut flows = wrapper.flow;
            if flows.len() != 1 {
                return Err(OdlError::Document(format!("expected one flow, found {}", flows.len())));
            }
            flows.remove(0)
        }
        DocumentFormat::Xml => {
            let root = parse_xml_tree(text)?;
            if root.name != "flow" {
                return Err(OdlError::Document(format!("root element is <{}>, expected <flow>", root.name)));
            }
            serde_json::from_value(xml_to_value(&root)?).map_err(|e| OdlError::Document(format!("xml: {e}")))?
        }
    };
    if doc.id != doc.flow_name {
        return Err(OdlError::Document("id and flow-name differ".into()));
    }
    Ok((doc.to_entry()?, doc.id))
}

fn write_xml(out: &mut String, name: &str, v: &Value, depth: usize) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Array(items) => {
            for item in items {
                write_xml(out, name, item, depth);
            }
        }
        Value::Object(map) if map.values().all(is_empty_list) => {
            let _ = writeln!(out, "{pad}<{name}/>");
        }
        Value::Object(map) => {
            let _ = writeln!(out, "{pad}<{name}>");
            for (k, child) in map {
                write_xml(out, k, child, depth + 1);
            }
            let _ = writeln!(out, "{pad}</{name}>");
        }
        Value::String(s) => {
            let _ = writeln!(out, "{pad}<{name}>{}</{name}>", quick_xml::escape::escape(s.as_str()));
        }
        other => {
            let _ = writeln!(out, "{pad}<{name}>{other}</{name}>");
        }
    }
}

fn is_empty_list(v: &Value) -> bool {
    matches!(v, Value::Array(items) if items.is_empty())
}

#[derive(Debug, Default)]
struct XmlNode {
    name: String,
    text: String,
    children: Vec<XmlNode>,
}

fn parse_xml_tree(text: &str) -> Result<XmlNode, OdlError> {
    let err = |m: String| OdlError::Document(format!("xml: {m}"));
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(true);
    let mut stack: Vec<XmlNode> = Vec::new();
    let mut root = None;
    loop {
        match reader.read_event().map_err(|e| err(e.to_string()))? {
            Event::Start(e) => {
                let name = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                stack.push(XmlNode { name, ..Default::default() });
            }
            Event::Empty(e) => {
                let node = XmlNode {
                    name: String::from_utf8_lossy(e.local_name().as_ref()).into_owned(),
                    ..Default::default()
                };
                match stack.last_mut() {
                    Some(parent) => parent.children.push(node),
                    None => root = Some(node),
                }
            }
            Event::Text(t) => {
                if let Some(top) = stack.last_mut() {
                    top.text.push_str(&t.unescape().map_err(|e| err(e.to_string()))?);
                }
            }
            Event::End(_) => {
                let node = stack.pop().ok_or_else(|| err("unbalanced end tag".into()))?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(node),
                    None => root = Some(node),
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if !stack.is_empty() {
        return Err(err("unclosed element".into()));
    }
    root.ok_or_else(|| err("empty document".into()))
}

fn xml_to_value(node: &XmlNode) -> Result<Value, OdlError> {
    if node.children.is_empty() {
        if XML_NUMERIC_LEAVES.contains(&node.name.as_str()) {
            let n: u64 = node
                .text
                .trim()
                .parse()
                .map_err(|_| OdlError::Document(format!("xml: <{}> is not a number", node.name)))?;
            return Ok(Value::from(n));
        }
        if node.text.is_empty() {
            return Ok(Value::Object(Map::new()));
        }
        return Ok(Value::String(node.text.clone()));
    }
    let mut map = Map::new();
    for child in &node.children {
        let v = xml_to_value(child)?;
        if XML_LIST_ELEMENTS.contains(&child.name.as_str()) {
            match map.entry(child.name.clone()).or_insert_with(|| Value::Array(Vec::new())) {
                Value::Array(items) => items.push(v),
                _ => unreachable!("list elements are always arrays"),
            }
        } else if map.insert(child.name.clone(), v).is_some() {
            return Err(OdlError::Document(format!("xml: repeated <{}>", child.name)));
        }
    }
    Ok(Value::Object(map))
}
