//! OpenDaylight inventory flow-configuration names, pinned in one place.
//! Retargeting a different controller release means editing this file.

/// Path of one flow in the config datastore; `{node}`, `{table}` and
/// `{flow}` are substituted.
pub const FLOW_PATH_TEMPLATE: &str =
    "/restconf/config/opendaylight-inventory:nodes/node/{node}/table/{table}/flow/{flow}";

pub const CONFIG_PREFIX: &str = "/restconf/config/";

/// Top-level member of a JSON flow document.
pub const JSON_FLOW_WRAPPER: &str = "flow-node-inventory:flow";

/// Namespace of the `<flow>` root element in XML documents.
pub const XML_FLOW_NAMESPACE: &str = "urn:opendaylight:flow:inventory";

pub const MEDIA_JSON: &str = "application/json";
pub const MEDIA_XML: &str = "application/xml";

/// `max-length` sent with every output action.
pub const OUTPUT_MAX_LEN: u32 = 65535;

/// XML leaves that carry numbers; every other leaf is text.
pub const XML_NUMERIC_LEAVES: &[&str] =
    &["table_id", "priority", "hard-timeout", "idle-timeout", "cookie", "type", "order", "max-length"];

/// XML elements that are lists even when they occur once.
pub const XML_LIST_ELEMENTS: &[&str] = &["instruction", "action"];

pub fn flow_path(node: &str, table: u8, flow: &str) -> String {
    FLOW_PATH_TEMPLATE.replace("{node}", node).replace("{table}", &table.to_string()).replace("{flow}", flow)
}
