use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::header::{ACCEPT, CONTENT_TYPE};
use reqwest::StatusCode;

use super::document::{flow_name, to_flow_document, DocumentFormat};
use super::schema::flow_path;
use super::OdlError;
use crate::flow_compiler::{FlowEntry, FlowProgram};
use crate::net::TableId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControllerEndpoint {
    pub base_url: String,
    pub node_id: String,
    pub user: String,
    pub secret: String,
    pub timeout_s: u64,
    pub format: DocumentFormat,
}

impl ControllerEndpoint {
    pub fn new(base_url: impl Into<String>, node_id: impl Into<String>) -> Self {
        ControllerEndpoint {
            base_url: base_url.into(),
            node_id: node_id.into(),
            user: "admin".into(),
            secret: "admin".into(),
            timeout_s: 10,
            format: DocumentFormat::Json,
        }
    }

    pub fn validate(&self) -> Result<(), OdlError> {
        if self.base_url.trim().is_empty() {
            return Err(OdlError::Endpoint("base_url is empty".into()));
        }
        if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            return Err(OdlError::Endpoint(format!("base_url {:?} is not an http(s) url", self.base_url)));
        }
        if self.node_id.is_empty() || self.node_id.contains('/') {
            return Err(OdlError::Endpoint(format!("bad node id {:?}", self.node_id)));
        }
        if self.timeout_s == 0 {
            return Err(OdlError::Endpoint("timeout_s must be positive".into()));
        }
        Ok(())
    }

    pub fn flow_url(&self, table: TableId, flow: &str) -> String {
        format!("{}{}", self.base_url.trim_end_matches('/'), flow_path(&self.node_id, table, flow))
    }
}

/// Blocking RESTCONF client. Holds no mutable state, so calls may be issued
/// from several threads at once.
#[derive(Debug, Clone)]
pub struct OdlClient {
    endpoint: ControllerEndpoint,
    http: Client,
}

impl OdlClient {
    pub fn new(endpoint: ControllerEndpoint) -> Result<Self, OdlError> {
        endpoint.validate()?;
        let http = Client::builder()
            .timeout(Duration::from_secs(endpoint.timeout_s))
            .build()
            .map_err(|e| OdlError::Endpoint(e.to_string()))?;
        Ok(OdlClient { endpoint, http })
    }

    pub fn endpoint(&self) -> &ControllerEndpoint {
        &self.endpoint
    }

    /// PUT the entry under `name`; the controller replaces an existing flow
    /// of the same name, which makes repeated pushes idempotent.
    pub fn push_flow(&self, entry: &FlowEntry, name: &str) -> Result<(), OdlError> {
        entry.validate().map_err(|e| OdlError::Document(format!("flow {name}: {e}")))?;
        let fmt = self.endpoint.format;
        let body = to_flow_document(entry, name, fmt);
        let req = self
            .http
            .put(self.endpoint.flow_url(entry.table_id, name))
            .basic_auth(&self.endpoint.user, Some(&self.endpoint.secret))
            .header(CONTENT_TYPE, fmt.media_type())
            .header(ACCEPT, fmt.media_type())
            .body(body);
        check(req.send(), name, false)
    }

    /// A flow that is already absent counts as deleted.
    pub fn delete_flow(&self, table: TableId, name: &str) -> Result<(), OdlError> {
        let req = self
            .http
            .delete(self.endpoint.flow_url(table, name))
            .basic_auth(&self.endpoint.user, Some(&self.endpoint.secret));
        check(req.send(), name, true)
    }

    /// Pushes every entry in program order and returns the names used.
    pub fn push_program(&self, program: &FlowProgram) -> Result<Vec<String>, OdlError> {
        let mut names = Vec::with_capacity(program.entries.len());
        for entry in &program.entries {
            let name = flow_name(entry);
            self.push_flow(entry, &name)?;
            names.push(name);
        }
        Ok(names)
    }
}

fn check(sent: reqwest::Result<reqwest::blocking::Response>, flow: &str, missing_ok: bool) -> Result<(), OdlError> {
    let resp = sent.map_err(|e| OdlError::Connection { flow: flow.to_string(), reason: error_chain(&e) })?;
    let status = resp.status();
    if status.is_success() || (missing_ok && status == StatusCode::NOT_FOUND) {
        return Ok(());
    }
    if status == StatusCode::UNAUTHORIZED || status == StatusCode::FORBIDDEN {
        return Err(OdlError::Auth { flow: flow.to_string(), status: status.as_u16() });
    }
    let body = resp.text().unwrap_or_default();
    Err(OdlError::Status {
        flow: flow.to_string(),
        status: status.as_u16(),
        body: body.trim().chars().take(200).collect(),
    })
}

fn error_chain(e: &dyn std::error::Error) -> String {
    let mut s = e.to_string();
    let mut cur = e.source();
    while let Some(inner) = cur {
        s.push_str(": ");
        s.push_str(&inner.to_string());
        cur = inner.source();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_validation() {
        let ok = ControllerEndpoint::new("http://127.0.0.1:8181", "openflow:1");
        assert!(ok.validate().is_ok());
        let mut e = ok.clone();
        e.base_url.clear();
        assert!(matches!(e.validate(), Err(OdlError::Endpoint(_))));
        let mut e = ok.clone();
        e.timeout_s = 0;
        assert!(e.validate().is_err());
        let mut e = ok;
        e.base_url = "ftp://x".into();
        assert!(e.validate().is_err());
    }

    #[test]
    fn url_joins_without_double_slash() {
        let e = ControllerEndpoint::new("http://c:8181/", "openflow:1");
        assert_eq!(
            e.flow_url(1, "f"),
            "http://c:8181/restconf/config/opendaylight-inventory:nodes/node/openflow:1/table/1/flow/f"
        );
    }
}
