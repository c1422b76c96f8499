//! Controller configuration documents and a RESTCONF push client.

mod client;
mod document;
pub mod schema;
mod stub;

pub use client::{ControllerEndpoint, OdlClient};
pub use document::{flow_name, from_flow_document, to_flow_document, DocumentFormat, FlowDoc};
pub use stub::{RecordedRequest, RecordingStub, StoredFlow};

#[derive(Debug, thiserror::Error)]
pub enum OdlError {
    #[error("flow {flow}: cannot reach controller: {reason}")]
    Connection { flow: String, reason: String },
    #[error("flow {flow}: controller rejected credentials (HTTP {status})")]
    Auth { flow: String, status: u16 },
    #[error("flow {flow}: controller answered HTTP {status}: {body}")]
    Status { flow: String, status: u16, body: String },
    #[error("bad flow document: {0}")]
    Document(String),
    #[error("bad endpoint: {0}")]
    Endpoint(String),
}
