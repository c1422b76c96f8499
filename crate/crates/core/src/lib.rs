//! Threat-intelligence driven flow tables for an OpenFlow 1.3 pipeline:
//! indicator storage, rule compilation, a software switch, traffic replay
//! and a controller push client.

pub mod flow_compiler;
pub mod ioc_store;
pub mod net;
pub mod odl_client;
pub mod par;
pub mod pipeline_engine;
pub mod replay_harness;
