//! Command line and read-only HTTP service over an artifact directory.
//! Both front ends answer analyses through [`analysis_json`], so equal
//! parameters give byte-equal output.

pub mod cli;
pub mod server;

use evnet_core::netmodel::{to_json, EventNetwork};
use evnet_core::pipeline::{Analysis, Params, QueryResult, Workspace};

pub fn analysis_network(ws: &Workspace, event: Option<&str>, kind: Analysis, params: &Params) -> QueryResult<EventNetwork> {
    ws.analyze(event, kind, params)
}

/// Canonical network JSON of one analysis.
pub fn analysis_json(ws: &Workspace, event: Option<&str>, kind: Analysis, params: &Params) -> QueryResult<String> {
    analysis_network(ws, event, kind, params).map(|n| to_json(&n))
}
