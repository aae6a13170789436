use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::netmodel::{EdgeFrame, EdgeType, EventNetwork, Info, VertexFrame, VertexType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Vertex,
    Edge,
}

/// One conjunct. Clauses about the other frame kind (a vertex type on an
/// edge, a name on an edge) are false.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    VtypeIn(Vec<VertexType>),
    EtypeIn(Vec<EdgeType>),
    NameIs(String),
    MinWeight(f64),
    MaxWeight(f64),
    HasInfo(String),
    InfoEquals(String, Value),
    /// Info value is a string or array containing the given string.
    InfoContains(String, String),
}

fn info_contains(info: &Info, key: &str, needle: &str) -> bool {
    match info.get(key) {
        Some(Value::String(s)) => s.contains(needle),
        Some(Value::Array(xs)) => xs.iter().any(|x| x.as_str() == Some(needle)),
        _ => false,
    }
}

impl Clause {
    fn info_test(&self, info: &Info) -> Option<bool> {
        match self {
            Clause::HasInfo(k) => Some(info.contains_key(k)),
            Clause::InfoEquals(k, v) => Some(info.get(k) == Some(v)),
            Clause::InfoContains(k, needle) => Some(info_contains(info, k, needle)),
            _ => None,
        }
    }

    pub fn matches_vertex(&self, v: &VertexFrame) -> bool {
        match self {
            Clause::VtypeIn(ts) => ts.contains(&v.vtype),
            Clause::EtypeIn(_) => false,
            Clause::NameIs(n) => &v.name == n,
            Clause::MinWeight(w) => v.weight >= *w,
            Clause::MaxWeight(w) => v.weight <= *w,
            other => other.info_test(&v.info).unwrap_or(false),
        }
    }

    pub fn matches_edge(&self, e: &EdgeFrame) -> bool {
        match self {
            Clause::EtypeIn(ts) => ts.contains(&e.etype),
            Clause::VtypeIn(_) | Clause::NameIs(_) => false,
            Clause::MinWeight(w) => e.weight >= *w,
            Clause::MaxWeight(w) => e.weight <= *w,
            other => other.info_test(&e.info).unwrap_or(false),
        }
    }
}

/// Conjunction of clauses over one frame kind; no clauses means true.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub target: Target,
    pub clauses: Vec<Clause>,
}

impl Predicate {
    pub fn vertices() -> Self {
        Self {
            target: Target::Vertex,
            clauses: Vec::new(),
        }
    }

    pub fn edges() -> Self {
        Self {
            target: Target::Edge,
            clauses: Vec::new(),
        }
    }

    pub fn with(mut self, clause: Clause) -> Self {
        self.clauses.push(clause);
        self
    }

    /// A vertex predicate never accepts an edge and vice versa.
    pub fn matches_vertex(&self, v: &VertexFrame) -> bool {
        self.target == Target::Vertex && self.clauses.iter().all(|c| c.matches_vertex(v))
    }

    pub fn matches_edge(&self, e: &EdgeFrame) -> bool {
        self.target == Target::Edge && self.clauses.iter().all(|c| c.matches_edge(e))
    }
}

/// Vertices satisfying `vp`, and edges satisfying `ep` whose endpoints both
/// survive. Keys, order and network metadata are unchanged.
pub fn filter_network(net: &EventNetwork, vp: &Predicate, ep: &Predicate) -> EventNetwork {
    let vertices: Vec<VertexFrame> = net.vertices.iter().filter(|v| vp.matches_vertex(v)).cloned().collect();
    let kept: HashSet<u32> = vertices.iter().map(|v| v.key).collect();
    let edges = net
        .edges
        .iter()
        .filter(|e| kept.contains(&e.v1) && kept.contains(&e.v2) && ep.matches_edge(e))
        .cloned()
        .collect();
    EventNetwork {
        event_id: net.event_id.clone(),
        provenance: net.provenance.clone(),
        params: net.params.clone(),
        vertices,
        edges,
    }
}

/// Induced subgraph on the given keys.
pub(crate) fn induced_subgraph(net: &EventNetwork, keys: &HashSet<u32>) -> EventNetwork {
    EventNetwork {
        event_id: net.event_id.clone(),
        provenance: net.provenance.clone(),
        params: net.params.clone(),
        vertices: net.vertices.iter().filter(|v| keys.contains(&v.key)).cloned().collect(),
        edges: net
            .edges
            .iter()
            .filter(|e| keys.contains(&e.v1) && keys.contains(&e.v2))
            .cloned()
            .collect(),
    }
}
