//! Frame-based event networks: vertex and edge frames, construction from an
//! extraction bundle, and serialization.
//!
//! The canonical on-disk form is JSON:
//!
//! ```json
//! {"event_id": "t0/e03", "provenance": "t0/e03", "params": {},
//!  "vertices": [{"key": 0, "name": "毛泽东", "vtype": "PER", "weight": 1.0, "info": {}}],
//!  "edges": [{"etype": "PHYS", "v1": 0, "v2": 1, "weight": 0.93, "info": {"count": 2}}]}
//! ```

mod build;
mod export;

pub use build::build_event_network;
pub use export::{export_network, import_network, parse_json, to_dot, to_graphml, to_json, to_pajek, ExportFormat};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::extract::{EntityType, RelationType};

/// Open key-value slot of a frame.
pub type Info = serde_json::Map<String, Value>;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed network json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid network: {0}")]
    Invalid(String),

    #[error("unknown {kind} {value:?}")]
    UnknownName { kind: &'static str, value: String },
}

pub type Result<T> = std::result::Result<T, NetError>;

macro_rules! name_enum {
    ($name:ident, $kind:literal, { $($var:ident => $s:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $s)] $var,)+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$var),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$var => $s,)+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = NetError;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok($name::$var),)+
                    other => Err(NetError::UnknownName { kind: $kind, value: other.to_string() }),
                }
            }
        }
    };
}

name_enum!(VertexType, "vertex type", {
    Per => "PER",
    Org => "ORG",
    Loc => "LOC",
    Time => "TIME",
});

name_enum!(EdgeType, "edge type", {
    PerSoc => "PER-SOC",
    GenAff => "GEN-AFF",
    OrgAff => "ORG-AFF",
    PartWhole => "PART-WHOLE",
    Phys => "PHYS",
    CoOccur => "CO-OCCUR",
});

impl From<EntityType> for VertexType {
    fn from(t: EntityType) -> Self {
        match t {
            EntityType::Per => VertexType::Per,
            EntityType::Org => VertexType::Org,
            EntityType::Loc => VertexType::Loc,
        }
    }
}

impl From<RelationType> for EdgeType {
    fn from(t: RelationType) -> Self {
        match t {
            RelationType::PerSoc => EdgeType::PerSoc,
            RelationType::GenAff => EdgeType::GenAff,
            RelationType::OrgAff => EdgeType::OrgAff,
            RelationType::PartWhole => EdgeType::PartWhole,
            RelationType::Phys => EdgeType::Phys,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexFrame {
    pub key: u32,
    pub name: String,
    pub vtype: VertexType,
    /// Likelihood that `name` is of type `vtype`, in [0, 1].
    pub weight: f64,
    #[serde(default)]
    pub info: Info,
}

/// Undirected edge between two vertex keys. Weight is a probability for
/// relation edges and a count for CO-OCCUR edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeFrame {
    pub etype: EdgeType,
    pub v1: u32,
    pub v2: u32,
    pub weight: f64,
    #[serde(default)]
    pub info: Info,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventNetwork {
    pub event_id: String,
    #[serde(default)]
    pub provenance: String,
    /// Parameters that produced this network.
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    pub vertices: Vec<VertexFrame>,
    pub edges: Vec<EdgeFrame>,
}

impl EventNetwork {
    pub fn new(event_id: impl Into<String>) -> Self {
        let event_id = event_id.into();
        Self {
            provenance: event_id.clone(),
            event_id,
            ..Default::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty() && self.edges.is_empty()
    }

    pub fn vertex(&self, key: u32) -> Option<&VertexFrame> {
        self.vertices.iter().find(|v| v.key == key)
    }

    /// Key -> position in `vertices`.
    pub fn key_index(&self) -> HashMap<u32, usize> {
        self.vertices.iter().enumerate().map(|(i, v)| (v.key, i)).collect()
    }

    pub fn vertices_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a VertexFrame> + 'a {
        self.vertices.iter().filter(move |v| v.name == name)
    }

    /// Checks every frame invariant; the message names the first offending
    /// frame.
    pub fn validate(&self) -> Result<()> {
        let mut keys = HashSet::new();
        let mut identities = HashSet::new();
        for v in &self.vertices {
            if !keys.insert(v.key) {
                return Err(NetError::Invalid(format!("duplicate vertex key {}", v.key)));
            }
            if !(0.0..=1.0).contains(&v.weight) {
                return Err(NetError::Invalid(format!("vertex {} weight {} outside [0, 1]", v.key, v.weight)));
            }
            if !identities.insert((v.name.as_str(), v.vtype)) {
                return Err(NetError::Invalid(format!("vertex {} repeats ({:?}, {})", v.key, v.name, v.vtype)));
            }
        }
        for (i, e) in self.edges.iter().enumerate() {
            let desc = || format!("edge {i} ({} {}-{})", e.etype, e.v1, e.v2);
            for k in [e.v1, e.v2] {
                if !keys.contains(&k) {
                    return Err(NetError::Invalid(format!("{} references missing vertex {k}", desc())));
                }
            }
            if e.v1 == e.v2 {
                return Err(NetError::Invalid(format!("{} is a self-loop", desc())));
            }
            if !e.weight.is_finite() || e.weight < 0.0 {
                return Err(NetError::Invalid(format!("{} has weight {}", desc(), e.weight)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(key: u32, name: &str, vtype: VertexType, weight: f64) -> VertexFrame {
        VertexFrame {
            key,
            name: name.into(),
            vtype,
            weight,
            info: Info::new(),
        }
    }

    fn e(v1: u32, v2: u32) -> EdgeFrame {
        EdgeFrame {
            etype: EdgeType::Phys,
            v1,
            v2,
            weight: 1.0,
            info: Info::new(),
        }
    }

    fn two() -> EventNetwork {
        let mut n = EventNetwork::new("t0/e00");
        n.vertices = vec![v(0, "a", VertexType::Per, 1.0), v(1, "b", VertexType::Loc, 0.5)];
        n.edges = vec![e(0, 1)];
        n
    }

    #[test]
    fn valid_network_passes() {
        two().validate().unwrap();
        EventNetwork::new("x").validate().unwrap();
    }

    #[test]
    fn dangling_edge_named() {
        let mut n = two();
        n.edges.push(e(0, 99));
        let msg = n.validate().unwrap_err().to_string();
        assert!(msg.contains("edge 1") && msg.contains("99"), "{msg}");
    }

    #[test]
    fn invariants_enforced() {
        let mut n = two();
        n.vertices[1].key = 0;
        assert!(n.validate().is_err());

        let mut n = two();
        n.vertices[1].weight = 1.5;
        assert!(n.validate().is_err());

        let mut n = two();
        n.vertices[1].name = "a".into();
        n.vertices[1].vtype = VertexType::Per;
        assert!(n.validate().is_err());

        let mut n = two();
        n.edges.push(e(1, 1));
        assert!(n.validate().is_err());
    }

    #[test]
    fn type_names_round_trip() {
        for t in VertexType::ALL {
            assert_eq!(t.as_str().parse::<VertexType>().unwrap(), *t);
        }
        for t in EdgeType::ALL {
            assert_eq!(t.as_str().parse::<EdgeType>().unwrap(), *t);
        }
        for r in RelationType::ALL {
            assert_eq!(EdgeType::from(r).as_str(), r.as_str());
        }
        assert!("FOO".parse::<EdgeType>().is_err());
    }
}
