use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use serde_json::json;

use super::filter::induced_subgraph;
use super::{AnalyzeError, Result};
use crate::netmodel::EventNetwork;

/// Undirected adjacency with neighbours in ascending key order. Edge types
/// are ignored.
pub fn adjacency(net: &EventNetwork) -> BTreeMap<u32, BTreeSet<u32>> {
    let mut adj: BTreeMap<u32, BTreeSet<u32>> = net.vertices.iter().map(|v| (v.key, BTreeSet::new())).collect();
    for e in &net.edges {
        adj.entry(e.v1).or_default().insert(e.v2);
        adj.entry(e.v2).or_default().insert(e.v1);
    }
    adj
}

fn hop_distances(adj: &BTreeMap<u32, BTreeSet<u32>>, seeds: &[u32], limit: Option<usize>) -> HashMap<u32, usize> {
    let mut dist: HashMap<u32, usize> = seeds.iter().map(|&k| (k, 0)).collect();
    let mut queue: VecDeque<u32> = seeds.iter().copied().collect();
    while let Some(k) = queue.pop_front() {
        let d = dist[&k];
        if limit.is_some_and(|l| d >= l) {
            continue;
        }
        for &n in &adj[&k] {
            if !dist.contains_key(&n) {
                dist.insert(n, d + 1);
                queue.push_back(n);
            }
        }
    }
    dist
}

fn keys_named(net: &EventNetwork, name: &str) -> Result<Vec<u32>> {
    let mut keys: Vec<u32> = net.vertices_named(name).map(|v| v.key).collect();
    if keys.is_empty() {
        return Err(AnalyzeError::VertexNotFound(name.to_string()));
    }
    keys.sort_unstable();
    Ok(keys)
}

/// Fewest-hop path between any vertex named `a` and any vertex named `b`,
/// as a key sequence; among shortest paths the lexicographically smallest
/// key sequence wins. `None` when disconnected.
pub fn shortest_path(net: &EventNetwork, a: &str, b: &str) -> Result<Option<Vec<u32>>> {
    let sources = keys_named(net, a)?;
    let targets = keys_named(net, b)?;
    let adj = adjacency(net);
    let to_target = hop_distances(&adj, &targets, None);
    let Some(start) = sources
        .iter()
        .filter_map(|k| to_target.get(k).map(|&d| (d, *k)))
        .min()
    else {
        return Ok(None);
    };
    let (mut d, mut cur) = start;
    let mut path = vec![cur];
    while d > 0 {
        cur = *adj[&cur]
            .iter()
            .find(|n| to_target.get(n) == Some(&(d - 1)))
            .expect("a neighbour one hop closer exists");
        path.push(cur);
        d -= 1;
    }
    Ok(Some(path))
}

/// The path as a network: its vertices and, for each step, the first edge
/// joining the two keys.
pub fn path_network(net: &EventNetwork, path: &[u32]) -> EventNetwork {
    let index = net.key_index();
    let mut out = EventNetwork {
        event_id: net.event_id.clone(),
        provenance: net.provenance.clone(),
        params: net.params.clone(),
        vertices: path.iter().map(|k| net.vertices[index[k]].clone()).collect(),
        edges: Vec::new(),
    };
    for w in path.windows(2) {
        if let Some(e) = net
            .edges
            .iter()
            .find(|e| (e.v1 == w[0] && e.v2 == w[1]) || (e.v1 == w[1] && e.v2 == w[0]))
        {
            out.edges.push(e.clone());
        }
    }
    out.params.insert("hops".into(), json!(path.len().saturating_sub(1)));
    out
}

/// Induced subgraph on the vertices within `radius` hops of any vertex
/// named `center`. An absent center yields an empty network.
pub fn ego_network(net: &EventNetwork, center: &str, radius: usize) -> Result<EventNetwork> {
    if radius < 1 {
        return Err(AnalyzeError::InvalidParameter("ego radius must be at least 1".into()));
    }
    let seeds: Vec<u32> = net.vertices_named(center).map(|v| v.key).collect();
    let keys: HashSet<u32> = if seeds.is_empty() {
        HashSet::new()
    } else {
        hop_distances(&adjacency(net), &seeds, Some(radius)).into_keys().collect()
    };
    Ok(induced_subgraph(net, &keys))
}
