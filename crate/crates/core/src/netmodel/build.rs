use std::collections::HashMap;

use serde_json::{json, Value};

use super::{EdgeFrame, EdgeType, EventNetwork, Info, VertexFrame, VertexType};
use crate::extract::{sentence_key, EntityMention, ExtractionBundle};

#[derive(Default)]
struct VertexAcc {
    count: u64,
    docs: Vec<String>,
    sentences: Vec<String>,
    timestamps: Vec<Value>,
}

fn push_unique<T: PartialEq>(v: &mut Vec<T>, x: T) {
    if !v.contains(&x) {
        v.push(x);
    }
}

struct Builder<'a> {
    bundle: &'a ExtractionBundle,
    net: EventNetwork,
    by_identity: HashMap<(String, VertexType), u32>,
    acc: Vec<VertexAcc>,
}

impl Builder<'_> {
    fn timestamp(&self, doc_id: &str) -> Value {
        self.bundle.timestamp(doc_id).map_or(Value::Null, |t| Value::String(t.to_string()))
    }

    fn vertex(&mut self, m: &EntityMention) -> u32 {
        let id = (m.surface.clone(), VertexType::from(m.etype));
        if let Some(&k) = self.by_identity.get(&id) {
            let v = &mut self.net.vertices[k as usize];
            v.weight = v.weight.max(m.weight.clamp(0.0, 1.0));
            return k;
        }
        let key = self.net.vertices.len() as u32;
        self.net.vertices.push(VertexFrame {
            key,
            name: id.0.clone(),
            vtype: id.1,
            weight: m.weight.clamp(0.0, 1.0),
            info: Info::new(),
        });
        self.acc.push(VertexAcc::default());
        self.by_identity.insert(id, key);
        key
    }

    fn observe(&mut self, m: &EntityMention) {
        let k = self.vertex(m) as usize;
        let ts = self.timestamp(&m.doc_id);
        let a = &mut self.acc[k];
        a.count += 1;
        push_unique(&mut a.docs, m.doc_id.clone());
        push_unique(&mut a.sentences, sentence_key(&m.doc_id, m.sentence_index));
        push_unique(&mut a.timestamps, ts);
    }
}

/// Merges the bundle's mentions by (surface, type) into vertices and its
/// relation mentions by (type, unordered endpoints) into edges. Keys are
/// dense from 0 in first-seen order; relations whose two arguments merge into
/// one vertex are dropped.
pub fn build_event_network(bundle: &ExtractionBundle) -> EventNetwork {
    let mut b = Builder {
        bundle,
        net: EventNetwork::new(bundle.event_id.clone()),
        by_identity: HashMap::new(),
        acc: Vec::new(),
    };
    for m in &bundle.mentions {
        b.observe(m);
    }

    let mut by_edge: HashMap<(EdgeType, u32, u32), usize> = HashMap::new();
    let mut edge_mentions: Vec<Vec<Value>> = Vec::new();
    for r in &bundle.relations {
        let (k1, k2) = (b.vertex(&r.arg1), b.vertex(&r.arg2));
        if k1 == k2 {
            log::debug!("{}: dropping {} self-relation on {:?}", bundle.event_id, r.rtype, r.arg1.surface);
            continue;
        }
        let etype = EdgeType::from(r.rtype);
        let id = (etype, k1.min(k2), k1.max(k2));
        let i = *by_edge.entry(id).or_insert_with(|| {
            b.net.edges.push(EdgeFrame {
                etype,
                v1: id.1,
                v2: id.2,
                weight: 0.0,
                info: Info::new(),
            });
            edge_mentions.push(Vec::new());
            b.net.edges.len() - 1
        });
        let e = &mut b.net.edges[i];
        e.weight = e.weight.max(r.weight);
        edge_mentions[i].push(json!({
            "doc_id": r.doc_id,
            "sentence": r.sentence_index,
            "timestamp": b.timestamp(&r.doc_id),
            "weight": r.weight,
        }));
    }

    let Builder { mut net, acc, .. } = b;
    for (v, a) in net.vertices.iter_mut().zip(acc) {
        v.info.insert("count".into(), a.count.into());
        v.info.insert("docs".into(), a.docs.into());
        v.info.insert("sentences".into(), a.sentences.into());
        v.info.insert("timestamps".into(), a.timestamps.into());
    }
    for (e, ms) in net.edges.iter_mut().zip(edge_mentions) {
        e.info.insert("count".into(), ms.len().into());
        e.info.insert("mentions".into(), ms.into());
    }
    net
}
