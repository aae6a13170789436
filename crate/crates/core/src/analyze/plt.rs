use std::collections::HashMap;

use serde_json::{json, Value};

use crate::netmodel::{EdgeFrame, EdgeType, EventNetwork, Info, VertexFrame, VertexType};

/// One PHYS relation mention selected for a person.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysMention {
    pub event_id: String,
    pub location: String,
    pub location_weight: f64,
    pub doc_id: Option<String>,
    /// Day of the source document, `YYYY-MM-DD`.
    pub day: String,
    pub weight: f64,
}

fn day_of(ts: &str) -> Option<String> {
    crate::timefmt::parse(ts).ok().map(|t| t.format("%Y-%m-%d").to_string())
}

/// PHYS relation mentions joining the PER vertex `person` to a LOC vertex,
/// one entry per mention recorded in edge info. Mentions without a
/// parseable timestamp cannot be placed in time and are skipped.
pub fn select_phys_mentions(nets: &[EventNetwork], person: &str) -> Vec<PhysMention> {
    let mut out = Vec::new();
    for net in nets {
        let index = net.key_index();
        for e in net.edges.iter().filter(|e| e.etype == EdgeType::Phys) {
            let (a, b) = (&net.vertices[index[&e.v1]], &net.vertices[index[&e.v2]]);
            let is_person = |v: &VertexFrame| v.vtype == VertexType::Per && v.name == person;
            let loc = match (is_person(a), is_person(b)) {
                (true, false) => b,
                (false, true) => a,
                _ => continue,
            };
            if loc.vtype != VertexType::Loc {
                continue;
            }
            let mentions = e.info.get("mentions").and_then(Value::as_array).map(Vec::as_slice).unwrap_or(&[]);
            for m in mentions {
                let Some(day) = m.get("timestamp").and_then(Value::as_str).and_then(day_of) else {
                    log::warn!("{}: PHYS mention without timestamp skipped", net.event_id);
                    continue;
                };
                out.push(PhysMention {
                    event_id: net.event_id.clone(),
                    location: loc.name.clone(),
                    location_weight: loc.weight,
                    doc_id: m.get("doc_id").and_then(Value::as_str).map(str::to_string),
                    day,
                    weight: m.get("weight").and_then(Value::as_f64).unwrap_or(e.weight),
                });
            }
        }
    }
    out
}

/// Person-location-time graph: every PHYS mention of `person` becomes one
/// edge from a TIME vertex (its document's day) to the LOC vertex. Equal days
/// and equal locations merge; parallel edges are kept, one per mention.
pub fn plt_analysis(nets: &[EventNetwork], person: &str) -> EventNetwork {
    let mut net = EventNetwork::new("plt");
    net.provenance = nets.iter().map(|n| n.event_id.as_str()).collect::<Vec<_>>().join(",");
    net.params.insert("person".into(), json!(person));

    let mut keys: HashMap<(VertexType, String), u32> = HashMap::new();
    let mut vertex = |net: &mut EventNetwork, vtype: VertexType, name: &str, weight: f64, doc: &Option<String>| {
        let key = *keys.entry((vtype, name.to_string())).or_insert_with(|| {
            net.vertices.push(VertexFrame {
                key: net.vertices.len() as u32,
                name: name.to_string(),
                vtype,
                weight,
                info: Info::from_iter([("docs".to_string(), json!([]))]),
            });
            net.vertices.len() as u32 - 1
        });
        let v = &mut net.vertices[key as usize];
        v.weight = v.weight.max(weight);
        if let (Some(d), Some(Value::Array(docs))) = (doc, v.info.get_mut("docs")) {
            if !docs.iter().any(|x| x.as_str() == Some(d)) {
                docs.push(json!(d));
            }
        }
        key
    };

    for m in select_phys_mentions(nets, person) {
        let t = vertex(&mut net, VertexType::Time, &m.day, 1.0, &m.doc_id);
        let l = vertex(&mut net, VertexType::Loc, &m.location, m.location_weight, &m.doc_id);
        net.edges.push(EdgeFrame {
            etype: EdgeType::Phys,
            v1: t,
            v2: l,
            weight: m.weight,
            info: Info::from_iter([
                ("doc_id".to_string(), json!(m.doc_id)),
                ("event_id".to_string(), json!(m.event_id)),
            ]),
        });
    }
    net
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(event: &str, person_name: &str, loc: &str, ts: &str, doc: &str) -> EventNetwork {
        let mut n = EventNetwork::new(event);
        n.vertices = vec![
            VertexFrame {
                key: 0,
                name: person_name.into(),
                vtype: VertexType::Per,
                weight: 1.0,
                info: Info::new(),
            },
            VertexFrame {
                key: 1,
                name: loc.into(),
                vtype: VertexType::Loc,
                weight: 0.8,
                info: Info::new(),
            },
        ];
        n.edges = vec![EdgeFrame {
            etype: EdgeType::Phys,
            v1: 1,
            v2: 0,
            weight: 0.9,
            info: Info::from_iter([(
                "mentions".to_string(),
                json!([{"doc_id": doc, "sentence": 0, "timestamp": ts, "weight": 0.9}]),
            )]),
        }];
        n
    }

    #[test]
    fn two_documents_two_ticks() {
        let nets = [
            net("t0/e00", "毛泽东", "井冈山", "1928-04-01T08:00:00Z", "d1"),
            net("t0/e01", "毛泽东", "瑞金", "1931-11-07T00:00:00Z", "d2"),
        ];
        let g = plt_analysis(&nets, "毛泽东");
        g.validate().unwrap();
        let names: Vec<(&str, VertexType)> = g.vertices.iter().map(|v| (v.name.as_str(), v.vtype)).collect();
        assert_eq!(
            names,
            [
                ("1928-04-01", VertexType::Time),
                ("井冈山", VertexType::Loc),
                ("1931-11-07", VertexType::Time),
                ("瑞金", VertexType::Loc)
            ]
        );
        let ends: Vec<(u32, u32)> = g.edges.iter().map(|e| (e.v1, e.v2)).collect();
        assert_eq!(ends, [(0, 1), (2, 3)]);
    }

    #[test]
    fn same_day_and_place_merge_but_edges_stay() {
        let nets = [
            net("t0/e00", "毛泽东", "井冈山", "1928-04-01T08:00:00Z", "d1"),
            net("t0/e01", "毛泽东", "井冈山", "1928-04-01T20:00:00Z", "d2"),
        ];
        let g = plt_analysis(&nets, "毛泽东");
        assert_eq!(g.vertices.len(), 2);
        assert_eq!(g.edges.len(), 2);
        assert_eq!(g.vertices[0].info["docs"], json!(["d1", "d2"]));
    }

    #[test]
    fn absent_person_or_no_phys_is_empty() {
        let nets = [net("t0/e00", "朱德", "井冈山", "1928-04-01T08:00:00Z", "d1")];
        assert!(plt_analysis(&nets, "毛泽东").is_empty());
        let mut n = nets[0].clone();
        n.edges[0].etype = EdgeType::PerSoc;
        assert!(plt_analysis(&[n], "朱德").is_empty());
    }

    #[test]
    fn non_location_partner_ignored() {
        let mut n = net("t0/e00", "毛泽东", "红军", "1928-04-01T08:00:00Z", "d1");
        n.vertices[1].vtype = VertexType::Org;
        assert!(plt_analysis(&[n], "毛泽东").is_empty());
    }
}
