use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::{EventNetwork, NetError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Pajek,
    GraphMl,
    Dot,
    Json,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Pajek => "net",
            ExportFormat::GraphMl => "graphml",
            ExportFormat::Dot => "dot",
            ExportFormat::Json => "json",
        }
    }

    pub fn render(self, net: &EventNetwork) -> String {
        match self {
            ExportFormat::Pajek => to_pajek(net),
            ExportFormat::GraphMl => to_graphml(net),
            ExportFormat::Dot => to_dot(net),
            ExportFormat::Json => to_json(net),
        }
    }
}

impl FromStr for ExportFormat {
    type Err = NetError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pajek" | "net" => Ok(ExportFormat::Pajek),
            "graphml" => Ok(ExportFormat::GraphMl),
            "dot" => Ok(ExportFormat::Dot),
            "json" => Ok(ExportFormat::Json),
            _ => Err(NetError::UnknownName {
                kind: "export format",
                value: s.to_string(),
            }),
        }
    }
}

/// Pretty-printed canonical JSON, newline terminated.
pub fn to_json(net: &EventNetwork) -> String {
    let mut s = serde_json::to_string_pretty(net).expect("network serializes");
    s.push('\n');
    s
}

pub fn parse_json(text: &str) -> Result<EventNetwork> {
    let net: EventNetwork = serde_json::from_str(text)?;
    net.validate()?;
    Ok(net)
}

/// Pajek `.net`: vertices are numbered from 1 in list order, so keys of a
/// dense network appear shifted by one. Double quotes in names become single
/// quotes.
pub fn to_pajek(net: &EventNetwork) -> String {
    let index = net.key_index();
    let mut out = format!("*Vertices {}\n", net.vertices.len());
    for (i, v) in net.vertices.iter().enumerate() {
        let name: String = v
            .name
            .chars()
            .map(|c| match c {
                '"' => '\'',
                c if c.is_control() => ' ',
                c => c,
            })
            .collect();
        writeln!(out, "{} \"{}\"", i + 1, name).unwrap();
    }
    out.push_str("*Edges\n");
    for e in &net.edges {
        writeln!(out, "{} {} {}", index[&e.v1] + 1, index[&e.v2] + 1, e.weight).unwrap();
    }
    out
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\t' | '\n' | '\r' => write!(out, "&#{};", c as u32).unwrap(),
            // not representable in XML 1.0
            c if c.is_control() || matches!(c, '\u{FFFE}' | '\u{FFFF}') => out.push('\u{FFFD}'),
            c => out.push(c),
        }
    }
    out
}

pub fn to_graphml(net: &EventNetwork) -> String {
    let mut out = String::from(concat!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n",
        "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\" ",
        "xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" ",
        "xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns ",
        "http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n",
        "  <key id=\"name\" for=\"node\" attr.name=\"name\" attr.type=\"string\"/>\n",
        "  <key id=\"vtype\" for=\"node\" attr.name=\"vtype\" attr.type=\"string\"/>\n",
        "  <key id=\"vweight\" for=\"node\" attr.name=\"weight\" attr.type=\"double\"/>\n",
        "  <key id=\"vinfo\" for=\"node\" attr.name=\"info\" attr.type=\"string\"/>\n",
        "  <key id=\"etype\" for=\"edge\" attr.name=\"etype\" attr.type=\"string\"/>\n",
        "  <key id=\"eweight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n",
        "  <key id=\"einfo\" for=\"edge\" attr.name=\"info\" attr.type=\"string\"/>\n",
    ));
    writeln!(out, "  <graph id=\"{}\" edgedefault=\"undirected\">", xml_escape(&net.event_id)).unwrap();
    for v in &net.vertices {
        writeln!(out, "    <node id=\"n{}\">", v.key).unwrap();
        writeln!(out, "      <data key=\"name\">{}</data>", xml_escape(&v.name)).unwrap();
        writeln!(out, "      <data key=\"vtype\">{}</data>", v.vtype).unwrap();
        writeln!(out, "      <data key=\"vweight\">{}</data>", v.weight).unwrap();
        let info = serde_json::to_string(&v.info).expect("info serializes");
        writeln!(out, "      <data key=\"vinfo\">{}</data>", xml_escape(&info)).unwrap();
        out.push_str("    </node>\n");
    }
    for (i, e) in net.edges.iter().enumerate() {
        writeln!(out, "    <edge id=\"e{i}\" source=\"n{}\" target=\"n{}\">", e.v1, e.v2).unwrap();
        writeln!(out, "      <data key=\"etype\">{}</data>", e.etype).unwrap();
        writeln!(out, "      <data key=\"eweight\">{}</data>", e.weight).unwrap();
        let info = serde_json::to_string(&e.info).expect("info serializes");
        writeln!(out, "      <data key=\"einfo\">{}</data>", xml_escape(&info)).unwrap();
        out.push_str("    </edge>\n");
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

fn dot_quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if c.is_control() => out.push(' '),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn to_dot(net: &EventNetwork) -> String {
    let mut out = format!("graph {} {{\n", dot_quote(&net.event_id));
    for v in &net.vertices {
        writeln!(
            out,
            "  n{} [label={}, vtype=\"{}\", weight={}];",
            v.key,
            dot_quote(&v.name),
            v.vtype,
            v.weight
        )
        .unwrap();
    }
    for e in &net.edges {
        writeln!(
            out,
            "  n{} -- n{} [label=\"{}\", etype=\"{}\", weight={}];",
            e.v1, e.v2, e.etype, e.etype, e.weight
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

pub fn export_network(net: &EventNetwork, format: ExportFormat, path: &Path) -> Result<()> {
    fs::write(path, format.render(net)).map_err(|source| NetError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads a JSON network and checks every invariant.
pub fn import_network(path: &Path) -> Result<EventNetwork> {
    let text = fs::read_to_string(path).map_err(|source| NetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{EdgeFrame, EdgeType, Info, VertexFrame, VertexType};
    use serde_json::json;

    fn two() -> EventNetwork {
        let mut n = EventNetwork::new("t0/e00");
        let mut info = Info::new();
        info.insert("docs".into(), json!(["d<1>", null]));
        n.vertices = vec![
            VertexFrame {
                key: 0,
                name: "毛\"泽东\"".into(),
                vtype: VertexType::Per,
                weight: 1.0,
                info,
            },
            VertexFrame {
                key: 1,
                name: "A&B".into(),
                vtype: VertexType::Loc,
                weight: 0.25,
                info: Info::new(),
            },
        ];
        n.edges = vec![EdgeFrame {
            etype: EdgeType::Phys,
            v1: 0,
            v2: 1,
            weight: 0.5,
            info: Info::new(),
        }];
        n
    }

    #[test]
    fn pajek_layout() {
        assert_eq!(to_pajek(&two()), "*Vertices 2\n1 \"毛'泽东'\"\n2 \"A&B\"\n*Edges\n1 2 0.5\n");
    }

    #[test]
    fn pajek_renumbers_sparse_keys() {
        let mut n = two();
        n.vertices[0].key = 7;
        n.edges[0].v1 = 7;
        assert!(to_pajek(&n).ends_with("*Edges\n1 2 0.5\n"));
    }

    #[test]
    fn graphml_escapes() {
        let g = to_graphml(&two());
        assert!(g.contains("<data key=\"name\">A&amp;B</data>"));
        assert!(g.contains("d&lt;1&gt;"));
        assert!(g.contains("edgedefault=\"undirected\""));
    }

    #[test]
    fn dot_quotes_names() {
        let d = to_dot(&two());
        assert!(d.contains("label=\"毛\\\"泽东\\\"\""));
        assert!(d.contains("n0 -- n1"));
    }

    #[test]
    fn json_round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("n.json");
        export_network(&two(), ExportFormat::Json, &p).unwrap();
        assert_eq!(import_network(&p).unwrap(), two());
    }

    #[test]
    fn import_rejects_dangling_edge() {
        let mut n = two();
        n.edges[0].v2 = 99;
        let text = serde_json::to_string(&n).unwrap();
        let err = parse_json(&text).unwrap_err().to_string();
        assert!(err.contains("99"), "{err}");
    }

    #[test]
    fn empty_network_file() {
        let n = parse_json(r#"{"event_id":"x","vertices":[],"edges":[]}"#).unwrap();
        assert!(n.is_empty());
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let err = export_network(&two(), ExportFormat::Dot, Path::new("/nonexistent/dir/x.dot")).unwrap_err();
        assert!(matches!(err, NetError::Io { .. }));
    }
}
