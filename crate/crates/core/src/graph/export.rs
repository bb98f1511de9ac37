//! Graph exporters: a Cypher CREATE script for loading into external graph
//! databases, and a JSONL form that round-trips exactly.
//!
//! Both outputs are deterministic. The Cypher script orders nodes by
//! (label, sorted property key-values, id) and edges by (type, endpoint
//! keys, id); the JSONL form is in insertion order, one record per line,
//! and re-importing it reproduces a graph with identical statistics.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Edge, Node, PropertyGraph};
use crate::value::{PropertyMap, Value, ValueKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    CypherScript,
    Jsonl,
}

#[derive(Debug, Error)]
pub enum GraphIoError {
    #[error("unsupported export format `{0}`")]
    UnsupportedFormat(String),
    #[error("bad graph record on line {line}: {detail}")]
    BadRecord { line: usize, detail: String },
}

impl FromStr for ExportFormat {
    type Err = GraphIoError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cypher-script" | "cypher" => Ok(ExportFormat::CypherScript),
            "jsonl" => Ok(ExportFormat::Jsonl),
            other => Err(GraphIoError::UnsupportedFormat(other.to_string())),
        }
    }
}

pub fn export_graph(g: &PropertyGraph, format: ExportFormat) -> Vec<u8> {
    match format {
        ExportFormat::CypherScript => cypher_script(g).into_bytes(),
        ExportFormat::Jsonl => jsonl(g).into_bytes(),
    }
}

// ───────────────────────── cypher script ─────────────────────────

fn node_sort_key(n: &Node) -> (String, Vec<(String, ValueKey)>, u64) {
    (
        n.label.clone(),
        n.properties
            .iter()
            .map(|(k, v)| (k.clone(), v.canonical()))
            .collect(),
        n.id,
    )
}

fn cypher_script(g: &PropertyGraph) -> String {
    let mut out = String::new();
    let mut nodes: Vec<&Node> = g.nodes().iter().collect();
    nodes.sort_by_key(|n| node_sort_key(n));
    for n in &nodes {
        out.push_str(&format!(
            "CREATE (:{}{});\n",
            backtick(&n.label),
            prop_map(&n.properties)
        ));
    }
    let mut edges: Vec<&Edge> = g.edges().iter().collect();
    edges.sort_by_key(|e| {
        (
            e.edge_type.clone(),
            node_sort_key(g.node(e.src).expect("src exists")),
            node_sort_key(g.node(e.dst).expect("dst exists")),
            e.id,
        )
    });
    for e in &edges {
        let src = g.node(e.src).expect("src exists");
        let dst = g.node(e.dst).expect("dst exists");
        out.push_str(&format!(
            "MATCH (a:{}{}), (b:{}{}) CREATE (a)-[:{}{}]->(b);\n",
            backtick(&src.label),
            prop_map(&src.properties),
            backtick(&dst.label),
            prop_map(&dst.properties),
            backtick(&e.edge_type),
            prop_map(&e.properties)
        ));
    }
    out
}

fn prop_map(props: &PropertyMap) -> String {
    if props.is_empty() {
        return String::new();
    }
    let body: Vec<String> = props
        .iter()
        .map(|(k, v)| format!("{}: {}", backtick(k), cypher_literal(v)))
        .collect();
    format!(" {{{}}}", body.join(", "))
}

pub(crate) fn backtick(ident: &str) -> String {
    let plain = !ident.is_empty()
        && ident.chars().next().unwrap().is_ascii_alphabetic()
        && ident.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if plain {
        ident.to_string()
    } else {
        format!("`{ident}`")
    }
}

pub(crate) fn cypher_literal(v: &Value) -> String {
    match v {
        Value::Null => "null".into(),
        Value::Int(i) => i.to_string(),
        Value::Float(f) => {
            if f.fract() == 0.0 && f.is_finite() {
                format!("{f:.1}")
            } else {
                format!("{f}")
            }
        }
        Value::Text(s) => format!("'{}'", s.replace('\\', "\\\\").replace('\'', "\\'")),
    }
}

// ───────────────────────── jsonl ─────────────────────────

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Record {
    Node {
        id: u64,
        label: String,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        placeholder: bool,
        properties: PropertyMap,
    },
    Edge {
        id: u64,
        #[serde(rename = "type")]
        edge_type: String,
        src: u64,
        dst: u64,
        properties: PropertyMap,
    },
}

fn jsonl(g: &PropertyGraph) -> String {
    let mut out = String::new();
    for n in g.nodes() {
        let rec = Record::Node {
            id: n.id,
            label: n.label.clone(),
            placeholder: n.placeholder,
            properties: n.properties.clone(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
        out.push('\n');
    }
    for e in g.edges() {
        let rec = Record::Edge {
            id: e.id,
            edge_type: e.edge_type.clone(),
            src: e.src,
            dst: e.dst,
            properties: e.properties.clone(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Rebuild a graph from its JSONL export. Ids must be the exporter's
/// canonical insertion-ordered form.
pub fn import_graph_jsonl(bytes: &[u8]) -> Result<PropertyGraph, GraphIoError> {
    let text = std::str::from_utf8(bytes).map_err(|e| GraphIoError::BadRecord {
        line: 0,
        detail: e.to_string(),
    })?;
    let mut g = PropertyGraph::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(line).map_err(|e| GraphIoError::BadRecord {
            line: i + 1,
            detail: e.to_string(),
        })?;
        match rec {
            Record::Node {
                id,
                label,
                placeholder,
                properties,
            } => {
                let got = g.add_node_full(label, properties, placeholder);
                if got != id {
                    return Err(GraphIoError::BadRecord {
                        line: i + 1,
                        detail: format!("non-canonical node id {id} (expected {got})"),
                    });
                }
            }
            Record::Edge {
                id,
                edge_type,
                src,
                dst,
                properties,
            } => {
                if g.node(src).is_none() || g.node(dst).is_none() {
                    return Err(GraphIoError::BadRecord {
                        line: i + 1,
                        detail: "edge endpoint not yet defined".into(),
                    });
                }
                let got = g.add_edge(edge_type, src, dst, properties);
                if got != id {
                    return Err(GraphIoError::BadRecord {
                        line: i + 1,
                        detail: format!("non-canonical edge id {id} (expected {got})"),
                    });
                }
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::graph_stats;

    #[test]
    fn single_node_create_statement() {
        let mut g = PropertyGraph::new();
        let mut props = PropertyMap::new();
        props.insert("FacID".into(), Value::Int(1));
        g.add_node("Faculty", props);
        let script = String::from_utf8(export_graph(&g, ExportFormat::CypherScript)).unwrap();
        assert_eq!(script, "CREATE (:Faculty {FacID: 1});\n");
    }

    #[test]
    fn empty_graph_exports_empty_output() {
        let g = PropertyGraph::new();
        assert!(export_graph(&g, ExportFormat::CypherScript).is_empty());
        assert!(export_graph(&g, ExportFormat::Jsonl).is_empty());
    }

    #[test]
    fn jsonl_round_trip_is_byte_identical() {
        let mut g = PropertyGraph::new();
        let mut p1 = PropertyMap::new();
        p1.insert("x".into(), Value::Float(1.5));
        p1.insert("name".into(), Value::text("it's"));
        p1.insert("missing".into(), Value::Null);
        let a = g.add_node("alpha", p1);
        let b = g.add_node_full("beta", PropertyMap::new(), true);
        let mut ep = PropertyMap::new();
        ep.insert("w".into(), Value::Int(3));
        g.add_edge("ties", a, b, ep);

        let bytes = export_graph(&g, ExportFormat::Jsonl);
        let g2 = import_graph_jsonl(&bytes).unwrap();
        assert_eq!(graph_stats(&g), graph_stats(&g2));
        let bytes2 = export_graph(&g2, ExportFormat::Jsonl);
        assert_eq!(bytes, bytes2);
    }

    #[test]
    fn edge_statements_match_endpoints_by_property() {
        let mut g = PropertyGraph::new();
        let mut pa = PropertyMap::new();
        pa.insert("id".into(), Value::Int(1));
        let a = g.add_node("alpha", pa);
        let mut pb = PropertyMap::new();
        pb.insert("id".into(), Value::Int(7));
        let b = g.add_node("beta", pb);
        let mut ep = PropertyMap::new();
        ep.insert("tag".into(), Value::text("x"));
        g.add_edge("ties", a, b, ep);
        let script = String::from_utf8(export_graph(&g, ExportFormat::CypherScript)).unwrap();
        assert!(script.contains(
            "MATCH (a:alpha {id: 1}), (b:beta {id: 7}) CREATE (a)-[:ties {tag: 'x'}]->(b);"
        ));
    }

    #[test]
    fn namespaced_labels_are_backticked() {
        let mut g = PropertyGraph::new();
        g.add_node("college_3.Faculty", PropertyMap::new());
        let script = String::from_utf8(export_graph(&g, ExportFormat::CypherScript)).unwrap();
        assert_eq!(script, "CREATE (:`college_3.Faculty`);\n");
    }

    #[test]
    fn format_parsing() {
        assert!(matches!(
            "cypher-script".parse::<ExportFormat>(),
            Ok(ExportFormat::CypherScript)
        ));
        assert!(matches!("jsonl".parse::<ExportFormat>(), Ok(ExportFormat::Jsonl)));
        assert!(matches!(
            "graphml".parse::<ExportFormat>(),
            Err(GraphIoError::UnsupportedFormat(_))
        ));
    }
}
