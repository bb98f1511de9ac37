//! In-memory property graph store: labeled nodes, typed edges, property
//! maps, and the label / type / adjacency / property-value indexes the
//! executor relies on.
//!
//! The store is mutable only while a single writer constructs it; afterwards
//! it is frozen by convention and safe to share read-only across concurrent
//! query executions. Edges are stored directed (source = the foreign-key
//! owning side's referenced entity) but matched undirected by default.

pub(crate) mod export;

pub use export::{export_graph, import_graph_jsonl, ExportFormat, GraphIoError};

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::value::{PropertyMap, Value, ValueKey};

pub type NodeId = u64;
pub type EdgeId = u64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Node {
    pub id: NodeId,
    pub label: String,
    pub properties: PropertyMap,
    /// Nodes built from placeholder rows: counted by statistics, skipped by
    /// query execution.
    pub placeholder: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Edge {
    pub id: EdgeId,
    pub edge_type: String,
    pub src: NodeId,
    pub dst: NodeId,
    pub properties: PropertyMap,
}

#[derive(Debug, Default)]
pub struct PropertyGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    label_index: BTreeMap<String, Vec<NodeId>>,
    type_index: BTreeMap<String, Vec<EdgeId>>,
    adjacency: HashMap<NodeId, Vec<EdgeId>>,
    property_index: HashMap<(String, String, ValueKey), Vec<NodeId>>,
}

impl PropertyGraph {
    pub fn new() -> Self {
        PropertyGraph::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id as usize)
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edges.get(id as usize)
    }

    pub fn add_node(&mut self, label: impl Into<String>, properties: PropertyMap) -> NodeId {
        self.add_node_full(label, properties, false)
    }

    pub fn add_node_full(
        &mut self,
        label: impl Into<String>,
        properties: PropertyMap,
        placeholder: bool,
    ) -> NodeId {
        let label = label.into();
        assert!(!label.is_empty(), "node label must be non-empty");
        let id = self.nodes.len() as NodeId;
        self.label_index.entry(label.clone()).or_default().push(id);
        for (key, value) in &properties {
            self.property_index
                .entry((label.clone(), key.clone(), value.canonical()))
                .or_default()
                .push(id);
        }
        self.nodes.push(Node {
            id,
            label,
            properties,
            placeholder,
        });
        id
    }

    /// Endpoints must already exist; construction guarantees this.
    pub fn add_edge(
        &mut self,
        edge_type: impl Into<String>,
        src: NodeId,
        dst: NodeId,
        properties: PropertyMap,
    ) -> EdgeId {
        let edge_type = edge_type.into();
        assert!(
            (src as usize) < self.nodes.len() && (dst as usize) < self.nodes.len(),
            "edge endpoints must exist"
        );
        let id = self.edges.len() as EdgeId;
        self.type_index
            .entry(edge_type.clone())
            .or_default()
            .push(id);
        self.adjacency.entry(src).or_default().push(id);
        if src != dst {
            self.adjacency.entry(dst).or_default().push(id);
        }
        self.edges.push(Edge {
            id,
            edge_type,
            src,
            dst,
            properties,
        });
        id
    }

    pub fn nodes_with_label(&self, label: &str) -> &[NodeId] {
        self.label_index.get(label).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn edges_with_type(&self, edge_type: &str) -> &[EdgeId] {
        self.type_index
            .get(edge_type)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Edges incident to `id`, in insertion order.
    pub fn incident_edges(&self, id: NodeId) -> &[EdgeId] {
        self.adjacency.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Nodes of `label` whose property `key` equals `value` under numeric
    /// widening.
    pub fn lookup(&self, label: &str, key: &str, value: &Value) -> &[NodeId] {
        self.property_index
            .get(&(label.to_string(), key.to_string(), value.canonical()))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.label_index.keys().map(String::as_str)
    }

    /// Rebuild every index from the node/edge sets and compare; test hook
    /// for index consistency.
    pub fn indexes_consistent(&self) -> bool {
        let mut rebuilt = PropertyGraph::new();
        for n in &self.nodes {
            rebuilt.add_node_full(n.label.clone(), n.properties.clone(), n.placeholder);
        }
        for e in &self.edges {
            rebuilt.add_edge(e.edge_type.clone(), e.src, e.dst, e.properties.clone());
        }
        rebuilt.label_index == self.label_index
            && rebuilt.type_index == self.type_index
            && rebuilt.adjacency == self.adjacency
            && rebuilt.property_index == self.property_index
    }
}

/// Aggregate statistics over a graph: the subject of the consistency
/// check-and-repair loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub node_count: u64,
    pub edge_count: u64,
    pub labels: BTreeMap<String, u64>,
    pub types: BTreeMap<String, u64>,
    pub label_property_keys: BTreeMap<String, BTreeSet<String>>,
    pub type_property_keys: BTreeMap<String, BTreeSet<String>>,
}

pub fn graph_stats(g: &PropertyGraph) -> GraphStats {
    let mut labels: BTreeMap<String, u64> = BTreeMap::new();
    let mut label_property_keys: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for n in g.nodes() {
        *labels.entry(n.label.clone()).or_default() += 1;
        let keys = label_property_keys.entry(n.label.clone()).or_default();
        keys.extend(n.properties.keys().cloned());
    }
    let mut types: BTreeMap<String, u64> = BTreeMap::new();
    let mut type_property_keys: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for e in g.edges() {
        *types.entry(e.edge_type.clone()).or_default() += 1;
        match type_property_keys.entry(e.edge_type.clone()) {
            Entry::Vacant(v) => {
                v.insert(e.properties.keys().cloned().collect());
            }
            Entry::Occupied(mut o) => o.get_mut().extend(e.properties.keys().cloned()),
        }
    }
    GraphStats {
        node_count: g.node_count() as u64,
        edge_count: g.edge_count() as u64,
        labels,
        types,
        label_property_keys,
        type_property_keys,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn props(pairs: &[(&str, Value)]) -> PropertyMap {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect()
    }

    #[test]
    fn empty_graph_stats_are_zero() {
        let s = graph_stats(&PropertyGraph::new());
        assert_eq!(s.node_count, 0);
        assert_eq!(s.edge_count, 0);
        assert!(s.labels.is_empty());
        assert!(s.types.is_empty());
    }

    #[test]
    fn college_shaped_stats() {
        let mut g = PropertyGraph::new();
        let f1 = g.add_node("Faculty", props(&[("FacID", Value::Int(1))]));
        let f2 = g.add_node("Faculty", props(&[("FacID", Value::Int(2))]));
        let d = g.add_node("Department", props(&[("DNO", Value::Int(10))]));
        g.add_edge("Member_of", f1, d, PropertyMap::new());
        g.add_edge("Member_of", f2, d, PropertyMap::new());
        let s = graph_stats(&g);
        assert_eq!(s.node_count, 3);
        assert_eq!(s.labels["Faculty"], 2);
        assert_eq!(s.labels["Department"], 1);
        assert_eq!(s.types["Member_of"], 2);
        assert!(s.label_property_keys["Faculty"].contains("FacID"));
        assert_eq!(s.labels.values().sum::<u64>(), s.node_count);
        assert_eq!(s.types.values().sum::<u64>(), s.edge_count);
    }

    #[test]
    fn property_lookup_uses_widened_equality() {
        let mut g = PropertyGraph::new();
        let n = g.add_node("t", props(&[("x", Value::Float(1.0))]));
        assert_eq!(g.lookup("t", "x", &Value::Int(1)), &[n]);
        assert!(g.lookup("t", "x", &Value::Int(2)).is_empty());
        assert!(g.lookup("u", "x", &Value::Int(1)).is_empty());
    }

    #[test]
    fn indexes_stay_consistent() {
        let mut g = PropertyGraph::new();
        let a = g.add_node("a", props(&[("k", Value::text("v"))]));
        let b = g.add_node("b", PropertyMap::new());
        g.add_edge("t", a, b, props(&[("w", Value::Int(1))]));
        g.add_edge("t", b, a, PropertyMap::new());
        assert!(g.indexes_consistent());
        assert_eq!(g.incident_edges(a).len(), 2);
    }
}
