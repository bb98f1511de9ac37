//! Incremental graph construction from a repaired, classified database.
//!
//! Mapping rules:
//! - every row of an entity table becomes one node labeled with the table
//!   name, with every column (including keys) as a property;
//! - every row of a linking table becomes one edge typed with the table
//!   name between the nodes its two foreign keys resolve to, carrying the
//!   row's non-key columns as properties;
//! - an entity table that still owns foreign keys (one key, two keys plus a
//!   single-column primary key, or three-plus keys — the hyperedge case)
//!   additionally yields one `<Referenced>_HAS_<Owner>` edge per key per
//!   row, from the referenced node to the row's node, with no properties.
//!
//! Rows whose key values match no target node produce no edge and are
//! logged as orphan incidents.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::graph::{NodeId, PropertyGraph};
use crate::relational::{
    ForeignKey, RelationalDatabase, Table, TableClassification, TableKind,
};
use crate::value::{PropertyMap, Value, ValueKey};

#[derive(Debug, Error)]
#[error("classification does not match the database: {detail}")]
pub struct ClassificationMismatch {
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrphanIncident {
    pub table: String,
    pub row_index: usize,
    pub fk: String,
    pub missing_values: Vec<Value>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BuildLog {
    /// Nodes created per label.
    pub node_counts: BTreeMap<String, u64>,
    /// Edges created per type (linking types and HAS types).
    pub edge_counts: BTreeMap<String, u64>,
    pub orphans: Vec<OrphanIncident>,
    /// Tables with three or more foreign keys, materialized as nodes plus
    /// HAS edges because property graphs have no native hyperedges.
    pub hyperedge_tables: Vec<String>,
}

impl BuildLog {
    pub fn nodes_total(&self) -> u64 {
        self.node_counts.values().sum()
    }

    pub fn edges_total(&self) -> u64 {
        self.edge_counts.values().sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("build log serializes")
    }
}

pub fn build_graph(
    db: &RelationalDatabase,
    cls: &TableClassification,
) -> Result<(PropertyGraph, BuildLog), ClassificationMismatch> {
    let mut g = PropertyGraph::new();
    let log = build_graph_into(&mut g, db, cls)?;
    Ok((g, log))
}

/// Build into an existing graph; used to merge several databases into one
/// store. Endpoint resolution is scoped to the nodes created by this call,
/// so merged databases never cross-link.
pub fn build_graph_into(
    g: &mut PropertyGraph,
    db: &RelationalDatabase,
    cls: &TableClassification,
) -> Result<BuildLog, ClassificationMismatch> {
    for entry in &cls.entries {
        if db.table(&entry.table).is_none() {
            return Err(ClassificationMismatch {
                detail: format!("classified table `{}` is not in the database", entry.table),
            });
        }
    }
    for t in &db.tables {
        if cls.get(&t.name).is_none() {
            return Err(ClassificationMismatch {
                detail: format!("table `{}` is missing from the classification", t.name),
            });
        }
    }

    let mut log = BuildLog::default();

    // entity rows -> nodes, remembering each row's node id
    let mut row_nodes: HashMap<String, Vec<NodeId>> = HashMap::new();
    for entry in &cls.entries {
        if entry.kind != TableKind::Entity {
            continue;
        }
        let table = db.table(&entry.table).unwrap();
        let mut ids = Vec::with_capacity(table.rows.len());
        for row in &table.rows {
            let props: PropertyMap = table
                .column_names()
                .zip(row.values.iter().cloned())
                .map(|(k, v)| (k.to_string(), v))
                .collect();
            ids.push(g.add_node_full(table.name.clone(), props, row.placeholder));
        }
        *log.node_counts.entry(table.name.clone()).or_default() += table.rows.len() as u64;
        row_nodes.insert(table.name.to_ascii_lowercase(), ids);
        if entry.has_edges.len() >= 3 {
            log.hyperedge_tables.push(table.name.clone());
        }
    }

    let resolver = EndpointResolver::build(db, cls, &row_nodes);

    // linking rows -> edges
    for entry in &cls.entries {
        let TableKind::Linking = entry.kind else {
            continue;
        };
        let (f1, f2) = entry.linking_fks.as_ref().expect("linking table keys");
        let table = db.table(&entry.table).unwrap();
        let fk_cols: Vec<usize> = f1
            .columns
            .iter()
            .chain(f2.columns.iter())
            .filter_map(|c| table.column_index(c))
            .collect();
        for (row_index, row) in table.rows.iter().enumerate() {
            let Some(src_ids) = resolver.resolve(db, table, row, f1) else {
                log.orphans.push(orphan(table, row_index, f1, row, db));
                continue;
            };
            let Some(dst_ids) = resolver.resolve(db, table, row, f2) else {
                log.orphans.push(orphan(table, row_index, f2, row, db));
                continue;
            };
            // edge properties: the row's columns excluding foreign keys
            let props: PropertyMap = table
                .columns
                .iter()
                .enumerate()
                .filter(|(i, _)| !fk_cols.contains(i))
                .map(|(i, c)| (c.name.clone(), row.values[i].clone()))
                .collect();
            for &src in &src_ids {
                for &dst in &dst_ids {
                    g.add_edge(table.name.clone(), src, dst, props.clone());
                    *log.edge_counts.entry(table.name.clone()).or_default() += 1;
                }
            }
        }
    }

    // entity tables with outbound keys -> HAS edges
    for entry in &cls.entries {
        if entry.kind != TableKind::Entity || entry.has_edges.is_empty() {
            continue;
        }
        let table = db.table(&entry.table).unwrap();
        let own_ids = &row_nodes[&table.name.to_ascii_lowercase()];
        for fk in &entry.has_edges {
            let Some(target_table) = db.table(&fk.referenced_table) else {
                log.orphans.push(OrphanIncident {
                    table: table.name.clone(),
                    row_index: 0,
                    fk: fk.describe(),
                    missing_values: Vec::new(),
                });
                continue;
            };
            let edge_type = format!("{}_HAS_{}", target_table.name, table.name);
            for (row_index, row) in table.rows.iter().enumerate() {
                let Some(targets) = resolver.resolve(db, table, row, fk) else {
                    log.orphans.push(orphan(table, row_index, fk, row, db));
                    continue;
                };
                for &target in &targets {
                    g.add_edge(edge_type.clone(), target, own_ids[row_index], PropertyMap::new());
                    *log.edge_counts.entry(edge_type.clone()).or_default() += 1;
                }
            }
        }
    }

    Ok(log)
}

fn orphan(
    table: &Table,
    row_index: usize,
    fk: &ForeignKey,
    row: &crate::relational::Row,
    _db: &RelationalDatabase,
) -> OrphanIncident {
    let values = fk
        .columns
        .iter()
        .filter_map(|c| table.column_index(c).map(|i| row.values[i].clone()))
        .collect();
    OrphanIncident {
        table: table.name.clone(),
        row_index,
        fk: fk.describe(),
        missing_values: values,
    }
}

/// Maps (target table, referenced columns, key values) to node ids, scoped
/// to the nodes created in one build call. Matching widens numerics, so an
/// integer key value finds a float-keyed node.
struct EndpointResolver {
    // (table lowercase, columns lowercase joined, value keys) -> node ids
    index: HashMap<(String, String, Vec<ValueKey>), Vec<NodeId>>,
}

impl EndpointResolver {
    fn build(
        db: &RelationalDatabase,
        cls: &TableClassification,
        row_nodes: &HashMap<String, Vec<NodeId>>,
    ) -> EndpointResolver {
        // column sets actually referenced by some foreign key, per table
        let mut wanted: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
        let mut want = |fk: &ForeignKey| {
            if fk.referenced_columns.is_empty() {
                return;
            }
            let key = fk.referenced_table.to_ascii_lowercase();
            let cols: Vec<String> = fk
                .referenced_columns
                .iter()
                .map(|c| c.to_ascii_lowercase())
                .collect();
            let sets = wanted.entry(key).or_default();
            if !sets.contains(&cols) {
                sets.push(cols);
            }
        };
        for entry in &cls.entries {
            if let Some((f1, f2)) = &entry.linking_fks {
                want(f1);
                want(f2);
            }
            for fk in &entry.has_edges {
                want(fk);
            }
        }

        let mut index: HashMap<(String, String, Vec<ValueKey>), Vec<NodeId>> = HashMap::new();
        for (table_key, col_sets) in &wanted {
            let Some(table) = db.table(table_key) else {
                continue;
            };
            let Some(ids) = row_nodes.get(table_key) else {
                continue; // referenced table is a linking table: rows are edges
            };
            for cols in col_sets {
                let Some(slots) = cols
                    .iter()
                    .map(|c| table.column_index(c))
                    .collect::<Option<Vec<_>>>()
                else {
                    continue;
                };
                for (row, &node_id) in table.rows.iter().zip(ids) {
                    if row.values.iter().len() < slots.len() {
                        continue;
                    }
                    let keys: Vec<ValueKey> =
                        slots.iter().map(|&i| row.values[i].canonical()).collect();
                    index
                        .entry((table_key.clone(), cols.join(","), keys))
                        .or_default()
                        .push(node_id);
                }
            }
        }
        EndpointResolver { index }
    }

    /// Node ids the key values of `row` resolve to, or None when any value
    /// is null or no target matches.
    fn resolve(
        &self,
        _db: &RelationalDatabase,
        table: &Table,
        row: &crate::relational::Row,
        fk: &ForeignKey,
    ) -> Option<Vec<NodeId>> {
        if fk.referenced_columns.is_empty() || fk.columns.len() != fk.referenced_columns.len() {
            return None;
        }
        let mut keys = Vec::with_capacity(fk.columns.len());
        for col in &fk.columns {
            let idx = table.column_index(col)?;
            let v = &row.values[idx];
            if v.is_null() {
                return None;
            }
            keys.push(v.canonical());
        }
        let cols: Vec<String> = fk
            .referenced_columns
            .iter()
            .map(|c| c.to_ascii_lowercase())
            .collect();
        self.index
            .get(&(
                fk.referenced_table.to_ascii_lowercase(),
                cols.join(","),
                keys,
            ))
            .cloned()
    }
}
