//! Relational schema and data model: tables, rows, key constraints, and the
//! entity/linking classification driven by primary- and foreign-key shape.
//!
//! A table is an *entity table* when it has no foreign keys, when its
//! foreign-key count differs from two, or when it has exactly two foreign
//! keys together with a single-column primary key. It is a *linking table*
//! when it has exactly two foreign keys and its primary key is absent or
//! spans more than one column. The two predicates partition all tables.
//!
//! `len(fk)` counts foreign-key constraints (a composite constraint counts
//! once); `len(pk)` counts primary-key columns. A table with two foreign
//! keys, a single-column primary key, and that key also serving as one of
//! the foreign-key columns is still classified as an entity table: the
//! single-column-key condition is applied literally.

mod dump;
mod manifest;

pub use dump::{load_sql_dump, DumpLoad, DumpSyntaxError, DumpWarning};
pub use manifest::{
    apply_manifest, load_csv_bundle, BundleError, ManifestMismatch, SchemaManifest,
};

use serde::{Deserialize, Serialize};

use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationalDatabase {
    pub name: String,
    pub tables: Vec<Table>,
}

impl RelationalDatabase {
    pub fn new(name: impl Into<String>) -> Self {
        RelationalDatabase {
            name: name.into(),
            tables: Vec::new(),
        }
    }

    /// Case-insensitive table lookup.
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables
            .iter()
            .find(|t| t.name.eq_ignore_ascii_case(name))
    }

    pub fn table_mut(&mut self, name: &str) -> Option<&mut Table> {
        self.tables
            .iter_mut()
            .find(|t| t.name.eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
    /// Ordered primary-key column names; empty when the table has no key.
    pub primary_key: Vec<String>,
    pub foreign_keys: Vec<ForeignKey>,
}

impl Table {
    pub fn new(name: impl Into<String>) -> Self {
        Table {
            name: name.into(),
            columns: Vec::new(),
            rows: Vec::new(),
            primary_key: Vec::new(),
            foreign_keys: Vec::new(),
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns
            .iter()
            .position(|c| c.name.eq_ignore_ascii_case(name))
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.column_index(name).map(|i| &self.columns[i])
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    /// Values of `row` at the named columns, in the given column order.
    pub fn row_values<'a>(&self, row: &'a Row, cols: &[String]) -> Option<Vec<&'a Value>> {
        cols.iter()
            .map(|c| self.column_index(c).map(|i| &row.values[i]))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub type_tag: TypeTag,
}

impl Column {
    pub fn new(name: impl Into<String>, type_tag: TypeTag) -> Self {
        Column {
            name: name.into(),
            type_tag,
        }
    }
}

/// Declared column type. Advisory only: execution works off runtime
/// [`Value`] kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeTag {
    Int,
    Real,
    Text,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub values: Vec<Value>,
    /// Set on rows synthesized to keep an empty table from collapsing during
    /// migration. Placeholder rows are visible to statistics but invisible to
    /// query execution.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub placeholder: bool,
}

impl Row {
    pub fn new(values: Vec<Value>) -> Self {
        Row {
            values,
            placeholder: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForeignKey {
    pub columns: Vec<String>,
    pub referenced_table: String,
    pub referenced_columns: Vec<String>,
    pub origin: KeyOrigin,
}

impl ForeignKey {
    /// Human-readable `cols -> table(cols)` form for logs.
    pub fn describe(&self) -> String {
        format!(
            "({}) -> {}({})",
            self.columns.join(", "),
            self.referenced_table,
            self.referenced_columns.join(", ")
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyOrigin {
    Declared,
    Manifest,
    Inferred,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableKind {
    Entity,
    Linking,
}

/// Classification of every table in a database, in table order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableClassification {
    pub entries: Vec<ClassifiedTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifiedTable {
    pub table: String,
    pub kind: TableKind,
    /// For linking tables: the two foreign keys, in declaration order.
    pub linking_fks: Option<(ForeignKey, ForeignKey)>,
    /// For entity tables with foreign keys: the outbound keys realized as
    /// `<Referenced>_HAS_<Owner>` edges.
    pub has_edges: Vec<ForeignKey>,
}

impl TableClassification {
    pub fn get(&self, table: &str) -> Option<&ClassifiedTable> {
        self.entries
            .iter()
            .find(|e| e.table.eq_ignore_ascii_case(table))
    }

    pub fn kind(&self, table: &str) -> Option<TableKind> {
        self.get(table).map(|e| e.kind)
    }
}

/// Classify every table as entity or linking from its key-constraint shape.
///
/// Deterministic and re-runnable: depends only on the database's key
/// metadata, never on row contents.
pub fn classify_tables(db: &RelationalDatabase) -> TableClassification {
    let entries = db
        .tables
        .iter()
        .map(|t| {
            let nfk = t.foreign_keys.len();
            let npk = t.primary_key.len();
            if nfk == 2 && npk != 1 {
                ClassifiedTable {
                    table: t.name.clone(),
                    kind: TableKind::Linking,
                    linking_fks: Some((t.foreign_keys[0].clone(), t.foreign_keys[1].clone())),
                    has_edges: Vec::new(),
                }
            } else {
                ClassifiedTable {
                    table: t.name.clone(),
                    kind: TableKind::Entity,
                    linking_fks: None,
                    has_edges: t.foreign_keys.clone(),
                }
            }
        })
        .collect();
    TableClassification { entries }
}
