//! Schema-override manifests and CSV bundle ingestion.
//!
//! The manifest is a JSON document shape-compatible with the benchmark
//! `tables.json` files: table names, `(table index, column name)` pairs,
//! primary keys as column indices (an entry may be a list for a composite
//! key), and foreign keys as `[child column index, parent column index]`
//! pairs. Both the `tables`/`column_names` spellings and the
//! `*_names_original` spellings are accepted.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use super::{Column, ForeignKey, KeyOrigin, RelationalDatabase, Row, Table, TypeTag};
use crate::value::Value;

#[derive(Debug, Error)]
#[error("manifest does not match the database: {detail}")]
pub struct ManifestMismatch {
    pub detail: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SchemaManifest {
    #[serde(default)]
    pub db_id: Option<String>,
    #[serde(alias = "table_names_original")]
    pub tables: Vec<String>,
    #[serde(alias = "column_names_original")]
    pub column_names: Vec<(i64, String)>,
    #[serde(default)]
    pub primary_keys: Vec<PkEntry>,
    #[serde(default)]
    pub foreign_keys: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PkEntry {
    Single(usize),
    Composite(Vec<usize>),
}

impl SchemaManifest {
    pub fn from_json(text: &str) -> Result<SchemaManifest, ManifestMismatch> {
        serde_json::from_str(text).map_err(|e| ManifestMismatch {
            detail: format!("invalid manifest JSON: {e}"),
        })
    }

    /// (table name, column name) for a global column index, skipping the
    /// conventional `(-1, "*")` entry.
    fn column(&self, idx: usize) -> Result<(&str, &str), ManifestMismatch> {
        let (t, c) = self.column_names.get(idx).ok_or_else(|| ManifestMismatch {
            detail: format!("column index {idx} out of range"),
        })?;
        if *t < 0 {
            return Err(ManifestMismatch {
                detail: format!("column index {idx} does not belong to a table"),
            });
        }
        let table = self
            .tables
            .get(*t as usize)
            .ok_or_else(|| ManifestMismatch {
                detail: format!("table index {t} out of range"),
            })?;
        Ok((table.as_str(), c.as_str()))
    }
}

/// Merge manifest keys into `db`. Declared keys are kept; on conflict the
/// manifest wins. Every table and column named by the manifest must exist.
pub fn apply_manifest(
    mut db: RelationalDatabase,
    manifest: &SchemaManifest,
) -> Result<RelationalDatabase, ManifestMismatch> {
    // validate all referenced names up front
    for name in &manifest.tables {
        if db.table(name).is_none() {
            return Err(ManifestMismatch {
                detail: format!("table `{name}` not present in the database"),
            });
        }
    }
    for (t, c) in &manifest.column_names {
        if *t < 0 {
            continue;
        }
        let table = &manifest.tables[*t as usize];
        let table = db.table(table).unwrap();
        if table.column(c).is_none() {
            return Err(ManifestMismatch {
                detail: format!("column `{}`.`{}` not present in the database", table.name, c),
            });
        }
    }

    // primary keys: group entries by table; the manifest overrides
    let mut pk_cols: Vec<(String, Vec<String>)> = Vec::new();
    let add_pk = |manifest: &SchemaManifest,
                      pk_cols: &mut Vec<(String, Vec<String>)>,
                      idx: usize|
     -> Result<(), ManifestMismatch> {
        let (table, col) = manifest.column(idx)?;
        match pk_cols.iter_mut().find(|(t, _)| t.eq_ignore_ascii_case(table)) {
            Some((_, cols)) => cols.push(col.to_string()),
            None => pk_cols.push((table.to_string(), vec![col.to_string()])),
        }
        Ok(())
    };
    for entry in &manifest.primary_keys {
        match entry {
            PkEntry::Single(i) => add_pk(manifest, &mut pk_cols, *i)?,
            PkEntry::Composite(list) => {
                for i in list {
                    add_pk(manifest, &mut pk_cols, *i)?;
                }
            }
        }
    }
    for (table, cols) in pk_cols {
        let t = db.table_mut(&table).unwrap();
        t.primary_key = cols;
    }

    // foreign keys
    for (child_idx, parent_idx) in &manifest.foreign_keys {
        let (child_table, child_col) = manifest.column(*child_idx)?;
        let (parent_table, parent_col) = manifest.column(*parent_idx)?;
        let (child_table, child_col, parent_table, parent_col) = (
            child_table.to_string(),
            child_col.to_string(),
            parent_table.to_string(),
            parent_col.to_string(),
        );
        let t = db.table_mut(&child_table).unwrap();
        let same_cols = |fk: &ForeignKey| {
            fk.columns.len() == 1 && fk.columns[0].eq_ignore_ascii_case(&child_col)
        };
        if let Some(existing) = t.foreign_keys.iter_mut().find(|fk| same_cols(fk)) {
            let same_target = existing.referenced_table.eq_ignore_ascii_case(&parent_table)
                && existing.referenced_columns.len() == 1
                && existing.referenced_columns[0].eq_ignore_ascii_case(&parent_col);
            if !same_target {
                // conflicting declaration: the manifest wins
                existing.referenced_table = parent_table;
                existing.referenced_columns = vec![parent_col];
                existing.origin = KeyOrigin::Manifest;
            }
        } else {
            t.foreign_keys.push(ForeignKey {
                columns: vec![child_col],
                referenced_table: parent_table,
                referenced_columns: vec![parent_col],
                origin: KeyOrigin::Manifest,
            });
        }
    }
    Ok(db)
}

// ───────────────────────── CSV bundle ─────────────────────────

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Manifest(#[from] ManifestMismatch),
    #[error("csv error in `{path}`: {detail}")]
    Csv { path: String, detail: String },
}

/// Load a directory of `<table>.csv` files plus one `manifest.json`. The
/// header row of each CSV gives the column names; the manifest supplies the
/// keys. Post-conditions match [`load_sql_dump`](super::load_sql_dump).
pub fn load_csv_bundle(dir: &Path) -> Result<RelationalDatabase, BundleError> {
    let manifest_path = dir.join("manifest.json");
    let manifest_text = fs::read_to_string(&manifest_path).map_err(|source| BundleError::Io {
        path: manifest_path.display().to_string(),
        source,
    })?;
    let manifest = SchemaManifest::from_json(&manifest_text)?;

    let mut db = RelationalDatabase::new(
        manifest
            .db_id
            .clone()
            .unwrap_or_else(|| dir.file_name().unwrap_or_default().to_string_lossy().into()),
    );
    for name in &manifest.tables {
        let path = dir.join(format!("{name}.csv"));
        let text = fs::read_to_string(&path).map_err(|source| BundleError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut records = parse_csv(&text).map_err(|detail| BundleError::Csv {
            path: path.display().to_string(),
            detail,
        })?;
        if records.is_empty() {
            return Err(BundleError::Csv {
                path: path.display().to_string(),
                detail: "missing header row".into(),
            });
        }
        let header = records.remove(0);
        let mut table = Table::new(name.clone());
        table.columns = header
            .into_iter()
            .map(|c| Column::new(c, TypeTag::Unknown))
            .collect();
        for (i, rec) in records.into_iter().enumerate() {
            if rec.len() != table.columns.len() {
                return Err(BundleError::Csv {
                    path: path.display().to_string(),
                    detail: format!("row {} has {} fields, expected {}", i + 2, rec.len(), table.columns.len()),
                });
            }
            table
                .rows
                .push(Row::new(rec.into_iter().map(csv_value).collect()));
        }
        db.tables.push(table);
    }
    Ok(apply_manifest(db, &manifest)?)
}

fn csv_value(field: String) -> Value {
    if field.is_empty() {
        Value::Null
    } else if let Ok(i) = field.parse::<i64>() {
        Value::Int(i)
    } else if let Ok(f) = field.parse::<f64>() {
        Value::Float(f)
    } else {
        Value::Text(field)
    }
}

/// Minimal RFC-4180-style reader: quoted fields, `""` escapes, embedded
/// commas and newlines.
fn parse_csv(text: &str) -> Result<Vec<Vec<String>>, String> {
    let mut rows = Vec::new();
    let mut row: Vec<String> = Vec::new();
    let mut field = String::new();
    let mut chars = text.chars().peekable();
    let mut in_quotes = false;
    let mut saw_any = false;
    while let Some(c) = chars.next() {
        saw_any = true;
        if in_quotes {
            match c {
                '"' => {
                    if chars.peek() == Some(&'"') {
                        chars.next();
                        field.push('"');
                    } else {
                        in_quotes = false;
                    }
                }
                _ => field.push(c),
            }
        } else {
            match c {
                '"' if field.is_empty() => in_quotes = true,
                ',' => {
                    row.push(std::mem::take(&mut field));
                }
                '\r' => {}
                '\n' => {
                    row.push(std::mem::take(&mut field));
                    rows.push(std::mem::take(&mut row));
                }
                _ => field.push(c),
            }
        }
    }
    if in_quotes {
        return Err("unterminated quoted field".into());
    }
    if saw_any && (!field.is_empty() || !row.is_empty()) {
        row.push(field);
        rows.push(row);
    }
    Ok(rows)
}
