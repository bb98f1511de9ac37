//! End-to-end migration pipeline: repairs in fixed order, classification,
//! graph construction, and the schema binding used to normalize workload
//! queries.
//!
//! Repair order is fixed: foreign-key inference and retargeting, then
//! primary-key inference, then content normalization, then namespacing.
//! Key inference needs the final foreign keys, and namespacing runs last so
//! repair logs read in source table names.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::construct::{build_graph, BuildLog, ClassificationMismatch};
use crate::graph::PropertyGraph;
use crate::relational::{classify_tables, RelationalDatabase, TableClassification};
use crate::repair::{
    infer_foreign_keys, infer_primary_keys, namespace_schema, normalize_content,
    InvalidDomainName, RepairLog,
};
use crate::sql::SchemaBinding;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Domain(#[from] InvalidDomainName),
    #[error(transparent)]
    Build(#[from] ClassificationMismatch),
}

#[derive(Debug, Clone)]
pub struct MigrateOptions {
    /// Namespace tables as `<domain>.<table>` when set.
    pub domain: Option<String>,
    pub infer_fks: bool,
    pub infer_pks: bool,
    pub normalize: bool,
    /// Workload SQL used for JOIN ON foreign-key mining.
    pub workload_texts: Vec<String>,
}

impl Default for MigrateOptions {
    fn default() -> Self {
        MigrateOptions {
            domain: None,
            infer_fks: true,
            infer_pks: true,
            normalize: true,
            workload_texts: Vec::new(),
        }
    }
}

/// A database prepared for differential execution: the namespaced original
/// for the relational side, and the repaired copy the graph was built from.
#[derive(Debug)]
pub struct PreparedDb {
    pub db_id: String,
    /// Namespaced but otherwise unrepaired: queries run against the data as
    /// loaded, mirroring a source-vs-migrated comparison.
    pub original: RelationalDatabase,
    pub repaired: RelationalDatabase,
    pub classification: TableClassification,
    pub graph: PropertyGraph,
    pub binding: SchemaBinding,
    pub repair_log: RepairLog,
    pub build_log: BuildLog,
    /// Post-namespacing names of tables that lost duplicate rows.
    pub deduped_tables: BTreeSet<String>,
    /// Labels shared with other databases in a merged graph; empty for
    /// per-database graphs.
    pub collision_labels: BTreeSet<String>,
}

/// Run the repair passes in their fixed order.
pub fn run_repairs(
    db: RelationalDatabase,
    opts: &MigrateOptions,
) -> Result<(RelationalDatabase, RepairLog), InvalidDomainName> {
    let mut log = RepairLog::default();
    let mut db = db;
    if opts.infer_fks {
        let (next, l) = infer_foreign_keys(db, &opts.workload_texts);
        db = next;
        log.merge(l);
    }
    if opts.infer_pks {
        let (next, l) = infer_primary_keys(db);
        db = next;
        log.merge(l);
    }
    if opts.normalize {
        let (next, l) = normalize_content(db);
        db = next;
        log.merge(l);
    }
    if let Some(domain) = &opts.domain {
        let (next, l) = namespace_schema(db, domain)?;
        db = next;
        log.merge(l);
    }
    Ok((db, log))
}

/// Prepare one database end to end.
pub fn prepare(db: RelationalDatabase, opts: &MigrateOptions) -> Result<PreparedDb, PipelineError> {
    let db_id = db.name.clone();
    let mut original = db.clone();
    if let Some(domain) = &opts.domain {
        let (ns, _) = namespace_schema(original, domain)?;
        original = ns;
    }
    let (repaired, repair_log) = run_repairs(db, opts)?;
    let classification = classify_tables(&repaired);
    let (graph, build_log) = build_graph(&repaired, &classification)?;
    let binding = SchemaBinding::from_database(&repaired);
    let deduped_tables = repair_log
        .deduped_tables()
        .into_iter()
        .map(|t| match &opts.domain {
            Some(d) => format!("{d}.{t}"),
            None => t,
        })
        .collect();
    Ok(PreparedDb {
        db_id,
        original,
        repaired,
        classification,
        graph,
        binding,
        repair_log,
        build_log,
        deduped_tables,
        collision_labels: BTreeSet::new(),
    })
}


// ───────────────────────── filesystem loading ─────────────────────────

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Dump(#[from] crate::relational::DumpSyntaxError),
    #[error(transparent)]
    Manifest(#[from] crate::relational::ManifestMismatch),
    #[error(transparent)]
    Bundle(#[from] crate::relational::BundleError),
}

#[derive(Debug)]
pub struct LoadedDb {
    pub db: RelationalDatabase,
    pub warnings: Vec<String>,
}

/// Load a database from a path: a `.sql` dump file, a directory holding
/// `schema.sql` (plus optional `manifest.json`), or a CSV bundle directory
/// with one `<table>.csv` per table and a `manifest.json`. The database
/// name comes from the file stem or directory name.
pub fn load_database(path: &std::path::Path) -> Result<LoadedDb, LoadError> {
    use crate::relational::{apply_manifest, load_csv_bundle, load_sql_dump, SchemaManifest};
    let read = |p: &std::path::Path| {
        std::fs::read_to_string(p).map_err(|source| LoadError::Io {
            path: p.display().to_string(),
            source,
        })
    };
    let name_of = |p: &std::path::Path| {
        p.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    };
    if path.is_dir() {
        let schema = path.join("schema.sql");
        if schema.is_file() {
            let load = load_sql_dump(&read(&schema)?)?;
            let mut db = load.db;
            db.name = name_of(path);
            let manifest_path = path.join("manifest.json");
            if manifest_path.is_file() {
                let manifest = SchemaManifest::from_json(&read(&manifest_path)?)?;
                db = apply_manifest(db, &manifest)?;
            }
            Ok(LoadedDb {
                db,
                warnings: load
                    .warnings
                    .into_iter()
                    .map(|w| format!("offset {}: {}", w.offset, w.message))
                    .collect(),
            })
        } else {
            let mut db = load_csv_bundle(path)?;
            if db.name.is_empty() {
                db.name = name_of(path);
            }
            Ok(LoadedDb {
                db,
                warnings: Vec::new(),
            })
        }
    } else {
        let load = load_sql_dump(&read(path)?)?;
        let mut db = load.db;
        db.name = name_of(path);
        Ok(LoadedDb {
            db,
            warnings: load
                .warnings
                .into_iter()
                .map(|w| format!("offset {}: {}", w.offset, w.message))
                .collect(),
        })
    }
}
