//! Data repair ahead of graph construction: missing primary keys, missing
//! or incorrect foreign keys, duplicate rows, empty tables, and label
//! namespace collisions.
//!
//! The passes run in a fixed order — foreign-key inference and retargeting,
//! then primary-key inference, then content normalization, then
//! namespacing — so that key inference sees final foreign keys and logs
//! read in source table names. Every change is recorded in a [`RepairLog`].

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::relational::{ForeignKey, KeyOrigin, RelationalDatabase, Row};
use crate::sql::{self, Expr, Operand, SelectStmt};
use crate::value::{Value, ValueKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairKind {
    PkInferred,
    FkInferred,
    FkRetargeted,
    RowsDeduped,
    EmptyTableFilled,
    TableRenamed,
}

#[derive(Debug, Clone, Serialize)]
pub struct RepairAction {
    pub kind: RepairKind,
    pub table: String,
    pub detail: String,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RepairLog {
    pub actions: Vec<RepairAction>,
}

impl RepairLog {
    pub fn push(&mut self, action: RepairAction) {
        self.actions.push(action);
    }

    pub fn merge(&mut self, other: RepairLog) {
        self.actions.extend(other.actions);
    }

    pub fn count(&self, kind: RepairKind) -> usize {
        self.actions.iter().filter(|a| a.kind == kind).count()
    }

    /// Tables that lost duplicate rows; evaluation uses this to tag
    /// dedup-caused result divergences.
    pub fn deduped_tables(&self) -> BTreeSet<String> {
        self.actions
            .iter()
            .filter(|a| a.kind == RepairKind::RowsDeduped)
            .map(|a| a.table.clone())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("repair log serializes")
    }
}

impl fmt::Display for RepairLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.actions {
            writeln!(
                f,
                "{:?} {}: {} ({} -> {})",
                a.kind, a.table, a.detail, a.before, a.after
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
#[error("invalid domain name `{domain}`: {reason}")]
pub struct InvalidDomainName {
    pub domain: String,
    pub reason: String,
}

// ───────────────────────── primary-key inference ─────────────────────────

/// Designate a primary key for each key-less table: the column set that
/// other tables' foreign keys already reference into it. Tables with no
/// candidate stay key-less, logged as a no-op.
pub fn infer_primary_keys(mut db: RelationalDatabase) -> (RelationalDatabase, RepairLog) {
    let mut log = RepairLog::default();
    let names: Vec<String> = db.tables.iter().map(|t| t.name.clone()).collect();
    for name in names {
        let table = db.table(&name).unwrap();
        if !table.primary_key.is_empty() {
            continue;
        }
        // candidate column sets: referenced_columns of inbound FKs from other tables
        let mut candidates: Vec<(Vec<String>, usize)> = Vec::new();
        for other in &db.tables {
            if other.name.eq_ignore_ascii_case(&name) {
                continue;
            }
            for fk in &other.foreign_keys {
                if !fk.referenced_table.eq_ignore_ascii_case(&name) || fk.referenced_columns.is_empty()
                {
                    continue;
                }
                let all_exist = fk
                    .referenced_columns
                    .iter()
                    .all(|c| table.column(c).is_some());
                if !all_exist {
                    continue;
                }
                let cols: Vec<String> = fk
                    .referenced_columns
                    .iter()
                    .map(|c| table.column(c).unwrap().name.clone())
                    .collect();
                match candidates.iter_mut().find(|(c, _)| {
                    c.len() == cols.len()
                        && c.iter().zip(&cols).all(|(a, b)| a.eq_ignore_ascii_case(b))
                }) {
                    Some((_, n)) => *n += 1,
                    None => candidates.push((cols, 1)),
                }
            }
        }
        if candidates.is_empty() {
            log.push(RepairAction {
                kind: RepairKind::PkInferred,
                table: name.clone(),
                detail: "no referenced column candidate; left without a primary key".into(),
                before: "[]".into(),
                after: "[]".into(),
            });
            continue;
        }
        // most-referenced candidate wins; ties resolve to the earliest found
        candidates.sort_by_key(|(_, n)| std::cmp::Reverse(*n));
        let chosen = candidates[0].0.clone();
        let table = db.table_mut(&name).unwrap();
        table.primary_key = chosen.clone();
        log.push(RepairAction {
            kind: RepairKind::PkInferred,
            table: name,
            detail: "designated columns already functioning as foreign-key targets".into(),
            before: "[]".into(),
            after: format!("[{}]", chosen.join(", ")),
        });
    }
    (db, log)
}

// ───────────────────────── foreign-key inference ─────────────────────────

/// Mine `JOIN ... ON a.x = b.y` equalities from the workload queries and add
/// missing foreign keys; retarget self-referencing keys whose column name
/// matches another table's single-column primary key.
pub fn infer_foreign_keys(
    mut db: RelationalDatabase,
    workload: &[String],
) -> (RelationalDatabase, RepairLog) {
    let mut log = RepairLog::default();
    retarget_self_references(&mut db, &mut log);

    for query in workload {
        let stmt = match sql::parse_sql(query) {
            Ok(s) => s,
            Err(e) => {
                log.push(RepairAction {
                    kind: RepairKind::FkInferred,
                    table: String::new(),
                    detail: format!("skipped unparseable workload query: {e}"),
                    before: query.chars().take(60).collect(),
                    after: String::new(),
                });
                continue;
            }
        };
        let mut pairs = Vec::new();
        collect_join_pairs(&stmt, &mut pairs);
        for (left, right) in pairs {
            infer_one(&mut db, &mut log, &left, &right);
        }
    }
    (db, log)
}

/// A join operand resolved to (table name, column name), SQL spelling.
#[derive(Debug, Clone)]
struct JoinSide {
    table: String,
    column: String,
}

fn collect_join_pairs(stmt: &SelectStmt, out: &mut Vec<(JoinSide, JoinSide)>) {
    let resolve = |q: &str| -> Option<String> {
        stmt.from
            .items()
            .find(|t| t.binding_name().eq_ignore_ascii_case(q))
            .map(|t| t.table.clone())
    };
    for join in &stmt.from.joins {
        collect_on_pairs(&join.on, &resolve, out);
    }
    let mut walk_expr = |e: &Expr| walk_subselects(e, out);
    if let Some(w) = &stmt.where_clause {
        walk_expr(w);
    }
    if let Some(h) = &stmt.having {
        walk_expr(h);
    }
    if let Some(u) = &stmt.union {
        collect_join_pairs(u, out);
    }
}

fn walk_subselects(e: &Expr, out: &mut Vec<(JoinSide, JoinSide)>) {
    match e {
        Expr::InSelect { select, .. } => collect_join_pairs(select, out),
        Expr::And(a, b) | Expr::Or(a, b) => {
            walk_subselects(a, out);
            walk_subselects(b, out);
        }
        Expr::Not(a) => walk_subselects(a, out),
        _ => {}
    }
}

fn collect_on_pairs(
    on: &Expr,
    resolve: &dyn Fn(&str) -> Option<String>,
    out: &mut Vec<(JoinSide, JoinSide)>,
) {
    match on {
        Expr::And(a, b) => {
            collect_on_pairs(a, resolve, out);
            collect_on_pairs(b, resolve, out);
        }
        Expr::Cmp {
            op: sql::CmpOp::Eq,
            lhs: Operand::Column(l),
            rhs: Operand::Column(r),
        } => {
            let (Some(lq), Some(rq)) = (&l.table, &r.table) else {
                return;
            };
            let (Some(lt), Some(rt)) = (resolve(lq), resolve(rq)) else {
                return;
            };
            if lt.eq_ignore_ascii_case(&rt) {
                return;
            }
            out.push((
                JoinSide {
                    table: lt,
                    column: l.column.clone(),
                },
                JoinSide {
                    table: rt,
                    column: r.column.clone(),
                },
            ));
        }
        _ => {}
    }
}

fn tables_linked(db: &RelationalDatabase, a: &str, b: &str) -> bool {
    let linked = |from: &str, to: &str| {
        db.table(from)
            .map(|t| {
                t.foreign_keys
                    .iter()
                    .any(|fk| fk.referenced_table.eq_ignore_ascii_case(to))
            })
            .unwrap_or(false)
    };
    linked(a, b) || linked(b, a)
}

fn column_is_single_pk(db: &RelationalDatabase, table: &str, column: &str) -> bool {
    db.table(table)
        .map(|t| t.primary_key.len() == 1 && t.primary_key[0].eq_ignore_ascii_case(column))
        .unwrap_or(false)
}

fn column_values_distinct(db: &RelationalDatabase, table: &str, column: &str) -> bool {
    let Some(t) = db.table(table) else {
        return false;
    };
    let Some(idx) = t.column_index(column) else {
        return false;
    };
    let mut seen: BTreeSet<ValueKey> = BTreeSet::new();
    t.rows
        .iter()
        .all(|r| seen.insert(r.values[idx].canonical()))
}

fn infer_one(db: &mut RelationalDatabase, log: &mut RepairLog, left: &JoinSide, right: &JoinSide) {
    if db.table(&left.table).is_none()
        || db.table(&right.table).is_none()
        || db.table(&left.table).unwrap().column(&left.column).is_none()
        || db
            .table(&right.table)
            .unwrap()
            .column(&right.column)
            .is_none()
    {
        return;
    }
    if tables_linked(db, &left.table, &right.table) {
        return;
    }
    // direction: the side whose joined column is its table's single-column
    // primary key is referenced; otherwise the side with distinct values;
    // tie goes to the right operand
    let left_pk = column_is_single_pk(db, &left.table, &left.column);
    let right_pk = column_is_single_pk(db, &right.table, &right.column);
    let mut ambiguous = false;
    let (owner, referenced) = if left_pk && !right_pk {
        (right, left)
    } else if right_pk && !left_pk {
        (left, right)
    } else if left_pk && right_pk {
        ambiguous = true;
        (left, right)
    } else {
        let left_distinct = column_values_distinct(db, &left.table, &left.column);
        let right_distinct = column_values_distinct(db, &right.table, &right.column);
        if left_distinct && !right_distinct {
            (right, left)
        } else if right_distinct && !left_distinct {
            (left, right)
        } else {
            ambiguous = true;
            (left, right)
        }
    };
    let owner_exact = db.table(&owner.table).unwrap();
    let owner_col = owner_exact.column(&owner.column).unwrap().name.clone();
    let owner_name = owner_exact.name.clone();
    let ref_exact = db.table(&referenced.table).unwrap();
    let ref_col = ref_exact.column(&referenced.column).unwrap().name.clone();
    let ref_name = ref_exact.name.clone();

    let fk = ForeignKey {
        columns: vec![owner_col],
        referenced_table: ref_name,
        referenced_columns: vec![ref_col],
        origin: KeyOrigin::Inferred,
    };
    let detail = if ambiguous {
        "implicit JOIN ON association; direction ambiguous, referenced the right operand"
    } else {
        "implicit JOIN ON association"
    };
    log.push(RepairAction {
        kind: RepairKind::FkInferred,
        table: owner_name.clone(),
        detail: detail.into(),
        before: "none".into(),
        after: fk.describe(),
    });
    db.table_mut(&owner_name).unwrap().foreign_keys.push(fk);
}

/// A key that references its own table on a differently named column, where
/// the key's column matches another table's single-column primary key, is
/// retargeted to that table.
fn retarget_self_references(db: &mut RelationalDatabase, log: &mut RepairLog) {
    let table_names: Vec<String> = db.tables.iter().map(|t| t.name.clone()).collect();
    for name in &table_names {
        let table = db.table(name).unwrap();
        let mut retargets: Vec<(usize, String, Vec<String>)> = Vec::new();
        for (i, fk) in table.foreign_keys.iter().enumerate() {
            if !fk.referenced_table.eq_ignore_ascii_case(name) {
                continue;
            }
            if fk.columns.len() != 1 || fk.referenced_columns.len() != 1 {
                continue;
            }
            if fk.columns[0].eq_ignore_ascii_case(&fk.referenced_columns[0]) {
                continue;
            }
            let target = db.tables.iter().find(|t| {
                !t.name.eq_ignore_ascii_case(name)
                    && t.primary_key.len() == 1
                    && t.primary_key[0].eq_ignore_ascii_case(&fk.columns[0])
            });
            if let Some(target) = target {
                retargets.push((i, target.name.clone(), target.primary_key.clone()));
            }
        }
        for (i, target_name, target_pk) in retargets {
            let table = db.table_mut(name).unwrap();
            let before = table.foreign_keys[i].describe();
            table.foreign_keys[i].referenced_table = target_name;
            table.foreign_keys[i].referenced_columns = target_pk;
            let after = table.foreign_keys[i].describe();
            log.push(RepairAction {
                kind: RepairKind::FkRetargeted,
                table: name.clone(),
                detail: "self-referencing key corrected to the table owning the matching primary key"
                    .into(),
                before,
                after,
            });
        }
    }
}

// ───────────────────────── content normalization ─────────────────────────

/// Collapse exact-duplicate rows and give empty tables one placeholder row
/// of nulls so migration does not collapse. Placeholder rows are flagged:
/// statistics see them, query execution does not.
pub fn normalize_content(mut db: RelationalDatabase) -> (RelationalDatabase, RepairLog) {
    let mut log = RepairLog::default();
    for table in &mut db.tables {
        let before = table.rows.len();
        let mut seen: BTreeSet<Vec<ValueKey>> = BTreeSet::new();
        table.rows.retain(|r| seen.insert(exact_key(r)));
        let removed = before - table.rows.len();
        if removed > 0 {
            log.push(RepairAction {
                kind: RepairKind::RowsDeduped,
                table: table.name.clone(),
                detail: format!("{removed} duplicate row(s) eliminated"),
                before: before.to_string(),
                after: table.rows.len().to_string(),
            });
        }
        if table.rows.is_empty() && !table.columns.is_empty() {
            table.rows.push(Row {
                values: vec![Value::Null; table.columns.len()],
                placeholder: true,
            });
            log.push(RepairAction {
                kind: RepairKind::EmptyTableFilled,
                table: table.name.clone(),
                detail: "assigned one placeholder row of empty values".into(),
                before: "0".into(),
                after: "1".into(),
            });
        }
    }
    (db, log)
}

/// Exact structural key: unlike widened comparison, Int(1) and Float(1.0)
/// stay distinct so dedup never merges rows that differ in kind.
fn exact_key(row: &Row) -> Vec<ValueKey> {
    row.values
        .iter()
        .map(|v| match v {
            Value::Float(f) => ValueKey::Float(f.to_bits()),
            other => other.canonical(),
        })
        .chain(std::iter::once(ValueKey::Int(row.placeholder as i64)))
        .collect()
}

// ───────────────────────── namespacing ─────────────────────────

/// Rename every table to `<domain>.<name>` and rewrite foreign-key targets,
/// so same-named tables from different databases keep distinct graph labels.
pub fn namespace_schema(
    mut db: RelationalDatabase,
    domain: &str,
) -> Result<(RelationalDatabase, RepairLog), InvalidDomainName> {
    if domain.is_empty() {
        return Err(InvalidDomainName {
            domain: domain.into(),
            reason: "must be non-empty".into(),
        });
    }
    if domain.contains('.') {
        return Err(InvalidDomainName {
            domain: domain.into(),
            reason: "must not contain `.`".into(),
        });
    }
    let mut log = RepairLog::default();
    for table in &mut db.tables {
        let before = table.name.clone();
        table.name = format!("{domain}.{before}");
        log.push(RepairAction {
            kind: RepairKind::TableRenamed,
            table: before.clone(),
            detail: "namespaced to avoid graph label collisions".into(),
            before,
            after: table.name.clone(),
        });
    }
    for table in &mut db.tables {
        for fk in &mut table.foreign_keys {
            if !fk.referenced_table.starts_with(&format!("{domain}.")) {
                fk.referenced_table = format!("{domain}.{}", fk.referenced_table);
            }
        }
    }
    Ok((db, log))
}
