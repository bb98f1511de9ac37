//! Differential evaluation: per-query outcomes, the execution-accuracy and
//! valid-score metrics, and the consistency check-and-repair loop.
//!
//! Execution accuracy is the fraction of parsed queries whose graph-side
//! results equal their relational-side results; valid score divides the
//! same matches by parsed plus unparsed queries, so parser failures count
//! against it. The check loop compares statistics expected from the
//! relational side with the actual graph statistics and rebuilds the graph
//! until the difference is empty.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::construct::build_graph;
use crate::exec::{compare_results, exec_cypher, exec_sql, ResultSet};
use crate::graph::{graph_stats, GraphStats, PropertyGraph};
use crate::pipeline::{run_repairs, MigrateOptions, PipelineError, PreparedDb};
use crate::relational::{
    classify_tables, RelationalDatabase, TableClassification, TableKind, TypeTag,
};
use crate::sql::{self, SelectStmt};
use crate::value::ValueKey;
use crate::workload::Workload;
use crate::cypher;

#[derive(Debug, Error)]
#[error("empty workload: no executed queries to score")]
pub struct EmptyWorkload;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Ok,
    Failed { offset: usize, message: String },
}

/// Known divergence classes: tagged rather than counted as plain
/// mismatches, unless strict mode is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceTag {
    /// Duplicate source rows were eliminated during migration.
    DedupDiscrepancy,
    /// Same-named labels from different databases share a merged graph.
    LabelCollision,
    /// Grouping on a text column relies on engine-implicit ordering.
    GroupByTextOrdering,
}

#[derive(Debug, Clone, Serialize)]
pub struct QueryOutcome {
    pub db_id: String,
    pub sql: String,
    pub parse: ParseStatus,
    pub cypher: Option<String>,
    /// Normalization, translation, or execution failure.
    pub failure: Option<String>,
    pub r_sql: Option<ResultSet>,
    pub r_cyp: Option<ResultSet>,
    /// Defined only when both executions succeeded.
    pub matched: Option<bool>,
    pub divergence: Option<DivergenceTag>,
}

impl QueryOutcome {
    pub fn parsed(&self) -> bool {
        matches!(self.parse, ParseStatus::Ok)
    }

    pub fn is_match(&self) -> bool {
        self.matched == Some(true)
    }
}

/// Execution accuracy over parsed-and-executed queries.
pub fn execution_accuracy(outcomes: &[QueryOutcome]) -> Result<f64, EmptyWorkload> {
    let n = outcomes.iter().filter(|o| o.parsed()).count();
    if n == 0 {
        return Err(EmptyWorkload);
    }
    let matches = outcomes.iter().filter(|o| o.is_match()).count();
    Ok(matches as f64 / n as f64)
}

/// Valid score: matches over parsed plus unparsed queries.
pub fn valid_score(outcomes: &[QueryOutcome], n_parse_failures: usize) -> f64 {
    let n = outcomes.iter().filter(|o| o.parsed()).count();
    let denom = n + n_parse_failures;
    if denom == 0 {
        return 0.0;
    }
    let matches = outcomes.iter().filter(|o| o.is_match()).count();
    matches as f64 / denom as f64
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct DbBreakdown {
    pub executed: usize,
    pub parse_failures: usize,
    pub matches: usize,
}

#[derive(Debug, Serialize)]
pub struct MetricsReport {
    pub total: usize,
    /// N: parsed-and-executed queries.
    pub executed: usize,
    /// N(F_sql): queries the parser rejected.
    pub parse_failures: usize,
    pub matches: usize,
    pub ea: f64,
    pub vs: f64,
    pub per_db: BTreeMap<String, DbBreakdown>,
    pub known_divergences: usize,
    pub outcomes: Vec<QueryOutcome>,
}

impl MetricsReport {
    pub fn from_outcomes(outcomes: Vec<QueryOutcome>) -> Result<MetricsReport, EmptyWorkload> {
        let parse_failures = outcomes.iter().filter(|o| !o.parsed()).count();
        let executed = outcomes.len() - parse_failures;
        let matches = outcomes.iter().filter(|o| o.is_match()).count();
        let ea = execution_accuracy(&outcomes)?;
        let vs = valid_score(&outcomes, parse_failures);
        let mut per_db: BTreeMap<String, DbBreakdown> = BTreeMap::new();
        for o in &outcomes {
            let d = per_db.entry(o.db_id.clone()).or_default();
            if o.parsed() {
                d.executed += 1;
            } else {
                d.parse_failures += 1;
            }
            if o.is_match() {
                d.matches += 1;
            }
        }
        Ok(MetricsReport {
            total: outcomes.len(),
            executed,
            parse_failures,
            matches,
            ea,
            vs,
            per_db,
            known_divergences: outcomes.iter().filter(|o| o.divergence.is_some()).count(),
            outcomes,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Untagged mismatches: executed queries that neither matched nor carry
    /// a known-divergence tag.
    pub fn untagged_mismatches(&self) -> usize {
        self.outcomes
            .iter()
            .filter(|o| o.parsed() && o.matched != Some(true) && o.divergence.is_none())
            .count()
    }

    pub fn summary_table(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        writeln!(
            out,
            "queries: {}  executed: {}  parse-failures: {}  matches: {}",
            self.total, self.executed, self.parse_failures, self.matches
        )
        .unwrap();
        writeln!(out, "EA: {:.4}  VS: {:.4}", self.ea, self.vs).unwrap();
        for (db, d) in &self.per_db {
            let ea = if d.executed > 0 {
                d.matches as f64 / d.executed as f64
            } else {
                0.0
            };
            writeln!(
                out,
                "  {db}: executed {} matches {} parse-failures {} (EA {ea:.4})",
                d.executed, d.matches, d.parse_failures
            )
            .unwrap();
        }
        out
    }
}

// ───────────────────────── per-query evaluation ─────────────────────────

/// Run one query through parse, normalize, translate, and both executors.
pub fn evaluate_query(prepared: &PreparedDb, sql_text: &str, strict: bool) -> QueryOutcome {
    let mut outcome = QueryOutcome {
        db_id: prepared.db_id.clone(),
        sql: sql_text.to_string(),
        parse: ParseStatus::Ok,
        cypher: None,
        failure: None,
        r_sql: None,
        r_cyp: None,
        matched: None,
        divergence: None,
    };
    let tree = match sql::parse_sql(sql_text) {
        Ok(t) => t,
        Err(e) => {
            outcome.parse = ParseStatus::Failed {
                offset: e.offset,
                message: e.to_string(),
            };
            return outcome;
        }
    };
    let tree = match sql::normalize_identifiers(&tree, &prepared.binding) {
        Ok(t) => t,
        Err(e) => {
            outcome.failure = Some(e.to_string());
            return outcome;
        }
    };
    let cq = match cypher::translate(&tree, &prepared.classification) {
        Ok(q) => q,
        Err(e) => {
            outcome.failure = Some(e.to_string());
            return outcome;
        }
    };
    outcome.cypher = Some(cypher::render_cypher(&cq));
    let r_sql = match exec_sql(&prepared.original, &tree) {
        Ok(r) => r,
        Err(e) => {
            outcome.failure = Some(e.to_string());
            return outcome;
        }
    };
    let r_cyp = match exec_cypher(&prepared.graph, &cq) {
        Ok(r) => r,
        Err(e) => {
            outcome.failure = Some(e.to_string());
            outcome.r_sql = Some(r_sql);
            return outcome;
        }
    };
    let matched = compare_results(&r_sql, &r_cyp);
    outcome.matched = Some(matched);
    if !matched && !strict {
        outcome.divergence = diagnose_divergence(prepared, &tree);
    }
    outcome.r_sql = Some(r_sql);
    outcome.r_cyp = Some(r_cyp);
    outcome
}

/// Attribute a mismatch to a known divergence class when the evidence
/// supports one.
fn diagnose_divergence(prepared: &PreparedDb, tree: &SelectStmt) -> Option<DivergenceTag> {
    let tables = referenced_tables(tree);
    if tables.iter().any(|t| prepared.deduped_tables.contains(t)) {
        return Some(DivergenceTag::DedupDiscrepancy);
    }
    if tables.iter().any(|t| prepared.collision_labels.contains(t)) {
        return Some(DivergenceTag::LabelCollision);
    }
    let groups_on_text = tree.group_by.iter().any(|c| {
        tables.iter().any(|t| {
            prepared
                .repaired
                .table(t)
                .and_then(|table| table.column(&c.column))
                .map(|col| col.type_tag == TypeTag::Text)
                .unwrap_or(false)
        })
    });
    if groups_on_text && !tree.order_by.is_empty() {
        return Some(DivergenceTag::GroupByTextOrdering);
    }
    None
}

fn referenced_tables(tree: &SelectStmt) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_tables(tree, &mut out);
    out
}

fn collect_tables(tree: &SelectStmt, out: &mut BTreeSet<String>) {
    for item in tree.from.items() {
        out.insert(item.table.clone());
    }
    let mut walk = |e: &sql::Expr| collect_expr_tables(e, out);
    if let Some(w) = &tree.where_clause {
        walk(w);
    }
    if let Some(h) = &tree.having {
        walk(h);
    }
    if let Some(u) = &tree.union {
        collect_tables(u, out);
    }
}

fn collect_expr_tables(e: &sql::Expr, out: &mut BTreeSet<String>) {
    match e {
        sql::Expr::InSelect { select, .. } => collect_tables(select, out),
        sql::Expr::And(a, b) | sql::Expr::Or(a, b) => {
            collect_expr_tables(a, out);
            collect_expr_tables(b, out);
        }
        sql::Expr::Not(a) => collect_expr_tables(a, out),
        _ => {}
    }
}

/// Evaluate a workload against prepared databases, optionally across a
/// worker pool.
pub fn run_workload(
    prepared: &BTreeMap<String, PreparedDb>,
    workload: &Workload,
    strict: bool,
    parallelism: usize,
) -> Result<MetricsReport, EmptyWorkload> {
    let fallback = |entry: &crate::workload::WorkloadEntry| QueryOutcome {
        db_id: entry.db_id.clone(),
        sql: entry.sql.clone(),
        parse: ParseStatus::Ok,
        cypher: None,
        failure: Some(format!("unknown database id `{}`", entry.db_id)),
        r_sql: None,
        r_cyp: None,
        matched: None,
        divergence: None,
    };
    let eval_one = |entry: &crate::workload::WorkloadEntry| match prepared.get(&entry.db_id) {
        Some(p) => evaluate_query(p, &entry.sql, strict),
        None => fallback(entry),
    };
    let outcomes: Vec<QueryOutcome> = if parallelism <= 1 || workload.entries.len() < 2 {
        workload.entries.iter().map(eval_one).collect()
    } else {
        let workers = parallelism.min(workload.entries.len());
        let mut slots: Vec<Option<QueryOutcome>> = Vec::new();
        slots.resize_with(workload.entries.len(), || None);
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slots_mutex = std::sync::Mutex::new(&mut slots);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= workload.entries.len() {
                        break;
                    }
                    let outcome = eval_one(&workload.entries[i]);
                    slots_mutex.lock().expect("slot lock")[i] = Some(outcome);
                });
            }
        });
        slots.into_iter().map(|s| s.expect("outcome filled")).collect()
    };
    MetricsReport::from_outcomes(outcomes)
}

// ───────────────────────── consistency checking ─────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsDiff {
    pub kind: String,
    pub name: String,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Serialize)]
pub struct ConsistencyReport {
    pub expected: GraphStats,
    pub actual: GraphStats,
    pub diffs: Vec<StatsDiff>,
    pub iterations: usize,
    pub converged: bool,
}

/// Statistics the graph is expected to exhibit, computed from the repaired
/// relational data alone: entity rows per label, resolvable linking and HAS
/// rows per type, and column sets as property keys.
pub fn expected_stats(db: &RelationalDatabase, cls: &TableClassification) -> GraphStats {
    let mut stats = GraphStats {
        node_count: 0,
        edge_count: 0,
        labels: BTreeMap::new(),
        types: BTreeMap::new(),
        label_property_keys: BTreeMap::new(),
        type_property_keys: BTreeMap::new(),
    };
    // value multiset per (table, referenced column list)
    let match_count = |table: &str, cols: &[String], keys: &[ValueKey]| -> u64 {
        let Some(t) = db.table(table) else { return 0 };
        if cls.kind(table) != Some(TableKind::Entity) {
            return 0;
        }
        let Some(slots) = cols
            .iter()
            .map(|c| t.column_index(c))
            .collect::<Option<Vec<_>>>()
        else {
            return 0;
        };
        t.rows
            .iter()
            .filter(|r| {
                slots
                    .iter()
                    .zip(keys)
                    .all(|(&s, k)| &r.values[s].canonical() == k)
            })
            .count() as u64
    };
    let fk_matches = |table: &crate::relational::Table,
                      row: &crate::relational::Row,
                      fkey: &crate::relational::ForeignKey|
     -> u64 {
        if fkey.columns.len() != fkey.referenced_columns.len() || fkey.referenced_columns.is_empty()
        {
            return 0;
        }
        let mut keys = Vec::new();
        for c in &fkey.columns {
            let Some(i) = table.column_index(c) else {
                return 0;
            };
            if row.values[i].is_null() {
                return 0;
            }
            keys.push(row.values[i].canonical());
        }
        match_count(&fkey.referenced_table, &fkey.referenced_columns, &keys)
    };

    for entry in &cls.entries {
        let table = db.table(&entry.table).expect("classified table exists");
        match entry.kind {
            TableKind::Entity => {
                let n = table.rows.len() as u64;
                stats.node_count += n;
                if n > 0 {
                    stats.labels.insert(table.name.clone(), n);
                    stats.label_property_keys.insert(
                        table.name.clone(),
                        table.column_names().map(str::to_string).collect(),
                    );
                }
                for fkey in &entry.has_edges {
                    let Some(target) = db.table(&fkey.referenced_table) else {
                        continue;
                    };
                    let ty = format!("{}_HAS_{}", target.name, table.name);
                    let n: u64 = table.rows.iter().map(|r| fk_matches(table, r, fkey)).sum();
                    stats.edge_count += n;
                    if n > 0 {
                        stats.types.insert(ty.clone(), n);
                        stats.type_property_keys.insert(ty, BTreeSet::new());
                    }
                }
            }
            TableKind::Linking => {
                let (f1, f2) = entry.linking_fks.as_ref().expect("linking keys");
                let n: u64 = table
                    .rows
                    .iter()
                    .map(|r| fk_matches(table, r, f1) * fk_matches(table, r, f2))
                    .sum();
                stats.edge_count += n;
                if n > 0 {
                    stats.types.insert(table.name.clone(), n);
                    let fk_cols: BTreeSet<String> = f1
                        .columns
                        .iter()
                        .chain(f2.columns.iter())
                        .map(|c| c.to_ascii_lowercase())
                        .collect();
                    let keys: BTreeSet<String> = table
                        .column_names()
                        .filter(|c| !fk_cols.contains(&c.to_ascii_lowercase()))
                        .map(str::to_string)
                        .collect();
                    stats.type_property_keys.insert(table.name.clone(), keys);
                }
            }
        }
    }
    stats
}

pub fn diff_stats(expected: &GraphStats, actual: &GraphStats) -> Vec<StatsDiff> {
    let mut diffs = Vec::new();
    let mut push = |kind: &str, name: &str, e: String, a: String| {
        diffs.push(StatsDiff {
            kind: kind.into(),
            name: name.into(),
            expected: e,
            actual: a,
        })
    };
    if expected.node_count != actual.node_count {
        push(
            "node_count",
            "",
            expected.node_count.to_string(),
            actual.node_count.to_string(),
        );
    }
    if expected.edge_count != actual.edge_count {
        push(
            "edge_count",
            "",
            expected.edge_count.to_string(),
            actual.edge_count.to_string(),
        );
    }
    let names: BTreeSet<&String> = expected.labels.keys().chain(actual.labels.keys()).collect();
    for name in names {
        let e = expected.labels.get(name).copied().unwrap_or(0);
        let a = actual.labels.get(name).copied().unwrap_or(0);
        if e != a {
            push("label_count", name, e.to_string(), a.to_string());
        }
    }
    let names: BTreeSet<&String> = expected.types.keys().chain(actual.types.keys()).collect();
    for name in names {
        let e = expected.types.get(name).copied().unwrap_or(0);
        let a = actual.types.get(name).copied().unwrap_or(0);
        if e != a {
            push("type_count", name, e.to_string(), a.to_string());
        }
    }
    let keysets = |m: &BTreeMap<String, BTreeSet<String>>, name: &String| -> BTreeSet<String> {
        m.get(name).cloned().unwrap_or_default()
    };
    let names: BTreeSet<String> = expected
        .label_property_keys
        .keys()
        .chain(actual.label_property_keys.keys())
        .cloned()
        .collect();
    for name in names {
        let e = keysets(&expected.label_property_keys, &name);
        let a = keysets(&actual.label_property_keys, &name);
        if e != a {
            push(
                "label_properties",
                &name,
                format!("{e:?}"),
                format!("{a:?}"),
            );
        }
    }
    let names: BTreeSet<String> = expected
        .type_property_keys
        .keys()
        .chain(actual.type_property_keys.keys())
        .cloned()
        .collect();
    for name in names {
        let e = keysets(&expected.type_property_keys, &name);
        let a = keysets(&actual.type_property_keys, &name);
        if e != a {
            push("type_properties", &name, format!("{e:?}"), format!("{a:?}"));
        }
    }
    diffs
}

/// Compare expected and actual statistics; on a difference, re-run repairs
/// and rebuild the graph, iterating until the diff is empty or the
/// iteration budget runs out.
pub fn check_and_repair(
    original: &RelationalDatabase,
    graph: PropertyGraph,
    opts: &MigrateOptions,
    max_iterations: usize,
) -> Result<(ConsistencyReport, PropertyGraph), PipelineError> {
    assert!(max_iterations >= 1, "max_iterations must be at least 1");
    let mut current = graph;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let (repaired, _) = run_repairs(original.clone(), opts)?;
        let cls = classify_tables(&repaired);
        let expected = expected_stats(&repaired, &cls);
        let actual = graph_stats(&current);
        let diffs = diff_stats(&expected, &actual);
        if diffs.is_empty() {
            return Ok((
                ConsistencyReport {
                    expected,
                    actual,
                    diffs,
                    iterations,
                    converged: true,
                },
                current,
            ));
        }
        if iterations >= max_iterations {
            return Ok((
                ConsistencyReport {
                    expected,
                    actual,
                    diffs,
                    iterations,
                    converged: false,
                },
                current,
            ));
        }
        let (rebuilt, _) = build_graph(&repaired, &cls)?;
        current = rebuilt;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(parsed: bool, matched: Option<bool>) -> QueryOutcome {
        QueryOutcome {
            db_id: "d".into(),
            sql: "q".into(),
            parse: if parsed {
                ParseStatus::Ok
            } else {
                ParseStatus::Failed {
                    offset: 0,
                    message: "bad".into(),
                }
            },
            cypher: None,
            failure: None,
            r_sql: None,
            r_cyp: None,
            matched,
            divergence: None,
        }
    }

    #[test]
    fn ea_arithmetic() {
        let outcomes = vec![outcome(true, Some(true)), outcome(true, Some(true))];
        assert_eq!(execution_accuracy(&outcomes).unwrap(), 1.0);
        let outcomes = vec![outcome(true, Some(true)), outcome(true, Some(false))];
        assert_eq!(execution_accuracy(&outcomes).unwrap(), 0.5);
        assert!(execution_accuracy(&[]).is_err());
        assert!(execution_accuracy(&[outcome(false, None)]).is_err());
    }

    #[test]
    fn vs_arithmetic() {
        let outcomes = vec![outcome(true, Some(true)), outcome(true, Some(true))];
        assert_eq!(valid_score(&outcomes, 0), 1.0);
        assert_eq!(valid_score(&outcomes, 1), 2.0 / 3.0);
        assert_eq!(valid_score(&[], 0), 0.0);
    }

    #[test]
    fn metrics_are_order_independent() {
        let a = vec![
            outcome(true, Some(true)),
            outcome(true, Some(false)),
            outcome(false, None),
        ];
        let mut b = a.clone();
        b.reverse();
        let ra = MetricsReport::from_outcomes(a).unwrap();
        let rb = MetricsReport::from_outcomes(b).unwrap();
        assert_eq!(ra.ea, rb.ea);
        assert_eq!(ra.vs, rb.vs);
        assert!(ra.vs <= ra.ea);
    }
}
