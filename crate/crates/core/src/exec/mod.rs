//! Differential execution: the SQL subset against the relational store and
//! the Cypher subset against the graph store, with shared three-valued
//! logic, aggregate, and ordering semantics so both sides agree wherever
//! the translation is sound.

mod cypher;
mod result;
mod sql;
pub(crate) mod wildcard;

pub use cypher::exec_cypher;
pub use result::{compare_results, ResultSet};
pub use sql::exec_sql;

use std::cmp::Ordering;
use std::collections::HashSet;

use thiserror::Error;

use crate::value::{row_key, Value, ValueKey};

#[derive(Debug, Clone, Error)]
#[error("execution error: {message}")]
pub struct ExecError {
    pub message: String,
}

pub(crate) fn exec_err<T>(message: impl Into<String>) -> Result<T, ExecError> {
    Err(ExecError {
        message: message.into(),
    })
}

// ───────────────────────── three-valued logic ─────────────────────────

pub(crate) fn kleene_and(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

pub(crate) fn kleene_or(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(true), _) | (_, Some(true)) => Some(true),
        (Some(false), Some(false)) => Some(false),
        _ => None,
    }
}

pub(crate) fn kleene_not(a: Option<bool>) -> Option<bool> {
    a.map(|b| !b)
}

/// `x IN (items)` under SQL/Cypher null semantics: null never matches, a
/// miss against a list containing null is unknown.
pub(crate) fn list_membership(x: &Value, items: &[Value]) -> Option<bool> {
    if x.is_null() {
        return None;
    }
    if items.iter().any(|v| !v.is_null() && v.widened_eq(x)) {
        return Some(true);
    }
    if items.iter().any(Value::is_null) {
        None
    } else {
        Some(false)
    }
}

// ───────────────────────── aggregates ─────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum AggKind {
    Count,
    Avg,
    Max,
    Min,
    Sum,
}

/// Shared aggregate evaluation: nulls are ignored except by `count(*)`,
/// which callers express by counting rows directly.
pub(crate) fn aggregate(kind: AggKind, distinct: bool, values: Vec<Value>) -> Value {
    let mut values: Vec<Value> = values.into_iter().filter(|v| !v.is_null()).collect();
    if distinct {
        let mut seen: HashSet<ValueKey> = HashSet::new();
        values.retain(|v| seen.insert(v.canonical()));
    }
    match kind {
        AggKind::Count => Value::Int(values.len() as i64),
        AggKind::Sum => sum(&values),
        AggKind::Avg => {
            let nums: Vec<f64> = values.iter().filter_map(Value::as_f64).collect();
            if nums.is_empty() {
                Value::Null
            } else {
                Value::Float(nums.iter().sum::<f64>() / nums.len() as f64)
            }
        }
        AggKind::Min | AggKind::Max => {
            let mut iter = values.into_iter();
            let Some(first) = iter.next() else {
                return Value::Null;
            };
            iter.fold(first, |best, v| {
                let replace = match kind {
                    AggKind::Min => v.total_cmp(&best) == Ordering::Less,
                    AggKind::Max => v.total_cmp(&best) == Ordering::Greater,
                    _ => unreachable!(),
                };
                if replace {
                    v
                } else {
                    best
                }
            })
        }
    }
}

fn sum(values: &[Value]) -> Value {
    let nums: Vec<&Value> = values
        .iter()
        .filter(|v| matches!(v, Value::Int(_) | Value::Float(_)))
        .collect();
    if nums.is_empty() {
        return Value::Null;
    }
    if nums.iter().all(|v| matches!(v, Value::Int(_))) {
        let total: i128 = nums
            .iter()
            .map(|v| match v {
                Value::Int(i) => *i as i128,
                _ => unreachable!(),
            })
            .sum();
        match i64::try_from(total) {
            Ok(i) => Value::Int(i),
            Err(_) => Value::Float(total as f64),
        }
    } else {
        Value::Float(nums.iter().filter_map(|v| v.as_f64()).sum())
    }
}

/// List materialization for `collect`: nulls are skipped.
pub(crate) fn collect_values(distinct: bool, values: Vec<Value>) -> Vec<Value> {
    let mut values: Vec<Value> = values.into_iter().filter(|v| !v.is_null()).collect();
    if distinct {
        let mut seen: HashSet<ValueKey> = HashSet::new();
        values.retain(|v| seen.insert(v.canonical()));
    }
    values
}

// ───────────────────────── ordering ─────────────────────────

/// A projected output row with its ORDER BY key values.
pub(crate) struct OutRow {
    pub keys: Vec<Value>,
    pub projected: Vec<Value>,
}

/// Sort by the key values (nulls first ascending, last descending), then by
/// the projected row under the total value order. Both executors share this
/// comparator, so ties resolve identically on either side of a
/// differential run.
pub(crate) fn sort_rows(rows: &mut [OutRow], descending: &[bool]) {
    rows.sort_by(|a, b| {
        for (i, desc) in descending.iter().enumerate() {
            let ord = a.keys[i].total_cmp(&b.keys[i]);
            let ord = if *desc { ord.reverse() } else { ord };
            if ord != Ordering::Equal {
                return ord;
            }
        }
        row_key(&a.projected).cmp(&row_key(&b.projected))
    });
}

/// DISTINCT: keep the first occurrence of each projected row.
pub(crate) fn dedupe_rows(rows: Vec<OutRow>) -> Vec<OutRow> {
    let mut seen: HashSet<Vec<ValueKey>> = HashSet::new();
    rows.into_iter()
        .filter(|r| seen.insert(row_key(&r.projected)))
        .collect()
}

/// OFFSET/SKIP before LIMIT, regardless of clause spelling.
pub(crate) fn apply_window(
    mut rows: Vec<OutRow>,
    offset: Option<u64>,
    limit: Option<u64>,
) -> Vec<OutRow> {
    if let Some(skip) = offset {
        let skip = (skip as usize).min(rows.len());
        rows.drain(..skip);
    }
    if let Some(limit) = limit {
        rows.truncate(limit as usize);
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_identities() {
        let vals = vec![Value::Int(2), Value::Null, Value::Int(4), Value::Float(3.0)];
        assert_eq!(aggregate(AggKind::Count, false, vals.clone()), Value::Int(3));
        assert_eq!(aggregate(AggKind::Sum, false, vals.clone()), Value::Float(9.0));
        assert_eq!(aggregate(AggKind::Avg, false, vals.clone()), Value::Float(3.0));
        assert_eq!(aggregate(AggKind::Min, false, vals.clone()), Value::Int(2));
        assert_eq!(aggregate(AggKind::Max, false, vals), Value::Int(4));
        // empty and all-null groups
        assert_eq!(aggregate(AggKind::Count, false, vec![]), Value::Int(0));
        assert_eq!(aggregate(AggKind::Sum, false, vec![Value::Null]), Value::Null);
        assert_eq!(aggregate(AggKind::Max, false, vec![]), Value::Null);
        // integer sums stay integers
        assert_eq!(
            aggregate(AggKind::Sum, false, vec![Value::Int(1), Value::Int(2)]),
            Value::Int(3)
        );
        assert_eq!(
            aggregate(AggKind::Count, true, vec![Value::Int(1), Value::Float(1.0)]),
            Value::Int(1)
        );
    }

    #[test]
    fn membership_three_valued() {
        let items = vec![Value::Int(1), Value::Null];
        assert_eq!(list_membership(&Value::Int(1), &items), Some(true));
        assert_eq!(list_membership(&Value::Int(2), &items), None);
        assert_eq!(list_membership(&Value::Null, &items), None);
        assert_eq!(
            list_membership(&Value::Int(2), &[Value::Int(1)]),
            Some(false)
        );
        assert_eq!(list_membership(&Value::Int(2), &[]), Some(false));
    }

    #[test]
    fn sorting_breaks_ties_on_projected_values() {
        let mut rows = vec![
            OutRow {
                keys: vec![Value::Int(1)],
                projected: vec![Value::text("b")],
            },
            OutRow {
                keys: vec![Value::Int(1)],
                projected: vec![Value::text("a")],
            },
            OutRow {
                keys: vec![Value::Null],
                projected: vec![Value::text("z")],
            },
        ];
        sort_rows(&mut rows, &[false]);
        let flat: Vec<&Value> = rows.iter().map(|r| &r.projected[0]).collect();
        assert_eq!(
            flat,
            vec![&Value::text("z"), &Value::text("a"), &Value::text("b")]
        );
        sort_rows(&mut rows, &[true]);
        let flat: Vec<&Value> = rows.iter().map(|r| &r.projected[0]).collect();
        assert_eq!(
            flat,
            vec![&Value::text("a"), &Value::text("b"), &Value::text("z")]
        );
    }
}
