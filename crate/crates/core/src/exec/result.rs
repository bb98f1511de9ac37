//! Result sets and differential comparison semantics.
//!
//! A result set is an ordered list of rows of equal arity, flagged ordered
//! when its query carried an explicit ORDER BY. Comparison is element-wise
//! for two ordered sets and multiset-based otherwise, with numeric widening
//! in both modes (integer 1 equals float 1.0).

use std::collections::HashMap;

use serde::Serialize;

use crate::value::{row_key, Value, ValueKey};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultSet {
    pub rows: Vec<Vec<Value>>,
    pub ordered: bool,
}

impl ResultSet {
    pub fn new(rows: Vec<Vec<Value>>, ordered: bool) -> ResultSet {
        ResultSet { rows, ordered }
    }

    pub fn empty() -> ResultSet {
        ResultSet {
            rows: Vec::new(),
            ordered: false,
        }
    }

    pub fn arity(&self) -> Option<usize> {
        self.rows.first().map(Vec::len)
    }

    /// JSON array-of-arrays form.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.rows).expect("rows serialize")
    }
}

pub fn compare_results(a: &ResultSet, b: &ResultSet) -> bool {
    if a.rows.len() != b.rows.len() {
        return false;
    }
    if let (Some(x), Some(y)) = (a.arity(), b.arity()) {
        if x != y {
            return false;
        }
    }
    if a.ordered && b.ordered {
        a.rows
            .iter()
            .zip(&b.rows)
            .all(|(ra, rb)| row_key(ra) == row_key(rb))
    } else {
        let mut counts: HashMap<Vec<ValueKey>, i64> = HashMap::new();
        for r in &a.rows {
            *counts.entry(row_key(r)).or_default() += 1;
        }
        for r in &b.rows {
            match counts.get_mut(&row_key(r)) {
                Some(n) => *n -= 1,
                None => return false,
            }
        }
        counts.values().all(|&n| n == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(data: &[&[Value]]) -> Vec<Vec<Value>> {
        data.iter().map(|r| r.to_vec()).collect()
    }

    #[test]
    fn unordered_sets_compare_as_multisets() {
        let a = ResultSet::new(rows(&[&[Value::Int(1)], &[Value::Int(2)]]), false);
        let b = ResultSet::new(rows(&[&[Value::Int(2)], &[Value::Int(1)]]), false);
        assert!(compare_results(&a, &b));
        // duplicates count
        let c = ResultSet::new(rows(&[&[Value::Int(1)], &[Value::Int(1)]]), false);
        let d = ResultSet::new(rows(&[&[Value::Int(1)], &[Value::Int(2)]]), false);
        assert!(!compare_results(&c, &d));
    }

    #[test]
    fn numeric_widening_in_comparison() {
        let a = ResultSet::new(rows(&[&[Value::Int(1)]]), false);
        let b = ResultSet::new(rows(&[&[Value::Float(1.0)]]), false);
        assert!(compare_results(&a, &b));
    }

    #[test]
    fn cardinality_and_arity_mismatches_fail() {
        let a = ResultSet::new(rows(&[&[Value::text("a")]]), false);
        let b = ResultSet::new(rows(&[&[Value::text("a")], &[Value::text("b")]]), false);
        assert!(!compare_results(&a, &b));
        let c = ResultSet::new(rows(&[&[Value::Int(1), Value::Int(2)]]), false);
        let d = ResultSet::new(rows(&[&[Value::Int(1)]]), false);
        assert!(!compare_results(&c, &d));
    }

    #[test]
    fn ordered_comparison_is_element_wise() {
        let a = ResultSet::new(rows(&[&[Value::Int(1)], &[Value::Int(2)]]), true);
        let mut b = a.clone();
        assert!(compare_results(&a, &b));
        b.rows.reverse();
        assert!(!compare_results(&a, &b));
        // mixed ordered flags fall back to multiset comparison
        b.ordered = false;
        assert!(compare_results(&a, &b));
    }
}
