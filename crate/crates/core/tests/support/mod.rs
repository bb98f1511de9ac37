//! Shared test support: an independent brute-force SQL evaluator used as
//! the oracle for the engine under test, plus fixture helpers.
//!
//! The oracle shares only the `Value` type with the implementation: it
//! materializes the full cross product, filters every ON and WHERE
//! predicate in one pass, and groups, sorts, and windows with naive
//! quadratic scans.

#![allow(dead_code)]

use std::path::PathBuf;

use relic_core::exec::ResultSet;
use relic_core::relational::RelationalDatabase;
use relic_core::sql::{
    AggCall, AggFunc, CmpOp, ColumnRef, Expr, Operand, Projection, SelectStmt,
};
use relic_core::value::Value;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

// ───────────────────────── oracle ─────────────────────────

type WideRow = Vec<Value>;

struct Layout {
    // (binding name, table name, column names, slot offset)
    tables: Vec<(String, String, Vec<String>, usize)>,
}

impl Layout {
    fn locate(&self, c: &ColumnRef) -> Option<usize> {
        match &c.table {
            Some(q) => {
                let (_, _, cols, off) = self
                    .tables
                    .iter()
                    .find(|(b, _, _, _)| b.eq_ignore_ascii_case(q))?;
                let i = cols.iter().position(|x| x.eq_ignore_ascii_case(&c.column))?;
                Some(off + i)
            }
            None => {
                let mut hit = None;
                for (_, _, cols, off) in &self.tables {
                    if let Some(i) = cols.iter().position(|x| x.eq_ignore_ascii_case(&c.column)) {
                        if hit.is_some() {
                            return None;
                        }
                        hit = Some(off + i);
                    }
                }
                hit
            }
        }
    }
}

/// Evaluate `stmt` against `db` by exhaustive enumeration.
pub fn brute_force_sql(db: &RelationalDatabase, stmt: &SelectStmt) -> ResultSet {
    let mut rows = brute_force_rows(db, stmt);
    let ordered = !stmt.order_by.is_empty() && stmt.union.is_none();
    if stmt.union.is_some() {
        let mut branch = &stmt.union;
        while let Some(u) = branch {
            rows.extend(brute_force_rows(db, u));
            branch = &u.union;
        }
        rows = dedupe(rows);
        rows = window(rows, stmt.offset, stmt.limit);
    }
    ResultSet::new(rows, ordered)
}

fn brute_force_rows(db: &RelationalDatabase, stmt: &SelectStmt) -> Vec<WideRow> {
    // layout and full cross product
    let mut layout = Layout { tables: Vec::new() };
    let mut offset = 0usize;
    for item in stmt.from.items() {
        let t = db.table(&item.table).expect("oracle: table exists");
        let cols: Vec<String> = t.columns.iter().map(|c| c.name.clone()).collect();
        layout
            .tables
            .push((item.binding_name().to_string(), t.name.clone(), cols, offset));
        offset += t.columns.len();
    }
    let mut product: Vec<WideRow> = vec![Vec::new()];
    for item in stmt.from.items() {
        let t = db.table(&item.table).unwrap();
        let mut next = Vec::new();
        for base in &product {
            for row in &t.rows {
                if row.placeholder {
                    continue;
                }
                let mut r = base.clone();
                r.extend(row.values.iter().cloned());
                next.push(r);
            }
        }
        product = next;
    }

    // one big filter: all ON conjuncts and the WHERE clause together
    let mut predicates: Vec<&Expr> = stmt.from.joins.iter().map(|j| &j.on).collect();
    if let Some(w) = &stmt.where_clause {
        predicates.push(w);
    }
    let survivors: Vec<WideRow> = product
        .into_iter()
        .filter(|r| {
            predicates
                .iter()
                .all(|p| eval_pred(db, p, &layout, r) == Some(true))
        })
        .collect();

    let has_agg = stmt
        .projections
        .iter()
        .any(|p| matches!(p, Projection::Aggregate(_)))
        || !stmt.aggregates().is_empty();

    let mut out: Vec<(Vec<Value>, Vec<Value>)> = Vec::new(); // (order keys, projection)
    if !stmt.group_by.is_empty() || stmt.having.is_some() || has_agg {
        // naive grouping: first-occurrence order, scan per row
        let mut groups: Vec<(Vec<Value>, Vec<WideRow>)> = Vec::new();
        if stmt.group_by.is_empty() {
            groups.push((Vec::new(), survivors));
        } else {
            for r in survivors {
                let key: Vec<Value> = stmt
                    .group_by
                    .iter()
                    .map(|c| r[layout.locate(c).expect("group key")].clone())
                    .collect();
                match groups
                    .iter_mut()
                    .find(|(k, _)| rows_equal_widened(k, &key))
                {
                    Some((_, members)) => members.push(r),
                    None => groups.push((key, vec![r])),
                }
            }
        }
        for (_, members) in groups {
            if let Some(h) = &stmt.having {
                if eval_having(db, h, &layout, &members) != Some(true) {
                    continue;
                }
            }
            let projected: Vec<Value> = stmt
                .projections
                .iter()
                .map(|p| match p {
                    Projection::Column(c) => members
                        .first()
                        .map(|r| r[layout.locate(c).expect("column")].clone())
                        .unwrap_or(Value::Null),
                    Projection::Aggregate(a) => agg_over(&members, &layout, a),
                    _ => panic!("oracle: star in grouped query"),
                })
                .collect();
            let keys: Vec<Value> = stmt
                .order_by
                .iter()
                .map(|o| match &o.expr {
                    Operand::Agg(a) => agg_over(&members, &layout, a),
                    Operand::Column(c) => members
                        .first()
                        .map(|r| r[layout.locate(c).expect("order column")].clone())
                        .unwrap_or(Value::Null),
                    Operand::Lit(v) => v.clone(),
                })
                .collect();
            out.push((keys, projected));
        }
    } else {
        for r in survivors {
            let mut projected = Vec::new();
            for p in &stmt.projections {
                match p {
                    Projection::Star => {
                        for (_, _, cols, off) in &layout.tables {
                            for i in 0..cols.len() {
                                projected.push(r[off + i].clone());
                            }
                        }
                    }
                    Projection::TableStar(q) => {
                        let (_, _, cols, off) = layout
                            .tables
                            .iter()
                            .find(|(b, _, _, _)| b.eq_ignore_ascii_case(q))
                            .expect("table star");
                        for i in 0..cols.len() {
                            projected.push(r[off + i].clone());
                        }
                    }
                    Projection::Column(c) => {
                        projected.push(r[layout.locate(c).expect("column")].clone())
                    }
                    Projection::Aggregate(_) => unreachable!(),
                }
            }
            let keys: Vec<Value> = stmt
                .order_by
                .iter()
                .map(|o| match &o.expr {
                    Operand::Column(c) => r[layout.locate(c).expect("order column")].clone(),
                    Operand::Lit(v) => v.clone(),
                    Operand::Agg(_) => panic!("oracle: aggregate order without grouping"),
                })
                .collect();
            out.push((keys, projected));
        }
    }

    if stmt.distinct {
        let mut kept: Vec<(Vec<Value>, Vec<Value>)> = Vec::new();
        for (k, p) in out {
            if !kept.iter().any(|(_, q)| rows_equal_widened(q, &p)) {
                kept.push((k, p));
            }
        }
        out = kept;
    }
    if !stmt.order_by.is_empty() {
        // insertion sort against the documented comparator
        let desc: Vec<bool> = stmt.order_by.iter().map(|o| o.desc).collect();
        let mut sorted: Vec<(Vec<Value>, Vec<Value>)> = Vec::new();
        for item in out {
            let pos = sorted
                .iter()
                .position(|other| order_cmp(&item, other, &desc) == std::cmp::Ordering::Less)
                .unwrap_or(sorted.len());
            sorted.insert(pos, item);
        }
        out = sorted;
    }
    let rows: Vec<WideRow> = out.into_iter().map(|(_, p)| p).collect();
    if stmt.union.is_none() {
        window(rows, stmt.offset, stmt.limit)
    } else {
        rows
    }
}

fn order_cmp(
    a: &(Vec<Value>, Vec<Value>),
    b: &(Vec<Value>, Vec<Value>),
    desc: &[bool],
) -> std::cmp::Ordering {
    for (i, d) in desc.iter().enumerate() {
        let ord = a.0[i].total_cmp(&b.0[i]);
        let ord = if *d { ord.reverse() } else { ord };
        if ord != std::cmp::Ordering::Equal {
            return ord;
        }
    }
    let ka: Vec<_> = a.1.iter().map(Value::canonical).collect();
    let kb: Vec<_> = b.1.iter().map(Value::canonical).collect();
    ka.cmp(&kb)
}

fn window(mut rows: Vec<WideRow>, offset: Option<u64>, limit: Option<u64>) -> Vec<WideRow> {
    if let Some(o) = offset {
        let o = (o as usize).min(rows.len());
        rows.drain(..o);
    }
    if let Some(l) = limit {
        rows.truncate(l as usize);
    }
    rows
}

fn dedupe(rows: Vec<WideRow>) -> Vec<WideRow> {
    let mut kept: Vec<WideRow> = Vec::new();
    for r in rows {
        if !kept.iter().any(|k| rows_equal_widened(k, &r)) {
            kept.push(r);
        }
    }
    kept
}

fn rows_equal_widened(a: &[Value], b: &[Value]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.canonical() == y.canonical())
}

fn eval_operand(db: &RelationalDatabase, o: &Operand, layout: &Layout, r: &WideRow) -> Value {
    let _ = db;
    match o {
        Operand::Lit(v) => v.clone(),
        Operand::Column(c) => r[layout.locate(c).expect("operand column")].clone(),
        Operand::Agg(_) => panic!("oracle: aggregate in row predicate"),
    }
}

fn eval_pred(db: &RelationalDatabase, e: &Expr, layout: &Layout, r: &WideRow) -> Option<bool> {
    match e {
        Expr::Cmp { op, lhs, rhs } => {
            let a = eval_operand(db, lhs, layout, r);
            let b = eval_operand(db, rhs, layout, r);
            let ord = a.compare(&b)?;
            Some(match op {
                CmpOp::Eq => ord.is_eq(),
                CmpOp::Ne => ord.is_ne(),
                CmpOp::Lt => ord.is_lt(),
                CmpOp::Le => ord.is_le(),
                CmpOp::Gt => ord.is_gt(),
                CmpOp::Ge => ord.is_ge(),
            })
        }
        Expr::Like {
            expr,
            pattern,
            negated,
        } => {
            let v = eval_operand(db, expr, layout, r);
            let m = match v {
                Value::Text(s) => Some(like_match(pattern, &s)),
                _ => None,
            };
            if *negated {
                m.map(|b| !b)
            } else {
                m
            }
        }
        Expr::InList {
            expr,
            list,
            negated,
        } => {
            let v = eval_operand(db, expr, layout, r);
            let m = membership(&v, list);
            if *negated {
                m.map(|b| !b)
            } else {
                m
            }
        }
        Expr::InSelect {
            expr,
            select,
            negated,
        } => {
            let v = eval_operand(db, expr, layout, r);
            let inner = brute_force_sql(db, select);
            let items: Vec<Value> = inner.rows.into_iter().map(|mut x| x.remove(0)).collect();
            let m = membership(&v, &items);
            if *negated {
                m.map(|b| !b)
            } else {
                m
            }
        }
        Expr::And(a, b) => {
            match (eval_pred(db, a, layout, r), eval_pred(db, b, layout, r)) {
                (Some(false), _) | (_, Some(false)) => Some(false),
                (Some(true), Some(true)) => Some(true),
                _ => None,
            }
        }
        Expr::Or(a, b) => match (eval_pred(db, a, layout, r), eval_pred(db, b, layout, r)) {
            (Some(true), _) | (_, Some(true)) => Some(true),
            (Some(false), Some(false)) => Some(false),
            _ => None,
        },
        Expr::Not(inner) => eval_pred(db, inner, layout, r).map(|b| !b),
    }
}

fn eval_having(
    db: &RelationalDatabase,
    e: &Expr,
    layout: &Layout,
    members: &[WideRow],
) -> Option<bool> {
    match e {
        Expr::Cmp { op, lhs, rhs } => {
            let a = having_operand(db, lhs, layout, members);
            let b = having_operand(db, rhs, layout, members);
            let ord = a.compare(&b)?;
            Some(match op {
                CmpOp::Eq => ord.is_eq(),
                CmpOp::Ne => ord.is_ne(),
                CmpOp::Lt => ord.is_lt(),
                CmpOp::Le => ord.is_le(),
                CmpOp::Gt => ord.is_gt(),
                CmpOp::Ge => ord.is_ge(),
            })
        }
        Expr::And(a, b) => match (
            eval_having(db, a, layout, members),
            eval_having(db, b, layout, members),
        ) {
            (Some(false), _) | (_, Some(false)) => Some(false),
            (Some(true), Some(true)) => Some(true),
            _ => None,
        },
        Expr::Or(a, b) => match (
            eval_having(db, a, layout, members),
            eval_having(db, b, layout, members),
        ) {
            (Some(true), _) | (_, Some(true)) => Some(true),
            (Some(false), Some(false)) => Some(false),
            _ => None,
        },
        Expr::Not(inner) => eval_having(db, inner, layout, members).map(|b| !b),
        _ => panic!("oracle: unsupported HAVING shape"),
    }
}

fn having_operand(
    db: &RelationalDatabase,
    o: &Operand,
    layout: &Layout,
    members: &[WideRow],
) -> Value {
    let _ = db;
    match o {
        Operand::Lit(v) => v.clone(),
        Operand::Agg(a) => agg_over(members, layout, a),
        Operand::Column(c) => members
            .first()
            .map(|r| r[layout.locate(c).expect("having column")].clone())
            .unwrap_or(Value::Null),
    }
}

fn agg_over(members: &[WideRow], layout: &Layout, a: &AggCall) -> Value {
    if a.arg.is_none() {
        return Value::Int(members.len() as i64);
    }
    let idx = layout.locate(a.arg.as_ref().unwrap()).expect("agg column");
    let mut values: Vec<Value> = members
        .iter()
        .map(|r| r[idx].clone())
        .filter(|v| !v.is_null())
        .collect();
    if a.distinct {
        let mut kept: Vec<Value> = Vec::new();
        for v in values {
            if !kept.iter().any(|k| k.canonical() == v.canonical()) {
                kept.push(v);
            }
        }
        values = kept;
    }
    match a.func {
        AggFunc::Count => Value::Int(values.len() as i64),
        AggFunc::Sum => {
            let nums: Vec<&Value> = values
                .iter()
                .filter(|v| matches!(v, Value::Int(_) | Value::Float(_)))
                .collect();
            if nums.is_empty() {
                Value::Null
            } else if nums.iter().all(|v| matches!(v, Value::Int(_))) {
                let mut total: i64 = 0;
                for v in &nums {
                    if let Value::Int(i) = v {
                        total += i;
                    }
                }
                Value::Int(total)
            } else {
                Value::Float(nums.iter().filter_map(|v| v.as_f64()).sum())
            }
        }
        AggFunc::Avg => {
            let nums: Vec<f64> = values.iter().filter_map(Value::as_f64).collect();
            if nums.is_empty() {
                Value::Null
            } else {
                Value::Float(nums.iter().sum::<f64>() / nums.len() as f64)
            }
        }
        AggFunc::Min | AggFunc::Max => {
            if values.is_empty() {
                return Value::Null;
            }
            let mut best = values[0].clone();
            for v in &values[1..] {
                let take = match a.func {
                    AggFunc::Min => v.total_cmp(&best) == std::cmp::Ordering::Less,
                    _ => v.total_cmp(&best) == std::cmp::Ordering::Greater,
                };
                if take {
                    best = v.clone();
                }
            }
            best
        }
    }
}

fn membership(x: &Value, items: &[Value]) -> Option<bool> {
    if x.is_null() {
        return None;
    }
    if items
        .iter()
        .any(|v| !v.is_null() && v.canonical() == x.canonical())
    {
        return Some(true);
    }
    if items.iter().any(Value::is_null) {
        None
    } else {
        Some(false)
    }
}

fn like_match(pattern: &str, text: &str) -> bool {
    // independent backtracking matcher over % and _
    fn rec(p: &[char], t: &[char]) -> bool {
        match p.first() {
            None => t.is_empty(),
            Some('%') => (0..=t.len()).any(|i| rec(&p[1..], &t[i..])),
            Some('_') => !t.is_empty() && rec(&p[1..], &t[1..]),
            Some(c) => t.first() == Some(c) && rec(&p[1..], &t[1..]),
        }
    }
    let p: Vec<char> = pattern.chars().collect();
    let t: Vec<char> = text.chars().collect();
    rec(&p, &t)
}
