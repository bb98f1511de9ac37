//! Bag-semantics evaluator for the SQL subset: FROM/JOIN as a filtered
//! cross product, WHERE under three-valued logic, GROUP BY / HAVING with
//! the five aggregates, ORDER BY with deterministic tie-breaking, LIMIT /
//! OFFSET, and duplicate-removing UNION. Placeholder rows are invisible.

use std::collections::HashMap;

use super::{
    aggregate, apply_window, dedupe_rows, exec_err, kleene_and, kleene_not, kleene_or,
    list_membership, sort_rows, wildcard, AggKind, ExecError, OutRow, ResultSet,
};
use crate::relational::{RelationalDatabase, Row, Table};
use crate::sql::{
    AggCall, AggFunc, CmpOp, ColumnRef, Expr, Operand, OrderItem, Projection, SelectStmt,
};
use crate::value::{row_key, Value, ValueKey};

pub fn exec_sql(db: &RelationalDatabase, stmt: &SelectStmt) -> Result<ResultSet, ExecError> {
    let mut out = exec_one(db, stmt)?;
    let mut branch = &stmt.union;
    if branch.is_some() {
        if !stmt.order_by.is_empty() {
            return exec_err("ORDER BY over a UNION is not supported");
        }
        while let Some(u) = branch {
            let rhs = exec_one(db, u)?;
            if let (Some(a), Some(b)) = (out.arity(), rhs.arity()) {
                if a != b {
                    return exec_err("UNION branches have different arities");
                }
            }
            out.rows.extend(rhs.rows);
            branch = &u.union;
        }
        // UNION removes duplicates
        let mut seen = std::collections::HashSet::new();
        out.rows.retain(|r| seen.insert(row_key(r)));
        out.ordered = false;
        let windowed = apply_window(
            out.rows
                .into_iter()
                .map(|projected| OutRow {
                    keys: Vec::new(),
                    projected,
                })
                .collect(),
            stmt.offset,
            stmt.limit,
        );
        out.rows = windowed.into_iter().map(|r| r.projected).collect();
    }
    Ok(out)
}

struct Frame<'a> {
    /// (binding name, table), in FROM order.
    slots: Vec<(String, &'a Table)>,
}

impl<'a> Frame<'a> {
    /// Resolve a column reference to (slot, column index).
    fn resolve(&self, c: &ColumnRef) -> Result<(usize, usize), ExecError> {
        match &c.table {
            Some(q) => {
                for (si, (binding, table)) in self.slots.iter().enumerate() {
                    if binding.eq_ignore_ascii_case(q) {
                        return match table.column_index(&c.column) {
                            Some(ci) => Ok((si, ci)),
                            None => exec_err(format!(
                                "unbound identifier `{}.{}`",
                                q, c.column
                            )),
                        };
                    }
                }
                exec_err(format!("unbound identifier `{q}`"))
            }
            None => {
                let mut hit = None;
                for (si, (_, table)) in self.slots.iter().enumerate() {
                    if let Some(ci) = table.column_index(&c.column) {
                        if hit.is_some() {
                            return exec_err(format!("ambiguous column `{}`", c.column));
                        }
                        hit = Some((si, ci));
                    }
                }
                hit.ok_or_else(|| ExecError {
                    message: format!("unbound identifier `{}`", c.column),
                })
            }
        }
    }
}

type Env<'a> = Vec<&'a Row>;

/// Uncorrelated sub-select results, keyed by tree identity.
type SubqueryCache = HashMap<*const SelectStmt, Vec<Value>>;

fn exec_one(db: &RelationalDatabase, stmt: &SelectStmt) -> Result<ResultSet, ExecError> {
    let mut frame = Frame { slots: Vec::new() };
    for item in stmt.from.items() {
        let table = db
            .table(&item.table)
            .ok_or_else(|| ExecError {
                message: format!("unbound identifier `{}`", item.table),
            })?;
        frame.slots.push((item.binding_name().to_string(), table));
    }

    let mut subqueries = SubqueryCache::new();
    prefill_subqueries(db, stmt, &mut subqueries)?;

    // incremental join: extend one slot at a time, filtering by the ON
    // condition as soon as its tables are bound
    let mut envs: Vec<Env> = frame.slots[0]
        .1
        .rows
        .iter()
        .filter(|r| !r.placeholder)
        .map(|r| vec![r])
        .collect();
    for (ji, join) in stmt.from.joins.iter().enumerate() {
        let table = frame.slots[ji + 1].1;
        let mut next = Vec::new();
        for env in &envs {
            for row in table.rows.iter().filter(|r| !r.placeholder) {
                let mut candidate = env.clone();
                candidate.push(row);
                if eval_expr(&join.on, &frame, &candidate, &subqueries, None)? == Some(true) {
                    next.push(candidate);
                }
            }
        }
        envs = next;
    }

    if let Some(w) = &stmt.where_clause {
        let mut kept = Vec::new();
        for env in envs {
            if eval_expr(w, &frame, &env, &subqueries, None)? == Some(true) {
                kept.push(env);
            }
        }
        envs = kept;
    }

    let has_aggregates = stmt
        .projections
        .iter()
        .any(|p| matches!(p, Projection::Aggregate(_)))
        || !stmt.aggregates().is_empty();
    let grouped = !stmt.group_by.is_empty() || stmt.having.is_some() || has_aggregates;

    let mut rows: Vec<OutRow> = if grouped {
        exec_grouped(stmt, &frame, envs, &subqueries)?
    } else {
        let mut out = Vec::new();
        for env in &envs {
            let projected = project_plain(stmt, &frame, env)?;
            let keys = order_keys_plain(&stmt.order_by, &frame, env)?;
            out.push(OutRow { keys, projected });
        }
        out
    };

    if stmt.distinct {
        rows = dedupe_rows(rows);
    }
    if !stmt.order_by.is_empty() {
        let desc: Vec<bool> = stmt.order_by.iter().map(|o| o.desc).collect();
        sort_rows(&mut rows, &desc);
    }
    let rows = if stmt.union.is_none() {
        apply_window(rows, stmt.offset, stmt.limit)
    } else {
        rows
    };
    Ok(ResultSet::new(
        rows.into_iter().map(|r| r.projected).collect(),
        !stmt.order_by.is_empty(),
    ))
}

fn prefill_subqueries(
    db: &RelationalDatabase,
    stmt: &SelectStmt,
    cache: &mut SubqueryCache,
) -> Result<(), ExecError> {
    let mut walk = |e: &Expr| walk_expr_subqueries(db, e, cache);
    for join in &stmt.from.joins {
        walk(&join.on)?;
    }
    if let Some(w) = &stmt.where_clause {
        walk(w)?;
    }
    if let Some(h) = &stmt.having {
        walk(h)?;
    }
    Ok(())
}

fn walk_expr_subqueries(
    db: &RelationalDatabase,
    e: &Expr,
    cache: &mut SubqueryCache,
) -> Result<(), ExecError> {
    match e {
        Expr::InSelect { select, .. } => {
            let result = exec_sql(db, select)?;
            if result.arity().map(|a| a != 1).unwrap_or(false) {
                return exec_err("nested select must produce one column");
            }
            let values = result
                .rows
                .into_iter()
                .map(|mut r| r.remove(0))
                .collect();
            cache.insert(select.as_ref() as *const SelectStmt, values);
            Ok(())
        }
        Expr::And(a, b) | Expr::Or(a, b) => {
            walk_expr_subqueries(db, a, cache)?;
            walk_expr_subqueries(db, b, cache)
        }
        Expr::Not(a) => walk_expr_subqueries(db, a, cache),
        _ => Ok(()),
    }
}

/// Group context handed to expression evaluation inside HAVING.
struct GroupCtx<'a> {
    envs: &'a [Env<'a>],
}

fn eval_expr(
    e: &Expr,
    frame: &Frame<'_>,
    env: &Env<'_>,
    subqueries: &SubqueryCache,
    group: Option<&GroupCtx<'_>>,
) -> Result<Option<bool>, ExecError> {
    Ok(match e {
        Expr::Cmp { op, lhs, rhs } => {
            let a = eval_operand(lhs, frame, env, group)?;
            let b = eval_operand(rhs, frame, env, group)?;
            a.compare(&b).map(|ord| match op {
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
            let v = eval_operand(expr, frame, env, group)?;
            let m = match v {
                Value::Text(s) => Some(wildcard::matches(
                    &wildcard::tokens_from_like(pattern),
                    &s,
                )),
                Value::Null => None,
                _ => None,
            };
            if *negated {
                kleene_not(m)
            } else {
                m
            }
        }
        Expr::InList {
            expr,
            list,
            negated,
        } => {
            let v = eval_operand(expr, frame, env, group)?;
            let m = list_membership(&v, list);
            if *negated {
                kleene_not(m)
            } else {
                m
            }
        }
        Expr::InSelect {
            expr,
            select,
            negated,
        } => {
            let v = eval_operand(expr, frame, env, group)?;
            let items = subqueries
                .get(&(select.as_ref() as *const SelectStmt))
                .ok_or_else(|| ExecError {
                    message: "nested select was not pre-evaluated".into(),
                })?;
            let m = list_membership(&v, items);
            if *negated {
                kleene_not(m)
            } else {
                m
            }
        }
        Expr::And(a, b) => kleene_and(
            eval_expr(a, frame, env, subqueries, group)?,
            eval_expr(b, frame, env, subqueries, group)?,
        ),
        Expr::Or(a, b) => kleene_or(
            eval_expr(a, frame, env, subqueries, group)?,
            eval_expr(b, frame, env, subqueries, group)?,
        ),
        Expr::Not(inner) => kleene_not(eval_expr(inner, frame, env, subqueries, group)?),
    })
}

fn eval_operand(
    o: &Operand,
    frame: &Frame<'_>,
    env: &Env<'_>,
    group: Option<&GroupCtx<'_>>,
) -> Result<Value, ExecError> {
    match o {
        Operand::Lit(v) => Ok(v.clone()),
        Operand::Column(c) => {
            let (si, ci) = frame.resolve(c)?;
            // an empty group has no representative row; bare columns are null
            Ok(env
                .get(si)
                .map(|r| r.values[ci].clone())
                .unwrap_or(Value::Null))
        }
        Operand::Agg(a) => match group {
            Some(g) => compute_aggregate(a, frame, g.envs),
            None => exec_err("aggregate outside GROUP BY / HAVING context"),
        },
    }
}

fn compute_aggregate(
    a: &AggCall,
    frame: &Frame<'_>,
    envs: &[Env<'_>],
) -> Result<Value, ExecError> {
    if a.arg.is_none() {
        // count(*) counts rows
        return Ok(Value::Int(envs.len() as i64));
    }
    let c = a.arg.as_ref().unwrap();
    let (si, ci) = frame.resolve(c)?;
    let values: Vec<Value> = envs.iter().map(|env| env[si].values[ci].clone()).collect();
    let kind = match a.func {
        AggFunc::Count => AggKind::Count,
        AggFunc::Avg => AggKind::Avg,
        AggFunc::Max => AggKind::Max,
        AggFunc::Min => AggKind::Min,
        AggFunc::Sum => AggKind::Sum,
    };
    Ok(aggregate(kind, a.distinct, values))
}

fn project_plain(
    stmt: &SelectStmt,
    frame: &Frame<'_>,
    env: &Env<'_>,
) -> Result<Vec<Value>, ExecError> {
    let mut out = Vec::new();
    for p in &stmt.projections {
        match p {
            Projection::Star => {
                for (si, (_, table)) in frame.slots.iter().enumerate() {
                    for ci in 0..table.columns.len() {
                        out.push(env[si].values[ci].clone());
                    }
                }
            }
            Projection::TableStar(q) => {
                let si = frame
                    .slots
                    .iter()
                    .position(|(b, _)| b.eq_ignore_ascii_case(q))
                    .ok_or_else(|| ExecError {
                        message: format!("unbound identifier `{q}`"),
                    })?;
                out.extend(env[si].values.iter().cloned());
            }
            Projection::Column(c) => {
                let (si, ci) = frame.resolve(c)?;
                out.push(env[si].values[ci].clone());
            }
            Projection::Aggregate(_) => {
                return exec_err("aggregate in a non-aggregated projection")
            }
        }
    }
    Ok(out)
}

fn order_keys_plain(
    order_by: &[OrderItem],
    frame: &Frame<'_>,
    env: &Env<'_>,
) -> Result<Vec<Value>, ExecError> {
    order_by
        .iter()
        .map(|o| eval_operand(&o.expr, frame, env, None))
        .collect()
}

fn exec_grouped(
    stmt: &SelectStmt,
    frame: &Frame<'_>,
    envs: Vec<Env<'_>>,
    subqueries: &SubqueryCache,
) -> Result<Vec<OutRow>, ExecError> {
    // group rows by the GROUP BY keys, first-occurrence order; with no keys
    // everything is one group (even when empty)
    let mut group_order: Vec<Vec<ValueKey>> = Vec::new();
    let mut groups: HashMap<Vec<ValueKey>, Vec<Env<'_>>> = HashMap::new();
    if stmt.group_by.is_empty() {
        group_order.push(Vec::new());
        groups.insert(Vec::new(), envs);
    } else {
        for env in envs {
            let mut key = Vec::new();
            for c in &stmt.group_by {
                let (si, ci) = frame.resolve(c)?;
                key.push(env[si].values[ci].canonical());
            }
            if !groups.contains_key(&key) {
                group_order.push(key.clone());
            }
            groups.entry(key).or_default().push(env);
        }
    }

    let mut out = Vec::new();
    for key in &group_order {
        let members = &groups[key];
        let ctx = GroupCtx { envs: members };
        if let Some(h) = &stmt.having {
            // HAVING sees aggregates and, for bare columns, the group's
            // first row
            let env: Env = members.first().cloned().unwrap_or_default();
            let verdict = eval_expr(h, frame, &env, subqueries, Some(&ctx))?;
            if verdict != Some(true) {
                continue;
            }
        }
        let representative: Option<&Env> = members.first();
        let mut projected = Vec::new();
        for p in &stmt.projections {
            match p {
                Projection::Column(c) => {
                    let (si, ci) = frame.resolve(c)?;
                    projected.push(match representative {
                        Some(env) => env[si].values[ci].clone(),
                        None => Value::Null,
                    });
                }
                Projection::Aggregate(a) => projected.push(compute_aggregate(a, frame, members)?),
                Projection::Star | Projection::TableStar(_) => {
                    return exec_err("star projection in a grouped query")
                }
            }
        }
        let mut keys = Vec::new();
        for o in &stmt.order_by {
            keys.push(match &o.expr {
                Operand::Agg(a) => compute_aggregate(a, frame, members)?,
                Operand::Lit(v) => v.clone(),
                Operand::Column(c) => {
                    let (si, ci) = frame.resolve(c)?;
                    match representative {
                        Some(env) => env[si].values[ci].clone(),
                        None => Value::Null,
                    }
                }
            });
        }
        out.push(OutRow { keys, projected });
    }
    Ok(out)
}
