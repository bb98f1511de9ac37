//! Pattern-matching evaluator for the Cypher subset.
//!
//! MATCH enumerates undirected matches of node/edge patterns. An edge with
//! two free endpoints binds in one orientation only — source to the left
//! atom when the constraints allow, otherwise reversed — so a physical edge
//! yields at most one row per binding context, mirroring the single row its
//! linking-table row produces on the relational side. Within one MATCH
//! clause a physical edge binds at most once per row. WHERE supports
//! comparisons, regex match, list membership, and pattern-existence checks;
//! WITH groups by its non-aggregate items; RETURN projects with ORDER BY /
//! LIMIT / SKIP; UNION removes duplicates. Placeholder nodes are invisible.

use std::collections::{BTreeMap, HashMap};

use super::{
    aggregate, apply_window, collect_values, dedupe_rows, exec_err, kleene_and, kleene_not,
    kleene_or, list_membership, sort_rows, wildcard, AggKind, ExecError, OutRow, ResultSet,
};
use crate::cypher::ast::{
    AggFunc, BoolExpr, Clause, CypherQuery, EdgeAtom, ListExpr, NodeAtom, OrderSpec, Pattern,
    Return, ValueExpr, WithItem,
};
use crate::cypher::ast::CmpOp;
use crate::graph::{EdgeId, NodeId, PropertyGraph};
use crate::value::{row_key, Value, ValueKey};

pub fn exec_cypher(g: &PropertyGraph, q: &CypherQuery) -> Result<ResultSet, ExecError> {
    let mut out = exec_one(g, q)?;
    let mut branch = &q.union;
    if branch.is_some() {
        if !q.ret.order_by.is_empty() {
            return exec_err("ORDER BY over a UNION is not supported");
        }
        while let Some(u) = branch {
            let rhs = exec_one(g, u)?;
            if let (Some(a), Some(b)) = (out.arity(), rhs.arity()) {
                if a != b {
                    return exec_err("UNION branches have different arities");
                }
            }
            out.rows.extend(rhs.rows);
            branch = &u.union;
        }
        let mut seen = std::collections::HashSet::new();
        out.rows.retain(|r| seen.insert(row_key(r)));
        out.ordered = false;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Bound {
    Node(NodeId),
    Edge(EdgeId),
    Val(Value),
    List(Vec<Value>),
}

type Bindings = BTreeMap<String, Bound>;

fn exec_one(g: &PropertyGraph, q: &CypherQuery) -> Result<ResultSet, ExecError> {
    let mut rows: Vec<Bindings> = vec![Bindings::new()];
    for clause in &q.clauses {
        match clause {
            Clause::Match(patterns) => {
                // a physical edge binds at most once per row within one
                // MATCH clause
                let mut staged: Vec<(Bindings, Vec<EdgeId>)> =
                    rows.into_iter().map(|b| (b, Vec::new())).collect();
                for p in patterns {
                    let mut next = Vec::new();
                    for (bindings, used) in &staged {
                        extend_pattern(g, p, bindings, used, &mut next)?;
                    }
                    staged = next;
                }
                rows = staged.into_iter().map(|(b, _)| b).collect();
            }
            Clause::Where(expr) => {
                let mut kept = Vec::new();
                for b in rows {
                    if eval_bool(g, expr, &b)? == Some(true) {
                        kept.push(b);
                    }
                }
                rows = kept;
            }
            Clause::With(items) => {
                rows = eval_with(g, items, rows)?;
            }
        }
    }
    project_return(g, &q.ret, rows, q.union.is_some())
}

// ───────────────────────── pattern matching ─────────────────────────

fn node_ok(g: &PropertyGraph, id: NodeId, atom: &NodeAtom, bindings: &Bindings) -> bool {
    let node = g.node(id).expect("node exists");
    if node.placeholder {
        return false;
    }
    if let Some(l) = &atom.label {
        if &node.label != l {
            return false;
        }
    }
    if let Some(a) = &atom.alias {
        if let Some(prev) = bindings.get(a) {
            return *prev == Bound::Node(id);
        }
    }
    true
}

fn edge_ok(g: &PropertyGraph, id: EdgeId, atom: &EdgeAtom, bindings: &Bindings) -> bool {
    let edge = g.edge(id).expect("edge exists");
    if let Some(t) = &atom.edge_type {
        if &edge.edge_type != t {
            return false;
        }
    }
    for (k, v) in &atom.props {
        match edge.properties.get(k) {
            Some(stored) if !stored.is_null() && stored.widened_eq(v) => {}
            _ => return false,
        }
    }
    if let Some(a) = &atom.alias {
        if let Some(prev) = bindings.get(a) {
            return *prev == Bound::Edge(id);
        }
    }
    true
}

fn bind_node(bindings: &mut Bindings, atom: &NodeAtom, id: NodeId) {
    if let Some(a) = &atom.alias {
        bindings.insert(a.clone(), Bound::Node(id));
    }
}

fn bind_edge(bindings: &mut Bindings, atom: &EdgeAtom, id: EdgeId) {
    if let Some(a) = &atom.alias {
        bindings.insert(a.clone(), Bound::Edge(id));
    }
}

/// All extensions of `bindings` matching `pattern`, honoring per-MATCH edge
/// uniqueness via `used`.
fn extend_pattern(
    g: &PropertyGraph,
    pattern: &Pattern,
    bindings: &Bindings,
    used: &[EdgeId],
    out: &mut Vec<(Bindings, Vec<EdgeId>)>,
) -> Result<(), ExecError> {
    let head_pre_bound = pattern
        .head
        .alias
        .as_ref()
        .and_then(|a| bindings.get(a))
        .is_some();

    if pattern.steps.is_empty() {
        for id in head_candidates(g, &pattern.head, bindings) {
            if node_ok(g, id, &pattern.head, bindings) {
                let mut b = bindings.clone();
                bind_node(&mut b, &pattern.head, id);
                out.push((b, used.to_vec()));
            }
        }
        return Ok(());
    }

    // first step: anchored when the head is already bound, otherwise
    // edge-first with a single orientation per physical edge
    let first = &pattern.steps[0];
    let mut partials: Vec<(Bindings, Vec<EdgeId>, NodeId)> = Vec::new();
    if head_pre_bound {
        let Some(Bound::Node(h)) = pattern
            .head
            .alias
            .as_ref()
            .and_then(|a| bindings.get(a))
            .cloned()
        else {
            return exec_err("alias is not bound to a node");
        };
        if node_ok(g, h, &pattern.head, bindings) {
            anchored_step(g, h, first, bindings, used, &mut |b, u, far| {
                partials.push((b, u, far))
            });
        }
    } else {
        let edge_pool: Vec<EdgeId> = match &first.edge.edge_type {
            Some(t) => g.edges_with_type(t).to_vec(),
            None => (0..g.edge_count() as EdgeId).collect(),
        };
        for eid in edge_pool {
            if used.contains(&eid) || !edge_ok(g, eid, &first.edge, bindings) {
                continue;
            }
            let edge = g.edge(eid).expect("edge exists");
            let orientations = [(edge.src, edge.dst), (edge.dst, edge.src)];
            let mut tried_same = false;
            for (h, t) in orientations {
                if tried_same && edge.src == edge.dst {
                    break;
                }
                tried_same = true;
                if node_ok(g, h, &pattern.head, bindings) && node_ok(g, t, &first.node, bindings) {
                    let mut b = bindings.clone();
                    bind_node(&mut b, &pattern.head, h);
                    bind_edge(&mut b, &first.edge, eid);
                    bind_node(&mut b, &first.node, t);
                    let mut u = used.to_vec();
                    u.push(eid);
                    partials.push((b, u, t));
                    break; // one orientation per edge
                }
            }
        }
    }

    // remaining steps walk anchored from the previous endpoint
    for step in &pattern.steps[1..] {
        let mut next: Vec<(Bindings, Vec<EdgeId>, NodeId)> = Vec::new();
        for (b, u, from) in &partials {
            anchored_step(g, *from, step, b, u, &mut |nb, nu, far| {
                next.push((nb, nu, far))
            });
        }
        partials = next;
    }
    out.extend(partials.into_iter().map(|(b, u, _)| (b, u)));
    Ok(())
}

fn head_candidates(g: &PropertyGraph, atom: &NodeAtom, bindings: &Bindings) -> Vec<NodeId> {
    if let Some(Bound::Node(id)) = atom.alias.as_ref().and_then(|a| bindings.get(a)) {
        return vec![*id];
    }
    match &atom.label {
        Some(l) => g.nodes_with_label(l).to_vec(),
        None => (0..g.node_count() as NodeId).collect(),
    }
}

fn anchored_step(
    g: &PropertyGraph,
    from: NodeId,
    step: &crate::cypher::ast::PatternStep,
    bindings: &Bindings,
    used: &[EdgeId],
    emit: &mut dyn FnMut(Bindings, Vec<EdgeId>, NodeId),
) {
    for &eid in g.incident_edges(from) {
        if used.contains(&eid) || !edge_ok(g, eid, &step.edge, bindings) {
            continue;
        }
        let edge = g.edge(eid).expect("edge exists");
        let far = if edge.src == from { edge.dst } else { edge.src };
        if !node_ok(g, far, &step.node, bindings) {
            continue;
        }
        let mut b = bindings.clone();
        bind_edge(&mut b, &step.edge, eid);
        bind_node(&mut b, &step.node, far);
        let mut u = used.to_vec();
        u.push(eid);
        emit(b, u, far);
    }
}

// ───────────────────────── expressions ─────────────────────────

fn eval_value(g: &PropertyGraph, e: &ValueExpr, b: &Bindings) -> Result<Value, ExecError> {
    match e {
        ValueExpr::Lit(v) => Ok(v.clone()),
        ValueExpr::Prop { alias, key } => match b.get(alias) {
            Some(Bound::Node(id)) => Ok(g
                .node(*id)
                .and_then(|n| n.properties.get(key))
                .cloned()
                .unwrap_or(Value::Null)),
            Some(Bound::Edge(id)) => Ok(g
                .edge(*id)
                .and_then(|e| e.properties.get(key))
                .cloned()
                .unwrap_or(Value::Null)),
            Some(_) => exec_err(format!("`{alias}` is not a node or edge")),
            None => exec_err(format!("unbound alias `{alias}`")),
        },
        ValueExpr::Ident(name) => match b.get(name) {
            Some(Bound::Val(v)) => Ok(v.clone()),
            Some(_) => exec_err(format!("`{name}` is not a scalar value")),
            None => exec_err(format!("unbound alias `{name}`")),
        },
        ValueExpr::Agg { .. } => exec_err("aggregate in scalar position"),
    }
}

fn eval_list(g: &PropertyGraph, l: &ListExpr, b: &Bindings) -> Result<Vec<Value>, ExecError> {
    let _ = g;
    match l {
        ListExpr::Lits(items) => Ok(items.clone()),
        ListExpr::Ident(name) => match b.get(name) {
            Some(Bound::List(items)) => Ok(items.clone()),
            Some(Bound::Val(v)) => Ok(vec![v.clone()]),
            _ => exec_err(format!("`{name}` is not a list")),
        },
    }
}

fn eval_bool(g: &PropertyGraph, e: &BoolExpr, b: &Bindings) -> Result<Option<bool>, ExecError> {
    Ok(match e {
        BoolExpr::Cmp { op, lhs, rhs } => {
            let a = eval_value(g, lhs, b)?;
            let c = eval_value(g, rhs, b)?;
            a.compare(&c).map(|ord| match op {
                CmpOp::Eq => ord.is_eq(),
                CmpOp::Ne => ord.is_ne(),
                CmpOp::Lt => ord.is_lt(),
                CmpOp::Le => ord.is_le(),
                CmpOp::Gt => ord.is_gt(),
                CmpOp::Ge => ord.is_ge(),
            })
        }
        BoolExpr::Regex { lhs, pattern } => {
            let v = eval_value(g, lhs, b)?;
            match v {
                Value::Text(s) => {
                    let tokens = wildcard::tokens_from_regex(pattern).ok_or_else(|| ExecError {
                        message: format!("unsupported regex `{pattern}`"),
                    })?;
                    Some(wildcard::matches(&tokens, &s))
                }
                _ => None,
            }
        }
        BoolExpr::In { lhs, list } => {
            let v = eval_value(g, lhs, b)?;
            let items = eval_list(g, list, b)?;
            list_membership(&v, &items)
        }
        BoolExpr::PatternExists(p) => {
            let mut found = Vec::new();
            extend_pattern(g, p, b, &[], &mut found)?;
            Some(!found.is_empty())
        }
        BoolExpr::And(x, y) => kleene_and(eval_bool(g, x, b)?, eval_bool(g, y, b)?),
        BoolExpr::Or(x, y) => kleene_or(eval_bool(g, x, b)?, eval_bool(g, y, b)?),
        BoolExpr::Not(inner) => kleene_not(eval_bool(g, inner, b)?),
    })
}

// ───────────────────────── WITH / RETURN ─────────────────────────

struct AggSpec {
    func: AggFunc,
    distinct: bool,
    arg: Option<ValueExpr>,
}

fn agg_of(e: &ValueExpr) -> Option<AggSpec> {
    match e {
        ValueExpr::Agg {
            func,
            distinct,
            arg,
        } => Some(AggSpec {
            func: *func,
            distinct: *distinct,
            arg: arg.as_ref().map(|a| a.as_ref().clone()),
        }),
        _ => None,
    }
}

/// Value of an aggregate argument within one row: node/edge bindings count
/// as present (non-null) for `count`.
fn agg_arg_value(
    g: &PropertyGraph,
    arg: &Option<ValueExpr>,
    b: &Bindings,
) -> Result<Value, ExecError> {
    match arg {
        None => Ok(Value::Int(1)), // count(*): every row counts
        Some(ValueExpr::Ident(name)) => match b.get(name) {
            Some(Bound::Node(id)) => Ok(Value::Int(*id as i64)),
            Some(Bound::Edge(id)) => Ok(Value::Int(*id as i64)),
            Some(Bound::Val(v)) => Ok(v.clone()),
            Some(Bound::List(_)) => exec_err(format!("`{name}` is a list")),
            None => exec_err(format!("unbound alias `{name}`")),
        },
        Some(expr) => eval_value(g, expr, b),
    }
}

fn compute_agg(
    g: &PropertyGraph,
    spec: &AggSpec,
    rows: &[Bindings],
) -> Result<Bound, ExecError> {
    if spec.func == AggFunc::Count && spec.arg.is_none() {
        return Ok(Bound::Val(Value::Int(rows.len() as i64)));
    }
    let mut values = Vec::with_capacity(rows.len());
    for b in rows {
        values.push(agg_arg_value(g, &spec.arg, b)?);
    }
    Ok(match spec.func {
        AggFunc::Collect => Bound::List(collect_values(spec.distinct, values)),
        AggFunc::Count => Bound::Val(aggregate(AggKind::Count, spec.distinct, values)),
        AggFunc::Avg => Bound::Val(aggregate(AggKind::Avg, spec.distinct, values)),
        AggFunc::Max => Bound::Val(aggregate(AggKind::Max, spec.distinct, values)),
        AggFunc::Min => Bound::Val(aggregate(AggKind::Min, spec.distinct, values)),
        AggFunc::Sum => Bound::Val(aggregate(AggKind::Sum, spec.distinct, values)),
    })
}

/// Canonical grouping key for a bound value.
fn bound_key(v: &Bound) -> Vec<ValueKey> {
    match v {
        Bound::Node(id) => vec![ValueKey::Text("n".into()), ValueKey::Int(*id as i64)],
        Bound::Edge(id) => vec![ValueKey::Text("e".into()), ValueKey::Int(*id as i64)],
        Bound::Val(v) => vec![v.canonical()],
        Bound::List(items) => items.iter().map(Value::canonical).collect(),
    }
}

fn eval_with(
    g: &PropertyGraph,
    items: &[WithItem],
    rows: Vec<Bindings>,
) -> Result<Vec<Bindings>, ExecError> {
    let has_agg = items.iter().any(|i| agg_of(&i.expr).is_some());
    if !has_agg {
        let mut out = Vec::with_capacity(rows.len());
        for b in rows {
            let mut nb = Bindings::new();
            for item in items {
                let bound = match &item.expr {
                    ValueExpr::Ident(name) => b
                        .get(name)
                        .cloned()
                        .ok_or_else(|| ExecError {
                            message: format!("unbound alias `{name}`"),
                        })?,
                    expr => Bound::Val(eval_value(g, expr, &b)?),
                };
                nb.insert(item.alias.clone(), bound);
            }
            out.push(nb);
        }
        return Ok(out);
    }

    // aggregate WITH: non-aggregate items are the grouping keys
    let mut group_order: Vec<Vec<ValueKey>> = Vec::new();
    let mut groups: HashMap<Vec<ValueKey>, Vec<Bindings>> = HashMap::new();
    let key_items: Vec<&WithItem> = items.iter().filter(|i| agg_of(&i.expr).is_none()).collect();
    if key_items.is_empty() {
        group_order.push(Vec::new());
        groups.insert(Vec::new(), rows);
    } else {
        for b in rows {
            let mut key = Vec::new();
            for item in &key_items {
                let bound = match &item.expr {
                    ValueExpr::Ident(name) => b.get(name).cloned().ok_or_else(|| ExecError {
                        message: format!("unbound alias `{name}`"),
                    })?,
                    expr => Bound::Val(eval_value(g, expr, &b)?),
                };
                key.extend(bound_key(&bound));
            }
            if !groups.contains_key(&key) {
                group_order.push(key.clone());
            }
            groups.entry(key).or_default().push(b);
        }
    }

    let mut out = Vec::new();
    for key in &group_order {
        let members = &groups[key];
        let mut nb = Bindings::new();
        for item in items {
            let bound = match agg_of(&item.expr) {
                Some(spec) => compute_agg(g, &spec, members)?,
                None => {
                    let rep = members.first().expect("non-empty group");
                    match &item.expr {
                        ValueExpr::Ident(name) => rep.get(name).cloned().unwrap(),
                        expr => Bound::Val(eval_value(g, expr, rep)?),
                    }
                }
            };
            nb.insert(item.alias.clone(), bound);
        }
        out.push(nb);
    }
    Ok(out)
}

fn project_return(
    g: &PropertyGraph,
    ret: &Return,
    rows: Vec<Bindings>,
    in_union: bool,
) -> Result<ResultSet, ExecError> {
    let has_agg = ret.items.iter().any(|i| agg_of(i).is_some());
    let mut out_rows: Vec<OutRow> = Vec::new();

    if has_agg {
        // implicit grouping by the non-aggregate items
        let key_exprs: Vec<&ValueExpr> = ret.items.iter().filter(|i| agg_of(i).is_none()).collect();
        let mut group_order: Vec<Vec<ValueKey>> = Vec::new();
        let mut groups: HashMap<Vec<ValueKey>, Vec<Bindings>> = HashMap::new();
        if key_exprs.is_empty() {
            group_order.push(Vec::new());
            groups.insert(Vec::new(), rows);
        } else {
            for b in rows {
                let mut key = Vec::new();
                for e in &key_exprs {
                    key.push(eval_value(g, e, &b)?.canonical());
                }
                if !groups.contains_key(&key) {
                    group_order.push(key.clone());
                }
                groups.entry(key).or_default().push(b);
            }
        }
        if !ret.order_by.is_empty() {
            return exec_err("ORDER BY with implicit RETURN grouping is not supported");
        }
        for key in &group_order {
            let members = &groups[key];
            let mut projected = Vec::new();
            for item in &ret.items {
                match agg_of(item) {
                    Some(spec) => match compute_agg(g, &spec, members)? {
                        Bound::Val(v) => projected.push(v),
                        _ => return exec_err("collect cannot be projected"),
                    },
                    None => {
                        let rep = members.first().expect("non-empty group");
                        projected.push(eval_value(g, item, rep)?);
                    }
                }
            }
            out_rows.push(OutRow {
                keys: Vec::new(),
                projected,
            });
        }
    } else {
        for b in &rows {
            let mut projected = Vec::new();
            for item in &ret.items {
                projected.push(eval_value(g, item, b)?);
            }
            let keys = order_keys(g, &ret.order_by, b)?;
            out_rows.push(OutRow { keys, projected });
        }
    }

    if ret.distinct {
        out_rows = dedupe_rows(out_rows);
    }
    if !ret.order_by.is_empty() {
        let desc: Vec<bool> = ret.order_by.iter().map(|o| o.desc).collect();
        sort_rows(&mut out_rows, &desc);
    }
    let out_rows = if in_union {
        out_rows
    } else {
        // SKIP before LIMIT: skip renders last but applies first
        apply_window(out_rows, ret.skip, ret.limit)
    };
    Ok(ResultSet::new(
        out_rows.into_iter().map(|r| r.projected).collect(),
        !ret.order_by.is_empty(),
    ))
}

fn order_keys(
    g: &PropertyGraph,
    order_by: &[OrderSpec],
    b: &Bindings,
) -> Result<Vec<Value>, ExecError> {
    order_by.iter().map(|o| eval_value(g, &o.expr, b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cypher::parse_cypher;
    use crate::value::PropertyMap;

    fn props(pairs: &[(&str, Value)]) -> PropertyMap {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect()
    }

    /// Two singers with songs, two without.
    fn singer_graph() -> PropertyGraph {
        let mut g = PropertyGraph::new();
        let names = ["Liliane Bettencourt", "Christy Walton", "Alice Walton", "Abigail Johnson"];
        let mut singers = Vec::new();
        for (i, name) in names.iter().enumerate() {
            singers.push(g.add_node(
                "singer",
                props(&[
                    ("Singer_ID", Value::Int(i as i64 + 1)),
                    ("Name", Value::text(*name)),
                ]),
            ));
        }
        for (i, title) in ["Hey Oh", "Sun"].iter().enumerate() {
            let song = g.add_node(
                "song",
                props(&[
                    ("Song_ID", Value::Int(i as i64 + 1)),
                    ("Title", Value::text(*title)),
                    ("Singer_ID", Value::Int(i as i64 + 1)),
                ]),
            );
            g.add_edge("singer_HAS_song", singers[i], song, PropertyMap::new());
        }
        g
    }

    fn run(g: &PropertyGraph, text: &str) -> ResultSet {
        let q = parse_cypher(text).unwrap();
        exec_cypher(g, &q).unwrap()
    }

    #[test]
    fn negation_pattern_finds_singers_without_songs() {
        let g = singer_graph();
        let rs = run(
            &g,
            "MATCH (si:singer) WHERE NOT (si:singer)-[]-(:song) RETURN si.Name",
        );
        assert_eq!(
            rs.rows,
            vec![
                vec![Value::text("Alice Walton")],
                vec![Value::text("Abigail Johnson")]
            ]
        );
    }

    #[test]
    fn match_on_empty_graph_is_empty() {
        let g = PropertyGraph::new();
        let rs = run(&g, "MATCH (x:anything) RETURN x.prop");
        assert!(rs.rows.is_empty());
        // but an aggregate over no rows still produces one row
        let rs = run(&g, "MATCH (x:anything) RETURN count(x)");
        assert_eq!(rs.rows, vec![vec![Value::Int(0)]]);
    }

    #[test]
    fn undirected_edge_binds_once() {
        let g = singer_graph();
        let rs = run(&g, "MATCH ()-[r:singer_HAS_song]-() RETURN count(r)");
        assert_eq!(rs.rows, vec![vec![Value::Int(2)]]);
        let rs = run(&g, "MATCH (a:singer)-[:singer_HAS_song]-(b:song) RETURN a.Name, b.Title");
        assert_eq!(rs.rows.len(), 2);
    }

    #[test]
    fn with_grouping_and_collect() {
        let g = singer_graph();
        let rs = run(
            &g,
            "MATCH (s:song) WITH collect(s.Singer_ID) AS vals \
             MATCH (si:singer) WHERE NOT si.Singer_ID IN vals RETURN si.Name",
        );
        assert_eq!(rs.rows.len(), 2);
        // empty first match still yields one row with an empty list
        let rs = run(
            &g,
            "MATCH (s:song) WHERE s.Title = 'nope' WITH collect(s.Singer_ID) AS vals \
             MATCH (si:singer) WHERE NOT si.Singer_ID IN vals RETURN count(si)",
        );
        assert_eq!(rs.rows, vec![vec![Value::Int(4)]]);
    }

    #[test]
    fn placeholder_nodes_are_invisible() {
        let mut g = PropertyGraph::new();
        g.add_node_full("t", props(&[("a", Value::Null)]), true);
        g.add_node("t", props(&[("a", Value::Int(1))]));
        let rs = run(&g, "MATCH (x:t) RETURN count(x)");
        assert_eq!(rs.rows, vec![vec![Value::Int(1)]]);
    }

    /// Naive re-enumeration of a single-edge pattern: try source-to-head
    /// first, the reverse otherwise, one orientation per edge.
    fn naive_edge_match(
        g: &PropertyGraph,
        head_label: Option<&str>,
        edge_type: Option<&str>,
        tail_label: Option<&str>,
    ) -> Vec<(NodeId, EdgeId, NodeId)> {
        let label_ok = |id: NodeId, want: Option<&str>| {
            let n = g.node(id).unwrap();
            !n.placeholder && want.map(|l| n.label == l).unwrap_or(true)
        };
        let mut out = Vec::new();
        for e in g.edges() {
            if edge_type.map(|t| e.edge_type != t).unwrap_or(false) {
                continue;
            }
            if label_ok(e.src, head_label) && label_ok(e.dst, tail_label) {
                out.push((e.src, e.id, e.dst));
            } else if label_ok(e.dst, head_label) && label_ok(e.src, tail_label) {
                out.push((e.dst, e.id, e.src));
            }
        }
        out
    }

    #[test]
    fn match_agrees_with_naive_enumeration() {
        let g = singer_graph();
        for (head, ty, tail, text) in [
            (
                Some("singer"),
                Some("singer_HAS_song"),
                Some("song"),
                "MATCH (a:singer)-[e:singer_HAS_song]-(b:song) RETURN a.Singer_ID, b.Song_ID",
            ),
            (
                Some("singer"),
                None,
                None,
                "MATCH (a:singer)-[e]-(b) RETURN a.Singer_ID, b.Song_ID",
            ),
            (
                None,
                Some("singer_HAS_song"),
                None,
                "MATCH (a)-[e:singer_HAS_song]-(b) RETURN a.Singer_ID, b.Song_ID",
            ),
        ] {
            let rs = run(&g, text);
            let naive = naive_edge_match(&g, head, ty, tail);
            assert_eq!(rs.rows.len(), naive.len(), "{text}");
            let expected: Vec<Vec<Value>> = naive
                .iter()
                .map(|(a, _, b)| {
                    vec![
                        g.node(*a)
                            .unwrap()
                            .properties
                            .get("Singer_ID")
                            .cloned()
                            .unwrap_or(Value::Null),
                        g.node(*b)
                            .unwrap()
                            .properties
                            .get("Song_ID")
                            .cloned()
                            .unwrap_or(Value::Null),
                    ]
                })
                .collect();
            let expected = ResultSet::new(expected, false);
            assert!(crate::exec::compare_results(&rs, &expected), "{text}");
        }
    }

    #[test]
    fn order_limit_skip() {
        let g = singer_graph();
        let rs = run(
            &g,
            "MATCH (si:singer) RETURN si.Name ORDER BY si.Name LIMIT 2 SKIP 1",
        );
        assert_eq!(
            rs.rows,
            vec![
                vec![Value::text("Alice Walton")],
                vec![Value::text("Christy Walton")]
            ]
        );
        assert!(rs.ordered);
    }
}
