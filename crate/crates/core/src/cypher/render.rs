//! Canonical Cypher text. Single spaces between tokens; clause order
//! MATCH, WHERE, WITH, WHERE-after-WITH, RETURN, ORDER BY, LIMIT, SKIP.
//! SKIP renders after LIMIT's slot but always applies before it, mirroring
//! the source LIMIT/OFFSET semantics. Reparsing yields an equal structure.

use super::ast::*;
use crate::graph::export::{backtick, cypher_literal};

pub fn render_cypher(q: &CypherQuery) -> String {
    let mut out = String::new();
    render_one(q, &mut out);
    let mut union = &q.union;
    while let Some(u) = union {
        out.push_str(" UNION ");
        render_one(u, &mut out);
        union = &u.union;
    }
    out
}

fn render_one(q: &CypherQuery, out: &mut String) {
    for (i, clause) in q.clauses.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        match clause {
            Clause::Match(patterns) => {
                out.push_str("MATCH ");
                let parts: Vec<String> = patterns.iter().map(pattern).collect();
                out.push_str(&parts.join(", "));
            }
            Clause::Where(e) => {
                out.push_str("WHERE ");
                out.push_str(&bool_expr(e, 0));
            }
            Clause::With(items) => {
                out.push_str("WITH ");
                let parts: Vec<String> = items
                    .iter()
                    .map(|i| format!("{} AS {}", value_expr(&i.expr), backtick(&i.alias)))
                    .collect();
                out.push_str(&parts.join(", "));
            }
        }
    }
    if !q.clauses.is_empty() {
        out.push(' ');
    }
    out.push_str("RETURN ");
    if q.ret.distinct {
        out.push_str("DISTINCT ");
    }
    let items: Vec<String> = q.ret.items.iter().map(value_expr).collect();
    out.push_str(&items.join(", "));
    if !q.ret.order_by.is_empty() {
        out.push_str(" ORDER BY ");
        let parts: Vec<String> = q
            .ret
            .order_by
            .iter()
            .map(|o| {
                let mut s = value_expr(&o.expr);
                if o.desc {
                    s.push_str(" DESC");
                }
                s
            })
            .collect();
        out.push_str(&parts.join(", "));
    }
    if let Some(l) = q.ret.limit {
        out.push_str(&format!(" LIMIT {l}"));
    }
    if let Some(s) = q.ret.skip {
        out.push_str(&format!(" SKIP {s}"));
    }
}

pub(crate) fn pattern(p: &Pattern) -> String {
    let mut s = node_atom(&p.head);
    for step in &p.steps {
        s.push_str(&edge_atom(&step.edge));
        s.push_str(&node_atom(&step.node));
    }
    s
}

fn node_atom(n: &NodeAtom) -> String {
    match (&n.alias, &n.label) {
        (Some(a), Some(l)) => format!("({}:{})", backtick(a), backtick(l)),
        (Some(a), None) => format!("({})", backtick(a)),
        (None, Some(l)) => format!("(:{})", backtick(l)),
        (None, None) => "()".into(),
    }
}

fn edge_atom(e: &EdgeAtom) -> String {
    let mut inner = String::new();
    if let Some(a) = &e.alias {
        inner.push_str(&backtick(a));
    }
    if let Some(t) = &e.edge_type {
        inner.push(':');
        inner.push_str(&backtick(t));
    }
    if !e.props.is_empty() {
        let body: Vec<String> = e
            .props
            .iter()
            .map(|(k, v)| format!("{}: {}", backtick(k), cypher_literal(v)))
            .collect();
        inner.push_str(&format!(" {{{}}}", body.join(", ")));
    }
    format!("-[{inner}]-")
}

fn value_expr(e: &ValueExpr) -> String {
    match e {
        ValueExpr::Prop { alias, key } => format!("{}.{}", backtick(alias), backtick(key)),
        ValueExpr::Ident(name) => backtick(name),
        ValueExpr::Lit(v) => cypher_literal(v),
        ValueExpr::Agg {
            func,
            distinct,
            arg,
        } => {
            let arg = match arg {
                None => "*".to_string(),
                Some(a) => value_expr(a),
            };
            format!(
                "{}({}{})",
                func.name(),
                if *distinct { "DISTINCT " } else { "" },
                arg
            )
        }
    }
}

/// Precedence: 0 = OR, 1 = AND, 2 = NOT/atom.
fn bool_expr(e: &BoolExpr, level: u8) -> String {
    match e {
        BoolExpr::Or(a, b) => {
            let s = format!("{} OR {}", bool_expr(a, 0), bool_expr(b, 1));
            if level > 0 {
                format!("({s})")
            } else {
                s
            }
        }
        BoolExpr::And(a, b) => {
            let s = format!("{} AND {}", bool_expr(a, 1), bool_expr(b, 2));
            if level > 1 {
                format!("({s})")
            } else {
                s
            }
        }
        BoolExpr::Not(inner) => match inner.as_ref() {
            // `NOT (a)-[]-(b)` — the pattern's own parens suffice
            BoolExpr::PatternExists(p) => format!("NOT {}", pattern(p)),
            BoolExpr::In { lhs, list } => {
                format!("NOT {} IN {}", value_expr(lhs), list_expr(list))
            }
            other => format!("NOT ({})", bool_expr(other, 0)),
        },
        BoolExpr::Cmp { op, lhs, rhs } => format!(
            "{} {} {}",
            value_expr(lhs),
            op.symbol(),
            value_expr(rhs)
        ),
        BoolExpr::Regex { lhs, pattern } => format!(
            "{} =~ {}",
            value_expr(lhs),
            cypher_literal(&crate::value::Value::Text(pattern.clone()))
        ),
        BoolExpr::In { lhs, list } => {
            format!("{} IN {}", value_expr(lhs), list_expr(list))
        }
        BoolExpr::PatternExists(p) => pattern(p),
    }
}

fn list_expr(l: &ListExpr) -> String {
    match l {
        ListExpr::Lits(items) => {
            let body: Vec<String> = items.iter().map(cypher_literal).collect();
            format!("[{}]", body.join(", "))
        }
        ListExpr::Ident(name) => backtick(name),
    }
}
