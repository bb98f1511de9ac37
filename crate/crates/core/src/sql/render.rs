//! Canonical SQL text for a parse tree. Reparsing the rendered text yields
//! a structurally equal tree.

use super::ast::*;
use crate::value::Value;

pub fn render_sql(stmt: &SelectStmt) -> String {
    let mut out = String::new();
    render_core(stmt, &mut out);
    if let Some(u) = &stmt.union {
        out.push_str(" UNION ");
        render_core(u, &mut out);
        render_union_tail(u, &mut out);
        render_trailing(stmt, &mut out);
    }
    out
}

fn render_union_tail(stmt: &SelectStmt, out: &mut String) {
    if let Some(u) = &stmt.union {
        out.push_str(" UNION ");
        render_core(u, out);
        render_union_tail(u, out);
    }
}

fn render_core(stmt: &SelectStmt, out: &mut String) {
    out.push_str("SELECT ");
    if stmt.distinct {
        out.push_str("DISTINCT ");
    }
    for (i, p) in stmt.projections.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        match p {
            Projection::Star => out.push('*'),
            Projection::TableStar(t) => {
                out.push_str(&ident(t));
                out.push_str(".*");
            }
            Projection::Column(c) => out.push_str(&column(c)),
            Projection::Aggregate(a) => out.push_str(&agg(a)),
        }
    }
    out.push_str(" FROM ");
    out.push_str(&table_ref(&stmt.from.base));
    for j in &stmt.from.joins {
        out.push_str(" JOIN ");
        out.push_str(&table_ref(&j.table));
        out.push_str(" ON ");
        out.push_str(&expr(&j.on, 0));
    }
    if let Some(w) = &stmt.where_clause {
        out.push_str(" WHERE ");
        out.push_str(&expr(w, 0));
    }
    if !stmt.group_by.is_empty() {
        out.push_str(" GROUP BY ");
        let keys: Vec<String> = stmt.group_by.iter().map(column).collect();
        out.push_str(&keys.join(", "));
    }
    if let Some(h) = &stmt.having {
        out.push_str(" HAVING ");
        out.push_str(&expr(h, 0));
    }
    if stmt.union.is_none() {
        render_trailing(stmt, out);
    }
}

fn render_trailing(stmt: &SelectStmt, out: &mut String) {
    if !stmt.order_by.is_empty() {
        out.push_str(" ORDER BY ");
        let items: Vec<String> = stmt
            .order_by
            .iter()
            .map(|o| {
                let mut s = operand(&o.expr);
                if o.desc {
                    s.push_str(" DESC");
                }
                s
            })
            .collect();
        out.push_str(&items.join(", "));
    }
    if let Some(l) = stmt.limit {
        out.push_str(&format!(" LIMIT {l}"));
    }
    if let Some(o) = stmt.offset {
        out.push_str(&format!(" OFFSET {o}"));
    }
}

/// Precedence levels: 0 = OR, 1 = AND, 2 = NOT/predicate.
fn expr(e: &Expr, level: u8) -> String {
    match e {
        Expr::Or(a, b) => {
            let s = format!("{} OR {}", expr(a, 0), expr(b, 1));
            if level > 0 {
                format!("({s})")
            } else {
                s
            }
        }
        Expr::And(a, b) => {
            let s = format!("{} AND {}", expr(a, 1), expr(b, 2));
            if level > 1 {
                format!("({s})")
            } else {
                s
            }
        }
        Expr::Not(inner) => format!("NOT ({})", expr(inner, 0)),
        Expr::Cmp { op, lhs, rhs } => {
            format!("{} {} {}", operand(lhs), op.symbol(), operand(rhs))
        }
        Expr::Like {
            expr: e,
            pattern,
            negated,
        } => format!(
            "{}{} LIKE {}",
            operand(e),
            if *negated { " NOT" } else { "" },
            literal(&Value::Text(pattern.clone()))
        ),
        Expr::InList {
            expr: e,
            list,
            negated,
        } => {
            let items: Vec<String> = list.iter().map(literal).collect();
            format!(
                "{}{} IN ({})",
                operand(e),
                if *negated { " NOT" } else { "" },
                items.join(", ")
            )
        }
        Expr::InSelect {
            expr: e,
            select,
            negated,
        } => format!(
            "{}{} IN ({})",
            operand(e),
            if *negated { " NOT" } else { "" },
            render_sql(select)
        ),
    }
}

fn operand(o: &Operand) -> String {
    match o {
        Operand::Column(c) => column(c),
        Operand::Lit(v) => literal(v),
        Operand::Agg(a) => agg(a),
    }
}

fn agg(a: &AggCall) -> String {
    let arg = match &a.arg {
        None => "*".to_string(),
        Some(c) => column(c),
    };
    format!(
        "{}({}{})",
        a.func.name(),
        if a.distinct { "DISTINCT " } else { "" },
        arg
    )
}

fn column(c: &ColumnRef) -> String {
    match &c.table {
        Some(t) => format!("{}.{}", ident(t), ident(&c.column)),
        None => ident(&c.column),
    }
}

fn literal(v: &Value) -> String {
    match v {
        Value::Null => "NULL".into(),
        Value::Int(i) => i.to_string(),
        Value::Float(f) => {
            if f.fract() == 0.0 && f.is_finite() {
                format!("{f:.1}")
            } else {
                format!("{f}")
            }
        }
        Value::Text(s) => format!("'{}'", s.replace('\'', "''")),
    }
}

fn table_ref(t: &TableRef) -> String {
    match &t.alias {
        Some(a) => format!("{} AS {}", ident(&t.table), ident(a)),
        None => ident(&t.table),
    }
}

const RESERVED: &[&str] = &[
    "SELECT", "FROM", "WHERE", "GROUP", "HAVING", "ORDER", "BY", "LIMIT", "OFFSET", "UNION",
    "JOIN", "ON", "AS", "AND", "OR", "NOT", "IN", "LIKE", "BETWEEN", "DISTINCT", "ASC", "DESC",
    "NULL", "COUNT", "AVG", "MAX", "MIN", "SUM", "INNER",
];

fn ident(s: &str) -> String {
    let plain = !s.is_empty()
        && s.chars().next().unwrap().is_ascii_alphabetic()
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !RESERVED.iter().any(|k| s.eq_ignore_ascii_case(k));
    if plain {
        s.to_string()
    } else {
        format!("\"{s}\"")
    }
}
