//! Case normalization of schema identifiers against the graph schema.
//!
//! SQL identifiers are case-insensitive while graph labels and property
//! keys are case-sensitive, so every table and column reference in a parse
//! tree is rewritten to the target schema's exact spelling before
//! translation or execution. Normalization also qualifies every column
//! reference with its table binding and expands `*` projections in
//! declared column order.

use std::collections::BTreeMap;

use thiserror::Error;

use super::ast::*;
use crate::relational::RelationalDatabase;

#[derive(Debug, Clone, Error)]
pub enum NormalizeError {
    #[error("unknown schema item `{item}`")]
    UnknownSchemaItem { item: String },
    #[error("ambiguous column `{column}` (matches more than one table)")]
    AmbiguousColumn { column: String },
}

/// Case-insensitive name map from SQL identifiers to the graph's exact-case
/// labels and property keys.
#[derive(Debug, Clone, Default)]
pub struct SchemaBinding {
    /// lowercase table name (full, and bare suffix when namespaced) -> exact name
    tables: BTreeMap<String, String>,
    /// exact table name -> (lowercase column -> exact column)
    columns: BTreeMap<String, BTreeMap<String, String>>,
    /// exact table name -> declared column order
    column_order: BTreeMap<String, Vec<String>>,
}

impl SchemaBinding {
    /// Build from a database whose table names are the graph's labels and
    /// edge types. When tables were namespaced as `<domain>.<name>`, both
    /// spellings bind.
    pub fn from_database(db: &RelationalDatabase) -> SchemaBinding {
        let mut b = SchemaBinding::default();
        for t in &db.tables {
            b.tables.insert(t.name.to_ascii_lowercase(), t.name.clone());
            if let Some((_, bare)) = t.name.split_once('.') {
                b.tables
                    .entry(bare.to_ascii_lowercase())
                    .or_insert_with(|| t.name.clone());
            }
            let cols: BTreeMap<String, String> = t
                .columns
                .iter()
                .map(|c| (c.name.to_ascii_lowercase(), c.name.clone()))
                .collect();
            b.columns.insert(t.name.clone(), cols);
            b.column_order
                .insert(t.name.clone(), t.column_names().map(str::to_string).collect());
        }
        b
    }

    pub fn resolve_table(&self, name: &str) -> Option<&str> {
        self.tables
            .get(&name.to_ascii_lowercase())
            .map(String::as_str)
    }

    pub fn resolve_column(&self, table: &str, column: &str) -> Option<&str> {
        self.columns
            .get(table)?
            .get(&column.to_ascii_lowercase())
            .map(String::as_str)
    }

    pub fn columns_of(&self, table: &str) -> Option<&[String]> {
        self.column_order.get(table).map(Vec::as_slice)
    }
}

/// One select scope: binding name (alias or table, as written) -> exact table.
struct Scope {
    entries: Vec<(String, String)>,
}

impl Scope {
    fn lookup(&self, qualifier: &str) -> Option<&(String, String)> {
        self.entries
            .iter()
            .find(|(binding, _)| binding.eq_ignore_ascii_case(qualifier))
    }
}

/// Rewrite every schema identifier in `stmt` to the binding's exact case.
pub fn normalize_identifiers(
    stmt: &SelectStmt,
    binding: &SchemaBinding,
) -> Result<SelectStmt, NormalizeError> {
    normalize_stmt(stmt, binding)
}

fn normalize_stmt(
    stmt: &SelectStmt,
    binding: &SchemaBinding,
) -> Result<SelectStmt, NormalizeError> {
    let mut from = stmt.from.clone();
    let mut scope = Scope {
        entries: Vec::new(),
    };
    for table_ref in std::iter::once(&mut from.base).chain(from.joins.iter_mut().map(|j| &mut j.table))
    {
        let exact = binding
            .resolve_table(&table_ref.table)
            .ok_or_else(|| NormalizeError::UnknownSchemaItem {
                item: table_ref.table.clone(),
            })?
            .to_string();
        table_ref.table = exact.clone();
        scope
            .entries
            .push((table_ref.binding_name().to_string(), exact));
    }

    let mut projections = Vec::new();
    for p in &stmt.projections {
        match p {
            Projection::Star => {
                for (bind_name, table) in &scope.entries {
                    expand_star(&mut projections, binding, bind_name, table);
                }
            }
            Projection::TableStar(q) => {
                let (bind_name, table) = scope
                    .lookup(q)
                    .ok_or_else(|| NormalizeError::UnknownSchemaItem { item: q.clone() })?
                    .clone();
                expand_star(&mut projections, binding, &bind_name, &table);
            }
            Projection::Column(c) => {
                projections.push(Projection::Column(normalize_col(c, binding, &scope)?))
            }
            Projection::Aggregate(a) => {
                projections.push(Projection::Aggregate(normalize_agg(a, binding, &scope)?))
            }
        }
    }

    let mut joins = from.joins.clone();
    for j in &mut joins {
        j.on = normalize_expr(&j.on, binding, &scope)?;
    }
    from.joins = joins;

    Ok(SelectStmt {
        distinct: stmt.distinct,
        projections,
        where_clause: stmt
            .where_clause
            .as_ref()
            .map(|e| normalize_expr(e, binding, &scope))
            .transpose()?,
        group_by: stmt
            .group_by
            .iter()
            .map(|c| normalize_col(c, binding, &scope))
            .collect::<Result<_, _>>()?,
        having: stmt
            .having
            .as_ref()
            .map(|e| normalize_expr(e, binding, &scope))
            .transpose()?,
        order_by: stmt
            .order_by
            .iter()
            .map(|o| {
                Ok(OrderItem {
                    expr: normalize_operand(&o.expr, binding, &scope)?,
                    desc: o.desc,
                })
            })
            .collect::<Result<_, _>>()?,
        limit: stmt.limit,
        offset: stmt.offset,
        union: stmt
            .union
            .as_ref()
            .map(|u| normalize_stmt(u, binding).map(Box::new))
            .transpose()?,
        from,
    })
}

fn expand_star(
    out: &mut Vec<Projection>,
    binding: &SchemaBinding,
    bind_name: &str,
    table: &str,
) {
    if let Some(cols) = binding.columns_of(table) {
        for c in cols {
            out.push(Projection::Column(ColumnRef {
                table: Some(bind_name.to_string()),
                column: c.clone(),
            }));
        }
    }
}

fn normalize_col(
    c: &ColumnRef,
    binding: &SchemaBinding,
    scope: &Scope,
) -> Result<ColumnRef, NormalizeError> {
    match &c.table {
        Some(q) => {
            let (bind_name, table) = scope
                .lookup(q)
                .ok_or_else(|| NormalizeError::UnknownSchemaItem { item: q.clone() })?;
            let exact = binding.resolve_column(table, &c.column).ok_or_else(|| {
                NormalizeError::UnknownSchemaItem {
                    item: format!("{}.{}", table, c.column),
                }
            })?;
            Ok(ColumnRef {
                table: Some(bind_name.clone()),
                column: exact.to_string(),
            })
        }
        None => {
            let mut hits = Vec::new();
            for (bind_name, table) in &scope.entries {
                if let Some(exact) = binding.resolve_column(table, &c.column) {
                    hits.push((bind_name.clone(), exact.to_string()));
                }
            }
            match hits.len() {
                0 => Err(NormalizeError::UnknownSchemaItem {
                    item: c.column.clone(),
                }),
                1 => {
                    let (bind_name, exact) = hits.pop().unwrap();
                    Ok(ColumnRef {
                        table: Some(bind_name),
                        column: exact,
                    })
                }
                _ => Err(NormalizeError::AmbiguousColumn {
                    column: c.column.clone(),
                }),
            }
        }
    }
}

fn normalize_agg(
    a: &AggCall,
    binding: &SchemaBinding,
    scope: &Scope,
) -> Result<AggCall, NormalizeError> {
    Ok(AggCall {
        func: a.func,
        distinct: a.distinct,
        arg: a
            .arg
            .as_ref()
            .map(|c| normalize_col(c, binding, scope))
            .transpose()?,
    })
}

fn normalize_operand(
    o: &Operand,
    binding: &SchemaBinding,
    scope: &Scope,
) -> Result<Operand, NormalizeError> {
    Ok(match o {
        Operand::Column(c) => Operand::Column(normalize_col(c, binding, scope)?),
        Operand::Lit(v) => Operand::Lit(v.clone()),
        Operand::Agg(a) => Operand::Agg(normalize_agg(a, binding, scope)?),
    })
}

fn normalize_expr(
    e: &Expr,
    binding: &SchemaBinding,
    scope: &Scope,
) -> Result<Expr, NormalizeError> {
    Ok(match e {
        Expr::Cmp { op, lhs, rhs } => Expr::Cmp {
            op: *op,
            lhs: normalize_operand(lhs, binding, scope)?,
            rhs: normalize_operand(rhs, binding, scope)?,
        },
        Expr::Like {
            expr,
            pattern,
            negated,
        } => Expr::Like {
            expr: normalize_operand(expr, binding, scope)?,
            pattern: pattern.clone(),
            negated: *negated,
        },
        Expr::InList {
            expr,
            list,
            negated,
        } => Expr::InList {
            expr: normalize_operand(expr, binding, scope)?,
            list: list.clone(),
            negated: *negated,
        },
        Expr::InSelect {
            expr,
            select,
            negated,
        } => Expr::InSelect {
            expr: normalize_operand(expr, binding, scope)?,
            // nested selects bind against their own FROM scope only
            select: Box::new(normalize_stmt(select, binding)?),
            negated: *negated,
        },
        Expr::And(a, b) => Expr::And(
            Box::new(normalize_expr(a, binding, scope)?),
            Box::new(normalize_expr(b, binding, scope)?),
        ),
        Expr::Or(a, b) => Expr::Or(
            Box::new(normalize_expr(a, binding, scope)?),
            Box::new(normalize_expr(b, binding, scope)?),
        ),
        Expr::Not(inner) => Expr::Not(Box::new(normalize_expr(inner, binding, scope)?)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relational::load_sql_dump;
    use crate::sql::parse_sql;

    fn binding() -> SchemaBinding {
        let db = load_sql_dump(
            "CREATE TABLE singer(Singer_ID int, Name text, PRIMARY KEY(Singer_ID));\n\
             CREATE TABLE song(Song_ID int, Title text, Singer_ID int, PRIMARY KEY(Song_ID),\n\
               FOREIGN KEY (Singer_ID) REFERENCES singer(Singer_ID));",
        )
        .unwrap()
        .db;
        SchemaBinding::from_database(&db)
    }

    #[test]
    fn case_folds_to_exact_schema_names() {
        let stmt = parse_sql("select name from SINGER").unwrap();
        let n = normalize_identifiers(&stmt, &binding()).unwrap();
        assert_eq!(n.from.base.table, "singer");
        match &n.projections[0] {
            Projection::Column(c) => {
                assert_eq!(c.column, "Name");
                assert_eq!(c.table.as_deref(), Some("singer"));
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn exact_identifiers_pass_through() {
        let stmt = parse_sql("SELECT Name FROM singer WHERE Singer_ID = 1").unwrap();
        let n = normalize_identifiers(&stmt, &binding()).unwrap();
        assert_eq!(crate::sql::render_sql(&n), "SELECT singer.Name FROM singer WHERE singer.Singer_ID = 1");
    }

    #[test]
    fn unknown_column_is_reported() {
        let stmt = parse_sql("SELECT xyz FROM singer").unwrap();
        match normalize_identifiers(&stmt, &binding()) {
            Err(NormalizeError::UnknownSchemaItem { item }) => assert_eq!(item, "xyz"),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn ambiguous_unqualified_column_is_reported() {
        let stmt =
            parse_sql("SELECT Singer_ID FROM singer JOIN song ON singer.Singer_ID = song.Singer_ID")
                .unwrap();
        assert!(matches!(
            normalize_identifiers(&stmt, &binding()),
            Err(NormalizeError::AmbiguousColumn { .. })
        ));
    }

    #[test]
    fn star_expands_in_declared_order() {
        let stmt = parse_sql("SELECT * FROM song").unwrap();
        let n = normalize_identifiers(&stmt, &binding()).unwrap();
        let cols: Vec<String> = n
            .projections
            .iter()
            .map(|p| match p {
                Projection::Column(c) => c.column.clone(),
                other => panic!("unexpected: {other:?}"),
            })
            .collect();
        assert_eq!(cols, vec!["Song_ID", "Title", "Singer_ID"]);
    }

    #[test]
    fn namespaced_labels_bind_by_bare_suffix() {
        let mut db = load_sql_dump("CREATE TABLE singer(Singer_ID int, Name text);")
            .unwrap()
            .db;
        db.tables[0].name = "concert_singer.singer".into();
        let b = SchemaBinding::from_database(&db);
        let stmt = parse_sql("SELECT Name FROM singer").unwrap();
        let n = normalize_identifiers(&stmt, &b).unwrap();
        assert_eq!(n.from.base.table, "concert_singer.singer");
    }
}
