//! Parse-tree types for the conjunctive SQL subset.
//!
//! The tree is keyed by clause: SELECT projections, FROM with JOIN..ON
//! chains, WHERE, GROUP BY, HAVING, ORDER BY, LIMIT/OFFSET, and an optional
//! UNION branch. Nested selects appear inside IN / NOT IN predicates and
//! recurse with the same shape.

use serde::Serialize;

use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectStmt {
    pub distinct: bool,
    pub projections: Vec<Projection>,
    pub from: FromClause,
    pub where_clause: Option<Expr>,
    pub group_by: Vec<ColumnRef>,
    pub having: Option<Expr>,
    pub order_by: Vec<OrderItem>,
    pub limit: Option<u64>,
    pub offset: Option<u64>,
    /// Duplicate-removing UNION with a second select.
    pub union: Option<Box<SelectStmt>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Projection {
    /// `*`
    Star,
    /// `alias.*`
    TableStar(String),
    Column(ColumnRef),
    Aggregate(AggCall),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggCall {
    pub func: AggFunc,
    pub distinct: bool,
    /// `None` is `count(*)`.
    pub arg: Option<ColumnRef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AggFunc {
    Count,
    Avg,
    Max,
    Min,
    Sum,
}

impl AggFunc {
    pub fn name(self) -> &'static str {
        match self {
            AggFunc::Count => "count",
            AggFunc::Avg => "avg",
            AggFunc::Max => "max",
            AggFunc::Min => "min",
            AggFunc::Sum => "sum",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnRef {
    /// Qualifier: an alias or table name. Normalization qualifies every
    /// column reference.
    pub table: Option<String>,
    pub column: String,
}

impl ColumnRef {
    pub fn new(table: Option<&str>, column: &str) -> Self {
        ColumnRef {
            table: table.map(str::to_string),
            column: column.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FromClause {
    pub base: TableRef,
    pub joins: Vec<Join>,
}

impl FromClause {
    /// All referenced tables, base first.
    pub fn items(&self) -> impl Iterator<Item = &TableRef> {
        std::iter::once(&self.base).chain(self.joins.iter().map(|j| &j.table))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRef {
    pub table: String,
    pub alias: Option<String>,
}

impl TableRef {
    /// The name a column qualifier resolves against.
    pub fn binding_name(&self) -> &str {
        self.alias.as_deref().unwrap_or(&self.table)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Join {
    pub table: TableRef,
    pub on: Expr,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Expr {
    Cmp {
        op: CmpOp,
        lhs: Operand,
        rhs: Operand,
    },
    Like {
        expr: Operand,
        pattern: String,
        negated: bool,
    },
    InList {
        expr: Operand,
        list: Vec<Value>,
        negated: bool,
    },
    InSelect {
        expr: Operand,
        select: Box<SelectStmt>,
        negated: bool,
    },
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Operand {
    Column(ColumnRef),
    Lit(Value),
    /// Aggregates appear in HAVING and ORDER BY.
    Agg(AggCall),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderItem {
    pub expr: Operand,
    pub desc: bool,
}

impl SelectStmt {
    /// Walk all aggregate calls in SELECT, HAVING, and ORDER BY, in that
    /// order of appearance.
    pub fn aggregates(&self) -> Vec<&AggCall> {
        let mut out = Vec::new();
        for p in &self.projections {
            if let Projection::Aggregate(a) = p {
                out.push(a);
            }
        }
        if let Some(h) = &self.having {
            collect_expr_aggs(h, &mut out);
        }
        for o in &self.order_by {
            if let Operand::Agg(a) = &o.expr {
                out.push(a);
            }
        }
        out
    }
}

fn collect_expr_aggs<'a>(e: &'a Expr, out: &mut Vec<&'a AggCall>) {
    match e {
        Expr::Cmp { lhs, rhs, .. } => {
            for op in [lhs, rhs] {
                if let Operand::Agg(a) = op {
                    out.push(a);
                }
            }
        }
        Expr::And(a, b) | Expr::Or(a, b) => {
            collect_expr_aggs(a, out);
            collect_expr_aggs(b, out);
        }
        Expr::Not(a) => collect_expr_aggs(a, out),
        Expr::Like { expr, .. } | Expr::InList { expr, .. } | Expr::InSelect { expr, .. } => {
            if let Operand::Agg(a) = expr {
                out.push(a);
            }
        }
    }
}
