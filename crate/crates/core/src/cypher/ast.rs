//! Clause-sequence representation of the Cypher subset.
//!
//! A query is a prefix of MATCH / WHERE / WITH clauses followed by exactly
//! one RETURN, optionally joined to another query by a duplicate-removing
//! UNION. Patterns follow the four forms: a labeled node atom, an edge atom
//! between two node atoms, an edge atom with a literal property map, and a
//! type-free `-[]-` relationship used in WHERE-level existence checks.

use serde::Serialize;

use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CypherQuery {
    pub clauses: Vec<Clause>,
    pub ret: Return,
    pub union: Option<Box<CypherQuery>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Clause {
    Match(Vec<Pattern>),
    Where(BoolExpr),
    With(Vec<WithItem>),
}

/// A path: a head node atom and zero or more edge steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pattern {
    pub head: NodeAtom,
    pub steps: Vec<PatternStep>,
}

impl Pattern {
    pub fn node(alias: Option<&str>, label: Option<&str>) -> Pattern {
        Pattern {
            head: NodeAtom::new(alias, label),
            steps: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternStep {
    pub edge: EdgeAtom,
    pub node: NodeAtom,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeAtom {
    pub alias: Option<String>,
    pub label: Option<String>,
}

impl NodeAtom {
    pub fn new(alias: Option<&str>, label: Option<&str>) -> NodeAtom {
        NodeAtom {
            alias: alias.map(str::to_string),
            label: label.map(str::to_string),
        }
    }

    pub fn anonymous() -> NodeAtom {
        NodeAtom {
            alias: None,
            label: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeAtom {
    pub alias: Option<String>,
    pub edge_type: Option<String>,
    /// Literal property constraints rendered as `{key: value}`.
    pub props: Vec<(String, Value)>,
}

impl EdgeAtom {
    pub fn typed(alias: Option<&str>, edge_type: &str) -> EdgeAtom {
        EdgeAtom {
            alias: alias.map(str::to_string),
            edge_type: Some(edge_type.to_string()),
            props: Vec::new(),
        }
    }

    pub fn any() -> EdgeAtom {
        EdgeAtom {
            alias: None,
            edge_type: None,
            props: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WithItem {
    pub expr: ValueExpr,
    pub alias: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Return {
    pub distinct: bool,
    pub items: Vec<ValueExpr>,
    pub order_by: Vec<OrderSpec>,
    pub limit: Option<u64>,
    pub skip: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderSpec {
    pub expr: ValueExpr,
    pub desc: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ValueExpr {
    /// `alias.key`
    Prop { alias: String, key: String },
    /// A bound alias: a node/edge binding or a WITH output.
    Ident(String),
    Lit(Value),
    Agg {
        func: AggFunc,
        distinct: bool,
        /// `None` renders as `*` (count only).
        arg: Option<Box<ValueExpr>>,
    },
}

impl ValueExpr {
    pub fn prop(alias: &str, key: &str) -> ValueExpr {
        ValueExpr::Prop {
            alias: alias.to_string(),
            key: key.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AggFunc {
    Count,
    Avg,
    Max,
    Min,
    Sum,
    Collect,
}

impl AggFunc {
    pub fn name(self) -> &'static str {
        match self {
            AggFunc::Count => "count",
            AggFunc::Avg => "avg",
            AggFunc::Max => "max",
            AggFunc::Min => "min",
            AggFunc::Sum => "sum",
            AggFunc::Collect => "collect",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BoolExpr {
    Cmp {
        op: CmpOp,
        lhs: ValueExpr,
        rhs: ValueExpr,
    },
    /// Anchored regular-expression match (`=~`); the pattern sublanguage is
    /// the image of SQL LIKE: literals, `.` and `.*`.
    Regex { lhs: ValueExpr, pattern: String },
    In {
        lhs: ValueExpr,
        list: ListExpr,
    },
    /// Existence of a pattern, e.g. `(si:singer)-[]-(:song)`.
    PatternExists(Pattern),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
    Not(Box<BoolExpr>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ListExpr {
    Lits(Vec<Value>),
    /// A WITH alias bound to a collected list.
    Ident(String),
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
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

impl CypherQuery {
    /// Aliases bound by MATCH patterns or WITH items, in binding order.
    pub fn bound_aliases(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for c in &self.clauses {
            match c {
                Clause::Match(patterns) => {
                    for p in patterns {
                        if let Some(a) = &p.head.alias {
                            out.push(a.as_str());
                        }
                        for s in &p.steps {
                            if let Some(a) = &s.edge.alias {
                                out.push(a.as_str());
                            }
                            if let Some(a) = &s.node.alias {
                                out.push(a.as_str());
                            }
                        }
                    }
                }
                Clause::With(items) => {
                    for i in items {
                        out.push(i.alias.as_str());
                    }
                }
                Clause::Where(_) => {}
            }
        }
        out
    }
}
