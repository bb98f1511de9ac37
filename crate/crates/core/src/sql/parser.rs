//! Recursive-descent parser for the conjunctive SQL subset.
//!
//! Grammar scope: SELECT [DISTINCT] projections, FROM with INNER JOIN..ON
//! chains and AS aliases, WHERE with =,!=,<,<=,>,>=, LIKE, BETWEEN
//! (desugared into two comparisons), IN / NOT IN over literal lists or a
//! nested select, AND/OR/NOT; GROUP BY, HAVING, ORDER BY, LIMIT, OFFSET,
//! and UNION. Anything else is a [`ParseError`] — a first-class outcome
//! that feeds the valid-score denominator, not a bug.

use thiserror::Error;

use super::ast::*;
use super::lexer::{tokenize, Spanned, Sym, Token};
use crate::value::Value;

#[derive(Debug, Clone, Error)]
#[error("parse error at offset {offset}: expected {}, found {found}", .expected.join(" or "))]
pub struct ParseError {
    pub offset: usize,
    pub expected: Vec<String>,
    pub found: String,
}

pub fn parse_sql(text: &str) -> Result<SelectStmt, ParseError> {
    let tokens = tokenize(text).map_err(|(offset, message)| ParseError {
        offset,
        expected: vec![message],
        found: "invalid input".into(),
    })?;
    let mut p = Parser {
        tokens,
        pos: 0,
        end: text.len(),
    };
    let stmt = p.select_with_union()?;
    p.eat_sym(Sym::Semicolon);
    if let Some(t) = p.peek() {
        return Err(p.error_at(t.offset, &["end of query"]));
    }
    Ok(stmt)
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    end: usize,
}

const RESERVED: &[&str] = &[
    "SELECT", "FROM", "WHERE", "GROUP", "HAVING", "ORDER", "BY", "LIMIT", "OFFSET", "UNION",
    "JOIN", "ON", "AS", "AND", "OR", "NOT", "IN", "LIKE", "BETWEEN", "DISTINCT", "ASC", "DESC",
    "NULL", "COUNT", "AVG", "MAX", "MIN", "SUM", "INNER", "LEFT", "RIGHT", "OUTER", "FULL",
    "CROSS", "INTERSECT", "EXCEPT", "IS", "EXISTS",
];

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.tokens.get(self.pos)
    }

    fn offset(&self) -> usize {
        self.peek().map(|t| t.offset).unwrap_or(self.end)
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        self.error_at(self.offset(), expected)
    }

    fn error_at(&self, offset: usize, expected: &[&str]) -> ParseError {
        ParseError {
            offset,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self
                .peek()
                .map(|t| t.token.describe())
                .unwrap_or_else(|| "end of input".into()),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Spanned { token: Token::Ident(s), .. }) if s.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.error(&[kw]))
        }
    }

    fn at_sym(&self, sym: Sym) -> bool {
        matches!(self.peek(), Some(Spanned { token: Token::Symbol(s), .. }) if *s == sym)
    }

    fn eat_sym(&mut self, sym: Sym) -> bool {
        if self.at_sym(sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, sym: Sym) -> Result<(), ParseError> {
        if self.eat_sym(sym) {
            Ok(())
        } else {
            Err(self.error(&[sym.text()]))
        }
    }

    /// Identifier usable as a name: bare non-reserved word or quoted.
    fn identifier(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Spanned {
                token: Token::Ident(s),
                ..
            }) if !RESERVED.iter().any(|k| s.eq_ignore_ascii_case(k)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            Some(Spanned {
                token: Token::QuotedIdent(s),
                ..
            }) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(&[what])),
        }
    }

    fn select_with_union(&mut self) -> Result<SelectStmt, ParseError> {
        let mut stmt = self.select_core()?;
        {
            let mut tail = &mut stmt;
            while tail.union.is_none() && {
                if self.eat_keyword("UNION") {
                    let rhs = self.select_core()?;
                    tail.union = Some(Box::new(rhs));
                    true
                } else {
                    false
                }
            } {
                tail = tail.union.as_mut().unwrap();
            }
        }
        // trailing ORDER BY / LIMIT / OFFSET applies to the whole statement;
        // after a UNION it belongs to the combined result and is stored on
        // the outermost statement
        if self.eat_keyword("ORDER") {
            self.expect_keyword("BY")?;
            stmt.order_by = self.order_items()?;
        }
        if self.eat_keyword("LIMIT") {
            stmt.limit = Some(self.unsigned_int()?);
        }
        if self.eat_keyword("OFFSET") {
            stmt.offset = Some(self.unsigned_int()?);
        }
        Ok(stmt)
    }

    fn select_core(&mut self) -> Result<SelectStmt, ParseError> {
        self.expect_keyword("SELECT")?;
        let distinct = self.eat_keyword("DISTINCT");
        let mut projections = vec![self.projection()?];
        while self.eat_sym(Sym::Comma) {
            projections.push(self.projection()?);
        }
        self.expect_keyword("FROM")?;
        let from = self.parse_from_clause()?;

        let where_clause = if self.eat_keyword("WHERE") {
            Some(self.expr()?)
        } else {
            None
        };
        let mut group_by = Vec::new();
        if self.eat_keyword("GROUP") {
            self.expect_keyword("BY")?;
            group_by.push(self.column_ref()?);
            while self.eat_sym(Sym::Comma) {
                group_by.push(self.column_ref()?);
            }
        }
        let having = if self.eat_keyword("HAVING") {
            Some(self.expr()?)
        } else {
            None
        };
        Ok(SelectStmt {
            distinct,
            projections,
            from,
            where_clause,
            group_by,
            having,
            order_by: Vec::new(),
            limit: None,
            offset: None,
            union: None,
        })
    }

    fn projection(&mut self) -> Result<Projection, ParseError> {
        if self.eat_sym(Sym::Star) {
            return Ok(Projection::Star);
        }
        if let Some(agg) = self.maybe_aggregate()? {
            return Ok(Projection::Aggregate(agg));
        }
        // alias.* or column ref
        let save = self.pos;
        let first = self.identifier("projection")?;
        if self.eat_sym(Sym::Dot) {
            if self.eat_sym(Sym::Star) {
                return Ok(Projection::TableStar(first));
            }
            let column = self.identifier("column name")?;
            return Ok(Projection::Column(ColumnRef {
                table: Some(first),
                column,
            }));
        }
        self.pos = save;
        Ok(Projection::Column(self.column_ref()?))
    }

    fn maybe_aggregate(&mut self) -> Result<Option<AggCall>, ParseError> {
        let func = match self.peek() {
            Some(Spanned {
                token: Token::Ident(s),
                ..
            }) => match s.to_ascii_uppercase().as_str() {
                "COUNT" => AggFunc::Count,
                "AVG" => AggFunc::Avg,
                "MAX" => AggFunc::Max,
                "MIN" => AggFunc::Min,
                "SUM" => AggFunc::Sum,
                _ => return Ok(None),
            },
            _ => return Ok(None),
        };
        // only an aggregate when a '(' follows
        if !matches!(
            self.tokens.get(self.pos + 1),
            Some(Spanned {
                token: Token::Symbol(Sym::LParen),
                ..
            })
        ) {
            return Ok(None);
        }
        self.pos += 2;
        let distinct = self.eat_keyword("DISTINCT");
        let arg = if self.eat_sym(Sym::Star) {
            if func != AggFunc::Count {
                return Err(self.error(&["column reference"]));
            }
            None
        } else {
            Some(self.column_ref()?)
        };
        self.expect_sym(Sym::RParen)?;
        Ok(Some(AggCall {
            func,
            distinct,
            arg,
        }))
    }

    fn column_ref(&mut self) -> Result<ColumnRef, ParseError> {
        let first = self.identifier("column reference")?;
        if self.eat_sym(Sym::Dot) {
            let column = self.identifier("column name")?;
            Ok(ColumnRef {
                table: Some(first),
                column,
            })
        } else {
            Ok(ColumnRef {
                table: None,
                column: first,
            })
        }
    }

    fn parse_from_clause(&mut self) -> Result<FromClause, ParseError> {
        let base = self.table_ref()?;
        let mut joins = Vec::new();
        loop {
            if self.eat_keyword("JOIN") {
                // plain JOIN
            } else if self.at_keyword("INNER") {
                self.pos += 1;
                self.expect_keyword("JOIN")?;
            } else {
                break;
            }
            let table = self.table_ref()?;
            self.expect_keyword("ON")?;
            let on = self.expr()?;
            joins.push(Join { table, on });
        }
        Ok(FromClause { base, joins })
    }

    fn table_ref(&mut self) -> Result<TableRef, ParseError> {
        let table = self.identifier("table name")?;
        let aliased = self.eat_keyword("AS")
            || matches!(self.peek(), Some(Spanned { token: Token::Ident(s), .. })
                if !RESERVED.iter().any(|k| s.eq_ignore_ascii_case(k)));
        let alias = if aliased {
            Some(self.identifier("alias")?)
        } else {
            None
        };
        Ok(TableRef { table, alias })
    }

    // expr := and_expr (OR and_expr)*
    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.eat_keyword("OR") {
            let rhs = self.and_expr()?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.not_expr()?;
        while self.eat_keyword("AND") {
            let rhs = self.not_expr()?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<Expr, ParseError> {
        if self.eat_keyword("NOT") {
            // NOT directly before a predicate (NOT IN handled in predicate)
            let inner = self.not_expr()?;
            return Ok(Expr::Not(Box::new(inner)));
        }
        if self.at_sym(Sym::LParen) && self.paren_wraps_expr() {
            self.expect_sym(Sym::LParen)?;
            let inner = self.expr()?;
            self.expect_sym(Sym::RParen)?;
            return Ok(inner);
        }
        self.predicate()
    }

    /// Distinguish `(expr ...)` grouping from a nested `(SELECT ...)`:
    /// grouping parentheses are only used around boolean expressions here.
    fn paren_wraps_expr(&self) -> bool {
        !matches!(
            self.tokens.get(self.pos + 1),
            Some(Spanned { token: Token::Ident(s), .. }) if s.eq_ignore_ascii_case("SELECT")
        )
    }

    fn predicate(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.operand()?;
        let negated = self.eat_keyword("NOT");
        if self.eat_keyword("LIKE") {
            let pattern = match self.peek() {
                Some(Spanned {
                    token: Token::Str(s),
                    ..
                }) => {
                    let s = s.clone();
                    self.pos += 1;
                    s
                }
                _ => return Err(self.error(&["string pattern"])),
            };
            return Ok(Expr::Like {
                expr: lhs,
                pattern,
                negated,
            });
        }
        if self.eat_keyword("IN") {
            self.expect_sym(Sym::LParen)?;
            if self.at_keyword("SELECT") {
                let select = self.select_with_union()?;
                self.expect_sym(Sym::RParen)?;
                return Ok(Expr::InSelect {
                    expr: lhs,
                    select: Box::new(select),
                    negated,
                });
            }
            let mut list = vec![self.literal()?];
            while self.eat_sym(Sym::Comma) {
                list.push(self.literal()?);
            }
            self.expect_sym(Sym::RParen)?;
            return Ok(Expr::InList {
                expr: lhs,
                list,
                negated,
            });
        }
        if self.eat_keyword("BETWEEN") {
            let lo = self.operand()?;
            self.expect_keyword("AND")?;
            let hi = self.operand()?;
            let both = Expr::And(
                Box::new(Expr::Cmp {
                    op: CmpOp::Ge,
                    lhs: lhs.clone(),
                    rhs: lo,
                }),
                Box::new(Expr::Cmp {
                    op: CmpOp::Le,
                    lhs,
                    rhs: hi,
                }),
            );
            return Ok(if negated {
                Expr::Not(Box::new(both))
            } else {
                both
            });
        }
        if negated {
            return Err(self.error(&["LIKE", "IN", "BETWEEN"]));
        }
        let op = match self.peek() {
            Some(Spanned {
                token: Token::Symbol(s),
                ..
            }) => match s {
                Sym::Eq => CmpOp::Eq,
                Sym::Ne => CmpOp::Ne,
                Sym::Lt => CmpOp::Lt,
                Sym::Le => CmpOp::Le,
                Sym::Gt => CmpOp::Gt,
                Sym::Ge => CmpOp::Ge,
                _ => return Err(self.error(&["comparison operator"])),
            },
            _ => return Err(self.error(&["comparison operator"])),
        };
        self.pos += 1;
        let rhs = self.operand()?;
        Ok(Expr::Cmp { op, lhs, rhs })
    }

    fn operand(&mut self) -> Result<Operand, ParseError> {
        if let Some(agg) = self.maybe_aggregate()? {
            return Ok(Operand::Agg(agg));
        }
        match self.peek() {
            Some(Spanned {
                token: Token::Int(i),
                ..
            }) => {
                let v = *i;
                self.pos += 1;
                Ok(Operand::Lit(Value::Int(v)))
            }
            Some(Spanned {
                token: Token::Float(f),
                ..
            }) => {
                let v = *f;
                self.pos += 1;
                Ok(Operand::Lit(Value::Float(v)))
            }
            Some(Spanned {
                token: Token::Str(s),
                ..
            }) => {
                let v = s.clone();
                self.pos += 1;
                Ok(Operand::Lit(Value::Text(v)))
            }
            Some(Spanned {
                token: Token::Ident(s),
                ..
            }) if s.eq_ignore_ascii_case("NULL") => {
                self.pos += 1;
                Ok(Operand::Lit(Value::Null))
            }
            _ => Ok(Operand::Column(self.column_ref()?)),
        }
    }

    fn literal(&mut self) -> Result<Value, ParseError> {
        match self.operand()? {
            Operand::Lit(v) => Ok(v),
            _ => Err(self.error(&["literal"])),
        }
    }

    fn order_items(&mut self) -> Result<Vec<OrderItem>, ParseError> {
        let mut items = vec![self.order_item()?];
        while self.eat_sym(Sym::Comma) {
            items.push(self.order_item()?);
        }
        Ok(items)
    }

    fn order_item(&mut self) -> Result<OrderItem, ParseError> {
        let expr = self.operand()?;
        let desc = if self.eat_keyword("DESC") {
            true
        } else {
            self.eat_keyword("ASC");
            false
        };
        Ok(OrderItem { expr, desc })
    }

    fn unsigned_int(&mut self) -> Result<u64, ParseError> {
        match self.peek() {
            Some(Spanned {
                token: Token::Int(i),
                ..
            }) if *i >= 0 => {
                let v = *i as u64;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.error(&["non-negative integer"])),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn not_in_nested_select() {
        let stmt = parse_sql(
            "SELECT Name FROM singer WHERE Singer_ID NOT IN (SELECT Singer_ID FROM song)",
        )
        .unwrap();
        assert_eq!(stmt.projections.len(), 1);
        match stmt.where_clause.unwrap() {
            Expr::InSelect {
                negated, select, ..
            } => {
                assert!(negated);
                assert_eq!(select.from.base.table, "song");
            }
            other => panic!("unexpected where: {other:?}"),
        }
    }

    #[test]
    fn join_group_order_by_aggregate_limit() {
        let stmt = parse_sql(
            "SELECT T1.skill_id, T1.skill_description FROM Skills AS T1 \
             JOIN Skills_Required_To_Fix AS T2 ON T1.skill_id = T2.skill_id \
             GROUP BY T1.skill_id ORDER BY count(*) DESC LIMIT 1",
        )
        .unwrap();
        assert_eq!(stmt.from.joins.len(), 1);
        assert_eq!(stmt.group_by.len(), 1);
        assert_eq!(stmt.order_by.len(), 1);
        assert!(stmt.order_by[0].desc);
        assert!(matches!(stmt.order_by[0].expr, Operand::Agg(_)));
        assert_eq!(stmt.limit, Some(1));
    }

    #[test]
    fn misspelled_select_fails_at_offset_zero() {
        let err = parse_sql("SELEC x FROM t").unwrap_err();
        assert_eq!(err.offset, 0);
    }

    #[test]
    fn keywords_are_case_insensitive() {
        let lower = parse_sql("select a from t where a > 1 order by a limit 2 offset 1").unwrap();
        let upper = parse_sql("SELECT a FROM t WHERE a > 1 ORDER BY a LIMIT 2 OFFSET 1").unwrap();
        assert_eq!(lower, upper);
    }

    #[test]
    fn between_desugars_to_two_comparisons() {
        let stmt = parse_sql("SELECT a FROM t WHERE a BETWEEN 1 AND 3").unwrap();
        match stmt.where_clause.unwrap() {
            Expr::And(lo, hi) => {
                assert!(matches!(*lo, Expr::Cmp { op: CmpOp::Ge, .. }));
                assert!(matches!(*hi, Expr::Cmp { op: CmpOp::Le, .. }));
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn union_with_trailing_order_by() {
        let stmt = parse_sql("SELECT a FROM t UNION SELECT b FROM u ORDER BY a LIMIT 2").unwrap();
        assert!(stmt.union.is_some());
        assert_eq!(stmt.order_by.len(), 1);
        assert_eq!(stmt.limit, Some(2));
    }

    #[test]
    fn unsupported_constructs_fail() {
        assert!(parse_sql("SELECT a + 1 FROM t").is_err());
        assert!(parse_sql("SELECT a FROM t LEFT JOIN u ON t.a = u.a").is_err());
        assert!(parse_sql("SELECT a FROM t, u").is_err());
        assert!(parse_sql("INSERT INTO t VALUES (1)").is_err());
    }
}
