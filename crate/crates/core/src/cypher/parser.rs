//! Parser for the Cypher subset the renderer emits: MATCH patterns, WHERE
//! with comparisons / regex / IN / pattern existence, WITH items, RETURN
//! with ORDER BY, LIMIT, SKIP, and UNION.

use thiserror::Error;

use super::ast::*;
use crate::value::Value;

#[derive(Debug, Clone, Error)]
#[error("cypher parse error at offset {offset}: {message}")]
pub struct CypherParseError {
    pub offset: usize,
    pub message: String,
}

pub fn parse_cypher(text: &str) -> Result<CypherQuery, CypherParseError> {
    let tokens = lex(text)?;
    let mut p = CyParser { tokens, pos: 0 };
    let q = p.query()?;
    if p.pos < p.tokens.len() {
        return Err(p.err("trailing input after query"));
    }
    Ok(q)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Quoted(String),
    Int(i64),
    Float(f64),
    Str(String),
    Punct(&'static str),
}

#[derive(Debug, Clone)]
struct Sp {
    tok: Tok,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Sp>, CypherParseError> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0usize;
    while i < b.len() {
        let start = i;
        let c = b[i];
        let punct = |p: &'static str, len: usize, i: &mut usize, out: &mut Vec<Sp>| {
            out.push(Sp {
                tok: Tok::Punct(p),
                offset: start,
            });
            *i += len;
        };
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'\'' => {
                let mut s = String::new();
                i += 1;
                loop {
                    if i >= b.len() {
                        return Err(CypherParseError {
                            offset: start,
                            message: "unterminated string".into(),
                        });
                    }
                    match b[i] {
                        b'\\' if i + 1 < b.len() => {
                            s.push(b[i + 1] as char);
                            i += 2;
                        }
                        b'\'' => {
                            i += 1;
                            break;
                        }
                        ch => {
                            s.push(ch as char);
                            i += 1;
                        }
                    }
                }
                out.push(Sp {
                    tok: Tok::Str(s),
                    offset: start,
                });
            }
            b'`' => {
                let mut s = String::new();
                i += 1;
                while i < b.len() && b[i] != b'`' {
                    s.push(b[i] as char);
                    i += 1;
                }
                if i >= b.len() {
                    return Err(CypherParseError {
                        offset: start,
                        message: "unterminated backquoted identifier".into(),
                    });
                }
                i += 1;
                out.push(Sp {
                    tok: Tok::Quoted(s),
                    offset: start,
                });
            }
            b'(' => punct("(", 1, &mut i, &mut out),
            b')' => punct(")", 1, &mut i, &mut out),
            b'[' => punct("[", 1, &mut i, &mut out),
            b']' => punct("]", 1, &mut i, &mut out),
            b'{' => punct("{", 1, &mut i, &mut out),
            b'}' => punct("}", 1, &mut i, &mut out),
            b',' => punct(",", 1, &mut i, &mut out),
            b':' => punct(":", 1, &mut i, &mut out),
            b'*' => punct("*", 1, &mut i, &mut out),
            b'.' if !(i + 1 < b.len() && b[i + 1].is_ascii_digit()) => {
                punct(".", 1, &mut i, &mut out)
            }
            b'-' if i + 1 < b.len() && b[i + 1] == b'[' => punct("-[", 2, &mut i, &mut out),
            b'=' if i + 1 < b.len() && b[i + 1] == b'~' => punct("=~", 2, &mut i, &mut out),
            b'=' => punct("=", 1, &mut i, &mut out),
            b'<' if i + 1 < b.len() && b[i + 1] == b'>' => punct("<>", 2, &mut i, &mut out),
            b'<' if i + 1 < b.len() && b[i + 1] == b'=' => punct("<=", 2, &mut i, &mut out),
            b'<' => punct("<", 1, &mut i, &mut out),
            b'>' if i + 1 < b.len() && b[i + 1] == b'=' => punct(">=", 2, &mut i, &mut out),
            b'>' => punct(">", 1, &mut i, &mut out),
            _ if c.is_ascii_digit()
                || (c == b'-' && i + 1 < b.len() && (b[i + 1].is_ascii_digit() || b[i + 1] == b'.'))
                || (c == b'.' && i + 1 < b.len() && b[i + 1].is_ascii_digit()) =>
            {
                i += 1;
                while i < b.len()
                    && (b[i].is_ascii_digit()
                        || b[i] == b'.'
                        || b[i] == b'e'
                        || b[i] == b'E'
                        || ((b[i] == b'+' || b[i] == b'-')
                            && matches!(b[i - 1], b'e' | b'E')))
                {
                    i += 1;
                }
                let t = &text[start..i];
                let tok = if let Ok(v) = t.parse::<i64>() {
                    Tok::Int(v)
                } else if let Ok(v) = t.parse::<f64>() {
                    Tok::Float(v)
                } else {
                    return Err(CypherParseError {
                        offset: start,
                        message: format!("bad number `{t}`"),
                    });
                };
                out.push(Sp { tok, offset: start });
            }
            b'-' => punct("-", 1, &mut i, &mut out),
            _ if c.is_ascii_alphabetic() || c == b'_' => {
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                    i += 1;
                }
                out.push(Sp {
                    tok: Tok::Ident(text[start..i].to_string()),
                    offset: start,
                });
            }
            _ => {
                return Err(CypherParseError {
                    offset: start,
                    message: format!("unexpected character `{}`", c as char),
                })
            }
        }
    }
    Ok(out)
}

struct CyParser {
    tokens: Vec<Sp>,
    pos: usize,
}

impl CyParser {
    fn err(&self, message: impl Into<String>) -> CypherParseError {
        CypherParseError {
            offset: self.tokens.get(self.pos).map(|t| t.offset).unwrap_or(0),
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|s| &s.tok)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), CypherParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.err(format!("expected {kw}")))
        }
    }

    fn at_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(s)) if *s == p)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.at_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), CypherParseError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{p}`")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, CypherParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            Some(Tok::Quoted(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn query(&mut self) -> Result<CypherQuery, CypherParseError> {
        let mut clauses = Vec::new();
        loop {
            if self.eat_kw("MATCH") {
                let mut patterns = vec![self.pattern()?];
                while self.eat_punct(",") {
                    patterns.push(self.pattern()?);
                }
                clauses.push(Clause::Match(patterns));
            } else if self.eat_kw("WHERE") {
                clauses.push(Clause::Where(self.bool_expr()?));
            } else if self.eat_kw("WITH") {
                let mut items = vec![self.with_item()?];
                while self.eat_punct(",") {
                    items.push(self.with_item()?);
                }
                clauses.push(Clause::With(items));
            } else {
                break;
            }
        }
        self.expect_kw("RETURN")?;
        let distinct = self.eat_kw("DISTINCT");
        let mut items = vec![self.value_expr()?];
        while self.eat_punct(",") {
            items.push(self.value_expr()?);
        }
        let mut order_by = Vec::new();
        if self.eat_kw("ORDER") {
            self.expect_kw("BY")?;
            loop {
                let expr = self.value_expr()?;
                let desc = if self.eat_kw("DESC") {
                    true
                } else {
                    self.eat_kw("ASC");
                    false
                };
                order_by.push(OrderSpec { expr, desc });
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        let limit = if self.eat_kw("LIMIT") {
            Some(self.unsigned()?)
        } else {
            None
        };
        let skip = if self.eat_kw("SKIP") {
            Some(self.unsigned()?)
        } else {
            None
        };
        let union = if self.eat_kw("UNION") {
            Some(Box::new(self.query()?))
        } else {
            None
        };
        Ok(CypherQuery {
            clauses,
            ret: Return {
                distinct,
                items,
                order_by,
                limit,
                skip,
            },
            union,
        })
    }

    fn unsigned(&mut self) -> Result<u64, CypherParseError> {
        match self.peek() {
            Some(Tok::Int(i)) if *i >= 0 => {
                let v = *i as u64;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.err("expected a non-negative integer")),
        }
    }

    fn pattern(&mut self) -> Result<Pattern, CypherParseError> {
        let head = self.node_atom()?;
        let mut steps = Vec::new();
        while self.at_punct("-[") {
            let edge = self.edge_atom()?;
            let node = self.node_atom()?;
            steps.push(PatternStep { edge, node });
        }
        Ok(Pattern { head, steps })
    }

    fn node_atom(&mut self) -> Result<NodeAtom, CypherParseError> {
        self.expect_punct("(")?;
        let alias = if matches!(self.peek(), Some(Tok::Ident(_)) | Some(Tok::Quoted(_))) {
            Some(self.ident("alias")?)
        } else {
            None
        };
        let label = if self.eat_punct(":") {
            Some(self.ident("label")?)
        } else {
            None
        };
        self.expect_punct(")")?;
        Ok(NodeAtom { alias, label })
    }

    fn edge_atom(&mut self) -> Result<EdgeAtom, CypherParseError> {
        self.expect_punct("-[")?;
        let alias = if matches!(self.peek(), Some(Tok::Ident(_)) | Some(Tok::Quoted(_))) {
            Some(self.ident("alias")?)
        } else {
            None
        };
        let edge_type = if self.eat_punct(":") {
            Some(self.ident("edge type")?)
        } else {
            None
        };
        let mut props = Vec::new();
        if self.eat_punct("{") {
            loop {
                let key = self.ident("property key")?;
                self.expect_punct(":")?;
                let value = self.literal()?;
                props.push((key, value));
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect_punct("}")?;
        }
        self.expect_punct("]")?;
        self.expect_punct("-")?;
        Ok(EdgeAtom {
            alias,
            edge_type,
            props,
        })
    }

    fn literal(&mut self) -> Result<Value, CypherParseError> {
        match self.peek().cloned() {
            Some(Tok::Int(i)) => {
                self.pos += 1;
                Ok(Value::Int(i))
            }
            Some(Tok::Float(f)) => {
                self.pos += 1;
                Ok(Value::Float(f))
            }
            Some(Tok::Str(s)) => {
                self.pos += 1;
                Ok(Value::Text(s))
            }
            Some(Tok::Ident(s)) if s.eq_ignore_ascii_case("null") => {
                self.pos += 1;
                Ok(Value::Null)
            }
            _ => Err(self.err("expected a literal")),
        }
    }

    fn with_item(&mut self) -> Result<WithItem, CypherParseError> {
        let expr = self.value_expr()?;
        self.expect_kw("AS")?;
        let alias = self.ident("alias")?;
        Ok(WithItem { expr, alias })
    }

    fn value_expr(&mut self) -> Result<ValueExpr, CypherParseError> {
        if let Some(Tok::Ident(name)) = self.peek() {
            let lower = name.to_ascii_lowercase();
            let func = match lower.as_str() {
                "count" => Some(AggFunc::Count),
                "avg" => Some(AggFunc::Avg),
                "max" => Some(AggFunc::Max),
                "min" => Some(AggFunc::Min),
                "sum" => Some(AggFunc::Sum),
                "collect" => Some(AggFunc::Collect),
                _ => None,
            };
            if let Some(func) = func {
                if matches!(self.tokens.get(self.pos + 1).map(|s| &s.tok), Some(Tok::Punct("("))) {
                    self.pos += 2;
                    let distinct = self.eat_kw("DISTINCT");
                    let arg = if self.eat_punct("*") {
                        None
                    } else {
                        Some(Box::new(self.value_expr()?))
                    };
                    self.expect_punct(")")?;
                    return Ok(ValueExpr::Agg {
                        func,
                        distinct,
                        arg,
                    });
                }
            }
        }
        match self.peek().cloned() {
            Some(Tok::Ident(_)) | Some(Tok::Quoted(_)) => {
                let name = self.ident("identifier")?;
                if name.eq_ignore_ascii_case("null") {
                    return Ok(ValueExpr::Lit(Value::Null));
                }
                if self.eat_punct(".") {
                    let key = self.ident("property key")?;
                    Ok(ValueExpr::Prop { alias: name, key })
                } else {
                    Ok(ValueExpr::Ident(name))
                }
            }
            _ => Ok(ValueExpr::Lit(self.literal()?)),
        }
    }

    // precedence: OR < AND < NOT < atom
    fn bool_expr(&mut self) -> Result<BoolExpr, CypherParseError> {
        let mut lhs = self.bool_and()?;
        while self.eat_kw("OR") {
            let rhs = self.bool_and()?;
            lhs = BoolExpr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn bool_and(&mut self) -> Result<BoolExpr, CypherParseError> {
        let mut lhs = self.bool_not()?;
        while self.eat_kw("AND") {
            let rhs = self.bool_not()?;
            lhs = BoolExpr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn bool_not(&mut self) -> Result<BoolExpr, CypherParseError> {
        if self.eat_kw("NOT") {
            // NOT (..) is grouping unless it opens a pattern
            if self.at_punct("(") && !self.paren_opens_pattern() {
                self.expect_punct("(")?;
                let inner = self.bool_expr()?;
                self.expect_punct(")")?;
                return Ok(BoolExpr::Not(Box::new(inner)));
            }
            let inner = self.bool_not()?;
            return Ok(BoolExpr::Not(Box::new(inner)));
        }
        if self.at_punct("(") {
            if self.paren_opens_pattern() {
                let p = self.pattern()?;
                return Ok(BoolExpr::PatternExists(p));
            }
            self.expect_punct("(")?;
            let inner = self.bool_expr()?;
            self.expect_punct(")")?;
            return Ok(inner);
        }
        let lhs = self.value_expr()?;
        if self.eat_punct("=~") {
            let pattern = match self.peek().cloned() {
                Some(Tok::Str(s)) => {
                    self.pos += 1;
                    s
                }
                _ => return Err(self.err("expected a string pattern after =~")),
            };
            return Ok(BoolExpr::Regex { lhs, pattern });
        }
        if self.eat_kw("IN") {
            let list = if self.eat_punct("[") {
                let mut items = Vec::new();
                if !self.at_punct("]") {
                    items.push(self.literal()?);
                    while self.eat_punct(",") {
                        items.push(self.literal()?);
                    }
                }
                self.expect_punct("]")?;
                ListExpr::Lits(items)
            } else {
                ListExpr::Ident(self.ident("list identifier")?)
            };
            return Ok(BoolExpr::In { lhs, list });
        }
        let op = match self.peek() {
            Some(Tok::Punct("=")) => CmpOp::Eq,
            Some(Tok::Punct("<>")) => CmpOp::Ne,
            Some(Tok::Punct("<")) => CmpOp::Lt,
            Some(Tok::Punct("<=")) => CmpOp::Le,
            Some(Tok::Punct(">")) => CmpOp::Gt,
            Some(Tok::Punct(">=")) => CmpOp::Ge,
            _ => return Err(self.err("expected a comparison operator")),
        };
        self.pos += 1;
        let rhs = self.value_expr()?;
        Ok(BoolExpr::Cmp { op, lhs, rhs })
    }

    /// A `(` starts a pattern when the parenthesized prefix looks like a
    /// node atom followed by an edge or when a label sigil appears inside.
    fn paren_opens_pattern(&self) -> bool {
        let mut i = self.pos;
        debug_assert!(matches!(self.tokens.get(i).map(|s| &s.tok), Some(Tok::Punct("("))));
        i += 1;
        if matches!(
            self.tokens.get(i).map(|s| &s.tok),
            Some(Tok::Ident(_)) | Some(Tok::Quoted(_))
        ) {
            i += 1;
        }
        if matches!(self.tokens.get(i).map(|s| &s.tok), Some(Tok::Punct(":"))) {
            return true;
        }
        if matches!(self.tokens.get(i).map(|s| &s.tok), Some(Tok::Punct(")"))) {
            // `()` or `(x)` — a pattern only if an edge follows
            return matches!(
                self.tokens.get(i + 1).map(|s| &s.tok),
                Some(Tok::Punct("-["))
            );
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cypher::render_cypher;

    fn fixpoint(text: &str) {
        let q1 = parse_cypher(text).unwrap_or_else(|e| panic!("parse `{text}`: {e}"));
        let rendered = render_cypher(&q1);
        let q2 = parse_cypher(&rendered)
            .unwrap_or_else(|e| panic!("reparse `{rendered}`: {e}"));
        assert_eq!(q1, q2, "`{text}` -> `{rendered}` is not a fixpoint");
        assert_eq!(rendered, render_cypher(&q2));
    }

    #[test]
    fn parses_the_pattern_forms() {
        fixpoint("MATCH (T1:department) RETURN T1.Name");
        fixpoint("MATCH (T1:department)-[T2:management]-() RETURN count(*)");
        fixpoint(
            "MATCH (T1:department)-[T2:management {temporary_acting: 'Yes'}]-() RETURN T1.Name",
        );
        fixpoint("MATCH (si:singer) WHERE NOT (si:singer)-[]-(:song) RETURN si.Name");
    }

    #[test]
    fn parses_with_grouping_and_union() {
        fixpoint(
            "MATCH (T1:department)-[T2:management]-() WITH T1.Department_ID AS id, \
             T1.Name AS name, count(*) AS c WHERE c > 1 RETURN id, name, c",
        );
        fixpoint("MATCH (a:t) RETURN a.x UNION MATCH (b:u) RETURN b.y");
        fixpoint("MATCH (a:t) RETURN DISTINCT a.x ORDER BY a.x DESC LIMIT 2 SKIP 1");
        fixpoint("MATCH (c:child) WHERE c.v > 3 WITH collect(c.fk) AS vals MATCH (a:t) WHERE NOT a.id IN vals RETURN a.name");
        fixpoint("MATCH (a:`db.singer`) WHERE a.Name =~ 'Jo.*' RETURN a.`Name`");
        fixpoint("MATCH (a:t) WHERE a.x IN [1, 2.5, 'z'] AND (a.y = 1 OR NOT (a.z <> 2)) RETURN a.x");
    }

    #[test]
    fn rejects_trailing_garbage() {
        assert!(parse_cypher("MATCH (a:t) RETURN a.x exuberance").is_err());
        assert!(parse_cypher("RETURN").is_err());
    }
}
