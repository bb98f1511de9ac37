//! Loader for SQL schema dumps in the common SQLite dialect subset:
//! `CREATE TABLE` with column definitions, table- or column-level
//! `PRIMARY KEY`, `FOREIGN KEY ... REFERENCES ...`, followed by
//! `INSERT INTO ... VALUES ...` statements.
//!
//! Statements that fall outside the subset (indexes, views, triggers,
//! pragmas) are skipped with a warning, never silently dropped. Only a
//! malformed `CREATE TABLE` is a hard error.

use thiserror::Error;

use super::{Column, ForeignKey, KeyOrigin, RelationalDatabase, Row, Table, TypeTag};
use crate::value::Value;

#[derive(Debug, Error)]
#[error("syntax error in CREATE TABLE at offset {offset}: {message}")]
pub struct DumpSyntaxError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DumpWarning {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug)]
pub struct DumpLoad {
    pub db: RelationalDatabase,
    pub warnings: Vec<DumpWarning>,
}

/// Parse a UTF-8 SQL script into a database. The database name is left
/// empty; callers set it from the source file or a `--domain` flag.
pub fn load_sql_dump(text: &str) -> Result<DumpLoad, DumpSyntaxError> {
    let mut db = RelationalDatabase::new("");
    let mut warnings = Vec::new();

    for (offset, stmt) in split_statements(text) {
        let toks = match tokenize(&stmt) {
            Ok(t) => t,
            Err(msg) => {
                warnings.push(DumpWarning {
                    offset,
                    message: format!("skipped unreadable statement: {msg}"),
                });
                continue;
            }
        };
        if toks.is_empty() {
            continue;
        }
        if keyword_at(&toks, 0, "CREATE") && keyword_at(&toks, 1, "TABLE") {
            let table = parse_create_table(&toks, offset)?;
            if db.table(&table.name).is_some() {
                return Err(DumpSyntaxError {
                    offset,
                    message: format!("duplicate table name `{}`", table.name),
                });
            }
            db.tables.push(table);
        } else if keyword_at(&toks, 0, "INSERT") && keyword_at(&toks, 1, "INTO") {
            if let Err(msg) = apply_insert(&mut db, &toks) {
                warnings.push(DumpWarning {
                    offset,
                    message: format!("skipped INSERT: {msg}"),
                });
            }
        } else {
            let head: Vec<&str> = toks
                .iter()
                .take(2)
                .map(|t| t.text.as_str())
                .collect();
            warnings.push(DumpWarning {
                offset,
                message: format!("skipped unsupported statement `{}`", head.join(" ")),
            });
        }
    }

    resolve_default_fk_columns(&mut db, &mut warnings);
    Ok(DumpLoad { db, warnings })
}

/// FOREIGN KEY clauses may omit the referenced column list, meaning "the
/// target's primary key". Resolve those once all tables are loaded.
fn resolve_default_fk_columns(db: &mut RelationalDatabase, warnings: &mut Vec<DumpWarning>) {
    let pk_by_table: Vec<(String, Vec<String>)> = db
        .tables
        .iter()
        .map(|t| (t.name.clone(), t.primary_key.clone()))
        .collect();
    for table in &mut db.tables {
        for fk in &mut table.foreign_keys {
            // unresolved targets are recorded, never fatal; repair or the
            // build log picks them up later
            if !pk_by_table
                .iter()
                .any(|(n, _)| n.eq_ignore_ascii_case(&fk.referenced_table))
            {
                warnings.push(DumpWarning {
                    offset: 0,
                    message: format!(
                        "foreign key {} on `{}` references an unknown table",
                        fk.describe(),
                        table.name
                    ),
                });
            }
            if fk.referenced_columns.is_empty() {
                let target = pk_by_table
                    .iter()
                    .find(|(n, _)| n.eq_ignore_ascii_case(&fk.referenced_table));
                match target {
                    Some((_, pk)) if pk.len() == fk.columns.len() => {
                        fk.referenced_columns = pk.clone();
                    }
                    _ => warnings.push(DumpWarning {
                        offset: 0,
                        message: format!(
                            "foreign key {} on `{}` has no referenced columns and the target key is unavailable",
                            fk.describe(),
                            table.name
                        ),
                    }),
                }
            }
        }
    }
}

// ───────────────────────── statement splitting ─────────────────────────

/// Split on `;` at top level, honoring quotes and `--` / `/* */` comments.
/// Returns (byte offset, statement text) pairs.
fn split_statements(text: &str) -> Vec<(usize, String)> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < bytes.len() {
        match bytes[i] {
            b'\'' | b'"' | b'`' => {
                let quote = bytes[i];
                i += 1;
                while i < bytes.len() {
                    if bytes[i] == quote {
                        // '' escapes a quote inside single-quoted strings
                        if quote == b'\'' && i + 1 < bytes.len() && bytes[i + 1] == b'\'' {
                            i += 2;
                            continue;
                        }
                        break;
                    }
                    i += 1;
                }
            }
            b'[' => {
                while i < bytes.len() && bytes[i] != b']' {
                    i += 1;
                }
            }
            b'-' if i + 1 < bytes.len() && bytes[i + 1] == b'-' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            b'/' if i + 1 < bytes.len() && bytes[i + 1] == b'*' => {
                i += 2;
                while i + 1 < bytes.len() && !(bytes[i] == b'*' && bytes[i + 1] == b'/') {
                    i += 1;
                }
                i += 1;
            }
            b';' => {
                let stmt = &text[start..i];
                if !stmt.trim().is_empty() {
                    let lead = stmt.len() - stmt.trim_start().len();
                    out.push((start + lead, stmt.trim().to_string()));
                }
                start = i + 1;
            }
            _ => {}
        }
        i += 1;
    }
    let tail = &text[start.min(text.len())..];
    if !tail.trim().is_empty() {
        let lead = tail.len() - tail.trim_start().len();
        out.push((start + lead, tail.trim().to_string()));
    }
    out
}

// ───────────────────────── tokens ─────────────────────────

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Ident,
    QuotedIdent,
    Number,
    Str,
    Punct,
}

#[derive(Debug, Clone)]
struct Tok {
    kind: TokKind,
    text: String,
}

fn keyword_at(toks: &[Tok], i: usize, kw: &str) -> bool {
    toks.get(i)
        .map(|t| t.kind == TokKind::Ident && t.text.eq_ignore_ascii_case(kw))
        .unwrap_or(false)
}

fn tokenize(stmt: &str) -> Result<Vec<Tok>, String> {
    let b = stmt.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0usize;
    while i < b.len() {
        let c = b[i];
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'-' if i + 1 < b.len() && b[i + 1] == b'-' => {
                while i < b.len() && b[i] != b'\n' {
                    i += 1;
                }
            }
            b'\'' => {
                let mut s = String::new();
                i += 1;
                loop {
                    if i >= b.len() {
                        return Err("unterminated string literal".into());
                    }
                    if b[i] == b'\'' {
                        if i + 1 < b.len() && b[i + 1] == b'\'' {
                            s.push('\'');
                            i += 2;
                            continue;
                        }
                        i += 1;
                        break;
                    }
                    s.push(b[i] as char);
                    i += 1;
                }
                toks.push(Tok {
                    kind: TokKind::Str,
                    text: s,
                });
            }
            b'"' | b'`' => {
                let quote = c;
                let mut s = String::new();
                i += 1;
                while i < b.len() && b[i] != quote {
                    s.push(b[i] as char);
                    i += 1;
                }
                if i >= b.len() {
                    return Err("unterminated quoted identifier".into());
                }
                i += 1;
                toks.push(Tok {
                    kind: TokKind::QuotedIdent,
                    text: s,
                });
            }
            b'[' => {
                let mut s = String::new();
                i += 1;
                while i < b.len() && b[i] != b']' {
                    s.push(b[i] as char);
                    i += 1;
                }
                if i >= b.len() {
                    return Err("unterminated [identifier]".into());
                }
                i += 1;
                toks.push(Tok {
                    kind: TokKind::QuotedIdent,
                    text: s,
                });
            }
            b'(' | b')' | b',' | b'.' | b'=' | b'*' => {
                toks.push(Tok {
                    kind: TokKind::Punct,
                    text: (c as char).to_string(),
                });
                i += 1;
            }
            _ if c.is_ascii_digit()
                || ((c == b'-' || c == b'+')
                    && i + 1 < b.len()
                    && (b[i + 1].is_ascii_digit() || b[i + 1] == b'.'))
                || (c == b'.' && i + 1 < b.len() && b[i + 1].is_ascii_digit()) =>
            {
                let start = i;
                i += 1;
                while i < b.len()
                    && (b[i].is_ascii_alphanumeric()
                        || b[i] == b'.'
                        || b[i] == b'+'
                        || b[i] == b'-' && matches!(b[i - 1], b'e' | b'E'))
                {
                    i += 1;
                }
                toks.push(Tok {
                    kind: TokKind::Number,
                    text: stmt[start..i].to_string(),
                });
            }
            _ if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                    i += 1;
                }
                toks.push(Tok {
                    kind: TokKind::Ident,
                    text: stmt[start..i].to_string(),
                });
            }
            _ => {
                // tolerate stray punctuation inside skipped statements
                toks.push(Tok {
                    kind: TokKind::Punct,
                    text: (c as char).to_string(),
                });
                i += 1;
            }
        }
    }
    Ok(toks)
}

// ───────────────────────── CREATE TABLE ─────────────────────────

struct Cursor<'a> {
    toks: &'a [Tok],
    pos: usize,
    offset: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if keyword_at(self.toks, self.pos, kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if let Some(t) = self.peek() {
            if t.kind == TokKind::Punct && t.text == p {
                self.pos += 1;
                return true;
            }
        }
        false
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), DumpSyntaxError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{p}`")))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<String, DumpSyntaxError> {
        match self.peek() {
            Some(t) if matches!(t.kind, TokKind::Ident | TokKind::QuotedIdent) => {
                let s = t.text.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn err(&self, message: String) -> DumpSyntaxError {
        DumpSyntaxError {
            offset: self.offset,
            message,
        }
    }
}

fn parse_create_table(toks: &[Tok], offset: usize) -> Result<Table, DumpSyntaxError> {
    let mut cur = Cursor {
        toks,
        pos: 2,
        offset,
    };
    if cur.eat_kw("IF") {
        // IF NOT EXISTS
        cur.eat_kw("NOT");
        cur.eat_kw("EXISTS");
    }
    let name = cur.expect_ident("table name")?;
    let mut table = Table::new(name);
    cur.expect_punct("(")?;

    loop {
        if cur.eat_kw("PRIMARY") {
            if !cur.eat_kw("KEY") {
                return Err(cur.err("expected KEY after PRIMARY".into()));
            }
            cur.expect_punct("(")?;
            table.primary_key = parse_ident_list(&mut cur)?;
        } else if cur.eat_kw("FOREIGN") {
            if !cur.eat_kw("KEY") {
                return Err(cur.err("expected KEY after FOREIGN".into()));
            }
            cur.expect_punct("(")?;
            let columns = parse_ident_list(&mut cur)?;
            if !cur.eat_kw("REFERENCES") {
                return Err(cur.err("expected REFERENCES".into()));
            }
            let referenced_table = cur.expect_ident("referenced table name")?;
            let referenced_columns = if cur.eat_punct("(") {
                parse_ident_list(&mut cur)?
            } else {
                Vec::new()
            };
            skip_to_item_end(&mut cur);
            table.foreign_keys.push(ForeignKey {
                columns,
                referenced_table,
                referenced_columns,
                origin: KeyOrigin::Declared,
            });
        } else if cur.eat_kw("UNIQUE") || cur.eat_kw("CHECK") || cur.eat_kw("CONSTRAINT") {
            skip_to_item_end(&mut cur);
        } else {
            parse_column_def(&mut cur, &mut table)?;
        }

        if cur.eat_punct(",") {
            continue;
        }
        cur.expect_punct(")")?;
        break;
    }
    if table.columns.is_empty() {
        return Err(cur.err(format!("table `{}` has no columns", table.name)));
    }
    Ok(table)
}

fn parse_ident_list(cur: &mut Cursor<'_>) -> Result<Vec<String>, DumpSyntaxError> {
    let mut out = Vec::new();
    loop {
        out.push(cur.expect_ident("column name")?);
        if cur.eat_punct(",") {
            continue;
        }
        cur.expect_punct(")")?;
        return Ok(out);
    }
}

/// Column definition: name, type tokens, then attribute tokens up to the
/// next top-level comma. `PRIMARY KEY` and `REFERENCES t(c)` attributes are
/// extracted; the rest (NOT NULL, DEFAULT, UNIQUE, ...) is ignored.
fn parse_column_def(cur: &mut Cursor<'_>, table: &mut Table) -> Result<(), DumpSyntaxError> {
    let name = cur.expect_ident("column name")?;
    let mut type_words: Vec<String> = Vec::new();
    let mut depth = 0usize;
    loop {
        let Some(t) = cur.peek() else {
            return Err(cur.err("unexpected end of CREATE TABLE".into()));
        };
        match (&t.kind, t.text.as_str()) {
            (TokKind::Punct, ",") | (TokKind::Punct, ")") if depth == 0 => break,
            (TokKind::Punct, "(") => {
                depth += 1;
                cur.bump();
            }
            (TokKind::Punct, ")") => {
                depth -= 1;
                cur.bump();
            }
            (TokKind::Ident, w) if w.eq_ignore_ascii_case("PRIMARY") => {
                cur.bump();
                if !cur.eat_kw("KEY") {
                    return Err(cur.err("expected KEY after PRIMARY".into()));
                }
                if !table
                    .primary_key
                    .iter()
                    .any(|c| c.eq_ignore_ascii_case(&name))
                {
                    table.primary_key.push(name.clone());
                }
            }
            (TokKind::Ident, w) if w.eq_ignore_ascii_case("REFERENCES") => {
                cur.bump();
                let referenced_table = cur.expect_ident("referenced table name")?;
                let referenced_columns = if cur.eat_punct("(") {
                    parse_ident_list(cur)?
                } else {
                    Vec::new()
                };
                table.foreign_keys.push(ForeignKey {
                    columns: vec![name.clone()],
                    referenced_table,
                    referenced_columns,
                    origin: KeyOrigin::Declared,
                });
            }
            _ => {
                if type_words.len() < 3 && matches!(t.kind, TokKind::Ident | TokKind::Number) {
                    type_words.push(t.text.clone());
                }
                cur.bump();
            }
        }
    }
    let type_tag = map_type_tag(&type_words.join(" "));
    table.columns.push(Column::new(name, type_tag));
    Ok(())
}

/// Consume tokens (FK actions, CHECK bodies, ...) up to the next top-level
/// comma or the closing paren of the column list.
fn skip_to_item_end(cur: &mut Cursor<'_>) {
    let mut depth = 0usize;
    while let Some(t) = cur.peek() {
        match (&t.kind, t.text.as_str()) {
            (TokKind::Punct, ",") | (TokKind::Punct, ")") if depth == 0 => return,
            (TokKind::Punct, "(") => {
                depth += 1;
                cur.bump();
            }
            (TokKind::Punct, ")") => {
                depth -= 1;
                cur.bump();
            }
            _ => {
                cur.bump();
            }
        }
    }
}

/// SQLite-affinity-style mapping of a declared type to a tag.
fn map_type_tag(decl: &str) -> TypeTag {
    let u = decl.to_ascii_uppercase();
    if u.contains("INT") {
        TypeTag::Int
    } else if u.contains("CHAR") || u.contains("TEXT") || u.contains("CLOB") {
        TypeTag::Text
    } else if u.contains("REAL")
        || u.contains("FLOA")
        || u.contains("DOUB")
        || u.contains("DEC")
        || u.contains("NUMERIC")
    {
        TypeTag::Real
    } else {
        TypeTag::Unknown
    }
}

// ───────────────────────── INSERT ─────────────────────────

fn apply_insert(db: &mut RelationalDatabase, toks: &[Tok]) -> Result<(), String> {
    let mut cur = Cursor {
        toks,
        pos: 2,
        offset: 0,
    };
    let name = cur
        .expect_ident("table name")
        .map_err(|e| e.message.clone())?;
    let Some(table_idx) = db
        .tables
        .iter()
        .position(|t| t.name.eq_ignore_ascii_case(&name))
    else {
        return Err(format!("unknown table `{name}`"));
    };

    let explicit_cols = if cur.eat_punct("(") {
        Some(parse_ident_list(&mut cur).map_err(|e| e.message)?)
    } else {
        None
    };
    if !cur.eat_kw("VALUES") {
        return Err("expected VALUES".into());
    }

    let ncols = db.tables[table_idx].columns.len();
    let col_slots: Option<Vec<usize>> = match &explicit_cols {
        Some(cols) => Some(
            cols.iter()
                .map(|c| {
                    db.tables[table_idx]
                        .column_index(c)
                        .ok_or_else(|| format!("unknown column `{c}`"))
                })
                .collect::<Result<_, _>>()?,
        ),
        None => None,
    };

    loop {
        if !cur.eat_punct("(") {
            return Err("expected `(` before value tuple".into());
        }
        let mut values = Vec::new();
        loop {
            values.push(parse_value(&mut cur)?);
            if cur.eat_punct(",") {
                continue;
            }
            if cur.eat_punct(")") {
                break;
            }
            return Err("expected `,` or `)` in value tuple".into());
        }
        let row = match &col_slots {
            None => {
                if values.len() != ncols {
                    return Err(format!(
                        "tuple arity {} does not match {} columns",
                        values.len(),
                        ncols
                    ));
                }
                Row::new(values)
            }
            Some(slots) => {
                if values.len() != slots.len() {
                    return Err("tuple arity does not match the column list".into());
                }
                let mut full = vec![Value::Null; ncols];
                for (slot, v) in slots.iter().zip(values) {
                    full[*slot] = v;
                }
                Row::new(full)
            }
        };
        db.tables[table_idx].rows.push(row);
        if cur.eat_punct(",") {
            continue;
        }
        break;
    }
    if cur.peek().is_some() {
        return Err("trailing tokens after value tuples".into());
    }
    Ok(())
}

/// Literal values: NULL, integers, decimals, quoted strings; anything else
/// becomes text verbatim.
fn parse_value(cur: &mut Cursor<'_>) -> Result<Value, String> {
    let Some(t) = cur.bump() else {
        return Err("unexpected end of values".into());
    };
    Ok(match &t.kind {
        TokKind::Str => Value::Text(t.text.clone()),
        TokKind::Number => {
            if let Ok(i) = t.text.parse::<i64>() {
                Value::Int(i)
            } else if let Ok(f) = t.text.parse::<f64>() {
                Value::Float(f)
            } else {
                Value::Text(t.text.clone())
            }
        }
        TokKind::Ident if t.text.eq_ignore_ascii_case("NULL") => Value::Null,
        _ => Value::Text(t.text.clone()),
    })
}
