//! SQL-to-Cypher translation over the keyword map: FROM becomes MATCH,
//! SELECT becomes RETURN, HAVING becomes WITH..AS with a trailing WHERE,
//! GROUP BY becomes WITH grouping, and WHERE / ORDER BY / LIMIT carry over
//! (OFFSET as SKIP). JOINs rewrite to graph patterns, erasing foreign-key
//! columns; NOT IN sub-queries over key columns rewrite to edge-absence
//! patterns; other sub-queries chain through WITH-collected lists.

use std::collections::BTreeSet;

use thiserror::Error;

use super::ast::{self as cy, CypherQuery};
use crate::relational::{ClassifiedTable, ForeignKey, TableClassification, TableKind};
use crate::sql::{self, ColumnRef, Operand, Projection, SelectStmt};
use crate::value::Value;

#[derive(Debug, Clone, Error)]
#[error("untranslatable query: {reason}")]
pub struct UntranslatableQuery {
    pub reason: String,
}

fn untranslatable<T>(reason: impl Into<String>) -> Result<T, UntranslatableQuery> {
    Err(UntranslatableQuery {
        reason: reason.into(),
    })
}

/// Source keyword of a produced clause; used to assert keyword-map totality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SqlKey {
    From,
    Where,
    Select,
    GroupBy,
    Having,
    OrderBy,
    Limit,
    Offset,
    Union,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClauseRole {
    /// Index into `CypherQuery::clauses`.
    Clause(usize),
    Return,
    ReturnOrderBy,
    ReturnLimit,
    ReturnSkip,
    Union,
}

#[derive(Debug, Clone, Default)]
pub struct TranslationTrace {
    /// One entry per SQL keyword present in the source tree.
    pub entries: Vec<(SqlKey, ClauseRole)>,
    /// Prolog clauses produced while chaining sub-queries; they share their
    /// source keyword with a primary entry.
    pub auxiliary: Vec<(SqlKey, usize)>,
}

impl TranslationTrace {
    pub fn role_of(&self, key: SqlKey) -> Option<&ClauseRole> {
        self.entries.iter().find(|(k, _)| *k == key).map(|(_, r)| r)
    }
}

pub fn translate(
    stmt: &SelectStmt,
    cls: &TableClassification,
) -> Result<CypherQuery, UntranslatableQuery> {
    translate_traced(stmt, cls).map(|(q, _)| q)
}

pub fn translate_traced(
    stmt: &SelectStmt,
    cls: &TableClassification,
) -> Result<(CypherQuery, TranslationTrace), UntranslatableQuery> {
    if stmt.union.is_some()
        && (!stmt.order_by.is_empty() || stmt.limit.is_some() || stmt.offset.is_some())
    {
        return untranslatable("ORDER BY / LIMIT / OFFSET over a UNION is outside the rule set");
    }
    let (mut query, mut trace) = Translator::new(cls).run(stmt)?;
    if let Some(u) = &stmt.union {
        let (uq, _) = translate_traced(u, cls)?;
        query.union = Some(Box::new(uq));
        trace.entries.push((SqlKey::Union, ClauseRole::Union));
    }
    Ok((query, trace))
}

// ───────────────────────── alias allocation ─────────────────────────

#[derive(Debug, Default)]
struct AliasAllocator {
    taken: BTreeSet<String>,
}

impl AliasAllocator {
    fn claim(&mut self, name: &str) -> String {
        if self.taken.insert(name.to_string()) {
            return name.to_string();
        }
        let mut n = 2usize;
        loop {
            let cand = format!("{name}{n}");
            if self.taken.insert(cand.clone()) {
                return cand;
            }
            n += 1;
        }
    }

    /// Derived alias: first two characters of the label's bare name,
    /// lowercased, e.g. `si` for `singer`.
    fn derive(&mut self, label: &str) -> String {
        let bare = label.rsplit('.').next().unwrap_or(label);
        let stem: String = bare.chars().take(2).collect::<String>().to_ascii_lowercase();
        let stem = if stem.is_empty() { "x".to_string() } else { stem };
        self.claim(&stem)
    }

    /// Grouping key alias: the token after the last underscore, lowercased
    /// (`Department_ID` becomes `id`); the whole name when there is none.
    fn key_alias(&mut self, column: &str) -> String {
        let tail = column.rsplit('_').next().unwrap_or(column);
        let stem = if tail.is_empty() { column } else { tail }.to_ascii_lowercase();
        let stem = if stem.is_empty() { "k".to_string() } else { stem };
        self.claim(&stem)
    }

    /// Aggregate alias: first letter of the function name.
    fn agg_alias(&mut self, func: sql::AggFunc) -> String {
        let stem: String = func.name().chars().take(1).collect();
        self.claim(&stem)
    }
}

// ───────────────────────── FROM analysis ─────────────────────────

#[derive(Debug, Clone)]
struct FromEntry {
    /// Name a column qualifier resolves against (SQL alias or table name).
    binding: String,
    table: String,
    alias: String,
    kind: TableKind,
}

/// An ON equality between two FROM entries, column lists paired up.
#[derive(Debug)]
struct Link {
    a: usize,
    b: usize,
    cols_a: Vec<String>,
    cols_b: Vec<String>,
}

/// A relationship realized from a join; endpoints index the FROM entries.
#[derive(Debug, Clone)]
struct RealizedEdge {
    head: Option<usize>,
    tail: Option<usize>,
    edge: cy::EdgeAtom,
    /// Smallest FROM index this edge touches; orders pattern emission.
    order: usize,
}

struct Translator<'a> {
    cls: &'a TableClassification,
    entries: Vec<FromEntry>,
    aliases: AliasAllocator,
    /// Realized relationship endpoints, kept for FK-column projection.
    edges: Vec<RealizedEdge>,
    clauses: Vec<cy::Clause>,
    trace: TranslationTrace,
}

impl<'a> Translator<'a> {
    fn new(cls: &'a TableClassification) -> Translator<'a> {
        Translator {
            cls,
            entries: Vec::new(),
            aliases: AliasAllocator::default(),
            edges: Vec::new(),
            clauses: Vec::new(),
            trace: TranslationTrace::default(),
        }
    }

    fn entry_of(&self, qualifier: &str) -> Option<usize> {
        self.entries
            .iter()
            .position(|e| e.binding.eq_ignore_ascii_case(qualifier))
    }

    fn classified(&self, table: &str) -> Result<&'a ClassifiedTable, UntranslatableQuery> {
        match self.cls.get(table) {
            Some(c) => Ok(c),
            None => untranslatable(format!("table `{table}` is not in the classification")),
        }
    }

    fn run(
        mut self,
        stmt: &SelectStmt,
    ) -> Result<(CypherQuery, TranslationTrace), UntranslatableQuery> {
        for item in stmt.from.items() {
            let classified = self.classified(&item.table)?;
            let kind = classified.kind;
            let table = classified.table.clone();
            let alias = match &item.alias {
                Some(a) => self.aliases.claim(a),
                None => self.aliases.derive(&item.table),
            };
            self.entries.push(FromEntry {
                binding: item.binding_name().to_string(),
                table,
                alias,
                kind,
            });
        }

        let mut on_literal_eqs: Vec<sql::Expr> = Vec::new();
        let links = self.collect_links(stmt, &mut on_literal_eqs)?;
        let patterns = self.realize_patterns(&links)?;

        // WHERE: prologs for sub-queries come first, then the outer MATCH,
        // then the residual WHERE expression
        let mut patterns = patterns;
        let mut residual: Option<cy::BoolExpr> = None;
        let where_conjuncts: Vec<&sql::Expr> = stmt
            .where_clause
            .iter()
            .flat_map(conjuncts)
            .chain(on_literal_eqs.iter())
            .collect();
        let mut prologs: Vec<cy::Clause> = Vec::new();
        let mut collected_lists: Vec<String> = Vec::new();
        for conj in where_conjuncts {
            let piece = self.translate_conjunct(
                conj,
                &mut patterns,
                &mut prologs,
                &mut collected_lists,
            )?;
            if let Some(piece) = piece {
                residual = Some(match residual {
                    None => piece,
                    Some(prev) => cy::BoolExpr::And(Box::new(prev), Box::new(piece)),
                });
            }
        }

        let prolog_count = prologs.len();
        self.clauses.extend(prologs);
        for i in 0..prolog_count {
            self.trace.auxiliary.push((SqlKey::Where, i));
        }
        let match_idx = self.clauses.len();
        self.clauses.push(cy::Clause::Match(patterns));
        self.trace
            .entries
            .push((SqlKey::From, ClauseRole::Clause(match_idx)));
        if let Some(residual) = residual {
            let idx = self.clauses.len();
            self.clauses.push(cy::Clause::Where(residual));
            self.trace
                .entries
                .push((SqlKey::Where, ClauseRole::Clause(idx)));
        } else if stmt.where_clause.is_some() {
            // the whole WHERE was absorbed into patterns or prologs
            self.trace
                .entries
                .push((SqlKey::Where, ClauseRole::Clause(match_idx)));
        }

        let ret = self.build_projection(stmt)?;
        let trace = std::mem::take(&mut self.trace);
        Ok((
            CypherQuery {
                clauses: self.clauses,
                ret,
                union: None,
            },
            trace,
        ))
    }

    // ── FROM / JOIN ──

    fn collect_links(
        &mut self,
        stmt: &SelectStmt,
        on_literal_eqs: &mut Vec<sql::Expr>,
    ) -> Result<Vec<Link>, UntranslatableQuery> {
        let mut links: Vec<Link> = Vec::new();
        for join in &stmt.from.joins {
            for conj in conjuncts(&join.on) {
                match conj {
                    sql::Expr::Cmp {
                        op: sql::CmpOp::Eq,
                        lhs: Operand::Column(l),
                        rhs: Operand::Column(r),
                    } => {
                        let (Some(lq), Some(rq)) = (&l.table, &r.table) else {
                            return untranslatable("JOIN condition with unqualified column");
                        };
                        let (Some(li), Some(ri)) = (self.entry_of(lq), self.entry_of(rq)) else {
                            return untranslatable("JOIN condition references an unknown table");
                        };
                        if li == ri {
                            return untranslatable("JOIN condition within a single table");
                        }
                        match links
                            .iter_mut()
                            .find(|k| (k.a == li && k.b == ri) || (k.a == ri && k.b == li))
                        {
                            Some(k) if k.a == li => {
                                k.cols_a.push(l.column.clone());
                                k.cols_b.push(r.column.clone());
                            }
                            Some(k) => {
                                k.cols_a.push(r.column.clone());
                                k.cols_b.push(l.column.clone());
                            }
                            None => links.push(Link {
                                a: li,
                                b: ri,
                                cols_a: vec![l.column.clone()],
                                cols_b: vec![r.column.clone()],
                            }),
                        }
                    }
                    e @ sql::Expr::Cmp {
                        op: sql::CmpOp::Eq,
                        lhs: Operand::Column(_),
                        rhs: Operand::Lit(_),
                    } => on_literal_eqs.push((*e).clone()),
                    e @ sql::Expr::Cmp {
                        op: sql::CmpOp::Eq,
                        lhs: Operand::Lit(_),
                        rhs: Operand::Column(_),
                    } => on_literal_eqs.push((*e).clone()),
                    _ => return untranslatable("JOIN ON supports key equalities only"),
                }
            }
        }
        Ok(links)
    }

    fn realize_patterns(
        &mut self,
        links: &[Link],
    ) -> Result<Vec<cy::Pattern>, UntranslatableQuery> {
        let mut linking_done: BTreeSet<usize> = BTreeSet::new();

        for idx in 0..self.entries.len() {
            if self.entries[idx].kind != TableKind::Linking {
                continue;
            }
            let entry_table = self.entries[idx].table.clone();
            let entry_alias = self.entries[idx].alias.clone();
            let ct = self.classified(&entry_table)?;
            let (f1, f2) = ct.linking_fks.as_ref().expect("linking keys").clone();
            let mine: Vec<&Link> = links.iter().filter(|k| k.a == idx || k.b == idx).collect();
            if mine.len() > 2 {
                return untranslatable(format!(
                    "linking table `{entry_table}` joined to more than two tables"
                ));
            }
            let mut side1: Option<usize> = None;
            let mut side2: Option<usize> = None;
            for link in &mine {
                let (other, link_cols, other_cols) = if link.a == idx {
                    (link.b, &link.cols_a, &link.cols_b)
                } else {
                    (link.a, &link.cols_b, &link.cols_a)
                };
                if self.entries[other].kind == TableKind::Linking {
                    return untranslatable("JOIN between two linking tables");
                }
                let matches = |fk: &ForeignKey| {
                    same_columns(&fk.columns, link_cols)
                        && same_columns(&fk.referenced_columns, other_cols)
                        && fk
                            .referenced_table
                            .eq_ignore_ascii_case(&self.entries[other].table)
                };
                if matches(&f1) && side1.is_none() {
                    side1 = Some(other);
                } else if matches(&f2) && side2.is_none() {
                    side2 = Some(other);
                } else {
                    return untranslatable(format!(
                        "JOIN with `{entry_table}` is not on its linking keys"
                    ));
                }
            }
            // pattern head: the side appearing earliest in FROM order
            let (head, tail) = match (side1, side2) {
                (Some(a), Some(b)) if b < a => (Some(b), Some(a)),
                other => other,
            };
            let order = [Some(idx), head, tail].into_iter().flatten().min().unwrap();
            self.edges.push(RealizedEdge {
                head,
                tail,
                edge: cy::EdgeAtom::typed(Some(&entry_alias), &entry_table),
                order,
            });
            linking_done.insert(idx);
        }

        // entity-entity links run over a *_HAS_* relationship
        for link in links {
            if self.entries[link.a].kind == TableKind::Linking
                || self.entries[link.b].kind == TableKind::Linking
            {
                continue;
            }
            let has_type = self.has_type(link)?;
            let (head, tail) = if link.a < link.b {
                (link.a, link.b)
            } else {
                (link.b, link.a)
            };
            self.edges.push(RealizedEdge {
                head: Some(head),
                tail: Some(tail),
                edge: cy::EdgeAtom {
                    alias: None,
                    edge_type: Some(has_type),
                    props: Vec::new(),
                },
                order: head,
            });
        }

        // compose: greedy chains; leftover branches share aliases
        self.edges.sort_by_key(|e| e.order);
        let mut patterns: Vec<cy::Pattern> = Vec::new();
        let mut labeled: BTreeSet<usize> = BTreeSet::new();
        let entries = &self.entries;
        let atom = |i: Option<usize>, labeled: &mut BTreeSet<usize>| match i {
            None => cy::NodeAtom::anonymous(),
            Some(i) => {
                let e = &entries[i];
                if labeled.insert(i) {
                    cy::NodeAtom::new(Some(&e.alias), Some(&e.table))
                } else {
                    cy::NodeAtom::new(Some(&e.alias), None)
                }
            }
        };
        let mut remaining: Vec<RealizedEdge> = self.edges.clone();
        while !remaining.is_empty() {
            let first = remaining.remove(0);
            let head_atom = atom(first.head, &mut labeled);
            let mut steps = vec![cy::PatternStep {
                edge: first.edge,
                node: atom(first.tail, &mut labeled),
            }];
            let mut cursor = first.tail;
            while let Some(cur) = cursor {
                let Some(pos) = remaining
                    .iter()
                    .position(|e| e.head == Some(cur) || e.tail == Some(cur))
                else {
                    break;
                };
                let next = remaining.remove(pos);
                let far = if next.head == Some(cur) {
                    next.tail
                } else {
                    next.head
                };
                steps.push(cy::PatternStep {
                    edge: next.edge,
                    node: atom(far, &mut labeled),
                });
                cursor = far;
            }
            patterns.push(cy::Pattern {
                head: head_atom,
                steps,
            });
        }
        // entities untouched by any link become node patterns, ahead of the
        // edge patterns they do not participate in; lone linking tables
        // become bare edge patterns
        let mut loose: Vec<cy::Pattern> = Vec::new();
        for (i, entry) in self.entries.iter().enumerate() {
            match entry.kind {
                TableKind::Entity => {
                    if labeled.insert(i) {
                        loose.push(cy::Pattern::node(Some(&entry.alias), Some(&entry.table)));
                    }
                }
                TableKind::Linking => {
                    if !linking_done.contains(&i) {
                        loose.push(cy::Pattern {
                            head: cy::NodeAtom::anonymous(),
                            steps: vec![cy::PatternStep {
                                edge: cy::EdgeAtom::typed(Some(&entry.alias), &entry.table),
                                node: cy::NodeAtom::anonymous(),
                            }],
                        });
                    }
                }
            }
        }
        patterns.extend(loose);
        Ok(patterns)
    }

    fn has_type(&self, link: &Link) -> Result<String, UntranslatableQuery> {
        // the owner side holds the foreign key; the edge is typed
        // `<Referenced>_HAS_<Owner>`
        let check = |owner: usize,
                     owner_cols: &[String],
                     other: usize,
                     other_cols: &[String]|
         -> Result<Option<String>, UntranslatableQuery> {
            let ct = self.classified(&self.entries[owner].table)?;
            for fk in &ct.has_edges {
                if same_columns(&fk.columns, owner_cols)
                    && same_columns(&fk.referenced_columns, other_cols)
                    && fk
                        .referenced_table
                        .eq_ignore_ascii_case(&self.entries[other].table)
                {
                    return Ok(Some(format!(
                        "{}_HAS_{}",
                        self.entries[other].table, self.entries[owner].table
                    )));
                }
            }
            Ok(None)
        };
        if let Some(t) = check(link.b, &link.cols_b, link.a, &link.cols_a)? {
            return Ok(t);
        }
        if let Some(t) = check(link.a, &link.cols_a, link.b, &link.cols_b)? {
            return Ok(t);
        }
        untranslatable(format!(
            "JOIN between `{}` and `{}` is not backed by a relationship",
            self.entries[link.a].table, self.entries[link.b].table
        ))
    }

    // ── column mapping ──

    /// Map a column reference to a value expression, erasing foreign-key
    /// columns of linking tables in favor of the connected entity property.
    fn column_expr(&self, c: &ColumnRef) -> Result<cy::ValueExpr, UntranslatableQuery> {
        let Some(q) = &c.table else {
            return untranslatable(format!("unqualified column `{}`", c.column));
        };
        let Some(idx) = self.entry_of(q) else {
            return untranslatable(format!("unknown qualifier `{q}`"));
        };
        let entry = &self.entries[idx];
        if entry.kind == TableKind::Linking {
            let ct = self.classified(&entry.table)?;
            let (f1, f2) = ct.linking_fks.as_ref().expect("linking keys");
            for fk in [f1, f2] {
                if let Some(pos) = fk
                    .columns
                    .iter()
                    .position(|col| col.eq_ignore_ascii_case(&c.column))
                {
                    let target = self.edges.iter().find_map(|e| {
                        [e.head, e.tail].into_iter().flatten().find(|&end| {
                            self.entries[end]
                                .table
                                .eq_ignore_ascii_case(&fk.referenced_table)
                        })
                    });
                    return match target {
                        Some(end) => Ok(cy::ValueExpr::prop(
                            &self.entries[end].alias,
                            &fk.referenced_columns[pos],
                        )),
                        None => untranslatable(format!(
                            "foreign-key column `{}` of linking table `{}` has no joined entity to project",
                            c.column, entry.table
                        )),
                    };
                }
            }
        }
        Ok(cy::ValueExpr::prop(&entry.alias, &c.column))
    }

    fn operand_expr(&self, o: &Operand) -> Result<cy::ValueExpr, UntranslatableQuery> {
        match o {
            Operand::Column(c) => self.column_expr(c),
            Operand::Lit(v) => Ok(cy::ValueExpr::Lit(v.clone())),
            Operand::Agg(_) => untranslatable("aggregate outside HAVING or ORDER BY"),
        }
    }

    // ── WHERE ──

    /// Translate one top-level conjunct. Returns None when the conjunct was
    /// absorbed into a pattern property map.
    fn translate_conjunct(
        &mut self,
        e: &sql::Expr,
        patterns: &mut [cy::Pattern],
        prologs: &mut Vec<cy::Clause>,
        collected_lists: &mut Vec<String>,
    ) -> Result<Option<cy::BoolExpr>, UntranslatableQuery> {
        // literal equality on a linking table's non-key column renders as an
        // edge property map
        if let sql::Expr::Cmp {
            op: sql::CmpOp::Eq,
            lhs,
            rhs,
        } = e
        {
            let col_lit = match (lhs, rhs) {
                (Operand::Column(c), Operand::Lit(v)) | (Operand::Lit(v), Operand::Column(c)) => {
                    Some((c, v))
                }
                _ => None,
            };
            if let Some((c, v)) = col_lit {
                if !v.is_null() {
                    if let Some(done) = self.absorb_edge_property(c, v, patterns)? {
                        if done {
                            return Ok(None);
                        }
                    }
                }
            }
        }
        if let sql::Expr::InSelect {
            expr,
            select,
            negated,
        } = e
        {
            return self
                .translate_in_select(expr, select, *negated, prologs, collected_lists)
                .map(Some);
        }
        self.scalar_expr(e).map(Some)
    }

    /// Ok(Some(true)) when absorbed; Ok(Some(false)) when the column is a
    /// linking column but could not be absorbed (falls back to WHERE);
    /// Ok(None) when not an edge column at all.
    fn absorb_edge_property(
        &self,
        c: &ColumnRef,
        v: &Value,
        patterns: &mut [cy::Pattern],
    ) -> Result<Option<bool>, UntranslatableQuery> {
        let Some(q) = &c.table else {
            return Ok(None);
        };
        let Some(idx) = self.entry_of(q) else {
            return Ok(None);
        };
        let entry = &self.entries[idx];
        if entry.kind != TableKind::Linking {
            return Ok(None);
        }
        let ct = self.classified(&entry.table)?;
        let (f1, f2) = ct.linking_fks.as_ref().expect("linking keys");
        let is_fk_col = f1
            .columns
            .iter()
            .chain(f2.columns.iter())
            .any(|col| col.eq_ignore_ascii_case(&c.column));
        if is_fk_col {
            return Ok(Some(false));
        }
        for p in patterns.iter_mut() {
            for step in &mut p.steps {
                if step.edge.alias.as_deref() == Some(entry.alias.as_str())
                    && !step.edge.props.iter().any(|(k, _)| k == &c.column)
                {
                    step.edge.props.push((c.column.clone(), v.clone()));
                    return Ok(Some(true));
                }
            }
        }
        Ok(Some(false))
    }

    fn scalar_expr(&self, e: &sql::Expr) -> Result<cy::BoolExpr, UntranslatableQuery> {
        Ok(match e {
            sql::Expr::Cmp { op, lhs, rhs } => cy::BoolExpr::Cmp {
                op: map_cmp(*op),
                lhs: self.operand_expr(lhs)?,
                rhs: self.operand_expr(rhs)?,
            },
            sql::Expr::Like {
                expr,
                pattern,
                negated,
            } => {
                let m = cy::BoolExpr::Regex {
                    lhs: self.operand_expr(expr)?,
                    pattern: like_to_regex(pattern),
                };
                if *negated {
                    cy::BoolExpr::Not(Box::new(m))
                } else {
                    m
                }
            }
            sql::Expr::InList {
                expr,
                list,
                negated,
            } => {
                let m = cy::BoolExpr::In {
                    lhs: self.operand_expr(expr)?,
                    list: cy::ListExpr::Lits(list.clone()),
                };
                if *negated {
                    cy::BoolExpr::Not(Box::new(m))
                } else {
                    m
                }
            }
            sql::Expr::InSelect { .. } => {
                return untranslatable(
                    "IN (SELECT ...) is supported only as a top-level WHERE conjunct",
                )
            }
            sql::Expr::And(a, b) => cy::BoolExpr::And(
                Box::new(self.scalar_expr(a)?),
                Box::new(self.scalar_expr(b)?),
            ),
            sql::Expr::Or(a, b) => cy::BoolExpr::Or(
                Box::new(self.scalar_expr(a)?),
                Box::new(self.scalar_expr(b)?),
            ),
            sql::Expr::Not(inner) => cy::BoolExpr::Not(Box::new(self.scalar_expr(inner)?)),
        })
    }

    // ── sub-queries ──

    fn translate_in_select(
        &mut self,
        outer: &Operand,
        select: &SelectStmt,
        negated: bool,
        prologs: &mut Vec<cy::Clause>,
        collected_lists: &mut Vec<String>,
    ) -> Result<cy::BoolExpr, UntranslatableQuery> {
        let Operand::Column(outer_col) = outer else {
            return untranslatable("IN (SELECT ...) requires a column on the left");
        };
        if negated {
            if let Some(pattern) = self.negation_pattern(outer_col, select)? {
                return Ok(cy::BoolExpr::Not(Box::new(cy::BoolExpr::PatternExists(
                    pattern,
                ))));
            }
        }
        // membership test chained through a WITH-collected list
        if !select.from.joins.is_empty()
            || !select.group_by.is_empty()
            || select.having.is_some()
            || select.union.is_some()
            || !select.order_by.is_empty()
            || select.limit.is_some()
            || select.offset.is_some()
        {
            return untranslatable("nested select is too complex for list chaining");
        }
        let inner_table = self.classified(&select.from.base.table)?;
        let [Projection::Column(inner_col)] = select.projections.as_slice() else {
            return untranslatable("nested select must project exactly one column");
        };

        let inner_alias = self.aliases.derive(&inner_table.table);
        let list_alias = self.aliases.claim("vals");
        let inner_binding = select.from.base.binding_name().to_string();

        // the inner column mapper: entity columns live on the node; a
        // linking table's key columns were erased from the edge and project
        // through the referenced entities bound alongside it
        let map_inner: Box<dyn Fn(&ColumnRef) -> Result<cy::ValueExpr, UntranslatableQuery>>;
        let match_clause = match inner_table.kind {
            TableKind::Entity => {
                let alias = inner_alias.clone();
                map_inner = Box::new(move |c| Ok(cy::ValueExpr::prop(&alias, &c.column)));
                cy::Clause::Match(vec![cy::Pattern::node(
                    Some(&inner_alias),
                    Some(&inner_table.table),
                )])
            }
            TableKind::Linking => {
                let (f1, f2) = inner_table.linking_fks.as_ref().expect("linking keys");
                let t1 = match self.cls.get(&f1.referenced_table) {
                    Some(ct) => ct.table.clone(),
                    None => {
                        return untranslatable(format!(
                            "linking table `{}` references unknown table `{}`",
                            inner_table.table, f1.referenced_table
                        ))
                    }
                };
                let t2 = match self.cls.get(&f2.referenced_table) {
                    Some(ct) => ct.table.clone(),
                    None => {
                        return untranslatable(format!(
                            "linking table `{}` references unknown table `{}`",
                            inner_table.table, f2.referenced_table
                        ))
                    }
                };
                let head_alias = self.aliases.derive(&t1);
                let tail_alias = self.aliases.derive(&t2);
                let (f1c, f2c) = (f1.clone(), f2.clone());
                let (ha, ta, ea) = (head_alias.clone(), tail_alias.clone(), inner_alias.clone());
                map_inner = Box::new(move |c| {
                    if let Some(pos) = f1c
                        .columns
                        .iter()
                        .position(|col| col.eq_ignore_ascii_case(&c.column))
                    {
                        return Ok(cy::ValueExpr::prop(&ha, &f1c.referenced_columns[pos]));
                    }
                    if let Some(pos) = f2c
                        .columns
                        .iter()
                        .position(|col| col.eq_ignore_ascii_case(&c.column))
                    {
                        return Ok(cy::ValueExpr::prop(&ta, &f2c.referenced_columns[pos]));
                    }
                    Ok(cy::ValueExpr::prop(&ea, &c.column))
                });
                cy::Clause::Match(vec![cy::Pattern {
                    head: cy::NodeAtom::new(Some(&head_alias), Some(&t1)),
                    steps: vec![cy::PatternStep {
                        edge: cy::EdgeAtom::typed(Some(&inner_alias), &inner_table.table),
                        node: cy::NodeAtom::new(Some(&tail_alias), Some(&t2)),
                    }],
                }])
            }
        };
        prologs.push(match_clause);

        // the inner WHERE sees only the inner binding
        if let Some(w) = &select.where_clause {
            let rewritten = rewrite_inner_expr(w, &inner_binding, map_inner.as_ref())?;
            prologs.push(cy::Clause::Where(rewritten));
        }
        let mut items: Vec<cy::WithItem> = collected_lists
            .iter()
            .map(|l| cy::WithItem {
                expr: cy::ValueExpr::Ident(l.clone()),
                alias: l.clone(),
            })
            .collect();
        items.push(cy::WithItem {
            expr: cy::ValueExpr::Agg {
                func: cy::AggFunc::Collect,
                distinct: false,
                arg: Some(Box::new(map_inner(inner_col)?)),
            },
            alias: list_alias.clone(),
        });
        prologs.push(cy::Clause::With(items));
        collected_lists.push(list_alias.clone());

        let membership = cy::BoolExpr::In {
            lhs: self.column_expr(outer_col)?,
            list: cy::ListExpr::Ident(list_alias),
        };
        Ok(if negated {
            cy::BoolExpr::Not(Box::new(membership))
        } else {
            membership
        })
    }

    /// The edge-absence rewrite for `outer NOT IN (SELECT key FROM inner)`:
    /// sound only when the projected key realizes an edge between the outer
    /// and inner tables. Linking inner tables negate the typed edge; entity
    /// inner tables negate a type-free edge to the inner label.
    fn negation_pattern(
        &self,
        outer_col: &ColumnRef,
        select: &SelectStmt,
    ) -> Result<Option<cy::Pattern>, UntranslatableQuery> {
        if !select.from.joins.is_empty()
            || select.where_clause.is_some()
            || !select.group_by.is_empty()
            || select.having.is_some()
            || select.union.is_some()
        {
            return Ok(None);
        }
        let [Projection::Column(inner_col)] = select.projections.as_slice() else {
            return Ok(None);
        };
        let Some(outer_q) = &outer_col.table else {
            return Ok(None);
        };
        let Some(outer_idx) = self.entry_of(outer_q) else {
            return Ok(None);
        };
        let outer_entry = &self.entries[outer_idx];
        if outer_entry.kind != TableKind::Entity {
            return Ok(None);
        }
        let Some(inner_ct) = self.cls.get(&select.from.base.table) else {
            return Ok(None);
        };

        let fk_connects = |fk: &ForeignKey, owner_col: &str, target_col: &str, target: &str| {
            fk.columns.len() == 1
                && fk.columns[0].eq_ignore_ascii_case(owner_col)
                && fk.referenced_columns.len() == 1
                && fk.referenced_columns[0].eq_ignore_ascii_case(target_col)
                && fk.referenced_table.eq_ignore_ascii_case(target)
        };

        let head = cy::NodeAtom::new(Some(&outer_entry.alias), Some(&outer_entry.table));
        match inner_ct.kind {
            TableKind::Linking => {
                let (f1, f2) = inner_ct.linking_fks.as_ref().expect("linking keys");
                for fk in [f1, f2] {
                    if fk_connects(fk, &inner_col.column, &outer_col.column, &outer_entry.table) {
                        return Ok(Some(cy::Pattern {
                            head,
                            steps: vec![cy::PatternStep {
                                edge: cy::EdgeAtom::typed(None, &inner_ct.table),
                                node: cy::NodeAtom::anonymous(),
                            }],
                        }));
                    }
                }
                Ok(None)
            }
            TableKind::Entity => {
                // inner owns the key to the outer table...
                let inner_owns = inner_ct.has_edges.iter().any(|fk| {
                    fk_connects(fk, &inner_col.column, &outer_col.column, &outer_entry.table)
                });
                // ...or the outer table owns the key to the inner one
                let outer_owns = self
                    .classified(&outer_entry.table)?
                    .has_edges
                    .iter()
                    .any(|fk| {
                        fk_connects(fk, &outer_col.column, &inner_col.column, &inner_ct.table)
                    });
                if inner_owns || outer_owns {
                    Ok(Some(cy::Pattern {
                        head,
                        steps: vec![cy::PatternStep {
                            edge: cy::EdgeAtom::any(),
                            node: cy::NodeAtom::new(None, Some(&inner_ct.table)),
                        }],
                    }))
                } else {
                    Ok(None)
                }
            }
        }
    }

    // ── SELECT / GROUP BY / HAVING / ORDER BY ──

    fn build_projection(
        &mut self,
        stmt: &SelectStmt,
    ) -> Result<cy::Return, UntranslatableQuery> {
        let aggregates = stmt.aggregates();
        let has_agg_projection = stmt
            .projections
            .iter()
            .any(|p| matches!(p, Projection::Aggregate(_)));
        let has_bare_projection = stmt
            .projections
            .iter()
            .any(|p| matches!(p, Projection::Column(_)));
        if stmt
            .projections
            .iter()
            .any(|p| matches!(p, Projection::Star | Projection::TableStar(_)))
        {
            return untranslatable("star projection must be expanded by normalization first");
        }

        let grouped = !stmt.group_by.is_empty() || stmt.having.is_some();
        if !grouped && !aggregates.is_empty() {
            if has_bare_projection {
                return untranslatable(
                    "aggregates mixed with bare columns require GROUP BY",
                );
            }
            return self.aggregate_return(stmt);
        }
        if !grouped {
            return self.plain_return(stmt);
        }
        if has_agg_projection || !aggregates.is_empty() {
            self.grouped_return(stmt)
        } else {
            // GROUP BY without aggregates reduces to DISTINCT keys
            self.grouped_return(stmt)
        }
    }

    fn plain_return(&mut self, stmt: &SelectStmt) -> Result<cy::Return, UntranslatableQuery> {
        let mut items = Vec::new();
        for p in &stmt.projections {
            match p {
                Projection::Column(c) => items.push(self.column_expr(c)?),
                Projection::Aggregate(_) => unreachable!("aggregate handled elsewhere"),
                _ => unreachable!("stars expanded by normalization"),
            }
        }
        let mut order_by = Vec::new();
        for o in &stmt.order_by {
            let expr = match &o.expr {
                Operand::Column(c) => self.column_expr(c)?,
                Operand::Agg(_) => {
                    return untranslatable("ORDER BY aggregate without GROUP BY")
                }
                Operand::Lit(v) => cy::ValueExpr::Lit(v.clone()),
            };
            order_by.push(cy::OrderSpec { expr, desc: o.desc });
        }
        self.trace_projection(stmt);
        Ok(cy::Return {
            distinct: stmt.distinct,
            items,
            order_by,
            limit: stmt.limit,
            skip: stmt.offset,
        })
    }

    /// Aggregate-only select without grouping: aggregates render directly in
    /// RETURN; `count(*)` becomes `count(<first alias>)`.
    fn aggregate_return(&mut self, stmt: &SelectStmt) -> Result<cy::Return, UntranslatableQuery> {
        if !stmt.order_by.is_empty() {
            return untranslatable("ORDER BY with ungrouped aggregates");
        }
        let mut items = Vec::new();
        for p in &stmt.projections {
            let Projection::Aggregate(a) = p else {
                unreachable!("bare columns rejected earlier")
            };
            items.push(self.agg_expr(a, true)?);
        }
        self.trace_projection(stmt);
        Ok(cy::Return {
            distinct: stmt.distinct,
            items,
            order_by: Vec::new(),
            limit: stmt.limit,
            skip: stmt.offset,
        })
    }

    /// `count(*)` in RETURN counts the first bound alias; in WITH it stays
    /// `count(*)`.
    fn agg_expr(
        &self,
        a: &sql::AggCall,
        count_star_as_alias: bool,
    ) -> Result<cy::ValueExpr, UntranslatableQuery> {
        let func = match a.func {
            sql::AggFunc::Count => cy::AggFunc::Count,
            sql::AggFunc::Avg => cy::AggFunc::Avg,
            sql::AggFunc::Max => cy::AggFunc::Max,
            sql::AggFunc::Min => cy::AggFunc::Min,
            sql::AggFunc::Sum => cy::AggFunc::Sum,
        };
        let arg = match &a.arg {
            Some(c) => Some(Box::new(self.column_expr(c)?)),
            None if count_star_as_alias => {
                let first = self
                    .first_bound_alias()
                    .ok_or_else(|| UntranslatableQuery {
                        reason: "count(*) with no bound alias".into(),
                    })?;
                Some(Box::new(cy::ValueExpr::Ident(first)))
            }
            None => None,
        };
        Ok(cy::ValueExpr::Agg {
            func,
            distinct: a.distinct,
            arg,
        })
    }

    fn first_bound_alias(&self) -> Option<String> {
        for clause in &self.clauses {
            if let cy::Clause::Match(patterns) = clause {
                for p in patterns {
                    if let Some(a) = &p.head.alias {
                        return Some(a.clone());
                    }
                    for s in &p.steps {
                        if let Some(a) = &s.edge.alias {
                            return Some(a.clone());
                        }
                        if let Some(a) = &s.node.alias {
                            return Some(a.clone());
                        }
                    }
                }
            }
        }
        None
    }

    /// GROUP BY / HAVING route: a WITH clause carries the grouping keys and
    /// aggregates under derived aliases, HAVING filters after it, and RETURN
    /// projects the aliases.
    fn grouped_return(&mut self, stmt: &SelectStmt) -> Result<cy::Return, UntranslatableQuery> {
        struct Key {
            source: ColumnRef,
            alias: String,
        }
        struct Agg {
            source: sql::AggCall,
            alias: String,
        }
        let mut keys: Vec<Key> = Vec::new();
        let mut aggs: Vec<Agg> = Vec::new();

        let add_key = |tr: &mut Self, c: &ColumnRef, keys: &mut Vec<Key>| {
            if !keys.iter().any(|k| same_col(&k.source, c)) {
                keys.push(Key {
                    source: c.clone(),
                    alias: tr.aliases.key_alias(&c.column),
                });
            }
        };
        let add_agg = |tr: &mut Self, a: &sql::AggCall, aggs: &mut Vec<Agg>| {
            if !aggs.iter().any(|x| x.source == *a) {
                aggs.push(Agg {
                    source: a.clone(),
                    alias: tr.aliases.agg_alias(a.func),
                });
            }
        };

        // selected items first, in select order; then unselected group keys;
        // then aggregates appearing only in HAVING or ORDER BY
        for p in &stmt.projections {
            match p {
                Projection::Column(c) => add_key(self, c, &mut keys),
                Projection::Aggregate(a) => add_agg(self, a, &mut aggs),
                _ => unreachable!("stars expanded by normalization"),
            }
        }
        for c in &stmt.group_by {
            add_key(self, c, &mut keys);
        }
        for a in stmt.aggregates() {
            add_agg(self, a, &mut aggs);
        }

        let mut items: Vec<cy::WithItem> = Vec::new();
        for k in &keys {
            items.push(cy::WithItem {
                expr: self.column_expr(&k.source)?,
                alias: k.alias.clone(),
            });
        }
        for a in &aggs {
            items.push(cy::WithItem {
                expr: self.agg_expr(&a.source, false)?,
                alias: a.alias.clone(),
            });
        }
        let with_idx = self.clauses.len();
        self.clauses.push(cy::Clause::With(items));
        if !stmt.group_by.is_empty() {
            self.trace
                .entries
                .push((SqlKey::GroupBy, ClauseRole::Clause(with_idx)));
        }

        let find_key = |c: &ColumnRef| keys.iter().find(|k| same_col(&k.source, c));
        let find_agg = |a: &sql::AggCall| aggs.iter().find(|x| x.source == *a);

        if let Some(h) = &stmt.having {
            let rewritten = rewrite_grouped_expr(h, &|c| find_key(c).map(|k| k.alias.clone()), &|a| {
                find_agg(a).map(|x| x.alias.clone())
            })?;
            let idx = self.clauses.len();
            self.clauses.push(cy::Clause::Where(rewritten));
            self.trace
                .entries
                .push((SqlKey::Having, ClauseRole::Clause(idx)));
        }

        let mut ret_items = Vec::new();
        for p in &stmt.projections {
            match p {
                Projection::Column(c) => {
                    ret_items.push(cy::ValueExpr::Ident(find_key(c).unwrap().alias.clone()))
                }
                Projection::Aggregate(a) => {
                    ret_items.push(cy::ValueExpr::Ident(find_agg(a).unwrap().alias.clone()))
                }
                _ => unreachable!(),
            }
        }
        let mut order_by = Vec::new();
        for o in &stmt.order_by {
            let expr = match &o.expr {
                Operand::Column(c) => match find_key(c) {
                    Some(k) => cy::ValueExpr::Ident(k.alias.clone()),
                    None => {
                        return untranslatable("ORDER BY references a non-grouped column")
                    }
                },
                Operand::Agg(a) => cy::ValueExpr::Ident(find_agg(a).unwrap().alias.clone()),
                Operand::Lit(v) => cy::ValueExpr::Lit(v.clone()),
            };
            order_by.push(cy::OrderSpec { expr, desc: o.desc });
        }
        self.trace_projection(stmt);
        Ok(cy::Return {
            distinct: stmt.distinct,
            items: ret_items,
            order_by,
            limit: stmt.limit,
            skip: stmt.offset,
        })
    }

    fn trace_projection(&mut self, stmt: &SelectStmt) {
        self.trace.entries.push((SqlKey::Select, ClauseRole::Return));
        if !stmt.order_by.is_empty() {
            self.trace
                .entries
                .push((SqlKey::OrderBy, ClauseRole::ReturnOrderBy));
        }
        if stmt.limit.is_some() {
            self.trace
                .entries
                .push((SqlKey::Limit, ClauseRole::ReturnLimit));
        }
        if stmt.offset.is_some() {
            self.trace
                .entries
                .push((SqlKey::Offset, ClauseRole::ReturnSkip));
        }
    }
}

/// Column lists match as unordered case-insensitive multisets.
fn same_columns(a: &[String], b: &[String]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut bs: Vec<&String> = b.iter().collect();
    for col in a {
        match bs.iter().position(|c| c.eq_ignore_ascii_case(col)) {
            Some(i) => {
                bs.remove(i);
            }
            None => return false,
        }
    }
    true
}

fn same_col(a: &ColumnRef, b: &ColumnRef) -> bool {
    let qa = a.table.as_deref().unwrap_or("");
    let qb = b.table.as_deref().unwrap_or("");
    qa.eq_ignore_ascii_case(qb) && a.column.eq_ignore_ascii_case(&b.column)
}

fn map_cmp(op: sql::CmpOp) -> cy::CmpOp {
    match op {
        sql::CmpOp::Eq => cy::CmpOp::Eq,
        sql::CmpOp::Ne => cy::CmpOp::Ne,
        sql::CmpOp::Lt => cy::CmpOp::Lt,
        sql::CmpOp::Le => cy::CmpOp::Le,
        sql::CmpOp::Gt => cy::CmpOp::Gt,
        sql::CmpOp::Ge => cy::CmpOp::Ge,
    }
}

/// SQL LIKE to an anchored regex: `%` is `.*`, `_` is `.`, everything else
/// matches literally.
pub fn like_to_regex(pattern: &str) -> String {
    let mut out = String::new();
    for c in pattern.chars() {
        match c {
            '%' => out.push_str(".*"),
            '_' => out.push('.'),
            c if "\\.+*?()|[]{}^$".contains(c) => {
                out.push('\\');
                out.push(c);
            }
            c => out.push(c),
        }
    }
    out
}

/// Rewrite an inner-select WHERE against the inner binding. Only scalar
/// predicates on the inner table are supported; `map_col` places each
/// column on the edge or on a referenced entity.
fn rewrite_inner_expr(
    e: &sql::Expr,
    inner_binding: &str,
    map_col: &dyn Fn(&ColumnRef) -> Result<cy::ValueExpr, UntranslatableQuery>,
) -> Result<cy::BoolExpr, UntranslatableQuery> {
    let col = |c: &ColumnRef| -> Result<cy::ValueExpr, UntranslatableQuery> {
        match &c.table {
            Some(q) if q.eq_ignore_ascii_case(inner_binding) => map_col(c),
            Some(q) => untranslatable(format!(
                "nested select references `{q}` outside its own FROM"
            )),
            None => map_col(c),
        }
    };
    let operand = |o: &Operand| -> Result<cy::ValueExpr, UntranslatableQuery> {
        match o {
            Operand::Column(c) => col(c),
            Operand::Lit(v) => Ok(cy::ValueExpr::Lit(v.clone())),
            Operand::Agg(_) => untranslatable("aggregate inside a nested select"),
        }
    };
    Ok(match e {
        sql::Expr::Cmp { op, lhs, rhs } => cy::BoolExpr::Cmp {
            op: map_cmp(*op),
            lhs: operand(lhs)?,
            rhs: operand(rhs)?,
        },
        sql::Expr::Like {
            expr,
            pattern,
            negated,
        } => {
            let m = cy::BoolExpr::Regex {
                lhs: operand(expr)?,
                pattern: like_to_regex(pattern),
            };
            if *negated {
                cy::BoolExpr::Not(Box::new(m))
            } else {
                m
            }
        }
        sql::Expr::InList {
            expr,
            list,
            negated,
        } => {
            let m = cy::BoolExpr::In {
                lhs: operand(expr)?,
                list: cy::ListExpr::Lits(list.clone()),
            };
            if *negated {
                cy::BoolExpr::Not(Box::new(m))
            } else {
                m
            }
        }
        sql::Expr::InSelect { .. } => {
            return untranslatable("nested selects may not nest further")
        }
        sql::Expr::And(a, b) => cy::BoolExpr::And(
            Box::new(rewrite_inner_expr(a, inner_binding, inner_alias)?),
            Box::new(rewrite_inner_expr(b, inner_binding, inner_alias)?),
        ),
        sql::Expr::Or(a, b) => cy::BoolExpr::Or(
            Box::new(rewrite_inner_expr(a, inner_binding, inner_alias)?),
            Box::new(rewrite_inner_expr(b, inner_binding, inner_alias)?),
        ),
        sql::Expr::Not(inner) => cy::BoolExpr::Not(Box::new(rewrite_inner_expr(
            inner,
            inner_binding,
            inner_alias,
        )?)),
    })
}

/// Rewrite a HAVING expression over the WITH aliases: grouped columns map to
/// key aliases, aggregates to aggregate aliases; anything else is outside
/// the rule set.
fn rewrite_grouped_expr(
    e: &sql::Expr,
    key_alias: &dyn Fn(&ColumnRef) -> Option<String>,
    agg_alias: &dyn Fn(&sql::AggCall) -> Option<String>,
) -> Result<cy::BoolExpr, UntranslatableQuery> {
    let operand = |o: &Operand| -> Result<cy::ValueExpr, UntranslatableQuery> {
        match o {
            Operand::Column(c) => match key_alias(c) {
                Some(a) => Ok(cy::ValueExpr::Ident(a)),
                None => untranslatable(format!(
                    "HAVING references non-grouped column `{}`",
                    c.column
                )),
            },
            Operand::Agg(a) => match agg_alias(a) {
                Some(alias) => Ok(cy::ValueExpr::Ident(alias)),
                None => untranslatable("HAVING aggregate was not collected"),
            },
            Operand::Lit(v) => Ok(cy::ValueExpr::Lit(v.clone())),
        }
    };
    Ok(match e {
        sql::Expr::Cmp { op, lhs, rhs } => cy::BoolExpr::Cmp {
            op: map_cmp(*op),
            lhs: operand(lhs)?,
            rhs: operand(rhs)?,
        },
        sql::Expr::InList {
            expr,
            list,
            negated,
        } => {
            let m = cy::BoolExpr::In {
                lhs: operand(expr)?,
                list: cy::ListExpr::Lits(list.clone()),
            };
            if *negated {
                cy::BoolExpr::Not(Box::new(m))
            } else {
                m
            }
        }
        sql::Expr::Like {
            expr,
            pattern,
            negated,
        } => {
            let m = cy::BoolExpr::Regex {
                lhs: operand(expr)?,
                pattern: like_to_regex(pattern),
            };
            if *negated {
                cy::BoolExpr::Not(Box::new(m))
            } else {
                m
            }
        }
        sql::Expr::And(a, b) => cy::BoolExpr::And(
            Box::new(rewrite_grouped_expr(a, key_alias, agg_alias)?),
            Box::new(rewrite_grouped_expr(b, key_alias, agg_alias)?),
        ),
        sql::Expr::Or(a, b) => cy::BoolExpr::Or(
            Box::new(rewrite_grouped_expr(a, key_alias, agg_alias)?),
            Box::new(rewrite_grouped_expr(b, key_alias, agg_alias)?),
        ),
        sql::Expr::Not(inner) => {
            cy::BoolExpr::Not(Box::new(rewrite_grouped_expr(inner, key_alias, agg_alias)?))
        }
        sql::Expr::InSelect { .. } => {
            return untranslatable("sub-query in HAVING is outside the rule set")
        }
    })
}

fn conjuncts(e: &sql::Expr) -> Vec<&sql::Expr> {
    match e {
        sql::Expr::And(a, b) => {
            let mut v = conjuncts(a);
            v.extend(conjuncts(b));
            v
        }
        other => vec![other],
    }
}
