//! Query workloads: benchmark-compatible loaders (JSONL rows with a db id
//! and query text, or one plain SQL statement per line) and a seeded
//! generator of desk-scale database/query instances for differential
//! testing.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::relational::{Column, ForeignKey, KeyOrigin, RelationalDatabase, Row, Table, TypeTag};
use crate::value::Value;

#[derive(Debug, Error)]
#[error("workload format error: {detail}")]
pub struct WorkloadFormatError {
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkloadFormat {
    Jsonl,
    Plain,
}

impl std::str::FromStr for WorkloadFormat {
    type Err = WorkloadFormatError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(WorkloadFormat::Jsonl),
            "plain" | "sql" => Ok(WorkloadFormat::Plain),
            other => Err(WorkloadFormatError {
                detail: format!("unknown workload format `{other}`"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadEntry {
    pub db_id: String,
    pub sql: String,
    /// Natural-language question, carried through as opaque metadata.
    pub question: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Workload {
    pub entries: Vec<WorkloadEntry>,
}

#[derive(Debug, Deserialize)]
struct JsonlRow {
    db_id: String,
    #[serde(alias = "sql")]
    query: String,
    #[serde(default)]
    question: Option<String>,
}

impl Workload {
    pub fn load(
        path: &Path,
        format: WorkloadFormat,
        default_db: Option<&str>,
    ) -> Result<Workload, WorkloadFormatError> {
        let text = fs::read_to_string(path).map_err(|e| WorkloadFormatError {
            detail: format!("cannot read `{}`: {e}", path.display()),
        })?;
        Workload::parse(&text, format, default_db)
    }

    pub fn parse(
        text: &str,
        format: WorkloadFormat,
        default_db: Option<&str>,
    ) -> Result<Workload, WorkloadFormatError> {
        let mut entries = Vec::new();
        match format {
            WorkloadFormat::Jsonl => {
                for (i, line) in text.lines().enumerate() {
                    if line.trim().is_empty() {
                        continue;
                    }
                    let row: JsonlRow =
                        serde_json::from_str(line).map_err(|e| WorkloadFormatError {
                            detail: format!("line {}: {e}", i + 1),
                        })?;
                    entries.push(WorkloadEntry {
                        db_id: row.db_id,
                        sql: row.query,
                        question: row.question,
                    });
                }
            }
            WorkloadFormat::Plain => {
                let db_id = default_db.ok_or_else(|| WorkloadFormatError {
                    detail: "plain format requires a default database id".into(),
                })?;
                for line in text.lines() {
                    let line = line.trim();
                    if line.is_empty() || line.starts_with("--") {
                        continue;
                    }
                    entries.push(WorkloadEntry {
                        db_id: db_id.to_string(),
                        sql: line.trim_end_matches(';').to_string(),
                        question: None,
                    });
                }
            }
        }
        Ok(Workload { entries })
    }

    /// Every db id must name a loaded database.
    pub fn validate_dbs(&self, known: &BTreeSet<String>) -> Result<(), WorkloadFormatError> {
        let unknown: BTreeSet<&str> = self
            .entries
            .iter()
            .filter(|e| !known.contains(&e.db_id))
            .map(|e| e.db_id.as_str())
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(WorkloadFormatError {
                detail: format!(
                    "workload references unknown database id(s): {}",
                    unknown.into_iter().collect::<Vec<_>>().join(", ")
                ),
            })
        }
    }
}

// ───────────────────────── instance generator ─────────────────────────

#[derive(Debug, Clone, Copy)]
pub struct GenLimits {
    pub max_tables: usize,
    pub max_rows: usize,
    pub max_queries: usize,
}

impl Default for GenLimits {
    fn default() -> Self {
        GenLimits {
            max_tables: 5,
            max_rows: 6,
            max_queries: 12,
        }
    }
}

/// SplitMix64: deterministic and seed-stable across platforms.
struct Rng {
    state: u64,
}

impl Rng {
    fn new(seed: u64) -> Rng {
        Rng {
            state: seed.wrapping_add(0x9e37_79b9_7f4a_7c15),
        }
    }

    fn next(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    fn below(&mut self, n: usize) -> usize {
        (self.next() % n.max(1) as u64) as usize
    }

    fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.below(hi.saturating_sub(lo) + 1)
    }

    fn chance(&mut self, pct: usize) -> bool {
        self.below(100) < pct
    }

    fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len())]
    }
}

const NAME_POOL: &[&str] = &["amber", "birch", "cedar", "dusk", "ember", "fern"];
const TAG_POOL: &[&str] = &["lit", "hot", "raw"];

/// Which optional tables an instance carries beyond alpha/bravo/ties.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Shape {
    chord: bool, // single-FK entity
    krate: bool, // two FKs plus single-column key
    hydra: bool, // three-FK hyperedge
}

/// Deterministically generate a database plus a workload of queries that
/// exercise every translation rule. Schemas cover all three entity
/// conditions plus linking and hyperedge shapes; every generated query
/// parses and translates.
pub fn generate_random_instance(seed: u64, limits: &GenLimits) -> (RelationalDatabase, Workload) {
    let mut rng = Rng::new(seed);
    let max_tables = limits.max_tables.clamp(2, 5);
    let max_rows = limits.max_rows.clamp(1, 6);

    let shape = match max_tables {
        5 => match rng.below(4) {
            0 => Shape {
                chord: true,
                krate: false,
                hydra: true,
            },
            1 => Shape {
                chord: true,
                krate: true,
                hydra: false,
            },
            2 => Shape {
                chord: false,
                krate: true,
                hydra: false,
            },
            _ => Shape {
                chord: true,
                krate: false,
                hydra: false,
            },
        },
        4 => {
            if rng.chance(50) {
                Shape {
                    chord: true,
                    krate: false,
                    hydra: false,
                }
            } else {
                Shape {
                    chord: false,
                    krate: true,
                    hydra: false,
                }
            }
        }
        _ => Shape {
            chord: false,
            krate: false,
            hydra: false,
        },
    };

    let mut db = RelationalDatabase::new(format!("gen{seed}"));

    // alpha: entity with no foreign keys
    let n_alpha = rng.range(1, max_rows);
    let mut alpha = Table::new("alpha");
    alpha.columns = vec![
        Column::new("aid", TypeTag::Int),
        Column::new("name", TypeTag::Text),
        Column::new("score", TypeTag::Real),
        Column::new("rank", TypeTag::Int),
    ];
    alpha.primary_key = vec!["aid".into()];
    for i in 1..=n_alpha {
        alpha.rows.push(Row::new(vec![
            Value::Int(i as i64),
            if rng.chance(10) {
                Value::Null
            } else {
                Value::text(*rng.pick(NAME_POOL))
            },
            if rng.chance(10) {
                Value::Null
            } else {
                Value::Float(rng.below(12) as f64 / 2.0)
            },
            Value::Int(rng.below(6) as i64),
        ]));
    }
    db.tables.push(alpha);

    // bravo + ties need at least three table slots
    let has_bravo = max_tables >= 3;
    let n_bravo = rng.range(1, max_rows);
    if has_bravo {
        let mut bravo = Table::new("bravo");
        bravo.columns = vec![
            Column::new("bid", TypeTag::Int),
            Column::new("label", TypeTag::Text),
            Column::new("level", TypeTag::Int),
        ];
        bravo.primary_key = vec!["bid".into()];
        for i in 1..=n_bravo {
            bravo.rows.push(Row::new(vec![
                Value::Int(i as i64),
                Value::text(*rng.pick(NAME_POOL)),
                Value::Int(rng.below(6) as i64),
            ]));
        }
        db.tables.push(bravo);

        // ties: linking table with a composite key and two data columns
        let mut ties = Table::new("ties");
        ties.columns = vec![
            Column::new("fka", TypeTag::Int),
            Column::new("fkb", TypeTag::Int),
            Column::new("weight", TypeTag::Int),
            Column::new("tag", TypeTag::Text),
        ];
        ties.primary_key = vec!["fka".into(), "fkb".into()];
        ties.foreign_keys = vec![
            fk(&["fka"], "alpha", &["aid"]),
            fk(&["fkb"], "bravo", &["bid"]),
        ];
        let mut pairs = BTreeSet::new();
        for _ in 0..rng.range(0, max_rows) {
            let pair = (rng.range(1, n_alpha), rng.range(1, n_bravo));
            if pairs.insert(pair) {
                ties.rows.push(Row::new(vec![
                    Value::Int(pair.0 as i64),
                    Value::Int(pair.1 as i64),
                    Value::Int(rng.below(10) as i64),
                    Value::text(*rng.pick(TAG_POOL)),
                ]));
            }
        }
        db.tables.push(ties);
    }

    let n_chord = rng.range(1, max_rows);
    if shape.chord {
        let mut chord = Table::new("chord");
        chord.columns = vec![
            Column::new("cid", TypeTag::Int),
            Column::new("fka", TypeTag::Int),
            Column::new("depth", TypeTag::Int),
            Column::new("note", TypeTag::Text),
        ];
        chord.primary_key = vec!["cid".into()];
        chord.foreign_keys = vec![fk(&["fka"], "alpha", &["aid"])];
        for i in 1..=n_chord {
            chord.rows.push(Row::new(vec![
                Value::Int(i as i64),
                Value::Int(rng.range(1, n_alpha) as i64),
                Value::Int(rng.below(6) as i64),
                Value::text(*rng.pick(NAME_POOL)),
            ]));
        }
        db.tables.push(chord);
    }

    if shape.krate {
        let mut krate = Table::new("krate");
        krate.columns = vec![
            Column::new("kid", TypeTag::Int),
            Column::new("fka", TypeTag::Int),
            Column::new("fkb", TypeTag::Int),
            Column::new("mark", TypeTag::Int),
        ];
        krate.primary_key = vec!["kid".into()];
        krate.foreign_keys = vec![
            fk(&["fka"], "alpha", &["aid"]),
            fk(&["fkb"], "bravo", &["bid"]),
        ];
        for i in 1..=rng.range(1, max_rows) {
            krate.rows.push(Row::new(vec![
                Value::Int(i as i64),
                Value::Int(rng.range(1, n_alpha) as i64),
                Value::Int(rng.range(1, n_bravo) as i64),
                Value::Int(rng.below(10) as i64),
            ]));
        }
        db.tables.push(krate);
    }

    if shape.hydra {
        let mut hydra = Table::new("hydra");
        hydra.columns = vec![
            Column::new("hid", TypeTag::Int),
            Column::new("fka", TypeTag::Int),
            Column::new("fkb", TypeTag::Int),
            Column::new("fkc", TypeTag::Int),
            Column::new("grade", TypeTag::Text),
        ];
        hydra.primary_key = vec!["hid".into()];
        hydra.foreign_keys = vec![
            fk(&["fka"], "alpha", &["aid"]),
            fk(&["fkb"], "bravo", &["bid"]),
            fk(&["fkc"], "chord", &["cid"]),
        ];
        for i in 1..=rng.range(1, max_rows) {
            hydra.rows.push(Row::new(vec![
                Value::Int(i as i64),
                Value::Int(rng.range(1, n_alpha) as i64),
                Value::Int(rng.range(1, n_bravo) as i64),
                Value::Int(rng.range(1, n_chord) as i64),
                Value::text(*rng.pick(TAG_POOL)),
            ]));
        }
        db.tables.push(hydra);
    }

    let workload = generate_queries(&mut rng, &db, &shape, has_bravo, limits);
    (db, workload)
}

fn fk(cols: &[&str], table: &str, ref_cols: &[&str]) -> ForeignKey {
    ForeignKey {
        columns: cols.iter().map(|s| s.to_string()).collect(),
        referenced_table: table.to_string(),
        referenced_columns: ref_cols.iter().map(|s| s.to_string()).collect(),
        origin: KeyOrigin::Declared,
    }
}

fn generate_queries(
    rng: &mut Rng,
    db: &RelationalDatabase,
    shape: &Shape,
    has_bravo: bool,
    limits: &GenLimits,
) -> Workload {
    let db_id = db.name.clone();
    let n_queries = limits.max_queries.clamp(1, 50);
    let mut entries = Vec::new();
    let mut guard = 0usize;
    while entries.len() < n_queries && guard < n_queries * 10 {
        guard += 1;
        let template = rng.below(18);
        if let Some(sql) = build_template(rng, template, shape, has_bravo) {
            entries.push(WorkloadEntry {
                db_id: db_id.clone(),
                sql,
                question: None,
            });
        }
    }
    Workload { entries }
}

fn build_template(
    rng: &mut Rng,
    template: usize,
    shape: &Shape,
    has_bravo: bool,
) -> Option<String> {
    let tag_lit = |rng: &mut Rng| format!("'{}'", rng.pick(TAG_POOL));
    let k = |rng: &mut Rng| rng.below(6).to_string();
    let mut s = String::new();
    match template {
        0 => {
            write!(s, "SELECT name FROM alpha").unwrap();
            if rng.chance(60) {
                write!(s, " WHERE rank >= {}", k(rng)).unwrap();
            }
        }
        1 => s.push_str("SELECT DISTINCT name FROM alpha"),
        2 => {
            if !has_bravo {
                return None;
            }
            write!(
                s,
                "SELECT T1.name, T3.label FROM alpha AS T1 \
                 JOIN ties AS T2 ON T1.aid = T2.fka \
                 JOIN bravo AS T3 ON T2.fkb = T3.bid"
            )
            .unwrap();
            if rng.chance(40) {
                write!(s, " WHERE T1.rank > {}", k(rng)).unwrap();
            }
        }
        3 => {
            if !has_bravo {
                return None;
            }
            write!(
                s,
                "SELECT T1.name, T2.weight FROM alpha AS T1 \
                 JOIN ties AS T2 ON T1.aid = T2.fka WHERE T2.tag = {}",
                tag_lit(rng)
            )
            .unwrap();
        }
        4 => {
            if !shape.chord {
                return None;
            }
            write!(
                s,
                "SELECT T1.name FROM alpha AS T1 JOIN chord AS T2 ON T1.aid = T2.fka \
                 WHERE T2.depth > {}",
                k(rng)
            )
            .unwrap();
        }
        5 => {
            if !has_bravo {
                return None;
            }
            s.push_str("SELECT name FROM alpha WHERE aid NOT IN (SELECT fka FROM ties)");
        }
        6 => {
            if !shape.chord {
                return None;
            }
            s.push_str("SELECT name FROM alpha WHERE aid NOT IN (SELECT fka FROM chord)");
        }
        7 => {
            if !shape.chord {
                return None;
            }
            write!(
                s,
                "SELECT name FROM alpha WHERE aid IN (SELECT fka FROM chord WHERE depth > {})",
                k(rng)
            )
            .unwrap();
        }
        8 => {
            if !has_bravo {
                return None;
            }
            write!(
                s,
                "SELECT T1.name, count(*) FROM alpha AS T1 JOIN ties AS T2 ON T1.aid = T2.fka \
                 GROUP BY T1.name"
            )
            .unwrap();
            if rng.chance(50) {
                s.push_str(" HAVING count(*) > 1");
            }
            if rng.chance(50) {
                s.push_str(" ORDER BY count(*) DESC LIMIT 2");
            }
        }
        9 => {
            let agg = *rng.pick(&[
                "count(*)",
                "max(rank)",
                "min(rank)",
                "sum(rank)",
                "avg(score)",
            ]);
            write!(s, "SELECT {agg} FROM alpha").unwrap();
            if rng.chance(40) {
                write!(s, " WHERE rank <= {}", k(rng)).unwrap();
            }
        }
        10 => {
            if !has_bravo {
                return None;
            }
            s.push_str("SELECT name FROM alpha UNION SELECT label FROM bravo");
        }
        11 => {
            let dir = if rng.chance(50) { " DESC" } else { "" };
            let limit = rng.range(1, 4);
            write!(s, "SELECT name FROM alpha ORDER BY name{dir} LIMIT {limit}").unwrap();
            if rng.chance(50) {
                write!(s, " OFFSET {}", rng.below(3)).unwrap();
            }
        }
        12 => {
            let pattern = *rng.pick(&["a%", "%er%", "_irch", "%n"]);
            write!(s, "SELECT name FROM alpha WHERE name LIKE '{pattern}'").unwrap();
        }
        13 => {
            write!(
                s,
                "SELECT name FROM alpha WHERE rank IN ({}, {})",
                k(rng),
                k(rng)
            )
            .unwrap();
        }
        14 => s.push_str("SELECT count(DISTINCT name) FROM alpha"),
        15 => {
            if !shape.hydra {
                return None;
            }
            write!(
                s,
                "SELECT T1.name, T3.label FROM alpha AS T1 \
                 JOIN hydra AS T2 ON T1.aid = T2.fka \
                 JOIN bravo AS T3 ON T2.fkb = T3.bid"
            )
            .unwrap();
        }
        16 => {
            if !shape.chord || !has_bravo {
                return None;
            }
            write!(
                s,
                "SELECT T1.name, T3.label, T4.note FROM alpha AS T1 \
                 JOIN ties AS T2 ON T1.aid = T2.fka \
                 JOIN bravo AS T3 ON T2.fkb = T3.bid \
                 JOIN chord AS T4 ON T1.aid = T4.fka"
            )
            .unwrap();
        }
        17 => {
            if !shape.krate {
                return None;
            }
            if rng.chance(50) {
                write!(
                    s,
                    "SELECT T1.name, T2.mark FROM alpha AS T1 JOIN krate AS T2 ON T1.aid = T2.fka"
                )
                .unwrap();
            } else {
                write!(
                    s,
                    "SELECT T1.name, T3.label FROM alpha AS T1 \
                     JOIN krate AS T2 ON T1.aid = T2.fka \
                     JOIN bravo AS T3 ON T2.fkb = T3.bid"
                )
                .unwrap();
            }
        }
        _ => {
            // numeric widening: compare the float column against an integer
            let lit = if rng.chance(50) {
                rng.below(6).to_string()
            } else {
                format!("{}.5", rng.below(5))
            };
            write!(s, "SELECT name FROM alpha WHERE score >= {lit}").unwrap();
        }
    }
    Some(s)
}
