//! Command-line entry point: migrate relational databases to property
//! graphs, translate SQL to Cypher, evaluate workloads differentially,
//! inspect graph statistics, and drive an interactive translation loop.
//!
//! Output is plain text with no color codes, so `NO_COLOR` is honored
//! trivially. Exit codes: 0 success, 1 I/O or internal failure, 2 usage,
//! 3 SQL parse failure, 4 mapping failure, 5 evaluation below threshold.

use std::collections::BTreeMap;
use std::io::{BufRead, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use relic_core::cypher::{render_cypher, translate};
use relic_core::eval::{check_and_repair, run_workload, MetricsReport};
use relic_core::exec::{compare_results, exec_cypher, exec_sql};
use relic_core::graph::{export_graph, graph_stats, import_graph_jsonl, ExportFormat};
use relic_core::pipeline::{load_database, prepare, MigrateOptions, PreparedDb};
use relic_core::sql::{normalize_identifiers, parse_sql};
use relic_core::workload::{generate_random_instance, GenLimits, Workload, WorkloadFormat};

const EXIT_IO: u8 = 1;
const EXIT_PARSE: u8 = 3;
const EXIT_MAPPING: u8 = 4;
const EXIT_THRESHOLD: u8 = 5;

#[derive(Parser)]
#[command(
    name = "relic",
    about = "Relational-to-property-graph migration with SQL-to-Cypher translation \
             and differential checking",
    version
)]
struct Cli {
    /// Key=value file supplying defaults for any long flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load, repair, and migrate a database; export the resulting graph.
    Migrate(MigrateArgs),
    /// Translate SQL (file or stdin) to Cypher text.
    Translate(TranslateArgs),
    /// Execute a workload on both stores and score the agreement.
    Eval(EvalArgs),
    /// Print statistics for an exported graph.
    Stats(StatsArgs),
    /// Line-oriented loop: read SQL, print Cypher, optionally execute both.
    Repl(ReplArgs),
}

#[derive(Args)]
struct MigrateArgs {
    /// Database input: a .sql dump, a directory with schema.sql (and an
    /// optional manifest.json), or a CSV bundle directory.
    #[arg(long = "in")]
    input: PathBuf,
    /// Namespace domain; defaults to the input name.
    #[arg(long)]
    domain: Option<String>,
    /// Disable `domain.table` namespacing.
    #[arg(long)]
    no_namespace: bool,
    /// Graph output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Export format: jsonl or cypher-script.
    #[arg(long)]
    format: Option<String>,
    /// Workload used for JOIN ON foreign-key inference.
    #[arg(long)]
    workload: Option<PathBuf>,
    #[arg(long)]
    workload_format: Option<String>,
    #[arg(long)]
    no_infer_fks: bool,
    #[arg(long)]
    no_infer_pks: bool,
    #[arg(long)]
    no_normalize: bool,
    /// Write the repair log as JSON.
    #[arg(long)]
    repair_report: Option<PathBuf>,
    /// Write the build log as JSON.
    #[arg(long)]
    build_report: Option<PathBuf>,
    /// Consistency-check iteration budget.
    #[arg(long)]
    max_iterations: Option<usize>,
}

#[derive(Args)]
struct TranslateArgs {
    /// Database input providing the schema.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    no_namespace: bool,
    /// SQL file; stdin when omitted. One query per line.
    #[arg(long)]
    sql: Option<PathBuf>,
    /// Also print the SQL and Cypher syntax trees as JSON.
    #[arg(long)]
    emit_ast: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Database inputs (repeatable).
    #[arg(long = "db")]
    dbs: Vec<PathBuf>,
    /// Workload file. Without it, seeded random instances are evaluated.
    #[arg(long)]
    workload: Option<PathBuf>,
    #[arg(long)]
    workload_format: Option<String>,
    /// Exit 0 only when EA reaches this value.
    #[arg(long)]
    threshold: Option<f64>,
    /// Count known divergences as plain mismatches.
    #[arg(long)]
    strict: bool,
    /// Write the metrics report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    parallel: Option<usize>,
    #[arg(long)]
    no_namespace: bool,
    /// Seed for the generated self-check workload.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of generated instances in self-check mode.
    #[arg(long)]
    instances: Option<usize>,
}

#[derive(Args)]
struct StatsArgs {
    /// Graph export in jsonl form.
    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Args)]
struct ReplArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    no_namespace: bool,
    /// Execute each query on both stores and print both result sets.
    #[arg(long)]
    execute: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match cli.config.as_deref().map(read_config).transpose() {
        Ok(c) => c.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_IO);
        }
    };
    let code = match cli.command {
        Command::Migrate(args) => cmd_migrate(args, &config),
        Command::Translate(args) => cmd_translate(args, &config),
        Command::Eval(args) => cmd_eval(args, &config),
        Command::Stats(args) => cmd_stats(args),
        Command::Repl(args) => cmd_repl(args, &config),
    };
    match code {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

struct CmdError {
    code: u8,
    message: String,
}

fn fail<T>(code: u8, message: impl Into<String>) -> Result<T, CmdError> {
    Err(CmdError {
        code,
        message: message.into(),
    })
}

type Config = BTreeMap<String, String>;

/// `key = value` lines mirroring the long flags; `#` comments.
fn read_config(path: &Path) -> Result<Config, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut map = Config::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!("bad config line `{line}` (expected key=value)"));
        };
        map.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(map)
}

fn cfg_get<T: std::str::FromStr>(config: &Config, key: &str) -> Option<T> {
    config.get(key).and_then(|v| v.parse().ok())
}

fn cfg_flag(config: &Config, key: &str) -> bool {
    matches!(config.get(key).map(String::as_str), Some("true") | Some("1"))
}

fn load_named(path: &Path) -> Result<relic_core::relational::RelationalDatabase, CmdError> {
    let loaded = load_database(path).map_err(|e| CmdError {
        code: EXIT_MAPPING,
        message: e.to_string(),
    })?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    Ok(loaded.db)
}

fn effective_domain(
    domain: &Option<String>,
    no_namespace: bool,
    db_name: &str,
    config: &Config,
) -> Option<String> {
    if no_namespace || cfg_flag(config, "no-namespace") {
        return None;
    }
    domain
        .clone()
        .or_else(|| config.get("domain").cloned())
        .or_else(|| Some(db_name.to_string()))
}

fn load_workload_file(
    path: &Path,
    format: Option<&str>,
    default_db: Option<&str>,
) -> Result<Workload, CmdError> {
    let format: WorkloadFormat = format
        .unwrap_or("jsonl")
        .parse()
        .map_err(|e: relic_core::workload::WorkloadFormatError| CmdError {
            code: 2,
            message: e.to_string(),
        })?;
    Workload::load(path, format, default_db).map_err(|e| CmdError {
        code: EXIT_IO,
        message: e.to_string(),
    })
}

fn prepare_one(
    db: relic_core::relational::RelationalDatabase,
    domain: Option<String>,
    workload: &Workload,
) -> Result<PreparedDb, CmdError> {
    let texts = workload
        .entries
        .iter()
        .filter(|e| e.db_id == db.name)
        .map(|e| e.sql.clone())
        .collect();
    let opts = MigrateOptions {
        domain,
        workload_texts: texts,
        ..MigrateOptions::default()
    };
    prepare(db, &opts).map_err(|e| CmdError {
        code: EXIT_MAPPING,
        message: e.to_string(),
    })
}

// ───────────────────────── migrate ─────────────────────────

fn cmd_migrate(args: MigrateArgs, config: &Config) -> Result<(), CmdError> {
    let db = load_named(&args.input)?;
    let domain = effective_domain(&args.domain, args.no_namespace, &db.name, config);
    let workload = match &args.workload {
        Some(p) => load_workload_file(
            p,
            args.workload_format
                .as_deref()
                .or(config.get("workload-format").map(String::as_str)),
            Some(&db.name),
        )?,
        None => Workload::default(),
    };
    let original = db.clone();
    let opts = MigrateOptions {
        domain,
        infer_fks: !(args.no_infer_fks || cfg_flag(config, "no-infer-fks")),
        infer_pks: !(args.no_infer_pks || cfg_flag(config, "no-infer-pks")),
        normalize: !(args.no_normalize || cfg_flag(config, "no-normalize")),
        workload_texts: workload.entries.iter().map(|e| e.sql.clone()).collect(),
    };
    let prepared = prepare(db, &opts).map_err(|e| CmdError {
        code: EXIT_MAPPING,
        message: e.to_string(),
    })?;

    let max_iterations = args
        .max_iterations
        .or_else(|| cfg_get(config, "max-iterations"))
        .unwrap_or(3);
    let (consistency, graph) = check_and_repair(&original, prepared.graph, &opts, max_iterations)
        .map_err(|e| CmdError {
            code: EXIT_MAPPING,
            message: e.to_string(),
        })?;

    let format: ExportFormat = args
        .format
        .as_deref()
        .or(config.get("format").map(String::as_str))
        .unwrap_or("jsonl")
        .parse()
        .map_err(|e: relic_core::graph::GraphIoError| CmdError {
            code: 2,
            message: e.to_string(),
        })?;
    let bytes = export_graph(&graph, format);
    match &args.out {
        Some(path) => {
            std::fs::write(path, &bytes).map_err(|e| CmdError {
                code: EXIT_IO,
                message: format!("cannot write {}: {e}", path.display()),
            })?;
            let stats = graph_stats(&graph);
            println!(
                "migrated: {} nodes, {} edges, {} labels, {} edge types",
                stats.node_count,
                stats.edge_count,
                stats.labels.len(),
                stats.types.len()
            );
            println!(
                "consistency: converged={} iterations={}",
                consistency.converged, consistency.iterations
            );
        }
        None => {
            std::io::stdout().write_all(&bytes).map_err(|e| CmdError {
                code: EXIT_IO,
                message: e.to_string(),
            })?;
        }
    }
    let repair_text = prepared.repair_log.to_string();
    if !repair_text.is_empty() {
        eprint!("{repair_text}");
    }
    if let Some(path) = &args.repair_report {
        std::fs::write(path, prepared.repair_log.to_json()).map_err(|e| CmdError {
            code: EXIT_IO,
            message: e.to_string(),
        })?;
    }
    if let Some(path) = &args.build_report {
        std::fs::write(path, prepared.build_log.to_json()).map_err(|e| CmdError {
            code: EXIT_IO,
            message: e.to_string(),
        })?;
    }
    if !consistency.converged {
        return fail(
            EXIT_MAPPING,
            format!(
                "consistency check did not converge in {max_iterations} iteration(s): {} difference(s)",
                consistency.diffs.len()
            ),
        );
    }
    Ok(())
}

// ───────────────────────── translate ─────────────────────────

fn cmd_translate(args: TranslateArgs, config: &Config) -> Result<(), CmdError> {
    let db = load_named(&args.input)?;
    let domain = effective_domain(&args.domain, args.no_namespace, &db.name, config);
    let prepared = prepare_one(db, domain, &Workload::default())?;

    let text = match &args.sql {
        Some(path) => std::fs::read_to_string(path).map_err(|e| CmdError {
            code: EXIT_IO,
            message: format!("cannot read {}: {e}", path.display()),
        })?,
        None => {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| CmdError {
                    code: EXIT_IO,
                    message: e.to_string(),
                })?;
            buf
        }
    };
    let queries: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with("--"))
        .collect();
    if queries.is_empty() {
        return fail(2, "no SQL input");
    }
    for q in queries {
        let tree = match parse_sql(q) {
            Ok(t) => t,
            Err(e) => return fail(EXIT_PARSE, format!("{q}\n{e}")),
        };
        let tree = match normalize_identifiers(&tree, &prepared.binding) {
            Ok(t) => t,
            Err(e) => return fail(EXIT_MAPPING, e.to_string()),
        };
        let cq = match translate(&tree, &prepared.classification) {
            Ok(c) => c,
            Err(e) => return fail(EXIT_MAPPING, e.to_string()),
        };
        if args.emit_ast {
            let blob = serde_json::json!({
                "sql": q,
                "sql_ast": tree,
                "cypher_ast": cq,
                "cypher": render_cypher(&cq),
            });
            println!("{}", serde_json::to_string_pretty(&blob).expect("ast json"));
        } else {
            println!("{}", render_cypher(&cq));
        }
    }
    Ok(())
}

// ───────────────────────── eval ─────────────────────────

fn cmd_eval(args: EvalArgs, config: &Config) -> Result<(), CmdError> {
    let threshold = args
        .threshold
        .or_else(|| cfg_get(config, "threshold"))
        .unwrap_or(1.0);
    let strict = args.strict || cfg_flag(config, "strict");
    let parallel = args
        .parallel
        .or_else(|| cfg_get(config, "parallel"))
        .unwrap_or(1);

    let report = match &args.workload {
        Some(path) => {
            if args.dbs.is_empty() {
                return fail(2, "eval requires at least one --db");
            }
            let mut dbs = Vec::new();
            for p in &args.dbs {
                dbs.push(load_named(p)?);
            }
            let default_db = if dbs.len() == 1 {
                Some(dbs[0].name.clone())
            } else {
                None
            };
            let workload = load_workload_file(
                path,
                args.workload_format
                    .as_deref()
                    .or(config.get("workload-format").map(String::as_str)),
                default_db.as_deref(),
            )?;
            let known = dbs.iter().map(|d| d.name.clone()).collect();
            workload.validate_dbs(&known).map_err(|e| CmdError {
                code: 2,
                message: e.to_string(),
            })?;
            let mut prepared = BTreeMap::new();
            for db in dbs {
                let name = db.name.clone();
                let domain = effective_domain(&None, args.no_namespace, &name, config);
                let p = prepare_one(db, domain, &workload)?;
                prepared.insert(name, p);
            }
            run_workload(&prepared, &workload, strict, parallel).map_err(|e| CmdError {
                code: 2,
                message: e.to_string(),
            })?
        }
        None => {
            // self-check over generated instances
            let seed = args.seed.or_else(|| cfg_get(config, "seed")).unwrap_or(0);
            let instances = args
                .instances
                .or_else(|| cfg_get(config, "instances"))
                .unwrap_or(50);
            let limits = GenLimits::default();
            let mut outcomes = Vec::new();
            for i in 0..instances {
                let (db, workload) =
                    generate_random_instance(seed.wrapping_add(i as u64), &limits);
                let name = db.name.clone();
                let domain = if args.no_namespace {
                    None
                } else {
                    Some(name.clone())
                };
                let prepared = prepare_one(db, domain, &workload)?;
                let mut map = BTreeMap::new();
                map.insert(name, prepared);
                let r = run_workload(&map, &workload, strict, parallel).map_err(|e| CmdError {
                    code: 2,
                    message: e.to_string(),
                })?;
                outcomes.extend(r.outcomes);
            }
            MetricsReport::from_outcomes(outcomes).map_err(|e| CmdError {
                code: 2,
                message: e.to_string(),
            })?
        }
    };

    print!("{}", report.summary_table());
    if let Some(path) = &args.report {
        std::fs::write(path, report.to_json()).map_err(|e| CmdError {
            code: EXIT_IO,
            message: e.to_string(),
        })?;
    }
    if report.ea + 1e-12 < threshold {
        return fail(
            EXIT_THRESHOLD,
            format!("EA {:.4} below threshold {threshold:.4}", report.ea),
        );
    }
    Ok(())
}

// ───────────────────────── stats ─────────────────────────

fn cmd_stats(args: StatsArgs) -> Result<(), CmdError> {
    let bytes = std::fs::read(&args.input).map_err(|e| CmdError {
        code: EXIT_IO,
        message: format!("cannot read {}: {e}", args.input.display()),
    })?;
    let graph = import_graph_jsonl(&bytes).map_err(|e| CmdError {
        code: EXIT_MAPPING,
        message: e.to_string(),
    })?;
    let stats = graph_stats(&graph);
    println!(
        "{}",
        serde_json::to_string_pretty(&stats).expect("stats serialize")
    );
    Ok(())
}

// ───────────────────────── repl ─────────────────────────

fn cmd_repl(args: ReplArgs, config: &Config) -> Result<(), CmdError> {
    let db = load_named(&args.input)?;
    let domain = effective_domain(&args.domain, args.no_namespace, &db.name, config);
    let prepared = prepare_one(db, domain, &Workload::default())?;
    let stdin = std::io::stdin();
    let mut out = std::io::stdout();
    loop {
        write!(out, "sql> ").ok();
        out.flush().ok();
        let mut line = String::new();
        match stdin.lock().read_line(&mut line) {
            Ok(0) => break,
            Ok(_) => {}
            Err(e) => return fail(EXIT_IO, e.to_string()),
        }
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if matches!(line, "exit" | "quit" | ":q") {
            break;
        }
        let tree = match parse_sql(line) {
            Ok(t) => t,
            Err(e) => {
                println!("parse error: {e}");
                continue;
            }
        };
        let tree = match normalize_identifiers(&tree, &prepared.binding) {
            Ok(t) => t,
            Err(e) => {
                println!("schema error: {e}");
                continue;
            }
        };
        let cq = match translate(&tree, &prepared.classification) {
            Ok(c) => c,
            Err(e) => {
                println!("translation error: {e}");
                continue;
            }
        };
        println!("cypher> {}", render_cypher(&cq));
        if args.execute {
            match (
                exec_sql(&prepared.original, &tree),
                exec_cypher(&prepared.graph, &cq),
            ) {
                (Ok(r_sql), Ok(r_cyp)) => {
                    println!("sql-result>    {}", r_sql.to_json());
                    println!("cypher-result> {}", r_cyp.to_json());
                    println!("match> {}", compare_results(&r_sql, &r_cyp));
                }
                (Err(e), _) | (_, Err(e)) => println!("execution error: {e}"),
            }
        }
    }
    Ok(())
}
