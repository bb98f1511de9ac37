//! Fixture-driven end-to-end runs: load, repair, migrate, translate, and
//! differentially execute the curated sample databases.

mod support;

use std::collections::BTreeMap;

use relic_core::eval::{check_and_repair, run_workload};
use relic_core::graph::graph_stats;
use relic_core::pipeline::{load_database, prepare, MigrateOptions};
use relic_core::workload::{Workload, WorkloadFormat};

fn fixture_workload(name: &str) -> Workload {
    Workload::load(
        &support::fixture_path(name).join("workload.jsonl"),
        WorkloadFormat::Jsonl,
        None,
    )
    .expect("workload loads")
}

fn prepare_fixture(name: &str) -> relic_core::pipeline::PreparedDb {
    let loaded = load_database(&support::fixture_path(name)).expect("fixture loads");
    assert!(loaded.warnings.is_empty(), "{:?}", loaded.warnings);
    let workload = fixture_workload(name);
    let opts = MigrateOptions {
        domain: Some(loaded.db.name.clone()),
        workload_texts: workload.entries.iter().map(|e| e.sql.clone()).collect(),
        ..MigrateOptions::default()
    };
    prepare(loaded.db, &opts).expect("pipeline runs")
}

fn assert_ea_one(name: &str) {
    let prepared = prepare_fixture(name);
    let workload = fixture_workload(name);
    let mut map = BTreeMap::new();
    map.insert(prepared.db_id.clone(), prepared);
    let report = run_workload(&map, &workload, false, 1).expect("workload is non-empty");
    for o in &report.outcomes {
        assert!(
            o.is_match(),
            "{name}: `{}` diverged\n cypher: {:?}\n failure: {:?}\n sql: {:?}\n graph: {:?}",
            o.sql,
            o.cypher,
            o.failure,
            o.r_sql.as_ref().map(|r| r.to_json()),
            o.r_cyp.as_ref().map(|r| r.to_json()),
        );
    }
    assert_eq!(report.ea, 1.0);
    assert_eq!(report.vs, 1.0);
}

#[test]
fn college_3_full_run_reaches_full_accuracy() {
    assert_ea_one("college_3");
}

#[test]
fn department_management_full_run_reaches_full_accuracy() {
    assert_ea_one("department_management");
}

#[test]
fn singer_full_run_reaches_full_accuracy() {
    assert_ea_one("singer");
}

#[test]
fn concert_singer_full_run_reaches_full_accuracy() {
    assert_ea_one("concert_singer");
}

#[test]
fn school_finance_csv_bundle_reaches_full_accuracy() {
    assert_ea_one("school_finance");
}

#[test]
fn college_3_graph_shape() {
    let prepared = prepare_fixture("college_3");
    let stats = graph_stats(&prepared.graph);
    assert_eq!(stats.node_count, 16);
    assert_eq!(stats.edge_count, 12);
    assert_eq!(stats.labels["college_3.Faculty"], 3);
    assert_eq!(stats.labels["college_3.Department"], 2);
    assert_eq!(stats.labels["college_3.Student"], 4);
    assert_eq!(stats.labels["college_3.Enrolled_in"], 3);
    assert!(!stats.labels.contains_key("college_3.Member_of"));
    assert_eq!(stats.types["college_3.Member_of"], 3);
    assert_eq!(
        stats.types["college_3.Student_HAS_college_3.Enrolled_in"],
        3
    );
    assert_eq!(stats.types["college_3.Course_HAS_college_3.Enrolled_in"], 3);
    assert_eq!(
        stats.types["college_3.Gradeconversion_HAS_college_3.Enrolled_in"],
        3
    );
}

#[test]
fn check_and_repair_converges_first_pass_and_recovers_from_faults() {
    let loaded = load_database(&support::fixture_path("college_3")).unwrap();
    let opts = MigrateOptions {
        domain: Some("college_3".into()),
        ..MigrateOptions::default()
    };
    let prepared = prepare(loaded.db.clone(), &opts).unwrap();

    let (report, _) = check_and_repair(&loaded.db, prepared.graph, &opts, 3).unwrap();
    assert!(report.converged);
    assert_eq!(report.iterations, 1);
    assert!(report.diffs.is_empty());

    // fault injection: a graph missing one Faculty node
    let inject = || {
        let mut broken = relic_core::graph::PropertyGraph::new();
        for n in prepare(loaded.db.clone(), &opts).unwrap().graph.nodes() {
            if n.label == "college_3.Faculty"
                && n.properties["FacID"] == relic_core::Value::Int(1)
            {
                continue;
            }
            broken.add_node_full(n.label.clone(), n.properties.clone(), n.placeholder);
        }
        broken
    };
    // with no rebuild budget, the report names the short label
    let (first, _) = check_and_repair(&loaded.db, inject(), &opts, 1).unwrap();
    assert!(!first.converged);
    assert!(first.diffs.iter().any(|d| d.kind == "label_count"
        && d.name == "college_3.Faculty"
        && d.expected == "3"
        && d.actual == "2"));

    let (report, fixed) = check_and_repair(&loaded.db, inject(), &opts, 3).unwrap();
    assert!(report.converged);
    assert_eq!(report.iterations, 2);
    let stats = graph_stats(&fixed);
    assert_eq!(stats.labels["college_3.Faculty"], 3);

    // a budget of one iteration reports the divergence without repairing
    let mut broken = relic_core::graph::PropertyGraph::new();
    broken.add_node("college_3.Ghost", Default::default());
    let (report, _) = check_and_repair(&loaded.db, broken, &opts, 1).unwrap();
    assert!(!report.converged);
    assert!(report
        .diffs
        .iter()
        .any(|d| d.kind == "label_count" && d.name == "college_3.Ghost"));
}

#[test]
fn school_finance_repairs_keys_from_manifest_and_workload() {
    let prepared = prepare_fixture("school_finance");
    let rev = prepared
        .repaired
        .table("school_finance.FINREV_FED_17")
        .unwrap();
    assert_eq!(rev.foreign_keys.len(), 1);
    assert_eq!(
        rev.foreign_keys[0].referenced_table,
        "school_finance.FINREV_FED_KEY_17"
    );
    let key = prepared
        .repaired
        .table("school_finance.FINREV_FED_KEY_17")
        .unwrap();
    assert_eq!(key.primary_key, vec!["state_code"]);
    assert_eq!(key.foreign_keys.len(), 1);
    // the scores table gains an inferred key because the key table's
    // foreign key references it
    let nde = prepared
        .repaired
        .table("school_finance.NDECoreExcel_Math_Grade8")
        .unwrap();
    assert_eq!(nde.primary_key, vec!["state"]);
}

#[test]
fn musical_fixture_retargets_and_answers() {
    let prepared = prepare_fixture("musical");
    let actor = prepared.repaired.table("musical.actor").unwrap();
    assert_eq!(actor.foreign_keys[0].referenced_table, "musical.musical");
    let workload = fixture_workload("musical");
    let mut map = BTreeMap::new();
    map.insert(prepared.db_id.clone(), prepared);
    let report = run_workload(&map, &workload, false, 1).unwrap();
    assert_eq!(report.ea, 1.0);
}

#[test]
fn expected_artifacts_stay_current() {
    // graph statistics recorded per fixture
    for name in [
        "college_3",
        "singer",
        "concert_singer",
        "musical",
        "school_finance",
    ] {
        let prepared = prepare_fixture(name);
        let stats = graph_stats(&prepared.graph);
        let recorded: relic_core::graph::GraphStats = serde_json::from_str(
            &std::fs::read_to_string(support::fixture_path(name).join("expected/stats.json"))
                .unwrap(),
        )
        .unwrap();
        assert_eq!(stats, recorded, "{name} stats drifted");
    }

    // canonical translations recorded for the department workload
    let loaded = load_database(&support::fixture_path("department_management")).unwrap();
    let cls = relic_core::relational::classify_tables(&loaded.db);
    let binding = relic_core::sql::SchemaBinding::from_database(&loaded.db);
    let recorded = std::fs::read_to_string(
        support::fixture_path("department_management").join("expected/translations.txt"),
    )
    .unwrap();
    let workload = fixture_workload("department_management");
    for (entry, expected) in workload.entries.iter().zip(recorded.lines()) {
        let tree = relic_core::sql::parse_sql(&entry.sql).unwrap();
        let tree = relic_core::sql::normalize_identifiers(&tree, &binding).unwrap();
        let cq = relic_core::cypher::translate(&tree, &cls).unwrap();
        assert_eq!(relic_core::cypher::render_cypher(&cq), expected);
    }
}

#[test]
fn orphan_rows_reconcile_with_expected_stats() {
    use relic_core::relational::load_sql_dump;
    // one linking row points at a missing key: no edge, still convergent
    let db = load_sql_dump(
        "CREATE TABLE a(id int, PRIMARY KEY(id));
         INSERT INTO a VALUES (1),(2);
         CREATE TABLE b(id int, PRIMARY KEY(id));
         INSERT INTO b VALUES (7);
         CREATE TABLE l(aid int, bid int, PRIMARY KEY(aid, bid),
           FOREIGN KEY(aid) REFERENCES a(id), FOREIGN KEY(bid) REFERENCES b(id));
         INSERT INTO l VALUES (1,7),(2,99);",
    )
    .unwrap()
    .db;
    let opts = MigrateOptions::default();
    let prepared = prepare(db.clone(), &opts).unwrap();
    assert_eq!(prepared.build_log.orphans.len(), 1);
    assert_eq!(graph_stats(&prepared.graph).edge_count, 1);
    let (report, _) = check_and_repair(&db, prepared.graph, &opts, 2).unwrap();
    assert!(report.converged, "{:?}", report.diffs);
    assert_eq!(report.iterations, 1);
}

#[test]
fn parallel_evaluation_matches_serial() {
    let prepared = prepare_fixture("college_3");
    let workload = fixture_workload("college_3");
    let mut map = BTreeMap::new();
    map.insert(prepared.db_id.clone(), prepared);
    let serial = run_workload(&map, &workload, false, 1).unwrap();
    let parallel = run_workload(&map, &workload, false, 4).unwrap();
    assert_eq!(serial.ea, parallel.ea);
    assert_eq!(serial.vs, parallel.vs);
    assert_eq!(serial.outcomes.len(), parallel.outcomes.len());
    for (a, b) in serial.outcomes.iter().zip(&parallel.outcomes) {
        assert_eq!(a.sql, b.sql);
        assert_eq!(a.matched, b.matched);
    }
}
