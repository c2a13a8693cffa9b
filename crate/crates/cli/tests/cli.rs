//! End-to-end tests of the `spencer-lab` binary: example workflows, exit
//! codes, determinism, and fixture round-trips.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use spencer_lab_core::{ConnectionFile, ConstantRelativeConnection, Tableau, TableauFile};

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_spencer-lab")
}

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fixture(name: &str) -> String {
    fixtures_dir().join(name).display().to_string()
}

fn run_cli(args: &[&str]) -> Output {
    Command::new(binary())
        .args(args)
        .env_remove("SPENCER_LAB_THREADS")
        .output()
        .expect("the binary runs")
}

fn run_json(args: &[&str]) -> Value {
    let out = run_cli(args);
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("reports are valid JSON")
}

#[test]
fn report_envelope_carries_schema_version_and_request() {
    let report = run_json(&["tableau", "prolong", &fixture("cartan1904.json"), "--levels", "2"]);
    assert_eq!(report["schema"], "spencer-lab/1");
    assert_eq!(report["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(report["request"]["command"], "tableau prolong");
    assert_eq!(report["request"]["parameters"]["levels"], 2);
    assert_eq!(report["request"]["format"], "json");
    assert_eq!(
        report["request"]["inputs"][0],
        Value::String(fixture("cartan1904.json"))
    );
}

#[test]
fn prolong_chain_of_the_rank_one_tableau_stays_one_dimensional() {
    let report = run_json(&["tableau", "prolong", &fixture("cartan1904.json"), "--levels", "6"]);
    assert_eq!(report["results"]["base_dim"], 1);
    let dims: Vec<u64> = report["results"]["prolongation_dims"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert_eq!(dims, vec![1, 1, 1, 1, 1, 1]);
}

#[test]
fn analyze_constant_rank_system_certifies_and_matches_oracle() {
    let report = run_json(&[
        "conn",
        "analyze",
        &fixture("u3.json"),
        "--max-order",
        "4",
        "--oracle-degree",
        "4",
    ]);
    let rows = report["results"]["tower"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    for row in rows {
        assert_eq!(row["prolongation_rank"], 3);
    }
    let oracle = report["results"]["oracle"].as_array().unwrap();
    assert_eq!(oracle.len(), 5);
    for row in oracle {
        assert_eq!(row["truncated_dim"], 3);
        assert_eq!(row["agree"], true);
    }
    assert_eq!(
        report["results"]["integrability"]["verdict"],
        "certified-within-window"
    );
}

#[test]
fn full_tableau_window_has_zero_cohomology_everywhere() {
    let report = run_json(&[
        "tableau",
        "cohomology",
        &fixture("full_k2_n2.json"),
        "--pmax",
        "3",
    ]);
    let entries = report["results"]["entries"].as_array().unwrap();
    assert!(!entries.is_empty());
    for e in entries {
        assert_eq!(e["cohomology_dim"], 0, "nonzero cohomology at {e}");
    }
}

#[test]
fn obstructed_system_reports_stop_and_oracle_disagreement() {
    let report = run_json(&[
        "conn",
        "oracle",
        &fixture("obstructed.json"),
        "--degree",
        "3",
    ]);
    assert_eq!(report["results"]["tower"]["stopped"]["level"], 1);
    assert_eq!(report["results"]["tower"]["stopped"]["cokernel_dim"], 1);
    let rows = report["results"]["rows"].as_array().unwrap();
    assert_eq!(rows[0]["agree"], true);
    assert_eq!(rows[1]["tower_rank"], 1);
    assert_eq!(rows[1]["truncated_dim"], 2);
    assert_eq!(rows[1]["agree"], false);
    assert_eq!(rows[2]["tower_rank"], Value::Null);
    assert_eq!(rows[2]["agree"], Value::Null);
}

#[test]
fn curvature_evaluates_at_a_compatible_jet_point() {
    let report = run_json(&[
        "conn",
        "curvature",
        &fixture("obstructed.json"),
        "--at-jet",
        "1,2,-2,0,0,-2",
    ]);
    assert_eq!(report["results"]["at_jet"]["value"][0][0], "-2");
    assert_eq!(report["results"]["at_jet"]["value"][0][1], "0");
    assert_eq!(report["results"]["reduced"]["obstruction_dim"], 1);
}

#[test]
fn finite_type_and_stabilize_report_orders() {
    let report = run_json(&["conn", "finite-type", &fixture("u3.json"), "--bound", "4"]);
    assert_eq!(report["results"]["order"], 0);
    assert_eq!(report["results"]["solution_rank"], 3);

    let report = run_json(&[
        "conn",
        "finite-type",
        &fixture("cartan_symbol.json"),
        "--bound",
        "6",
    ]);
    assert_eq!(report["results"]["order"], Value::Null);

    let report = run_json(&[
        "tableau",
        "stabilize",
        &fixture("cartan1904.json"),
        "--bound",
        "4",
    ]);
    assert_eq!(report["results"]["stabilization_order"], 0);
}

#[test]
fn compatible_accepts_a_prolongation_pair() {
    let dir = tempfile::tempdir().expect("temp dir");
    let lower = ConstantRelativeConnection::from_file(
        &serde_json::from_str(
            &std::fs::read_to_string(fixture("cartan_symbol.json")).unwrap(),
        )
        .unwrap(),
    )
    .unwrap();
    let (_, upper) = lower.classical_prolongation().expect("smoothly defined");
    let upper_path = dir.path().join("upper.json");
    std::fs::write(
        &upper_path,
        serde_json::to_string(&upper.to_file()).unwrap(),
    )
    .unwrap();
    let report = run_json(&[
        "conn",
        "compatible",
        upper_path.to_str().unwrap(),
        &fixture("cartan_symbol.json"),
    ]);
    assert_eq!(report["results"]["projection_intertwines"], true);
    assert_eq!(report["results"]["coefficients_commute"], true);
    assert_eq!(report["results"]["embeds_in_prolongation"], true);
    assert_eq!(
        report["results"]["embedding_dim"],
        report["results"]["prolongation_dim"]
    );
}

#[test]
fn tower_subcommand_validates_a_prolongation_chain() {
    let dir = tempfile::tempdir().expect("temp dir");
    let base: TableauFile = serde_json::from_str(
        &std::fs::read_to_string(fixture("cartan1904.json")).unwrap(),
    )
    .unwrap();
    let t0 = Tableau::from_file(&base).unwrap();
    let t1 = spencer_lab_core::prolong(&t0);
    let p0 = dir.path().join("t0.json");
    let p1 = dir.path().join("t1.json");
    std::fs::write(&p0, serde_json::to_string(&t0.to_file()).unwrap()).unwrap();
    std::fs::write(&p1, serde_json::to_string(&t1.to_file()).unwrap()).unwrap();
    let report = run_json(&[
        "tableau",
        "tower",
        p0.to_str().unwrap(),
        p1.to_str().unwrap(),
    ]);
    assert_eq!(report["results"]["equality_flags"][0], true);
    assert_eq!(report["results"]["stable_from"], 0);
}

#[test]
fn pfaffian_subcommands_cover_the_correspondence() {
    let report = run_json(&["pfaffian", "to-form", &fixture("u3.json")]);
    assert_eq!(report["results"]["base_dim"], 1);
    assert_eq!(report["results"]["fiber_rank"], 3);
    assert_eq!(report["results"]["form"]["schema"], "spencer-lab/1");

    let report = run_json(&[
        "pfaffian",
        "kernel",
        &fixture("u3.json"),
        "--at-fiber",
        "1,0,0",
    ]);
    assert_eq!(report["results"]["dim"], 1);
    assert_eq!(report["results"]["ambient_dim"], 4);

    let report = run_json(&["pfaffian", "check", &fixture("scalar_grad.json")]);
    assert_eq!(report["results"]["transversal"], true);
    assert_eq!(report["results"]["vertical_part_rank"], 1);
    assert_eq!(report["results"]["vertically_involutive"], true);

    let report = run_json(&[
        "pfaffian",
        "roundtrip",
        &fixture("spencer_j1.json"),
        "--sections",
        "4",
        "--degree",
        "3",
    ]);
    assert_eq!(report["results"]["identity"], true);
    assert_eq!(report["results"]["pullback_matches"], true);
}

// ---------------------------------------------------------------------------
// Exit codes
// ---------------------------------------------------------------------------

#[test]
fn missing_file_exits_with_schema_violation() {
    let out = run_cli(&["tableau", "prolong", "no-such-file.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("schema violation"), "stderr: {err}");
    assert!(err.contains("no-such-file.json"), "stderr: {err}");
}

#[test]
fn wrong_schema_tag_exits_with_location() {
    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("wrong.json");
    std::fs::write(
        &path,
        r#"{"schema":"other/1","n":1,"F_rank":1,"E_rank":1,"l":[["1"]],"C":[[["0"]]]}"#,
    )
    .unwrap();
    let out = run_cli(&["conn", "analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("(schema)"), "stderr: {err}");
}

#[test]
fn unparseable_entry_exits_with_cell_location() {
    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("entry.json");
    std::fs::write(
        &path,
        r#"{"schema":"spencer-lab/1","n":1,"F_rank":1,"E_rank":1,"l":[["1"]],"C":[[["x"]]]}"#,
    )
    .unwrap();
    let out = run_cli(&["conn", "analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("C[0][0][0]"), "stderr: {err}");
}

#[test]
fn non_surjective_anchor_is_a_precondition_failure() {
    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("notsurj.json");
    std::fs::write(
        &path,
        r#"{"schema":"spencer-lab/1","n":1,"F_rank":2,"E_rank":2,"l":[["1","0"],["0","0"]],"C":[[["0","0"],["0","0"]]]}"#,
    )
    .unwrap();
    let out = run_cli(&["conn", "analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("precondition failed"), "stderr: {err}");
    assert!(err.contains("surjective"), "stderr: {err}");
}

#[test]
fn incompatible_jet_point_is_a_precondition_failure() {
    let out = run_cli(&[
        "conn",
        "curvature",
        &fixture("u3.json"),
        "--at-jet",
        "1,0,0,0,0,1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("precondition failed"), "stderr: {err}");
}

#[test]
fn wrong_length_fiber_point_is_a_schema_violation() {
    let out = run_cli(&[
        "pfaffian",
        "kernel",
        &fixture("u3.json"),
        "--at-fiber",
        "1,0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--at-fiber"), "stderr: {err}");
}

#[test]
fn reduced_curvature_above_a_failed_level_is_a_precondition_failure() {
    let out = run_cli(&[
        "conn",
        "curvature",
        &fixture("obstructed.json"),
        "--level",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

// ---------------------------------------------------------------------------
// Determinism
// ---------------------------------------------------------------------------

#[test]
fn repeated_runs_are_byte_identical() {
    let args = [
        "conn",
        "analyze",
        &fixture("obstructed.json"),
        "--max-order",
        "3",
        "--oracle-degree",
        "3",
    ];
    let first = run_cli(&args);
    let second = run_cli(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);

    let table_args = [
        "conn",
        "analyze",
        &fixture("obstructed.json"),
        "--format",
        "table",
    ];
    let first = run_cli(&table_args);
    let second = run_cli(&table_args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn thread_cap_does_not_change_output() {
    let args = ["conn", "oracle", &fixture("scalar_grad.json"), "--degree", "4"];
    let single = Command::new(binary())
        .args(args)
        .env("SPENCER_LAB_THREADS", "1")
        .output()
        .expect("the binary runs");
    let many = Command::new(binary())
        .args(args)
        .env("SPENCER_LAB_THREADS", "4")
        .output()
        .expect("the binary runs");
    assert!(single.status.success());
    assert!(many.status.success());
    assert_eq!(single.stdout, many.stdout);
}

#[test]
fn table_format_renders_aligned_tower() {
    let out = run_cli(&[
        "conn",
        "analyze",
        &fixture("u3.json"),
        "--format",
        "table",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("rank P^k"), "table: {text}");
    assert!(text.contains("rank g^(k)"), "table: {text}");
    assert!(text.contains("verdict: certified-within-window"), "table: {text}");
}

// ---------------------------------------------------------------------------
// Fixture round-trips
// ---------------------------------------------------------------------------

const TABLEAU_FIXTURES: [&str; 2] = ["cartan1904.json", "full_k2_n2.json"];
const CONNECTION_FIXTURES: [&str; 9] = [
    "u3.json",
    "obstructed.json",
    "spencer_j1.json",
    "spencer_j1_n3a2.json",
    "flat_c0.json",
    "scalar_grad.json",
    "ode_infinite.json",
    "commuting.json",
    "cartan_symbol.json",
];

#[test]
fn every_fixture_round_trips_through_serialization() {
    for name in TABLEAU_FIXTURES {
        let text = std::fs::read_to_string(fixture(name)).expect("fixture exists");
        let file: TableauFile = serde_json::from_str(&text).expect("fixture parses");
        let t = Tableau::from_file(&file).expect("fixture is well-formed");
        let emitted = t.to_file();
        let reparsed = Tableau::from_file(&emitted).expect("emitted form parses");
        assert_eq!(reparsed.to_file(), emitted, "{name} round-trips");
        assert_eq!(emitted.generators, file.generators, "{name} is canonical");
    }
    for name in CONNECTION_FIXTURES {
        let text = std::fs::read_to_string(fixture(name)).expect("fixture exists");
        let file: ConnectionFile = serde_json::from_str(&text).expect("fixture parses");
        let c = ConstantRelativeConnection::from_file(&file).expect("fixture is well-formed");
        let emitted = c.to_file();
        let reparsed =
            ConstantRelativeConnection::from_file(&emitted).expect("emitted form parses");
        assert_eq!(reparsed.to_file(), emitted, "{name} round-trips");
        assert_eq!(emitted.l, file.l, "{name} anchor is canonical");
        assert_eq!(emitted.c, file.c, "{name} coefficients are canonical");
    }
}
