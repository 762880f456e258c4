use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::{Command, Output};

use lca_core::battery::per_wh_bom;
use lca_core::dataio::parse_str;
use lca_core::lcia::characterize;
use lca_core::scenario::apply_scenario;
use lca_core::solver::traverse_oracle;
use serde_json::Value;

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/data/mgs.lca.json")
}

fn lca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lca")).args(args).output().unwrap()
}

fn with_fixture(cmd: &str, extra: &[&str]) -> Output {
    let path = fixture();
    let mut args = vec![cmd, "--dataset", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    lca(&args)
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_rows(o: &Output) -> Vec<Value> {
    serde_json::from_str::<Value>(&stdout(o)).unwrap().as_array().unwrap().clone()
}

fn impacts_json(extra: &[&str]) -> BTreeMap<String, f64> {
    let mut args = vec!["--cell", "MgS-BL", "--format", "json"];
    args.extend_from_slice(extra);
    json_rows(&with_fixture("impacts", &args))
        .iter()
        .map(|r| (r["category"].as_str().unwrap().to_string(), r["value"].as_f64().unwrap()))
        .collect()
}

#[test]
fn validate_exit_codes() {
    assert_eq!(with_fixture("validate", &[]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.lca.json");
    let text = std::fs::read_to_string(fixture()).unwrap().replacen(
        "\"flow\": \"mg_ingot\"",
        "\"flow\": \"unobtainium\"",
        1,
    );
    std::fs::write(&bad, text).unwrap();
    let o = lca(&["validate", "--dataset", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("DANGLING_REF") && err.contains("unobtainium"), "{err}");

    let o = lca(&["validate", "--dataset", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(lca(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(lca(&["impacts"]).status.code(), Some(2));
    assert_eq!(lca(&["breakeven", "x", "1"]).status.code(), Some(2));
    assert_eq!(lca(&["--help"]).status.code(), Some(0));
}

#[test]
fn impacts_rows_and_determinism() {
    let a = with_fixture("impacts", &["--cell", "MgS-BL"]);
    let b = with_fixture("impacts", &["--cell", "MgS-BL"]);
    assert_eq!(stdout(&a), stdout(&b));
    let v = impacts_json(&[]);
    assert_eq!(v.keys().collect::<Vec<_>>(), ["CED", "FDP", "GWP", "MDP", "ODP"]);
}

#[test]
fn unknown_ids_are_domain_errors() {
    let o = with_fixture("impacts", &["--cell", "NaS"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("UNKNOWN_ID"));
    let o = with_fixture("impacts", &["--cell", "MgS-BL", "--scenario", "nope"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn csv_and_json_carry_the_same_values() {
    let csv_out = stdout(&with_fixture("contrib", &["--cell", "MgS-Evo1", "--format", "csv"]));
    let json = json_rows(&with_fixture("contrib", &["--cell", "MgS-Evo1", "--format", "json"]));
    let mut reader = csv::Reader::from_reader(csv_out.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let records: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), json.len());
    for (rec, row) in records.iter().zip(&json) {
        for (h, field) in headers.iter().zip(rec.iter()) {
            match &row[h] {
                Value::Number(n) => assert_eq!(field.parse::<f64>().unwrap(), n.as_f64().unwrap()),
                Value::String(s) => assert_eq!(field, s),
                other => panic!("{other}"),
            }
        }
    }
}

#[test]
fn scenario_changes_only_electricity_reachable_categories() {
    let base = impacts_json(&[]);
    let cn = impacts_json(&["--scenario", "cn-mix"]);
    for cat in ["GWP", "FDP", "CED"] {
        assert!(cn[cat] > base[cat], "{cat}");
    }
    assert_eq!(cn["ODP"], base["ODP"]);
    assert_eq!(cn["MDP"], base["MDP"]);

    // independent traversal of the swapped system
    let ds = parse_str(&std::fs::read_to_string(fixture()).unwrap()).unwrap().dataset;
    let (db, cells) = apply_scenario(&ds.database, &ds.cells, ds.scenario("cn-mix").unwrap()).unwrap();
    let demand = per_wh_bom(&cells[0], &ds.packs[0]).unwrap();
    let g = traverse_oracle(&db, &demand, 12);
    let oracle = characterize(&g, ds.method("illustrative").unwrap());
    for (cat, v) in &cn {
        let o = oracle.value(cat).unwrap();
        assert!((v - o).abs() <= 1e-9 * o.abs(), "{cat}: {v} vs {o}");
    }
}

#[test]
fn contribution_shares_sum_to_one() {
    let rows = json_rows(&with_fixture("contrib", &["--cell", "MgS-BL", "--format", "json"]));
    let mut sums: BTreeMap<String, f64> = BTreeMap::new();
    let mut mdp_top = ("", f64::MIN);
    for r in &rows {
        let cat = r["category"].as_str().unwrap();
        let share = r["share"].as_f64().unwrap();
        *sums.entry(cat.to_string()).or_default() += share;
        if cat == "MDP" && share > mdp_top.1 {
            mdp_top = (r["group"].as_str().unwrap(), share);
        }
    }
    assert_eq!(sums.len(), 5);
    for (cat, s) in sums {
        assert!((s - 1.0).abs() < 1e-6, "{cat}: {s}");
    }
    assert_eq!(mdp_top.0, "BMS");
}

#[test]
fn evolve_anode_breakeven() {
    let rows = json_rows(&with_fixture("evolve", &["--evolution", "evo2", "--format", "json"]));
    let get = |q: &str| {
        rows.iter()
            .find(|r| r["quantity"] == q)
            .and_then(|r| r["value"].as_f64())
            .unwrap()
    };
    assert!((get("separator") - 29.4).abs() < 1.0);
    assert!((get("electrolyte") - 451.7).abs() < 1.0);
    assert!((get("housing") - 44.1).abs() < 1.0);
    assert!((get("cell_energy_density") - 259.8).abs() < 0.1);

    let rows = json_rows(&lca(&["anode", "--format", "json"]));
    let total = rows.iter().find(|r| r["quantity"] == "total_mass").unwrap();
    assert!((total["value"].as_f64().unwrap() - 432.0).abs() < 1.0);

    let out = stdout(&lca(&["breakeven", "1583", "4.059", "--format", "csv"]));
    assert_eq!(out, "ced,energy_return,cycles\n1583.0,4.059,390\n");
    let o = lca(&["breakeven", "1583", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("NONPOSITIVE_RETURN"));
}

#[test]
fn compare_table() {
    let rows = json_rows(&with_fixture("compare", &["--format", "json"]));
    assert_eq!(rows.len(), 8 * 5);
    let lfp = rows.iter().find(|r| r["system"] == "LFP (Zak)").unwrap();
    assert_eq!(lfp["original_density"].as_f64(), Some(93.0));
    assert_eq!(lfp["adjusted_density"].as_f64(), Some(86.4));
    for r in rows.iter().filter(|r| r["best"] == true) {
        assert_eq!(r["ratio_to_best"].as_f64(), Some(1.0));
    }
    let names: Vec<&str> = rows.iter().step_by(5).map(|r| r["system"].as_str().unwrap()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
}

#[test]
fn sweep_is_ordered_and_deterministic() {
    let a = stdout(&with_fixture("scenario-sweep", &["--format", "csv"]));
    assert_eq!(a, stdout(&with_fixture("scenario-sweep", &["--format", "csv"])));
    let scenarios: Vec<&str> = a.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    let mut dedup = scenarios.clone();
    dedup.dedup();
    assert_eq!(dedup, ["baseline", "ch-mix", "cn-mix", "optimized-anode"]);
    assert_eq!(scenarios.len(), 4 * 3 * 5);
}

#[test]
fn out_flag_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let o = lca(&["breakeven", "100", "1", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "ced,energy_return,cycles\n100.0,1.0,100\n");

    let o = lca(&["breakeven", "1", "1", "--out", dir.path().join("no/such/dir.txt").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
