use std::fs;
use std::path::Path;

use bathtub::cli::{run_args, EXIT_OK, EXIT_ORACLE, EXIT_VALIDATION};
use bathtub::experiments::{PROFILE_HEADER, SWEEP_HEADER};
use bathtub::oracle::{verify, Thresholds};
use bathtub::{Model, ScenarioParams};

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_args(std::iter::once("bathtub").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_case_ii_matches_golden_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("profiles.csv");
    let (code, out, err) = call(&["solve", "--case", "II", "--out", path_str(&csv)]);
    assert_eq!(code, EXIT_OK, "{err}");
    let golden = include_str!("golden/solve_case_ii.txt");
    assert_eq!(out, golden);

    // The golden numbers are an equilibrium: the oracle agrees independently.
    let m = Model::new(&ScenarioParams { f_f: 1.0, ..ScenarioParams::reference() }).unwrap();
    let sol = bathtub::equilibrium_ue::solve_ue_model(&m).unwrap();
    assert!(verify(&sol, &m, 1e-4).passes_equilibrium(&Thresholds::default()));

    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), PROFILE_HEADER);
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert!(rows.len() > 4000);
    assert!(rows.iter().all(|r| r.len() == 12));
    // t* = 0 in the reference scenario, so both time columns coincide.
    assert!(rows.iter().all(|r| r[0] == r[1]));
    // Queue and boundary wait are zero without control.
    assert!(rows.iter().all(|r| r[8] == 0.0 && r[9] == 0.0));
}

#[test]
fn csv_outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        assert_eq!(call(&["tables", "--out", path_str(dir.path())]).0, EXIT_OK);
        assert_eq!(call(&["profiles", "--case", "I", "--out", path_str(dir.path())]).0, EXIT_OK);
        let sweep = dir.path().join("sweep.csv");
        let code = call(&["sweep", "--key", "n_total", "--values", "50:400:8", "--out", path_str(&sweep)]).0;
        assert_eq!(code, EXIT_OK);
    }
    let names = [
        "table1_ff1.csv",
        "table1_ff2.csv",
        "table2.csv",
        "profiles_caseI_ue.csv",
        "profiles_caseI_pc.csv",
        "sweep.csv",
    ];
    for name in names {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name} differs between runs");
    }
    let t2 = fs::read_to_string(a.path().join("table2.csv")).unwrap();
    assert_eq!(t2.lines().next().unwrap(), SWEEP_HEADER);
    assert_eq!(t2.lines().count(), 7);
}

#[test]
fn missing_scenario_key_exits_1_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.txt");
    let text: String = ScenarioParams::reference()
        .to_file_string()
        .lines()
        .filter(|l| !l.starts_with("lambda"))
        .map(|l| format!("{l}\n"))
        .collect();
    fs::write(&path, text).unwrap();
    let (code, _, err) = call(&["solve", "--scenario", path_str(&path)]);
    assert_eq!(code, EXIT_VALIDATION);
    assert!(err.contains("lambda"), "{err}");
}

#[test]
fn scenario_file_round_trips_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.txt");
    fs::write(&path, ScenarioParams::fixed_cost_study().with_field("f_f", 20.0).unwrap().to_file_string()).unwrap();
    let (code, out, _) = call(&["solve-pc", "--scenario", path_str(&path)]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("regime=NoFrtDuringPc"), "{out}");

    fs::write(&path, "v_f = 20\nbogus = 1\n").unwrap();
    let (code, _, err) = call(&["solve", "--scenario", path_str(&path)]);
    assert_eq!(code, EXIT_VALIDATION);
    assert!(err.contains("bogus"));
}

#[test]
fn verify_reports_pass_and_oracle_gate() {
    let (code, out, _) = call(&["verify", "--case", "I"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.matches("equilibrium=pass").count(), 2);
    // A grid too coarse for the conservation tolerance trips the gate.
    let (code, out, err) = call(&["verify", "--case", "I", "--step", "0.2"]);
    assert_eq!(code, EXIT_ORACLE, "{out}");
    assert!(out.contains("equilibrium=FAIL"));
    assert!(err.contains("oracle"));
}

#[test]
fn regime_map_header_and_size() {
    let (code, out, _) = call(&[
        "regime-map", "--x-key", "f_f", "--x-grid", "1,4,9", "--y-key", "n_total", "--y-grid", "10:300:4",
    ]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("x,y,"));
    assert_eq!(lines.len(), 1 + 12);
}
