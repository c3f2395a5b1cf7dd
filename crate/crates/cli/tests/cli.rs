use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ffil(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ffil")).args(args).output().expect("ffil runs")
}

fn report(args: &[&str], dir: &Path) -> (i32, Value) {
    let out = dir.join("report.json");
    let mut full = args.to_vec();
    full.extend(["--out", out.to_str().unwrap()]);
    let o = ffil(&full);
    let text = std::fs::read_to_string(&out).unwrap_or_else(|_| "null".into());
    (o.status.code().unwrap(), serde_json::from_str(&text).unwrap())
}

#[test]
fn zarankiewicz_example() {
    let dir = tempfile::tempdir().unwrap();
    let (code, r) = report(
        &["zarankiewicz", "--p", "7", "--d1", "1", "--d2", "1", "--m", "7", "--n", "7", "--s", "2", "--seed", "42"],
        dir.path(),
    );
    assert_eq!(code, 0);
    assert!(r["achieved"]["edges"].as_u64().unwrap() >= 4);
    assert_eq!(r["verification"]["kss"], "verified-free");
    for key in ["config", "achieved", "bound", "verification", "retries", "timing"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn zero_patterns_fixture_example() {
    let dir = tempfile::tempdir().unwrap();
    let fx = dir.path().join("polys.txt");
    std::fs::write(&fx, "p=3; vars=1; x0\np=3; vars=1; x0 - 1\n").unwrap();
    let (code, r) = report(
        &["zero-patterns", "--p", "3", "--vars", "1", "--k", "2", "--degree", "1", "--fixture", fx.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(code, 0);
    assert_eq!(r["achieved"]["family"]["pattern_count"], 3);
    assert_eq!(r["bound"]["bound_rbg"], 3);
}

#[test]
fn fixture_disagreeing_with_flags_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let fx = dir.path().join("polys.txt");
    std::fs::write(&fx, "p=3; vars=1; x0\n").unwrap();
    let o = ffil(&["zero-patterns", "--p", "5", "--fixture", fx.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_flag_prints_usage() {
    let o = ffil(&["zarankiewicz", "--p", "7"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn unknown_subcommand_and_bad_values_exit_1() {
    assert_eq!(ffil(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(ffil(&["zarankiewicz", "--p", "4", "--d1", "1", "--d2", "1"]).status.code(), Some(1));
    assert_eq!(ffil(&["unit-distance", "--d", "2", "--p", "13"]).status.code(), Some(1));
}

#[test]
fn help_exits_0_and_documents_csv_columns() {
    let o = ffil(&["zero-count", "--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("CSV columns: trial,zeros,success"));
}

#[test]
fn verification_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let (code, r) = report(&["zero-count", "--trials", "50", "--min-fraction", "1.01"], dir.path());
    assert_eq!(code, 2);
    assert_eq!(r["verification"]["fraction_ok"], false);
}

#[test]
fn resource_cap_exits_3() {
    let o = ffil(&["zero-count", "--p", "101", "--dim", "5", "--trials", "1"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn config_embeds_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let (_, r) = report(&["indep-set", "--instances", "3"], dir.path());
    let c = &r["config"];
    assert_eq!(c["command"], "indep-set");
    assert_eq!(c["seed"], 1);
    assert_eq!(c["args"]["n"], 60);
    assert_eq!(c["args"]["k"], 3);
    assert_eq!(c["args"]["edges"], 100);
    let (_, r) = report(&["zarankiewicz", "--p", "5", "--d1", "1", "--d2", "1"], dir.path());
    assert_eq!(r["config"]["args"]["m"], 5);
    assert_eq!(r["config"]["args"]["s"], 2);
}

#[test]
fn csv_output_has_fixed_header() {
    let o = ffil(&["indep-set", "--instances", "4", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("instance,n,k,m,bound,size,attempts,independent"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn csv_file_alongside_json() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("series.csv");
    let o = ffil(&["containment-patterns", "--k", "4", "--csv", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("k,containment_patterns,zero_patterns\n"));
    assert_eq!(text.lines().count(), 5);
    assert_eq!(r["achieved"]["containment_counts"].as_array().unwrap().len(), 4);
}

#[test]
fn dump_replays_through_fixture_parsers() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("inst.poly");
    let (code, r) =
        report(&["zarankiewicz", "--p", "5", "--d1", "1", "--d2", "1", "--dump", dump.to_str().unwrap()], dir.path());
    assert_eq!(code, 0);
    let poly = ffil_core::mpoly::MultiPoly::parse(std::fs::read_to_string(&dump).unwrap().trim()).unwrap();
    assert_eq!(poly.to_string(), r["achieved"]["polynomial"]);
    let g = ffil_core::bigraph::BipartiteGraph::parse_fixture(&std::fs::read_to_string(dump.with_extension("graph")).unwrap())
        .unwrap();
    assert_eq!(g.edge_count() as u64, r["achieved"]["edges"].as_u64().unwrap());

    let pts = dir.path().join("points.txt");
    let (code, r) = report(&["unit-distance", "--d", "2", "--p", "7", "--dump", pts.to_str().unwrap()], dir.path());
    assert_eq!(code, 0);
    let ps = ffil_core::geometry::PointSet::parse_fixture(&std::fs::read_to_string(pts).unwrap()).unwrap();
    let g = ffil_core::geometry::unit_distance_graph(&ps.points, &ps.form).unwrap();
    assert_eq!(g.edge_count() as u64, r["achieved"]["instances"][0]["unit_distances"].as_u64().unwrap());
}

#[test]
fn sphere_cache_is_reused() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let run = || {
        let out = dir.path().join("r.json");
        let o = Command::new(env!("CARGO_BIN_EXE_ffil"))
            .args(["sphere-geometry", "--p", "7", "--d", "2", "--families", "20", "--out", out.to_str().unwrap()])
            .env("FFIL_CACHE_DIR", &cache)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        let mut r: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
        r.as_object_mut().unwrap().remove("timing");
        r
    };
    let first = run();
    let files: Vec<_> = std::fs::read_dir(&cache).unwrap().collect();
    assert_eq!(files.len(), 1);
    assert_eq!(run(), first);
    assert_eq!(first["achieved"]["sphere_points"], 8);
}

#[test]
fn pattern_scan_hyperplane_host() {
    let dir = tempfile::tempdir().unwrap();
    let (code, r) = report(&["pattern-scan", "--kind", "h", "--p", "3", "--d", "2"], dir.path());
    assert_eq!(code, 0);
    assert_eq!(r["verification"]["pattern_absent"], true);
    assert_eq!(r["achieved"]["host_size"], serde_json::json!([27, 39]));
}

#[test]
fn run_is_callable_in_process() {
    assert_eq!(ffil::run(["ffil", "--version"]), 0);
    assert_eq!(ffil::run(["ffil", "indep-set", "--bogus"]), 1);
}
