use std::fs;
use std::process::{Command, Output};

use tempfile::tempdir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coverage-lab"))
        .args(args)
        .env("COVERAGE_LAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value<'a>(text: &'a str, key: &str) -> &'a str {
    let prefix = format!("{key}: ");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no `{key}` in output:\n{text}"))
}

#[test]
fn fig3_coverage_on_the_wide_strip() {
    let o = run(&["coverage", "--classifier", "fig3.json", "--point", "-15,10"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(value(&out, "kind"), "bounded");
    let r: f64 = value(&out, "radius").parse().unwrap();
    assert!((r - 6.5).abs() <= 1e-3, "radius {r}");
    assert_eq!(value(&out, "label"), "N");
}

#[test]
fn refined_linear_exceeds_any_cap() {
    let o = run(&[
        "coverage",
        "--classifier",
        "refined_linear.json",
        "--point",
        "0,1",
        "--cap",
        "1000",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(value(&out, "kind"), "exceeds_cap");
    assert_eq!(value(&out, "cap"), "1000");
    assert_eq!(value(&out, "label"), "M");
}

#[test]
fn refinement_point_query_exits_with_three() {
    let o = run(&[
        "coverage",
        "--classifier",
        "refined_linear.json",
        "--point",
        "0,0",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("refinement"));
}

#[test]
fn wrong_dimension_is_a_query_error() {
    let o = run(&["coverage", "--classifier", "fig3.json", "--point", "1,2,3"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn missing_and_malformed_specs_exit_with_two() {
    let dir = tempdir().unwrap();
    let o = run(&[
        "coverage",
        "--classifier",
        "no_such_spec.json",
        "--point",
        "0,0",
    ]);
    assert_eq!(o.status.code(), Some(2));

    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"dimension": 2, "labels": {"A": {"polytope": 3}}}"#,
    )
    .unwrap();
    let o = run(&[
        "coverage",
        "--classifier",
        bad.to_str().unwrap(),
        "--point",
        "0,0",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn points_file_is_read_line_by_line() {
    let dir = tempdir().unwrap();
    let file = dir.path().join("pts.txt");
    fs::write(&file, "# two points\n5,0\n\n-15,10\n").unwrap();
    let o = run(&[
        "coverage",
        "--classifier",
        "fig3.json",
        "--points-file",
        file.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).matches("point: ").count(), 2);
}

#[test]
fn structure_recognises_refined_linear() {
    let dir = tempdir().unwrap();
    let report = dir.path().join("report.json");
    let o = run(&[
        "structure",
        "--classifier",
        "refined_linear.json",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value(&stdout(&o), "verdict"), "refined_linear");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["verdict"]["kind"], "refined_linear");
}

#[test]
fn structure_of_overfit_tree_is_not_refined_linear() {
    let o = run(&["structure", "--classifier", "fig3.json"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value(&stdout(&o), "verdict"), "not_refined_linear");
}

#[test]
fn refining_a_linear_classifier_makes_it_refined_linear() {
    let dir = tempdir().unwrap();
    let refined = dir.path().join("refined.json");
    let o = run(&[
        "refine",
        "--classifier",
        "linear.json",
        "--out",
        refined.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value(&stdout(&o), "refinement_set"), "present");

    let before = run(&["structure", "--classifier", "linear.json"]);
    assert_eq!(value(&stdout(&before), "verdict"), "not_refined_linear");
    let after = run(&["structure", "--classifier", refined.to_str().unwrap()]);
    assert_eq!(value(&stdout(&after), "verdict"), "refined_linear");
}

#[test]
fn refine_without_out_prints_the_spec() {
    let o = run(&["refine", "--classifier", "linear.json"]);
    assert_eq!(o.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["dimension"], 2);
}

#[test]
fn field_grid_has_one_row_per_point() {
    let dir = tempdir().unwrap();
    let csv = dir.path().join("field.csv");
    let o = run(&[
        "field",
        "--classifier",
        "fig3.json",
        "--grid",
        "20x20",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value(&stdout(&o), "points"), "400");
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("x1,x2,coverage_kind,radius_or_cap,method")
    );
    assert_eq!(lines.count(), 400);
}

#[test]
fn field_format_follows_the_extension() {
    let dir = tempdir().unwrap();
    let json = dir.path().join("field.json");
    let o = run(&[
        "field",
        "--classifier",
        "fig3.json",
        "--point",
        "5,0",
        "--out",
        json.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["dimension"], 2);
}

#[test]
fn bad_grid_is_rejected() {
    let o = run(&["field", "--classifier", "fig3.json", "--grid", "20x0"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn compare_reports_a_relation_per_point() {
    let o = run(&[
        "compare",
        "--classifier",
        "fig3.json",
        "--classifier",
        "fig3.json",
        "--point",
        "5,0",
        "--point",
        "-15,10",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.matches("relation: equal").count(), 2);
}

#[test]
fn compare_needs_two_classifiers() {
    let o = run(&["compare", "--classifier", "fig3.json", "--point", "5,0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bounded_coverage_compares_below_exceeds_cap() {
    let o = run(&[
        "compare",
        "--classifier",
        "fig3.json",
        "--classifier",
        "linear.json",
        "--point",
        "5,0",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(value(&out, "first"), "bounded 1");
    assert_eq!(value(&out, "second"), "exceeds_cap");
    assert_eq!(value(&out, "relation"), "less");
}

#[test]
fn verify_subset_is_deterministic() {
    let dir = tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let o = run(&[
            "verify",
            "--criterion",
            "1,3,9",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn verify_passes_the_same_criteria_under_another_seed() {
    let zero = run(&["verify", "--criterion", "1,3,6", "--seed", "0"]);
    let seven = run(&["verify", "--criterion", "1,3,6", "--seed", "7"]);
    let passes = |o: &Output| {
        stdout(o)
            .lines()
            .filter(|l| l.contains(": PASS"))
            .map(|l| l.split(':').next().unwrap().to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(passes(&zero), passes(&seven));
    assert_eq!(passes(&zero).len(), 3);
}

#[test]
fn verify_fails_when_the_tree_labels_are_merged() {
    let dir = tempdir().unwrap();
    let shipped: serde_json::Value =
        serde_json::from_str(coverage_lab::fixtures::FIG3_JSON).unwrap();
    let mut merged = shipped.clone();
    let mut pieces = Vec::new();
    for label in ["M", "N"] {
        pieces.extend(
            shipped["labels"][label]["union"]
                .as_array()
                .unwrap()
                .iter()
                .cloned(),
        );
    }
    merged["labels"] = serde_json::json!({ "N": { "union": pieces } });
    fs::write(dir.path().join("fig3.json"), merged.to_string()).unwrap();

    let o = run(&[
        "verify",
        "--criterion",
        "1",
        "--fixtures",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("criterion 1: FAIL"));
}

#[test]
fn unknown_suite_and_criterion_are_usage_errors() {
    assert_eq!(
        run(&["verify", "--suite", "nonsense"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["verify", "--criterion", "11"]).status.code(), Some(2));
}
