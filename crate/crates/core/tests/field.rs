use std::cmp::Ordering;

use approx::assert_abs_diff_eq;
use coverage_lab::classifier::DomainBox;
use coverage_lab::coverage::{CoverageParams, CoverageValue};
use coverage_lab::field::*;
use coverage_lab::fixtures;
use coverage_lab::{Classifier64, Point64};
use proptest::prelude::*;

fn pt(c: &[f64]) -> Point64 {
    Point64::from_f64(c).unwrap()
}

fn grid(c: &Classifier64, k: usize) -> PointSet<f64> {
    PointSet::grid(c.domain_box(), vec![k; c.dimension()]).unwrap()
}

fn params(c: &Classifier64) -> CoverageParams<f64> {
    CoverageParams::defaults_for(c)
}

#[test]
fn grid_points_include_both_ends() {
    let b = DomainBox::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
    let pts = PointSet::grid(b.clone(), vec![2, 3]).unwrap().points();
    let coords: Vec<Vec<f64>> = pts.iter().map(|p| p.to_f64()).collect();
    assert_eq!(
        coords,
        vec![
            vec![0.0, -1.0],
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, -1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0]
        ]
    );
    assert_eq!(
        PointSet::grid(b.clone(), vec![1, 1]).unwrap().points(),
        vec![pt(&[0.5, 0.0])]
    );
    assert!(PointSet::grid(b.clone(), vec![2]).is_err());
    assert!(PointSet::grid(b, vec![0, 2]).is_err());
}

#[test]
fn refined_linear_field_exceeds_the_cap_everywhere() {
    let c = fixtures::refined_linear::<f64>();
    let f = compute_field(&c, &grid(&c, 11), &params(&c)).unwrap();
    // the row x2 = 0 is the refinement set
    assert_eq!(f.skipped.len(), 11);
    assert_eq!(f.len(), 110);
    assert_eq!(f.inf_estimate, Some(CoverageValue::ExceedsCap));
    assert_eq!(f.sup_estimate, Some(CoverageValue::ExceedsCap));
}

#[test]
fn boundary_points_of_a_binary_linear_classifier_have_zero_coverage() {
    let c = fixtures::linear::<f64>();
    // step 2 hits the line x2 = x1/2 - 1 at (2, 0), (6, 2), ...
    let f = compute_field(&c, &grid(&c, 21), &params(&c)).unwrap();
    assert!(f.skipped.is_empty());
    assert_eq!(f.inf_estimate, Some(CoverageValue::Zero));
    assert_eq!(f.sup_estimate, Some(CoverageValue::ExceedsCap));
    assert_eq!(f.result_at(&pt(&[2.0, 0.0])).unwrap().kind_name(), "zero");
}

#[test]
fn overfit_tree_field() {
    let c = fixtures::fig3::<f64>();
    let f = compute_field(&c, &grid(&c, 20), &params(&c)).unwrap();
    assert_eq!(f.len(), 400);
    assert!(matches!(f.sup_estimate, Some(CoverageValue::Bounded(_))));

    let pair = PointSet::List(vec![pt(&[5.0, 0.0]), pt(&[-15.0, 10.0])]);
    let f = compute_field(&c, &pair, &params(&c)).unwrap();
    let r: Vec<f64> = f.results.iter().map(radius_or_cap).collect();
    assert_abs_diff_eq!(r[0], 1.0, epsilon = 1e-3);
    assert_abs_diff_eq!(r[1], 6.5, epsilon = 1e-3);
    assert!(r[0] < r[1]);
    assert_eq!(f.labels, ["N", "N"]);
}

#[test]
fn csv_export() {
    let c = fixtures::fig3::<f64>();
    let dir = tempfile::tempdir().unwrap();

    let pair = PointSet::List(vec![pt(&[5.0, 0.0]), pt(&[-15.0, 10.0])]);
    let f = compute_field(&c, &pair, &params(&c)).unwrap();
    let path = dir.path().join("two.csv");
    export_field(&f, &path, FieldFormat::Csv).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "x1,x2,coverage_kind,radius_or_cap,method");
    assert!(lines[1].starts_with("5,0,bounded,"));

    let f = compute_field(&c, &grid(&c, 20), &params(&c)).unwrap();
    let path = dir.path().join("grid.csv");
    export_field(&f, &path, FieldFormat::Csv).unwrap();
    let mut reader = csv::Reader::from_path(&path).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 400);
    for row in &rows {
        let r: f64 = row[3].parse().unwrap();
        // the largest inscribed ball of any box is 9.5
        assert!((0.0..=9.5 + 1e-6).contains(&r), "{r}");
    }
}

#[test]
fn structured_export_round_trips() {
    let c = fixtures::generalized_linear::<f64>();
    let f = compute_field(&c, &grid(&c, 5), &params(&c)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.json");
    export_field(&f, &path, FieldFormat::Structured).unwrap();
    let back: CoverageField<f64> = import_field(&path).unwrap();
    assert_eq!(back, f);
}

#[test]
fn exports_are_byte_identical_across_runs() {
    let c = fixtures::fig3::<f64>();
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let f = compute_field(&c, &grid(&c, 9), &params(&c)).unwrap();
        let mut csv_bytes = Vec::new();
        write_csv(&f, &mut csv_bytes).unwrap();
        let mut json_bytes = Vec::new();
        write_structured(&f, &mut json_bytes).unwrap();
        outputs.push((csv_bytes, json_bytes));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn comparisons() {
    let rl = fixtures::refined_linear::<f64>();
    let tree = fixtures::fig3::<f64>();
    let p = params(&tree);
    let pts = PointSet::List(vec![pt(&[-15.0, 10.0]), pt(&[3.0, 0.0])]);
    let report = compare_at(&rl, &tree, &pts, &p).unwrap();
    let Comparison::Compared {
        first,
        second,
        relation,
    } = &report[0].comparison
    else {
        panic!()
    };
    assert_eq!(*first, CoverageValue::ExceedsCap);
    assert!(matches!(second, CoverageValue::Bounded(r) if (r - 6.5).abs() < 1e-3));
    assert_eq!(*relation, Relation::Greater);
    assert!(
        matches!(&report[1].comparison, Comparison::Skipped { reason } if reason.contains("first"))
    );

    let report = compare_at(&tree, &tree, &grid(&tree, 6), &p).unwrap();
    assert!(report.iter().all(|e| matches!(
        e.comparison,
        Comparison::Compared {
            relation: Relation::Equal,
            ..
        }
    )));

    let cube = PointSet::List(vec![pt(&[0.0, 0.0, 0.0])]);
    let three = fixtures::refined_linear_from(
        &coverage_lab::geometry::Hyperplane::new(vec![0.0, 0.0, 1.0], 0.0).unwrap(),
    );
    assert!(matches!(
        compare_at(&tree, &three, &cube, &p),
        Err(FieldError::DimensionMismatch(2, 3))
    ));
    assert!(matches!(
        compute_field(&tree, &cube, &p),
        Err(FieldError::Dimension { index: 0, .. })
    ));
}

fn rank(v: &CoverageValue<f64>) -> (u8, f64) {
    match v {
        CoverageValue::Zero => (0, 0.0),
        CoverageValue::Bounded(r) => (1, *r),
        CoverageValue::ExceedsCap => (2, 0.0),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn finer_grids_widen_the_estimates(k in 2usize..5, which in 0usize..3) {
        let c = [fixtures::fig3::<f64>(), fixtures::generalized_linear(), fixtures::linear()][which].clone();
        let p = params(&c);
        let coarse = compute_field(&c, &grid(&c, k), &p).unwrap();
        // 2k - 1 nodes per axis contain the k-node grid
        let fine = compute_field(&c, &grid(&c, 2 * k - 1), &p).unwrap();
        for (x, r) in coarse.points.iter().zip(&coarse.results) {
            prop_assert_eq!(fine.result_at(x).map(|f| f.value()), Some(r.value()));
        }
        let (ci, cs) = (coarse.inf_estimate.unwrap(), coarse.sup_estimate.unwrap());
        let (fi, fs) = (fine.inf_estimate.unwrap(), fine.sup_estimate.unwrap());
        prop_assert!(fi.cmp_value(&ci) != Ordering::Greater);
        prop_assert!(fs.cmp_value(&cs) != Ordering::Less);

        // estimates agree with an independent min/max over the results
        let ranks: Vec<(u8, f64)> = fine.results.iter().map(|r| rank(&r.value())).collect();
        let lo = ranks.iter().cloned().fold((u8::MAX, f64::INFINITY), |a, b| if b < a { b } else { a });
        let hi = ranks.iter().cloned().fold((0, f64::NEG_INFINITY), |a, b| if b > a { b } else { a });
        prop_assert_eq!(rank(&fi), lo);
        prop_assert_eq!(rank(&fs), hi);
    }
}
