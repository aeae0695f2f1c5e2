use std::collections::BTreeMap;

use approx::assert_abs_diff_eq;
use coverage_lab::classifier::{Classifier, Membership, PartitionVerdict};
use coverage_lab::dsl::Predicate;
use coverage_lab::fixtures;
use coverage_lab::geometry::sampling::{seeded, uniform_in_box};
use coverage_lab::geometry::{Certificate, HPolytope, Halfspace, Hyperplane, Point};
use coverage_lab::region::LabelRegion;
use coverage_lab::structure::*;
use coverage_lab::{Classifier64, Point64};
use proptest::prelude::*;

fn pt(c: &[f64]) -> Point64 {
    Point::from_f64(c).unwrap()
}

fn labels(entries: Vec<(&str, LabelRegion<f64>)>) -> BTreeMap<String, LabelRegion<f64>> {
    entries
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

fn analytic(src: &str) -> LabelRegion<f64> {
    LabelRegion::Analytic(Predicate::parse(src, 2).unwrap())
}

fn name(m: Membership) -> String {
    match m {
        Membership::Label(s) => s,
        Membership::Refinement => "R".into(),
    }
}

// ---- refine_boundary

#[test]
fn refining_a_binary_linear_classifier_opens_both_sides() {
    let c = fixtures::linear::<f64>();
    let r = refine_boundary(&c).unwrap();
    let m = Halfspace::open(vec![0.5, -1.0], 1.0).unwrap();
    let n = Halfspace::open(vec![-0.5, 1.0], -1.0).unwrap();
    assert_eq!(r.label("M"), Some(&LabelRegion::Halfspace(m)));
    assert_eq!(r.label("N"), Some(&LabelRegion::Halfspace(n)));
    let Some(LabelRegion::Polytope(face)) = r.refinement_set() else {
        panic!("expected a single face, got {:?}", r.refinement_set())
    };
    assert_eq!(face.halfspaces.len(), 2);
    assert_eq!(
        r.label_of(&pt(&[0.0, -1.0])).unwrap(),
        Membership::Refinement
    );
    assert_eq!(
        r.label_of(&pt(&[2.0, 0.0])).unwrap(),
        Membership::Refinement
    );
    assert_eq!(name(r.label_of(&pt(&[0.0, 0.0])).unwrap()), "M");
    assert_eq!(name(r.label_of(&pt(&[0.0, -2.0])).unwrap()), "N");
    assert_eq!(r.probe_points(), c.probe_points());
}

#[test]
fn refining_a_closed_box_moves_its_faces_out() {
    let b = HPolytope::axis_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
    let c = Classifier::new(
        2,
        labels(vec![("B", LabelRegion::Polytope(b.clone()))]),
        None,
    )
    .unwrap();
    let r = refine_boundary(&c).unwrap();
    assert_eq!(
        r.label("B"),
        Some(&LabelRegion::Polytope(b.with_all_closed(false)))
    );
    let Some(LabelRegion::Union(faces)) = r.refinement_set() else {
        panic!()
    };
    assert_eq!(faces.len(), 4);
    for p in [[0.5, 0.0], [0.0, 0.0], [1.0, 0.3], [0.7, 1.0]] {
        assert_eq!(
            r.label_of(&pt(&p)).unwrap(),
            Membership::Refinement,
            "{p:?}"
        );
    }
    assert_eq!(name(r.label_of(&pt(&[0.5, 0.5])).unwrap()), "B");
}

#[test]
fn labels_that_are_all_boundary_disappear() {
    let c = fixtures::split_hyperplane_labels::<f64>();
    let r = refine_boundary(&c).unwrap();
    assert_eq!(r.labels().keys().collect::<Vec<_>>(), ["M", "N"]);
    assert_eq!(
        r.label_of(&pt(&[3.0, 0.0])).unwrap(),
        Membership::Refinement
    );
    assert_eq!(
        r.label_of(&pt(&[-3.0, 0.0])).unwrap(),
        Membership::Refinement
    );
}

#[test]
fn refinement_is_idempotent_on_refined_linear_classifiers() {
    let c = fixtures::refined_linear::<f64>();
    assert_eq!(refine_boundary(&c).unwrap(), c);
    let mut rng = seeded(11);
    for dim in 2..=5 {
        let h = fixtures::random_hyperplane::<f64>(&mut rng, dim, 5.0);
        let c = fixtures::refined_linear_from(&h);
        assert_eq!(refine_boundary(&c).unwrap(), c);
    }
}

#[test]
fn analytic_refinement_strictifies_comparisons() {
    let c = Classifier::new(
        2,
        labels(vec![
            ("P", analytic("x1 * x1 + x2 * x2 <= 1")),
            ("Q", analytic("x1 * x1 + x2 * x2 > 1")),
        ]),
        None,
    )
    .unwrap();
    let r = refine_boundary(&c).unwrap();
    assert_eq!(
        r.label("P").unwrap().to_expr().to_string(),
        "x1 * x1 + x2 * x2 < 1.0"
    );
    assert_eq!(
        r.label_of(&pt(&[1.0, 0.0])).unwrap(),
        Membership::Refinement
    );
    assert_eq!(
        r.label_of(&pt(&[0.0, -1.0])).unwrap(),
        Membership::Refinement
    );
    assert_eq!(name(r.label_of(&pt(&[0.2, 0.1])).unwrap()), "P");
    assert_eq!(name(r.label_of(&pt(&[2.0, 0.1])).unwrap()), "Q");
    // a second pass leaves it alone
    assert_eq!(refine_boundary(&r).unwrap(), r);
}

#[test]
fn equality_labels_vanish_under_refinement() {
    let c = Classifier::new(
        2,
        labels(vec![
            ("A", analytic("x2 > 0")),
            ("B", analytic("x2 < 0")),
            ("L", analytic("x2 == 0")),
        ]),
        None,
    )
    .unwrap();
    let r = refine_boundary(&c).unwrap();
    assert!(r.label("L").is_none());
    assert_eq!(
        r.label_of(&pt(&[4.0, 0.0])).unwrap(),
        Membership::Refinement
    );
}

#[test]
fn trivial_classifier_has_nothing_to_refine() {
    let c = fixtures::trivial::<f64>();
    let r = refine_boundary(&c).unwrap();
    assert!(r.refinement_set().is_none());
}

#[test]
fn variable_denominators_are_rejected() {
    let c = Classifier::new(
        2,
        labels(vec![
            ("A", analytic("1 / x1 > 0")),
            ("B", analytic("not (1 / x1 > 0)")),
        ]),
        None,
    )
    .unwrap();
    assert!(matches!(
        refine_boundary(&c),
        Err(StructureError::UnsupportedRegion(_))
    ));
}

#[test]
fn refined_examples_remain_partitions() {
    for c in [
        fixtures::fig1::<f64>(),
        fixtures::fig3(),
        fixtures::generalized_linear(),
        fixtures::linear(),
    ] {
        let r = refine_boundary(&c).unwrap();
        let report = r.validate_partition(5000, 2, &r.domain_box()).unwrap();
        assert_eq!(
            report.verdict,
            PartitionVerdict::Unfalsified,
            "{:?}",
            report.violations.first()
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn refinement_keeps_labels_outside_the_refinement_set(seed in any::<u64>()) {
        for c in [fixtures::fig1::<f64>(), fixtures::fig3(), fixtures::linear(), fixtures::generalized_linear()] {
            let r = refine_boundary(&c).unwrap();
            let b = c.domain_box();
            let mut rng = seeded(seed);
            for _ in 0..50 {
                let x = uniform_in_box(&mut rng, &b.lo, &b.hi);
                let after = r.label_of(&x).unwrap();
                if after != Membership::Refinement {
                    prop_assert_eq!(after, c.label_of(&x).unwrap());
                }
            }
        }
    }
}

// ---- asymptotic directions

#[test]
fn ray_anchors_converge_to_the_inward_normal() {
    let h = Halfspace::open(vec![0.0, -1.0], 0.0).unwrap();
    let x = pt(&[1.0, 2.0]);
    let anchors = orthogonal_ray_anchors(&h, &x, &[0.5, 0.0], 20, "M").unwrap();
    for a in &anchors {
        assert!(a.ball.contains(&x));
        assert!(h.contains_ball(&a.ball));
    }
    let est = estimate_asymptotic_direction(&anchors, &x).unwrap();
    assert_abs_diff_eq!(est.direction[0], 0.0, epsilon = 1e-5);
    assert_abs_diff_eq!(est.direction[1], 1.0, epsilon = 1e-9);
    assert_eq!(est.residual_angles.len(), 20);
    assert!(est.residual_angles.windows(2).all(|w| w[1] < w[0]));
    // angle at index i is atan(0.5 / 2^(i+1)) minus the final one
    assert_abs_diff_eq!(
        est.residual_angles[0],
        (0.25f64).atan() - (0.5f64 / 2f64.powi(20)).atan(),
        epsilon = 1e-12
    );
}

#[test]
fn degenerate_sequences_are_rejected() {
    let h = Halfspace::open(vec![0.0, -1.0], 0.0).unwrap();
    let x = pt(&[0.0, 1.0]);
    let anchors = orthogonal_ray_anchors(&h, &x, &[0.0, 0.0], 4, "M").unwrap();
    assert!(matches!(
        estimate_asymptotic_direction(&anchors[..2], &x),
        Err(StructureError::DegenerateSequence(_))
    ));
    let mut shuffled = anchors.clone();
    shuffled.swap(1, 2);
    assert!(matches!(
        estimate_asymptotic_direction(&shuffled, &x),
        Err(StructureError::DegenerateSequence(_))
    ));
    let mut centered = anchors.clone();
    centered[0].ball.center = x.clone();
    assert!(matches!(
        estimate_asymptotic_direction(&centered, &x),
        Err(StructureError::DegenerateSequence(_))
    ));
    // an anchor that misses the point
    assert!(matches!(
        estimate_asymptotic_direction(&anchors, &pt(&[0.0, 50.0])),
        Err(StructureError::DegenerateSequence(_))
    ));
}

// ---- halfspace certificates

#[test]
fn halfspace_inside_a_label_is_proven() {
    let c = fixtures::linear::<f64>();
    let cert = halfspace_certificate(&c, &pt(&[0.0, 0.0]), &[-0.5, 1.0], 100, 0).unwrap();
    assert_eq!(cert, Certificate::Proven);
    let c = fixtures::refined_linear::<f64>();
    let cert = halfspace_certificate(&c, &pt(&[3.0, 1.0]), &[0.0, 2.0], 100, 0).unwrap();
    assert_eq!(cert, Certificate::Proven);
    // union with a halfspace piece
    let c = fixtures::generalized_linear::<f64>();
    let cert = halfspace_certificate(&c, &pt(&[0.0, 0.5]), &[0.0, 1.0], 100, 0).unwrap();
    assert_eq!(cert, Certificate::Proven);
}

#[test]
fn tilted_or_bounded_regions_are_refuted_with_witnesses() {
    let c = fixtures::linear::<f64>();
    let x = pt(&[0.0, 0.0]);
    let Certificate::Refuted { witness } =
        halfspace_certificate(&c, &x, &[1.0, 0.0], 100, 0).unwrap()
    else {
        panic!()
    };
    assert!(witness.coords()[0] > 0.0);
    assert_ne!(name(c.label_of(&witness).unwrap()), "M");

    let unit = LabelRegion::Polytope(
        HPolytope::axis_box(&[0.0, 0.0], &[1.0, 1.0])
            .unwrap()
            .with_all_closed(false),
    );
    let b = fixtures::fig3::<f64>().domain_box();
    let x = pt(&[0.5, 0.5]);
    for d in [[1.0, 0.0], [0.0, -1.0], [1.0, 1.0]] {
        let cert = halfspace_in_region(&unit, &x, &d, 100, 0, &b).unwrap();
        let Certificate::Refuted { witness } = cert else {
            panic!()
        };
        assert!(!unit.contains(&witness).unwrap());
    }
}

#[test]
fn analytic_halfspaces_are_sampled() {
    let upper = analytic("x2 > 0");
    let b = fixtures::fig3::<f64>().domain_box();
    let cert = halfspace_in_region(&upper, &pt(&[0.0, 1.0]), &[0.0, 1.0], 500, 9, &b).unwrap();
    assert_eq!(
        cert,
        Certificate::Unfalsified {
            samples: 500,
            seed: 9
        }
    );
    let cert = halfspace_in_region(&upper, &pt(&[0.0, 1.0]), &[1.0, 1.0], 500, 9, &b).unwrap();
    assert!(cert.is_refuted());
    // the sine-bounded label is cut off by the window
    let c = fixtures::fig1::<f64>();
    let cert = halfspace_certificate(&c, &pt(&[10.0, 12.0]), &[0.0, 1.0], 500, 3).unwrap();
    assert!(cert.is_refuted());
}

#[test]
fn certificate_needs_a_labeled_point_and_a_direction() {
    let c = fixtures::refined_linear::<f64>();
    assert!(matches!(
        halfspace_certificate(&c, &pt(&[0.0, 0.0]), &[0.0, 1.0], 10, 0),
        Err(StructureError::RefinementPoint { .. })
    ));
    assert!(halfspace_certificate(&c, &pt(&[0.0, 1.0]), &[0.0, 0.0], 10, 0).is_err());
}

// ---- classify_structure

fn classify(c: &Classifier64) -> StructureReport<f64> {
    classify_structure(c, &StructureParams::defaults_for(c)).unwrap()
}

#[test]
fn shipped_examples_get_the_expected_verdicts() {
    let r = classify(&fixtures::refined_linear());
    let StructureVerdict::RefinedLinear {
        hyperplane, labels, ..
    } = &r.verdict
    else {
        panic!("{:?}", r.verdict)
    };
    assert_eq!(labels, &("M".to_string(), "N".to_string()));
    assert!(hyperplane.angle_to(&Hyperplane::new(vec![0.0, 1.0], 0.0).unwrap()) < 1e-9);
    // M is on the negative side
    assert!(hyperplane.signed_distance(&pt(&[0.0, 1.0])) < 0.0);

    let r = classify(&fixtures::fig3());
    let StructureVerdict::NotRefinedLinear {
        witness,
        coverage,
        reason,
        ..
    } = &r.verdict
    else {
        panic!()
    };
    assert_eq!(*reason, NotRefinedReason::BoundedCoverage);
    assert!(!coverage.is_exceeds_cap());
    assert_eq!(witness, &pt(&[-7.0, 1.0]));

    let r = classify(&fixtures::fig1());
    assert_eq!(r.verdict.name(), "not_refined_linear");
    assert_eq!(r.observed_labels.len(), 4);

    // boundary probes of the unrefined linear example have zero coverage
    let r = classify(&fixtures::linear());
    let StructureVerdict::NotRefinedLinear { coverage, .. } = &r.verdict else {
        panic!()
    };
    assert_eq!(coverage_kind(coverage), "zero");

    let r = classify(&fixtures::trivial());
    assert_eq!(
        r.verdict,
        StructureVerdict::TrivialClassifier {
            label: "all".into()
        }
    );
}

#[test]
fn random_refined_linear_classifiers_are_recognised() {
    let mut rng = seeded(5);
    for i in 0..8 {
        let dim = 2 + i % 4;
        let h = fixtures::random_hyperplane::<f64>(&mut rng, dim, 5.0);
        let c = fixtures::refined_linear_from(&h);
        let r = classify(&c);
        let StructureVerdict::RefinedLinear { hyperplane, .. } = &r.verdict else {
            panic!("{dim}: {:?}", r.verdict)
        };
        assert!(hyperplane.angle_to(&h) < 1e-6);
        assert!(hyperplane.offset_gap(&h) < 1e-6);
    }
}

#[test]
fn three_labels_are_never_refined_linear() {
    let mut rng = seeded(17);
    for i in 0..10 {
        let c: Classifier64 = fixtures::random_multilabel(&mut rng, i);
        let r = classify(&c);
        assert_eq!(r.verdict.name(), "not_refined_linear", "{i}");
    }
}

#[test]
fn third_label_past_the_cap_is_reported() {
    // slabs ten units wide exceed a cap of one everywhere inside them
    let c = Classifier::new(
        2,
        labels(vec![
            ("A", analytic("x2 > 5")),
            ("B", analytic("x2 > -5 and x2 < 5")),
            ("C", analytic("x2 < -5")),
        ]),
        Some(analytic("x2 == 5 or x2 == -5")),
    )
    .unwrap();
    let params = StructureParams {
        cap: 1.0,
        ..StructureParams::defaults_for(&c)
    };
    let r = classify_structure(&c, &params).unwrap();
    let StructureVerdict::NotRefinedLinear {
        coverage, reason, ..
    } = &r.verdict
    else {
        panic!("{:?}", r.verdict)
    };
    assert_eq!(*reason, NotRefinedReason::ThirdLabel);
    assert!(coverage.is_exceeds_cap());
    // with the default cap the middle slab is bounded
    let r = classify(&c);
    let StructureVerdict::NotRefinedLinear { reason, .. } = &r.verdict else {
        panic!()
    };
    assert_eq!(*reason, NotRefinedReason::BoundedCoverage);
}

#[test]
fn reports_round_trip_through_json() {
    for c in [fixtures::refined_linear::<f64>(), fixtures::fig3()] {
        let r = classify(&c);
        let text = serde_json::to_string(&r).unwrap();
        let back: StructureReport<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}

#[test]
fn single_precision_recovers_the_line() {
    let c = fixtures::refined_linear::<f32>();
    let r = classify_structure(&c, &StructureParams::defaults_for(&c)).unwrap();
    let StructureVerdict::RefinedLinear { hyperplane, .. } = r.verdict else {
        panic!("{:?}", r.verdict)
    };
    assert!(hyperplane.normal[0].abs() < 1e-3);
}

// ---- negligibility and generalized binary linear

#[test]
fn negligible_regions() {
    let z = 0.0;
    let line = HPolytope::new(vec![
        Halfspace::closed(vec![0.0, 1.0], z).unwrap(),
        Halfspace::closed(vec![0.0, -1.0], z).unwrap(),
    ])
    .unwrap();
    let mut ray = line.clone();
    ray.halfspaces
        .push(Halfspace::open(vec![-1.0, 0.0], 0.0).unwrap());
    let half = Halfspace::open(vec![0.0, 1.0], 0.0).unwrap();
    assert!(is_negligible_region(&LabelRegion::Polytope(line.clone())).unwrap());
    assert!(is_negligible_region(&LabelRegion::Polytope(ray.clone())).unwrap());
    assert!(is_negligible_region(&LabelRegion::Union(vec![line.clone(), ray.clone()])).unwrap());
    assert!(!is_negligible_region(&LabelRegion::Halfspace(half.clone())).unwrap());
    assert!(!is_negligible_region(&LabelRegion::Polytope(
        HPolytope::axis_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap()
    ))
    .unwrap());
    let mixed = LabelRegion::Union(vec![ray, HPolytope::new(vec![half]).unwrap()]);
    assert!(!is_negligible_region(&mixed).unwrap());
    assert!(matches!(
        is_negligible_region(&analytic("x1 == 0")),
        Err(StructureError::UnsupportedRegion(_))
    ));
}

#[test]
fn generalized_binary_linear_examples() {
    let g =
        is_generalized_binary_linear(&fixtures::split_hyperplane_labels::<f64>(), 256, 0).unwrap();
    assert!(g.generalized, "{}", g.reason);
    assert_eq!(g.full_labels, ["M", "N"]);
    assert_eq!(g.negligible_labels, ["R+", "R-"]);
    assert!(
        g.hyperplane
            .unwrap()
            .angle_to(&Hyperplane::new(vec![0.0, 1.0], 0.0).unwrap())
            < 1e-12
    );

    for c in [fixtures::generalized_linear::<f64>(), fixtures::linear()] {
        let g = is_generalized_binary_linear(&c, 256, 0).unwrap();
        assert!(g.generalized, "{}", g.reason);
    }
    for c in [
        fixtures::fig3::<f64>(),
        fixtures::fig1(),
        fixtures::trivial(),
    ] {
        assert!(
            !is_generalized_binary_linear(&c, 256, 0)
                .unwrap()
                .generalized
        );
    }
    assert_eq!(
        is_generalized_binary_linear(&fixtures::refined_linear::<f64>(), 256, 0),
        Err(StructureError::NotOrdinary)
    );
}

#[test]
fn a_negligible_label_off_the_line_breaks_the_structure() {
    let mut c = fixtures::split_hyperplane_labels::<f64>();
    let mut entries = c.labels().clone();
    // move R+ to the line x2 = 1, which is inside M
    let shifted = HPolytope::new(vec![
        Halfspace::closed(vec![0.0, 1.0], 1.0).unwrap(),
        Halfspace::closed(vec![0.0, -1.0], -1.0).unwrap(),
    ])
    .unwrap();
    entries.insert("R+".into(), LabelRegion::Polytope(shifted));
    c = Classifier::new(2, entries, None).unwrap();
    let g = is_generalized_binary_linear(&c, 256, 0).unwrap();
    assert!(!g.generalized);
}

#[test]
fn analytic_binary_linear_is_recognised() {
    let c = Classifier::new(
        2,
        labels(vec![
            ("up", analytic("x1 + x2 > 1")),
            ("down", analytic("x1 + x2 <= 1")),
        ]),
        None,
    )
    .unwrap();
    let g = is_generalized_binary_linear(&c, 256, 4).unwrap();
    assert!(g.generalized, "{}", g.reason);
    let h = g.hyperplane.unwrap();
    assert!(h.angle_to(&Hyperplane::new(vec![1.0, 1.0], 1.0).unwrap()) < 1e-6);
    let bent = Classifier::new(
        2,
        labels(vec![
            ("up", analytic("x2 > x1 * x1")),
            ("down", analytic("x2 <= x1 * x1")),
        ]),
        None,
    )
    .unwrap();
    assert!(
        !is_generalized_binary_linear(&bent, 256, 4)
            .unwrap()
            .generalized
    );
}

#[test]
fn boundary_point_of_a_label_halfspace_is_proven() {
    let c = fixtures::refined_linear::<f64>();
    let cert =
        halfspace_certificate_for_label(&c, "M", &pt(&[0.0, 0.0]), &[0.0, 1.0], 100, 0).unwrap();
    assert_eq!(cert, Certificate::Proven);
    let cert =
        halfspace_certificate_for_label(&c, "N", &pt(&[0.0, 0.0]), &[0.0, 1.0], 100, 0).unwrap();
    assert!(cert.is_refuted());
    assert!(
        halfspace_certificate_for_label(&c, "Q", &pt(&[0.0, 0.0]), &[0.0, 1.0], 100, 0).is_err()
    );
}

#[test]
fn halfspace_below_the_sine_crosses_the_line() {
    // D lies under the sine and above x2 = -x1 - 3; at (10, 8) the
    // halfspace x2 < 8 reaches below that line
    let c = fixtures::fig1::<f64>();
    let x = pt(&[10.0, 8.0]);
    assert_eq!(name(c.label_of(&x).unwrap()), "D");
    let Certificate::Refuted { witness } =
        halfspace_certificate(&c, &x, &[0.0, -1.0], 1000, 0).unwrap()
    else {
        panic!()
    };
    assert!(witness.coords()[1] < 8.0);
    assert_ne!(
        name(c.label_of(&witness).unwrap_or(Membership::Refinement)),
        "D"
    );
}

#[test]
fn ray_anchors_in_the_right_halfplane() {
    let h = Halfspace::open(vec![-1.0, 0.0], 0.0).unwrap();
    let x = pt(&[1.0, 0.0]);
    let anchors = orthogonal_ray_anchors(&h, &x, &[0.0, 0.4], 20, "P").unwrap();
    let est = estimate_asymptotic_direction(&anchors, &x).unwrap();
    let truth = [1.0, 0.0];
    let err = (est.direction[1]).atan2(est.direction[0]).abs();
    assert!(err < 1e-2, "{err}");
    assert_abs_diff_eq!(est.direction[0], truth[0], epsilon = 1e-9);
    // collinear centers give the direction exactly
    let straight = orthogonal_ray_anchors(
        &Halfspace::open(vec![0.0, -1.0], 0.0).unwrap(),
        &pt(&[0.0, 1.0]),
        &[0.0, 0.0],
        5,
        "P",
    )
    .unwrap();
    let est = estimate_asymptotic_direction(&straight, &pt(&[0.0, 1.0])).unwrap();
    assert_eq!(est.direction, vec![0.0, 1.0]);
    assert!(est.residual_angles.iter().all(|a| *a == 0.0));
}

#[test]
fn refinement_sets_of_polyhedral_classifiers_are_negligible() {
    let mut rng = seeded(3);
    let mut cases = vec![
        fixtures::fig3::<f64>(),
        fixtures::linear(),
        fixtures::generalized_linear(),
    ];
    cases.extend((0..6).map(|i| fixtures::random_multilabel::<f64>(&mut rng, i)));
    for c in cases {
        let r = refine_boundary(&c).unwrap();
        assert!(is_negligible_region(r.refinement_set().unwrap()).unwrap());
    }
}

#[test]
fn ten_thousand_points_keep_their_labels() {
    for c in [
        fixtures::fig3::<f64>(),
        fixtures::linear(),
        fixtures::fig1(),
    ] {
        let r = refine_boundary(&c).unwrap();
        let b = c.domain_box();
        let mut rng = seeded(21);
        let mut kept = 0;
        for _ in 0..10_000 {
            let x = uniform_in_box(&mut rng, &b.lo, &b.hi);
            let after = r.label_of(&x).unwrap();
            if after != Membership::Refinement {
                assert_eq!(after, c.label_of(&x).unwrap());
                kept += 1;
            }
        }
        // uniform points essentially never land on a boundary
        assert_eq!(kept, 10_000);
    }
}
