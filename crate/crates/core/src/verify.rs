//! The built-in verification suite: ten acceptance checks run against the
//! shipped fixtures and seeded random instances, with a deterministic report.
//!
//! Reports carry measured values but never timings, so two runs with the
//! same seed serialize to identical bytes. Runtime limits still count toward
//! pass or fail.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{Classifier, Membership};
use crate::coverage::{
    coverage_at, coverage_exact_convex, recertify, shrink_toward, Coverage, CoverageParams,
    CoverageResult,
};
use crate::fixtures;
use crate::geometry::sampling::{
    derive_seed, seeded, uniform_in_ball, uniform_in_box, unit_vector,
};
use crate::geometry::{dot, norm, Ball, Halfspace, Hyperplane, Point};
use crate::oracle;
use crate::spec_file::{load_spec, SpecError};
use crate::structure::{
    classify_structure, estimate_asymptotic_direction, is_generalized_binary_linear,
    orthogonal_ray_anchors, refine_boundary, NotRefinedReason, StructureParams, StructureVerdict,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    /// Measured quantities, rounded for display and comparison.
    pub measured: BTreeMap<String, f64>,
    pub detail: String,
}

impl CriterionResult {
    /// `criterion N: PASS|FAIL name (k=v, ...) detail`
    pub fn line(&self) -> String {
        let mut s = format!(
            "criterion {}: {} {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name
        );
        if !self.measured.is_empty() {
            let parts: Vec<String> = self
                .measured
                .iter()
                .map(|(k, v)| format!("{k}={}", fmt_value(*v)))
                .collect();
            let _ = write!(s, " ({})", parts.join(", "));
        }
        if !self.detail.is_empty() {
            let _ = write!(s, " {}", self.detail);
        }
        s
    }
}

fn fmt_value(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.0}")
    } else if v.abs() >= 1e-3 && v.abs() < 1e6 {
        format!("{v:.6}")
    } else {
        format!("{v:.3e}")
    }
}

/// Rounds to 9 significant digits so reports do not depend on the last
/// bits of parallel floating-point work.
fn round(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    let digits = 8 - v.abs().log10().floor() as i32;
    let scale = 10f64.powi(digits);
    (v * scale).round() / scale
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub criteria: Vec<CriterionResult>,
}

impl VerifyReport {
    /// One line per criterion followed by a summary line.
    pub fn text(&self) -> String {
        let mut s = String::new();
        for c in &self.criteria {
            s.push_str(&c.line());
            s.push('\n');
        }
        let passed = self.criteria.iter().filter(|c| c.passed).count();
        let _ = writeln!(
            s,
            "suite {}: {}/{} passed (seed {})",
            self.suite,
            passed,
            self.criteria.len(),
            self.seed
        );
        s
    }

    pub fn json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// The shipped classifiers the suite runs on. Random instances are
/// generated from the seed and do not come from here.
#[derive(Debug, Clone)]
pub struct SuiteFixtures {
    pub fig1: Classifier<f64>,
    pub fig3: Classifier<f64>,
    pub linear: Classifier<f64>,
    pub refined_linear: Classifier<f64>,
    pub generalized_linear: Classifier<f64>,
    pub trivial: Classifier<f64>,
}

impl SuiteFixtures {
    pub fn embedded() -> Self {
        SuiteFixtures {
            fig1: fixtures::fig1(),
            fig3: fixtures::fig3(),
            linear: fixtures::linear(),
            refined_linear: fixtures::refined_linear(),
            generalized_linear: fixtures::generalized_linear(),
            trivial: fixtures::trivial(),
        }
    }

    /// Loads `fig1.json`, `fig3.json`, ... from `dir`, falling back to the
    /// embedded copy for any file that is missing.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, SpecError> {
        let dir = dir.as_ref();
        let mut fx = Self::embedded();
        let slots: [(&str, &mut Classifier<f64>); 6] = [
            ("fig1.json", &mut fx.fig1),
            ("fig3.json", &mut fx.fig3),
            ("linear.json", &mut fx.linear),
            ("refined_linear.json", &mut fx.refined_linear),
            ("generalized_linear.json", &mut fx.generalized_linear),
            ("trivial.json", &mut fx.trivial),
        ];
        for (file, slot) in slots {
            let path = dir.join(file);
            if path.exists() {
                *slot = load_spec(&path)?;
            }
        }
        Ok(fx)
    }
}

pub const SUITES: [&str; 1] = ["theorems"];
pub const CRITERIA: std::ops::RangeInclusive<u8> = 1..=10;

/// Runs a named suite. `theorems` runs every criterion.
pub fn run_suite(suite: &str, seed: u64) -> Option<VerifyReport> {
    run_suite_with(suite, seed, &SuiteFixtures::embedded())
}

pub fn run_suite_with(suite: &str, seed: u64, fx: &SuiteFixtures) -> Option<VerifyReport> {
    match suite {
        "theorems" => Some(run_criteria(&CRITERIA.collect::<Vec<_>>(), seed, suite, fx)),
        _ => None,
    }
}

/// Runs the listed criteria in order.
pub fn run_criteria(ids: &[u8], seed: u64, suite: &str, fx: &SuiteFixtures) -> VerifyReport {
    let criteria: Vec<CriterionResult> = ids
        .iter()
        .map(|&id| run_criterion_with(id, seed, fx))
        .collect();
    VerifyReport {
        suite: suite.to_string(),
        seed,
        passed: criteria.iter().all(|c| c.passed),
        criteria,
    }
}

pub fn run_criterion(id: u8, seed: u64) -> CriterionResult {
    run_criterion_with(id, seed, &SuiteFixtures::embedded())
}

pub fn run_criterion_with(id: u8, seed: u64, fx: &SuiteFixtures) -> CriterionResult {
    let s = derive_seed(seed, id as u64);
    let start = Instant::now();
    let (name, limit, mut result) = match id {
        1 => (
            "overfit tree coverage disparity",
            Some(10),
            overfit_tree(fx),
        ),
        2 => (
            "refined linear coverage exceeds every cap",
            Some(30),
            refined_linear_caps(fx, s),
        ),
        3 => (
            "zero coverage on the decision boundary",
            Some(10),
            boundary_zero(fx, s),
        ),
        4 => (
            "exact convex coverage matches the oracle",
            Some(300),
            oracle_equivalence(s),
        ),
        5 => (
            "downward closure by shrinking toward x",
            None,
            downward_closure(s),
        ),
        6 => ("asymptotic direction recovery", None, direction_recovery(s)),
        7 => ("structure verdicts", Some(120), structure_verdicts(fx, s)),
        8 => (
            "no refined linear verdict with three labels",
            None,
            three_labels(s),
        ),
        9 => (
            "generalized binary linear recognition",
            None,
            generalized(fx, s),
        ),
        10 => ("determinism of the suite", None, determinism(fx, seed)),
        _ => (
            "unknown criterion",
            None,
            Outcome::fail(format!("no criterion {id}")),
        ),
    };
    if let Some(secs) = limit {
        if start.elapsed() > Duration::from_secs(secs) {
            result.passed = false;
            let _ = write!(result.detail, " exceeded the {secs} s limit");
        }
    }
    CriterionResult {
        id,
        name: name.to_string(),
        passed: result.passed,
        measured: result
            .measured
            .into_iter()
            .map(|(k, v)| (k, round(v)))
            .collect(),
        detail: result.detail.trim().to_string(),
    }
}

#[derive(Debug, Default)]
struct Outcome {
    passed: bool,
    measured: BTreeMap<String, f64>,
    detail: String,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            passed: true,
            ..Default::default()
        }
    }

    fn fail(detail: String) -> Self {
        Outcome {
            passed: false,
            measured: BTreeMap::new(),
            detail,
        }
    }

    fn measure(&mut self, key: &str, v: f64) {
        self.measured.insert(key.to_string(), v);
    }

    /// Records a failed check; only the first failure message is kept.
    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            if self.passed {
                self.detail = msg();
            }
            self.passed = false;
        }
    }
}

fn pt(c: &[f64]) -> Point<f64> {
    Point::from_f64(c).expect("finite")
}

fn bounded_radius(r: &CoverageResult<f64>) -> Option<f64> {
    match r.coverage {
        Coverage::Bounded { radius, .. } => Some(radius),
        _ => None,
    }
}

fn overfit_tree(fx: &SuiteFixtures) -> Outcome {
    let c = &fx.fig3;
    let p = CoverageParams::defaults_for(c);
    let mut o = Outcome::new();
    let mut radii = Vec::new();
    // brute-force oracle values
    for (x, want, key) in [([5.0, 0.0], 1.0, "r_5_0"), ([-15.0, 10.0], 6.5, "r_m15_10")] {
        match coverage_at(c, &pt(&x), &p).map(|r| bounded_radius(&r)) {
            Ok(Some(r)) => {
                o.measure(key, r);
                o.check((r - want).abs() <= 1e-3, || {
                    format!("coverage at {x:?} is {r}, expected {want}")
                });
                radii.push(r);
            }
            other => o.check(false, || format!("coverage at {x:?}: {other:?}")),
        }
    }
    if radii.len() == 2 {
        o.check(radii[0] < radii[1], || "no strict inequality".into());
    }
    o
}

fn refined_linear_caps(fx: &SuiteFixtures, seed: u64) -> Outcome {
    let c = &fx.refined_linear;
    let b = c.domain_box();
    let diam = b.diameter();
    let mut rng = seeded(seed);
    let pts: Vec<Point<f64>> = (0..100)
        .map(|_| uniform_in_box(&mut rng, &b.lo, &b.hi))
        .collect();
    let mut o = Outcome::new();
    let mut checked = 0usize;
    for cap in [10.0, 1e3, 1e6] {
        let p = CoverageParams {
            cap: cap * diam,
            ..CoverageParams::defaults_for(c)
        };
        let results: Vec<_> = pts.par_iter().map(|x| coverage_at(c, x, &p)).collect();
        for (x, r) in pts.iter().zip(results) {
            let ok = match &r {
                Ok(CoverageResult {
                    coverage: Coverage::ExceedsCap { witnesses, .. },
                    ..
                }) => {
                    witnesses.len() >= 2
                        && witnesses.windows(2).all(|w| w[0].radius() < w[1].radius())
                        && witnesses.last().is_some_and(|w| w.radius() >= cap * diam)
                        && witnesses.iter().all(|w| {
                            w.anchored_point == *x && w.ball.contains(x) && recertify(c, w).holds()
                        })
                }
                _ => false,
            };
            o.check(ok, || format!("point {:?} at cap {cap}: {r:?}", x.to_f64()));
            checked += ok as usize;
        }
    }
    o.measure("points_passed", checked as f64);
    o
}

fn boundary_zero(fx: &SuiteFixtures, seed: u64) -> Outcome {
    let c = &fx.linear;
    let p = CoverageParams::defaults_for(c);
    let b = c.domain_box();
    let mut rng = seeded(seed);
    let mut o = Outcome::new();
    // x1 on a quarter-unit lattice keeps x2 = x1/2 - 1 exact
    let on_line: Vec<Point<f64>> = (0..20)
        .map(|_| {
            let x1 = rng.gen_range(-60i32..=60) as f64 / 4.0;
            pt(&[x1, 0.5 * x1 - 1.0])
        })
        .collect();
    let mut zeros = 0;
    for x in &on_line {
        let in_n = c.label_of(x) == Ok(Membership::Label("N".into()));
        let r = coverage_at(c, x, &p);
        let zero = matches!(&r, Ok(r) if r.coverage == Coverage::Zero);
        o.check(in_n && zero, || {
            format!("line point {:?}: {r:?}", x.to_f64())
        });
        zeros += (in_n && zero) as usize;
    }
    let h = Hyperplane::new(vec![-0.5, 1.0], -1.0).expect("nonzero");
    let mut off = 0;
    let mut capped = 0;
    while off < 20 {
        let x = uniform_in_box(&mut rng, &b.lo, &b.hi);
        if h.signed_distance(&x).abs() < 1e-6 {
            continue;
        }
        off += 1;
        let r = coverage_at(c, &x, &p);
        let ok = matches!(&r, Ok(r) if r.is_exceeds_cap());
        o.check(ok, || format!("off-line point {:?}: {r:?}", x.to_f64()));
        capped += ok as usize;
    }
    o.measure("zero_on_line", zeros as f64);
    o.measure("capped_off_line", capped as f64);
    o
}

fn oracle_equivalence(seed: u64) -> Outcome {
    let mut rng = seeded(seed);
    let cases: Vec<_> = (0..50)
        .map(|i| {
            let dim = 2 + i % 2;
            let k = rng.gen_range(4..=10).max(dim + 1);
            fixtures::random_polytope::<f64>(&mut rng, dim, k)
        })
        .collect();
    let tol = 1e-6;
    let rows: Vec<(f64, f64)> = cases
        .par_iter()
        .map(|(poly, x)| {
            let exact = coverage_exact_convex(x, poly, "P", 1e6, tol)
                .ok()
                .and_then(|r| bounded_radius(&r))
                .unwrap_or(f64::NAN);
            (exact, oracle::polytope_coverage(poly, x.coords()))
        })
        .collect();
    let mut o = Outcome::new();
    let mut worst = 0.0f64;
    for (i, (exact, brute)) in rows.iter().enumerate() {
        let allowed = (0.02 * brute).max(2.0 * tol);
        let err = (exact - brute).abs();
        worst = worst.max(err / brute);
        o.check(err <= allowed, || {
            format!("case {i}: exact {exact}, oracle {brute}")
        });
    }
    o.measure("cases", rows.len() as f64);
    o.measure("max_relative_error", worst);
    o
}

fn downward_closure(seed: u64) -> Outcome {
    let mut rng = seeded(seed);
    let mut o = Outcome::new();
    let mut failures = 0;
    for i in 0..1000 {
        let dim = 2 + i % 3;
        let k = rng.gen_range(dim + 1..=dim + 6);
        let (poly, inside) = fixtures::random_polytope::<f64>(&mut rng, dim, k);
        // a feasible ball at r2: any ball inside the region, with x drawn
        // from it
        let depth = poly.min_face_distance(&inside);
        let r2 = 0.999 * depth;
        let big = Ball::new(inside.clone(), r2).expect("positive radius");
        let x = uniform_in_ball(&mut rng, &Ball::new(inside, 0.999 * r2).expect("positive"));
        let r1 = r2 * rng.gen_range(0.001..1.0);
        let feasible_r2 = poly.contains_ball(&big) && big.contains(&x);
        let small = shrink_toward(&big, &x, r1);
        let ok = feasible_r2
            && small
                .as_ref()
                .is_ok_and(|b| b.radius == r1 && b.contains(&x) && poly.contains_ball(b));
        if !ok {
            failures += 1;
        }
        o.check(ok, || format!("case {i} failed"));
    }
    o.measure("cases", 1000.0);
    o.measure("failures", failures as f64);
    o
}

fn direction_recovery(seed: u64) -> Outcome {
    let mut rng = seeded(seed);
    let mut o = Outcome::new();
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let dim = 2 + i % 4;
        let normal: Vec<f64> = unit_vector(&mut rng, dim);
        let offset = rng.gen_range(-5.0..5.0);
        let h = Halfspace::open(normal.clone(), offset).expect("unit normal");
        // a point of the halfspace: reflect a box sample if needed
        let mut x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-20.0..20.0)).collect();
        let s = dot(&normal, &x) - offset;
        if s >= 0.0 {
            x.iter_mut()
                .zip(&normal)
                .for_each(|(c, a)| *c -= (2.0 * s + 1.0) * a);
        }
        let x = pt(&x);
        let d = h.slack(&x);
        let mut w = unit_vector(&mut rng, dim);
        let p = dot(&w, &normal);
        w.iter_mut().zip(&normal).for_each(|(c, a)| *c -= p * a);
        let wn = norm(&w);
        let lateral: Vec<f64> = w.iter().map(|c| c / wn * d / 4.0).collect();
        let inward: Vec<f64> = normal.iter().map(|c| -c).collect();
        let est = orthogonal_ray_anchors(&h, &x, &lateral, 20, "H")
            .and_then(|a| estimate_asymptotic_direction(&a, &x));
        match est {
            Ok(est) => {
                let cos = dot(&est.direction, &inward).clamp(-1.0, 1.0);
                let angle = cos.acos();
                worst = worst.max(angle);
                o.check(angle <= 1e-2, || format!("halfspace {i}: angle {angle}"));
                let tail = &est.residual_angles[est.residual_angles.len() - 10..];
                o.check(tail.windows(2).all(|w| w[1] < w[0]), || {
                    format!("halfspace {i}: residual tail not decreasing {tail:?}")
                });
            }
            Err(e) => o.check(false, || format!("halfspace {i}: {e}")),
        }
    }
    o.measure("max_angle", worst);
    o
}

fn structure_of(c: &Classifier<f64>, seed: u64) -> Result<StructureVerdict<f64>, String> {
    let params = StructureParams {
        seed,
        ..StructureParams::defaults_for(c)
    };
    classify_structure(c, &params)
        .map(|r| r.verdict)
        .map_err(|e| e.to_string())
}

fn structure_verdicts(fx: &SuiteFixtures, seed: u64) -> Outcome {
    let mut o = Outcome::new();
    let refined = fx.refined_linear.clone();
    let refined_from_linear = refine_boundary(&fx.linear).map_err(|e| e.to_string());
    let linear_cases = [
        (
            "refined_linear",
            Ok(refined),
            Hyperplane::new(vec![0.0, 1.0], 0.0).expect("nonzero"),
        ),
        (
            "refine(linear)",
            refined_from_linear,
            Hyperplane::new(vec![-0.5, 1.0], -1.0).expect("nonzero"),
        ),
    ];
    for (name, c, truth) in linear_cases {
        let v = c.and_then(|c| structure_of(&c, seed));
        match v {
            Ok(StructureVerdict::RefinedLinear { hyperplane, .. }) => {
                let angle = hyperplane.angle_to(&truth);
                o.measure(&format!("{name}_angle"), angle);
                o.check(angle <= 1e-3, || format!("{name}: angle {angle}"));
            }
            other => o.check(false, || format!("{name}: {other:?}")),
        }
    }
    let mut rng = seeded(seed);
    let bounded = [
        ("fig1", fx.fig1.clone()),
        ("fig3", fx.fig3.clone()),
        ("three_slabs", fixtures::random_slabs(&mut rng, 2, 3)),
    ];
    for (name, c) in bounded {
        match structure_of(&c, seed) {
            Ok(StructureVerdict::NotRefinedLinear {
                coverage, reason, ..
            }) => {
                let consistent = match reason {
                    NotRefinedReason::BoundedCoverage => !coverage.is_exceeds_cap(),
                    NotRefinedReason::ThirdLabel => true,
                };
                o.check(consistent, || {
                    format!("{name}: witness {reason:?} with {coverage:?}")
                });
            }
            other => o.check(false, || format!("{name}: {other:?}")),
        }
    }
    let trivial = structure_of(&fx.trivial, seed);
    o.check(
        matches!(trivial, Ok(StructureVerdict::TrivialClassifier { .. })),
        || format!("trivial: {trivial:?}"),
    );
    o
}

fn three_labels(seed: u64) -> Outcome {
    let mut rng = seeded(seed);
    let cases: Vec<Classifier<f64>> = (0..50)
        .map(|i| fixtures::random_multilabel(&mut rng, i))
        .collect();
    let mut o = Outcome::new();
    let mut refined = 0;
    for (i, c) in cases.iter().enumerate() {
        let v = structure_of(c, derive_seed(seed, i as u64));
        let bad = !matches!(
            v,
            Ok(StructureVerdict::NotRefinedLinear { .. })
                | Ok(StructureVerdict::Inconclusive { .. })
        );
        if matches!(v, Ok(StructureVerdict::RefinedLinear { .. })) {
            refined += 1;
        }
        o.check(!bad, || format!("classifier {i}: {v:?}"));
    }
    o.measure("classifiers", cases.len() as f64);
    o.measure("refined_linear_verdicts", refined as f64);
    o
}

fn generalized(fx: &SuiteFixtures, seed: u64) -> Outcome {
    let mut o = Outcome::new();
    let cases = [
        ("linear", fx.linear.clone(), true),
        (
            "split_hyperplane",
            fixtures::split_hyperplane_labels(),
            true,
        ),
        ("generalized_linear", fx.generalized_linear.clone(), true),
        ("fig3", fx.fig3.clone(), false),
    ];
    for (name, c, want) in cases {
        match is_generalized_binary_linear(&c, 256, seed) {
            Ok(v) => o.check(v.generalized == want, || format!("{name}: {}", v.reason)),
            Err(e) => o.check(false, || format!("{name}: {e}")),
        }
    }
    o
}

fn determinism(fx: &SuiteFixtures, seed: u64) -> Outcome {
    let ids: Vec<u8> = (1..=9).collect();
    let a = run_criteria(&ids, seed, "theorems", fx).json();
    let b = run_criteria(&ids, seed, "theorems", fx).json();
    let mut o = Outcome::new();
    o.check(a == b, || "two runs produced different reports".into());
    o.measure("report_bytes", a.len() as f64);
    o
}
