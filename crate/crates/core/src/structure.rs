//! Structural analysis of classifiers: boundary refinement, directions of
//! growing anchor sequences, halfspace certificates, and the test for being
//! a refined linear classifier.
//!
//! "Infinite" coverage is always the computable proxy `ExceedsCap` at a
//! configured cap, and verdicts record that cap.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{Classifier, ClassifierError, LabelError, Membership, PartitionVerdict};
use crate::coverage::{
    coverage_at, Anchor, AnchorCertificate, Coverage, CoverageError, CoverageParams, CoverageResult,
};
use crate::dsl::{BinOp, CmpOp, Expr, Predicate};
use crate::geometry::sampling::{derive_seed, seeded, uniform_in_box, unit_vector};
use crate::geometry::{
    dot, norm, Ball, Certificate, GeometryError, HPolytope, Halfspace, Hyperplane, Point,
};
use crate::linalg::smallest_eigenvector;
use crate::region::LabelRegion;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StructureError {
    #[error("unsupported region: {0}")]
    UnsupportedRegion(String),
    #[error("degenerate anchor sequence: {0}")]
    DegenerateSequence(String),
    #[error("classifier has a refinement set; an ordinary classifier is required")]
    NotOrdinary,
    #[error("point {point:?} lies in the refinement set")]
    RefinementPoint { point: Vec<f64> },
    #[error("partition check failed with {violations} violation(s), first at {first:?}")]
    InvalidPartition { violations: usize, first: Vec<f64> },
    #[error(transparent)]
    Coverage(#[from] CoverageError),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

const ANGLE_TOL: f64 = 1e-9;
/// Uniform samples used to check the partition before classifying.
const PARTITION_SAMPLES: usize = 2000;
/// Bisection along probe segments stops at this fraction of the box diameter.
const BISECT_REL: f64 = 1e-12;
/// Largest boundary-fit residual accepted, relative to the box diameter.
const FIT_REL: f64 = 1e-6;

// ---------------------------------------------------------------------------
// Boundary refinement

/// Normalized, order-independent key of a polytope, used to drop duplicate
/// faces.
fn polytope_key<T: Real>(p: &HPolytope<T>) -> Vec<(Vec<f64>, f64, bool)> {
    let mut key: Vec<(Vec<f64>, f64, bool)> = p
        .halfspaces
        .iter()
        .map(|h| {
            let n = h.normal_norm().as_f64();
            (
                h.normal.iter().map(|c| c.as_f64() / n).collect(),
                h.offset.as_f64() / n,
                h.closed,
            )
        })
        .collect();
    key.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    key.dedup_by(|a, b| same_constraint(a, b));
    key
}

fn same_constraint(a: &(Vec<f64>, f64, bool), b: &(Vec<f64>, f64, bool)) -> bool {
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0);
    a.2 == b.2 && close(a.1, b.1) && a.0.iter().zip(&b.0).all(|(x, y)| close(*x, *y))
}

fn push_unique<T: Real>(
    faces: &mut Vec<HPolytope<T>>,
    keys: &mut Vec<Vec<(Vec<f64>, f64, bool)>>,
    p: HPolytope<T>,
) {
    let k = polytope_key(&p);
    let dup = keys
        .iter()
        .any(|q| q.len() == k.len() && q.iter().zip(&k).all(|(a, b)| same_constraint(a, b)));
    if !dup {
        keys.push(k);
        faces.push(p);
    }
}

/// The face of `p` on its `i`-th constraint, with every side closed.
fn face<T: Real>(p: &HPolytope<T>, i: usize) -> HPolytope<T> {
    let h = &p.halfspaces[i];
    let mut hs = vec![
        h.with_closed(true),
        Halfspace {
            normal: h.normal.iter().map(|c| -*c).collect(),
            offset: -h.offset,
            closed: true,
        },
    ];
    hs.extend(
        p.halfspaces
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, h)| h.with_closed(true)),
    );
    HPolytope { halfspaces: hs }
}

fn pieces_region<T: Real>(mut pieces: Vec<HPolytope<T>>, as_union: bool) -> LabelRegion<T> {
    if pieces.len() == 1 && !as_union {
        let p = pieces.pop().expect("one piece");
        if p.halfspaces.len() == 1 {
            return LabelRegion::Halfspace(p.halfspaces.into_iter().next().expect("one"));
        }
        return LabelRegion::Polytope(p);
    }
    LabelRegion::Union(pieces)
}

/// Moves every label boundary into the refinement set.
///
/// Polyhedral labels become their open versions and each face of each piece
/// joins the refinement set (duplicates dropped). Pieces that become empty
/// disappear, and so do labels left with no pieces. Analytic labels have
/// every comparison made strict; the refinement set then holds the points
/// where some comparison is tight and the relaxed predicate of its label
/// holds, minus anything an opened label still claims. Outside the new
/// refinement set, `label_of` is unchanged.
pub fn refine_boundary<T: Real>(c: &Classifier<T>) -> Result<Classifier<T>, StructureError> {
    let polyhedral = c
        .labels()
        .values()
        .chain(c.refinement_set())
        .all(|r| r.pieces().is_some());
    let refined = if polyhedral {
        refine_polyhedral(c)?
    } else {
        refine_analytic(c)?
    };
    let refined = match c.declared_domain_box() {
        Some(b) => refined.with_domain_box(b.clone())?,
        None => refined,
    };
    Ok(refined.with_probe_points(c.probe_points().to_vec())?)
}

fn refine_polyhedral<T: Real>(c: &Classifier<T>) -> Result<Classifier<T>, StructureError> {
    let mut faces = Vec::new();
    let mut keys = Vec::new();
    let old_union = matches!(c.refinement_set(), Some(LabelRegion::Union(_)));
    if let Some(r) = c.refinement_set() {
        for p in r.pieces().expect("polyhedral") {
            push_unique(&mut faces, &mut keys, p);
        }
    }
    let mut labels = BTreeMap::new();
    for (name, region) in c.labels() {
        let mut open = Vec::new();
        for p in region.pieces().expect("polyhedral") {
            for i in 0..p.halfspaces.len() {
                push_unique(&mut faces, &mut keys, face(&p, i));
            }
            let o = p.with_all_closed(false);
            if !o.provably_empty() {
                open.push(o);
            }
        }
        if !open.is_empty() {
            let as_union = matches!(region, LabelRegion::Union(_));
            labels.insert(name.clone(), pieces_region(open, as_union));
        }
    }
    let refinement = (!faces.is_empty()).then(|| pieces_region(faces, old_union));
    Ok(Classifier::new(c.dimension(), labels, refinement)?)
}

/// Negation normal form: `not` only survives as flipped comparisons.
fn nnf(e: &Expr, negate: bool) -> Expr {
    match e {
        Expr::Bool(b) => Expr::Bool(*b != negate),
        Expr::Not(inner) => nnf(inner, !negate),
        Expr::And(a, b) if negate => nnf(a, true).or(nnf(b, true)),
        Expr::Or(a, b) if negate => nnf(a, true).and(nnf(b, true)),
        Expr::And(a, b) => nnf(a, false).and(nnf(b, false)),
        Expr::Or(a, b) => nnf(a, false).or(nnf(b, false)),
        Expr::Compare(op, a, b) if negate => {
            let (a, b) = ((**a).clone(), (**b).clone());
            match op {
                CmpOp::Lt => Expr::compare(CmpOp::Ge, a, b),
                CmpOp::Le => Expr::compare(CmpOp::Gt, a, b),
                CmpOp::Gt => Expr::compare(CmpOp::Le, a, b),
                CmpOp::Ge => Expr::compare(CmpOp::Lt, a, b),
                CmpOp::Eq => Expr::compare(CmpOp::Lt, a.clone(), b.clone()).or(Expr::compare(
                    CmpOp::Gt,
                    a,
                    b,
                )),
            }
        }
        other => other.clone(),
    }
}

fn and_fold(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Bool(false), _) | (_, Expr::Bool(false)) => Expr::Bool(false),
        (Expr::Bool(true), e) | (e, Expr::Bool(true)) => e,
        (a, b) => a.and(b),
    }
}

fn or_fold(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Bool(true), _) | (_, Expr::Bool(true)) => Expr::Bool(true),
        (Expr::Bool(false), e) | (e, Expr::Bool(false)) => e,
        (a, b) => a.or(b),
    }
}

/// Rewrites the comparisons of an NNF expression: `strict` turns `<=`, `>=`
/// into `<`, `>` and `==` into false; otherwise `<`, `>` relax to `<=`, `>=`.
fn with_strictness(e: &Expr, strict: bool) -> Expr {
    match e {
        Expr::And(a, b) => and_fold(with_strictness(a, strict), with_strictness(b, strict)),
        Expr::Or(a, b) => or_fold(with_strictness(a, strict), with_strictness(b, strict)),
        Expr::Compare(op, a, b) => {
            let op = match (op, strict) {
                (CmpOp::Le, true) => CmpOp::Lt,
                (CmpOp::Ge, true) => CmpOp::Gt,
                (CmpOp::Eq, true) => return Expr::Bool(false),
                (CmpOp::Lt, false) => CmpOp::Le,
                (CmpOp::Gt, false) => CmpOp::Ge,
                (op, _) => *op,
            };
            Expr::Compare(op, a.clone(), b.clone())
        }
        other => other.clone(),
    }
}

/// True when some division has a denominator depending on the variables,
/// where a comparison can change sign without passing through equality.
fn has_variable_division(e: &Expr) -> bool {
    match e {
        Expr::Binary(BinOp::Div, a, b) => b.max_variable() > 0 || has_variable_division(a),
        Expr::Binary(_, a, b) | Expr::Compare(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) => {
            has_variable_division(a) || has_variable_division(b)
        }
        Expr::Neg(a) | Expr::Call(_, a) | Expr::Not(a) => has_variable_division(a),
        _ => false,
    }
}

fn refine_analytic<T: Real>(c: &Classifier<T>) -> Result<Classifier<T>, StructureError> {
    let n = c.dimension();
    let already_open = c.labels().values().all(|r| {
        let e = r.to_expr();
        with_strictness(&nnf(&e, false), true) == e
    });
    if already_open {
        return Ok(c.clone());
    }
    let mut labels = BTreeMap::new();
    let mut claimed_open: Option<Expr> = None;
    let mut boundary: Option<Expr> = None;
    for (name, region) in c.labels() {
        let e = region.to_expr();
        if has_variable_division(&e) {
            return Err(StructureError::UnsupportedRegion(format!(
                "label `{name}` divides by an expression in the variables"
            )));
        }
        let normal = nnf(&e, false);
        let open = with_strictness(&normal, true);
        let closed = with_strictness(&normal, false);
        for (_, a, b) in normal.comparisons() {
            let tight = Expr::compare(CmpOp::Eq, a.clone(), b.clone());
            let piece = and_fold(tight, closed.clone());
            boundary = Some(match boundary {
                None => piece,
                Some(acc) => or_fold(acc, piece),
            });
        }
        claimed_open = Some(match claimed_open {
            None => open.clone(),
            Some(acc) => or_fold(acc, open.clone()),
        });
        if open != Expr::Bool(false) {
            labels.insert(
                name.clone(),
                LabelRegion::Analytic(Predicate::new(open, n).map_err(dsl)?),
            );
        }
    }
    let fresh = boundary.map(|b| and_fold(b, claimed_open.expect("labels exist").not()));
    let old = c.refinement_set().map(|r| r.to_expr());
    let refinement = match (old, fresh) {
        (None, None) => None,
        (Some(e), None) | (None, Some(e)) => Some(e),
        (Some(a), Some(b)) => Some(or_fold(a, b)),
    };
    let refinement = refinement
        .map(|e| Predicate::new(e, n).map(LabelRegion::Analytic).map_err(dsl))
        .transpose()?;
    Ok(Classifier::new(n, labels, refinement)?)
}

fn dsl(e: crate::dsl::DslError) -> StructureError {
    StructureError::UnsupportedRegion(e.to_string())
}

// ---------------------------------------------------------------------------
// Directions of growing anchors

/// Limit direction of a sequence of anchors around one point, with the
/// angle between each intermediate direction and the limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionEstimate<T> {
    pub direction: Vec<T>,
    pub residual_angles: Vec<T>,
}

fn angle_between<T: Real>(a: &[T], b: &[T]) -> T {
    // atan2 of |a x b| and a·b is accurate for tiny angles, unlike acos
    let d = dot(a, b);
    let cross2 = (dot(a, a) * dot(b, b) - d * d).max(T::zero());
    cross2.sqrt().atan2(d)
}

/// Directions `s_i = (q_i - x)/‖q_i - x‖` from `x` to the anchor centers,
/// with the last one taken as the limit `s*`.
pub fn estimate_asymptotic_direction<T: Real>(
    anchors: &[Anchor<T>],
    x: &Point<T>,
) -> Result<DirectionEstimate<T>, StructureError> {
    if anchors.len() < 3 {
        return Err(StructureError::DegenerateSequence(format!(
            "need at least 3 anchors, got {}",
            anchors.len()
        )));
    }
    if anchors.windows(2).any(|w| !(w[0].radius() < w[1].radius())) {
        return Err(StructureError::DegenerateSequence(
            "radii are not strictly increasing".into(),
        ));
    }
    let mut dirs = Vec::with_capacity(anchors.len());
    for (i, a) in anchors.iter().enumerate() {
        if a.ball.dim() != x.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: x.dim(),
                found: a.ball.dim(),
            }
            .into());
        }
        if !a.ball.contains(x) {
            return Err(StructureError::DegenerateSequence(format!(
                "anchor {i} does not contain the point"
            )));
        }
        let v = a.ball.center.sub(x);
        let len = norm(&v);
        if !(len > T::zero()) {
            return Err(StructureError::DegenerateSequence(format!(
                "anchor {i} is centered at the point"
            )));
        }
        dirs.push(v.into_iter().map(|c| c / len).collect::<Vec<T>>());
    }
    let last = dirs.last().expect("nonempty").clone();
    let residual_angles = dirs.iter().map(|d| angle_between(d, &last)).collect();
    Ok(DirectionEstimate {
        direction: last,
        residual_angles,
    })
}

/// Anchors for `x` in the open halfspace `h`, centered on the ray from `x`
/// along the inward normal and shifted sideways by `lateral` (orthogonal to
/// the normal, shorter than half the distance `d` from `x` to the boundary).
/// The `i`-th center is at `2^i` along the ray and its radius is `2^i + d/2`,
/// so every ball contains `x` and stays in `h`.
pub fn orthogonal_ray_anchors<T: Real>(
    h: &Halfspace<T>,
    x: &Point<T>,
    lateral: &[T],
    count: usize,
    label: &str,
) -> Result<Vec<Anchor<T>>, StructureError> {
    let a = h.normal_norm();
    let inward: Vec<T> = h.normal.iter().map(|c| -*c / a).collect();
    let d = h.slack(x) / a;
    if !(d > T::zero()) {
        return Err(CoverageError::PointNotInRegion.into());
    }
    if !(norm(lateral) < d * T::half())
        || dot(lateral, &inward).abs() > T::lit(1e-9) * (T::one() + norm(lateral))
    {
        return Err(GeometryError::InvalidInput(
            "lateral shift must be orthogonal to the normal and shorter than d/2".into(),
        )
        .into());
    }
    (1..=count)
        .map(|i| {
            let t = T::lit(2f64.powi(i as i32));
            let center = x.offset(&inward, t).offset(lateral, T::one());
            let ball = Ball::new(center, t + d * T::half())?;
            Ok(Anchor {
                ball,
                anchored_point: x.clone(),
                label: label.to_string(),
                certificate: AnchorCertificate::Exact,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Halfspace certificates

fn unit<T: Real>(d: &[T]) -> Result<Vec<T>, StructureError> {
    let n = norm(d);
    if !(n > T::zero()) || !n.is_finite() {
        return Err(GeometryError::InvalidInput(
            "direction must be a nonzero finite vector".into(),
        )
        .into());
    }
    Ok(d.iter().map(|c| *c / n).collect())
}

/// Whether every constraint of `p` is implied by `d·(q - x) > 0`: each
/// normal must point along `-d` with an offset no tighter than `x` allows.
fn implied_by<T: Real>(p: &HPolytope<T>, d: &[T], x: &Point<T>) -> bool {
    p.halfspaces.iter().all(|h| {
        let an = h.normal_norm();
        let cos = dot(&h.normal, d) / an;
        if cos > -(T::one() - T::lit(ANGLE_TOL)) {
            return false;
        }
        // a = -lambda d, and a·q < -lambda d·x for all q in H
        let lambda = an;
        let bound = -lambda * dot(d, x.coords());
        let slack = T::lit(32.0) * T::epsilon() * (bound.abs() + h.offset.abs());
        bound <= h.offset + slack
    })
}

/// A point of `H = {q : d·(q - x) > 0}` violating constraint `h`, when `h`
/// is not implied by `H`.
fn violation_in_halfspace<T: Real>(h: &Halfspace<T>, d: &[T], x: &Point<T>) -> Option<Point<T>> {
    let ad = dot(&h.normal, d);
    let w: Vec<T> = h
        .normal
        .iter()
        .zip(d)
        .map(|(a, di)| *a - ad * *di)
        .collect();
    let wn = norm(&w);
    let an = h.normal_norm();
    let p = if wn > T::lit(1e-9) * an {
        let w: Vec<T> = w.iter().map(|c| *c / wn).collect();
        let base = x.offset(d, T::one());
        let t = ((h.offset - dot(&h.normal, base.coords())) / wn).max(T::zero()) + T::one();
        base.offset(&w, t)
    } else if ad > T::zero() {
        let t = ((h.offset - dot(&h.normal, x.coords())) / ad).max(T::zero()) + T::one();
        x.offset(d, t)
    } else {
        let lambda = -ad;
        let gap = -lambda * dot(d, x.coords()) - h.offset;
        if !(gap > T::zero()) {
            return None;
        }
        x.offset(d, gap / (T::two() * lambda))
    };
    (dot(d, &p.sub(x)) > T::zero() && !h.contains(&p)).then_some(p)
}

/// Tests `H = {q : d·(q - x) > 0} ⊆ region`.
///
/// Polyhedral regions are decided by constraint implication when a single
/// piece contains `H` or the region is convex. Otherwise `budget` probes are
/// drawn: three quarters from `H ∩ box` (box samples reflected across the
/// boundary of `H`) and the rest from the half-shell of radii `diam` to
/// `10 diam` around `x`.
pub fn halfspace_in_region<T: Real>(
    region: &LabelRegion<T>,
    x: &Point<T>,
    direction: &[T],
    budget: usize,
    seed: u64,
    bounds: &crate::classifier::DomainBox<T>,
) -> Result<Certificate<T>, StructureError> {
    let d = unit(direction)?;
    if let Some(pieces) = region.pieces() {
        if pieces.iter().any(|p| implied_by(p, &d, x)) {
            return Ok(Certificate::Proven);
        }
        if let [p] = pieces.as_slice() {
            for h in &p.halfspaces {
                if let Some(w) = violation_in_halfspace(h, &d, x) {
                    if region.contains(&w) == Ok(false) {
                        return Ok(Certificate::Refuted { witness: w });
                    }
                }
            }
        }
    }
    let mut rng = seeded(seed);
    let diam = bounds.diameter();
    let near = budget - budget / 4;
    for k in 0..budget {
        let p = if k < near {
            let q = uniform_in_box(&mut rng, &bounds.lo, &bounds.hi);
            let s = dot(&d, &q.sub(x));
            if s > T::zero() {
                q
            } else {
                q.offset(&d, -T::two() * s + T::epsilon() * diam)
            }
        } else {
            let mut v: Vec<T> = unit_vector(&mut rng, x.dim())
                .into_iter()
                .map(T::lit)
                .collect();
            if dot(&v, &d) < T::zero() {
                v.iter_mut().for_each(|c| *c = -*c);
            }
            let rho = diam * T::lit(rng.gen_range(1.0..10.0));
            x.offset(&v, rho).offset(&d, T::epsilon() * diam)
        };
        if !(dot(&d, &p.sub(x)) > T::zero()) {
            continue;
        }
        if region.contains(&p) != Ok(true) {
            return Ok(Certificate::Refuted { witness: p });
        }
    }
    Ok(Certificate::Unfalsified {
        samples: budget,
        seed,
    })
}

/// Tests whether the label of `x` contains the open halfspace
/// `{q : direction·(q - x) > 0}`, whose boundary passes through `x`.
pub fn halfspace_certificate<T: Real>(
    c: &Classifier<T>,
    x: &Point<T>,
    direction: &[T],
    budget: usize,
    seed: u64,
) -> Result<Certificate<T>, StructureError> {
    let name = match c.label_of(x)? {
        Membership::Label(name) => name,
        Membership::Refinement => {
            return Err(StructureError::RefinementPoint { point: x.to_f64() })
        }
    };
    halfspace_certificate_for_label(c, &name, x, direction, budget, seed)
}

/// Same test against a named label. Here `x` only fixes the boundary of the
/// halfspace and may lie anywhere, including the refinement set.
pub fn halfspace_certificate_for_label<T: Real>(
    c: &Classifier<T>,
    label: &str,
    x: &Point<T>,
    direction: &[T],
    budget: usize,
    seed: u64,
) -> Result<Certificate<T>, StructureError> {
    let region = c
        .label(label)
        .ok_or_else(|| StructureError::UnsupportedRegion(format!("no label named `{label}`")))?;
    if x.dim() != c.dimension() || direction.len() != c.dimension() {
        return Err(GeometryError::DimensionMismatch {
            expected: c.dimension(),
            found: if x.dim() != c.dimension() {
                x.dim()
            } else {
                direction.len()
            },
        }
        .into());
    }
    halfspace_in_region(region, x, direction, budget, seed, &c.domain_box())
}

// ---------------------------------------------------------------------------
// Structure verdicts

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NotRefinedReason {
    /// A probe has bounded or zero coverage.
    BoundedCoverage,
    /// Every probe exceeded the cap but a third label was observed.
    ThirdLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StructureVerdict<T> {
    /// Two labels separated by `hyperplane`; `labels.0` lies on the side
    /// where `normal·x < offset`.
    RefinedLinear {
        hyperplane: Hyperplane<T>,
        labels: (String, String),
        cap: T,
    },
    NotRefinedLinear {
        witness: Point<T>,
        label: String,
        coverage: CoverageResult<T>,
        reason: NotRefinedReason,
    },
    TrivialClassifier {
        label: String,
    },
    Inconclusive {
        reason: String,
    },
}

impl<T> StructureVerdict<T> {
    pub fn name(&self) -> &'static str {
        match self {
            StructureVerdict::RefinedLinear { .. } => "refined_linear",
            StructureVerdict::NotRefinedLinear { .. } => "not_refined_linear",
            StructureVerdict::TrivialClassifier { .. } => "trivial_classifier",
            StructureVerdict::Inconclusive { .. } => "inconclusive",
        }
    }
}

/// A verdict plus the evidence parameters behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport<T> {
    pub verdict: StructureVerdict<T>,
    pub cap: T,
    pub probe_count: usize,
    pub budget: usize,
    pub seed: u64,
    /// Labels in order of first appearance among the probes.
    pub observed_labels: Vec<String>,
    /// Probes that fell in the refinement set and were skipped.
    pub skipped_refinement: usize,
    /// Largest distance of a located boundary point from the fitted
    /// hyperplane, when one was fitted.
    pub fit_residual: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureParams<T> {
    pub probe_count: usize,
    pub cap: T,
    pub budget: usize,
    pub seed: u64,
}

impl<T: Real> StructureParams<T> {
    /// 64 probes, the default cap, 2000 samples per sampled check, seed 0.
    pub fn defaults_for(c: &Classifier<T>) -> Self {
        StructureParams {
            probe_count: 64,
            cap: CoverageParams::defaults_for(c).cap,
            budget: 2000,
            seed: 0,
        }
    }
}

const PROBE_TAG: u64 = 0x5052_4f42;
const FRESH_TAG: u64 = 0x4652_5348;
const COVER_TAG: u64 = 0x434f_5652;
const PARTITION_TAG: u64 = 0x5041_5254;

/// Evaluates `f` over `items` in parallel chunks and returns the first index
/// (in item order) where it yields `Some`, computing no chunk past it.
fn first_hit<I, R, E, F>(items: &[I], f: F) -> Result<Option<(usize, R)>, E>
where
    I: Sync,
    R: Send,
    E: Send,
    F: Fn(usize, &I) -> Result<Option<R>, E> + Sync,
{
    let chunk = rayon::current_num_threads().max(1) * 2;
    let mut start = 0;
    while start < items.len() {
        let end = (start + chunk).min(items.len());
        let results: Vec<Result<Option<R>, E>> = (start..end)
            .into_par_iter()
            .map(|i| f(i, &items[i]))
            .collect();
        for (k, r) in results.into_iter().enumerate() {
            if let Some(v) = r? {
                return Ok(Some((start + k, v)));
            }
        }
        start = end;
    }
    Ok(None)
}

fn coverage_params<T: Real>(
    c: &Classifier<T>,
    cap: T,
    budget: usize,
    seed: u64,
) -> CoverageParams<T> {
    CoverageParams {
        cap,
        budget,
        seed,
        ..CoverageParams::defaults_for(c)
    }
}

/// A point and the label it fell in.
type Labeled<T> = (Point<T>, String);

/// Labeled probes: the spec's probe points first, then `count` uniform
/// points of the domain box. Refinement points are dropped and counted.
fn labeled_probes<T: Real>(
    c: &Classifier<T>,
    count: usize,
    seed: u64,
    with_spec_points: bool,
) -> Result<(Vec<Labeled<T>>, usize), StructureError> {
    let bounds = c.domain_box();
    let mut rng = seeded(seed);
    let mut pts: Vec<Point<T>> = if with_spec_points {
        c.probe_points().to_vec()
    } else {
        Vec::new()
    };
    pts.extend((0..count).map(|_| uniform_in_box(&mut rng, &bounds.lo, &bounds.hi)));
    let mut out = Vec::with_capacity(pts.len());
    let mut skipped = 0;
    for p in pts {
        match c.label_of(&p)? {
            Membership::Label(name) => out.push((p, name)),
            Membership::Refinement => skipped += 1,
        }
    }
    Ok((out, skipped))
}

fn is_label<T: Real>(c: &Classifier<T>, p: &Point<T>, name: &str) -> bool {
    matches!(c.label_of(p), Ok(Membership::Label(n)) if n == name)
}

struct BoundaryFit<T> {
    hyperplane: Hyperplane<T>,
    residual: T,
    /// A point carrying a label other than the two being separated, met
    /// while bisecting.
    third: Option<Labeled<T>>,
}

/// Locates boundary points between labels `a` and `b` by bisecting segments
/// joining their probes, then fits a hyperplane by least squares.
/// Returns `None` when too few segments are available.
fn fit_boundary<T: Real>(
    c: &Classifier<T>,
    a_pts: &[&Point<T>],
    b_pts: &[&Point<T>],
    a: &str,
    b: &str,
) -> Option<BoundaryFit<T>> {
    let n = c.dimension();
    let diam = c.domain_box().diameter();
    let pairs = a_pts.len().min(b_pts.len()).min((4 * (n + 1)).max(24));
    if pairs < n + 1 {
        return None;
    }
    let stop = T::lit(BISECT_REL) * diam;
    let located: Vec<(Point<T>, Option<Labeled<T>>)> = (0..pairs)
        .into_par_iter()
        .map(|k| {
            let (mut lo, mut hi) = (a_pts[k].clone(), b_pts[k].clone());
            let mut third = None;
            for _ in 0..200 {
                if lo.distance(&hi) <= stop {
                    break;
                }
                let mid = lo.lerp(&hi, T::half());
                match c.label_of(&mid) {
                    Ok(Membership::Label(name)) if name == a => lo = mid,
                    Ok(Membership::Label(name)) => {
                        if name != b && third.is_none() {
                            third = Some((mid.clone(), name));
                        }
                        hi = mid;
                    }
                    _ => hi = mid,
                }
            }
            (lo.lerp(&hi, T::half()), third)
        })
        .collect();
    let third = located.iter().find_map(|(_, t)| t.clone());
    let points: Vec<Point<T>> = located.into_iter().map(|(p, _)| p).collect();

    let m = T::lit(points.len() as f64);
    let mean: Vec<T> = (0..n)
        .map(|i| points.iter().map(|p| p.coords()[i]).sum::<T>() / m)
        .collect();
    let mut scatter = vec![vec![T::zero(); n]; n];
    for p in &points {
        let v: Vec<T> = p.coords().iter().zip(&mean).map(|(x, c)| *x - *c).collect();
        for i in 0..n {
            for j in 0..n {
                scatter[i][j] = scatter[i][j] + v[i] * v[j];
            }
        }
    }
    let mut normal = smallest_eigenvector(&scatter)?;
    let mut offset = dot(&normal, &mean);
    // orient so that label `a` is on the negative side
    if dot(&normal, a_pts[0].coords()) > offset {
        normal.iter_mut().for_each(|c| *c = -*c);
        offset = -offset;
    }
    let residual = points
        .iter()
        .map(|p| (dot(&normal, p.coords()) - offset).abs())
        .fold(T::zero(), T::max);
    Some(BoundaryFit {
        hyperplane: Hyperplane { normal, offset },
        residual,
        third,
    })
}

/// Checks that two labels partition `count` fresh probes by the side of
/// `h` they fall on. Probes within `margin` of `h` are skipped. Returns the
/// first disagreeing point.
fn side_consistency<T: Real>(
    c: &Classifier<T>,
    h: &Hyperplane<T>,
    labels: (&str, &str),
    count: usize,
    seed: u64,
    margin: T,
) -> Result<Option<Point<T>>, StructureError> {
    let bounds = c.domain_box();
    let mut rng = seeded(seed);
    for _ in 0..count {
        let p = uniform_in_box(&mut rng, &bounds.lo, &bounds.hi);
        let s = h.signed_distance(&p);
        if s.abs() <= margin {
            continue;
        }
        let want = if s < T::zero() { labels.0 } else { labels.1 };
        if !is_label(c, &p, want) {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

/// Empirical verdict on whether `c` is a refined linear classifier.
///
/// Probes are the spec's probe points followed by `probe_count` uniform
/// points of the domain box; refinement points are skipped. One observed
/// label gives `TrivialClassifier`. Otherwise coverage is computed at each
/// probe and the first bounded or zero result gives `NotRefinedLinear`.
/// If every probe exceeds the cap, a third label (among the probes or met
/// while bisecting) also gives `NotRefinedLinear`; with two labels the
/// boundary is located by bisection, a hyperplane is fitted, and it is
/// accepted if the fit is tight and fresh probes fall on the expected sides.
pub fn classify_structure<T: Real>(
    c: &Classifier<T>,
    params: &StructureParams<T>,
) -> Result<StructureReport<T>, StructureError> {
    let bounds = c.domain_box();
    let part = c.validate_partition(
        PARTITION_SAMPLES,
        derive_seed(params.seed, PARTITION_TAG),
        &bounds,
    )?;
    if part.verdict == PartitionVerdict::Violated {
        return Err(StructureError::InvalidPartition {
            violations: part.violations.len(),
            first: part.violations[0].point.clone(),
        });
    }
    let (probes, skipped) = labeled_probes(
        c,
        params.probe_count,
        derive_seed(params.seed, PROBE_TAG),
        true,
    )?;
    let mut observed: Vec<String> = Vec::new();
    for (_, name) in &probes {
        if !observed.contains(name) {
            observed.push(name.clone());
        }
    }
    let report = |verdict, fit_residual| StructureReport {
        verdict,
        cap: params.cap,
        probe_count: params.probe_count,
        budget: params.budget,
        seed: params.seed,
        observed_labels: observed.clone(),
        skipped_refinement: skipped,
        fit_residual,
    };
    if observed.is_empty() {
        return Ok(report(
            StructureVerdict::Inconclusive {
                reason: "every probe fell in the refinement set".into(),
            },
            None,
        ));
    }
    if observed.len() == 1 {
        return Ok(report(
            StructureVerdict::TrivialClassifier {
                label: observed[0].clone(),
            },
            None,
        ));
    }

    let coverage_of = |i: usize, x: &Point<T>| {
        let p = coverage_params(
            c,
            params.cap,
            params.budget,
            derive_seed(params.seed, COVER_TAG + i as u64),
        );
        coverage_at(c, x, &p)
    };
    let bounded = first_hit(&probes, |i, (x, _)| {
        let r = coverage_of(i, x)?;
        Ok::<_, StructureError>((!r.is_exceeds_cap()).then_some(r))
    })?;
    if let Some((i, r)) = bounded {
        let (x, name) = probes[i].clone();
        return Ok(report(
            StructureVerdict::NotRefinedLinear {
                witness: x,
                label: name,
                coverage: r,
                reason: NotRefinedReason::BoundedCoverage,
            },
            None,
        ));
    }

    let third_label = |x: Point<T>, name: String| -> Result<StructureVerdict<T>, StructureError> {
        let r = coverage_of(usize::MAX >> 1, &x)?;
        let reason = if r.is_exceeds_cap() {
            NotRefinedReason::ThirdLabel
        } else {
            NotRefinedReason::BoundedCoverage
        };
        Ok(StructureVerdict::NotRefinedLinear {
            witness: x,
            label: name,
            coverage: r,
            reason,
        })
    };
    if observed.len() > 2 {
        let (x, name) = probes
            .iter()
            .find(|(_, n)| *n == observed[2])
            .cloned()
            .expect("third label was observed");
        return Ok(report(third_label(x, name)?, None));
    }

    let mut pair = [observed[0].clone(), observed[1].clone()];
    pair.sort();
    let (a, b) = (pair[0].as_str(), pair[1].as_str());
    let a_pts: Vec<&Point<T>> = probes
        .iter()
        .filter(|(_, n)| n == a)
        .map(|(p, _)| p)
        .collect();
    let b_pts: Vec<&Point<T>> = probes
        .iter()
        .filter(|(_, n)| n == b)
        .map(|(p, _)| p)
        .collect();
    let Some(fit) = fit_boundary(c, &a_pts, &b_pts, a, b) else {
        return Ok(report(
            StructureVerdict::Inconclusive {
                reason: "too few probes on each side to locate the boundary".into(),
            },
            None,
        ));
    };
    if let Some((x, name)) = fit.third {
        return Ok(report(third_label(x, name)?, Some(fit.residual)));
    }
    let diam = bounds.diameter();
    let fit_tol = T::lit(FIT_REL) * diam;
    if !(fit.residual <= fit_tol) {
        return Ok(report(
            StructureVerdict::Inconclusive {
                reason: format!(
                    "boundary points are not coplanar: residual {} exceeds {}",
                    fit.residual, fit_tol
                ),
            },
            Some(fit.residual),
        ));
    }
    let fresh = derive_seed(params.seed, FRESH_TAG);
    if let Some(p) = side_consistency(
        c,
        &fit.hyperplane,
        (a, b),
        params.probe_count,
        fresh,
        T::lit(10.0) * fit_tol,
    )? {
        return Ok(report(
            StructureVerdict::Inconclusive {
                reason: format!(
                    "probe {:?} is on the wrong side of the fitted hyperplane",
                    p.to_f64()
                ),
            },
            Some(fit.residual),
        ));
    }
    Ok(report(
        StructureVerdict::RefinedLinear {
            hyperplane: fit.hyperplane,
            labels: (a.to_string(), b.to_string()),
            cap: params.cap,
        },
        Some(fit.residual),
    ))
}

// ---------------------------------------------------------------------------
// Negligible labels and generalized binary linear classifiers

/// Whether a polytope is pinned to a hyperplane by two anti-parallel
/// constraints with no gap between them (or is provably empty), returning
/// that hyperplane.
fn pinning_hyperplane<T: Real>(p: &HPolytope<T>) -> Option<Hyperplane<T>> {
    p.antiparallel_pairs(T::lit(ANGLE_TOL))
        .into_iter()
        .find(|(i, _, gap)| {
            let h = &p.halfspaces[*i];
            let scale = (h.offset / h.normal_norm()).abs().max(T::one());
            *gap <= T::lit(1e-12) * scale
        })
        .map(|(i, _, _)| p.halfspaces[i].boundary())
}

/// Structural negligibility: every polytope piece lies in a hyperplane.
/// Analytic regions are not decided.
pub fn is_negligible_region<T: Real>(region: &LabelRegion<T>) -> Result<bool, StructureError> {
    match region {
        LabelRegion::Analytic(_) => Err(StructureError::UnsupportedRegion(
            "negligibility of analytic regions is not decided".into(),
        )),
        _ => Ok(region
            .pieces()
            .expect("polyhedral")
            .iter()
            .all(|p| pinning_hyperplane(p).is_some())),
    }
}

/// The open halfspace a piece equals when all its normals point the same
/// way; the tightest constraint wins.
fn piece_as_halfspace<T: Real>(p: &HPolytope<T>) -> Option<Halfspace<T>> {
    let first = &p.halfspaces[0];
    let u0: Vec<T> = first
        .normal
        .iter()
        .map(|c| *c / first.normal_norm())
        .collect();
    let mut best = T::infinity();
    for h in &p.halfspaces {
        let n = h.normal_norm();
        if dot(&h.normal, &u0) / n < T::one() - T::lit(ANGLE_TOL) {
            return None;
        }
        best = best.min(h.offset / n);
    }
    Some(Halfspace {
        normal: u0,
        offset: best,
        closed: false,
    })
}

fn same_hyperplane<T: Real>(a: &Hyperplane<T>, b: &Hyperplane<T>, tol: T) -> bool {
    a.angle_to(b) <= T::lit(1e-9) && a.offset_gap(b) <= tol
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedVerdict<T> {
    pub generalized: bool,
    pub hyperplane: Option<Hyperplane<T>>,
    pub full_labels: Vec<String>,
    pub negligible_labels: Vec<String>,
    pub reason: String,
}

/// Whether `c` is an ordinary classifier whose two full-dimensional labels
/// each contain an open halfspace, the two halfspaces share their boundary
/// hyperplane, and everything else lies inside that hyperplane.
///
/// Polyhedral labels are checked exactly. Analytic labels count as
/// full-dimensional; their halfspace is recovered by locating the boundary
/// between probes and then checked by sampling. `probe_count` fresh probes
/// finally confirm that off-hyperplane points carry the label of their side.
pub fn is_generalized_binary_linear<T: Real>(
    c: &Classifier<T>,
    probe_count: usize,
    seed: u64,
) -> Result<GeneralizedVerdict<T>, StructureError> {
    if !c.is_ordinary() {
        return Err(StructureError::NotOrdinary);
    }
    let mut full = Vec::new();
    let mut negligible = Vec::new();
    for (name, region) in c.labels() {
        match is_negligible_region(region) {
            Ok(true) => negligible.push(name.clone()),
            Ok(false) | Err(StructureError::UnsupportedRegion(_)) => full.push(name.clone()),
            Err(e) => return Err(e),
        }
    }
    let verdict = |ok: bool, h: Option<Hyperplane<T>>, reason: String| GeneralizedVerdict {
        generalized: ok,
        hyperplane: h,
        full_labels: full.clone(),
        negligible_labels: negligible.clone(),
        reason,
    };
    if full.len() != 2 {
        return Ok(verdict(
            false,
            None,
            format!("{} full-dimensional labels, expected 2", full.len()),
        ));
    }
    let bounds = c.domain_box();
    let diam = bounds.diameter();
    let tol = T::lit(1e-9) * diam.max(T::one());

    // Halfspace inside each full label, plus the pieces left over.
    let mut halves: Vec<Halfspace<T>> = Vec::new();
    let mut leftovers: Vec<HPolytope<T>> = Vec::new();
    let analytic = full
        .iter()
        .any(|n| matches!(c.label(n), Some(LabelRegion::Analytic(_))));
    if analytic {
        let (probes, _) =
            labeled_probes(c, probe_count.max(64), derive_seed(seed, PROBE_TAG), false)?;
        let a_pts: Vec<&Point<T>> = probes
            .iter()
            .filter(|(_, n)| *n == full[0])
            .map(|(p, _)| p)
            .collect();
        let b_pts: Vec<&Point<T>> = probes
            .iter()
            .filter(|(_, n)| *n == full[1])
            .map(|(p, _)| p)
            .collect();
        let Some(fit) = fit_boundary(c, &a_pts, &b_pts, &full[0], &full[1]) else {
            return Ok(verdict(
                false,
                None,
                "could not locate a boundary between the labels".into(),
            ));
        };
        if fit.residual > T::lit(FIT_REL) * diam {
            return Ok(verdict(
                false,
                None,
                "boundary between the labels is not flat".into(),
            ));
        }
        let h = fit.hyperplane;
        let on_plane = {
            let t = (h.offset - dot(&h.normal, a_pts[0].coords())) / dot(&h.normal, &h.normal);
            a_pts[0].offset(&h.normal, t)
        };
        let neg: Vec<T> = h.normal.iter().map(|c| -*c).collect();
        for (name, dir) in [(&full[0], &neg), (&full[1], &h.normal)] {
            let region = c.label(name).expect("label exists");
            let cert = halfspace_in_region(
                region,
                &on_plane,
                dir,
                probe_count.max(256),
                derive_seed(seed, FRESH_TAG),
                &bounds,
            )?;
            if cert.is_refuted() {
                return Ok(verdict(
                    false,
                    None,
                    format!("label `{name}` contains no halfspace"),
                ));
            }
        }
        halves.push(Halfspace {
            normal: h.normal.clone(),
            offset: h.offset,
            closed: false,
        });
        halves.push(Halfspace {
            normal: neg,
            offset: -h.offset,
            closed: false,
        });
    } else {
        for name in &full {
            let pieces = c.label(name).and_then(|r| r.pieces()).expect("polyhedral");
            let Some(k) = pieces.iter().position(|p| piece_as_halfspace(p).is_some()) else {
                return Ok(verdict(
                    false,
                    None,
                    format!("label `{name}` contains no halfspace"),
                ));
            };
            halves.push(piece_as_halfspace(&pieces[k]).expect("checked"));
            leftovers.extend(
                pieces
                    .into_iter()
                    .enumerate()
                    .filter(|(i, _)| *i != k)
                    .map(|(_, p)| p),
            );
        }
    }
    let (ha, hb) = (halves[0].boundary(), halves[1].boundary());
    if !same_hyperplane(&ha, &hb, tol) || dot(&halves[0].normal, &halves[1].normal) >= T::zero() {
        return Ok(verdict(
            false,
            None,
            "the two halfspaces do not share a boundary".into(),
        ));
    }
    for name in &negligible {
        leftovers.extend(c.label(name).and_then(|r| r.pieces()).expect("polyhedral"));
    }
    for p in &leftovers {
        match pinning_hyperplane(p) {
            Some(h) if same_hyperplane(&h, &ha, tol) => {}
            _ => {
                return Ok(verdict(
                    false,
                    Some(ha),
                    "a piece outside the two halfspaces leaves the hyperplane".into(),
                ))
            }
        }
    }
    // `halves[i]` is `a·x < b` inside label full[i]; the first is the
    // negative side of its own boundary.
    let h = Hyperplane {
        normal: halves[0].normal.clone(),
        offset: halves[0].offset,
    };
    if let Some(p) = side_consistency(
        c,
        &h,
        (&full[0], &full[1]),
        probe_count,
        derive_seed(seed, FRESH_TAG),
        tol,
    )? {
        return Ok(verdict(
            false,
            Some(h),
            format!(
                "probe {:?} is on the wrong side of the hyperplane",
                p.to_f64()
            ),
        ));
    }
    Ok(verdict(
        true,
        Some(h),
        "two halfspaces sharing one hyperplane".into(),
    ))
}

/// Convenience: the coverage verdict of a result as `Zero`, `Bounded` or
/// `ExceedsCap` for display.
pub fn coverage_kind<T: Real>(r: &CoverageResult<T>) -> &'static str {
    match r.coverage {
        Coverage::Zero => "zero",
        Coverage::Bounded { .. } => "bounded",
        Coverage::ExceedsCap { .. } => "exceeds_cap",
    }
}
