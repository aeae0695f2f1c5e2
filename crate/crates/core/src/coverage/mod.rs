//! Coverage of a classifier at a point: the supremum of radii of open balls
//! that contain the point and stay inside its label.

mod exact;
mod search;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{Classifier, LabelError, Membership};
use crate::geometry::sampling::ball_probes;
use crate::geometry::{Ball, Certificate, GeometryError, Point};
use crate::region::{LabelRegion, RegionError};
use crate::scalar::Real;

pub use exact::coverage_exact_convex;

/// Extra relative margin a union search must clear before it replaces the
/// exact per-piece floor.
pub const UNION_GAIN: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoverageError {
    #[error("query point is not in the region")]
    PointNotInRegion,
    #[error("region is empty")]
    EmptyRegion,
    #[error("point {point:?} lies in the refinement set, where coverage is undefined")]
    RefinementPoint { point: Vec<f64> },
    #[error("point {point:?} lies in no label")]
    PointNotInAnyLabel { point: Vec<f64> },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Label(LabelError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl From<LabelError> for CoverageError {
    fn from(e: LabelError) -> Self {
        match e {
            LabelError::NoLabel { point } => CoverageError::PointNotInAnyLabel { point },
            e => CoverageError::Label(e),
        }
    }
}

/// How an anchor's containment in its label was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AnchorCertificate {
    Exact,
    Sampled { samples: usize, seed: u64 },
}

/// An open ball containing `anchored_point` and lying inside `label`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor<T> {
    pub ball: Ball<T>,
    pub anchored_point: Point<T>,
    pub label: String,
    pub certificate: AnchorCertificate,
}

impl<T: Real> Anchor<T> {
    pub fn radius(&self) -> T {
        self.ball.radius
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Coverage<T> {
    Zero,
    Bounded { radius: T, witness: Anchor<T> },
    ExceedsCap { cap: T, witnesses: Vec<Anchor<T>> },
}

/// Whether a result is exact or a certified lower bound, with the sampling
/// parameters behind it. `miss_fraction` is `ln(1/delta)/samples`: with
/// probability at least `1 - delta`, a ball that passed `samples` probes has
/// less than that fraction of its volume outside the label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Method {
    Exact,
    LowerBound {
        samples: usize,
        delta: f64,
        miss_fraction: f64,
        seed: u64,
    },
}

impl Method {
    pub fn lower_bound(samples: usize, delta: f64, seed: u64) -> Self {
        let miss_fraction = if samples == 0 {
            1.0
        } else {
            (1.0 / delta).ln() / samples as f64
        };
        Method::LowerBound {
            samples,
            delta,
            miss_fraction,
            seed,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::LowerBound { .. } => "lower_bound",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult<T> {
    pub coverage: Coverage<T>,
    pub method: Method,
}

impl<T: Real> CoverageResult<T> {
    pub fn value(&self) -> CoverageValue<T> {
        match &self.coverage {
            Coverage::Zero => CoverageValue::Zero,
            Coverage::Bounded { radius, .. } => CoverageValue::Bounded(*radius),
            Coverage::ExceedsCap { .. } => CoverageValue::ExceedsCap,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        self.value().kind_name()
    }

    /// Every witness anchor in the result.
    pub fn witnesses(&self) -> Vec<&Anchor<T>> {
        match &self.coverage {
            Coverage::Zero => Vec::new(),
            Coverage::Bounded { witness, .. } => vec![witness],
            Coverage::ExceedsCap { witnesses, .. } => witnesses.iter().collect(),
        }
    }

    pub fn is_exceeds_cap(&self) -> bool {
        matches!(self.coverage, Coverage::ExceedsCap { .. })
    }
}

/// The scalar content of a result, totally ordered as
/// `Zero < Bounded(r) < Bounded(r') < ExceedsCap` for `r < r'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "radius")]
pub enum CoverageValue<T> {
    Zero,
    Bounded(T),
    ExceedsCap,
}

impl<T: Real> CoverageValue<T> {
    pub fn kind_name(&self) -> &'static str {
        match self {
            CoverageValue::Zero => "zero",
            CoverageValue::Bounded(_) => "bounded",
            CoverageValue::ExceedsCap => "exceeds_cap",
        }
    }

    pub fn cmp_value(&self, other: &Self) -> Ordering {
        use CoverageValue::*;
        match (self, other) {
            (Zero, Zero) | (ExceedsCap, ExceedsCap) => Ordering::Equal,
            (Zero, _) | (_, ExceedsCap) => Ordering::Less,
            (_, Zero) | (ExceedsCap, _) => Ordering::Greater,
            (Bounded(a), Bounded(b)) => a.partial_cmp(b).unwrap_or(Ordering::Equal),
        }
    }
}

/// Parameters shared by the coverage entry points.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageParams<T> {
    /// Radius at which growth stops and the result is `ExceedsCap`.
    pub cap: T,
    /// Absolute radius tolerance.
    pub tol: T,
    /// Probe count for sampled certification.
    pub budget: usize,
    pub seed: u64,
    /// Confidence parameter recorded with sampled results.
    pub delta: f64,
}

impl<T: Real> CoverageParams<T> {
    /// Defaults scaled to the classifier's domain box: cap is a million
    /// diameters and tol a millionth of one. In single precision the cap
    /// drops to `1/sqrt(eps)` diameters (about 2900), since a ball that much
    /// larger than the box can no longer resolve which side of a boundary
    /// the query point is on.
    pub fn defaults_for(c: &Classifier<T>) -> Self {
        let d = c.domain_box().diameter();
        let scale = T::lit(1e6).min(T::one() / T::epsilon().sqrt());
        CoverageParams {
            cap: scale * d,
            tol: T::lit(1e-6) * d,
            budget: 10_000,
            seed: 0,
            delta: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<(), CoverageError> {
        if !(self.cap > T::zero() && self.cap.is_finite()) {
            return Err(CoverageError::InvalidParameter(format!(
                "cap must be positive and finite, got {}",
                self.cap
            )));
        }
        if !(self.tol > T::zero() && self.tol.is_finite()) {
            return Err(CoverageError::InvalidParameter(format!(
                "tol must be positive and finite, got {}",
                self.tol
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(CoverageError::InvalidParameter(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// Looks up the label of `x`, refusing refinement points.
fn query_label<'c, T: Real>(
    c: &'c Classifier<T>,
    x: &Point<T>,
) -> Result<(&'c str, &'c LabelRegion<T>), CoverageError> {
    match c.label_of(x)? {
        Membership::Refinement => Err(CoverageError::RefinementPoint { point: x.to_f64() }),
        Membership::Label(name) => {
            let (k, v) = c.labels().get_key_value(&name).expect("label exists");
            Ok((k.as_str(), v))
        }
    }
}

/// Coverage of `c` at `x`. Convex labels are solved exactly. Unions start
/// from the best exact value over the pieces holding `x` and search for
/// straddling balls; analytic labels are searched by sampling.
pub fn coverage_at<T: Real>(
    c: &Classifier<T>,
    x: &Point<T>,
    params: &CoverageParams<T>,
) -> Result<CoverageResult<T>, CoverageError> {
    params.validate()?;
    let (name, region) = query_label(c, x)?;
    match region {
        LabelRegion::Halfspace(_) | LabelRegion::Polytope(_) => {
            let poly = region.as_polytope().expect("convex");
            coverage_exact_convex(x, &poly, name, params.cap, params.tol)
        }
        LabelRegion::Union(pieces) => {
            let method = Method::lower_bound(params.budget, params.delta, params.seed);
            let mut floor: Option<CoverageResult<T>> = None;
            for p in pieces.iter().filter(|p| p.contains(x)) {
                let r = coverage_exact_convex(x, p, name, params.cap, params.tol)?;
                if r.is_exceeds_cap() {
                    return Ok(CoverageResult {
                        coverage: r.coverage,
                        method,
                    });
                }
                if floor
                    .as_ref()
                    .is_none_or(|f| r.value().cmp_value(&f.value()) == Ordering::Greater)
                {
                    floor = Some(r);
                }
            }
            if params.budget == 0 {
                let coverage = floor.map_or(Coverage::Zero, |f| f.coverage);
                return Ok(CoverageResult { coverage, method });
            }
            let floor_anchor = floor.and_then(|f| match f.coverage {
                Coverage::Bounded { witness, .. } => Some(witness),
                _ => None,
            });
            search::search(region, name, x, params, floor_anchor, T::lit(UNION_GAIN))
        }
        LabelRegion::Analytic(_) => {
            search::search(region, name, x, params, None, T::lit(search::STEP_GAIN))
        }
    }
}

/// Multi-start sampled search for the largest certified anchor at `x`,
/// whatever the label type. Convex and union-piece containment is checked
/// exactly inside the search, so on convex labels the result never exceeds
/// the exact value.
pub fn coverage_sampled<T: Real>(
    c: &Classifier<T>,
    x: &Point<T>,
    params: &CoverageParams<T>,
) -> Result<CoverageResult<T>, CoverageError> {
    params.validate()?;
    let (name, region) = query_label(c, x)?;
    search::search(region, name, x, params, None, T::lit(search::STEP_GAIN))
}

/// Re-checks an anchor: the anchored point must be strictly inside the ball,
/// then containment is decided exactly when the label allows it, otherwise by
/// `m` probes drawn from `seed`. A probe where the label cannot be evaluated
/// counts as a refutation.
pub fn certify_anchor<T: Real>(
    c: &Classifier<T>,
    anchor: &Anchor<T>,
    m: usize,
    seed: u64,
) -> Certificate<T> {
    if anchor.ball.dim() != c.dimension() || anchor.anchored_point.dim() != c.dimension() {
        return Certificate::Refuted {
            witness: anchor.anchored_point.clone(),
        };
    }
    if !anchor.ball.contains(&anchor.anchored_point) {
        return Certificate::Refuted {
            witness: anchor.anchored_point.clone(),
        };
    }
    let Some(region) = c.label(&anchor.label) else {
        return Certificate::Refuted {
            witness: anchor.ball.center.clone(),
        };
    };
    if let Some(cert) = region.exact_ball_check(&anchor.ball) {
        return cert;
    }
    for p in ball_probes(&anchor.ball, m, seed) {
        if region.contains(&p) != Ok(true) {
            return Certificate::Refuted { witness: p };
        }
    }
    Certificate::Unfalsified { samples: m, seed }
}

/// Re-checks an anchor with the parameters it records.
pub fn recertify<T: Real>(c: &Classifier<T>, anchor: &Anchor<T>) -> Certificate<T> {
    match anchor.certificate {
        AnchorCertificate::Exact => certify_anchor(c, anchor, 0, 0),
        AnchorCertificate::Sampled { samples, seed } => certify_anchor(c, anchor, samples, seed),
    }
}

/// The ball of radius `r1` obtained by shrinking `ball` toward `x`:
/// center `x + (r1/r)(c - x)`. It contains `x` and lies inside `ball`
/// whenever `ball` contains `x` and `r1 <= r`.
pub fn shrink_toward<T: Real>(
    ball: &Ball<T>,
    x: &Point<T>,
    r1: T,
) -> Result<Ball<T>, GeometryError> {
    let t = r1 / ball.radius;
    let center = x.lerp(&ball.center, t);
    Ball::new(center, r1)
}
