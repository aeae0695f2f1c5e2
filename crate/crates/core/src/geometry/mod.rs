//! Points, balls, halfspaces, hyperplanes and H-polytopes.
//!
//! Everything here is plain data plus pure functions. Halfspaces carry an
//! explicit strictness flag: `a·x < b` when open, `a·x <= b` when closed.
//! Balls are always open.

mod projection;
pub mod sampling;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

pub use projection::{project_onto_polytope, MAX_CYCLES};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("polytope is empty")]
    EmptyPolytope,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type GeometryResult<T> = Result<T, GeometryError>;

pub(crate) fn check_dim(expected: usize, found: usize) -> GeometryResult<()> {
    if expected == found {
        Ok(())
    } else {
        Err(GeometryError::DimensionMismatch { expected, found })
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

#[inline]
pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// A point of R^n. Serialized as a bare array of coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point<T>(Vec<T>);

impl<T: Real> Point<T> {
    pub fn new(coords: Vec<T>) -> GeometryResult<Self> {
        if coords.is_empty() {
            return Err(GeometryError::InvalidInput(
                "point has no coordinates".into(),
            ));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::InvalidInput(
                "point has a non-finite coordinate".into(),
            ));
        }
        Ok(Point(coords))
    }

    /// Builds a point without validation. Callers guarantee finiteness.
    pub(crate) fn from_vec(coords: Vec<T>) -> Self {
        Point(coords)
    }

    pub fn from_f64(coords: &[f64]) -> GeometryResult<Self> {
        Self::new(coords.iter().map(|c| T::lit(*c)).collect())
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![T::zero(); dim])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn coords(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.as_f64()).collect()
    }

    pub fn distance(&self, other: &Point<T>) -> T {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (*a - *b) * (*a - *b))
            .sum::<T>()
            .sqrt()
    }

    /// `self + t * dir`
    pub fn offset(&self, dir: &[T], t: T) -> Point<T> {
        Point(self.0.iter().zip(dir).map(|(a, d)| *a + t * *d).collect())
    }

    /// `self + t * (other - self)`
    pub fn lerp(&self, other: &Point<T>, t: T) -> Point<T> {
        Point(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| *a + t * (*b - *a))
                .collect(),
        )
    }

    pub fn sub(&self, other: &Point<T>) -> Vec<T> {
        self.0.iter().zip(&other.0).map(|(a, b)| *a - *b).collect()
    }
}

/// An open ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball<T> {
    pub center: Point<T>,
    pub radius: T,
}

impl<T: Real> Ball<T> {
    pub fn new(center: Point<T>, radius: T) -> GeometryResult<Self> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(GeometryError::InvalidInput(format!(
                "ball radius must be positive and finite, got {radius}"
            )));
        }
        Ok(Ball { center, radius })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// Strict membership; the sphere itself is excluded.
    pub fn contains(&self, p: &Point<T>) -> bool {
        self.center.distance(p) < self.radius
    }
}

/// `{x : a·x < b}` when open, `{x : a·x <= b}` when closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace<T> {
    pub normal: Vec<T>,
    pub offset: T,
    pub closed: bool,
}

impl<T: Real> Halfspace<T> {
    pub fn new(normal: Vec<T>, offset: T, closed: bool) -> GeometryResult<Self> {
        if normal.is_empty() {
            return Err(GeometryError::InvalidInput(
                "halfspace normal is empty".into(),
            ));
        }
        if normal.iter().any(|c| !c.is_finite()) || !offset.is_finite() {
            return Err(GeometryError::InvalidInput(
                "halfspace has non-finite data".into(),
            ));
        }
        if !(norm(&normal) > T::zero()) {
            return Err(GeometryError::InvalidInput(
                "halfspace normal is zero".into(),
            ));
        }
        Ok(Halfspace {
            normal,
            offset,
            closed,
        })
    }

    pub fn open(normal: Vec<T>, offset: T) -> GeometryResult<Self> {
        Self::new(normal, offset, false)
    }

    pub fn closed(normal: Vec<T>, offset: T) -> GeometryResult<Self> {
        Self::new(normal, offset, true)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    #[inline]
    pub fn normal_norm(&self) -> T {
        norm(&self.normal)
    }

    /// `b - a·p`; nonnegative on the closure.
    #[inline]
    pub fn slack(&self, p: &Point<T>) -> T {
        self.offset - dot(&self.normal, p.coords())
    }

    pub fn contains(&self, p: &Point<T>) -> bool {
        let s = self.slack(p);
        if self.closed {
            s >= T::zero()
        } else {
            s > T::zero()
        }
    }

    pub fn closure_contains(&self, p: &Point<T>) -> bool {
        self.slack(p) >= T::zero()
    }

    pub fn with_closed(&self, closed: bool) -> Self {
        Halfspace {
            closed,
            ..self.clone()
        }
    }

    /// The halfspace with constraint `a·x <= b - r‖a‖`.
    pub fn shrink(&self, r: T) -> Self {
        Halfspace {
            normal: self.normal.clone(),
            offset: self.offset - r * self.normal_norm(),
            closed: self.closed,
        }
    }

    pub fn boundary(&self) -> Hyperplane<T> {
        Hyperplane {
            normal: self.normal.clone(),
            offset: self.offset,
        }
    }

    /// Exact containment of an open ball, with a rounding allowance of a few
    /// ulps of the magnitudes involved. Open and closed constraints agree here:
    /// tangency contributes no interior point of the ball.
    pub fn contains_ball(&self, ball: &Ball<T>) -> bool {
        let ac = dot(&self.normal, ball.center.coords());
        let reach = ball.radius * self.normal_norm();
        let slack = rounding_slack(&[ac, reach, self.offset]);
        ac + reach <= self.offset + slack
    }

    /// A point of `ball` strictly outside this halfspace's closure, when the
    /// ball is not contained.
    pub fn ball_violation_witness(&self, ball: &Ball<T>) -> Option<Point<T>> {
        if self.contains_ball(ball) {
            return None;
        }
        let an = self.normal_norm();
        let unit: Vec<T> = self.normal.iter().map(|c| *c / an).collect();
        let dist = (self.offset - dot(&self.normal, ball.center.coords())) / an;
        let t = (dist.max(T::zero()) + ball.radius) * T::half();
        Some(ball.center.offset(&unit, t))
    }
}

pub(crate) fn rounding_slack<T: Real>(terms: &[T]) -> T {
    let mag = terms.iter().fold(T::zero(), |acc, t| acc + t.abs());
    T::lit(32.0) * T::epsilon() * mag
}

/// `{x : a·x = b}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane<T> {
    pub normal: Vec<T>,
    pub offset: T,
}

impl<T: Real> Hyperplane<T> {
    pub fn new(normal: Vec<T>, offset: T) -> GeometryResult<Self> {
        let h = Halfspace::new(normal, offset, true)?;
        Ok(h.boundary())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn signed_distance(&self, p: &Point<T>) -> T {
        (dot(&self.normal, p.coords()) - self.offset) / norm(&self.normal)
    }

    /// Rescaled so that the normal has unit length and its first nonzero
    /// coordinate is positive.
    pub fn canonical(&self) -> Hyperplane<T> {
        let n = norm(&self.normal);
        let lead = self
            .normal
            .iter()
            .copied()
            .find(|c| c.abs() > T::epsilon() * n)
            .unwrap_or(T::one());
        let s = if lead < T::zero() { -n } else { n };
        Hyperplane {
            normal: self.normal.iter().map(|c| *c / s).collect(),
            offset: self.offset / s,
        }
    }

    /// Angle in `[0, π/2]` between the two hyperplanes' normal lines.
    pub fn angle_to(&self, other: &Hyperplane<T>) -> T {
        let c = dot(&self.normal, &other.normal) / (norm(&self.normal) * norm(&other.normal));
        c.abs().min(T::one()).acos()
    }

    /// Difference of offsets after orienting `other` like `self`, both with
    /// unit normals.
    pub fn offset_gap(&self, other: &Hyperplane<T>) -> T {
        let a = self.canonical();
        let b = other.canonical();
        (a.offset - b.offset).abs()
    }
}

/// Intersection of finitely many halfspaces. May be empty or unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HPolytope<T> {
    pub halfspaces: Vec<Halfspace<T>>,
}

impl<T: Real> HPolytope<T> {
    pub fn new(halfspaces: Vec<Halfspace<T>>) -> GeometryResult<Self> {
        let Some(first) = halfspaces.first() else {
            return Err(GeometryError::InvalidInput(
                "polytope has no halfspaces".into(),
            ));
        };
        let dim = first.dim();
        for h in &halfspaces {
            check_dim(dim, h.dim())?;
        }
        Ok(HPolytope { halfspaces })
    }

    /// Closed axis-aligned box `[lo, hi]`.
    pub fn axis_box(lo: &[T], hi: &[T]) -> GeometryResult<Self> {
        check_dim(lo.len(), hi.len())?;
        let n = lo.len();
        let mut hs = Vec::with_capacity(2 * n);
        for i in 0..n {
            let mut e = vec![T::zero(); n];
            e[i] = T::one();
            hs.push(Halfspace::closed(e.clone(), hi[i])?);
            e[i] = -T::one();
            hs.push(Halfspace::closed(e, -lo[i])?);
        }
        Self::new(hs)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.halfspaces[0].dim()
    }

    pub fn contains(&self, p: &Point<T>) -> bool {
        self.halfspaces.iter().all(|h| h.contains(p))
    }

    pub fn closure_contains(&self, p: &Point<T>) -> bool {
        self.halfspaces.iter().all(|h| h.closure_contains(p))
    }

    /// Smallest slack `b - a·p` measured in distance units.
    pub fn min_face_distance(&self, p: &Point<T>) -> T {
        self.halfspaces
            .iter()
            .map(|h| h.slack(p) / h.normal_norm())
            .fold(T::infinity(), T::min)
    }

    pub fn with_all_closed(&self, closed: bool) -> Self {
        HPolytope {
            halfspaces: self
                .halfspaces
                .iter()
                .map(|h| h.with_closed(closed))
                .collect(),
        }
    }

    pub fn contains_ball(&self, ball: &Ball<T>) -> bool {
        self.halfspaces.iter().all(|h| h.contains_ball(ball))
    }

    pub fn ball_violation_witness(&self, ball: &Ball<T>) -> Option<Point<T>> {
        self.halfspaces
            .iter()
            .find_map(|h| h.ball_violation_witness(ball))
    }

    /// Pairs `(i, j, gap)` of constraints with anti-parallel normals, where
    /// `gap` is the width of the slab they cut out in distance units.
    /// A negative gap proves emptiness; a zero gap pins the polytope to a
    /// hyperplane.
    pub fn antiparallel_pairs(&self, angle_tol: T) -> Vec<(usize, usize, T)> {
        let mut out = Vec::new();
        let hs = &self.halfspaces;
        for i in 0..hs.len() {
            for j in i + 1..hs.len() {
                let ni = hs[i].normal_norm();
                let nj = hs[j].normal_norm();
                let cos = dot(&hs[i].normal, &hs[j].normal) / (ni * nj);
                if cos <= -(T::one() - angle_tol) {
                    let gap = hs[i].offset / ni + hs[j].offset / nj;
                    out.push((i, j, gap));
                }
            }
        }
        out
    }

    /// Cheap emptiness proof: two anti-parallel constraints whose slab has
    /// negative width, or zero width with an open side.
    pub fn provably_empty(&self) -> bool {
        let tol = T::lit(1e-12);
        self.antiparallel_pairs(tol).into_iter().any(|(i, j, gap)| {
            let scale = (self.halfspaces[i].offset / self.halfspaces[i].normal_norm())
                .abs()
                .max(T::one());
            let eps = T::lit(1e-12) * scale;
            gap < -eps
                || (gap.abs() <= eps && !(self.halfspaces[i].closed && self.halfspaces[j].closed))
        })
    }
}

/// Inner parallel body: each `a·x <= b` becomes `a·x <= b - r‖a‖`, so that
/// `B(c, r) ⊆ P` exactly when `c` lies in the result.
pub fn shrink_polytope<T: Real>(poly: &HPolytope<T>, r: T) -> HPolytope<T> {
    HPolytope {
        halfspaces: poly.halfspaces.iter().map(|h| h.shrink(r)).collect(),
    }
}

/// Outcome of a containment check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Certificate<T> {
    Proven,
    Unfalsified { samples: usize, seed: u64 },
    Refuted { witness: Point<T> },
}

impl<T> Certificate<T> {
    pub fn is_refuted(&self) -> bool {
        matches!(self, Certificate::Refuted { .. })
    }

    pub fn holds(&self) -> bool {
        !self.is_refuted()
    }
}
