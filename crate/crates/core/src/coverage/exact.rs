//! Exact coverage for convex labels.
//!
//! With `sigma_i = (b_i - a_i·x)/‖a_i‖` and a candidate center written as
//! `c = x + r·u`, the ball `B(c, r)` lies in the polytope and contains `x`
//! exactly when `â_i·u <= sigma_i/r - 1` for every constraint and `‖u‖ < 1`.
//! A radius is therefore feasible iff the nearest point of that polyhedron
//! to the origin has norm below one. Feasibility is monotone in `r`, so the
//! supremum is found by bisection.

use super::{Anchor, AnchorCertificate, Coverage, CoverageError, CoverageResult, Method};
use crate::geometry::{
    check_dim, project_onto_polytope, Ball, GeometryError, HPolytope, Halfspace, Point,
};
use crate::scalar::Real;

const MAX_BISECTIONS: usize = 200;

/// Coverage of a convex region at `x`: `Zero` when `x` sits on a closed face,
/// `Bounded` with the supremum radius to within `tol`, or `ExceedsCap` with
/// anchors of radius `cap/4`, `cap/2` and `cap`.
pub fn coverage_exact_convex<T: Real>(
    x: &Point<T>,
    region: &HPolytope<T>,
    label: &str,
    cap: T,
    tol: T,
) -> Result<CoverageResult<T>, CoverageError> {
    check_dim(region.dim(), x.dim())?;
    if !(cap > T::zero() && cap.is_finite() && tol > T::zero() && tol.is_finite()) {
        return Err(CoverageError::InvalidParameter(
            "cap and tol must be positive and finite".into(),
        ));
    }
    if region.provably_empty() {
        return Err(CoverageError::EmptyRegion);
    }
    if !region.contains(x) {
        return Err(CoverageError::PointNotInRegion);
    }
    let solver = Solver::new(x, region, label);
    let exact = |coverage| CoverageResult {
        coverage,
        method: Method::Exact,
    };
    if !(solver.sigma_min > T::zero()) {
        return Ok(exact(Coverage::Zero));
    }

    if solver.feasible(cap)?.is_some() {
        let mut witnesses = Vec::with_capacity(3);
        for r in [cap / T::lit(4.0), cap / T::two(), cap] {
            witnesses.push(solver.witness(r)?);
        }
        if witnesses.last().is_some_and(|w| w.radius() >= cap) {
            return Ok(exact(Coverage::ExceedsCap { cap, witnesses }));
        }
    }

    let mut lo = solver.sigma_min.min(cap);
    let mut hi = cap;
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= tol {
            break;
        }
        let mid = (lo + hi) * T::half();
        if mid <= lo || mid >= hi {
            break;
        }
        if solver.feasible(mid)?.is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let witness = solver.witness(lo)?;
    Ok(exact(Coverage::Bounded {
        radius: (lo + hi) * T::half(),
        witness,
    }))
}

struct Solver<'a, T> {
    x: &'a Point<T>,
    region: &'a HPolytope<T>,
    label: &'a str,
    units: Vec<Vec<T>>,
    sigma: Vec<T>,
    sigma_min: T,
    proj_tol: T,
}

impl<'a, T: Real> Solver<'a, T> {
    fn new(x: &'a Point<T>, region: &'a HPolytope<T>, label: &'a str) -> Self {
        let mut units = Vec::new();
        let mut sigma = Vec::new();
        for h in &region.halfspaces {
            let n = h.normal_norm();
            units.push(h.normal.iter().map(|c| *c / n).collect());
            sigma.push(h.slack(x) / n);
        }
        let sigma_min = sigma.iter().copied().fold(T::infinity(), T::min);
        let proj_tol = (T::epsilon().sqrt() * T::lit(1e-2)).max(T::epsilon() * T::lit(100.0));
        Solver {
            x,
            region,
            label,
            units,
            sigma,
            sigma_min,
            proj_tol,
        }
    }

    /// The offset `u` of a feasible center at radius `r`, if any.
    fn feasible(&self, r: T) -> Result<Option<Vec<T>>, CoverageError> {
        if r <= self.sigma_min {
            return Ok(Some(vec![T::zero(); self.x.dim()]));
        }
        let hs = self
            .units
            .iter()
            .zip(&self.sigma)
            .map(|(a, s)| Halfspace::closed(a.clone(), *s / r - T::one()))
            .collect::<Result<Vec<_>, _>>()?;
        let q = HPolytope::new(hs)?;
        let origin = Point::origin(self.x.dim());
        match project_onto_polytope(&origin, &q, self.proj_tol) {
            Ok((u, d)) if d < T::one() => Ok(Some(u.into_inner())),
            Ok(_) | Err(GeometryError::EmptyPolytope) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn anchor(&self, ball: Ball<T>) -> Anchor<T> {
        Anchor {
            ball,
            anchored_point: self.x.clone(),
            label: self.label.to_string(),
            certificate: AnchorCertificate::Exact,
        }
    }

    /// Accepts `B(c, r)` when it passes the exact checks, clamping the radius
    /// to the face distance of `c` if rounding pushed it just outside.
    fn try_ball(&self, c: Point<T>, r: T) -> Option<Ball<T>> {
        let ball = Ball::new(c, r).ok()?;
        if self.region.contains_ball(&ball) && ball.contains(self.x) {
            return Some(ball);
        }
        let rho = self.region.min_face_distance(&ball.center).min(r);
        let ball = Ball::new(ball.center, rho).ok()?;
        (self.region.contains_ball(&ball) && ball.contains(self.x)).then_some(ball)
    }

    /// A verified anchor of radius as close to `r` as rounding allows, for a
    /// feasible `r`. Falls back to the ball centered at `x` touching the
    /// nearest face.
    fn witness(&self, r: T) -> Result<Anchor<T>, CoverageError> {
        for shrink in [0.0, 1e-12, 1e-9, 1e-6, 1e-3] {
            let rr = r * (T::one() - T::lit(shrink));
            if let Some(u) = self.feasible(rr)? {
                let c = self.x.offset(&u, rr);
                if let Some(ball) = self.try_ball(c, rr) {
                    return Ok(self.anchor(ball));
                }
            }
        }
        let ball = Ball::new(self.x.clone(), self.sigma_min)?;
        Ok(self.anchor(ball))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pt(c: &[f64]) -> Point<f64> {
        Point::from_f64(c).unwrap()
    }

    fn open_box(lo: &[f64], hi: &[f64]) -> HPolytope<f64> {
        HPolytope::axis_box(lo, hi).unwrap().with_all_closed(false)
    }

    fn radius(r: &CoverageResult<f64>) -> f64 {
        match &r.coverage {
            Coverage::Bounded { radius, .. } => *radius,
            other => panic!("expected bounded, got {other:?}"),
        }
    }

    #[test]
    fn unit_box_inscribed_ball() {
        let r = coverage_exact_convex(
            &pt(&[0.5, 0.5]),
            &open_box(&[0.0, 0.0], &[1.0, 1.0]),
            "B",
            1e6,
            1e-9,
        )
        .unwrap();
        assert_abs_diff_eq!(radius(&r), 0.5, epsilon = 1e-8);
        let Coverage::Bounded { witness, .. } = &r.coverage else {
            unreachable!()
        };
        assert_abs_diff_eq!(witness.ball.center.coords()[0], 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(witness.ball.radius, 0.5, epsilon = 1e-8);
    }

    #[test]
    fn off_center_point_reaches_the_inscribed_radius() {
        let p = open_box(&[-20.0, 1.0], &[-7.0, 20.0]);
        let r = coverage_exact_convex(&pt(&[-15.0, 10.0]), &p, "N", 4e7, 1e-6).unwrap();
        assert_abs_diff_eq!(radius(&r), 6.5, epsilon = 1e-5);
        let r = coverage_exact_convex(&pt(&[-19.0, 2.0]), &p, "N", 4e7, 1e-6).unwrap();
        // near the corner the best ball is tangent to both faces there:
        // sqrt(2)(r - 1) < r, so r = 2 + sqrt(2)
        assert_abs_diff_eq!(radius(&r), 2.0 + 2f64.sqrt(), epsilon = 1e-5);
    }

    #[test]
    fn open_halfspace_exceeds_cap_along_normal() {
        let h = HPolytope::new(vec![Halfspace::open(vec![-1.0, 0.0], 0.0).unwrap()]).unwrap();
        let r = coverage_exact_convex(&pt(&[1.0, 0.0]), &h, "M", 1e6, 1e-6).unwrap();
        let Coverage::ExceedsCap { cap, witnesses } = &r.coverage else {
            panic!("expected exceeds cap")
        };
        assert_eq!(*cap, 1e6);
        assert_eq!(witnesses.len(), 3);
        assert!(witnesses.windows(2).all(|w| w[0].radius() < w[1].radius()));
        assert!(witnesses[2].radius() >= 1e6);
        for w in witnesses {
            // centers lie on the ray from x along the inward normal
            assert_abs_diff_eq!(w.ball.center.coords()[1], 0.0, epsilon = 1e-6);
            assert!(w.ball.center.coords()[0] > 1.0);
        }
    }

    #[test]
    fn closed_face_gives_zero() {
        let h = HPolytope::new(vec![Halfspace::closed(vec![1.0, 0.0], 0.0).unwrap()]).unwrap();
        let r = coverage_exact_convex(&pt(&[0.0, 3.0]), &h, "N", 1e6, 1e-6).unwrap();
        assert_eq!(r.coverage, Coverage::Zero);
    }

    #[test]
    fn errors() {
        let b = open_box(&[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!(
            coverage_exact_convex(&pt(&[2.0, 0.5]), &b, "B", 1e6, 1e-6),
            Err(CoverageError::PointNotInRegion)
        );
        let empty = open_box(&[0.0, 0.0], &[1.0, 1.0]);
        let mut hs = empty.halfspaces.clone();
        hs.push(Halfspace::open(vec![1.0, 0.0], -1.0).unwrap());
        hs.push(Halfspace::open(vec![-1.0, 0.0], -1.0).unwrap());
        assert_eq!(
            coverage_exact_convex(
                &pt(&[0.5, 0.5]),
                &HPolytope::new(hs).unwrap(),
                "B",
                1e6,
                1e-6
            ),
            Err(CoverageError::EmptyRegion)
        );
    }

    #[test]
    fn thin_wedge_converges() {
        // acute wedge opening to the right, bounded by x1 <= 10
        let p = HPolytope::new(vec![
            Halfspace::open(vec![-0.1, 1.0], 0.0).unwrap(),
            Halfspace::open(vec![-0.1, -1.0], 0.0).unwrap(),
            Halfspace::open(vec![1.0, 0.0], 10.0).unwrap(),
        ])
        .unwrap();
        let r = coverage_exact_convex(&pt(&[9.0, 0.0]), &p, "W", 1e6, 1e-9).unwrap();
        // inradius of the triangle with vertices (0,0), (10,1), (10,-1)
        let (a, b, c) = (2.0, 101f64.sqrt(), 101f64.sqrt());
        let s = (a + b + c) / 2.0;
        let inradius = (s * (s - a) * (s - b) * (s - c)).sqrt() / s;
        assert_abs_diff_eq!(radius(&r), inradius, epsilon = 1e-6);
    }
}
