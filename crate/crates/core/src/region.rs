//! Label regions: the members of a classifier's partition.

use thiserror::Error;

use crate::dsl::{BinOp, CmpOp, EvalError, Expr, Predicate};
use crate::geometry::sampling::ball_probes;
use crate::geometry::{check_dim, Ball, Certificate, GeometryError, HPolytope, Halfspace, Point};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegionError {
    #[error("exact containment is only available for halfspace and polytope regions")]
    ExactUnsupported,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// How `ball_in_region` decides containment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContainmentMethod {
    Exact,
    Sampled { samples: usize, seed: u64 },
}

/// A subset of R^n.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelRegion<T> {
    Halfspace(Halfspace<T>),
    Polytope(HPolytope<T>),
    Union(Vec<HPolytope<T>>),
    Analytic(Predicate),
}

impl<T: Real> LabelRegion<T> {
    pub fn union(pieces: Vec<HPolytope<T>>) -> Result<Self, GeometryError> {
        let Some(first) = pieces.first() else {
            return Err(GeometryError::InvalidInput("union has no pieces".into()));
        };
        let dim = first.dim();
        for p in &pieces {
            check_dim(dim, p.dim())?;
        }
        Ok(LabelRegion::Union(pieces))
    }

    pub fn dim(&self) -> usize {
        match self {
            LabelRegion::Halfspace(h) => h.dim(),
            LabelRegion::Polytope(p) => p.dim(),
            LabelRegion::Union(ps) => ps[0].dim(),
            LabelRegion::Analytic(p) => p.dimension(),
        }
    }

    pub fn contains(&self, x: &Point<T>) -> Result<bool, RegionError> {
        check_dim(self.dim(), x.dim())?;
        Ok(match self {
            LabelRegion::Halfspace(h) => h.contains(x),
            LabelRegion::Polytope(p) => p.contains(x),
            LabelRegion::Union(ps) => ps.iter().any(|p| p.contains(x)),
            LabelRegion::Analytic(p) => p.evaluate(x)?,
        })
    }

    pub fn is_convex(&self) -> bool {
        matches!(self, LabelRegion::Halfspace(_) | LabelRegion::Polytope(_))
    }

    /// The region as a single polytope, for the convex variants.
    pub fn as_polytope(&self) -> Option<HPolytope<T>> {
        match self {
            LabelRegion::Halfspace(h) => Some(HPolytope {
                halfspaces: vec![h.clone()],
            }),
            LabelRegion::Polytope(p) => Some(p.clone()),
            _ => None,
        }
    }

    /// Polytope pieces for the polyhedral variants.
    pub fn pieces(&self) -> Option<Vec<HPolytope<T>>> {
        match self {
            LabelRegion::Union(ps) => Some(ps.clone()),
            _ => self.as_polytope().map(|p| vec![p]),
        }
    }

    /// Exact containment when decidable without sampling: convex regions
    /// always, unions when a single piece holds the whole ball.
    pub fn exact_ball_check(&self, ball: &Ball<T>) -> Option<Certificate<T>> {
        match self {
            LabelRegion::Halfspace(_) | LabelRegion::Polytope(_) => {
                let p = self.as_polytope()?;
                Some(match p.ball_violation_witness(ball) {
                    None => Certificate::Proven,
                    Some(witness) => Certificate::Refuted { witness },
                })
            }
            LabelRegion::Union(ps) => ps
                .iter()
                .any(|p| p.contains_ball(ball))
                .then_some(Certificate::Proven),
            LabelRegion::Analytic(_) => None,
        }
    }

    pub fn ball_in_region(
        &self,
        ball: &Ball<T>,
        method: ContainmentMethod,
    ) -> Result<Certificate<T>, RegionError> {
        check_dim(self.dim(), ball.dim())?;
        match method {
            ContainmentMethod::Exact => {
                if !self.is_convex() {
                    return Err(RegionError::ExactUnsupported);
                }
                Ok(self.exact_ball_check(ball).expect("convex region"))
            }
            ContainmentMethod::Sampled { samples, seed } => {
                self.sampled_ball_check(ball, samples, seed)
            }
        }
    }

    /// Falsification by `samples` probes of the ball; the first probe outside
    /// the region is returned as the witness.
    pub fn sampled_ball_check(
        &self,
        ball: &Ball<T>,
        samples: usize,
        seed: u64,
    ) -> Result<Certificate<T>, RegionError> {
        for p in ball_probes(ball, samples, seed) {
            if !self.contains(&p)? {
                return Ok(Certificate::Refuted { witness: p });
            }
        }
        Ok(Certificate::Unfalsified { samples, seed })
    }

    /// The same set written as a DSL predicate.
    pub fn to_expr(&self) -> Expr {
        match self {
            LabelRegion::Halfspace(h) => halfspace_expr(h),
            LabelRegion::Polytope(p) => polytope_expr(p),
            LabelRegion::Union(ps) => ps
                .iter()
                .map(polytope_expr)
                .reduce(Expr::or)
                .expect("nonempty union"),
            LabelRegion::Analytic(p) => p.expr().clone(),
        }
    }

    pub fn to_predicate(&self) -> Predicate {
        Predicate::new(self.to_expr(), self.dim()).expect("converted region is a valid predicate")
    }
}

fn polytope_expr<T: Real>(p: &HPolytope<T>) -> Expr {
    p.halfspaces
        .iter()
        .map(halfspace_expr)
        .reduce(Expr::and)
        .expect("nonempty polytope")
}

/// `a·x < b` (or `<=`) with zero coefficients dropped.
fn halfspace_expr<T: Real>(h: &Halfspace<T>) -> Expr {
    let mut lhs: Option<Expr> = None;
    for (i, a) in h.normal.iter().enumerate() {
        let a = a.as_f64();
        if a == 0.0 {
            continue;
        }
        let var = Expr::Var(i + 1);
        let term_abs = if a.abs() == 1.0 {
            var
        } else {
            Expr::Binary(BinOp::Mul, Box::new(Expr::Num(a.abs())), Box::new(var))
        };
        lhs = Some(match lhs {
            None if a < 0.0 => Expr::Neg(Box::new(term_abs)),
            None => term_abs,
            Some(acc) => {
                let op = if a < 0.0 { BinOp::Sub } else { BinOp::Add };
                Expr::Binary(op, Box::new(acc), Box::new(term_abs))
            }
        });
    }
    let lhs = lhs.unwrap_or(Expr::Num(0.0));
    let op = if h.closed { CmpOp::Le } else { CmpOp::Lt };
    Expr::compare(op, lhs, Expr::number(h.offset.as_f64()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[f64]) -> Point<f64> {
        Point::from_f64(c).unwrap()
    }

    fn unit_box() -> LabelRegion<f64> {
        LabelRegion::Polytope(HPolytope::axis_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap())
    }

    #[test]
    fn inscribed_ball_of_unit_box() {
        let b = Ball::new(pt(&[0.5, 0.5]), 0.5).unwrap();
        assert_eq!(
            unit_box().ball_in_region(&b, ContainmentMethod::Exact),
            Ok(Certificate::Proven)
        );
        let b = Ball::new(pt(&[0.5, 0.5]), 0.6).unwrap();
        let c = unit_box()
            .ball_in_region(&b, ContainmentMethod::Exact)
            .unwrap();
        let Certificate::Refuted { witness } = c else {
            panic!("expected refutation")
        };
        assert!(b.contains(&witness));
        assert!(!unit_box().contains(&witness).unwrap());
    }

    #[test]
    fn exact_refused_for_analytic_and_union() {
        let r: LabelRegion<f64> = LabelRegion::Analytic(Predicate::parse("x1 > 0", 1).unwrap());
        let b = Ball::new(pt(&[1.0]), 0.5).unwrap();
        assert_eq!(
            r.ball_in_region(&b, ContainmentMethod::Exact),
            Err(RegionError::ExactUnsupported)
        );
        let u = LabelRegion::union(vec![HPolytope::axis_box(&[0.0], &[2.0]).unwrap()]).unwrap();
        assert_eq!(
            u.ball_in_region(&b, ContainmentMethod::Exact),
            Err(RegionError::ExactUnsupported)
        );
    }

    #[test]
    fn ball_above_sine_is_unfalsified() {
        // The plotted curve takes degrees of a radian argument, so in
        // radians it is simply 10*sin(0.1*x1).
        let r: LabelRegion<f64> =
            LabelRegion::Analytic(Predicate::parse("x2 > 10*sin(0.1*x1)", 2).unwrap());
        let b = Ball::new(pt(&[0.0, 2.0]), 1.0).unwrap();
        let c = r
            .ball_in_region(
                &b,
                ContainmentMethod::Sampled {
                    samples: 10_000,
                    seed: 0,
                },
            )
            .unwrap();
        assert_eq!(
            c,
            Certificate::Unfalsified {
                samples: 10_000,
                seed: 0
            }
        );
    }

    #[test]
    fn expression_form_agrees_with_geometry() {
        let h = Halfspace::new(vec![0.5, -1.0], 1.0, false).unwrap();
        let p = HPolytope::new(vec![
            h.clone(),
            Halfspace::closed(vec![1.0, 0.0], 3.0).unwrap(),
        ])
        .unwrap();
        let regions = [
            LabelRegion::Halfspace(h),
            LabelRegion::Polytope(p.clone()),
            LabelRegion::Union(vec![
                p,
                HPolytope::axis_box(&[5.0, 5.0], &[6.0, 6.0]).unwrap(),
            ]),
        ];
        for r in &regions {
            let a = LabelRegion::<f64>::Analytic(r.to_predicate());
            for i in 0..400 {
                let x = pt(&[(i % 20) as f64 * 0.5 - 2.0, (i / 20) as f64 * 0.5 - 3.0]);
                assert_eq!(r.contains(&x), a.contains(&x), "{x:?}");
            }
        }
    }
}
