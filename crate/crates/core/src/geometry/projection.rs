//! Euclidean projection onto a closed H-polytope.
//!
//! Dykstra's cyclic projection scheme over the individual halfspaces. Each
//! halfspace correction is a nonnegative multiple of its unit normal, and
//! those multiples converge to the KKT multipliers, so every few cycles the
//! positive ones are used to guess the active set and solve the equality
//! constrained projection directly. A guess that satisfies the KKT
//! conditions ends the iteration with an answer accurate to rounding.
//!
//! Nearly parallel faces can slow the cycles to a crawl. When the residual
//! stalls, a dual active-set solve (constraints added one at a time, with
//! partial steps that drop constraints whose multipliers reach zero) settles
//! the question. Only that solve may declare the system inconsistent.

use super::{check_dim, dot, norm, GeometryError, GeometryResult, HPolytope, Point};
use crate::linalg;
use crate::scalar::Real;

/// Iteration cap, counted in full cycles over all constraints.
pub const MAX_CYCLES: usize = 100_000;

/// Cycles without a 1% improvement of the residual before the constraint
/// system is declared inconsistent.
const STALL_CYCLES: usize = 1_000;

/// Nearest point of `closure(poly)` to `x` and its distance.
///
/// Fails with [`GeometryError::EmptyPolytope`] when two anti-parallel
/// constraints leave no room, or when the residual stalls above `tol`.
pub fn project_onto_polytope<T: Real>(
    x: &Point<T>,
    poly: &HPolytope<T>,
    tol: T,
) -> GeometryResult<(Point<T>, T)> {
    check_dim(poly.dim(), x.dim())?;
    if !(tol > T::zero()) {
        return Err(GeometryError::InvalidInput(format!(
            "projection tolerance must be positive, got {tol}"
        )));
    }
    if poly.with_all_closed(true).provably_empty() {
        return Err(GeometryError::EmptyPolytope);
    }
    let system = UnitSystem::new(poly);
    if system.max_violation(x.coords()) <= T::zero() {
        return Ok((x.clone(), T::zero()));
    }
    let p = system.project(x.coords(), tol)?;
    let d = norm(&x.sub(&p));
    Ok((p, d))
}

struct UnitSystem<T> {
    normals: Vec<Vec<T>>,
    offsets: Vec<T>,
}

impl<T: Real> UnitSystem<T> {
    fn new(poly: &HPolytope<T>) -> Self {
        let mut normals = Vec::with_capacity(poly.halfspaces.len());
        let mut offsets = Vec::with_capacity(poly.halfspaces.len());
        for h in &poly.halfspaces {
            let n = h.normal_norm();
            normals.push(h.normal.iter().map(|c| *c / n).collect());
            offsets.push(h.offset / n);
        }
        UnitSystem { normals, offsets }
    }

    fn len(&self) -> usize {
        self.offsets.len()
    }

    fn violation(&self, i: usize, y: &[T]) -> T {
        dot(&self.normals[i], y) - self.offsets[i]
    }

    fn max_violation(&self, y: &[T]) -> T {
        (0..self.len())
            .map(|i| self.violation(i, y))
            .fold(T::neg_infinity(), T::max)
    }

    fn project(&self, x0: &[T], tol: T) -> GeometryResult<Point<T>> {
        let m = self.len();
        let scale = x0
            .iter()
            .chain(self.offsets.iter())
            .fold(T::one(), |acc, v| acc.max(v.abs()));
        let mut x = x0.to_vec();
        let mut multipliers = vec![T::zero(); m];
        let mut best_residual = T::infinity();
        let mut last_improvement = 0usize;
        for cycle in 0..MAX_CYCLES {
            let before = x.clone();
            #[allow(clippy::needless_range_loop)]
            for i in 0..m {
                let lambda = multipliers[i];
                // y = x + lambda * n_i; then project y onto halfspace i.
                let ny = dot(&self.normals[i], &x) + lambda - self.offsets[i];
                let step = ny.max(T::zero());
                let shift = lambda - step;
                if shift != T::zero() {
                    for (xk, nk) in x.iter_mut().zip(&self.normals[i]) {
                        *xk = *xk + shift * *nk;
                    }
                }
                multipliers[i] = step;
            }

            let polish_now = cycle < 20 || cycle % 10 == 0;
            if polish_now {
                if let Some(p) = self.polish(x0, &x, &multipliers, scale) {
                    return Ok(Point::from_vec(p));
                }
            }

            let residual = self.max_violation(&x).max(T::zero());
            let moved = norm(
                &x.iter()
                    .zip(&before)
                    .map(|(a, b)| *a - *b)
                    .collect::<Vec<_>>(),
            );
            if residual <= tol && moved <= tol * T::lit(1e-2) {
                return Ok(Point::from_vec(x));
            }
            if residual < best_residual * T::lit(0.99) {
                best_residual = residual;
                last_improvement = cycle;
            } else if cycle - last_improvement > STALL_CYCLES && best_residual > tol {
                return self.dual_active_set(x0, scale);
            }
        }
        if self.max_violation(&x) > tol {
            self.dual_active_set(x0, scale)
        } else {
            Ok(Point::from_vec(x))
        }
    }

    /// Dual active-set projection for the identity-Hessian problem
    /// `min |p - x0|^2 / 2` subject to `n_i·p <= b_i`.
    ///
    /// Starts from `p = x0` with nothing active. Each violated constraint is
    /// added by moving `p` along the part of its normal orthogonal to the
    /// active normals; if some active multiplier would turn negative first,
    /// that constraint is dropped and the step resumes. A violated
    /// constraint whose normal lies in the span of active normals with no
    /// multiplier that can absorb it proves the system infeasible.
    fn dual_active_set(&self, x0: &[T], scale: T) -> GeometryResult<Point<T>> {
        let m = self.len();
        let feas_tol = T::lit(1e-12).max(T::epsilon() * T::lit(64.0)) * scale;
        let dep_tol = T::lit(1e-9).max(T::epsilon().sqrt() * T::lit(4.0));
        let mut p = x0.to_vec();
        let mut active: Vec<usize> = Vec::new();
        let mut u: Vec<T> = Vec::new();
        let mut additions = 0usize;
        loop {
            let Some((q, _)) = (0..m)
                .filter(|i| !active.contains(i))
                .map(|i| (i, self.violation(i, &p)))
                .filter(|(_, v)| *v > feas_tol)
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(b.0.cmp(&a.0)))
            else {
                return Ok(Point::from_vec(p));
            };
            additions += 1;
            if additions > 50 * (m + 1) {
                return Err(GeometryError::EmptyPolytope);
            }
            let mut uq = T::zero();
            loop {
                let (z, r) = self.split_normal(q, &active)?;
                let zz = dot(&z, &z);
                let full = (zz > dep_tol * dep_tol).then(|| self.violation(q, &p) / zz);
                let partial = r
                    .iter()
                    .enumerate()
                    .filter(|(_, rj)| **rj > T::zero())
                    .map(|(j, rj)| (j, u[j] / *rj))
                    .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
                let (t, drop) = match (full, partial) {
                    (None, None) => return Err(GeometryError::EmptyPolytope),
                    (Some(t2), Some((j, t1))) if t1 < t2 => (t1, Some(j)),
                    (Some(t2), _) => (t2.max(T::zero()), None),
                    (None, Some((j, t1))) => (t1, Some(j)),
                };
                if full.is_some() {
                    p.iter_mut()
                        .zip(&z)
                        .for_each(|(pk, zk)| *pk = *pk - t * *zk);
                }
                u.iter_mut()
                    .zip(&r)
                    .for_each(|(uj, rj)| *uj = (*uj - t * *rj).max(T::zero()));
                uq = uq + t;
                match drop {
                    Some(j) => {
                        active.remove(j);
                        u.remove(j);
                    }
                    None => {
                        active.push(q);
                        u.push(uq);
                        break;
                    }
                }
            }
        }
    }

    /// Splits normal `q` into `z`, its component orthogonal to the active
    /// normals, and the coefficients `r` of the rest: `n_q = z + N_A r`.
    fn split_normal(&self, q: usize, active: &[usize]) -> GeometryResult<(Vec<T>, Vec<T>)> {
        if active.is_empty() {
            return Ok((self.normals[q].clone(), Vec::new()));
        }
        let gram: Vec<Vec<T>> = active
            .iter()
            .map(|&i| {
                active
                    .iter()
                    .map(|&j| dot(&self.normals[i], &self.normals[j]))
                    .collect()
            })
            .collect();
        let rhs: Vec<T> = active
            .iter()
            .map(|&i| dot(&self.normals[i], &self.normals[q]))
            .collect();
        let r = linalg::solve(gram, rhs, T::epsilon() * T::lit(16.0)).ok_or_else(|| {
            GeometryError::InvalidInput("active constraint normals became dependent".into())
        })?;
        let mut z = self.normals[q].clone();
        for (k, &i) in active.iter().enumerate() {
            z.iter_mut()
                .zip(&self.normals[i])
                .for_each(|(zj, nj)| *zj = *zj - r[k] * *nj);
        }
        Ok((z, r))
    }

    /// Tries to finish the projection exactly from an active-set guess.
    /// Bounded primal-dual active-set loop: drop constraints with negative
    /// multipliers, add the most violated one, re-solve.
    fn polish(&self, x0: &[T], x: &[T], multipliers: &[T], scale: T) -> Option<Vec<T>> {
        let m = self.len();
        let feas_tol = T::lit(1e-12) * scale;
        let mut order: Vec<usize> = (0..m)
            .filter(|&i| multipliers[i] > T::zero() || self.violation(i, x) > -feas_tol)
            .collect();
        order.sort_by(|&a, &b| {
            multipliers[b]
                .partial_cmp(&multipliers[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        let mut active = self.independent_subset(&order);
        for _ in 0..(2 * m + 2) {
            let (p, mu) = self.solve_active(x0, &active)?;
            if let Some((k, _)) = mu
                .iter()
                .enumerate()
                .filter(|(_, v)| **v < -feas_tol)
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            {
                active.remove(k);
                continue;
            }
            let worst = (0..m)
                .filter(|i| !active.contains(i))
                .map(|i| (i, self.violation(i, &p)))
                .filter(|(_, v)| *v > feas_tol)
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            match worst {
                None => return Some(p),
                Some((i, _)) => {
                    let mut candidate = active.clone();
                    candidate.push(i);
                    let independent = self.independent_subset(&candidate);
                    if independent.len() < candidate.len() {
                        return None;
                    }
                    active = independent;
                }
            }
        }
        None
    }

    /// Greedy Gram-Schmidt selection of linearly independent normals.
    fn independent_subset(&self, order: &[usize]) -> Vec<usize> {
        let mut basis: Vec<Vec<T>> = Vec::new();
        let mut chosen = Vec::new();
        let dim = self.normals.first().map_or(0, |n| n.len());
        for &i in order {
            if chosen.len() == dim {
                break;
            }
            let mut v = self.normals[i].clone();
            for b in &basis {
                let c = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(vk, bk)| *vk = *vk - c * *bk);
            }
            let n = norm(&v);
            if n > T::lit(1e-9) {
                v.iter_mut().for_each(|vk| *vk = *vk / n);
                basis.push(v);
                chosen.push(i);
            }
        }
        chosen
    }

    /// Projection onto `{p : n_i·p = b_i, i ∈ active}` and its multipliers.
    fn solve_active(&self, x0: &[T], active: &[usize]) -> Option<(Vec<T>, Vec<T>)> {
        if active.is_empty() {
            return Some((x0.to_vec(), Vec::new()));
        }
        let gram: Vec<Vec<T>> = active
            .iter()
            .map(|&i| {
                active
                    .iter()
                    .map(|&j| dot(&self.normals[i], &self.normals[j]))
                    .collect()
            })
            .collect();
        let rhs: Vec<T> = active.iter().map(|&i| self.violation(i, x0)).collect();
        let mu = linalg::solve(gram, rhs, T::lit(1e-12))?;
        let mut p = x0.to_vec();
        for (k, &i) in active.iter().enumerate() {
            for (pj, nj) in p.iter_mut().zip(&self.normals[i]) {
                *pj = *pj - mu[k] * *nj;
            }
        }
        Some((p, mu))
    }
}
