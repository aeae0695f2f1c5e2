//! Multi-start anchor search for labels whose containment is checked by
//! sampling.
//!
//! Candidate balls come in nested families indexed by radius: for a unit
//! direction `d` and margin `rho`, the ball of radius `r` is centered at
//! `x + max(0, r - rho)·d`. Growing `r` by `dr` moves the center by at most
//! `dr`, so each ball contains the smaller ones and containment in the label
//! is monotone along a family. That makes doubling and bisection valid within
//! a family. Every ball keeps `x` at depth `min(r, rho)` from its boundary.
//! With `rho` fixed and `r` growing, the balls approach the halfspace through
//! the point `x + rho·d` facing `d`, which is how unbounded labels are reached.

use super::{
    Anchor, AnchorCertificate, Coverage, CoverageError, CoverageParams, CoverageResult, Method,
};
use crate::geometry::sampling::{ball_probes, derive_seed, seeded, unit_vector};
use crate::geometry::{norm, Ball, Certificate, Point};
use crate::region::LabelRegion;
use crate::scalar::Real;

/// Relative improvement a candidate family must show to replace the best.
pub(super) const STEP_GAIN: f64 = 1e-3;
/// Probes per check while searching; the winner is re-checked with the full
/// budget.
const SCREEN_SAMPLES: usize = 512;
/// Relative width at which a bisection within a family stops.
const REL_PRECISION: f64 = 1e-4;
/// Initial x-centered radius, in units of `tol`.
const START_RADIUS_TOLS: f64 = 1024.0;
const PATTERN_TAG: u64 = 0x5041_5454;
const DIRECTION_TAG: u64 = 0x4449_5253;

#[derive(Debug, Clone, PartialEq)]
struct Family<T> {
    dir: Option<Vec<T>>,
    rho: T,
}

impl<T: Real> Family<T> {
    fn centered() -> Self {
        Family {
            dir: None,
            rho: T::infinity(),
        }
    }

    fn ball(&self, x: &Point<T>, r: T) -> Ball<T> {
        let center = match &self.dir {
            Some(d) if r > self.rho => x.offset(d, r - self.rho),
            _ => x.clone(),
        };
        Ball { center, radius: r }
    }
}

enum Outcome<T> {
    Certified(AnchorCertificate),
    Refuted(Option<Point<T>>),
}

enum Climb<T> {
    Refuted,
    Reached(T),
    Exceeds,
}

struct Search<'a, T> {
    region: &'a LabelRegion<T>,
    label: &'a str,
    x: &'a Point<T>,
    cap: T,
    tol: T,
    seed: u64,
    counter: u64,
    m_full: usize,
    m_screen: usize,
    gain: T,
    best: T,
    best_family: Option<Family<T>>,
    last_refutation: Option<Point<T>>,
}

impl<'a, T: Real> Search<'a, T> {
    fn certify(&mut self, ball: &Ball<T>, m: usize) -> Outcome<T> {
        if !(ball.radius > T::zero()) || !ball.contains(self.x) {
            return Outcome::Refuted(None);
        }
        match self.region.exact_ball_check(ball) {
            Some(Certificate::Refuted { witness }) => return Outcome::Refuted(Some(witness)),
            Some(_) => return Outcome::Certified(AnchorCertificate::Exact),
            None => {}
        }
        let seed = derive_seed(self.seed, self.counter);
        self.counter += 1;
        for p in ball_probes(ball, m, seed) {
            if self.region.contains(&p) != Ok(true) {
                return Outcome::Refuted(Some(p));
            }
        }
        Outcome::Certified(AnchorCertificate::Sampled { samples: m, seed })
    }

    fn check(&mut self, f: &Family<T>, r: T, m: usize) -> Option<AnchorCertificate> {
        let ball = f.ball(self.x, r);
        match self.certify(&ball, m) {
            Outcome::Certified(c) => Some(c),
            Outcome::Refuted(w) => {
                if w.is_some() {
                    self.last_refutation = w;
                }
                None
            }
        }
    }

    /// Largest radius certified in family `f`, starting from `start`.
    fn climb(&mut self, f: &Family<T>, start: T, m: usize) -> Climb<T> {
        if self.check(f, start, m).is_none() {
            return Climb::Refuted;
        }
        let mut lo = start;
        let mut hi;
        loop {
            if lo >= self.cap {
                return Climb::Exceeds;
            }
            hi = (lo * T::two()).min(self.cap);
            if self.check(f, hi, m).is_some() {
                lo = hi;
            } else {
                break;
            }
        }
        let rel = T::lit(REL_PRECISION);
        while hi - lo > self.tol.max(rel * lo) {
            let mid = (lo + hi) * T::half();
            if mid <= lo || mid >= hi {
                break;
            }
            if self.check(f, mid, m).is_some() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Climb::Reached(lo)
    }

    fn threshold(&self) -> T {
        if self.best > T::zero() {
            self.best * (T::one() + self.gain)
        } else {
            self.tol
        }
    }

    /// Screens a family at the improvement threshold and climbs it if it
    /// passes. Returns true when the family reached the cap.
    fn try_family(&mut self, f: &Family<T>) -> bool {
        let t = self.threshold().min(self.cap);
        if self.check(f, t, self.m_screen).is_none() {
            return false;
        }
        match self.climb(f, t, self.m_screen) {
            Climb::Exceeds => {
                self.best = self.cap;
                self.best_family = Some(f.clone());
                true
            }
            Climb::Reached(v) => {
                if v >= t {
                    self.best = v;
                    self.best_family = Some(f.clone());
                }
                false
            }
            Climb::Refuted => false,
        }
    }

    fn anchor(&self, ball: Ball<T>, certificate: AnchorCertificate) -> Anchor<T> {
        Anchor {
            ball,
            anchored_point: self.x.clone(),
            label: self.label.to_string(),
            certificate,
        }
    }

    /// Full-budget anchors at `cap/4`, `cap/2`, `cap` along `f`.
    fn cap_witnesses(&mut self, f: &Family<T>) -> Option<Vec<Anchor<T>>> {
        let mut out = Vec::with_capacity(3);
        for r in [self.cap / T::lit(4.0), self.cap / T::two(), self.cap] {
            let cert = self.check(f, r, self.m_full)?;
            out.push(self.anchor(f.ball(self.x, r), cert));
        }
        Some(out)
    }

    /// Re-checks the winner with the full budget, bisecting down within its
    /// family if the larger sample refutes it.
    fn finalize(&mut self, f: &Family<T>, r: T) -> Option<Anchor<T>> {
        if let Some(cert) = self.check(f, r, self.m_full) {
            return Some(self.anchor(f.ball(self.x, r), cert));
        }
        let mut lo = T::zero();
        let mut hi = r;
        let mut found = None;
        for _ in 0..60 {
            let mid = (lo + hi) * T::half();
            if !(mid > T::zero()) {
                break;
            }
            match self.check(f, mid, self.m_full) {
                Some(cert) => {
                    lo = mid;
                    found = Some(self.anchor(f.ball(self.x, mid), cert));
                }
                None => hi = mid,
            }
            if found.is_some() && hi - lo <= self.tol.max(T::lit(REL_PRECISION) * lo) {
                break;
            }
        }
        found
    }
}

fn normalized<T: Real>(v: Vec<T>) -> Option<Vec<T>> {
    let n = norm(&v);
    (n > T::zero() && n.is_finite()).then(|| v.into_iter().map(|c| c / n).collect())
}

pub(super) fn search<T: Real>(
    region: &LabelRegion<T>,
    label: &str,
    x: &Point<T>,
    params: &CoverageParams<T>,
    floor: Option<Anchor<T>>,
    gain: T,
) -> Result<CoverageResult<T>, CoverageError> {
    let method = Method::lower_bound(params.budget, params.delta, params.seed);
    let result = |coverage| CoverageResult {
        coverage,
        method: method.clone(),
    };
    if !region.contains(x)? {
        return Err(CoverageError::PointNotInRegion);
    }
    if params.budget == 0 {
        return Ok(result(Coverage::Zero));
    }
    let n = x.dim();
    let mut s = Search {
        region,
        label,
        x,
        cap: params.cap,
        tol: params.tol,
        seed: params.seed,
        counter: 0,
        m_full: params.budget,
        m_screen: params.budget.min(SCREEN_SAMPLES),
        gain,
        best: floor.as_ref().map_or(T::zero(), |a| a.radius()),
        best_family: None,
        last_refutation: None,
    };

    // Balls centered at x, shrinking from a small start until one passes.
    let centered = Family::centered();
    let mut r = (params.tol * T::lit(START_RADIUS_TOLS)).min(params.cap);
    let mut r0 = T::zero();
    while r >= params.tol {
        if s.check(&centered, r, s.m_screen).is_some() {
            match s.climb(&centered, r, s.m_screen) {
                Climb::Exceeds => r0 = params.cap,
                Climb::Reached(v) => r0 = v,
                Climb::Refuted => {}
            }
            break;
        }
        r = r * T::half();
    }
    if r0 >= params.cap {
        if let Some(w) = s.cap_witnesses(&centered) {
            return Ok(result(Coverage::ExceedsCap {
                cap: params.cap,
                witnesses: w,
            }));
        }
    }
    if r0 > s.best {
        s.best = r0;
        s.best_family = Some(centered.clone());
    }
    let base = r0.max(s.best);
    if base > T::zero() {
        // The point that refuted the smallest failing centered ball marks
        // the nearest boundary; moving away from it is the first direction.
        let mut dirs: Vec<Vec<T>> = Vec::new();
        if let Some(w) = s.last_refutation.clone() {
            if let Some(d) = normalized(x.sub(&w)) {
                dirs.push(d);
            }
        }
        let mut rng = seeded(derive_seed(params.seed, DIRECTION_TAG));
        let mut random: Vec<Vec<T>> = (0..4 * n + 8)
            .map(|_| unit_vector(&mut rng, n).into_iter().map(T::lit).collect())
            .collect();
        random.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(p, q)| p.partial_cmp(q).unwrap_or(std::cmp::Ordering::Equal))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        dirs.extend(random);
        let rhos = [base, base / T::lit(4.0), base / T::lit(16.0)];

        let mut reached_cap = false;
        'starts: for d in &dirs {
            for rho in rhos {
                let f = Family {
                    dir: Some(d.clone()),
                    rho,
                };
                if s.try_family(&f) {
                    reached_cap = true;
                    break 'starts;
                }
            }
        }

        // Pattern search around the best directional family.
        if !reached_cap {
            let mut cur = match &s.best_family {
                Some(f) if f.dir.is_some() => f.clone(),
                _ => Family {
                    dir: Some(dirs[0].clone()),
                    rho: base,
                },
            };
            let mut rng = seeded(derive_seed(params.seed, PATTERN_TAG));
            let mut step = T::lit(0.25);
            let mut log_step = 1.0f64;
            let max_evals = 60 + 30 * n;
            let mut evals = 0;
            while step > T::lit(1e-6) && evals < max_evals && !reached_cap {
                let mut improved = false;
                let d = cur.dir.clone().expect("directional");
                let mut candidates = Vec::new();
                for _ in 0..2 * n {
                    let e: Vec<T> = unit_vector(&mut rng, n).into_iter().map(T::lit).collect();
                    let moved: Vec<T> = d.iter().zip(&e).map(|(a, b)| *a + step * *b).collect();
                    if let Some(nd) = normalized(moved) {
                        candidates.push(Family {
                            dir: Some(nd),
                            rho: cur.rho,
                        });
                    }
                }
                for sign in [1.0, -1.0] {
                    let rho = cur.rho * T::lit(2f64.powf(sign * log_step));
                    if rho > T::zero() && rho.is_finite() {
                        candidates.push(Family {
                            dir: Some(d.clone()),
                            rho,
                        });
                    }
                }
                for f in candidates {
                    evals += 1;
                    let before = s.best;
                    if s.try_family(&f) {
                        reached_cap = true;
                        break;
                    }
                    if s.best > before {
                        cur = f;
                        improved = true;
                        break;
                    }
                }
                if !improved {
                    step = step * T::half();
                    log_step *= 0.5;
                }
            }
        }

        if reached_cap {
            let f = s.best_family.clone().expect("family reached cap");
            if let Some(w) = s.cap_witnesses(&f) {
                return Ok(result(Coverage::ExceedsCap {
                    cap: params.cap,
                    witnesses: w,
                }));
            }
        }
    }

    let floor_radius = floor.as_ref().map_or(T::zero(), |a| a.radius());
    if let Some(f) = s.best_family.clone() {
        if let Some(anchor) = s.finalize(&f, s.best) {
            if anchor.radius() > floor_radius {
                return Ok(result(Coverage::Bounded {
                    radius: anchor.radius(),
                    witness: anchor,
                }));
            }
        }
    }
    Ok(result(match floor {
        Some(a) => Coverage::Bounded {
            radius: a.radius(),
            witness: a,
        },
        None => Coverage::Zero,
    }))
}
