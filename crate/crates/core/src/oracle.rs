//! Brute-force reference computations used to check the coverage engine.
//!
//! These are slow and deliberately naive: they share no code with the
//! bisection-plus-projection solver beyond basic point arithmetic. Each one
//! scans a grid of candidate centers, computes the largest admissible radius
//! at every center, keeps the best center whose ball still contains the
//! query point, and then zooms the grid in around it. The admissible radius
//! is concave in the center on convex labels, so zooming cannot lose the
//! maximum there.

use crate::geometry::{dot, norm, HPolytope};

/// Points of a regular grid with `k` nodes per axis on `[lo, hi]`.
fn grid(lo: &[f64], hi: &[f64], k: usize) -> Vec<Vec<f64>> {
    let n = lo.len();
    let mut out = vec![Vec::new()];
    for i in 0..n {
        let mut next = Vec::with_capacity(out.len() * k);
        for p in &out {
            for j in 0..k {
                let t = if k == 1 {
                    0.5
                } else {
                    j as f64 / (k - 1) as f64
                };
                let mut q = p.clone();
                q.push(lo[i] + t * (hi[i] - lo[i]));
                next.push(q);
            }
        }
        out = next;
    }
    out
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

/// Zooming center search. `radius_at(c)` is the largest ball radius at `c`
/// inside the label (0 outside it); the answer is the best such radius over
/// centers whose ball contains `x`.
pub fn zoom_search(
    x: &[f64],
    half_width: f64,
    nodes: usize,
    levels: usize,
    radius_at: impl Fn(&[f64]) -> f64,
) -> f64 {
    let mut center = x.to_vec();
    let mut w = half_width;
    let mut best = 0.0f64;
    for _ in 0..levels {
        let lo: Vec<f64> = center.iter().map(|c| c - w).collect();
        let hi: Vec<f64> = center.iter().map(|c| c + w).collect();
        for c in grid(&lo, &hi, nodes) {
            let r = radius_at(&c);
            if r > best && dist(&c, x) < r {
                best = r;
                center = c;
            }
        }
        // a few grid cells around the incumbent
        w *= 4.0 / (nodes - 1) as f64;
    }
    best
}

/// Largest radius `r` with `B(c, r)` inside the closure of `poly`, found by
/// bisection on the containment test `a·c + r‖a‖ <= b` for all faces.
pub fn polytope_radius_at(poly: &HPolytope<f64>, c: &[f64], r_max: f64) -> f64 {
    let fits = |r: f64| {
        poly.halfspaces
            .iter()
            .all(|h| dot(&h.normal, c) + r * norm(&h.normal) <= h.offset)
    };
    if !fits(0.0) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, r_max);
    if fits(hi) {
        return hi;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Longest segment from `x` inside the closure of `poly` along `dir`.
fn ray_length(poly: &HPolytope<f64>, x: &[f64], dir: &[f64]) -> f64 {
    poly.halfspaces
        .iter()
        .filter_map(|h| {
            let ad = dot(&h.normal, dir);
            (ad > 0.0).then(|| (h.offset - dot(&h.normal, x)) / ad)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Brute-force coverage of a bounded convex polytope at an interior point.
pub fn polytope_coverage(poly: &HPolytope<f64>, x: &[f64]) -> f64 {
    let n = x.len();
    // Every point of the polytope is reached from x along some direction,
    // so the longest axis-and-diagonal ray bounds the search window.
    let mut reach = 0.0f64;
    for i in 0..n {
        for s in [-1.0, 1.0] {
            let mut d = vec![0.0; n];
            d[i] = s;
            reach = reach.max(ray_length(poly, x, &d));
        }
    }
    for mask in 0..(1usize << n) {
        let d: Vec<f64> = (0..n)
            .map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 } / (n as f64).sqrt())
            .collect();
        reach = reach.max(ray_length(poly, x, &d));
    }
    assert!(reach.is_finite(), "oracle needs a bounded polytope");
    let (nodes, levels) = if n <= 2 { (81, 8) } else { (21, 7) };
    zoom_search(x, 2.0 * reach, nodes, levels, |c| {
        polytope_radius_at(poly, c, 4.0 * reach)
    })
}

/// Axis-aligned box `[lo, hi]` in the plane.
#[derive(Debug, Clone, Copy)]
pub struct Rect {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Rect {
    pub const fn new(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Rect { lo, hi }
    }

    /// Euclidean distance from `c` to the closed box.
    pub fn distance(&self, c: &[f64]) -> f64 {
        let dx = (self.lo[0] - c[0]).max(0.0).max(c[0] - self.hi[0]);
        let dy = (self.lo[1] - c[1]).max(0.0).max(c[1] - self.hi[1]);
        (dx * dx + dy * dy).sqrt()
    }

    fn contains(&self, c: &[f64]) -> bool {
        (0..2).all(|i| self.lo[i] <= c[i] && c[i] <= self.hi[i])
    }

    /// Distance from an interior point to the box boundary.
    fn depth(&self, c: &[f64]) -> f64 {
        (0..2)
            .map(|i| (c[i] - self.lo[i]).min(self.hi[i] - c[i]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Coverage at `x` for a planar label that fills `window` minus the boxes in
/// `others`. The largest ball at `c` reaches to the nearest other box or to
/// the window edge, whichever is closer.
pub fn boxes_coverage(window: Rect, others: &[Rect], x: &[f64]) -> f64 {
    let radius_at = |c: &[f64]| {
        if !window.contains(c) {
            return 0.0;
        }
        others
            .iter()
            .map(|b| b.distance(c))
            .fold(window.depth(c), f64::min)
    };
    let w = 0.5 * (window.hi[0] - window.lo[0]).max(window.hi[1] - window.lo[1]);
    zoom_search(x, 2.0 * w, 161, 8, radius_at)
}

/// The boxes of label `M` in the overfit decision tree example.
pub const FIG3_M: [Rect; 2] = [
    Rect::new([-7.0, 1.0], [20.0, 20.0]),
    Rect::new([-20.0, -10.0], [18.0, -1.0]),
];

/// The boxes of label `N` in the same example.
pub const FIG3_N: [Rect; 4] = [
    Rect::new([-20.0, -1.0], [20.0, 1.0]),
    Rect::new([-20.0, 1.0], [-7.0, 20.0]),
    Rect::new([18.0, -10.0], [20.0, -1.0]),
    Rect::new([-20.0, -20.0], [20.0, -10.0]),
];

pub const WINDOW: Rect = Rect::new([-20.0, -20.0], [20.0, 20.0]);

/// Coverage at `x` in the example's label `N`.
pub fn fig3_n_coverage(x: &[f64]) -> f64 {
    boxes_coverage(WINDOW, &FIG3_M, x)
}

/// Coverage at `x` in the example's label `M`.
pub fn fig3_m_coverage(x: &[f64]) -> f64 {
    boxes_coverage(WINDOW, &FIG3_N, x)
}

fn sine(t: f64) -> f64 {
    10.0 * (0.1 * t).sin()
}

/// Distance from `c` to the graph of `10 sin(0.1 t)` over `|t| <= 20`:
/// dense scan, then Newton steps on the squared distance.
fn distance_to_sine(c: &[f64]) -> f64 {
    let steps = 8000;
    let mut best_t = -20.0;
    let mut best = f64::INFINITY;
    for k in 0..=steps {
        let t = -20.0 + 40.0 * k as f64 / steps as f64;
        let d = (t - c[0]).powi(2) + (sine(t) - c[1]).powi(2);
        if d < best {
            best = d;
            best_t = t;
        }
    }
    let mut t = best_t;
    for _ in 0..20 {
        // g(t) = (t - c1) + (s(t) - c2) s'(t)
        let s = sine(t);
        let ds = (0.1 * t).cos();
        let dds = -0.1 * (0.1 * t).sin();
        let g = (t - c[0]) + (s - c[1]) * ds;
        let dg = 1.0 + ds * ds + (s - c[1]) * dds;
        if dg.abs() < 1e-12 {
            break;
        }
        t = (t - g / dg).clamp(-20.0, 20.0);
    }
    let refined = ((t - c[0]).powi(2) + (sine(t) - c[1]).powi(2)).sqrt();
    refined.min(best.sqrt())
}

/// Coverage at `x` in the sine-and-line example's label `E`, the part of
/// the window above both `x2 = 10 sin(0.1 x1)` and `x2 = -x1 - 3`.
///
/// For a center in `E` the complement is reached only by crossing the sine
/// graph, the line or the window edge, so the largest ball radius is the
/// smallest of those three distances.
pub fn fig1_e_coverage(x: &[f64]) -> f64 {
    let radius_at = |c: &[f64]| {
        if !WINDOW.contains(c) || c[1] < sine(c[0]) || c[1] < -c[0] - 3.0 {
            return 0.0;
        }
        let line = (c[0] + c[1] + 3.0).abs() / 2f64.sqrt();
        distance_to_sine(c).min(line).min(WINDOW.depth(c))
    };
    zoom_search(x, 20.0, 41, 7, radius_at)
}
