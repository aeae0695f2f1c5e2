//! Shipped example classifiers and seeded generators for random ones.
//!
//! The JSON specs under `specs/` are embedded so that tests and the `verify`
//! suite run without touching the filesystem.

use std::collections::BTreeMap;

use rand::Rng;

use crate::classifier::Classifier;
use crate::geometry::sampling::{unit_vector, SeededRng};
use crate::geometry::{dot, HPolytope, Halfspace, Hyperplane, Point};
use crate::region::LabelRegion;
use crate::scalar::Real;
use crate::spec_file::load_spec_str;

pub const FIG1_JSON: &str = include_str!("../specs/fig1.json");
pub const FIG3_JSON: &str = include_str!("../specs/fig3.json");
pub const LINEAR_JSON: &str = include_str!("../specs/linear.json");
pub const REFINED_LINEAR_JSON: &str = include_str!("../specs/refined_linear.json");
pub const GENERALIZED_LINEAR_JSON: &str = include_str!("../specs/generalized_linear.json");
pub const TRIVIAL_JSON: &str = include_str!("../specs/trivial.json");

/// `(file name, contents)` for every shipped spec.
pub const SHIPPED: [(&str, &str); 6] = [
    ("fig1.json", FIG1_JSON),
    ("fig3.json", FIG3_JSON),
    ("linear.json", LINEAR_JSON),
    ("refined_linear.json", REFINED_LINEAR_JSON),
    ("generalized_linear.json", GENERALIZED_LINEAR_JSON),
    ("trivial.json", TRIVIAL_JSON),
];

fn shipped<T: Real>(text: &str) -> Classifier<T> {
    load_spec_str(text).expect("shipped spec is valid")
}

/// Sine and line boundaries with four labels `C`, `D`, `E`, `F`, inside the
/// window `[-20, 20]^2`.
pub fn fig1<T: Real>() -> Classifier<T> {
    shipped(FIG1_JSON)
}

/// Six axis-aligned boxes forming two labels `M` and `N` in `[-20, 20]^2`.
pub fn fig3<T: Real>() -> Classifier<T> {
    shipped(FIG3_JSON)
}

/// Open `M` above and closed `N` below the line `x2 = 0.5 x1 - 1`.
pub fn linear<T: Real>() -> Classifier<T> {
    shipped(LINEAR_JSON)
}

/// Open halfspaces `x2 > 0` and `x2 < 0` with the line `x2 = 0` refined out.
pub fn refined_linear<T: Real>() -> Classifier<T> {
    shipped(REFINED_LINEAR_JSON)
}

/// `x2 > 0` and `x2 < 0`, with the line `x2 = 0` split at the origin
/// between the two labels.
pub fn generalized_linear<T: Real>() -> Classifier<T> {
    shipped(GENERALIZED_LINEAR_JSON)
}

/// A single label covering the whole space.
pub fn trivial<T: Real>() -> Classifier<T> {
    shipped(TRIVIAL_JSON)
}

fn labels<T>(entries: Vec<(&str, LabelRegion<T>)>) -> BTreeMap<String, LabelRegion<T>> {
    entries
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

fn hyperplane_slab<T: Real>(h: &Hyperplane<T>) -> LabelRegion<T> {
    let neg: Vec<T> = h.normal.iter().map(|c| -*c).collect();
    LabelRegion::Polytope(HPolytope {
        halfspaces: vec![
            Halfspace::closed(h.normal.clone(), h.offset).expect("nonzero normal"),
            Halfspace::closed(neg, -h.offset).expect("nonzero normal"),
        ],
    })
}

/// Open halfspaces `a·x < b` (label `N`) and `a·x > b` (label `M`), with
/// the hyperplane as refinement set.
pub fn refined_linear_from<T: Real>(h: &Hyperplane<T>) -> Classifier<T> {
    let neg: Vec<T> = h.normal.iter().map(|c| -*c).collect();
    let m = Halfspace::open(neg, -h.offset).expect("nonzero normal");
    let n = Halfspace::open(h.normal.clone(), h.offset).expect("nonzero normal");
    Classifier::new(
        h.dim(),
        labels(vec![
            ("M", LabelRegion::Halfspace(m)),
            ("N", LabelRegion::Halfspace(n)),
        ]),
        Some(hyperplane_slab(h)),
    )
    .expect("valid classifier")
}

/// Open `a·x > b` (label `M`) and closed `a·x <= b` (label `N`).
pub fn binary_linear_from<T: Real>(h: &Hyperplane<T>) -> Classifier<T> {
    let neg: Vec<T> = h.normal.iter().map(|c| -*c).collect();
    let m = Halfspace::open(neg, -h.offset).expect("nonzero normal");
    let n = Halfspace::closed(h.normal.clone(), h.offset).expect("nonzero normal");
    Classifier::new(
        h.dim(),
        labels(vec![
            ("M", LabelRegion::Halfspace(m)),
            ("N", LabelRegion::Halfspace(n)),
        ]),
        None,
    )
    .expect("valid classifier")
}

/// Binary linear classifier on `x2 = 0` whose line is split at the origin
/// into two extra negligible labels `R+` (x1 >= 0) and `R-` (x1 < 0).
pub fn split_hyperplane_labels<T: Real>() -> Classifier<T> {
    let (z, o) = (T::zero(), T::one());
    let ray = |sign: T, closed: bool| {
        LabelRegion::Polytope(HPolytope {
            halfspaces: vec![
                Halfspace::closed(vec![z, o], z).unwrap(),
                Halfspace::closed(vec![z, -o], z).unwrap(),
                Halfspace::new(vec![sign, z], z, closed).unwrap(),
            ],
        })
    };
    Classifier::new(
        2,
        labels(vec![
            (
                "M",
                LabelRegion::Halfspace(Halfspace::open(vec![z, -o], z).unwrap()),
            ),
            (
                "N",
                LabelRegion::Halfspace(Halfspace::open(vec![z, o], z).unwrap()),
            ),
            ("R+", ray(-o, true)),
            ("R-", ray(o, false)),
        ]),
        None,
    )
    .expect("valid classifier")
}

/// A random hyperplane whose distance from the origin is below
/// `max_offset`, so it crosses the standard window.
pub fn random_hyperplane<T: Real>(
    rng: &mut SeededRng,
    dim: usize,
    max_offset: f64,
) -> Hyperplane<T> {
    let normal: Vec<T> = unit_vector(rng, dim).into_iter().map(T::lit).collect();
    let offset = T::lit(rng.gen_range(-max_offset..max_offset));
    Hyperplane { normal, offset }
}

/// A random orthogonal matrix, by Gram-Schmidt on Gaussian columns.
fn random_rotation(rng: &mut SeededRng, dim: usize) -> Vec<Vec<f64>> {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v = unit_vector(rng, dim);
        for c in &cols {
            let p = dot(&v, c);
            v.iter_mut().zip(c).for_each(|(a, b)| *a -= p * b);
        }
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-6 {
            cols.push(v.into_iter().map(|a| a / n).collect());
        }
    }
    cols
}

/// A random bounded open polytope with `constraints` faces and a random
/// point inside it.
///
/// The first `dim + 1` normals are a rotated and jittered copy of
/// `e_1, ..., e_n, -(1, ..., 1)/sqrt(n)`, which positively span R^n and so
/// keep the polytope bounded. The rest are uniform directions. Every face
/// sits at distance 0.5 to 3 from a center in `[-2, 2]^n`.
pub fn random_polytope<T: Real>(
    rng: &mut SeededRng,
    dim: usize,
    constraints: usize,
) -> (HPolytope<T>, Point<T>) {
    assert!(
        constraints > dim,
        "a bounded polytope needs more than n faces"
    );
    let rot = random_rotation(rng, dim);
    let center: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let mut normals = Vec::with_capacity(constraints);
    for k in 0..=dim {
        let base: Vec<f64> = if k < dim {
            (0..dim).map(|i| if i == k { 1.0 } else { 0.0 }).collect()
        } else {
            vec![-1.0 / (dim as f64).sqrt(); dim]
        };
        let jitter = unit_vector(rng, dim);
        let v: Vec<f64> = (0..dim)
            .map(|i| {
                let r: f64 = (0..dim).map(|j| rot[j][i] * base[j]).sum();
                r + 0.15 * jitter[i]
            })
            .collect();
        normals.push(v);
    }
    while normals.len() < constraints {
        normals.push(unit_vector(rng, dim));
    }
    let halfspaces = normals
        .into_iter()
        .map(|a| {
            let n = a.iter().map(|c| c * c).sum::<f64>().sqrt();
            let a: Vec<f64> = a.into_iter().map(|c| c / n).collect();
            let b = dot(&a, &center) + rng.gen_range(0.5..3.0);
            Halfspace::open(a.into_iter().map(T::lit).collect(), T::lit(b)).unwrap()
        })
        .collect();
    let poly = HPolytope { halfspaces };
    let to_t = |v: &[f64]| Point::from_vec(v.iter().map(|c| T::lit(*c)).collect());
    for _ in 0..1000 {
        let p: Vec<f64> = center
            .iter()
            .map(|c| c + rng.gen_range(-4.0..4.0))
            .collect();
        let p = to_t(&p);
        if poly.contains(&p) {
            return (poly, p);
        }
    }
    let c = to_t(&center);
    (poly, c)
}

/// Parallel slabs cut by `k - 1` hyperplanes with a common normal:
/// `k` full-dimensional labels `L0 .. L{k-1}`, half-open so they tile R^n.
pub fn random_slabs<T: Real>(rng: &mut SeededRng, dim: usize, k: usize) -> Classifier<T> {
    assert!(k >= 2);
    let a: Vec<f64> = unit_vector(rng, dim);
    let mut cuts: Vec<f64> = (0..k - 1).map(|_| rng.gen_range(-12.0..12.0)).collect();
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    // keep slabs at least one unit wide
    for i in 1..cuts.len() {
        if cuts[i] < cuts[i - 1] + 1.0 {
            cuts[i] = cuts[i - 1] + 1.0;
        }
    }
    let at: Vec<T> = a.iter().map(|c| T::lit(*c)).collect();
    let neg: Vec<T> = at.iter().map(|c| -*c).collect();
    let mut entries = BTreeMap::new();
    for i in 0..k {
        let mut hs = Vec::new();
        if i > 0 {
            hs.push(Halfspace::closed(neg.clone(), T::lit(-cuts[i - 1])).unwrap());
        }
        if i < k - 1 {
            hs.push(Halfspace::open(at.clone(), T::lit(cuts[i])).unwrap());
        }
        entries.insert(
            format!("L{i}"),
            LabelRegion::Polytope(HPolytope { halfspaces: hs }),
        );
    }
    Classifier::new(dim, entries, None).expect("valid classifier")
}

/// Nearest-site cells of `k` random sites in `[-15, 15]^n`. Ties go to the
/// site with the smaller index, so the cells tile R^n.
pub fn random_voronoi<T: Real>(rng: &mut SeededRng, dim: usize, k: usize) -> Classifier<T> {
    assert!(k >= 2);
    let sites: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..dim).map(|_| rng.gen_range(-15.0..15.0)).collect())
        .collect();
    let mut entries = BTreeMap::new();
    for i in 0..k {
        let mut hs = Vec::new();
        for j in (0..k).filter(|j| *j != i) {
            // |x - s_i|^2 < |x - s_j|^2  <=>  2 (s_j - s_i)·x < |s_j|^2 - |s_i|^2
            let a: Vec<T> = (0..dim)
                .map(|t| T::lit(2.0 * (sites[j][t] - sites[i][t])))
                .collect();
            let b = T::lit(dot(&sites[j], &sites[j]) - dot(&sites[i], &sites[i]));
            // the lower index wins ties
            hs.push(Halfspace::new(a, b, i < j).unwrap());
        }
        entries.insert(
            format!("V{i}"),
            LabelRegion::Polytope(HPolytope { halfspaces: hs }),
        );
    }
    Classifier::new(dim, entries, None).expect("valid classifier")
}

/// A random classifier with at least three full-dimensional labels,
/// alternating between slab and nearest-site arrangements.
pub fn random_multilabel<T: Real>(rng: &mut SeededRng, index: usize) -> Classifier<T> {
    let dim = 2 + index % 2;
    let k = 3 + rng.gen_range(0..3);
    if index.is_multiple_of(2) {
        random_slabs(rng, dim, k)
    } else {
        random_voronoi(rng, dim, k)
    }
}
