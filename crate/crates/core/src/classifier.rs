//! Classifiers as labeled partitions of R^n.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::sampling::{seeded, uniform_in_box};
use crate::geometry::{check_dim, GeometryError, Point};
use crate::region::{LabelRegion, RegionError};
use crate::scalar::Real;

/// Name used for the refinement set in partition reports.
pub const REFINEMENT: &str = "<refinement>";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabelError {
    #[error("point {point:?} is claimed by several regions: {names:?}")]
    AmbiguousLabel { point: Vec<f64>, names: Vec<String> },
    #[error("point {point:?} lies in no region")]
    NoLabel { point: Vec<f64> },
    #[error(transparent)]
    Region(#[from] RegionError),
}

impl From<GeometryError> for LabelError {
    fn from(e: GeometryError) -> Self {
        LabelError::Region(e.into())
    }
}

/// Which member of the partition holds a point.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Label(String),
    Refinement,
}

/// Axis-aligned sampling window `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox<T> {
    pub lo: Vec<T>,
    pub hi: Vec<T>,
}

impl<T: Real> DomainBox<T> {
    pub fn new(lo: Vec<T>, hi: Vec<T>) -> Result<Self, GeometryError> {
        check_dim(lo.len(), hi.len())?;
        if lo.is_empty() {
            return Err(GeometryError::InvalidInput("domain box has no axes".into()));
        }
        for (l, h) in lo.iter().zip(&hi) {
            if !(l.is_finite() && h.is_finite() && l < h) {
                return Err(GeometryError::InvalidInput(format!(
                    "degenerate domain box axis [{l}, {h}]"
                )));
            }
        }
        Ok(DomainBox { lo, hi })
    }

    /// `[-20, 20]^n`, the window every shipped figure lives in.
    pub fn standard(dim: usize) -> Self {
        DomainBox {
            lo: vec![T::lit(-20.0); dim],
            hi: vec![T::lit(20.0); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn diameter(&self) -> T {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (*h - *l) * (*h - *l))
            .sum::<T>()
            .sqrt()
    }

    pub fn contains(&self, x: &Point<T>) -> bool {
        x.coords()
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(c, (l, h))| *l <= *c && *c <= *h)
    }

    pub fn center(&self) -> Point<T> {
        Point::from_vec(
            self.lo
                .iter()
                .zip(&self.hi)
                .map(|(l, h)| (*l + *h) * T::half())
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifierError {
    #[error("classifier needs at least one label")]
    NoLabels,
    #[error("region `{name}` has dimension {found}, classifier has {expected}")]
    RegionDimension {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Named label regions plus an optional refinement set, meant to partition
/// R^n (or the domain box, for window-bounded specs).
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier<T> {
    dimension: usize,
    domain_box: Option<DomainBox<T>>,
    labels: BTreeMap<String, LabelRegion<T>>,
    refinement_set: Option<LabelRegion<T>>,
    probe_points: Vec<Point<T>>,
}

impl<T: Real> Classifier<T> {
    pub fn new(
        dimension: usize,
        labels: BTreeMap<String, LabelRegion<T>>,
        refinement_set: Option<LabelRegion<T>>,
    ) -> Result<Self, ClassifierError> {
        if labels.is_empty() {
            return Err(ClassifierError::NoLabels);
        }
        if dimension == 0 {
            return Err(GeometryError::InvalidInput("dimension must be at least 1".into()).into());
        }
        let named = labels
            .iter()
            .map(|(k, v)| (k.as_str(), v))
            .chain(refinement_set.iter().map(|r| (REFINEMENT, r)));
        for (name, region) in named {
            if region.dim() != dimension {
                return Err(ClassifierError::RegionDimension {
                    name: name.to_string(),
                    expected: dimension,
                    found: region.dim(),
                });
            }
        }
        Ok(Classifier {
            dimension,
            domain_box: None,
            labels,
            refinement_set,
            probe_points: Vec::new(),
        })
    }

    pub fn with_domain_box(mut self, b: DomainBox<T>) -> Result<Self, ClassifierError> {
        check_dim(self.dimension, b.dim())?;
        self.domain_box = Some(b);
        Ok(self)
    }

    pub fn with_probe_points(mut self, pts: Vec<Point<T>>) -> Result<Self, ClassifierError> {
        for p in &pts {
            check_dim(self.dimension, p.dim())?;
        }
        self.probe_points = pts;
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// The declared box, or the standard window when none was declared.
    pub fn domain_box(&self) -> DomainBox<T> {
        self.domain_box
            .clone()
            .unwrap_or_else(|| DomainBox::standard(self.dimension))
    }

    pub fn declared_domain_box(&self) -> Option<&DomainBox<T>> {
        self.domain_box.as_ref()
    }

    pub fn labels(&self) -> &BTreeMap<String, LabelRegion<T>> {
        &self.labels
    }

    pub fn label(&self, name: &str) -> Option<&LabelRegion<T>> {
        self.labels.get(name)
    }

    pub fn refinement_set(&self) -> Option<&LabelRegion<T>> {
        self.refinement_set.as_ref()
    }

    pub fn probe_points(&self) -> &[Point<T>] {
        &self.probe_points
    }

    pub fn is_ordinary(&self) -> bool {
        self.refinement_set.is_none()
    }

    /// Every region claiming `x`, labels first in name order.
    pub fn claimants(&self, x: &Point<T>) -> Result<Vec<Membership>, LabelError> {
        check_dim(self.dimension, x.dim())?;
        let mut out = Vec::new();
        for (name, region) in &self.labels {
            if region.contains(x)? {
                out.push(Membership::Label(name.clone()));
            }
        }
        if let Some(r) = &self.refinement_set {
            if r.contains(x)? {
                out.push(Membership::Refinement);
            }
        }
        Ok(out)
    }

    /// The member of the partition containing `x`.
    pub fn label_of(&self, x: &Point<T>) -> Result<Membership, LabelError> {
        let mut claims = self.claimants(x)?;
        match claims.len() {
            0 => Err(LabelError::NoLabel { point: x.to_f64() }),
            1 => Ok(claims.pop().expect("one claim")),
            _ => Err(LabelError::AmbiguousLabel {
                point: x.to_f64(),
                names: claims.iter().map(membership_name).collect(),
            }),
        }
    }

    /// Sampled falsification of the partition property: `budget` uniform
    /// points of `bounds` plus the spec's probe points must each be claimed
    /// exactly once.
    pub fn validate_partition(
        &self,
        budget: usize,
        seed: u64,
        bounds: &DomainBox<T>,
    ) -> Result<PartitionReport, LabelError> {
        check_dim(self.dimension, bounds.dim())?;
        let mut rng = seeded(seed);
        let sampled = (0..budget).map(|_| uniform_in_box(&mut rng, &bounds.lo, &bounds.hi));
        let mut violations = Vec::new();
        let mut samples = 0;
        for p in sampled.chain(self.probe_points.iter().cloned()) {
            samples += 1;
            match self.claimants(&p) {
                Ok(claims) if claims.len() == 1 => {}
                Ok(claims) => violations.push(Violation {
                    point: p.to_f64(),
                    claimants: claims.iter().map(membership_name).collect(),
                    error: None,
                }),
                Err(LabelError::Region(RegionError::Eval(e))) => violations.push(Violation {
                    point: p.to_f64(),
                    claimants: Vec::new(),
                    error: Some(e.to_string()),
                }),
                Err(e) => return Err(e),
            }
        }
        let verdict = if violations.is_empty() {
            PartitionVerdict::Unfalsified
        } else {
            PartitionVerdict::Violated
        };
        Ok(PartitionReport {
            samples,
            seed,
            violations,
            verdict,
        })
    }
}

pub fn membership_name(m: &Membership) -> String {
    match m {
        Membership::Label(s) => s.clone(),
        Membership::Refinement => REFINEMENT.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionVerdict {
    Unfalsified,
    Violated,
}

/// A point claimed by zero or several regions, or where evaluation failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub point: Vec<f64>,
    pub claimants: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub samples: usize,
    pub seed: u64,
    pub violations: Vec<Violation>,
    pub verdict: PartitionVerdict,
}
