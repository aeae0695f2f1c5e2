//! Anchor coverage for classifiers given as labeled partitions of R^n.
//!
//! A classifier assigns every point a label region. An anchor for a point
//! is an open ball that contains the point and lies inside its label, and
//! the coverage at the point is the supremum of anchor radii. This crate
//! computes that quantity (exactly for convex labels, as certified lower
//! bounds otherwise), aggregates it over point sets, and checks empirically
//! which classifiers have unbounded coverage everywhere.
//!
//! Numeric code is generic over [`scalar::Real`] (`f32` or `f64`); the
//! `*64` and `*32` aliases below name the common instantiations.

// `!(x > 0)` guards are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod coverage;
pub mod dsl;
pub mod field;
pub mod fixtures;
pub mod geometry;
pub mod linalg;
pub mod oracle;
pub mod region;
pub mod scalar;
pub mod spec_file;
pub mod structure;
pub mod verify;

pub type Point64 = geometry::Point<f64>;
pub type Point32 = geometry::Point<f32>;
pub type Classifier64 = classifier::Classifier<f64>;
pub type Classifier32 = classifier::Classifier<f32>;
pub type CoverageResult64 = coverage::CoverageResult<f64>;
pub type CoverageResult32 = coverage::CoverageResult<f32>;
