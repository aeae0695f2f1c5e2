//! Coverage over grids and point lists, with inf/sup estimates, pairwise
//! comparison of classifiers, and CSV or JSON export.

use std::cmp::Ordering;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{Classifier, DomainBox};
use crate::coverage::{
    coverage_at, Coverage, CoverageError, CoverageParams, CoverageResult, CoverageValue,
};
use crate::geometry::sampling::derive_seed;
use crate::geometry::{GeometryError, Point};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("point {index} has dimension {found}, classifier has {expected}")]
    Dimension {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("classifiers have dimensions {0} and {1}")]
    DimensionMismatch(usize, usize),
    #[error("coverage failed at point {index}: {source}")]
    Coverage {
        index: usize,
        #[source]
        source: CoverageError,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Where a field is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum PointSet<T> {
    /// `counts[i]` evenly spaced values on each axis of `bounds`, ends
    /// included (a count of one takes the midpoint). Points are ordered with
    /// the last axis varying fastest.
    Grid {
        bounds: DomainBox<T>,
        counts: Vec<usize>,
    },
    List(Vec<Point<T>>),
}

impl<T: Real> PointSet<T> {
    pub fn grid(bounds: DomainBox<T>, counts: Vec<usize>) -> Result<Self, FieldError> {
        if counts.len() != bounds.dim() {
            return Err(FieldError::InvalidGrid(format!(
                "{} counts for a {}-dimensional box",
                counts.len(),
                bounds.dim()
            )));
        }
        if counts.contains(&0) {
            return Err(FieldError::InvalidGrid(
                "every axis needs at least one value".into(),
            ));
        }
        Ok(PointSet::Grid { bounds, counts })
    }

    pub fn points(&self) -> Vec<Point<T>> {
        match self {
            PointSet::List(pts) => pts.clone(),
            PointSet::Grid { bounds, counts } => {
                let axes: Vec<Vec<T>> = counts
                    .iter()
                    .enumerate()
                    .map(|(i, &k)| {
                        let (lo, hi) = (bounds.lo[i], bounds.hi[i]);
                        if k == 1 {
                            return vec![(lo + hi) * T::half()];
                        }
                        let step = (hi - lo) / T::lit((k - 1) as f64);
                        (0..k)
                            .map(|j| {
                                if j + 1 == k {
                                    hi
                                } else {
                                    lo + step * T::lit(j as f64)
                                }
                            })
                            .collect()
                    })
                    .collect();
                let mut out: Vec<Vec<T>> = vec![Vec::new()];
                for axis in &axes {
                    out = out
                        .into_iter()
                        .flat_map(|p| {
                            axis.iter().map(move |v| {
                                let mut q = p.clone();
                                q.push(*v);
                                q
                            })
                        })
                        .collect();
                }
                out.into_iter()
                    .map(|c| Point::new(c).expect("finite grid coordinates"))
                    .collect()
            }
        }
    }
}

/// Coverage at a set of points. `points`, `labels` and `results` are
/// parallel; refinement points are listed separately in `skipped`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageField<T> {
    pub dimension: usize,
    pub cap: T,
    pub seed: u64,
    pub points: Vec<Point<T>>,
    pub labels: Vec<String>,
    pub results: Vec<CoverageResult<T>>,
    pub skipped: Vec<Point<T>>,
    /// Smallest value over the computed points, `None` if there are none.
    pub inf_estimate: Option<CoverageValue<T>>,
    pub sup_estimate: Option<CoverageValue<T>>,
}

impl<T: Real> CoverageField<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The computed result at `x`, if `x` is one of the field's points.
    pub fn result_at(&self, x: &Point<T>) -> Option<&CoverageResult<T>> {
        self.points
            .iter()
            .position(|p| p == x)
            .map(|i| &self.results[i])
    }
}

/// Smallest and largest value under the coverage ordering.
pub fn inf_sup<T: Real>(
    values: impl IntoIterator<Item = CoverageValue<T>>,
) -> Option<(CoverageValue<T>, CoverageValue<T>)> {
    values.into_iter().fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((
            if v.cmp_value(&lo) == Ordering::Less {
                v
            } else {
                lo
            },
            if v.cmp_value(&hi) == Ordering::Greater {
                v
            } else {
                hi
            },
        )),
    })
}

/// Seed for the search at `x`, fixed by the coordinates so that a point gets
/// the same result in every field that contains it.
fn point_seed<T: Real>(seed: u64, x: &Point<T>) -> u64 {
    x.coords()
        .iter()
        .fold(seed, |s, c| derive_seed(s, c.as_f64().to_bits()))
}

enum Outcome<T> {
    Computed(String, CoverageResult<T>),
    Skipped,
}

fn evaluate<T: Real>(
    c: &Classifier<T>,
    pts: &[Point<T>],
    params: &CoverageParams<T>,
) -> Result<Vec<Outcome<T>>, FieldError> {
    for (index, p) in pts.iter().enumerate() {
        if p.dim() != c.dimension() {
            return Err(FieldError::Dimension {
                index,
                expected: c.dimension(),
                found: p.dim(),
            });
        }
    }
    pts.par_iter()
        .enumerate()
        .map(|(index, x)| {
            let p = CoverageParams {
                seed: point_seed(params.seed, x),
                ..params.clone()
            };
            match coverage_at(c, x, &p) {
                Ok(r) => {
                    let label = r
                        .witnesses()
                        .first()
                        .map(|a| a.label.clone())
                        .or_else(|| match c.label_of(x) {
                            Ok(crate::classifier::Membership::Label(n)) => Some(n),
                            _ => None,
                        })
                        .unwrap_or_default();
                    Ok(Outcome::Computed(label, r))
                }
                Err(CoverageError::RefinementPoint { .. }) => Ok(Outcome::Skipped),
                Err(source) => Err(FieldError::Coverage { index, source }),
            }
        })
        .collect()
}

/// Coverage at every point of `points`. Refinement points are skipped and
/// recorded. Points are processed in parallel and assembled in order.
pub fn compute_field<T: Real>(
    c: &Classifier<T>,
    points: &PointSet<T>,
    params: &CoverageParams<T>,
) -> Result<CoverageField<T>, FieldError> {
    let pts = points.points();
    let outcomes = evaluate(c, &pts, params)?;
    let mut field = CoverageField {
        dimension: c.dimension(),
        cap: params.cap,
        seed: params.seed,
        points: Vec::new(),
        labels: Vec::new(),
        results: Vec::new(),
        skipped: Vec::new(),
        inf_estimate: None,
        sup_estimate: None,
    };
    for (p, o) in pts.into_iter().zip(outcomes) {
        match o {
            Outcome::Computed(label, r) => {
                field.points.push(p);
                field.labels.push(label);
                field.results.push(r);
            }
            Outcome::Skipped => field.skipped.push(p),
        }
    }
    if let Some((lo, hi)) = inf_sup(field.results.iter().map(|r| r.value())) {
        field.inf_estimate = Some(lo);
        field.sup_estimate = Some(hi);
    }
    Ok(field)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// The first classifier has the larger coverage.
    Greater,
    Equal,
    Less,
}

impl From<Ordering> for Relation {
    fn from(o: Ordering) -> Self {
        match o {
            Ordering::Greater => Relation::Greater,
            Ordering::Equal => Relation::Equal,
            Ordering::Less => Relation::Less,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Comparison<T> {
    Compared {
        first: CoverageValue<T>,
        second: CoverageValue<T>,
        relation: Relation,
    },
    Skipped {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry<T> {
    pub point: Point<T>,
    pub comparison: Comparison<T>,
}

/// Coverage of two classifiers at the same points, in the same units.
pub fn compare_at<T: Real>(
    first: &Classifier<T>,
    second: &Classifier<T>,
    points: &PointSet<T>,
    params: &CoverageParams<T>,
) -> Result<Vec<ComparisonEntry<T>>, FieldError> {
    if first.dimension() != second.dimension() {
        return Err(FieldError::DimensionMismatch(
            first.dimension(),
            second.dimension(),
        ));
    }
    let pts = points.points();
    let a = evaluate(first, &pts, params)?;
    let b = evaluate(second, &pts, params)?;
    Ok(pts
        .into_iter()
        .zip(a.into_iter().zip(b))
        .map(|(point, pair)| {
            let comparison = match pair {
                (Outcome::Computed(_, x), Outcome::Computed(_, y)) => {
                    let (first, second) = (x.value(), y.value());
                    Comparison::Compared {
                        first,
                        second,
                        relation: first.cmp_value(&second).into(),
                    }
                }
                (Outcome::Skipped, _) => Comparison::Skipped {
                    reason: "refinement point of the first classifier".into(),
                },
                (_, Outcome::Skipped) => Comparison::Skipped {
                    reason: "refinement point of the second classifier".into(),
                },
            };
            ComparisonEntry { point, comparison }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldFormat {
    Csv,
    Structured,
}

/// Radius for bounded results, the cap for capped ones, zero otherwise.
pub fn radius_or_cap<T: Real>(r: &CoverageResult<T>) -> T {
    match &r.coverage {
        Coverage::Zero => T::zero(),
        Coverage::Bounded { radius, .. } => *radius,
        Coverage::ExceedsCap { cap, .. } => *cap,
    }
}

/// CSV with columns `x1..xn, coverage_kind, radius_or_cap, method`.
pub fn write_csv<T: Real, W: Write>(f: &CoverageField<T>, out: W) -> Result<(), FieldError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header: Vec<String> = (1..=f.dimension).map(|i| format!("x{i}")).collect();
    header.extend(["coverage_kind", "radius_or_cap", "method"].map(String::from));
    w.write_record(&header)?;
    for (p, r) in f.points.iter().zip(&f.results) {
        let mut row: Vec<String> = p.coords().iter().map(|c| c.as_f64().to_string()).collect();
        row.push(r.kind_name().to_string());
        row.push(radius_or_cap(r).as_f64().to_string());
        row.push(r.method.name().to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_structured<T: Real, W: Write>(
    f: &CoverageField<T>,
    mut out: W,
) -> Result<(), FieldError> {
    serde_json::to_writer_pretty(&mut out, f)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn export_field<T: Real>(
    f: &CoverageField<T>,
    path: impl AsRef<Path>,
    format: FieldFormat,
) -> Result<(), FieldError> {
    let mut out = BufWriter::new(File::create(path)?);
    match format {
        FieldFormat::Csv => write_csv(f, &mut out)?,
        FieldFormat::Structured => write_structured(f, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

/// Reads a field written in the structured format.
pub fn import_field<T: Real>(path: impl AsRef<Path>) -> Result<CoverageField<T>, FieldError> {
    read_structured(BufReader::new(File::open(path)?))
}

pub fn read_structured<T: Real, R: Read>(input: R) -> Result<CoverageField<T>, FieldError> {
    Ok(serde_json::from_reader(input)?)
}
