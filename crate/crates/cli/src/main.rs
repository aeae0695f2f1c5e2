//! `coverage-lab` command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 spec or usage error,
//! 3 query error (refinement point, point outside every label, bad point).

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coverage_lab::coverage::{
    coverage_at, Coverage, CoverageError, CoverageParams, CoverageResult, Method,
};
use coverage_lab::field::{
    compare_at, compute_field, radius_or_cap, write_csv, write_structured, Comparison, FieldError,
    FieldFormat, PointSet,
};
use coverage_lab::fixtures::SHIPPED;
use coverage_lab::geometry::Point;
use coverage_lab::spec_file::{load_spec, load_spec_str, save_spec_string};
use coverage_lab::structure::{
    classify_structure, refine_boundary, StructureError, StructureParams, StructureVerdict,
};
use coverage_lab::verify::{run_criteria, SuiteFixtures, CRITERIA, SUITES};
use coverage_lab::Classifier64;

#[derive(Parser)]
#[command(
    name = "coverage-lab",
    version,
    about = "Anchor coverage of labeled partitions of R^n"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coverage at one or more points.
    Coverage(QueryArgs),
    /// Coverage over a grid or point list, written as CSV or JSON.
    Field(FieldArgs),
    /// Verdict on whether the classifier is refined linear.
    Structure(StructureArgs),
    /// Move every label boundary into the refinement set.
    Refine(RefineArgs),
    /// Compare the coverage of two classifiers at the same points.
    Compare(CompareArgs),
    /// Run the built-in verification suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Common {
    /// Classifier spec file. A shipped example may be named by file name
    /// (e.g. `fig3.json`) when no such file exists.
    #[arg(long)]
    classifier: PathBuf,
    /// Largest radius tried, in feature units [default: 1e6 box diameters].
    #[arg(long)]
    cap: Option<f64>,
    /// Samples for sampled certification.
    #[arg(long, default_value_t = 10_000)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Radius tolerance [default: 1e-6 box diameters].
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct PointArgs {
    /// Comma-separated coordinates; may be repeated.
    #[arg(long, allow_hyphen_values = true)]
    point: Vec<String>,
    /// File with one comma-separated point per line.
    #[arg(long)]
    points_file: Option<PathBuf>,
}

#[derive(Args)]
struct QueryArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    points: PointArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Structured,
}

#[derive(Args)]
struct FieldArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    points: PointArgs,
    /// Grid counts per axis over the domain box, e.g. `20x20`.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct StructureArgs {
    #[command(flatten)]
    common: Common,
    /// Uniform probes in addition to the spec's probe points.
    #[arg(long, default_value_t = 64)]
    probes: usize,
    /// Write the full report as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RefineArgs {
    #[arg(long)]
    classifier: PathBuf,
    /// Where to write the refined spec; printed to stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// The two classifiers, first and second: give the flag twice.
    #[arg(long, required = true)]
    classifier: Vec<PathBuf>,
    #[arg(long)]
    cap: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    points: PointArgs,
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "theorems")]
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run only these criteria (comma-separated ids).
    #[arg(long, value_delimiter = ',')]
    criterion: Vec<u8>,
    /// Directory whose spec files replace the shipped examples.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Verify,
    Spec(String),
    Query(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verify => 1,
            Failure::Spec(_) => 2,
            Failure::Query(_) => 3,
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Spec(format!("i/o error: {e}"))
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("COVERAGE_LAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let result = match cli.command {
        Command::Coverage(a) => cmd_coverage(a),
        Command::Field(a) => cmd_field(a),
        Command::Structure(a) => cmd_structure(a),
        Command::Refine(a) => cmd_refine(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Spec(m) | Failure::Query(m) => eprintln!("error: {m}"),
                Failure::Verify => eprintln!("error: verification failed"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn load(path: &Path) -> Result<Classifier64, Failure> {
    let shown = path.display();
    if !path.exists() {
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default();
        if let Some((_, text)) = SHIPPED.iter().find(|(file, _)| *file == name) {
            return load_spec_str(text).map_err(|e| Failure::Spec(format!("{shown}: {e}")));
        }
    }
    load_spec(path).map_err(|e| Failure::Spec(format!("classifier {shown}: {e}")))
}

fn parse_point(text: &str, dim: usize) -> Result<Point<f64>, Failure> {
    let coords: Result<Vec<f64>, _> = text.split(',').map(str::parse::<f64>).collect();
    let coords = coords
        .map_err(|_| Failure::Query(format!("point `{text}`: expected comma-separated reals")))?;
    if coords.len() != dim {
        return Err(Failure::Query(format!(
            "point `{text}`: has {} coordinates, classifier has dimension {dim}",
            coords.len()
        )));
    }
    Point::new(coords).map_err(|e| Failure::Query(format!("point `{text}`: {e}")))
}

fn gather_points(p: &PointArgs, dim: usize) -> Result<Vec<Point<f64>>, Failure> {
    let mut out = Vec::new();
    for s in &p.point {
        out.push(parse_point(s, dim)?);
    }
    if let Some(path) = &p.points_file {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Query(format!("points-file {}: {e}", path.display())))?;
        for line in text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            out.push(parse_point(line, dim)?);
        }
    }
    Ok(out)
}

fn parse_grid(text: &str, dim: usize) -> Result<Vec<usize>, Failure> {
    let counts: Result<Vec<usize>, _> = text.split('x').map(str::parse::<usize>).collect();
    match counts {
        Ok(c) if c.len() == dim && c.iter().all(|k| *k > 0) => Ok(c),
        _ => Err(Failure::Query(format!(
            "grid `{text}`: expected {dim} positive counts joined by `x`"
        ))),
    }
}

fn params(
    c: &Classifier64,
    cap: Option<f64>,
    tol: Option<f64>,
    budget: usize,
    seed: u64,
) -> Result<CoverageParams<f64>, Failure> {
    let mut p = CoverageParams::defaults_for(c);
    if let Some(cap) = cap {
        p.cap = cap;
    }
    if let Some(tol) = tol {
        p.tol = tol;
    }
    p.budget = budget;
    p.seed = seed;
    p.validate().map_err(|e| Failure::Query(e.to_string()))?;
    Ok(p)
}

fn fmt_point(p: &Point<f64>) -> String {
    p.coords()
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn coverage_failure(e: CoverageError) -> Failure {
    Failure::Query(e.to_string())
}

fn print_result(out: &mut impl Write, r: &CoverageResult<f64>) -> io::Result<()> {
    writeln!(out, "kind: {}", r.kind_name())?;
    match &r.coverage {
        Coverage::Zero => writeln!(out, "radius: 0")?,
        Coverage::Bounded { radius, witness } => {
            writeln!(out, "radius: {radius}")?;
            writeln!(out, "label: {}", witness.label)?;
            writeln!(out, "witness_center: {}", fmt_point(&witness.ball.center))?;
            writeln!(out, "witness_radius: {}", witness.ball.radius)?;
        }
        Coverage::ExceedsCap { cap, witnesses } => {
            writeln!(out, "cap: {cap}")?;
            if let Some(w) = witnesses.first() {
                writeln!(out, "label: {}", w.label)?;
            }
            writeln!(out, "witnesses: {}", witnesses.len())?;
            for (i, w) in witnesses.iter().enumerate() {
                writeln!(
                    out,
                    "witness_{}_center: {}",
                    i + 1,
                    fmt_point(&w.ball.center)
                )?;
                writeln!(out, "witness_{}_radius: {}", i + 1, w.ball.radius)?;
            }
        }
    }
    writeln!(out, "method: {}", r.method.name())?;
    if let Method::LowerBound {
        samples,
        delta,
        miss_fraction,
        seed,
    } = r.method
    {
        writeln!(out, "samples: {samples}")?;
        writeln!(out, "delta: {delta}")?;
        writeln!(out, "miss_fraction: {miss_fraction}")?;
        writeln!(out, "seed: {seed}")?;
    }
    Ok(())
}

fn cmd_coverage(a: QueryArgs) -> Outcome {
    let c = load(&a.common.classifier)?;
    let pts = gather_points(&a.points, c.dimension())?;
    if pts.is_empty() {
        return Err(Failure::Query(
            "point: give --point or --points-file".into(),
        ));
    }
    let p = params(
        &c,
        a.common.cap,
        a.common.tol,
        a.common.budget,
        a.common.seed,
    )?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for (i, x) in pts.iter().enumerate() {
        let r = coverage_at(&c, x, &p).map_err(coverage_failure)?;
        if i > 0 {
            writeln!(out)?;
        }
        writeln!(out, "point: {}", fmt_point(x))?;
        print_result(&mut out, &r)?;
    }
    Ok(())
}

fn field_failure(e: FieldError) -> Failure {
    match e {
        FieldError::Io(_) | FieldError::Csv(_) | FieldError::Json(_) => {
            Failure::Spec(e.to_string())
        }
        _ => Failure::Query(e.to_string()),
    }
}

fn point_set(
    c: &Classifier64,
    points: &PointArgs,
    grid: &Option<String>,
) -> Result<PointSet<f64>, Failure> {
    match grid {
        Some(g) => {
            if !points.point.is_empty() || points.points_file.is_some() {
                return Err(Failure::Query(
                    "grid: cannot be combined with explicit points".into(),
                ));
            }
            let counts = parse_grid(g, c.dimension())?;
            PointSet::grid(c.domain_box(), counts).map_err(field_failure)
        }
        None => {
            let pts = gather_points(points, c.dimension())?;
            if pts.is_empty() {
                return Err(Failure::Query(
                    "grid: give --grid, --point or --points-file".into(),
                ));
            }
            Ok(PointSet::List(pts))
        }
    }
}

fn cmd_field(a: FieldArgs) -> Outcome {
    let c = load(&a.common.classifier)?;
    let set = point_set(&c, &a.points, &a.grid)?;
    let p = params(
        &c,
        a.common.cap,
        a.common.tol,
        a.common.budget,
        a.common.seed,
    )?;
    let f = compute_field(&c, &set, &p).map_err(field_failure)?;
    let format = match a.format {
        Some(Format::Csv) => FieldFormat::Csv,
        Some(Format::Structured) => FieldFormat::Structured,
        None if a
            .out
            .as_ref()
            .is_some_and(|o| o.extension().is_some_and(|e| e == "json")) =>
        {
            FieldFormat::Structured
        }
        None => FieldFormat::Csv,
    };
    let mut body = Vec::new();
    match format {
        FieldFormat::Csv => write_csv(&f, &mut body),
        FieldFormat::Structured => write_structured(&f, &mut body),
    }
    .map_err(field_failure)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match &a.out {
        Some(path) => {
            fs::write(path, &body)?;
            writeln!(out, "points: {}", f.len())?;
            writeln!(out, "skipped: {}", f.skipped.len())?;
            let show = |v: Option<coverage_lab::coverage::CoverageValue<f64>>| match v {
                None => "none".to_string(),
                Some(coverage_lab::coverage::CoverageValue::Bounded(r)) => format!("bounded {r}"),
                Some(v) => v.kind_name().to_string(),
            };
            writeln!(out, "inf_estimate: {}", show(f.inf_estimate))?;
            writeln!(out, "sup_estimate: {}", show(f.sup_estimate))?;
            writeln!(out, "cap: {}", f.cap)?;
            writeln!(out, "out: {}", path.display())?;
        }
        None => out.write_all(&body)?,
    }
    Ok(())
}

fn structure_failure(e: StructureError) -> Failure {
    match e {
        StructureError::Coverage(_) | StructureError::RefinementPoint { .. } => {
            Failure::Query(e.to_string())
        }
        _ => Failure::Spec(e.to_string()),
    }
}

fn cmd_structure(a: StructureArgs) -> Outcome {
    let c = load(&a.common.classifier)?;
    let base = params(
        &c,
        a.common.cap,
        a.common.tol,
        a.common.budget,
        a.common.seed,
    )?;
    let sp = StructureParams {
        probe_count: a.probes,
        cap: base.cap,
        budget: a.common.budget,
        seed: a.common.seed,
    };
    let report = classify_structure(&c, &sp).map_err(structure_failure)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "verdict: {}", report.verdict.name())?;
    match &report.verdict {
        StructureVerdict::RefinedLinear {
            hyperplane, labels, ..
        } => {
            writeln!(
                out,
                "hyperplane_normal: {}",
                fmt_point(&Point::new(hyperplane.normal.clone()).expect("finite"))
            )?;
            writeln!(out, "hyperplane_offset: {}", hyperplane.offset)?;
            writeln!(out, "negative_label: {}", labels.0)?;
            writeln!(out, "positive_label: {}", labels.1)?;
        }
        StructureVerdict::NotRefinedLinear {
            witness,
            label,
            coverage,
            reason,
        } => {
            writeln!(
                out,
                "reason: {}",
                serde_json::to_value(reason)
                    .expect("serializes")
                    .as_str()
                    .unwrap_or("?")
            )?;
            writeln!(out, "witness: {}", fmt_point(witness))?;
            writeln!(out, "witness_label: {label}")?;
            writeln!(out, "witness_coverage: {}", coverage.kind_name())?;
            writeln!(out, "witness_radius_or_cap: {}", radius_or_cap(coverage))?;
        }
        StructureVerdict::TrivialClassifier { label } => writeln!(out, "label: {label}")?,
        StructureVerdict::Inconclusive { reason } => writeln!(out, "reason: {reason}")?,
    }
    writeln!(out, "cap: {}", report.cap)?;
    writeln!(out, "observed_labels: {}", report.observed_labels.join(","))?;
    if let Some(r) = report.fit_residual {
        writeln!(out, "fit_residual: {r}")?;
    }
    if let Some(path) = &a.out {
        fs::write(
            path,
            serde_json::to_string_pretty(&report).expect("serializes") + "\n",
        )?;
        writeln!(out, "out: {}", path.display())?;
    }
    Ok(())
}

fn cmd_refine(a: RefineArgs) -> Outcome {
    let c = load(&a.classifier)?;
    let r = refine_boundary(&c).map_err(structure_failure)?;
    let text = save_spec_string(&r);
    match &a.out {
        Some(path) => {
            fs::write(path, &text)?;
            let stdout = io::stdout();
            let mut out = stdout.lock();
            writeln!(
                out,
                "labels: {}",
                r.labels().keys().cloned().collect::<Vec<_>>().join(",")
            )?;
            writeln!(
                out,
                "refinement_set: {}",
                if r.refinement_set().is_some() {
                    "present"
                } else {
                    "none"
                }
            )?;
            writeln!(out, "out: {}", path.display())?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> Outcome {
    let [first, second] = a.classifier.as_slice() else {
        return Err(Failure::Spec(format!(
            "classifier: compare takes exactly two, got {}",
            a.classifier.len()
        )));
    };
    let first = load(first)?;
    let second = load(second)?;
    if first.dimension() != second.dimension() {
        return Err(Failure::Spec(format!(
            "classifier: second dimension {} differs from {}",
            second.dimension(),
            first.dimension()
        )));
    }
    let set = point_set(&first, &a.points, &a.grid)?;
    let p = params(&first, a.cap, a.tol, a.budget, a.seed)?;
    let report = compare_at(&first, &second, &set, &p).map_err(field_failure)?;
    let show = |v: &coverage_lab::coverage::CoverageValue<f64>| match v {
        coverage_lab::coverage::CoverageValue::Bounded(r) => format!("bounded {r}"),
        v => v.kind_name().to_string(),
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for (i, e) in report.iter().enumerate() {
        if i > 0 {
            writeln!(out)?;
        }
        writeln!(out, "point: {}", fmt_point(&e.point))?;
        match &e.comparison {
            Comparison::Compared {
                first,
                second,
                relation,
            } => {
                writeln!(out, "first: {}", show(first))?;
                writeln!(out, "second: {}", show(second))?;
                writeln!(
                    out,
                    "relation: {}",
                    serde_json::to_value(relation)
                        .expect("serializes")
                        .as_str()
                        .unwrap_or("?")
                )?;
            }
            Comparison::Skipped { reason } => writeln!(out, "skipped: {reason}")?,
        }
    }
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> Outcome {
    if !SUITES.contains(&a.suite.as_str()) {
        return Err(Failure::Spec(format!(
            "suite: unknown suite `{}` (known: {})",
            a.suite,
            SUITES.join(", ")
        )));
    }
    let fx = match &a.fixtures {
        Some(dir) => {
            SuiteFixtures::from_dir(dir).map_err(|e| Failure::Spec(format!("fixtures: {e}")))?
        }
        None => SuiteFixtures::embedded(),
    };
    let ids: Vec<u8> = if a.criterion.is_empty() {
        CRITERIA.collect()
    } else {
        if let Some(bad) = a.criterion.iter().find(|id| !CRITERIA.contains(*id)) {
            return Err(Failure::Spec(format!("criterion: no criterion {bad}")));
        }
        a.criterion.clone()
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut results = Vec::new();
    for id in &ids {
        let r = run_criteria(&[*id], a.seed, &a.suite, &fx);
        let line = r.criteria[0].line();
        writeln!(out, "{line}")?;
        out.flush()?;
        results.extend(r.criteria);
    }
    let report = coverage_lab::verify::VerifyReport {
        suite: a.suite.clone(),
        seed: a.seed,
        passed: results.iter().all(|c| c.passed),
        criteria: results,
    };
    let passed = report.criteria.iter().filter(|c| c.passed).count();
    writeln!(
        out,
        "suite {}: {}/{} passed (seed {})",
        report.suite,
        passed,
        report.criteria.len(),
        report.seed
    )?;
    if let Some(path) = &a.out {
        fs::write(path, report.json())?;
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}
