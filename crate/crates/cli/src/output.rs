//! Serialized views and the json / csv / text renderers.
//!
//! JSON and CSV are stable contracts: complex values are `{re, im}` objects in
//! JSON and `_re` / `_im` column pairs in CSV. Text output is for humans.

use std::io::{self, Write};

use clap::ValueEnum;
use iterfix::bounds::{BoundReport, Flavor, ScanSummary};
use iterfix::dynamics::{classify, FixedPointReport, PeriodicPoint, Stability};
use iterfix::identities::TraceReport;
use iterfix::poly::{format_complex, format_real};
use iterfix::search::SearchResult;
use iterfix::serde_complex;
use iterfix::verify::VerifyReport;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointView {
    #[serde(with = "serde_complex::object")]
    pub location: Complex64,
    #[serde(with = "serde_complex::object")]
    pub multiplier: Complex64,
    pub abs_multiplier: f64,
    pub multiplicity: usize,
    pub exact_period: usize,
    pub cycle_id: usize,
    pub class: Stability,
}

impl PointView {
    pub fn new(pt: &PeriodicPoint, classify_tol: f64) -> Self {
        PointView {
            location: pt.location,
            multiplier: pt.multiplier,
            abs_multiplier: pt.abs_multiplier(),
            multiplicity: pt.multiplicity,
            exact_period: pt.exact_period,
            cycle_id: pt.cycle_id,
            class: classify(pt, classify_tol),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixpointsView {
    pub n: usize,
    pub d: usize,
    pub points: Vec<PointView>,
    pub count_with_multiplicity: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl FixpointsView {
    pub fn new(report: &FixedPointReport, classify_tol: f64) -> Self {
        FixpointsView {
            n: report.n,
            d: report.d,
            points: report
                .points
                .iter()
                .map(|pt| PointView::new(pt, classify_tol))
                .collect(),
            count_with_multiplicity: report.total_count_with_multiplicity,
            warnings: report.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckView {
    pub n: usize,
    pub d: usize,
    pub flavor: Flavor,
    pub threshold: f64,
    pub observed_max: f64,
    pub margin: f64,
    pub witness: PointView,
    pub passed: bool,
}

impl CheckView {
    pub fn new(report: &BoundReport, classify_tol: f64) -> Self {
        CheckView {
            n: report.n,
            d: report.d,
            flavor: report.flavor,
            threshold: report.threshold,
            observed_max: report.observed_max,
            margin: report.margin,
            witness: PointView::new(&report.witness, classify_tol),
            passed: report.passed,
        }
    }
}

fn num(x: f64) -> String {
    format_real(x)
}

fn complex_cols(prefix: &str) -> [String; 2] {
    [format!("{prefix}_re"), format!("{prefix}_im")]
}

fn complex_vals(z: Complex64) -> [String; 2] {
    [num(z.re), num(z.im)]
}

fn write_csv(out: &mut dyn Write, header: Vec<String>, rows: Vec<Vec<String>>) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)
}

fn point_header(prefix: &str) -> Vec<String> {
    let mut h = Vec::new();
    h.extend(complex_cols(&format!("{prefix}location")));
    h.extend(complex_cols(&format!("{prefix}multiplier")));
    for name in ["abs_multiplier", "multiplicity", "exact_period", "cycle_id", "class"] {
        h.push(format!("{prefix}{name}"));
    }
    h
}

fn point_row(p: &PointView) -> Vec<String> {
    let mut r = Vec::new();
    r.extend(complex_vals(p.location));
    r.extend(complex_vals(p.multiplier));
    r.push(num(p.abs_multiplier));
    r.push(p.multiplicity.to_string());
    r.push(p.exact_period.to_string());
    r.push(p.cycle_id.to_string());
    r.push(p.class.as_str().to_string());
    r
}

fn point_text(p: &PointView) -> String {
    format!(
        "z = {}  multiplier = {}  |m| = {}  mult {}  period {}  cycle {}  {}",
        format_complex(p.location),
        format_complex(p.multiplier),
        p.abs_multiplier,
        p.multiplicity,
        p.exact_period,
        p.cycle_id,
        p.class.as_str()
    )
}

pub fn fixpoints(out: &mut dyn Write, v: &FixpointsView, format: Format) -> io::Result<()> {
    match format {
        Format::Json => write_json(out, v),
        Format::Csv => {
            let mut header = vec!["n".to_string(), "d".to_string()];
            header.extend(point_header(""));
            let rows = v
                .points
                .iter()
                .map(|p| {
                    let mut r = vec![v.n.to_string(), v.d.to_string()];
                    r.extend(point_row(p));
                    r
                })
                .collect();
            write_csv(out, header, rows)
        }
        Format::Text => {
            writeln!(
                out,
                "fixed points of p^{} (d = {}): {} distinct, {} with multiplicity",
                v.n,
                v.d,
                v.points.len(),
                v.count_with_multiplicity
            )?;
            for p in &v.points {
                writeln!(out, "  {}", point_text(p))?;
            }
            for w in &v.warnings {
                writeln!(out, "  warning: {w}")?;
            }
            Ok(())
        }
    }
}

pub fn trace(out: &mut dyn Write, r: &TraceReport, format: Format) -> io::Result<()> {
    match format {
        Format::Json => write_json(out, r),
        Format::Csv => {
            let mut header = vec!["n".to_string(), "d".to_string()];
            let mut row = vec![r.n.to_string(), r.d.to_string()];
            for (name, z) in [("c", r.c), ("lhs", r.lhs), ("rhs", r.rhs)] {
                header.extend(complex_cols(name));
                row.extend(complex_vals(z));
            }
            for (name, x) in [
                ("abs_residual", r.abs_residual),
                ("rel_residual", r.rel_residual),
                ("c_spread", r.c_spread),
            ] {
                header.push(name.to_string());
                row.push(num(x));
            }
            for (k, &w) in r.w_samples.iter().enumerate() {
                header.extend(complex_cols(&format!("w{k}")));
                row.extend(complex_vals(w));
            }
            write_csv(out, header, vec![row])
        }
        Format::Text => {
            writeln!(out, "trace identity for p^{} (d = {})", r.n, r.d)?;
            writeln!(
                out,
                "  c            = {}  (spread {:e})",
                format_complex(r.c),
                r.c_spread
            )?;
            writeln!(out, "  lhs          = {}", format_complex(r.lhs))?;
            writeln!(out, "  rhs          = {}", format_complex(r.rhs))?;
            writeln!(out, "  abs_residual = {:e}", r.abs_residual)?;
            writeln!(out, "  rel_residual = {:e}", r.rel_residual)
        }
    }
}

pub fn check(out: &mut dyn Write, v: &CheckView, format: Format) -> io::Result<()> {
    match format {
        Format::Json => write_json(out, v),
        Format::Csv => {
            let mut header: Vec<String> = ["n", "d", "flavor", "threshold", "observed_max", "margin", "passed"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            header.extend(point_header("witness_"));
            let mut row = vec![
                v.n.to_string(),
                v.d.to_string(),
                v.flavor.as_str().to_string(),
                num(v.threshold),
                num(v.observed_max),
                num(v.margin),
                v.passed.to_string(),
            ];
            row.extend(point_row(&v.witness));
            write_csv(out, header, vec![row])
        }
        Format::Text => {
            writeln!(
                out,
                "{}: M_{}(p) = {} against threshold {} (margin {:e}) for d = {}",
                if v.passed { "PASS" } else { "VIOLATION" },
                v.n,
                v.observed_max,
                v.threshold,
                v.margin,
                v.d
            )?;
            writeln!(out, "  witness {}", point_text(&v.witness))
        }
    }
}

pub fn scan(out: &mut dyn Write, s: &ScanSummary, format: Format) -> io::Result<()> {
    match format {
        Format::Json => write_json(out, s),
        Format::Csv => {
            let header = [
                "d",
                "n",
                "flavor",
                "threshold",
                "seed",
                "sample_count",
                "skipped",
                "coefficient_radius",
                "measure",
                "min_observed_max",
                "argmin_index",
                "argmin",
                "violations",
                "unconfirmed_candidates",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            let f = &s.family;
            let row = vec![
                f.d.to_string(),
                f.n.to_string(),
                f.flavor.as_str().to_string(),
                num(f.threshold),
                s.seed.to_string(),
                s.sample_count.to_string(),
                s.skipped.to_string(),
                num(f.measure.coefficient_radius),
                f.measure.description.clone(),
                num(s.min_observed_max),
                s.argmin_index.map(|i| i.to_string()).unwrap_or_default(),
                s.argmin.as_ref().map(|p| p.to_string()).unwrap_or_default(),
                s.violations.len().to_string(),
                s.unconfirmed_candidates.len().to_string(),
            ];
            write_csv(out, header, vec![row])
        }
        Format::Text => {
            let f = &s.family;
            writeln!(
                out,
                "scan d = {}, n = {}, flavor {} (threshold {}), seed {}",
                f.d, f.n, f.flavor, f.threshold, s.seed
            )?;
            writeln!(out, "  measure: {}", f.measure.description)?;
            writeln!(out, "  samples {}, skipped {}", s.sample_count, s.skipped)?;
            match (&s.argmin, s.argmin_index) {
                (Some(p), Some(i)) => writeln!(out, "  min M_n = {} at sample {i}: {p}", s.min_observed_max)?,
                _ => writeln!(out, "  min M_n = none (no samples)")?,
            }
            writeln!(
                out,
                "  violations {}, unconfirmed candidates {}",
                s.violations.len(),
                s.unconfirmed_candidates.len()
            )?;
            for v in &s.violations {
                writeln!(
                    out,
                    "  VIOLATION sample {}: M_n = {} for {}",
                    v.index, v.report.observed_max, v.polynomial
                )?;
            }
            Ok(())
        }
    }
}

pub fn search(out: &mut dyn Write, r: &SearchResult, format: Format) -> io::Result<()> {
    match format {
        Format::Json => write_json(out, r),
        Format::Csv => {
            let mut header: Vec<String> = [
                "d",
                "n",
                "flavor",
                "seed",
                "starts",
                "iters_per_start",
                "best_value",
                "best_start",
                "evaluations",
                "conjecture_floor",
                "respects_floor",
                "best_polynomial",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            let c = &r.config;
            let mut row = vec![
                c.d.to_string(),
                c.n.to_string(),
                c.flavor.as_str().to_string(),
                c.seed.to_string(),
                c.starts.to_string(),
                c.iters_per_start.to_string(),
                num(r.best_value),
                r.best_start.to_string(),
                r.evaluations.to_string(),
                num(r.conjecture_floor),
                r.respects_floor.to_string(),
                r.best_polynomial.to_string(),
            ];
            for (k, x) in r.best_params.iter().enumerate() {
                header.push(format!("param{k}"));
                row.push(num(*x));
            }
            write_csv(out, header, vec![row])
        }
        Format::Text => {
            let c = &r.config;
            writeln!(
                out,
                "search d = {}, n = {}, {} starts x {} iterations, seed {}",
                c.d, c.n, c.starts, c.iters_per_start, c.seed
            )?;
            writeln!(
                out,
                "  best M_n = {} (start {}, {} evaluations)",
                r.best_value, r.best_start, r.evaluations
            )?;
            writeln!(out, "  at p = {}", r.best_polynomial)?;
            writeln!(
                out,
                "  floor {} ({}): {}",
                r.conjecture_floor,
                c.flavor,
                if r.respects_floor { "respected" } else { "NOT respected" }
            )
        }
    }
}

pub fn verify(out: &mut dyn Write, r: &VerifyReport, format: Format) -> io::Result<()> {
    match format {
        Format::Json => write_json(out, r),
        Format::Csv => {
            let header = ["name", "samples", "worst", "tolerance", "errors", "passed"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            let rows = r
                .checks
                .iter()
                .map(|c| {
                    vec![
                        c.name.clone(),
                        c.samples.to_string(),
                        num(c.worst),
                        num(c.tolerance),
                        c.errors.to_string(),
                        c.passed.to_string(),
                    ]
                })
                .collect();
            write_csv(out, header, rows)
        }
        Format::Text => {
            for c in &r.checks {
                writeln!(
                    out,
                    "{} {}: samples {}, worst {:e}, tolerance {:e}, errors {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.samples,
                    c.worst,
                    c.tolerance,
                    c.errors
                )?;
            }
            writeln!(
                out,
                "suite {} seed {}: {}",
                r.suite,
                r.seed,
                if r.passed { "all checks passed" } else { "FAILED" }
            )
        }
    }
}
