//! `iterfix`: fixed points, multipliers and bound checks from the command line.
//!
//! Exit codes: 0 success, 1 violation or suite failure, 2 input error,
//! 3 numerical failure. `ITERFIX_THREADS` caps the worker pool.

mod output;

use std::io::{self, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use iterfix::bounds::{check_conjecture, reverification_config, scan_family, Flavor};
use iterfix::dynamics::{fixed_points, DynamicsConfig};
use iterfix::identities::{check_trace_identity_with_tol, default_w_samples, C_AGREEMENT_TOL};
use iterfix::poly::parse_complex_list;
use iterfix::search::{minimize, SearchConfig};
use iterfix::verify::{run_suite, Suite};
use iterfix::{Error, Execution, Polynomial};

use output::{CheckView, FixpointsView, Format};

const EXIT_VIOLATION: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Largest relative residual at which the trace identity counts as holding.
const TRACE_TOL: f64 = 1e-6;

#[derive(Parser)]
#[command(
    name = "iterfix",
    version,
    about = "Fixed points and multipliers of iterated complex polynomials"
)]
struct Cli {
    /// Output format; json and csv are stable, text is for reading.
    #[arg(long, value_enum, default_value = "json", global = true)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fixed points of p^n with multipliers, multiplicities and cycles.
    Fixpoints {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        tol: Tolerances,
    },
    /// Check the trace identity sum (p^n)' = d^n (d^n - 1) + c^n.
    Trace {
        #[command(flatten)]
        target: Target,
        /// Comma-separated w samples for the preimage sum c.
        #[arg(long, default_value = "0,1+1i,-2")]
        w: String,
        /// Largest allowed spread of c across the w samples.
        #[arg(long, default_value_t = C_AGREEMENT_TOL)]
        c_tol: f64,
        #[command(flatten)]
        tol: Tolerances,
    },
    /// Compare M_n(p) with a lower bound.
    Check {
        /// Polynomial as a constant-first comma list, e.g. "-1,0,1" for z^2 - 1.
        #[arg(long, allow_hyphen_values = true)]
        poly: String,
        /// Iterate order (theorem3 requires 2).
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// theorem3 (threshold 4), B (2^n) or C (d^n).
        #[arg(long, default_value = "theorem3")]
        flavor: Flavor,
        #[command(flatten)]
        tol: Tolerances,
    },
    /// Check random monic centered polynomials against a bound.
    Scan {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value = "C")]
        flavor: Flavor,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        tol: Tolerances,
    },
    /// Multi-start Nelder-Mead minimisation of M_n over monic centered polynomials.
    Search {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 64)]
        starts: usize,
        /// Nelder-Mead iterations per start.
        #[arg(long, default_value_t = 400)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Floor the result is compared against.
        #[arg(long, default_value = "C")]
        flavor: Flavor,
        /// Edge length of the initial simplex.
        #[arg(long, default_value_t = 0.3)]
        simplex_scale: f64,
        /// Stop a start once the simplex diameter is below this.
        #[arg(long, default_value_t = 1e-7)]
        objective_tol: f64,
        /// Starts are drawn uniformly from the polydisk of this radius.
        #[arg(long, default_value_t = 2.0)]
        domain_radius: f64,
        #[command(flatten)]
        tol: Tolerances,
    },
    /// Run built-in invariant suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        tol: Tolerances,
    },
}

#[derive(Args)]
struct Target {
    /// Polynomial as a constant-first comma list, e.g. "-1,0,1" for z^2 - 1.
    #[arg(long, allow_hyphen_values = true)]
    poly: String,
    /// Iterate order.
    #[arg(long)]
    n: usize,
}

/// Overrides of the numerical defaults.
#[derive(Args)]
struct Tolerances {
    /// Root-finder relative residual threshold [default: 1e-12].
    #[arg(long)]
    residual_tol: Option<f64>,
    /// Roots closer than this are merged into one cluster [default: 1e-6].
    #[arg(long)]
    cluster_radius: Option<f64>,
    /// Aberth sweeps before the perturbed restart [default: 200].
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Newton steps on each root after Aberth [default: 3].
    #[arg(long)]
    polish_steps: Option<usize>,
    /// Relative scaling of the restart guesses [default: 1e-3].
    #[arg(long)]
    restart_perturbation: Option<f64>,
    /// Cycle matching tolerance [default: 1e-8].
    #[arg(long)]
    fixpoint_tol: Option<f64>,
    /// Band around |multiplier| = 1 counted as indifferent [default: 1e-9].
    #[arg(long)]
    classify_tol: Option<f64>,
    /// Largest |multiplier - 1| accepted at a multiple point [default: 1e-4].
    #[arg(long)]
    parabolic_tol: Option<f64>,
    /// Largest degree d^n to expand [default: 4096].
    #[arg(long)]
    max_degree: Option<usize>,
}

impl Tolerances {
    fn config(&self) -> Result<DynamicsConfig, Failure> {
        let mut cfg = DynamicsConfig::default();
        let r = &mut cfg.roots;
        r.residual_tol = self.residual_tol.unwrap_or(r.residual_tol);
        r.cluster_radius = self.cluster_radius.unwrap_or(r.cluster_radius);
        r.max_iterations = self.max_iterations.unwrap_or(r.max_iterations);
        r.newton_polish_steps = self.polish_steps.unwrap_or(r.newton_polish_steps);
        r.restart_perturbation = self.restart_perturbation.unwrap_or(r.restart_perturbation);
        cfg.fixpoint_tol = self.fixpoint_tol.unwrap_or(cfg.fixpoint_tol);
        cfg.classify_tol = self.classify_tol.unwrap_or(cfg.classify_tol);
        cfg.parabolic_tol = self.parabolic_tol.unwrap_or(cfg.parabolic_tol);
        cfg.max_degree = self.max_degree.unwrap_or(cfg.max_degree);
        cfg.roots.validate().map_err(Failure::from)?;
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !(positive(cfg.fixpoint_tol) && positive(cfg.classify_tol) && positive(cfg.parabolic_tol)) {
            return Err(Failure::input("tolerances must be positive and finite"));
        }
        Ok(cfg)
    }
}

/// A diagnostic for standard error and the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_INPUT },
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: format!("cannot write output: {e}"),
        }
    }
}

fn parse_poly(text: &str) -> Result<Polynomial, Failure> {
    let p: Polynomial = text.parse()?;
    if p.degree() < 2 {
        return Err(Error::DegreeTooLow(p.degree()).into());
    }
    Ok(p)
}

fn positive_n(n: usize) -> Result<usize, Failure> {
    if n == 0 {
        return Err(Failure::input("n must be at least 1"));
    }
    Ok(n)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("ITERFIX_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::input(format!("ITERFIX_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::input(format!("cannot build thread pool: {e}")))
}

/// Writes the report and returns the exit code for a completed run.
fn run(cli: Cli, out: &mut dyn Write) -> Result<u8, Failure> {
    let format = cli.format;
    let exec = Execution::Parallel;
    match cli.command {
        Command::Fixpoints { target, tol } => {
            let cfg = tol.config()?;
            let p = parse_poly(&target.poly)?;
            let report = fixed_points(&p, positive_n(target.n)?, &cfg)?;
            output::fixpoints(out, &FixpointsView::new(&report, cfg.classify_tol), format)?;
            Ok(0)
        }
        Command::Trace { target, w, c_tol, tol } => {
            let cfg = tol.config()?;
            let p = parse_poly(&target.poly)?;
            let w_samples = if w.trim().is_empty() {
                default_w_samples()
            } else {
                parse_complex_list(&w)?
            };
            if c_tol.is_nan() || c_tol <= 0.0 {
                return Err(Failure::input("c-tol must be positive"));
            }
            let report = check_trace_identity_with_tol(&p, positive_n(target.n)?, &w_samples, &cfg, c_tol)?;
            output::trace(out, &report, format)?;
            Ok(if report.rel_residual < TRACE_TOL {
                0
            } else {
                EXIT_VIOLATION
            })
        }
        Command::Check { poly, n, flavor, tol } => {
            let cfg = tol.config()?;
            let p = parse_poly(&poly)?;
            let report = check_conjecture(&p, positive_n(n)?, flavor, &cfg)?;
            output::check(out, &CheckView::new(&report, cfg.classify_tol), format)?;
            Ok(if report.passed { 0 } else { EXIT_VIOLATION })
        }
        Command::Scan {
            d,
            n,
            flavor,
            samples,
            seed,
            tol,
        } => {
            let cfg = tol.config()?;
            let summary = scan_family(d, positive_n(n)?, flavor, samples, seed, &cfg, exec)?;
            output::scan(out, &summary, format)?;
            Ok(if summary.violations.is_empty() {
                0
            } else {
                EXIT_VIOLATION
            })
        }
        Command::Search {
            d,
            n,
            starts,
            iters,
            seed,
            flavor,
            simplex_scale,
            objective_tol,
            domain_radius,
            tol,
        } => {
            let mut cfg = SearchConfig::new(d, n, seed);
            cfg.starts = starts;
            cfg.iters_per_start = iters;
            cfg.flavor = flavor;
            cfg.simplex_init_scale = simplex_scale;
            cfg.objective_tol = objective_tol;
            cfg.domain_radius = domain_radius;
            cfg.dynamics = tol.config()?;
            let result = minimize(&cfg, exec)?;
            output::search(out, &result, format)?;
            if result.respects_floor {
                return Ok(0);
            }
            let tight = reverification_config(&cfg.dynamics).roots;
            eprintln!(
                "candidate below the floor {} (best {}); re-verify with:\n  iterfix check --poly \"{}\" --n {} --flavor {} --residual-tol {:e} --polish-steps {}",
                result.conjecture_floor,
                result.best_value,
                result.best_polynomial,
                n,
                flavor,
                tight.residual_tol,
                tight.newton_polish_steps
            );
            Ok(EXIT_VIOLATION)
        }
        Command::Verify { suite, seed, tol } => {
            let cfg = tol.config()?;
            let report = run_suite(suite, seed, &cfg, exec);
            output::verify(out, &report, format)?;
            Ok(if report.passed { 0 } else { EXIT_VIOLATION })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|()| {
        let stdout = io::stdout();
        let mut out = stdout.lock();
        let code = run(cli, &mut out)?;
        out.flush()?;
        Ok(code)
    });
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
