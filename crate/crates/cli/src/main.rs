//! `cdt`: find, certify and audit canonical-duality critical points.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0    | success (all audit checks pass) |
//! | 1    | an audit check failed, or another runtime error |
//! | 2    | malformed problem file or bad argument |
//! | 3    | the critical-point search found nothing |
//! | 4    | branch guard exceeded, or oracle called with n > 2 |
//! | 64   | unknown audit name |

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod tokens;

use std::path::Path;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cdt_core::audit::{oracle_min, run_audit, AuditParams, Grid};
use cdt_core::problem::{example1, msgao, parse_problem, IndexSet, MsGaoParams, Problem};
use cdt_core::report::{render_audit, render_oracle, render_solve, Format, PointRecord, SolveReport};
use cdt_core::scalar::{validate_legendre, LegendreRegistry};
use cdt_core::solver::{certify_global, find_critical_points, perfect_duality_check, SolverConfig};
use cdt_core::CdtError;

const EXIT_FAIL: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_NO_CONVERGENCE: u8 = 3;
const EXIT_GUARD: u8 = 4;
const EXIT_USAGE: u8 = 64;

const PERFECT_DUALITY_TOL: f64 = 1e-8;
const LEGENDRE_SAMPLES: usize = 256;

#[derive(Parser, Debug)]
#[command(name = "cdt", version, about = "Canonical duality: critical points, certificates and audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Find and classify all critical points of Ξ and certify global optimality.
    Solve {
        /// Built-in name (`example1`, `msgao`) or path to a problem file.
        problem: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run a built-in checklist (`example1`, `msgao`).
    Audit {
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Brute-force grid minimum for n ≤ 2.
    Oracle {
        problem: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, Default)]
enum OutFormat {
    #[default]
    Text,
    Structured,
}

#[derive(Args, Debug)]
struct Common {
    /// Equality indices, comma separated (`1,2`); `none` for the empty set.
    #[arg(long = "J", value_name = "INDICES")]
    j: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    multistarts: Option<usize>,
    /// Box `LO,HI` applied to every coordinate.
    #[arg(long = "box", value_name = "LO,HI", allow_hyphen_values = true)]
    bounds: Option<String>,
    #[arg(long = "tol-feas")]
    tol_feas: Option<f64>,
    #[arg(long = "tol-res")]
    tol_res: Option<f64>,
    /// Grid steps per axis for the oracle.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    r: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<String>,
    #[arg(long, value_enum, default_value_t = OutFormat::Text)]
    format: OutFormat,
}

/// An error together with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<CdtError> for Failure {
    fn from(e: CdtError) -> Self {
        let code = match &e {
            CdtError::Parse { .. } | CdtError::InvalidFunction { .. } | CdtError::InvalidProblem(_) => EXIT_PARSE,
            CdtError::InvalidParameter(_) => EXIT_PARSE,
            CdtError::GuardExceeded { .. } | CdtError::OracleDimension { .. } => EXIT_GUARD,
            CdtError::UnknownAudit(_) => EXIT_USAGE,
            _ => EXIT_FAIL,
        };
        Failure::new(code, e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

impl Common {
    fn format(&self) -> Format {
        match self.format {
            OutFormat::Text => Format::Text,
            OutFormat::Structured => Format::Structured,
        }
    }

    fn bounds(&self) -> CliResult<Option<(f64, f64)>> {
        let Some(s) = &self.bounds else {
            return Ok(None);
        };
        let parts: Vec<&str> = s.split(',').collect();
        let [lo, hi] = parts.as_slice() else {
            return Err(Failure::new(EXIT_PARSE, format!("--box expects LO,HI, got `{s}`")));
        };
        let lo = tokens::parse_real(lo).map_err(|e| Failure::new(EXIT_PARSE, format!("--box: {e}")))?;
        let hi = tokens::parse_real(hi).map_err(|e| Failure::new(EXIT_PARSE, format!("--box: {e}")))?;
        if !(lo < hi) {
            return Err(Failure::new(EXIT_PARSE, format!("--box needs LO < HI, got `{s}`")));
        }
        Ok(Some((lo, hi)))
    }

    fn j_override(&self) -> CliResult<Option<IndexSet>> {
        self.j
            .as_deref()
            .map(tokens::parse_index_set)
            .transpose()
            .map_err(|e| Failure::new(EXIT_PARSE, format!("--J: {e}")))
    }

    fn msgao_params(&self) -> CliResult<MsGaoParams> {
        let mut p = MsGaoParams::default();
        let fields = [
            ("gamma", &self.gamma, &mut p.gamma),
            ("alpha", &self.alpha, &mut p.alpha),
            ("eta", &self.eta, &mut p.eta),
            ("r", &self.r, &mut p.r),
            ("c", &self.c, &mut p.c),
        ];
        for (name, raw, slot) in fields {
            if let Some(raw) = raw {
                *slot = tokens::parse_real(raw).map_err(|e| Failure::new(EXIT_PARSE, format!("--{name}: {e}")))?;
            }
        }
        Ok(p)
    }

    fn solver_config(&self) -> CliResult<SolverConfig> {
        let mut cfg = SolverConfig {
            seed: self.seed,
            ..SolverConfig::default()
        };
        if let Some(m) = self.multistarts {
            cfg.multistarts = m;
        }
        if let Some((lo, hi)) = self.bounds()? {
            cfg.box_lo = lo;
            cfg.box_hi = hi;
        }
        if let Some(t) = self.tol_feas {
            cfg.feas_tol = t;
        }
        if let Some(t) = self.tol_res {
            cfg.classify_tol = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load_problem(spec: &str, common: &Common) -> CliResult<Problem> {
    let problem = match spec {
        "example1" => example1(),
        "msgao" => msgao(common.msgao_params()?)?,
        path => {
            let text = std::fs::read_to_string(Path::new(path))
                .map_err(|e| Failure::new(EXIT_PARSE, format!("cannot read `{path}`: {e}")))?;
            let registry = LegendreRegistry::with_builtins();
            let problem = parse_problem(&text, &registry).map_err(|e| match e {
                CdtError::Parse { location, message } => {
                    Failure::new(EXIT_PARSE, format!("{path}: parse error at {location}: {message}"))
                }
                other => Failure::from(other),
            })?;
            for (k, term) in problem.terms().iter().enumerate() {
                if term.is_quadratic {
                    continue;
                }
                let v = validate_legendre(&term.v, LEGENDRE_SAMPLES, common.seed)?;
                if !v.pass {
                    return Err(Failure::new(
                        EXIT_PARSE,
                        format!(
                            "{path}: V_{k} ({}) fails the Legendre check (Fenchel-Young residual {:.3e})",
                            v.label, v.max_fenchel_young_rel
                        ),
                    ));
                }
            }
            problem
        }
    };
    Ok(match common.j_override()? {
        Some(j) => problem.with_j(j)?,
        None => problem,
    })
}

fn cmd_solve(spec: &str, common: &Common) -> CliResult<String> {
    let problem = load_problem(spec, common)?;
    let cfg = common.solver_config()?;
    let j = problem.j().clone();
    let search = find_critical_points(&problem, &j, &cfg)?;
    let mut records = Vec::with_capacity(search.points.len());
    for cp in search.points {
        let certificate = certify_global(&problem, &j, &cp, cfg.classify_tol, cfg.feas_tol)?;
        let duality = perfect_duality_check(&problem, &cp, PERFECT_DUALITY_TOL).ok();
        records.push(PointRecord {
            point: cp,
            certificate,
            duality,
        });
    }
    let report = SolveReport {
        name: spec.to_string(),
        j,
        m: problem.m(),
        diagnostics: search.diagnostics,
        records,
    };
    let out = render_solve(&report, common.format());
    if report.records.is_empty() {
        print!("{out}");
        return Err(Failure::new(EXIT_NO_CONVERGENCE, "no critical point found"));
    }
    Ok(out)
}

fn cmd_audit(name: &str, common: &Common) -> CliResult<String> {
    let params = AuditParams {
        solver: common.solver_config()?,
        msgao: common.msgao_params()?,
        oracle_steps: common.steps,
    };
    let report = run_audit(name, &params).map_err(|e| match e {
        CdtError::UnknownAudit(n) => Failure::new(
            EXIT_USAGE,
            format!("unknown audit `{n}`; expected one of: example1, msgao"),
        ),
        other => Failure::from(other),
    })?;
    let out = render_audit(&report, common.format());
    if let Some(f) = report.first_failure() {
        print!("{out}");
        return Err(Failure::new(EXIT_FAIL, format!("audit check `{}` failed", f.id)));
    }
    Ok(out)
}

fn cmd_oracle(spec: &str, common: &Common) -> CliResult<String> {
    let problem = load_problem(spec, common)?;
    let mut grid = Grid::default_for(problem.n());
    if let Some((lo, hi)) = common.bounds()? {
        grid.lo = lo;
        grid.hi = hi;
    }
    if let Some(s) = common.steps {
        grid.steps = s;
    }
    let j = problem.j().clone();
    let o = oracle_min(&problem, &j, grid, None).map_err(|e| match e {
        CdtError::OracleDimension { .. } => Failure::new(EXIT_GUARD, "oracle limited to n≤2"),
        other => Failure::from(other),
    })?;
    Ok(render_oracle(spec, &j, &problem, &o, common.format()))
}

fn configure_threads() {
    let Ok(raw) = std::env::var("CDT_AUDIT_THREADS") else {
        return;
    };
    match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size the thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring CDT_AUDIT_THREADS={raw}"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    configure_threads();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve { problem, common } => cmd_solve(problem, common),
        Command::Audit { name, common } => cmd_audit(name, common),
        Command::Oracle { problem, common } => cmd_oracle(problem, common),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
