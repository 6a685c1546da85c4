//! Brute-force oracle, probes of the dual function, and the canned
//! counterexample checklists.

use std::fmt;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::dual::{dual_gradients, dual_value, membership, DualPoint, PD_TOL};
use crate::error::{CdtError, Result};
use crate::problem::{example1, msgao, IndexSet, MsGaoParams, Problem, ProblemFamily};
use crate::solver::{
    certify_global, find_critical_points, perfect_duality_check, CriticalPoint, HistoricalTheorem, SolverConfig,
    Verdict,
};

// ---------------------------------------------------------------------------
// Oracle

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Grid {
    pub fn default_for(n: usize) -> Self {
        Self {
            lo: -4.0,
            hi: 4.0,
            steps: if n <= 1 { 100_000 } else { 1_000 },
        }
    }

    fn h(&self) -> f64 {
        (self.hi - self.lo) / self.steps as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Polished minimizer.
    pub argmin: DVector<f64>,
    pub minvalue: f64,
    /// Best accepted grid node and its value.
    pub grid_argmin: DVector<f64>,
    pub grid_minvalue: f64,
    pub grid: Grid,
    /// `None` for the adaptive band `2 · slope · step`.
    pub eq_band: Option<f64>,
    pub feasible_nodes: usize,
}

/// `(value, row, column)`
type Best = (f64, usize, usize);

/// Best accepted node of a regular grid with `count` nodes per axis from `lo`:
/// inequalities `g_j ≤ 0`, equalities `|g_j| ≤ band`. Without a fixed band the
/// width is twice the largest change of `g_j` to a grid neighbour. Ties go to
/// the lexicographically smallest node.
fn scan(
    problem: &Problem,
    j: &IndexSet,
    lo: &[f64],
    h: f64,
    count: usize,
    band: Option<f64>,
) -> (Option<(f64, DVector<f64>)>, usize) {
    let n = problem.n();
    let m = problem.m();
    let inner = if n == 2 { count } else { 1 };
    let node = |i: usize, k: usize| {
        let mut x = DVector::zeros(n);
        x[0] = lo[0] + i as f64 * h;
        if n == 2 {
            x[1] = lo[1] + k as f64 * h;
        }
        x
    };
    // g_1..g_m at every node, row-major; NaN marks a domain exit
    let gs: Vec<f64> = (0..count)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut row = Vec::with_capacity(inner * m);
            for k in 0..inner {
                let x = node(i, k);
                row.extend((1..=m).map(|c| problem.eval_g(c, &x).unwrap_or(f64::NAN)));
            }
            row
        })
        .collect();
    let at = |i: usize, k: usize, c: usize| gs[(i * inner + k) * m + c - 1];
    let accepted = |i: usize, k: usize| -> bool {
        for c in 1..=m {
            let g = at(i, k, c);
            if g.is_nan() {
                return false;
            }
            if !j.contains(c) {
                if g > 0.0 {
                    return false;
                }
                continue;
            }
            let width = band.unwrap_or_else(|| {
                let mut nb = Vec::with_capacity(4);
                if i > 0 {
                    nb.push(at(i - 1, k, c));
                }
                if i + 1 < count {
                    nb.push(at(i + 1, k, c));
                }
                if n == 2 {
                    if k > 0 {
                        nb.push(at(i, k - 1, c));
                    }
                    if k + 1 < inner {
                        nb.push(at(i, k + 1, c));
                    }
                }
                2.0 * nb.iter().filter(|v| !v.is_nan()).fold(0.0_f64, |a, v| a.max((v - g).abs()))
            });
            if g.abs() > width {
                return false;
            }
        }
        true
    };
    let rows: Vec<(Option<Best>, usize)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut best: Option<(f64, usize, usize)> = None;
            let mut hits = 0;
            for k in 0..inner {
                if !accepted(i, k) {
                    continue;
                }
                if let Ok(v) = problem.objective(&node(i, k)) {
                    hits += 1;
                    if best.is_none_or(|(b, _, _)| v < b) {
                        best = Some((v, i, k));
                    }
                }
            }
            (best, hits)
        })
        .collect();
    let mut best: Option<(f64, usize, usize)> = None;
    let mut hits = 0;
    for (b, c) in rows {
        hits += c;
        if let Some(cand) = b {
            if best.is_none_or(|(v, _, _)| cand.0 < v) {
                best = Some(cand);
            }
        }
    }
    (best.map(|(v, i, k)| (v, node(i, k))), hits)
}

fn bisect_root(problem: &Problem, k: usize, a: f64, b: f64) -> Option<f64> {
    let g = |t: f64| problem.eval_g(k, &DVector::from_element(1, t)).ok();
    let (mut a, mut b) = (a, b);
    let (mut ga, gb) = (g(a)?, g(b)?);
    if ga == 0.0 {
        return Some(a);
    }
    if gb == 0.0 {
        return Some(b);
    }
    if ga.signum() == gb.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let gm = g(mid)?;
        if gm == 0.0 {
            return Some(mid);
        }
        if gm.signum() == ga.signum() {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    Some(0.5 * (a + b))
}

pub fn oracle_min(problem: &Problem, j: &IndexSet, grid: Grid, eq_band: Option<f64>) -> Result<OracleResult> {
    let n = problem.n();
    if n > 2 {
        return Err(CdtError::OracleDimension { n });
    }
    if grid.steps == 0 || !(grid.lo < grid.hi) {
        return Err(CdtError::InvalidParameter(format!("bad grid {grid:?}")));
    }
    let h = grid.h();
    let lo = vec![grid.lo; n];
    let (best, feasible_nodes) = scan(problem, j, &lo, h, grid.steps + 1, eq_band);
    let (grid_minvalue, grid_argmin) = best.ok_or(CdtError::InfeasibleOnGrid)?;

    let mut argmin = grid_argmin.clone();
    let mut minvalue = grid_minvalue;
    let mut polished = false;
    if n == 1 {
        if let Some(k) = j.iter().next() {
            let t = argmin[0];
            let root = bisect_root(problem, k, t - h, t).or_else(|| bisect_root(problem, k, t, t + h));
            if let Some(r) = root {
                let x = DVector::from_element(1, r);
                let ok = problem
                    .feasible_for(&x, j, crate::problem::DEFAULT_FEASIBILITY_TOL)
                    .feasible;
                if let (true, Ok(v)) = (ok, problem.objective(&x)) {
                    argmin = x;
                    minvalue = v;
                    polished = true;
                }
            }
        }
    }
    if !polished {
        let mut width = h;
        for _ in 0..6 {
            let sub = 4.0 * width / 100.0;
            let lo: Vec<f64> = argmin.iter().map(|c| c - 2.0 * width).collect();
            match scan(problem, j, &lo, sub, 101, eq_band).0 {
                Some((v, x)) => {
                    argmin = x;
                    minvalue = v;
                }
                None => break,
            }
            width = sub;
        }
    }
    Ok(OracleResult {
        argmin,
        minvalue,
        grid_argmin,
        grid_minvalue,
        grid,
        eq_band,
        feasible_nodes,
    })
}

// ---------------------------------------------------------------------------
// Unboundedness along a μ-ray

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceVerdict {
    Diverges,
    BoundedOnSamples,
    LeftDomain,
}

impl fmt::Display for DivergenceVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DivergenceVerdict::Diverges => "DIVERGES",
            DivergenceVerdict::BoundedOnSamples => "BOUNDED_ON_SAMPLES",
            DivergenceVerdict::LeftDomain => "LEFT_DOMAIN",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceSample {
    pub mu: f64,
    /// `None` when `G` is singular there.
    pub value: Option<f64>,
    pub in_t_plus: bool,
    /// `I + λA ≻ 0` and `(1+μς)(I+λA) − I ≻ 0`, without the domain condition.
    pub sa_plus_conditions: bool,
    /// `ς ∈ [−αη, ∞)`
    pub in_declared_domain: bool,
    /// `ς ∈ dom V₂*`
    pub in_conj_domain: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceReport {
    pub lambda_bar: f64,
    pub sigma_tilde: f64,
    /// `ς̃³ + 2ς̃² + γ²`
    pub nu: f64,
    pub samples: Vec<DivergenceSample>,
    pub verdict: DivergenceVerdict,
}

pub const DIVERGENCE_THRESHOLD: f64 = 1e6;
const MONOTONE_TAIL: usize = 5;

/// `D(λ̄, μ, ς̃)` for `μ` in `mu_schedule`, on the two-block instance.
pub fn probe_unboundedness(
    problem: &Problem,
    base: &DualPoint,
    sigma_tilde: f64,
    mu_schedule: &[f64],
) -> Result<DivergenceReport> {
    let ProblemFamily::MsGao(params) = problem.family() else {
        return Err(CdtError::NotApplicable("unboundedness probe needs the msgao instance".into()));
    };
    let lambda_bar = base.lambda()[0];
    let gamma = params.gamma;
    let nu = sigma_tilde.powi(3) + 2.0 * sigma_tilde.powi(2) + gamma * gamma;
    let a = problem.term(1).q.a()[(0, 0)];
    let in_declared_domain = sigma_tilde >= -params.alpha * params.eta;
    let in_conj_domain = problem.term(2).v.conj_dom().contains(sigma_tilde);
    let mut samples = Vec::with_capacity(mu_schedule.len());
    for &mu in mu_schedule {
        let dp = DualPoint::from_slices(problem, &[lambda_bar, mu], &[0.0, 0.0, sigma_tilde])?;
        let ia = 1.0 + lambda_bar * a;
        let p = (1.0 + mu * sigma_tilde) * ia - 1.0;
        let value = if dp.is_nonsingular() && in_conj_domain {
            dual_value(problem, &dp).ok()
        } else {
            None
        };
        let mv = membership(problem, &dp, problem.j());
        samples.push(DivergenceSample {
            mu,
            value,
            in_t_plus: mv.in_t_plus,
            sa_plus_conditions: ia >= PD_TOL && p >= PD_TOL,
            in_declared_domain,
            in_conj_domain,
        });
    }
    let values: Vec<f64> = samples.iter().filter_map(|s| s.value).collect();
    let verdict = if !samples.is_empty() && !in_conj_domain {
        DivergenceVerdict::LeftDomain
    } else if values.len() >= MONOTONE_TAIL
        && values[values.len() - MONOTONE_TAIL..].windows(2).all(|w| w[1] > w[0])
        && values.last().is_some_and(|v| *v >= DIVERGENCE_THRESHOLD)
    {
        DivergenceVerdict::Diverges
    } else {
        DivergenceVerdict::BoundedOnSamples
    };
    Ok(DivergenceReport {
        lambda_bar,
        sigma_tilde,
        nu,
        samples,
        verdict,
    })
}

// ---------------------------------------------------------------------------
// Extremum probe along a curve

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveVerdict {
    /// Values above and below `D(dp0)` at every scale.
    NotLocalExtremum,
    /// Only values below at every scale: not a local minimum along the curve.
    DecreasesOnly,
    /// Only values above at every scale: not a local maximum along the curve.
    IncreasesOnly,
    ExtremumUndecided,
}

impl fmt::Display for CurveVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurveVerdict::NotLocalExtremum => "NOT_LOCAL_EXTREMUM",
            CurveVerdict::DecreasesOnly => "DECREASES_ONLY",
            CurveVerdict::IncreasesOnly => "INCREASES_ONLY",
            CurveVerdict::ExtremumUndecided => "EXTREMUM_UNDECIDED",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSample {
    pub t: f64,
    /// `None` when the curve point is outside `T`.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveReport {
    pub base_value: f64,
    pub samples: Vec<CurveSample>,
    /// `(scale, above, below)` counts.
    pub scales: Vec<(f64, usize, usize)>,
    pub values_above: usize,
    pub values_below: usize,
    pub verdict: CurveVerdict,
}

const CURVE_GAP: f64 = 1e-12;

/// Samples `D` along `t ↦ curve(t) = (λ, σ)` for `|t| ≤ t_range` at three dyadic scales.
pub fn probe_curve_extremum(
    problem: &Problem,
    dp0: &DualPoint,
    curve: &dyn Fn(f64) -> (DVector<f64>, DVector<f64>),
    t_range: f64,
    samples: usize,
) -> Result<CurveReport> {
    let (l0, s0) = curve(0.0);
    if (l0.len(), s0.len()) != (dp0.lambda().len(), dp0.sigma().len())
        || (&l0 - dp0.lambda()).amax() > CURVE_GAP
        || (&s0 - dp0.sigma()).amax() > CURVE_GAP
    {
        return Err(CdtError::InvalidParameter("curve(0) does not match the base point".into()));
    }
    if !(t_range > 0.0) || samples == 0 {
        return Err(CdtError::InvalidParameter("t_range > 0 and samples ≥ 1 required".into()));
    }
    let base_value = dual_value(problem, dp0)?;
    let mut all = Vec::new();
    let mut scales = Vec::new();
    for level in 0..3 {
        let scale = t_range / f64::from(1u32 << level);
        let (mut above, mut below) = (0, 0);
        for i in 1..=samples {
            for sign in [-1.0, 1.0] {
                let t = sign * scale * i as f64 / samples as f64;
                let (l, s) = curve(t);
                let value = DualPoint::new(problem, l, s)
                    .ok()
                    .filter(|dp| dp.is_nonsingular())
                    .and_then(|dp| dual_value(problem, &dp).ok());
                if let Some(v) = value {
                    if v > base_value + CURVE_GAP {
                        above += 1;
                    } else if v < base_value - CURVE_GAP {
                        below += 1;
                    }
                }
                all.push(CurveSample { t, value });
            }
        }
        scales.push((scale, above, below));
    }
    let every_above = scales.iter().all(|s| s.1 > 0);
    let every_below = scales.iter().all(|s| s.2 > 0);
    let values_above: usize = scales.iter().map(|s| s.1).sum();
    let values_below: usize = scales.iter().map(|s| s.2).sum();
    let verdict = match (every_above, every_below) {
        (true, true) => CurveVerdict::NotLocalExtremum,
        (false, true) if values_above == 0 => CurveVerdict::DecreasesOnly,
        (true, false) if values_below == 0 => CurveVerdict::IncreasesOnly,
        _ => CurveVerdict::ExtremumUndecided,
    };
    Ok(CurveReport {
        base_value,
        samples: all,
        scales,
        values_above,
        values_below,
        verdict,
    })
}

// ---------------------------------------------------------------------------
// Checklists

/// Where the expected value of an audit item comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Stated in the published counterexamples.
    Published,
    /// Computed independently (closed forms, arithmetic, oracles).
    Derived,
    /// Follows from a definition or a trivial identity.
    Identity,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Published => "[published]",
            Provenance::Derived => "[recomputed]",
            Provenance::Identity => "[identity]",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditItem {
    pub id: String,
    pub description: String,
    pub provenance: Provenance,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub name: String,
    pub items: Vec<AuditItem>,
}

impl AuditReport {
    pub fn all_pass(&self) -> bool {
        self.items.iter().all(|i| i.pass)
    }

    pub fn first_failure(&self) -> Option<&AuditItem> {
        self.items.iter().find(|i| !i.pass)
    }

    pub fn item(&self, id: &str) -> Option<&AuditItem> {
        self.items.iter().find(|i| i.id == id)
    }

    fn push(&mut self, id: &str, provenance: Provenance, description: &str, pass: bool, detail: String) {
        self.items.push(AuditItem {
            id: id.into(),
            description: description.into(),
            provenance,
            pass,
            detail,
        });
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AuditParams {
    pub solver: SolverConfig,
    pub msgao: MsGaoParams,
    pub oracle_steps: Option<usize>,
}

pub fn run_audit(name: &str, params: &AuditParams) -> Result<AuditReport> {
    match name {
        "example1" => audit_example1(params),
        "msgao" | "msgao-gamma" => audit_msgao(params),
        other => Err(CdtError::UnknownAudit(other.into())),
    }
}

fn fmt_vec(v: &DVector<f64>) -> String {
    let parts: Vec<String> = v.iter().map(|c| format!("{c:.9}")).collect();
    format!("({})", parts.join(", "))
}

fn certify(problem: &Problem, j: &IndexSet, cp: &CriticalPoint, cfg: &SolverConfig) -> Result<crate::solver::Certificate> {
    certify_global(problem, j, cp, cfg.classify_tol, cfg.feas_tol)
}

fn perfect_duality_item(report: &mut AuditReport, id: &str, problem: &Problem, points: &[CriticalPoint], tol: f64) {
    let mut worst: f64 = 0.0;
    let mut pass = !points.is_empty();
    for cp in points {
        match perfect_duality_check(problem, cp, tol) {
            Ok(r) => {
                worst = worst.max(r.max_gap / (1.0 + r.f.abs()));
                pass &= r.pass;
            }
            Err(_) => pass = false,
        }
    }
    report.push(
        id,
        Provenance::Derived,
        "f(x) = Ξ = D at every critical point",
        pass,
        format!("max relative gap {worst:.3e} over {} points", points.len()),
    );
}

#[allow(clippy::too_many_arguments)]
fn oracle_item(
    report: &mut AuditReport,
    id: &str,
    description: &str,
    provenance: Provenance,
    problem: &Problem,
    j: &IndexSet,
    steps: Option<usize>,
    want_x: &DVector<f64>,
    want_f: f64,
) {
    let mut grid = Grid::default_for(problem.n());
    if let Some(s) = steps {
        grid.steps = s;
    }
    match oracle_min(problem, j, grid, None) {
        Ok(o) => {
            let dx = (&o.argmin - want_x).amax();
            let df = (o.minvalue - want_f).abs();
            report.push(
                id,
                provenance,
                description,
                dx <= 1e-2 && df <= 1e-3,
                format!(
                    "oracle argmin {} value {:.9} (grid node {}); |Δx| = {dx:.2e}, |Δf| = {df:.2e}",
                    fmt_vec(&o.argmin),
                    o.minvalue,
                    fmt_vec(&o.grid_argmin)
                ),
            );
        }
        Err(e) => report.push(id, provenance, description, false, e.to_string()),
    }
}

/// Roots of `a t² + b t + c`, smaller first.
fn quadratic_roots(a: f64, b: f64, c: f64) -> (f64, f64) {
    let disc = (b * b - 4.0 * a * c).sqrt();
    // numerically stable pairing
    let q = -0.5 * (b + b.signum() * disc);
    let (r1, r2) = (q / a, c / q);
    (r1.min(r2), r1.max(r2))
}

fn audit_example1(params: &AuditParams) -> Result<AuditReport> {
    let cfg = &params.solver;
    let p = example1();
    let empty = IndexSet::empty();
    let mut report = AuditReport {
        name: "example1".into(),
        items: Vec::new(),
    };
    let s3 = 3f64.sqrt();
    let search = find_critical_points(&p, &empty, cfg)?;
    let pts = &search.points;

    // published list of (x, λ, σ₁); the fourth entry carries the corrected root 14 − 8√3
    let expected = [
        (2.0, -1.0, -2.0),
        (-2.0, 2.0, -2.0),
        (6.0, 0.0, 14.0 + 8.0 * s3),
        (6.0, 0.0, 14.0 - 8.0 * s3),
        (-2.0 * s3, -0.5 * (s3 + 1.0), 2.0),
        (2.0 * s3, 0.5 * (s3 - 1.0), 2.0),
    ];
    let matched = expected.iter().all(|&(x, l, s)| {
        pts.iter().any(|cp| {
            let q = &cp.point;
            (q.x[0] - x).abs() <= 1e-6 && (q.lambda[0] - l).abs() <= 1e-6 && (q.sigma[1] - s).abs() <= 1e-6
        })
    });
    let listing: Vec<String> = pts
        .iter()
        .map(|cp| format!("({:.9}; {:.9}; (0, {:.9}))", cp.point.x[0], cp.point.lambda[0], cp.point.sigma[1]))
        .collect();
    report.push(
        "critical-points",
        Provenance::Published,
        "exactly six critical points of Ξ matching the published list",
        pts.len() == 6 && matched,
        format!("{} found: {}", pts.len(), listing.join(" ")),
    );

    // λ = 0, x = 6: σ₁Λ₁(6) − σ₁²/2 − 2 = 0 with Λ₁(6) = 14
    let lambda1_at_6 = p.term(1).lambda_map.eval(&DVector::from_element(1, 6.0));
    let (r_lo, r_hi) = quadratic_roots(1.0, -2.0 * lambda1_at_6, 4.0);
    let mut zero_branch: Vec<f64> = pts
        .iter()
        .filter(|cp| cp.point.lambda[0] == 0.0)
        .map(|cp| cp.point.sigma[1])
        .collect();
    zero_branch.sort_by(f64::total_cmp);
    let roots_ok = zero_branch.len() == 2
        && (zero_branch[0] - r_lo).abs() <= 1e-9 * r_hi
        && (zero_branch[1] - r_hi).abs() <= 1e-9 * r_hi
        && (r_lo - (14.0 - 8.0 * s3)).abs() <= 1e-12
        && (r_hi - (14.0 + 8.0 * s3)).abs() <= 1e-12;
    report.push(
        "zero-branch-roots",
        Provenance::Derived,
        "σ₁ on the λ=0 branch are the roots 14±8√3 of σ²−28σ+4",
        roots_ok,
        format!("solver {zero_branch:?}, quadratic formula ({r_lo:.12}, {r_hi:.12})"),
    );

    let mut products: Vec<f64> = pts.iter().map(|cp| cp.one_plus_lambda_sigma(1)).collect();
    products.sort_by(f64::total_cmp);
    let mut want = vec![3.0, -3.0, 1.0, -s3, s3];
    want.sort_by(f64::total_cmp);
    let mut distinct: Vec<f64> = Vec::new();
    for v in &products {
        if distinct.last().is_none_or(|d| (v - d).abs() > 1e-9) {
            distinct.push(*v);
        }
    }
    let set_ok = distinct.len() == want.len() && distinct.iter().zip(&want).all(|(a, b)| (a - b).abs() <= 1e-9);
    report.push(
        "one-plus-lambda-sigma",
        Provenance::Published,
        "{1+λσ₁} over the critical points is {3, −3, 1, −√3, √3}",
        set_ok,
        format!("{distinct:.9?}"),
    );

    let certs = pts.iter().map(|cp| certify(&p, &empty, cp, cfg)).collect::<Result<Vec<_>>>()?;
    let unique: Vec<usize> = (0..pts.len())
        .filter(|&i| certs[i].verdict == Verdict::UniqueGlobalMin)
        .collect();
    let fstar = 6.0 - 12.0 * s3;
    let unique_ok = unique.len() == 1 && {
        let i = unique[0];
        (pts[i].point.x[0] - 2.0 * s3).abs() <= 1e-8
            && certs[i].value.is_some_and(|v| (v - fstar).abs() <= 1e-8)
            && certs[i].solved.is_empty()
    };
    let certified = certs.iter().filter(|c| c.is_certified()).count();
    report.push(
        "unique-certificate",
        Provenance::Published,
        "exactly one UNIQUE_GLOBAL_MIN: x=2√3 solves (P_i) with f=6−12√3",
        unique_ok && certified == 1,
        match unique.first() {
            Some(&i) => format!("x = {:.12}, f = {:.12}", pts[i].point.x[0], certs[i].value.unwrap_or(f64::NAN)),
            None => "no point certified".into(),
        },
    );

    let g6 = p.eval_g(1, &DVector::from_element(1, 6.0))?;
    let feas6 = p.feasible_for(&DVector::from_element(1, 6.0), &empty, cfg.feas_tol);
    report.push(
        "x6-infeasible",
        Provenance::Derived,
        "x=6 is infeasible: g₁(6)=96",
        g6 == 96.0 && !feas6.feasible && !feas6.in_x_i,
        format!("g₁(6) = {g6}"),
    );

    let zero_idx: Vec<usize> = (0..pts.len()).filter(|&i| pts[i].point.lambda[0] == 0.0).collect();
    let refused = !zero_idx.is_empty()
        && zero_idx.iter().all(|&i| {
            let c = &certs[i];
            c.verdict == Verdict::NoCertificate
                && c.failed.iter().any(|f| f.label() == "λ₁>0")
                && c.wrongly_accepted_by.contains(&HistoricalTheorem::GaoRuaSheTh2)
                && pts[i].is_critical
                && !pts[i].l_is_critical
        });
    let annotations: Vec<String> = zero_idx
        .iter()
        .map(|&i| {
            let by: Vec<String> = certs[i].wrongly_accepted_by.iter().map(|t| t.to_string()).collect();
            let failed: Vec<String> = certs[i].failed.iter().map(|f| f.label()).collect();
            format!("σ₁={:.6}: failed [{}], would be wrongly accepted by [{}]", pts[i].point.sigma[1], failed.join(", "), by.join(", "))
        })
        .collect();
    report.push(
        "zero-branch-refused",
        Provenance::Published,
        "λ=0 points: NO_CERTIFICATE (λ₁>0 fails) although GaoRuaShe-Th2 would accept them",
        refused,
        annotations.join("; "),
    );

    perfect_duality_item(&mut report, "perfect-duality", &p, pts, 1e-8);

    // (λ, σ₁) = (−1, −2): along (t−1, (0, t−2)) D falls; along (t−1, (0, −2−2t)) it rises
    let dp0 = DualPoint::from_slices(&p, &[-1.0], &[0.0, -2.0])?;
    let paper_curve = |t: f64| (DVector::from_element(1, t - 1.0), DVector::from_column_slice(&[0.0, t - 2.0]));
    let companion = |t: f64| {
        (
            DVector::from_element(1, t - 1.0),
            DVector::from_column_slice(&[0.0, -2.0 - 2.0 * t]),
        )
    };
    let down = probe_curve_extremum(&p, &dp0, &paper_curve, 0.1, 8)?;
    let up = probe_curve_extremum(&p, &dp0, &companion, 0.1, 8)?;
    let saddle = (down.base_value + 10.0).abs() <= 1e-12
        && down.verdict == CurveVerdict::DecreasesOnly
        && up.verdict == CurveVerdict::IncreasesOnly;
    report.push(
        "not-local-extremum",
        Provenance::Published,
        "(λ,σ)=(−1,(0,−2)) with D=−10 is not a local extremum of D",
        saddle,
        format!(
            "D = {:.12}; curve (t−1,(0,t−2)): {}; curve (t−1,(0,−2−2t)): {}",
            down.base_value, down.verdict, up.verdict
        ),
    );

    let x_star = DVector::from_element(1, 2.0 * s3);
    oracle_item(
        &mut report,
        "oracle-pi",
        "grid minimum of (P_i) matches the certified point",
        Provenance::Derived,
        &p,
        &empty,
        params.oracle_steps,
        &x_star,
        fstar,
    );
    let j1: IndexSet = [1].into_iter().collect();
    oracle_item(
        &mut report,
        "oracle-pe",
        "grid minimum with J={1} is the same point",
        Provenance::Derived,
        &p,
        &j1,
        params.oracle_steps,
        &x_star,
        fstar,
    );

    let search_e = find_critical_points(&p, &j1, cfg)?;
    let certified_e: Vec<&CriticalPoint> = search_e
        .points
        .iter()
        .filter(|cp| certify(&p, &j1, cp, cfg).map(|c| c.is_certified()).unwrap_or(false))
        .collect();
    report.push(
        "same-point-j1",
        Provenance::Published,
        "solving with J={1} certifies the same x",
        certified_e.len() == 1 && (certified_e[0].point.x[0] - 2.0 * s3).abs() <= 1e-8,
        format!(
            "{} critical points, certified x = {:?}",
            search_e.points.len(),
            certified_e.iter().map(|cp| cp.point.x[0]).collect::<Vec<_>>()
        ),
    );
    Ok(report)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-15 * b.abs().max(1.0)
}

fn audit_msgao(params: &AuditParams) -> Result<AuditReport> {
    let gamma = params.msgao.gamma;
    let table_gamma = 6f64.sqrt() / 96.0;
    let divergence_gamma = 9.0 * 2f64.sqrt() / 8.0;
    let unit = params.msgao.alpha == 1.0 && params.msgao.eta == 1.0 && params.msgao.r == 1.0 && params.msgao.c == 1.0;
    let mut report = AuditReport {
        name: format!("msgao(gamma={gamma:.12})"),
        items: Vec::new(),
    };
    let p = msgao(params.msgao)?;
    if unit && close(gamma, table_gamma) {
        audit_msgao_table(&p, params, &mut report)?;
    } else if unit && close(gamma, divergence_gamma) {
        audit_msgao_divergence(&p, params, &mut report)?;
    } else {
        let search = find_critical_points(&p, p.j(), &params.solver)?;
        report.push(
            "critical-points",
            Provenance::Identity,
            "critical-point search converged",
            !search.points.is_empty(),
            format!("{} points", search.points.len()),
        );
        perfect_duality_item(&mut report, "perfect-duality", &p, &search.points, 1e-8);
    }
    Ok(report)
}

fn audit_msgao_table(p: &Problem, params: &AuditParams, report: &mut AuditReport) -> Result<()> {
    let cfg = &params.solver;
    let s6 = 6f64.sqrt();
    // published (y, z, λ, μ, ς) rows
    let table = [
        [1.0, 1.0 + 0.5 * s6, 0.5 * s6, 48.0 / 13.0, -0.25],
        [-1.0, 1.0 + 0.5 * s6, -2.0 - 0.5 * s6, 16.0 / 13.0 * (3.0 + 2.0 * s6), -0.25],
        [1.0, 2.603797322, 1.603797322, -3.701325488, 0.2860829239],
        [-1.0, 2.603797322, -3.603797322, -8.317027781, 0.2860829239],
    ];
    let search = find_critical_points(p, p.j(), cfg)?;
    let pts = &search.points;
    let row_of = |cp: &CriticalPoint| {
        [cp.point.x[0], cp.point.x[1], cp.point.lambda[0], cp.point.lambda[1], cp.point.sigma[2]]
    };
    let mut order = Vec::new();
    for want in &table {
        order.push(pts.iter().position(|cp| {
            row_of(cp).iter().zip(want).all(|(a, b)| (a - b).abs() <= 1e-6)
        }));
    }
    let listing: Vec<String> = pts
        .iter()
        .map(|cp| {
            let r = row_of(cp);
            format!("({:.9}, {:.9}, {:.9}, {:.9}, {:.9})", r[0], r[1], r[2], r[3], r[4])
        })
        .collect();
    report.push(
        "critical-points",
        Provenance::Published,
        "exactly four critical points matching the published table",
        pts.len() == 4 && order.iter().all(|o| o.is_some()),
        format!("{} found: {}", pts.len(), listing.join(" ")),
    );

    let mut notes = Vec::new();
    let mut none_in = !pts.is_empty();
    for (i, o) in order.iter().enumerate() {
        let Some(idx) = *o else {
            none_in = false;
            continue;
        };
        let cp = &pts[idx];
        let (l, mu, vs) = (cp.point.lambda[0], cp.point.lambda[1], cp.point.sigma[2]);
        let prod = (1.0 + l) * (1.0 + mu * vs) - 1.0;
        let h = cp.membership.historical;
        let reason_ok = if i % 2 == 0 { prod < 0.0 } else { 1.0 + l < 0.0 };
        none_in &= h.morgao17_sa_plus == Some(false) && h.morgao16_sc_plus == Some(false) && reason_ok;
        notes.push(format!("point {}: 1+λ = {:.6}, (1+λ)(1+μς)−1 = {:.6}", i + 1, 1.0 + l, prod));
    }
    report.push(
        "no-point-in-sa-plus",
        Provenance::Published,
        "no critical point lies in S_a⁺ or S_c⁺ (points 1,3: (1+λ)(1+μς)−1<0; points 2,4: 1+λ<0)",
        none_in,
        notes.join("; "),
    );

    let certs = pts.iter().map(|cp| certify(p, p.j(), cp, cfg)).collect::<Result<Vec<_>>>()?;
    let failed: Vec<String> = certs
        .iter()
        .map(|c| {
            let f: Vec<String> = c.failed.iter().map(|f| f.label()).collect();
            format!("{} [{}]", c.verdict, f.join(", "))
        })
        .collect();
    report.push(
        "no-certificate",
        Provenance::Published,
        "the certified solver issues NO_CERTIFICATE for all four points",
        !certs.is_empty() && certs.iter().all(|c| c.verdict == Verdict::NoCertificate),
        failed.join("; "),
    );

    let want = DVector::from_column_slice(&[1.0, 1.0 + 0.5 * s6]);
    let fwant = p.objective(&want)?;
    oracle_item(
        report,
        "oracle-minimizer",
        "the grid oracle finds the true minimizer (1, 1+√6/2)",
        Provenance::Published,
        p,
        p.j(),
        params.oracle_steps.map(|s| s.min(2_000)),
        &want,
        fwant,
    );
    perfect_duality_item(report, "perfect-duality", p, pts, 1e-8);
    Ok(())
}

/// Root of `ς⁴ = 8γ²(ς + 1)` in `(−1, 0)`.
pub fn divergence_sigma_bar(gamma: f64) -> f64 {
    let phi = |s: f64| s.powi(4) - 8.0 * gamma * gamma * (s + 1.0);
    let (mut a, mut b) = (-1.0, 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if phi(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Published closed form of `D(λ, μ, ς)` for the scalar two-block instance.
pub fn msgao_dual_closed_form(gamma: f64, l: f64, mu: f64, s: f64) -> f64 {
    let num = mu * mu * (l + 1.0) * (s.powi(3) + 2.0 * s * s + gamma * gamma)
        + mu * l * (s * s + s * l + 2.0 * s - 2.0 * gamma)
        + l * l;
    -num / (2.0 * (l + s * mu + s * l * mu))
}

pub fn default_mu_schedule() -> Vec<f64> {
    (1..=6).map(|e| -(10f64.powi(e))).collect()
}

fn audit_msgao_divergence(p: &Problem, params: &AuditParams, report: &mut AuditReport) -> Result<()> {
    let gamma = params.msgao.gamma;
    let sb = divergence_sigma_bar(gamma);
    let phi = |s: f64| s.powi(4) - 8.0 * gamma * gamma * (s + 1.0);
    report.push(
        "sigma-bar",
        Provenance::Published,
        "ς⁴=8γ²(ς+1) has a root ς̄∈(−1,0) and the root ς₂=3",
        sb > -1.0 && sb < 0.0 && phi(sb).abs() <= 1e-12 && phi(3.0).abs() <= 1e-9,
        format!("ς̄ = {sb:.10}, residual at 3: {:.2e}", phi(3.0)),
    );

    let lb = sb * sb / (2.0 * gamma);
    let mb = sb * sb / (2.0 * gamma * gamma - sb.powi(3));
    let dp = DualPoint::from_slices(p, &[lb, mb], &[0.0, 0.0, sb])?;
    let grads = dual_gradients(p, &dp)?;
    let resid = grads.grad_lambda.amax().max(grads.grad_sigma.amax());
    let mv = membership(p, &dp, p.j());
    let identity = ((1.0 + lb) * (1.0 + mb * sb) - 1.0 - mb * (gamma + sb)).abs() <= 1e-12;
    report.push(
        "dual-critical",
        Provenance::Published,
        "(λ̄, μ̄, ς̄) with λ̄=ς̄²/(2γ), μ̄=ς̄²/(2γ²−ς̄³) is a critical point of D lying in S_a⁺",
        resid <= 1e-8 && mv.historical.morgao17_sa_plus == Some(true) && lb > 0.0 && mb > 0.0 && identity,
        format!("λ̄ = {lb:.10}, μ̄ = {mb:.10}, gradient residual {resid:.2e}"),
    );

    let samples = [(lb, mb, sb), (0.4, -2.0, -3.0), (1.3, 0.7, 0.2), (lb, -50.0, -3.0)];
    let mut worst: f64 = 0.0;
    for (l, mu, s) in samples {
        let d = dual_value(p, &DualPoint::from_slices(p, &[l, mu], &[0.0, 0.0, s])?)?;
        let c = msgao_dual_closed_form(gamma, l, mu, s);
        worst = worst.max((d - c).abs() / (1.0 + c.abs()));
    }
    report.push(
        "closed-form",
        Provenance::Derived,
        "assembled D agrees with the published closed form",
        worst <= 1e-10,
        format!("max relative gap {worst:.2e}"),
    );

    let st = -3.0;
    let div = probe_unboundedness(p, &dp, st, &default_mu_schedule())?;
    let last = div.samples.last().and_then(|s| s.value).unwrap_or(f64::NAN);
    let flags: Vec<String> = div
        .samples
        .iter()
        .map(|s| {
            format!(
                "μ={:e}: D={:.6e} T⁺={} S_a⁺-conditions={} declared-domain={} conj-domain={}",
                s.mu,
                s.value.unwrap_or(f64::NAN),
                s.in_t_plus,
                s.sa_plus_conditions,
                s.in_declared_domain,
                s.in_conj_domain
            )
        })
        .collect();
    report.push(
        "diverges",
        Provenance::Derived,
        "D(λ̄, μ, ς̃) → ∞ as μ → −∞ for ς̃ with ν<0",
        div.verdict == DivergenceVerdict::Diverges && div.nu < 0.0 && last > DIVERGENCE_THRESHOLD,
        format!("ς̃ = {st}, ν = {:.6}, {}; {}", div.nu, div.verdict, flags.join("; ")),
    );
    report.push(
        "domain-flags",
        Provenance::Identity,
        "every sample records declared-domain ([−αη,∞)) and conjugate-domain membership of ς̃",
        div.samples.len() == default_mu_schedule().len()
            && div.samples.iter().all(|s| !s.in_declared_domain && s.in_conj_domain),
        format!(
            "ς̃ = {st} lies outside [−αη,∞) = [{}, ∞) but inside dom V₂* = ℝ",
            -params.msgao.alpha * params.msgao.eta
        ),
    );

    let bounded = probe_unboundedness(p, &dp, -1.5, &default_mu_schedule())?;
    report.push(
        "bounded-companion",
        Provenance::Derived,
        "with ν>0 the same ray does not diverge",
        bounded.nu > 0.0 && bounded.verdict != DivergenceVerdict::Diverges,
        format!("ς̃ = -1.5, ν = {:.6}, {}", bounded.nu, bounded.verdict),
    );

    let search = find_critical_points(p, p.j(), &params.solver)?;
    perfect_duality_item(report, "perfect-duality", p, &search.points, 1e-8);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_example1() {
        let p = example1();
        let o = oracle_min(&p, &IndexSet::empty(), Grid::default_for(1), None).unwrap();
        let s3 = 3f64.sqrt();
        assert!((o.argmin[0] - 2.0 * s3).abs() < 1e-6);
        assert!((o.minvalue - (6.0 - 12.0 * s3)).abs() < 1e-6);
        assert!(o.grid_minvalue >= o.minvalue - 1e-3);
        let j: IndexSet = [1].into_iter().collect();
        let o = oracle_min(&p, &j, Grid::default_for(1), None).unwrap();
        assert!((o.argmin[0] - 2.0 * s3).abs() < 1e-9);
    }

    #[test]
    fn oracle_rejects_n3() {
        use crate::problem::{ConstraintTerm, QuadraticFunction};
        let p = Problem::new(3, vec![ConstraintTerm::quadratic(QuadraticFunction::zero(3))], IndexSet::empty()).unwrap();
        assert_eq!(
            oracle_min(&p, &IndexSet::empty(), Grid::default_for(3), None),
            Err(CdtError::OracleDimension { n: 3 })
        );
    }

    #[test]
    fn oracle_infeasible() {
        let p = example1();
        let g = Grid {
            lo: 5.0,
            hi: 7.0,
            steps: 100,
        };
        assert_eq!(oracle_min(&p, &IndexSet::empty(), g, None), Err(CdtError::InfeasibleOnGrid));
    }

    #[test]
    fn closed_form_at_sigma_bar() {
        let g = 9.0 * 2f64.sqrt() / 8.0;
        let sb = divergence_sigma_bar(g);
        assert!((sb + 0.9583453792).abs() < 1e-9);
        let d = msgao_dual_closed_form(g, sb * sb / (2.0 * g), -10.0, -3.0);
        assert!(d > 10.0);
    }

    #[test]
    fn empty_schedule_is_bounded() {
        let p = msgao(MsGaoParams {
            gamma: 9.0 * 2f64.sqrt() / 8.0,
            ..Default::default()
        })
        .unwrap();
        let dp = DualPoint::from_slices(&p, &[0.3, 0.1], &[0.0, 0.0, -0.9]).unwrap();
        let r = probe_unboundedness(&p, &dp, -3.0, &[]).unwrap();
        assert!(r.samples.is_empty());
        assert_eq!(r.verdict, DivergenceVerdict::BoundedOnSamples);
    }

    #[test]
    fn probe_needs_msgao() {
        let p = example1();
        let dp = DualPoint::from_slices(&p, &[0.0], &[0.0, 0.0]).unwrap();
        assert!(matches!(probe_unboundedness(&p, &dp, -3.0, &[-10.0]), Err(CdtError::NotApplicable(_))));
    }

    #[test]
    fn curve_probes() {
        let p = example1();
        let s3 = 3f64.sqrt();
        let l = 0.5 * (s3 - 1.0);
        let dp0 = DualPoint::from_slices(&p, &[l], &[0.0, 2.0]).unwrap();
        let sigma0_axis = move |t: f64| (DVector::from_element(1, l), DVector::from_column_slice(&[t, 2.0]));
        let r = probe_curve_extremum(&p, &dp0, &sigma0_axis, 0.5, 5).unwrap();
        assert_eq!(r.verdict, CurveVerdict::DecreasesOnly);
        assert_eq!(r.values_above, 0);

        let constant = move |_t: f64| (DVector::from_element(1, l), DVector::from_column_slice(&[0.0, 2.0]));
        let r = probe_curve_extremum(&p, &dp0, &constant, 0.5, 5).unwrap();
        assert_eq!(r.verdict, CurveVerdict::ExtremumUndecided);

        let off = |t: f64| (DVector::from_element(1, t), DVector::from_column_slice(&[0.0, 2.0]));
        assert!(probe_curve_extremum(&p, &dp0, &off, 0.5, 5).is_err());

        // a genuine saddle cut: σ₀ falls, σ₁ direction combined to rise
        let dp1 = DualPoint::from_slices(&p, &[-1.0], &[0.0, -2.0]).unwrap();
        let mixed = |t: f64| (DVector::from_element(1, -1.0 + t), DVector::from_column_slice(&[0.0, -2.0 - 2.0 * t]));
        let r = probe_curve_extremum(&p, &dp1, &mixed, 0.1, 8).unwrap();
        assert_eq!(r.verdict, CurveVerdict::IncreasesOnly);
    }

    #[test]
    fn unknown_audit() {
        assert_eq!(
            run_audit("nope", &AuditParams::default()),
            Err(CdtError::UnknownAudit("nope".into()))
        );
    }

    #[test]
    fn quadratic_roots_stable() {
        let (a, b) = quadratic_roots(1.0, -28.0, 4.0);
        assert!((a - (14.0 - 8.0 * 3f64.sqrt())).abs() < 1e-15);
        assert!((b - (14.0 + 8.0 * 3f64.sqrt())).abs() < 1e-13);
    }
}
