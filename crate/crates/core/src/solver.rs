//! Critical and J-LKKT points of `Ξ` by active-set enumeration and damped
//! Newton, their classification, and the global-optimality certificate.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dual::{dual_gradients, dual_value, membership, normalize_sigma, DualPoint, MembershipVerdict};
use crate::error::{CdtError, Result};
use crate::lagrangian::{
    assemble, conj_deriv_at, lagrangian_value_grad, lambda_partial, multiplier, xi_gradients, xi_value,
    PrimalDualPoint, XiGradients,
};
use crate::problem::{DomainMembership, FeasibilityReport, IndexSet, Problem, ProblemFamily};

pub const MAX_BRANCHES: usize = 4096;
pub const LAMBDA_SNAP: f64 = 1e-10;
pub const DEDUP_DIST: f64 = 1e-6;
/// Certificates need `λ_j` strictly above this on `Q₀ᶜ`.
pub const POSITIVITY_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Newton starts per active set.
    pub multistarts: usize,
    pub seed: u64,
    pub newton_iters: usize,
    /// Residual norm at which Newton stops.
    pub tol: f64,
    pub box_lo: f64,
    pub box_hi: f64,
    /// Tolerance for the stationarity and sign flags.
    pub classify_tol: f64,
    pub feas_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            multistarts: 64,
            seed: 0,
            newton_iters: 100,
            tol: 1e-10,
            box_lo: -10.0,
            box_hi: 10.0,
            classify_tol: 1e-8,
            feas_tol: crate::problem::DEFAULT_FEASIBILITY_TOL,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.tol, self.classify_tol, self.feas_tol];
        if self.multistarts == 0
            || positive.iter().any(|t| !(*t > 0.0))
            || !(self.box_lo < self.box_hi)
            || !self.box_lo.is_finite()
            || !self.box_hi.is_finite()
        {
            return Err(CdtError::InvalidParameter(format!("bad solver config {self:?}")));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Square system of one active set

/// For an active set `S ⊆ Jᶜ` (`λ_j = 0` on `S`): unknowns are
/// `x`, `λ_j (j ∉ S)`, `σ_k` for non-quadratic `k ∈ {0} ∪ Sᶜ`, and `σ_j` for `j ∈ S ∖ Q`.
#[derive(Debug, Clone)]
struct Layout {
    n: usize,
    m: usize,
    free: Vec<usize>,
    sig_main: Vec<usize>,
    sig_closure: Vec<usize>,
    screen: Vec<usize>,
}

impl Layout {
    fn new(problem: &Problem, active: &IndexSet) -> Self {
        let m = problem.m();
        let free: Vec<usize> = (1..=m).filter(|j| !active.contains(*j)).collect();
        let sig_main = (0..=m)
            .filter(|&k| !problem.is_quadratic(k) && (k == 0 || !active.contains(k)))
            .collect();
        let sig_closure = active.iter().filter(|&j| !problem.is_quadratic(j)).collect();
        let screen = active.iter().filter(|&j| problem.is_quadratic(j)).collect();
        Self {
            n: problem.n(),
            m,
            free,
            sig_main,
            sig_closure,
            screen,
        }
    }

    fn dim(&self) -> usize {
        self.n + self.free.len() + self.sig_main.len() + self.sig_closure.len()
    }

    fn sigma_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.sig_main.iter().chain(&self.sig_closure).copied()
    }

    fn unpack(&self, u: &DVector<f64>) -> PrimalDualPoint {
        let x = u.rows(0, self.n).into_owned();
        let mut lambda = DVector::zeros(self.m);
        for (i, &j) in self.free.iter().enumerate() {
            lambda[j - 1] = u[self.n + i];
        }
        let mut sigma = DVector::zeros(self.m + 1);
        let base = self.n + self.free.len();
        for (i, k) in self.sigma_indices().enumerate() {
            sigma[k] = u[base + i];
        }
        PrimalDualPoint { x, lambda, sigma }
    }
}

fn residual(problem: &Problem, lay: &Layout, u: &DVector<f64>) -> Option<DVector<f64>> {
    let p = lay.unpack(u);
    let aq = assemble(problem, &p.lambda, &p.sigma);
    let mut r = Vec::with_capacity(lay.dim());
    r.extend((&aq.g * &p.x - &aq.f).iter());
    for &j in &lay.free {
        r.push(lambda_partial(problem, j, &p.x, p.sigma[j]).ok()?);
    }
    for &k in &lay.sig_main {
        r.push(problem.term(k).lambda_map.eval(&p.x) - conj_deriv_at(problem, k, p.sigma[k])?);
    }
    for &j in &lay.sig_closure {
        r.push(lambda_partial(problem, j, &p.x, p.sigma[j]).ok()?);
    }
    let r = DVector::from_vec(r);
    r.iter().all(|v| v.is_finite()).then_some(r)
}

fn jacobian(problem: &Problem, lay: &Layout, u: &DVector<f64>) -> Option<DMatrix<f64>> {
    let p = lay.unpack(u);
    let n = lay.n;
    let dim = lay.dim();
    let aq = assemble(problem, &p.lambda, &p.sigma);
    let mut jac = DMatrix::zeros(dim, dim);
    jac.view_mut((0, 0), (n, n)).copy_from(&aq.g);

    let lam_col = |i: usize| n + i;
    let sig_base = n + lay.free.len();
    let sig_col = |k: usize| {
        lay.sigma_indices()
            .position(|s| s == k)
            .map(|i| sig_base + i)
    };
    // ∂Ξ/∂λ_j as a function of x and σ_j
    let lambda_row = |jac: &mut DMatrix<f64>, row: usize, j: usize| -> Option<()> {
        let t = problem.term(j);
        let s = p.sigma[j];
        let gx = t.q.grad(&p.x) + t.lambda_map.grad(&p.x) * s;
        jac.view_mut((row, 0), (1, n)).copy_from(&gx.transpose());
        if let Some(c) = sig_col(j) {
            jac[(row, c)] = t.lambda_map.eval(&p.x) - conj_deriv_at(problem, j, s)?;
        }
        Some(())
    };

    for (i, &j) in lay.free.iter().enumerate() {
        let t = problem.term(j);
        let col = t.q.grad(&p.x) + t.lambda_map.grad(&p.x) * p.sigma[j];
        jac.view_mut((0, lam_col(i)), (n, 1)).copy_from(&col);
        lambda_row(&mut jac, n + i, j)?;
    }
    for (i, &k) in lay.sig_main.iter().enumerate() {
        let t = problem.term(k);
        let gl = t.lambda_map.grad(&p.x);
        let c = sig_base + i;
        jac.view_mut((0, c), (n, 1)).copy_from(&(&gl * multiplier(&p.lambda, k)));
        jac.view_mut((c, 0), (1, n)).copy_from(&gl.transpose());
        jac[(c, c)] = -t.v.conj_second(p.sigma[k])?;
    }
    for (i, &j) in lay.sig_closure.iter().enumerate() {
        lambda_row(&mut jac, sig_base + lay.sig_main.len() + i, j)?;
    }
    jac.iter().all(|v| v.is_finite()).then_some(jac)
}

fn newton_step(jac: DMatrix<f64>, r: &DVector<f64>) -> Option<DVector<f64>> {
    let rhs = -r;
    let lu = jac.clone().lu().solve(&rhs);
    match lu {
        Some(s) if s.iter().all(|v| v.is_finite()) => Some(s),
        _ => jac.svd(true, true).solve(&rhs, 1e-14).ok(),
    }
}

fn damped_newton(problem: &Problem, lay: &Layout, mut u: DVector<f64>, cfg: &SolverConfig) -> Option<DVector<f64>> {
    let mut r = residual(problem, lay, &u)?;
    let mut rn = r.norm();
    for _ in 0..cfg.newton_iters {
        if rn <= cfg.tol {
            break;
        }
        let step = newton_step(jacobian(problem, lay, &u)?, &r)?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = &u + &step * t;
            if let Some(rc) = residual(problem, lay, &cand) {
                let rcn = rc.norm();
                if rcn < (1.0 - 1e-4 * t) * rn {
                    u = cand;
                    r = rc;
                    rn = rcn;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if rn > cfg.tol {
        return None;
    }
    // one extra full step tightens roots found just under the threshold
    if let Some(step) = jacobian(problem, lay, &u).and_then(|j| newton_step(j, &r)) {
        let cand = &u + step;
        if residual(problem, lay, &cand).is_some_and(|rc| rc.norm() < rn) {
            u = cand;
        }
    }
    Some(u)
}

fn sample_start(problem: &Problem, lay: &Layout, cfg: &SolverConfig, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let mut u = DVector::zeros(lay.dim());
    let base = lay.n + lay.free.len();
    for i in 0..base {
        u[i] = rng.gen_range(cfg.box_lo..cfg.box_hi);
    }
    for (i, k) in lay.sigma_indices().enumerate() {
        let dom = problem.term(k).v.conj_dom();
        let (wlo, whi) = dom.sampling_window().unwrap_or((cfg.box_lo, cfg.box_hi));
        let (lo, hi) = (wlo.max(cfg.box_lo), whi.min(cfg.box_hi));
        let (lo, hi) = if lo < hi { (lo, hi) } else { (wlo, whi) };
        u[base + i] = rng.gen_range(lo..hi);
    }
    u
}

fn snap(problem: &Problem, mut p: PrimalDualPoint) -> PrimalDualPoint {
    for v in p.lambda.iter_mut() {
        if v.abs() <= LAMBDA_SNAP {
            *v = 0.0;
        }
    }
    normalize_sigma(problem, &p)
}

fn flat(p: &PrimalDualPoint) -> impl Iterator<Item = f64> + '_ {
    p.x.iter().chain(p.lambda.iter()).chain(p.sigma.iter()).copied()
}

fn canonical_cmp(a: &PrimalDualPoint, b: &PrimalDualPoint) -> Ordering {
    flat(a)
        .zip(flat(b))
        .map(|(u, v)| u.total_cmp(&v))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn distance(a: &PrimalDualPoint, b: &PrimalDualPoint) -> f64 {
    flat(a).zip(flat(b)).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StartOutcome {
    Converged,
    NoConvergence,
    Screened,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SearchDiagnostics {
    pub branches: usize,
    pub starts_per_branch: usize,
    pub converged: usize,
    pub no_convergence: usize,
    /// roots dropped because `q_j(x) > tol` for an inactive quadratic `j`
    pub screened: usize,
    pub distinct: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalSearch {
    pub points: Vec<CriticalPoint>,
    pub diagnostics: SearchDiagnostics,
}

fn check_j(problem: &Problem, j: &IndexSet) -> Result<()> {
    if j.iter().any(|k| k == 0 || k > problem.m()) {
        return Err(CdtError::InvalidParameter(format!(
            "J = {j} is not a subset of 1..{}",
            problem.m()
        )));
    }
    Ok(())
}

pub fn find_critical_points(problem: &Problem, j: &IndexSet, cfg: &SolverConfig) -> Result<CriticalSearch> {
    cfg.validate()?;
    check_j(problem, j)?;
    let m = problem.m();
    if m >= usize::BITS as usize || (1usize << m) > MAX_BRANCHES {
        return Err(CdtError::GuardExceeded { m });
    }
    let jc: Vec<usize> = (1..=m).filter(|k| !j.contains(*k)).collect();
    let layouts: Vec<Layout> = (0..1usize << jc.len())
        .map(|mask| {
            let active: IndexSet = jc
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &k)| k)
                .collect();
            Layout::new(problem, &active)
        })
        .collect();

    let tasks: Vec<(usize, usize)> = (0..layouts.len())
        .flat_map(|b| (0..cfg.multistarts).map(move |s| (b, s)))
        .collect();
    let outcomes: Vec<(StartOutcome, Option<PrimalDualPoint>)> = tasks
        .par_iter()
        .map(|&(b, s)| {
            let lay = &layouts[b];
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(((b as u64) << 32) | s as u64);
            let u0 = sample_start(problem, lay, cfg, &mut rng);
            match damped_newton(problem, lay, u0, cfg) {
                None => (StartOutcome::NoConvergence, None),
                Some(u) => {
                    let p = snap(problem, lay.unpack(&u));
                    let ok = lay
                        .screen
                        .iter()
                        .all(|&q| problem.term(q).q.eval(&p.x) <= cfg.classify_tol);
                    if ok {
                        (StartOutcome::Converged, Some(p))
                    } else {
                        (StartOutcome::Screened, None)
                    }
                }
            }
        })
        .collect();

    let mut diagnostics = SearchDiagnostics {
        branches: layouts.len(),
        starts_per_branch: cfg.multistarts,
        ..Default::default()
    };
    let mut roots = Vec::new();
    for (o, p) in outcomes {
        match o {
            StartOutcome::Converged => diagnostics.converged += 1,
            StartOutcome::NoConvergence => diagnostics.no_convergence += 1,
            StartOutcome::Screened => diagnostics.screened += 1,
        }
        roots.extend(p);
    }
    roots.sort_by(canonical_cmp);
    let mut kept: Vec<PrimalDualPoint> = Vec::new();
    for r in roots {
        if kept.iter().all(|k| distance(k, &r) > DEDUP_DIST) {
            kept.push(r);
        }
    }
    diagnostics.distinct = kept.len();
    if kept.is_empty() {
        log::warn!("no Newton start converged ({} branches)", diagnostics.branches);
    }
    let points = kept
        .into_iter()
        .map(|p| classify(problem, j, &p, cfg.classify_tol, cfg.feas_tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(CriticalSearch { points, diagnostics })
}

// ---------------------------------------------------------------------------
// Classification

#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    pub grad_x: f64,
    /// `None` when some `σ_k` is on the boundary of `dom V_k*`.
    pub grad_sigma: Option<f64>,
    pub grad_lambda_max: f64,
    /// `|⟨λ, ∇_λΞ⟩|`
    pub complementarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub point: PrimalDualPoint,
    pub j: IndexSet,
    pub gradients: Option<XiGradients>,
    pub residuals: Option<Residuals>,
    pub is_critical: bool,
    pub is_kkt: bool,
    pub is_j_lkkt: bool,
    pub membership: MembershipVerdict,
    /// `∇L(x, λ) = 0` in both `x` and `λ`.
    pub l_is_critical: bool,
    pub l_is_j_lkkt: bool,
    /// Outcome of checking the consequences `∇_λL = ∇_λΞ`, `(x, λ)` J-LKKT
    /// for `L` and `x ∈ X_{J ∪ Q₀ᶜ}`; `None` unless the point is a J-LKKT
    /// point of `Ξ` with `Q₀ᶜ ⊂ M_≠(λ)`.
    pub l_consequences_hold: Option<bool>,
    /// J-LKKT test on the dual side at `(λ, σ)`; `None` off `T` or on the
    /// boundary of `dom V*`.
    pub dual_j_lkkt: Option<bool>,
    pub feasibility: FeasibilityReport,
    pub objective: Option<f64>,
    pub not_classifiable: Option<String>,
}

impl CriticalPoint {
    pub fn one_plus_lambda_sigma(&self, k: usize) -> f64 {
        1.0 + self.point.lambda_k(k) * self.point.sigma[k]
    }
}

/// The sign/complementarity conditions on `λ` shared by every J-LKKT notion.
pub fn lambda_conditions(lambda: &DVector<f64>, grad_lambda: &DVector<f64>, j: &IndexSet, tol: f64) -> bool {
    lambda.iter().zip(grad_lambda.iter()).enumerate().all(|(i, (&l, &g))| {
        if j.contains(i + 1) {
            g.abs() <= tol
        } else {
            l >= -tol && g <= tol && (l * g).abs() <= tol
        }
    })
}

pub fn dual_is_j_lkkt(problem: &Problem, dp: &DualPoint, j: &IndexSet, tol: f64) -> Option<bool> {
    let g = dual_gradients(problem, dp).ok()?;
    Some(g.grad_sigma.amax() <= tol && lambda_conditions(dp.lambda(), &g.grad_lambda, j, tol))
}

pub fn classify(problem: &Problem, j: &IndexSet, p: &PrimalDualPoint, tol: f64, feas_tol: f64) -> Result<CriticalPoint> {
    check_j(problem, j)?;
    let point = normalize_sigma(problem, p);
    let dp = DualPoint::from_point(problem, &point)?;
    let membership = membership(problem, &dp, j);
    let feasibility = problem.feasible_for(&point.x, j, feas_tol);
    let objective = problem.objective(&point.x).ok();
    let mut cp = CriticalPoint {
        point,
        j: j.clone(),
        gradients: None,
        residuals: None,
        is_critical: false,
        is_kkt: false,
        is_j_lkkt: false,
        membership,
        l_is_critical: false,
        l_is_j_lkkt: false,
        l_consequences_hold: None,
        dual_j_lkkt: None,
        feasibility,
        objective,
        not_classifiable: None,
    };
    let grads = match xi_gradients(problem, &cp.point) {
        Ok(g) => g,
        Err(e) => {
            cp.not_classifiable = Some(e.to_string());
            return Ok(cp);
        }
    };
    let residuals = Residuals {
        grad_x: grads.grad_x.norm(),
        grad_sigma: grads.grad_sigma.as_ref().map(|g| g.norm()),
        grad_lambda_max: grads.grad_lambda.amax(),
        complementarity: cp.point.lambda.dot(&grads.grad_lambda).abs(),
    };
    let stationary = residuals.grad_x <= tol && residuals.grad_sigma.is_some_and(|g| g <= tol);
    cp.is_critical = stationary && residuals.grad_lambda_max <= tol;
    cp.is_kkt = stationary && lambda_conditions(&cp.point.lambda, &grads.grad_lambda, &IndexSet::empty(), tol);
    cp.is_j_lkkt = stationary && lambda_conditions(&cp.point.lambda, &grads.grad_lambda, j, tol);

    if let Ok(l) = lagrangian_value_grad(problem, &cp.point.x, &cp.point.lambda) {
        let gx_ok = l.grad_x.as_ref().is_some_and(|g| g.norm() <= tol);
        cp.l_is_critical = gx_ok && l.grad_lambda.amax() <= tol;
        cp.l_is_j_lkkt = gx_ok && lambda_conditions(&cp.point.lambda, &l.grad_lambda, j, tol);
        if cp.is_j_lkkt && problem.q0_complement().is_subset(&cp.point.m_neq()) {
            let same = (&l.grad_lambda - &grads.grad_lambda).amax() <= tol;
            let target = j.union(&problem.q0_complement());
            let feasible = problem.feasible_for(&cp.point.x, &target, tol).feasible;
            cp.l_consequences_hold = Some(same && cp.l_is_j_lkkt && feasible);
        }
    }
    cp.dual_j_lkkt = dual_is_j_lkkt(problem, &dp, j, tol);
    cp.gradients = Some(grads);
    cp.residuals = Some(residuals);
    Ok(cp)
}

// ---------------------------------------------------------------------------
// Certificates

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    UniqueGlobalMin,
    GlobalMin,
    NoCertificate,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::UniqueGlobalMin => "UNIQUE_GLOBAL_MIN",
            Verdict::GlobalMin => "GLOBAL_MIN",
            Verdict::NoCertificate => "NO_CERTIFICATE",
        })
    }
}

pub(crate) fn subscript(k: usize) -> String {
    k.to_string()
        .chars()
        .map(|c| char::from_u32(0x2080 + c.to_digit(10).unwrap_or(0)).unwrap_or(c))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum FailedHypothesis {
    NotClassifiable(String),
    NotJLkkt,
    SigmaNotNormalized,
    SigmaNotInterior,
    LambdaPositivity { j: usize, value: f64 },
    LambdaPositivityIndeterminate { j: usize, value: f64 },
    GNotPsd { min_eig: f64 },
    XInfeasible,
}

impl FailedHypothesis {
    /// The hypothesis that does not hold, e.g. `λ₁>0`.
    pub fn label(&self) -> String {
        match self {
            FailedHypothesis::NotClassifiable(_) => "classifiable".into(),
            FailedHypothesis::NotJLkkt => "J-LKKT".into(),
            FailedHypothesis::SigmaNotNormalized => "σ_Q=0".into(),
            FailedHypothesis::SigmaNotInterior => "σ∈int I*".into(),
            FailedHypothesis::LambdaPositivity { j, .. } => format!("λ{}>0", subscript(*j)),
            FailedHypothesis::LambdaPositivityIndeterminate { .. } => "λ positivity indeterminate".into(),
            FailedHypothesis::GNotPsd { .. } => "G⪰0".into(),
            FailedHypothesis::XInfeasible => "x feasible".into(),
        }
    }
}

impl fmt::Display for FailedHypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailedHypothesis::NotClassifiable(why) => write!(f, "{} ({why})", self.label()),
            FailedHypothesis::LambdaPositivity { j, value }
            | FailedHypothesis::LambdaPositivityIndeterminate { j, value } => {
                write!(f, "{} (λ{} = {value:e})", self.label(), subscript(*j))
            }
            FailedHypothesis::GNotPsd { min_eig } => write!(f, "{} (min eigenvalue {min_eig:e})", self.label()),
            _ => f.write_str(&self.label()),
        }
    }
}

/// Published theorems whose hypotheses a point may satisfy while the
/// corrected certificate is refused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum HistoricalTheorem {
    GaoRuaSheTh2,
    LatGaoTh2,
    RuaGaoTh3,
    MorGao17Th2,
    MorGao16Th3,
}

impl fmt::Display for HistoricalTheorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HistoricalTheorem::GaoRuaSheTh2 => "GaoRuaShe-Th2",
            HistoricalTheorem::LatGaoTh2 => "LatGao-Th2",
            HistoricalTheorem::RuaGaoTh3 => "RuaGao-Th3",
            HistoricalTheorem::MorGao17Th2 => "MorGao17-Th2",
            HistoricalTheorem::MorGao16Th3 => "MorGao16-Th3",
        })
    }
}

/// Renders `(P_K)` the way the literature does: `P_i` for `K = ∅`, `P_e` for all indices.
pub fn problem_label(k: &IndexSet, m: usize) -> String {
    if k.is_empty() {
        "P_i".into()
    } else if k.len() == m {
        "P_e".into()
    } else {
        format!("P_{k}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub verdict: Verdict,
    /// `J ∩ Q`: the certified point solves `(P_{J∩Q})`.
    pub solved: IndexSet,
    /// `J ∪ Q₀ᶜ`: the certified point lies in `X_{J∪Q₀ᶜ}`.
    pub attained_in: IndexSet,
    pub value: Option<f64>,
    pub failed: Vec<FailedHypothesis>,
    pub wrongly_accepted_by: Vec<HistoricalTheorem>,
}

impl Certificate {
    pub fn is_certified(&self) -> bool {
        self.verdict != Verdict::NoCertificate
    }
}

pub fn certify_global(problem: &Problem, j: &IndexSet, cp: &CriticalPoint, tol: f64, feas_tol: f64) -> Result<Certificate> {
    let reclassified;
    let cp = if &cp.j == j {
        cp
    } else {
        reclassified = classify(problem, j, &cp.point, tol, feas_tol)?;
        &reclassified
    };
    let q = problem.q_set();
    let mut failed = Vec::new();
    if let Some(why) = &cp.not_classifiable {
        failed.push(FailedHypothesis::NotClassifiable(why.clone()));
    }
    if cp.not_classifiable.is_none() && !cp.is_j_lkkt {
        failed.push(FailedHypothesis::NotJLkkt);
    }
    if !cp.membership.sigma_q_zero {
        failed.push(FailedHypothesis::SigmaNotNormalized);
    }
    let interior = (0..=problem.m()).all(|k| problem.term(k).v.conj_dom().interior_contains(cp.point.sigma[k]));
    if !interior {
        failed.push(FailedHypothesis::SigmaNotInterior);
    }
    for jj in problem.q0_complement().iter() {
        let value = cp.point.lambda[jj - 1];
        if value <= 0.0 {
            failed.push(FailedHypothesis::LambdaPositivity { j: jj, value });
        } else if value <= POSITIVITY_THRESHOLD {
            failed.push(FailedHypothesis::LambdaPositivityIndeterminate { j: jj, value });
        }
    }
    if !cp.membership.g_psd {
        failed.push(FailedHypothesis::GNotPsd {
            min_eig: cp.membership.min_eig,
        });
    }
    if !cp.feasibility.feasible {
        failed.push(FailedHypothesis::XInfeasible);
    }
    let verdict = if !failed.is_empty() {
        Verdict::NoCertificate
    } else if cp.membership.g_pd {
        Verdict::UniqueGlobalMin
    } else {
        Verdict::GlobalMin
    };
    let wrongly_accepted_by = if verdict == Verdict::NoCertificate {
        historical_acceptance(problem, j, cp, tol)
    } else {
        Vec::new()
    };
    Ok(Certificate {
        verdict,
        solved: j.intersection(&q),
        attained_in: j.union(&problem.q0_complement()),
        value: (verdict != Verdict::NoCertificate).then_some(cp.objective).flatten(),
        failed,
        wrongly_accepted_by,
    })
}

/// Published theorems whose hypotheses hold at `cp`.
fn historical_acceptance(problem: &Problem, j: &IndexSet, cp: &CriticalPoint, tol: f64) -> Vec<HistoricalTheorem> {
    let mv = &cp.membership;
    let in_x = problem.membership_x0(&cp.point.x) != DomainMembership::Outside;
    let base = in_x && mv.sigma_in_conj_dom && mv.lambda_nonneg;
    let mut out = Vec::new();
    if j.is_empty() && problem.is_quadratic(0) && base && cp.is_critical && mv.g_psd && mv.in_t_col {
        out.push(HistoricalTheorem::GaoRuaSheTh2);
    }
    if base && cp.is_critical && mv.historical.latgao_sa_plus {
        out.push(HistoricalTheorem::LatGaoTh2);
    }
    let in_x_i = problem.feasible_for(&cp.point.x, &IndexSet::empty(), tol).feasible;
    if j.is_empty() && base && cp.is_kkt && !in_x_i {
        out.push(HistoricalTheorem::RuaGaoTh3);
    }
    if let ProblemFamily::MsGao(_) = problem.family() {
        let stationary = mv.in_t && cp.dual_j_lkkt == Some(true) && cp.is_critical;
        let mu = cp.point.lambda[1];
        if stationary && mu >= 0.0 && mv.historical.morgao17_sa_plus == Some(true) {
            out.push(HistoricalTheorem::MorGao17Th2);
        }
        if stationary && mv.historical.morgao16_sc_plus == Some(true) {
            out.push(HistoricalTheorem::MorGao16Th3);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Perfect duality

#[derive(Debug, Clone, PartialEq)]
pub struct PerfectDualityReport {
    pub f: f64,
    pub xi: f64,
    pub d: f64,
    pub max_gap: f64,
    pub pass: bool,
}

/// Compares `f(x̄)`, `Ξ(x̄, λ̄, σ̄)` and `D(λ̄, σ̄)`.
pub fn perfect_duality_check(problem: &Problem, cp: &CriticalPoint, tol: f64) -> Result<PerfectDualityReport> {
    let g = cp
        .gradients
        .as_ref()
        .ok_or_else(|| CdtError::NotApplicable("Ξ gradients unavailable".into()))?;
    let comp = cp.point.lambda.dot(&g.grad_lambda).abs();
    let s0 = g.grad_sigma.as_ref().map(|s| s[0].abs());
    if g.grad_x.norm() > tol || comp > tol || !s0.is_some_and(|s| s <= tol) {
        return Err(CdtError::NotApplicable(
            "needs ∇ₓΞ = 0, ∂Ξ/∂σ₀ = 0 and ⟨λ, ∇_λΞ⟩ = 0".into(),
        ));
    }
    let p = &cp.point;
    let f = problem.objective(&p.x)?;
    let xi = xi_value(problem, p)?;
    let d = dual_value(problem, &DualPoint::from_point(problem, p)?)?;
    let max_gap = (f - xi).abs().max((xi - d).abs()).max((f - d).abs());
    Ok(PerfectDualityReport {
        f,
        xi,
        d,
        max_gap,
        pass: max_gap <= tol * (1.0 + f.abs()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{example1, msgao, ConstraintTerm, MsGaoParams, QuadraticFunction};

    fn s3() -> f64 {
        3f64.sqrt()
    }

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn example1_six_points() {
        let p = example1();
        let res = find_critical_points(&p, &IndexSet::empty(), &cfg()).unwrap();
        assert_eq!(res.points.len(), 6, "{:?}", res.diagnostics);
        let expected = [
            (-2.0 * s3(), -0.5 * (s3() + 1.0), 2.0),
            (-2.0, 2.0, -2.0),
            (2.0, -1.0, -2.0),
            (2.0 * s3(), 0.5 * (s3() - 1.0), 2.0),
            (6.0, 0.0, 14.0 - 8.0 * s3()),
            (6.0, 0.0, 14.0 + 8.0 * s3()),
        ];
        for (cp, (x, l, s)) in res.points.iter().zip(expected) {
            let got = &cp.point;
            assert!((got.x[0] - x).abs() < 1e-9, "{got:?}");
            assert!((got.lambda[0] - l).abs() < 1e-9);
            assert!((got.sigma[1] - s).abs() < 1e-9);
            assert_eq!(got.sigma[0], 0.0);
            assert!(cp.is_critical);
        }
    }

    #[test]
    fn example1_certificates() {
        let p = example1();
        let e = IndexSet::empty();
        let res = find_critical_points(&p, &e, &cfg()).unwrap();
        let certs: Vec<_> = res
            .points
            .iter()
            .map(|cp| certify_global(&p, &e, cp, 1e-8, 1e-8).unwrap())
            .collect();
        let unique: Vec<_> = certs.iter().filter(|c| c.verdict == Verdict::UniqueGlobalMin).collect();
        assert_eq!(unique.len(), 1);
        assert!((unique[0].value.unwrap() - (6.0 - 12.0 * s3())).abs() < 1e-10);
        assert_eq!(problem_label(&unique[0].solved, 1), "P_i");
        for (cp, c) in res.points.iter().zip(&certs) {
            if cp.point.lambda[0] == 0.0 {
                assert_eq!(c.verdict, Verdict::NoCertificate);
                assert!(c.failed.iter().any(|f| f.label() == "λ₁>0"));
                assert!(c.wrongly_accepted_by.contains(&HistoricalTheorem::GaoRuaSheTh2));
                assert!(c.wrongly_accepted_by.contains(&HistoricalTheorem::RuaGaoTh3));
                assert!(!cp.l_is_critical);
                assert!(!cp.feasibility.feasible);
            }
        }
        let minus = &certs[0];
        assert!(matches!(minus.failed.as_slice(), [FailedHypothesis::NotJLkkt, FailedHypothesis::LambdaPositivity { .. }, FailedHypothesis::GNotPsd { .. }]));
    }

    #[test]
    fn example1_with_equality_gives_same_point() {
        let p = example1();
        let j: IndexSet = [1].into_iter().collect();
        let res = find_critical_points(&p, &j, &cfg()).unwrap();
        assert_eq!(res.points.len(), 4);
        let certified: Vec<_> = res
            .points
            .iter()
            .filter(|cp| certify_global(&p, &j, cp, 1e-8, 1e-8).unwrap().is_certified())
            .collect();
        assert_eq!(certified.len(), 1);
        assert!((certified[0].point.x[0] - 2.0 * s3()).abs() < 1e-9);
    }

    #[test]
    fn unconstrained_quadratic() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let b = DVector::from_column_slice(&[1.0, -1.0]);
        let q0 = QuadraticFunction::new(a.clone(), b.clone(), 0.0).unwrap();
        let p = Problem::new(2, vec![ConstraintTerm::quadratic(q0)], IndexSet::empty()).unwrap();
        let res = find_critical_points(&p, &IndexSet::empty(), &cfg()).unwrap();
        assert_eq!(res.points.len(), 1);
        let want = a.lu().solve(&b).unwrap();
        assert!((&res.points[0].point.x - want).norm() < 1e-12);
        let c = certify_global(&p, &IndexSet::empty(), &res.points[0], 1e-8, 1e-8).unwrap();
        assert_eq!(c.verdict, Verdict::UniqueGlobalMin);
    }

    #[test]
    fn msgao_four_points_no_certificate() {
        let p = msgao(MsGaoParams::default()).unwrap();
        let res = find_critical_points(&p, p.j(), &cfg()).unwrap();
        assert_eq!(res.points.len(), 4, "{:?}", res.diagnostics);
        for cp in &res.points {
            let c = certify_global(&p, p.j(), cp, 1e-8, 1e-8).unwrap();
            assert_eq!(c.verdict, Verdict::NoCertificate);
            assert_eq!(cp.membership.historical.morgao17_sa_plus, Some(false));
        }
    }

    #[test]
    fn zero_problem_origin_is_critical() {
        let z = QuadraticFunction::zero(1);
        let p = Problem::new(
            1,
            vec![ConstraintTerm::quadratic(z.clone()), ConstraintTerm::quadratic(z)],
            IndexSet::empty(),
        )
        .unwrap();
        let pt = PrimalDualPoint::from_slices(&[0.0], &[0.0], &[0.0, 0.0]);
        let cp = classify(&p, &IndexSet::empty(), &pt, 1e-8, 1e-8).unwrap();
        assert!(cp.is_critical && cp.is_kkt && cp.is_j_lkkt);
    }

    #[test]
    fn guard() {
        let z = QuadraticFunction::zero(1);
        let terms = vec![ConstraintTerm::quadratic(z); 14];
        let p = Problem::new(1, terms, IndexSet::empty()).unwrap();
        assert!(matches!(
            find_critical_points(&p, &IndexSet::empty(), &cfg()),
            Err(CdtError::GuardExceeded { m: 13 })
        ));
    }

    #[test]
    fn positivity_indeterminate() {
        let p = example1();
        let pt = PrimalDualPoint::from_slices(&[6.0], &[5e-11], &[0.0, 14.0 - 8.0 * s3()]);
        let cp = classify(&p, &IndexSet::empty(), &pt, 1e-8, 1e-8).unwrap();
        let c = certify_global(&p, &IndexSet::empty(), &cp, 1e-8, 1e-8).unwrap();
        assert!(c
            .failed
            .iter()
            .any(|f| matches!(f, FailedHypothesis::LambdaPositivityIndeterminate { j: 1, .. })));
    }

    #[test]
    fn subscripts() {
        assert_eq!(subscript(1), "₁");
        assert_eq!(subscript(12), "₁₂");
    }
}
