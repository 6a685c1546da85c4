//! The Lagrangian `L(x, λ) = Σ λ_k g_k(x)` and the extended Lagrangian
//! `Ξ(x, λ, σ) = Σ λ_k [q_k(x) + σ_k Λ_k(x) − V_k*(σ_k)]`, both with `λ₀ = 1`.

use nalgebra::{DMatrix, DVector};

use crate::error::{CdtError, Result};
use crate::problem::{IndexSet, Problem};

pub const DEFAULT_VALUE_TOL: f64 = 1e-9;

/// `(x, λ, σ)` with `λ ∈ ℝᵐ` and `σ = (σ₀, …, σ_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualPoint {
    pub x: DVector<f64>,
    pub lambda: DVector<f64>,
    pub sigma: DVector<f64>,
}

impl PrimalDualPoint {
    pub fn new(x: DVector<f64>, lambda: DVector<f64>, sigma: DVector<f64>) -> Self {
        Self { x, lambda, sigma }
    }

    pub fn from_slices(x: &[f64], lambda: &[f64], sigma: &[f64]) -> Self {
        Self {
            x: DVector::from_column_slice(x),
            lambda: DVector::from_column_slice(lambda),
            sigma: DVector::from_column_slice(sigma),
        }
    }

    /// `λ_k` with the convention `λ₀ = 1`.
    pub fn lambda_k(&self, k: usize) -> f64 {
        multiplier(&self.lambda, k)
    }

    /// `M_≠(λ) = {j : λ_j ≠ 0}` (exact test; snap first).
    pub fn m_neq(&self) -> IndexSet {
        m_neq(&self.lambda)
    }

    fn check_shape(&self, problem: &Problem) -> Result<()> {
        check_shapes(problem, Some(&self.x), &self.lambda, Some(&self.sigma))
    }
}

pub(crate) fn multiplier(lambda: &DVector<f64>, k: usize) -> f64 {
    if k == 0 {
        1.0
    } else {
        lambda[k - 1]
    }
}

pub fn m_neq(lambda: &DVector<f64>) -> IndexSet {
    lambda
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(j, _)| j + 1)
        .collect()
}

pub(crate) fn check_shapes(
    problem: &Problem,
    x: Option<&DVector<f64>>,
    lambda: &DVector<f64>,
    sigma: Option<&DVector<f64>>,
) -> Result<()> {
    let bad = x.is_some_and(|x| x.len() != problem.n())
        || lambda.len() != problem.m()
        || sigma.is_some_and(|s| s.len() != problem.m() + 1);
    if bad {
        return Err(CdtError::InvalidParameter(format!(
            "point dimensions do not match n={}, m={}",
            problem.n(),
            problem.m()
        )));
    }
    Ok(())
}

/// `G = Σ λ_k (A_k + σ_k C_k)`, `F = Σ λ_k (b_k + σ_k d_k)`, `E = Σ λ_k (c_k + σ_k e_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledQuadratic {
    pub g: DMatrix<f64>,
    pub f: DVector<f64>,
    pub e: f64,
}

pub fn assemble(problem: &Problem, lambda: &DVector<f64>, sigma: &DVector<f64>) -> AssembledQuadratic {
    let n = problem.n();
    let mut g = DMatrix::zeros(n, n);
    let mut f = DVector::zeros(n);
    let mut e = 0.0;
    for (k, t) in problem.terms().iter().enumerate() {
        let lk = multiplier(lambda, k);
        if lk == 0.0 {
            continue;
        }
        g += t.q.a() * lk;
        f += t.q.b() * lk;
        e += lk * t.q.c();
        if !t.is_quadratic {
            let s = sigma[k];
            g += t.lambda_map.a() * (lk * s);
            f += t.lambda_map.b() * (lk * s);
            e += lk * s * t.lambda_map.c();
        }
    }
    AssembledQuadratic { g, f, e }
}

pub(crate) fn conj_value_at(problem: &Problem, k: usize, s: f64) -> Result<f64> {
    let v = &problem.term(k).v;
    v.conj_value(s).ok_or_else(|| CdtError::DomainExit {
        index: k,
        what: "σ_k",
        value: s,
        domain: v.conj_dom().to_string(),
    })
}

pub(crate) fn conj_deriv_at(problem: &Problem, k: usize, s: f64) -> Option<f64> {
    problem.term(k).v.conj_deriv(s)
}

/// `Σ_k λ_k V_k*(σ_k)`
pub(crate) fn conjugate_sum(problem: &Problem, lambda: &DVector<f64>, sigma: &DVector<f64>) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..=problem.m() {
        let c = conj_value_at(problem, k, sigma[k])?;
        total += multiplier(lambda, k) * c;
    }
    Ok(total)
}

/// `q_j(x) + σ_j Λ_j(x) − V_j*(σ_j)`, the `λ_j`-partial of `Ξ`.
pub(crate) fn lambda_partial(problem: &Problem, j: usize, x: &DVector<f64>, s: f64) -> Result<f64> {
    let t = problem.term(j);
    let conj = conj_value_at(problem, j, s)?;
    Ok(t.q.eval(x) + s * t.lambda_map.eval(x) - conj)
}

pub fn xi_value(problem: &Problem, p: &PrimalDualPoint) -> Result<f64> {
    p.check_shape(problem)?;
    let aq = assemble(problem, &p.lambda, &p.sigma);
    let quad = 0.5 * p.x.dot(&(&aq.g * &p.x)) - aq.f.dot(&p.x) + aq.e;
    Ok(quad - conjugate_sum(problem, &p.lambda, &p.sigma)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct XiGradients {
    pub grad_x: DVector<f64>,
    pub grad_lambda: DVector<f64>,
    /// `None` when some `σ_k` sits on the boundary of `dom V_k*`.
    pub grad_sigma: Option<DVector<f64>>,
}

pub fn xi_gradients(problem: &Problem, p: &PrimalDualPoint) -> Result<XiGradients> {
    p.check_shape(problem)?;
    let aq = assemble(problem, &p.lambda, &p.sigma);
    let grad_x = &aq.g * &p.x - &aq.f;
    let grad_lambda = DVector::from_iterator(
        problem.m(),
        (1..=problem.m())
            .map(|j| lambda_partial(problem, j, &p.x, p.sigma[j]))
            .collect::<Result<Vec<_>>>()?,
    );
    let grad_sigma = (0..=problem.m())
        .map(|k| {
            let lam = problem.term(k).lambda_map.eval(&p.x);
            conj_deriv_at(problem, k, p.sigma[k]).map(|d| p.lambda_k(k) * (lam - d))
        })
        .collect::<Option<Vec<_>>>()
        .map(DVector::from_vec);
    // σ must at least lie in dom V* for the other blocks to make sense
    conjugate_sum(problem, &p.lambda, &p.sigma)?;
    Ok(XiGradients {
        grad_x,
        grad_lambda,
        grad_sigma,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianEval {
    pub value: f64,
    /// `None` when `x ∈ X ∖ X₀`.
    pub grad_x: Option<DVector<f64>>,
    /// `∂L/∂λ_j = g_j(x)`
    pub grad_lambda: DVector<f64>,
}

pub fn lagrangian_value_grad(problem: &Problem, x: &DVector<f64>, lambda: &DVector<f64>) -> Result<LagrangianEval> {
    check_shapes(problem, Some(x), lambda, None)?;
    let mut value = 0.0;
    let mut grad_lambda = DVector::zeros(problem.m());
    let mut grad_x = Some(DVector::zeros(problem.n()));
    for (k, t) in problem.terms().iter().enumerate() {
        let g = problem.eval_g(k, x)?;
        let lk = multiplier(lambda, k);
        value += lk * g;
        if k > 0 {
            grad_lambda[k - 1] = g;
        }
        let slope = if t.is_quadratic {
            Some(0.0)
        } else {
            t.v.deriv(t.lambda_map.eval(x))
        };
        grad_x = match (grad_x, slope) {
            (Some(acc), Some(vp)) => Some(acc + (t.q.grad(x) + t.lambda_map.grad(x) * vp) * lk),
            _ => None,
        };
    }
    Ok(LagrangianEval {
        value,
        grad_x,
        grad_lambda,
    })
}

/// Comparison of `L(x, λ)` and `Ξ(x, λ, σ)` at a normalized point.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationReport {
    /// `(k, holds)` for `k ∈ M_≠⁰(λ) ∖ Q`: `Λ_k(x) ∈ int I_k`, `σ_k ∈ int I_k*`, `σ_k = V_k'(Λ_k(x))`.
    pub conjugacy: Vec<(usize, bool)>,
    pub conjugacy_holds: bool,
    /// `|L − Ξ|`
    pub value_gap: f64,
    /// `‖∇ₓL − ∇ₓΞ‖`, when `x ∈ X₀`.
    pub grad_x_gap: Option<f64>,
    /// `∂L/∂λ_j − ∂Ξ/∂λ_j` for `j = 1..m`.
    pub lambda_slack: Vec<f64>,
    /// slack ≥ −tol everywhere and |slack| ≤ tol on `M_≠(λ) ∪ Q₀`.
    pub slack_signs_ok: bool,
}

pub fn check_l_xi_relations(problem: &Problem, p: &PrimalDualPoint, tol: f64) -> Result<RelationReport> {
    p.check_shape(problem)?;
    let q = problem.q_set();
    let mut support = p.m_neq();
    support.insert(0);
    let mut conjugacy = Vec::new();
    for k in support.iter().filter(|&k| !q.contains(k)) {
        let t = problem.term(k);
        let lam = t.lambda_map.eval(&p.x);
        let s = p.sigma[k];
        let holds = t.v.dom().interior_contains(lam)
            && t.v.conj_dom().interior_contains(s)
            && t
                .v
                .deriv(lam)
                .is_some_and(|d| (d - s).abs() <= tol * (1.0 + s.abs()));
        conjugacy.push((k, holds));
    }
    let l = lagrangian_value_grad(problem, &p.x, &p.lambda)?;
    let xi = xi_value(problem, p)?;
    let xg = xi_gradients(problem, p)?;
    let grad_x_gap = l.grad_x.as_ref().map(|g| (g - &xg.grad_x).norm());
    let lambda_slack: Vec<f64> = (0..problem.m())
        .map(|i| l.grad_lambda[i] - xg.grad_lambda[i])
        .collect();
    let q0 = problem.q0_set();
    let tight = p.m_neq().union(&q0);
    let slack_signs_ok = lambda_slack.iter().enumerate().all(|(i, &s)| {
        let scale = 1.0 + l.grad_lambda[i].abs();
        s >= -tol * scale && (!tight.contains(i + 1) || s.abs() <= tol * scale)
    });
    Ok(RelationReport {
        conjugacy_holds: conjugacy.iter().all(|(_, h)| *h),
        conjugacy,
        value_gap: (l.value - xi).abs(),
        grad_x_gap,
        lambda_slack,
        slack_signs_ok,
    })
}
