//! The dual function `D(λ, σ) = Ξ(ξ(λ, σ), λ, σ)` where `G ξ = F`, and the
//! dual feasibility sets built on `G`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{CdtError, Result};
use crate::lagrangian::{
    assemble, check_shapes, conj_deriv_at, conjugate_sum, lambda_partial, multiplier, AssembledQuadratic,
    PrimalDualPoint,
};
use crate::problem::{IndexSet, Problem, ProblemFamily};

/// Relative cutoff on `|eig|` below which `G` counts as singular.
pub const RANK_CUTOFF: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;
pub const PD_TOL: f64 = 1e-10;
pub const RANGE_TOL: f64 = 1e-8;

/// `(λ, σ)` with `G`, `F`, `E`, the spectrum of `G` and a solution of `Gx = F`.
#[derive(Debug, Clone)]
pub struct DualPoint {
    lambda: DVector<f64>,
    sigma: DVector<f64>,
    assembled: AssembledQuadratic,
    eigenvalues: DVector<f64>,
    nonsingular: bool,
    solution: DVector<f64>,
    residual: f64,
}

impl DualPoint {
    pub fn new(problem: &Problem, lambda: DVector<f64>, sigma: DVector<f64>) -> Result<Self> {
        check_shapes(problem, None, &lambda, Some(&sigma))?;
        let assembled = assemble(problem, &lambda, &sigma);
        let eig = SymmetricEigen::new(assembled.g.clone());
        let scale = eig.eigenvalues.amax();
        let cutoff = RANK_CUTOFF * scale;
        let nonsingular = scale > 0.0 && eig.eigenvalues.iter().all(|e| e.abs() > cutoff);
        let solution = if nonsingular {
            assembled
                .g
                .clone()
                .lu()
                .solve(&assembled.f)
                .unwrap_or_else(|| min_norm_solve(&eig, &assembled.f, cutoff))
        } else {
            min_norm_solve(&eig, &assembled.f, cutoff)
        };
        let residual = (&assembled.g * &solution - &assembled.f).norm();
        let mut eigenvalues = eig.eigenvalues;
        eigenvalues.as_mut_slice().sort_by(f64::total_cmp);
        Ok(Self {
            lambda,
            sigma,
            assembled,
            eigenvalues,
            nonsingular,
            solution,
            residual,
        })
    }

    pub fn from_slices(problem: &Problem, lambda: &[f64], sigma: &[f64]) -> Result<Self> {
        Self::new(
            problem,
            DVector::from_column_slice(lambda),
            DVector::from_column_slice(sigma),
        )
    }

    pub fn from_point(problem: &Problem, p: &PrimalDualPoint) -> Result<Self> {
        Self::new(problem, p.lambda.clone(), p.sigma.clone())
    }

    pub fn lambda(&self) -> &DVector<f64> {
        &self.lambda
    }

    pub fn sigma(&self) -> &DVector<f64> {
        &self.sigma
    }

    pub fn assembled(&self) -> &AssembledQuadratic {
        &self.assembled
    }

    /// Eigenvalues of `G` in increasing order.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.min()
    }

    pub fn is_nonsingular(&self) -> bool {
        self.nonsingular
    }

    /// `‖G x − F‖` for the cached solution.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn in_range(&self) -> bool {
        self.nonsingular || self.residual <= RANGE_TOL * (1.0 + self.assembled.f.norm())
    }

    /// True when the cached solution is the minimum-norm one on a singular `G`.
    pub fn is_min_norm(&self) -> bool {
        !self.nonsingular
    }

    pub fn normalized(&self, problem: &Problem) -> Result<Self> {
        Self::new(problem, self.lambda.clone(), normalize_sigma_vec(problem, &self.sigma))
    }
}

fn min_norm_solve(eig: &SymmetricEigen<f64, nalgebra::Dyn>, f: &DVector<f64>, cutoff: f64) -> DVector<f64> {
    let mut x = DVector::zeros(f.len());
    for (i, &e) in eig.eigenvalues.iter().enumerate() {
        if e.abs() > cutoff {
            let v = eig.eigenvectors.column(i);
            x += v * (v.dot(f) / e);
        }
    }
    x
}

pub fn normalize_sigma_vec(problem: &Problem, sigma: &DVector<f64>) -> DVector<f64> {
    let mut s = sigma.clone();
    for k in problem.q_set().iter() {
        s[k] = 0.0;
    }
    s
}

/// Sets `σ_k = 0` for every `k ∈ Q`.
pub fn normalize_sigma(problem: &Problem, p: &PrimalDualPoint) -> PrimalDualPoint {
    PrimalDualPoint {
        x: p.x.clone(),
        lambda: p.lambda.clone(),
        sigma: normalize_sigma_vec(problem, &p.sigma),
    }
}

/// `ξ(λ, σ)`; the minimum-norm solution on `T_col ∖ T`.
pub fn xi_point(dp: &DualPoint) -> Result<DVector<f64>> {
    if !dp.in_range() {
        return Err(CdtError::NotInTcol { residual: dp.residual });
    }
    Ok(dp.solution.clone())
}

pub fn dual_value(problem: &Problem, dp: &DualPoint) -> Result<f64> {
    let x = xi_point(dp)?;
    let aq = &dp.assembled;
    Ok(-0.5 * aq.f.dot(&x) + aq.e - conjugate_sum(problem, &dp.lambda, &dp.sigma)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualGradients {
    pub grad_lambda: DVector<f64>,
    pub grad_sigma: DVector<f64>,
}

pub fn dual_gradients(problem: &Problem, dp: &DualPoint) -> Result<DualGradients> {
    if !dp.nonsingular {
        return Err(CdtError::UndefinedGradient("G is singular".into()));
    }
    let x = &dp.solution;
    let grad_lambda = (1..=problem.m())
        .map(|j| lambda_partial(problem, j, x, dp.sigma[j]))
        .collect::<Result<Vec<_>>>()?;
    let grad_sigma = (0..=problem.m())
        .map(|k| {
            let s = dp.sigma[k];
            let d = conj_deriv_at(problem, k, s).ok_or_else(|| {
                CdtError::UndefinedGradient(format!("σ_{k} = {s} is not interior to dom V*"))
            })?;
            Ok(multiplier(&dp.lambda, k) * (problem.term(k).lambda_map.eval(x) - d))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DualGradients {
        grad_lambda: DVector::from_vec(grad_lambda),
        grad_sigma: DVector::from_vec(grad_sigma),
    })
}

/// Dual feasible sets of earlier published theorems, for annotation only.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HistoricalSets {
    /// `{(λ,σ) ∈ T⁺ | J ⊂ M_≠(λ)}`
    pub latgao_sa_plus: bool,
    /// `{(λ,σ) ∈ T⁺ | M_≠(λ) = {1..m}}`
    pub ruagao_sa_plus: bool,
    /// Two-block instance only: `ς ∈ [−αη, ∞)` and `(1+μς)(I+λA) − I` invertible.
    pub morgao17_sa: Option<bool>,
    /// ... with `I+λA ≻ 0` and `(1+μς)(I+λA) − I ≻ 0`.
    pub morgao17_sa_plus: Option<bool>,
    /// `morgao17_sa` with `λ ≠ 0`, `μ ≠ 0`.
    pub morgao16_sa: Option<bool>,
    /// `morgao16_sa` with `λ > 0`, `μ > 0` and the two definiteness conditions.
    pub morgao16_sc_plus: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipVerdict {
    pub sigma_in_conj_dom: bool,
    pub in_t: bool,
    pub in_t_col: bool,
    pub sigma_q_zero: bool,
    /// `λ_j ≥ 0` for `j ∈ Jᶜ`
    pub in_gamma_j: bool,
    /// `λ_j ≥ 0` for `j ∉ J ∩ Q`
    pub in_gamma_jq: bool,
    pub lambda_nonneg: bool,
    pub g_psd: bool,
    pub g_pd: bool,
    pub min_eig: f64,
    pub in_t_q: bool,
    pub in_t_q_col: bool,
    pub in_t_q_j_plus: bool,
    pub in_t_q_col_j_plus: bool,
    pub in_t_plus: bool,
    pub in_t_col_plus: bool,
    pub historical: HistoricalSets,
}

pub fn membership(problem: &Problem, dp: &DualPoint, j: &IndexSet) -> MembershipVerdict {
    let m = problem.m();
    let sigma_in_conj_dom = (0..=m).all(|k| problem.term(k).v.conj_dom().contains(dp.sigma[k]));
    let in_t = sigma_in_conj_dom && dp.nonsingular;
    let in_t_col = sigma_in_conj_dom && dp.in_range();
    let sigma_q_zero = problem.q_set().iter().all(|k| dp.sigma[k] == 0.0);
    let nonneg_off = |skip: &IndexSet| (1..=m).filter(|i| !skip.contains(*i)).all(|i| dp.lambda[i - 1] >= 0.0);
    let in_gamma_j = nonneg_off(j);
    let in_gamma_jq = nonneg_off(&j.intersection(&problem.q_set()));
    let lambda_nonneg = nonneg_off(&IndexSet::empty());
    let min_eig = dp.min_eigenvalue();
    let g_psd = min_eig >= -PSD_TOL;
    let g_pd = min_eig >= PD_TOL;
    let in_t_q = in_t && sigma_q_zero;
    let in_t_q_col = in_t_col && sigma_q_zero;
    let in_t_plus = in_t && lambda_nonneg && g_pd;
    let support = crate::lagrangian::m_neq(&dp.lambda);
    let mut historical = HistoricalSets {
        latgao_sa_plus: in_t_plus && j.is_subset(&support),
        ruagao_sa_plus: in_t_plus && support.len() == m,
        ..Default::default()
    };
    if let ProblemFamily::MsGao(params) = problem.family() {
        let (lam, mu, vs) = (dp.lambda[0], dp.lambda[1], dp.sigma[2]);
        let ia = 1.0 + lam * problem.term(1).q.a()[(0, 0)];
        let p = (1.0 + mu * vs) * ia - 1.0;
        let declared = vs >= -params.alpha * params.eta;
        let invertible = p.abs() > RANK_CUTOFF;
        let definite = ia >= PD_TOL && p >= PD_TOL;
        let sa17 = declared && invertible;
        let sa16 = sa17 && lam != 0.0 && mu != 0.0;
        historical.morgao17_sa = Some(sa17);
        historical.morgao17_sa_plus = Some(sa17 && definite);
        historical.morgao16_sa = Some(sa16);
        historical.morgao16_sc_plus = Some(sa16 && lam > 0.0 && mu > 0.0 && definite);
    }
    MembershipVerdict {
        sigma_in_conj_dom,
        in_t,
        in_t_col,
        sigma_q_zero,
        in_gamma_j,
        in_gamma_jq,
        lambda_nonneg,
        g_psd,
        g_pd,
        min_eig,
        in_t_q,
        in_t_q_col,
        in_t_q_j_plus: in_t_q && in_gamma_jq && g_pd,
        in_t_q_col_j_plus: in_t_q_col && in_gamma_jq && g_psd,
        in_t_plus,
        in_t_col_plus: in_t_col && lambda_nonneg && g_psd,
        historical,
    }
}

/// `G(λ, σ)` without the cached factorizations.
pub fn g_matrix(problem: &Problem, lambda: &DVector<f64>, sigma: &DVector<f64>) -> DMatrix<f64> {
    assemble(problem, lambda, sigma).g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{example1, msgao, MsGaoParams};

    fn s3() -> f64 {
        3f64.sqrt()
    }

    /// `D(λ; σ₀, σ₁) = −18/(1+λσ₁) − σ₀²/2 − λ(σ₁²/2 + 4σ₁ + 2)`
    fn example1_closed_form(l: f64, s0: f64, s1: f64) -> f64 {
        -18.0 / (1.0 + l * s1) - 0.5 * s0 * s0 - l * (0.5 * s1 * s1 + 4.0 * s1 + 2.0)
    }

    #[test]
    fn normalize_rules() {
        let p = example1();
        let pt = PrimalDualPoint::from_slices(&[1.0], &[0.3], &[0.7, 2.0]);
        let n = normalize_sigma(&p, &pt);
        assert_eq!(n.sigma.as_slice(), &[0.0, 2.0]);
        assert_eq!(normalize_sigma(&p, &n), n);
        let q = msgao(MsGaoParams::default()).unwrap();
        let s = normalize_sigma_vec(&q, &DVector::from_column_slice(&[1.0, 2.0, 3.0]));
        assert_eq!(s.as_slice(), &[0.0, 0.0, 3.0]);
    }

    #[test]
    fn xi_point_example1() {
        let p = example1();
        let dp = DualPoint::from_slices(&p, &[0.5 * (s3() - 1.0)], &[0.0, 2.0]).unwrap();
        assert!((xi_point(&dp).unwrap()[0] - 2.0 * s3()).abs() < 1e-12);
        for s in [-5.0, 0.0, 17.0] {
            let dp = DualPoint::from_slices(&p, &[0.0], &[0.0, s]).unwrap();
            assert_eq!(xi_point(&dp).unwrap()[0], 6.0);
        }
        let dp = DualPoint::from_slices(&p, &[-1.0], &[0.0, -2.0]).unwrap();
        assert!((xi_point(&dp).unwrap()[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn dual_value_matches_closed_form() {
        let p = example1();
        let cases = [
            (0.5 * (s3() - 1.0), 0.0, 2.0, 6.0 - 12.0 * s3()),
            (-1.0, 0.0, -2.0, -10.0),
            (0.0, 0.0, 0.0, -18.0),
        ];
        for (l, s0, s1, want) in cases {
            let dp = DualPoint::from_slices(&p, &[l], &[s0, s1]).unwrap();
            let d = dual_value(&p, &dp).unwrap();
            assert!((d - want).abs() < 1e-12, "{d} vs {want}");
            assert!((d - example1_closed_form(l, s0, s1)).abs() < 1e-12);
        }
        let dp = DualPoint::from_slices(&p, &[0.5 * (s3() - 1.0)], &[0.3, 2.0]).unwrap();
        let d = dual_value(&p, &dp).unwrap();
        assert!((d - example1_closed_form(0.5 * (s3() - 1.0), 0.3, 2.0)).abs() < 1e-12);
        assert!(d < 6.0 - 12.0 * s3());
    }

    #[test]
    fn singular_g_outside_range() {
        let p = example1();
        // 1 + λσ₁ = 0 with F = 6 ≠ 0
        let dp = DualPoint::from_slices(&p, &[1.0], &[0.0, -1.0]).unwrap();
        assert!(!dp.is_nonsingular());
        assert!(matches!(xi_point(&dp), Err(CdtError::NotInTcol { .. })));
        assert!(matches!(dual_gradients(&p, &dp), Err(CdtError::UndefinedGradient(_))));
        let v = membership(&p, &dp, &IndexSet::empty());
        assert!(!v.in_t && !v.in_t_col);
    }

    #[test]
    fn min_norm_solution_on_tcol() {
        use crate::problem::{ConstraintTerm, QuadraticFunction};
        let q0 = QuadraticFunction::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            DVector::from_column_slice(&[2.0, 0.0]),
            0.5,
        )
        .unwrap();
        let p = Problem::new(2, vec![ConstraintTerm::quadratic(q0)], IndexSet::empty()).unwrap();
        let dp = DualPoint::from_slices(&p, &[], &[0.0]).unwrap();
        assert!(dp.is_min_norm());
        let x = xi_point(&dp).unwrap();
        assert!((x - DVector::from_column_slice(&[2.0, 0.0])).norm() < 1e-14);
        assert!((dual_value(&p, &dp).unwrap() - (-2.0 + 0.5)).abs() < 1e-14);
        let v = membership(&p, &dp, &IndexSet::empty());
        assert!(v.in_t_col && !v.in_t && v.g_psd && !v.g_pd && v.in_t_col_plus);
    }

    #[test]
    fn gradients_vanish_at_example1_dual_critical_points() {
        let p = example1();
        for (l, s1) in [
            (-1.0, -2.0),
            (2.0, -2.0),
            (0.0, 14.0 + 8.0 * s3()),
            (0.0, 14.0 - 8.0 * s3()),
            (-0.5 * (s3() + 1.0), 2.0),
            (0.5 * (s3() - 1.0), 2.0),
        ] {
            let dp = DualPoint::from_slices(&p, &[l], &[0.0, s1]).unwrap();
            let g = dual_gradients(&p, &dp).unwrap();
            assert!(g.grad_lambda.norm() < 1e-11, "{l} {s1}: {}", g.grad_lambda);
            assert!(g.grad_sigma.norm() < 1e-11);
        }
        let dp = DualPoint::from_slices(&p, &[0.0], &[0.0, 3.3]).unwrap();
        assert_eq!(dual_gradients(&p, &dp).unwrap().grad_sigma[1], 0.0);
    }

    #[test]
    fn membership_example1() {
        let p = example1();
        let e = IndexSet::empty();
        let dp = DualPoint::from_slices(&p, &[0.5 * (s3() - 1.0)], &[0.0, 2.0]).unwrap();
        let v = membership(&p, &dp, &e);
        assert!(v.in_t_plus && v.in_t_q_j_plus && v.in_t_q_col_j_plus);
        assert!(v.historical.latgao_sa_plus && v.historical.ruagao_sa_plus);
        assert!(v.historical.morgao17_sa.is_none());
        assert!((v.min_eig - s3()).abs() < 1e-12);

        let dp = DualPoint::from_slices(&p, &[2.0], &[0.0, -2.0]).unwrap();
        let v = membership(&p, &dp, &e);
        assert!((v.min_eig + 3.0).abs() < 1e-12);
        assert!(!v.g_psd && v.in_t && !v.in_t_plus);

        // λ = 0: in T⁺ but not in the Ruan–Gao set
        let dp = DualPoint::from_slices(&p, &[0.0], &[0.0, 14.0 - 8.0 * s3()]).unwrap();
        let v = membership(&p, &dp, &e);
        assert!(v.in_t_plus && v.historical.latgao_sa_plus && !v.historical.ruagao_sa_plus);
    }

    #[test]
    fn membership_msgao_table_point() {
        let p = msgao(MsGaoParams::default()).unwrap();
        let s6 = 6f64.sqrt();
        let dp = DualPoint::from_slices(&p, &[0.5 * s6, 48.0 / 13.0], &[0.0, 0.0, -0.25]).unwrap();
        let v = membership(&p, &dp, p.j());
        let (l, mu, vs) = (0.5 * s6, 48.0 / 13.0, -0.25);
        assert!((1.0 + mu * vs) * (1.0 + l) - 1.0 < 0.0);
        assert_eq!(v.historical.morgao17_sa, Some(true));
        assert_eq!(v.historical.morgao17_sa_plus, Some(false));
        assert_eq!(v.historical.morgao16_sc_plus, Some(false));
        assert!(!v.g_psd);
    }

    #[test]
    fn g_matrix_ignores_sigma_on_q() {
        let p = msgao(MsGaoParams::default()).unwrap();
        let lam = DVector::from_column_slice(&[0.3, -0.8]);
        let a = g_matrix(&p, &lam, &DVector::from_column_slice(&[0.0, 0.0, 0.5]));
        let b = g_matrix(&p, &lam, &DVector::from_column_slice(&[4.0, -7.0, 0.5]));
        assert_eq!(a, b);
    }
}
