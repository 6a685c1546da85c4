//! Problem data for `min f(x) s.t. g_j(x) = 0 (j ∈ J), g_j(x) ≤ 0 (j ∉ J)`
//! where every `g_k = q_k + V_k ∘ Λ_k` with quadratic `q_k`, `Λ_k`.
//!
//! Index 0 is the objective. Multiplier `λ₀` is the constant 1 and is never
//! stored.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CdtError, Result};
use crate::scalar::{half_square, quadratic_legendre, LegendreFunction, LegendreRegistry, LegendreSpec};

pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-8;

/// A set of constraint indices, always a subset of `1..=m` (or `0..=m` for Q).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexSet(BTreeSet<usize>);

impl IndexSet {
    pub fn empty() -> Self {
        Self(BTreeSet::new())
    }

    pub fn contains(&self, k: usize) -> bool {
        self.0.contains(&k)
    }

    pub fn insert(&mut self, k: usize) {
        self.0.insert(k);
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn union(&self, other: &Self) -> Self {
        Self(self.0.union(&other.0).copied().collect())
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Self(self.0.intersection(&other.0).copied().collect())
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.0.is_subset(&other.0)
    }
}

impl FromIterator<usize> for IndexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

/// `q(x) = ½⟨x, A x⟩ − ⟨b, x⟩ + c` with symmetric `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFunction {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: f64,
}

impl QuadraticFunction {
    /// Replaces a non-symmetric `a` by its symmetric part.
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: f64) -> Result<Self> {
        let n = b.len();
        if a.nrows() != n || a.ncols() != n {
            return Err(CdtError::InvalidProblem(format!(
                "matrix is {}x{} but vector has length {n}",
                a.nrows(),
                a.ncols()
            )));
        }
        let at = a.transpose();
        let a = if a != at {
            log::warn!("non-symmetric quadratic form replaced by its symmetric part");
            (&a + &at) * 0.5
        } else {
            a
        };
        Ok(Self { a, b, c })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            a: DMatrix::zeros(n, n),
            b: DVector::zeros(n),
            c: 0.0,
        }
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn is_zero(&self) -> bool {
        self.c == 0.0 && self.a.iter().all(|v| *v == 0.0) && self.b.iter().all(|v| *v == 0.0)
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.a * x)) - self.b.dot(x) + self.c
    }

    /// `A x − b`
    pub fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x - &self.b
    }
}

/// One `g_k = q_k + V_k ∘ Λ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintTerm {
    pub q: QuadraticFunction,
    pub lambda_map: QuadraticFunction,
    pub v: LegendreFunction,
    pub is_quadratic: bool,
}

impl ConstraintTerm {
    /// A term with `g_k = q_k` exactly (`k ∈ Q`).
    pub fn quadratic(q: QuadraticFunction) -> Self {
        let n = q.dim();
        Self {
            q,
            lambda_map: QuadraticFunction::zero(n),
            v: half_square(),
            is_quadratic: true,
        }
    }

    pub fn composite(q: QuadraticFunction, lambda_map: QuadraticFunction, v: LegendreFunction) -> Self {
        Self {
            q,
            lambda_map,
            v,
            is_quadratic: false,
        }
    }
}

/// Parameters of the two-block projection instance (`y` on an ellipsoid, `z`
/// on a double-well level set).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsGaoParams {
    pub gamma: f64,
    pub alpha: f64,
    pub eta: f64,
    pub r: f64,
    pub c: f64,
}

impl Default for MsGaoParams {
    fn default() -> Self {
        Self {
            gamma: 6f64.sqrt() / 96.0,
            alpha: 1.0,
            eta: 1.0,
            r: 1.0,
            c: 1.0,
        }
    }
}

/// Where a problem came from; historical dual sets are only defined for some.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemFamily {
    Generic,
    DoubleWell,
    MsGao(MsGaoParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    n: usize,
    terms: Vec<ConstraintTerm>,
    j: IndexSet,
    family: ProblemFamily,
}

/// Position of `x` relative to `X` and its open core `X₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainMembership {
    InX0,
    InXOnly,
    Outside,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintCheck {
    pub index: usize,
    pub value: Option<f64>,
    pub equality: bool,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub j: IndexSet,
    pub checks: Vec<ConstraintCheck>,
    /// `x ∈ X_J`
    pub feasible: bool,
    /// all constraints hold as equalities
    pub in_x_e: bool,
    /// all constraints hold as inequalities
    pub in_x_i: bool,
    /// indices `k` (objective included) with `Λ_k(x) ∉ dom V_k`
    pub domain_exits: Vec<usize>,
}

impl Problem {
    pub fn new(n: usize, terms: Vec<ConstraintTerm>, j: IndexSet) -> Result<Self> {
        if terms.is_empty() {
            return Err(CdtError::InvalidProblem("the objective term is missing".into()));
        }
        let m = terms.len() - 1;
        for (k, t) in terms.iter().enumerate() {
            if t.q.dim() != n || t.lambda_map.dim() != n {
                return Err(CdtError::InvalidProblem(format!(
                    "term {k} has dimension {} but n = {n}",
                    t.q.dim()
                )));
            }
            if t.is_quadratic && (!t.lambda_map.is_zero() || !t.v.is_half_square()) {
                return Err(CdtError::InvalidProblem(format!(
                    "term {k} is flagged quadratic but carries a non-zero Λ or V ≠ t²/2"
                )));
            }
        }
        if let Some(bad) = j.iter().find(|&k| k == 0 || k > m) {
            return Err(CdtError::InvalidProblem(format!(
                "equality index {bad} outside 1..={m}"
            )));
        }
        Ok(Self {
            n,
            terms,
            j,
            family: ProblemFamily::Generic,
        })
    }

    pub fn with_family(mut self, family: ProblemFamily) -> Self {
        self.family = family;
        self
    }

    pub fn with_j(&self, j: IndexSet) -> Result<Self> {
        Problem::new(self.n, self.terms.clone(), j).map(|p| p.with_family(self.family))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn j(&self) -> &IndexSet {
        &self.j
    }

    pub fn family(&self) -> ProblemFamily {
        self.family
    }

    pub fn terms(&self) -> &[ConstraintTerm] {
        &self.terms
    }

    pub fn term(&self, k: usize) -> &ConstraintTerm {
        &self.terms[k]
    }

    /// `Q = {k ∈ 0..=m : g_k = q_k}`, read from the explicit flags.
    pub fn q_set(&self) -> IndexSet {
        self.terms
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_quadratic)
            .map(|(k, _)| k)
            .collect()
    }

    /// `Q₀ = Q ∖ {0}`
    pub fn q0_set(&self) -> IndexSet {
        self.q_set().iter().filter(|&k| k != 0).collect()
    }

    /// `Q₀ᶜ = {1..m} ∖ Q`: the non-quadratic constraints.
    pub fn q0_complement(&self) -> IndexSet {
        (1..=self.m()).filter(|&k| !self.terms[k].is_quadratic).collect()
    }

    pub fn is_quadratic(&self, k: usize) -> bool {
        self.terms[k].is_quadratic
    }

    /// `q_k(x) + V_k(Λ_k(x))`, or a domain exit when `Λ_k(x) ∉ dom V_k`.
    pub fn eval_g(&self, k: usize, x: &DVector<f64>) -> Result<f64> {
        let t = &self.terms[k];
        let qv = t.q.eval(x);
        if t.is_quadratic {
            return Ok(qv);
        }
        let lam = t.lambda_map.eval(x);
        t.v.value(lam)
            .map(|v| qv + v)
            .ok_or_else(|| CdtError::DomainExit {
                index: k,
                what: "Λ_k(x)",
                value: lam,
                domain: t.v.dom().to_string(),
            })
    }

    pub fn objective(&self, x: &DVector<f64>) -> Result<f64> {
        self.eval_g(0, x)
    }

    pub fn membership_x0(&self, x: &DVector<f64>) -> DomainMembership {
        let mut interior = true;
        for t in self.terms.iter().filter(|t| !t.is_quadratic) {
            let lam = t.lambda_map.eval(x);
            if !t.v.dom().contains(lam) {
                return DomainMembership::Outside;
            }
            interior &= t.v.dom().interior_contains(lam);
        }
        if interior {
            DomainMembership::InX0
        } else {
            DomainMembership::InXOnly
        }
    }

    /// Feasibility against the problem's own `J`.
    pub fn feasible(&self, x: &DVector<f64>, tol: f64) -> FeasibilityReport {
        self.feasible_for(x, &self.j, tol)
    }

    /// Feasibility of `x` for `X_J` with equality tolerance `tol`.
    pub fn feasible_for(&self, x: &DVector<f64>, j: &IndexSet, tol: f64) -> FeasibilityReport {
        let mut checks = Vec::with_capacity(self.m());
        let mut domain_exits = Vec::new();
        if self.eval_g(0, x).is_err() {
            domain_exits.push(0);
        }
        let (mut feasible, mut in_x_e, mut in_x_i) = (true, true, true);
        for k in 1..=self.m() {
            let equality = j.contains(k);
            let value = self.eval_g(k, x).ok();
            let satisfied = match value {
                Some(g) if equality => g.abs() <= tol,
                Some(g) => g <= tol,
                None => false,
            };
            match value {
                Some(g) => {
                    in_x_e &= g.abs() <= tol;
                    in_x_i &= g <= tol;
                }
                None => {
                    domain_exits.push(k);
                    in_x_e = false;
                    in_x_i = false;
                }
            }
            feasible &= satisfied;
            checks.push(ConstraintCheck {
                index: k,
                value,
                equality,
                satisfied,
            });
        }
        let in_domain = domain_exits.is_empty();
        FeasibilityReport {
            j: j.clone(),
            checks,
            feasible: feasible && in_domain,
            in_x_e: in_x_e && in_domain,
            in_x_i: in_x_i && in_domain,
            domain_exits,
        }
    }
}

// ---------------------------------------------------------------------------
// Problem file format

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermFile {
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(default)]
    pub c: f64,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub cm: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<f64>>,
    #[serde(default)]
    pub e: f64,
    #[serde(rename = "V", default, skip_serializing_if = "Option::is_none")]
    pub v: Option<LegendreSpec>,
    #[serde(default)]
    pub quadratic: bool,
}

/// On-disk JSON layout. `J` lists 1-based equality indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "J", default)]
    pub j: Vec<usize>,
    pub terms: Vec<TermFile>,
}

fn matrix_from(field: &str, k: usize, n: usize, data: &Option<Vec<f64>>) -> Result<DMatrix<f64>> {
    match data {
        None => Ok(DMatrix::zeros(n, n)),
        Some(v) if v.len() == n * n => Ok(DMatrix::from_row_slice(n, n, v)),
        Some(v) => Err(CdtError::Parse {
            location: format!("terms[{k}].{field}"),
            message: format!("expected {} entries, found {}", n * n, v.len()),
        }),
    }
}

fn vector_from(field: &str, k: usize, n: usize, data: &Option<Vec<f64>>) -> Result<DVector<f64>> {
    match data {
        None => Ok(DVector::zeros(n)),
        Some(v) if v.len() == n => Ok(DVector::from_column_slice(v)),
        Some(v) => Err(CdtError::Parse {
            location: format!("terms[{k}].{field}"),
            message: format!("expected {n} entries, found {}", v.len()),
        }),
    }
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CdtError::Parse {
            location: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })
    }

    pub fn into_problem(self, registry: &LegendreRegistry) -> Result<Problem> {
        let n = self.n;
        if self.terms.len() != self.m + 1 {
            return Err(CdtError::Parse {
                location: "terms".into(),
                message: format!("expected m+1 = {} terms, found {}", self.m + 1, self.terms.len()),
            });
        }
        let mut terms = Vec::with_capacity(self.terms.len());
        for (k, t) in self.terms.iter().enumerate() {
            let q = QuadraticFunction::new(
                matrix_from("A", k, n, &t.a)?,
                vector_from("b", k, n, &t.b)?,
                t.c,
            )?;
            let lam = QuadraticFunction::new(
                matrix_from("C", k, n, &t.cm)?,
                vector_from("d", k, n, &t.d)?,
                t.e,
            )?;
            let term = if t.quadratic {
                let v_ok = t.v.as_ref().is_none_or(|s| {
                    *s == LegendreSpec::Quadratic { a: 1.0, shift: 0.0 }
                });
                if !lam.is_zero() || !v_ok {
                    return Err(CdtError::Parse {
                        location: format!("terms[{k}]"),
                        message: "quadratic term must have zero Λ and V = t²/2".into(),
                    });
                }
                ConstraintTerm::quadratic(q)
            } else {
                let spec = t.v.clone().ok_or_else(|| CdtError::Parse {
                    location: format!("terms[{k}].V"),
                    message: "non-quadratic term needs V".into(),
                })?;
                let v = registry.resolve(&spec).map_err(|e| CdtError::Parse {
                    location: format!("terms[{k}].V"),
                    message: e.to_string(),
                })?;
                ConstraintTerm::composite(q, lam, v)
            };
            terms.push(term);
        }
        Problem::new(n, terms, self.j.iter().copied().collect())
    }

    pub fn from_problem(p: &Problem) -> Self {
        let row_major = |m: &DMatrix<f64>| -> Vec<f64> {
            let mut out = Vec::with_capacity(m.len());
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    out.push(m[(i, j)]);
                }
            }
            out
        };
        let terms = p
            .terms()
            .iter()
            .map(|t| TermFile {
                a: Some(row_major(t.q.a())),
                b: Some(t.q.b().iter().copied().collect()),
                c: t.q.c(),
                cm: (!t.is_quadratic).then(|| row_major(t.lambda_map.a())),
                d: (!t.is_quadratic).then(|| t.lambda_map.b().iter().copied().collect()),
                e: t.lambda_map.c(),
                v: (!t.is_quadratic).then(|| t.v.spec().clone()),
                quadratic: t.is_quadratic,
            })
            .collect();
        Self {
            n: p.n(),
            m: p.m(),
            j: p.j().iter().collect(),
            terms,
        }
    }
}

pub fn parse_problem(text: &str, registry: &LegendreRegistry) -> Result<Problem> {
    ProblemFile::parse(text)?.into_problem(registry)
}

// ---------------------------------------------------------------------------
// Built-in instances

/// `f(x) = x²/2 − 6x` subject to the double well
/// `g₁(x) = ½(x²/2 − 4)² − 2`, with `J = ∅`.
pub fn example1() -> Problem {
    let q0 = QuadraticFunction::new(
        DMatrix::from_element(1, 1, 1.0),
        DVector::from_element(1, 6.0),
        0.0,
    )
    .expect("1x1 data");
    let lam1 = QuadraticFunction::new(DMatrix::from_element(1, 1, 1.0), DVector::zeros(1), -4.0)
        .expect("1x1 data");
    let v1 = quadratic_legendre(1.0, -2.0).expect("a = 1");
    Problem::new(
        1,
        vec![
            ConstraintTerm::quadratic(q0),
            ConstraintTerm::composite(QuadraticFunction::zero(1), lam1, v1),
        ],
        IndexSet::empty(),
    )
    .expect("static data")
    .with_family(ProblemFamily::DoubleWell)
}

/// Two scalar blocks `x = (y, z)`: minimise `½(y − z)²` subject to
/// `½(y² − r²) = 0` and `½α(½(z − c)² − η)² − γ(z − c) = 0`; `J = {1, 2}`.
pub fn msgao(params: MsGaoParams) -> Result<Problem> {
    let MsGaoParams {
        gamma,
        alpha,
        eta,
        r,
        c,
    } = params;
    if !(alpha > 0.0 && eta > 0.0 && r > 0.0) {
        return Err(CdtError::InvalidParameter(
            "msgao needs alpha, eta, r > 0".into(),
        ));
    }
    let f = QuadraticFunction::new(
        DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]),
        DVector::zeros(2),
        0.0,
    )?;
    let h = QuadraticFunction::new(
        DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
        DVector::zeros(2),
        -0.5 * r * r,
    )?;
    let q2 = QuadraticFunction::new(
        DMatrix::zeros(2, 2),
        DVector::from_column_slice(&[0.0, gamma]),
        gamma * c,
    )?;
    let lam2 = QuadraticFunction::new(
        DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]),
        DVector::from_column_slice(&[0.0, c]),
        0.5 * c * c - eta,
    )?;
    let v2 = quadratic_legendre(alpha, 0.0)?;
    Ok(Problem::new(
        2,
        vec![
            ConstraintTerm::quadratic(f),
            ConstraintTerm::quadratic(h),
            ConstraintTerm::composite(q2, lam2, v2),
        ],
        [1, 2].into_iter().collect(),
    )?
    .with_family(ProblemFamily::MsGao(params)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v1(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    #[test]
    fn example1_values() {
        let p = example1();
        let s3 = 3f64.sqrt();
        let f = p.eval_g(0, &v1(2.0 * s3)).unwrap();
        assert!((f - (6.0 - 12.0 * s3)).abs() < 1e-12);
        assert!((f + 14.7846).abs() < 1e-4);
        assert_eq!(p.eval_g(1, &v1(2.0)).unwrap(), 0.0);
        assert_eq!(p.eval_g(1, &v1(6.0)).unwrap(), 96.0);
        assert_eq!(p.q_set(), [0].into_iter().collect());
        assert!(p.q0_set().is_empty());
        assert_eq!(p.q0_complement(), [1].into_iter().collect());
    }

    #[test]
    fn zero_quadratic_at_origin() {
        let q = QuadraticFunction::new(DMatrix::identity(3, 3), DVector::zeros(3), 0.0).unwrap();
        let p = Problem::new(3, vec![ConstraintTerm::quadratic(q)], IndexSet::empty()).unwrap();
        assert_eq!(p.eval_g(0, &DVector::zeros(3)).unwrap(), 0.0);
    }

    #[test]
    fn example1_feasibility() {
        let p = example1();
        let s3 = 3f64.sqrt();
        let r = p.feasible(&v1(2.0 * s3), 1e-9);
        assert!(r.feasible && r.in_x_e && r.in_x_i);
        let r = p.feasible(&v1(6.0), 1e-9);
        assert!(!r.feasible && !r.in_x_i);
        assert_eq!(r.checks[0].value, Some(96.0));
        let r = p.feasible(&v1(2.5), 1e-9);
        assert!(r.feasible && r.in_x_i && !r.in_x_e);
        // with J = {1} the same point is no longer feasible
        let r = p.feasible_for(&v1(2.5), &[1].into_iter().collect(), 1e-9);
        assert!(!r.feasible);
    }

    #[test]
    fn membership_in_x0() {
        assert_eq!(example1().membership_x0(&v1(5.0)), DomainMembership::InX0);
        let reg = LegendreRegistry::with_builtins();
        let ent = reg
            .resolve(&LegendreSpec::Plugin {
                name: "entropy".into(),
            })
            .unwrap();
        let lam = QuadraticFunction::new(DMatrix::zeros(1, 1), DVector::from_element(1, -1.0), 0.0)
            .unwrap();
        let p = Problem::new(
            1,
            vec![
                ConstraintTerm::quadratic(QuadraticFunction::zero(1)),
                ConstraintTerm::composite(QuadraticFunction::zero(1), lam, ent),
            ],
            IndexSet::empty(),
        )
        .unwrap();
        assert_eq!(p.membership_x0(&v1(1.0)), DomainMembership::InX0);
        assert_eq!(p.membership_x0(&v1(0.0)), DomainMembership::InXOnly);
        assert_eq!(p.membership_x0(&v1(-1.0)), DomainMembership::Outside);
        assert!(matches!(
            p.eval_g(1, &v1(-1.0)),
            Err(CdtError::DomainExit { index: 1, .. })
        ));
        let rep = p.feasible(&v1(-1.0), 1e-8);
        assert!(!rep.feasible);
        assert_eq!(rep.domain_exits, vec![1]);
    }

    #[test]
    fn asymmetric_input_is_symmetrized() {
        let q = QuadraticFunction::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]),
            DVector::zeros(2),
            0.0,
        )
        .unwrap();
        assert_eq!(q.a()[(0, 1)], 1.0);
        assert_eq!(q.a()[(1, 0)], 1.0);
        let again = QuadraticFunction::new(q.a().clone(), q.b().clone(), q.c()).unwrap();
        assert_eq!(again, q);
    }

    #[test]
    fn quadratic_flag_is_enforced() {
        let mut t = ConstraintTerm::quadratic(QuadraticFunction::zero(1));
        t.lambda_map = QuadraticFunction::new(DMatrix::identity(1, 1), DVector::zeros(1), 0.0).unwrap();
        assert!(Problem::new(1, vec![t], IndexSet::empty()).is_err());
    }

    #[test]
    fn j_must_be_in_range() {
        let p = example1();
        assert!(p.with_j([2].into_iter().collect()).is_err());
        assert!(p.with_j([0].into_iter().collect()).is_err());
        assert!(p.with_j([1].into_iter().collect()).is_ok());
    }

    #[test]
    fn file_round_trip_and_defaults() {
        let text = r#"{
            "n": 1, "m": 1, "J": [],
            "terms": [
                {"A": [1], "b": [6], "quadratic": true},
                {"C": [1], "e": -4, "V": {"kind": "quadratic", "a": 1, "shift": -2}}
            ]
        }"#;
        let reg = LegendreRegistry::with_builtins();
        let p = parse_problem(text, &reg).unwrap();
        assert_eq!(p.terms(), example1().terms());
        let back = serde_json::to_string(&ProblemFile::from_problem(&p)).unwrap();
        let p2 = parse_problem(&back, &reg).unwrap();
        assert_eq!(p2.terms(), p.terms());
    }

    #[test]
    fn parse_errors_carry_location() {
        let reg = LegendreRegistry::with_builtins();
        let err = parse_problem("{\"n\": 1, \"m\": 0, \"terms\": [ {\"A\": [1, 2]} ]}", &reg)
            .unwrap_err();
        match err {
            CdtError::Parse { location, .. } => assert_eq!(location, "terms[0].A"),
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_problem("{\"n\": 1, \"m\": ", &reg).unwrap_err();
        assert!(matches!(err, CdtError::Parse { .. }));
        let err = parse_problem(
            r#"{"n":1,"m":1,"terms":[{"quadratic":true},{"V":{"kind":"plugin","name":"nope"}}]}"#,
            &reg,
        )
        .unwrap_err();
        assert!(matches!(err, CdtError::Parse { .. }));
    }

    #[test]
    fn msgao_encoding() {
        let p = msgao(MsGaoParams::default()).unwrap();
        assert_eq!(p.q_set(), [0, 1].into_iter().collect());
        assert_eq!(p.j(), &[1, 2].into_iter().collect());
        let s6 = 6f64.sqrt();
        let x = DVector::from_column_slice(&[1.0, 1.0 + 0.5 * s6]);
        assert!(p.eval_g(1, &x).unwrap().abs() < 1e-15);
        assert!(p.eval_g(2, &x).unwrap().abs() < 1e-15);
        assert!((p.objective(&x).unwrap() - 0.75).abs() < 1e-12);
    }
}
