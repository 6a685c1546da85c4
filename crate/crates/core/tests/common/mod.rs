#![allow(dead_code)]

use cdt_core::problem::{ConstraintTerm, IndexSet, Problem, QuadraticFunction};
use cdt_core::scalar::{quadratic_legendre, LegendreFunction, LegendreRegistry, LegendreSpec};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn sym(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-scale..scale));
    (&m + m.transpose()) * 0.5
}

pub fn psd(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-scale..scale));
    &m * m.transpose()
}

pub fn vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-scale..scale))
}

fn plugin(name: &str) -> LegendreFunction {
    LegendreRegistry::with_builtins()
        .resolve(&LegendreSpec::Plugin { name: name.into() })
        .unwrap()
}

/// A random composite term. `Λ` for the entropy term is kept positive.
fn composite(rng: &mut ChaCha8Rng, n: usize) -> ConstraintTerm {
    let q = QuadraticFunction::new(sym(rng, n, 1.0), vec(rng, n, 1.0), rng.gen_range(-1.0..1.0)).unwrap();
    match rng.gen_range(0..4) {
        0 | 1 => {
            let lam = QuadraticFunction::new(sym(rng, n, 1.0), vec(rng, n, 1.0), rng.gen_range(-1.0..1.0)).unwrap();
            let v = quadratic_legendre(rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0)).unwrap();
            ConstraintTerm::composite(q, lam, v)
        }
        2 => {
            let lam = QuadraticFunction::new(sym(rng, n, 0.5), vec(rng, n, 0.5), rng.gen_range(-0.5..0.5)).unwrap();
            ConstraintTerm::composite(q, lam, plugin("exp"))
        }
        _ => {
            // Λ(x) = ½⟨x,Cx⟩ + e with C ⪰ 0 and e > 0
            let c = psd(rng, n, 0.7);
            let lam = QuadraticFunction::new(c, DVector::zeros(n), rng.gen_range(0.2..1.0)).unwrap();
            ConstraintTerm::composite(q, lam, plugin("entropy"))
        }
    }
}

fn quadratic(rng: &mut ChaCha8Rng, n: usize) -> ConstraintTerm {
    ConstraintTerm::quadratic(
        QuadraticFunction::new(sym(rng, n, 1.0), vec(rng, n, 1.0), rng.gen_range(-1.0..1.0)).unwrap(),
    )
}

/// `n, m ∈ {1, 2}`, each term quadratic or composite at random, random `J`.
pub fn random_problem(rng: &mut ChaCha8Rng) -> Problem {
    let n = rng.gen_range(1..=2);
    let m = rng.gen_range(1..=2);
    let mut terms = Vec::with_capacity(m + 1);
    for _ in 0..=m {
        terms.push(if rng.gen_bool(0.4) { quadratic(rng, n) } else { composite(rng, n) });
    }
    let j: IndexSet = (1..=m).filter(|_| rng.gen_bool(0.5)).collect();
    Problem::new(n, terms, j).unwrap()
}

/// A point of int dom V* for term `k` (0 for `k ∈ Q`).
pub fn interior_sigma(rng: &mut ChaCha8Rng, problem: &Problem, k: usize) -> f64 {
    let t = problem.term(k);
    if t.is_quadratic {
        return 0.0;
    }
    let d = t.v.conj_dom();
    if d.lo.is_finite() {
        d.lo + rng.gen_range(0.2..2.0)
    } else {
        rng.gen_range(-2.0..2.0)
    }
}

pub fn sigma(rng: &mut ChaCha8Rng, problem: &Problem) -> DVector<f64> {
    DVector::from_iterator(problem.m() + 1, (0..=problem.m()).map(|k| interior_sigma(rng, problem, k)))
}

/// `x` with every `Λ_k(x)` in the interior of `dom V_k`; `None` after 100 tries.
pub fn interior_x(rng: &mut ChaCha8Rng, problem: &Problem, scale: f64) -> Option<DVector<f64>> {
    (0..100).find_map(|_| {
        let x = vec(rng, problem.n(), scale);
        problem
            .terms()
            .iter()
            .all(|t| t.is_quadratic || t.v.dom().interior_contains(t.lambda_map.eval(&x)))
            .then_some(x)
    })
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

/// Central difference with step `1e−6·(1+|v_i|)`.
pub fn central_diff(v: &DVector<f64>, i: usize, f: impl Fn(&DVector<f64>) -> f64) -> f64 {
    let h = 1e-6 * (1.0 + v[i].abs());
    let mut up = v.clone();
    up[i] += h;
    let mut dn = v.clone();
    dn[i] -= h;
    (f(&up) - f(&dn)) / (2.0 * h)
}
