//! Analytic gradients of Ξ, L and D against central differences.

mod common;

use cdt_core::dual::{dual_gradients, dual_value, DualPoint};
use cdt_core::lagrangian::{lagrangian_value_grad, xi_gradients, xi_value, PrimalDualPoint};
use common::{central_diff, close, interior_x, random_problem, sigma, vec};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const POINTS: usize = 50;
const REL: f64 = 1e-5;

#[test]
fn xi_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < POINTS {
        let p = random_problem(&mut rng);
        let x = vec(&mut rng, p.n(), 2.0);
        let lam = vec(&mut rng, p.m(), 2.0);
        let s = sigma(&mut rng, &p);
        let pt = PrimalDualPoint::new(x.clone(), lam.clone(), s.clone());
        let g = xi_gradients(&p, &pt).unwrap();
        let gs = g.grad_sigma.expect("σ is interior");

        for i in 0..p.n() {
            let fd = central_diff(&x, i, |y| xi_value(&p, &PrimalDualPoint::new(y.clone(), lam.clone(), s.clone())).unwrap());
            assert!(close(g.grad_x[i], fd, REL), "∂x{i}: {} vs {fd}", g.grad_x[i]);
        }
        for i in 0..p.m() {
            let fd = central_diff(&lam, i, |l| xi_value(&p, &PrimalDualPoint::new(x.clone(), l.clone(), s.clone())).unwrap());
            assert!(close(g.grad_lambda[i], fd, REL), "∂λ{i}: {} vs {fd}", g.grad_lambda[i]);
        }
        for k in 0..=p.m() {
            let fd = central_diff(&s, k, |t| xi_value(&p, &PrimalDualPoint::new(x.clone(), lam.clone(), t.clone())).unwrap());
            assert!(close(gs[k], fd, REL), "∂σ{k}: {} vs {fd}", gs[k]);
        }
        checked += 1;
    }
}

#[test]
fn lagrangian_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut checked = 0;
    while checked < POINTS {
        let p = random_problem(&mut rng);
        let Some(x) = interior_x(&mut rng, &p, 1.5) else {
            continue;
        };
        let lam = vec(&mut rng, p.m(), 2.0);
        let l = lagrangian_value_grad(&p, &x, &lam).unwrap();
        let gx = l.grad_x.expect("x ∈ X₀");
        // keep the stencil inside X₀
        let safe = (0..p.n()).all(|i| {
            [-1.0, 1.0].iter().all(|d| {
                let mut y = x.clone();
                y[i] += d * 1e-6 * (1.0 + x[i].abs());
                lagrangian_value_grad(&p, &y, &lam).is_ok()
            })
        });
        if !safe {
            continue;
        }
        for i in 0..p.n() {
            let fd = central_diff(&x, i, |y| lagrangian_value_grad(&p, y, &lam).unwrap().value);
            assert!(close(gx[i], fd, REL), "∂x{i}: {} vs {fd}", gx[i]);
        }
        for i in 0..p.m() {
            let fd = central_diff(&lam, i, |m| lagrangian_value_grad(&p, &x, m).unwrap().value);
            assert!(close(l.grad_lambda[i], fd, REL), "∂λ{i}: {} vs {fd}", l.grad_lambda[i]);
        }
        checked += 1;
    }
}

fn d_at(p: &cdt_core::problem::Problem, lam: &DVector<f64>, s: &DVector<f64>) -> f64 {
    dual_value(p, &DualPoint::new(p, lam.clone(), s.clone()).unwrap()).unwrap()
}

#[test]
fn dual_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut checked = 0;
    while checked < POINTS {
        let p = random_problem(&mut rng);
        let lam = vec(&mut rng, p.m(), 2.0);
        let s = sigma(&mut rng, &p);
        let dp = DualPoint::new(&p, lam.clone(), s.clone()).unwrap();
        // well away from det G = 0, where D has a pole
        let eig = dp.assembled().g.symmetric_eigenvalues();
        if eig.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min) < 0.2 {
            continue;
        }
        let g = dual_gradients(&p, &dp).unwrap();
        for i in 0..p.m() {
            let fd = central_diff(&lam, i, |l| d_at(&p, l, &s));
            assert!(close(g.grad_lambda[i], fd, REL), "∂λ{i}: {} vs {fd}", g.grad_lambda[i]);
        }
        for k in 0..=p.m() {
            let fd = central_diff(&s, k, |t| d_at(&p, &lam, t));
            assert!(close(g.grad_sigma[k], fd, REL), "∂σ{k}: {} vs {fd}", g.grad_sigma[k]);
        }
        checked += 1;
    }
}
