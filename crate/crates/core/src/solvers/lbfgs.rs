//! Limited-memory BFGS with Armijo backtracking and an optional SPD preconditioner.

use std::collections::VecDeque;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// A smooth objective on `R^n`.
pub trait Objective {
    fn dim(&self) -> usize;

    /// Value at `x`, gradient written to `grad`.
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64;

    /// Map an iterate back onto the feasible affine set. The objective must be invariant
    /// under this map.
    fn project(&self, _x: &mut [f64]) {}

    /// SPD approximation of the Hessian at `x`, used as the initial inverse metric.
    fn preconditioner(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    /// Called after each accepted step; `full_step` tells whether the unit step was accepted.
    fn step_feedback(&self, _full_step: bool) {}
}

#[derive(Debug, Clone)]
pub struct MinimizeConfig {
    pub max_iter: usize,
    /// Stop once `max_i |g_i| / weight_i ≤ tol_grad`.
    pub tol_grad: f64,
    pub grad_weights: Option<Vec<f64>>,
    pub memory: usize,
    /// Rebuild the preconditioner every this many iterations (0 = once).
    pub refresh_every: usize,
    pub stall_window: usize,
    pub stall_rel: f64,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        MinimizeConfig {
            max_iter: 500,
            tol_grad: 1e-8,
            grad_weights: None,
            memory: 10,
            refresh_every: 0,
            stall_window: 5,
            stall_rel: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Gradient,
    Stalled,
    MaxIter,
    LineSearch,
}

#[derive(Debug, Clone)]
pub struct MinimizeReport {
    pub iterations: usize,
    pub value: f64,
    pub grad_norm: f64,
    pub converged: bool,
    pub stop: StopReason,
    pub line_search_failures: usize,
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACK: usize = 50;
const MAX_FAILURES: usize = 3;

struct Metric(Option<Cholesky<f64, Dyn>>);

impl Metric {
    fn build<O: Objective + ?Sized>(obj: &O, x: &[f64]) -> Metric {
        let Some(mut m) = obj.preconditioner(x) else { return Metric(None) };
        let scale = (0..m.nrows()).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut shift = 0.0;
        for _ in 0..12 {
            if let Some(c) = Cholesky::new(m.clone()) {
                return Metric(Some(c));
            }
            let next = if shift == 0.0 { 1e-12 * scale } else { shift * 100.0 };
            for i in 0..m.nrows() {
                m[(i, i)] += next - shift;
            }
            shift = next;
        }
        Metric(None)
    }

    fn apply(&self, v: &[f64], gamma: f64) -> Vec<f64> {
        match &self.0 {
            Some(c) => c.solve(&DVector::from_column_slice(v)).as_slice().to_vec(),
            None => v.iter().map(|x| gamma * x).collect(),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn scaled_norm(g: &[f64], w: Option<&Vec<f64>>) -> f64 {
    match w {
        Some(w) => g.iter().zip(w).map(|(g, w)| (g / w).abs()).fold(0.0, f64::max),
        None => g.iter().map(|g| g.abs()).fold(0.0, f64::max),
    }
}

/// Minimize `obj` from `x0`; returns the final iterate and a report.
pub fn minimize<O: Objective + ?Sized>(obj: &O, x0: &[f64], cfg: &MinimizeConfig) -> (Vec<f64>, MinimizeReport) {
    let n = obj.dim();
    assert_eq!(x0.len(), n, "initial point has the wrong dimension");
    let mut x = x0.to_vec();
    obj.project(&mut x);
    let mut g = vec![0.0; n];
    let mut f = obj.value_grad(&x, &mut g);
    let weights = cfg.grad_weights.as_ref();
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut metric = Metric::build(obj, &x);
    let mut history: VecDeque<(f64, f64)> = VecDeque::from([(f, scaled_norm(&g, weights))]);
    let mut failures = 0;
    let mut trust = f64::INFINITY;
    let report = |it, f, g: &[f64], stop, fails| MinimizeReport {
        iterations: it,
        value: f,
        grad_norm: scaled_norm(g, weights),
        converged: matches!(stop, StopReason::Gradient | StopReason::Stalled),
        stop,
        line_search_failures: fails,
    };

    for it in 0..cfg.max_iter {
        if scaled_norm(&g, weights) <= cfg.tol_grad {
            return (x, report(it, f, &g, StopReason::Gradient, failures));
        }
        if cfg.refresh_every > 0 && it > 0 && it % cfg.refresh_every == 0 {
            metric = Metric::build(obj, &x);
            pairs.clear();
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let gamma = pairs.back().map(|(s, y, _)| dot(s, y) / dot(y, y)).unwrap_or_else(|| {
            let gn = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if gn > 0.0 { 1.0 / gn } else { 1.0 }
        });
        let mut r = metric.apply(&q, gamma);
        for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &r);
            r.iter_mut().zip(s).for_each(|(ri, si)| *ri += (a - b) * si);
        }
        let mut d: Vec<f64> = r.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            pairs.clear();
            d = metric.apply(&g, gamma).into_iter().map(|v| -v).collect();
            slope = dot(&g, &d);
            if !(slope < 0.0) {
                d = g.iter().map(|v| -v * gamma).collect();
                slope = dot(&g, &d);
            }
        }
        let dmax = d.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let mut alpha = if dmax > trust { trust / dmax } else { 1.0 };
        let first_alpha = alpha;

        let mut xn = vec![0.0; n];
        let mut gn = vec![0.0; n];
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            xn.iter_mut().zip(&x).zip(&d).for_each(|((xi, &x0), &di)| *xi = x0 + alpha * di);
            obj.project(&mut xn);
            let fnew = obj.value_grad(&xn, &mut gn);
            let armijo = fnew <= f + ARMIJO_C1 * alpha * slope;
            // below roundoff the energy cannot resolve progress; accept a gradient decrease instead
            let flat = (fnew - f).abs() <= 8.0 * f64::EPSILON * f.abs().max(f64::MIN_POSITIVE)
                && scaled_norm(&gn, weights) < scaled_norm(&g, weights);
            if fnew.is_finite() && (armijo || flat) {
                accepted = Some(fnew);
                break;
            }
            alpha *= 0.5;
        }
        let Some(fnew) = accepted else {
            failures += 1;
            pairs.clear();
            trust = if trust.is_finite() { trust * 0.5 } else { 0.5 * dmax };
            if failures >= MAX_FAILURES {
                return (x, report(it + 1, f, &g, StopReason::LineSearch, failures));
            }
            continue;
        };
        obj.step_feedback(alpha == first_alpha && first_alpha == 1.0);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && cfg.memory > 0 {
            if pairs.len() == cfg.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        std::mem::swap(&mut x, &mut xn);
        std::mem::swap(&mut g, &mut gn);
        f = fnew;
        history.push_back((f, scaled_norm(&g, weights)));
        if history.len() > cfg.stall_window + 1 {
            history.pop_front();
        }
        if history.len() == cfg.stall_window + 1 {
            // stalled: no energy progress and no gradient progress over the window
            let (f0, g0) = history[0];
            let gmin = history.iter().skip(1).map(|h| h.1).fold(f64::INFINITY, f64::min);
            if (f0 - f).abs() <= cfg.stall_rel * f.abs().max(f0.abs()) && gmin > 0.5 * g0 {
                return (x, report(it + 1, f, &g, StopReason::Stalled, failures));
            }
        }
    }
    let stop = if scaled_norm(&g, weights) <= cfg.tol_grad { StopReason::Gradient } else { StopReason::MaxIter };
    (x, report(cfg.max_iter, f, &g, stop, failures))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic {
        a: DMatrix<f64>,
        b: Vec<f64>,
        precondition: bool,
    }

    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            self.b.len()
        }
        fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
            let xv = DVector::from_column_slice(x);
            let ax = &self.a * &xv;
            for i in 0..x.len() {
                grad[i] = ax[i] - self.b[i];
            }
            0.5 * xv.dot(&ax) - dot(&self.b, x)
        }
        fn preconditioner(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
            self.precondition.then(|| self.a.clone())
        }
    }

    fn tridiag(n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 + 0.01 * i as f64 } else if i.abs_diff(j) == 1 { -1.0 } else { 0.0 })
    }

    #[test]
    fn quadratic_matches_linear_solve() {
        let n = 60;
        let a = tridiag(n);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let exact = a.clone().lu().solve(&DVector::from_column_slice(&b)).unwrap();
        for pre in [false, true] {
            let q = Quadratic { a: a.clone(), b: b.clone(), precondition: pre };
            let cfg = MinimizeConfig { max_iter: 5000, tol_grad: 1e-12, ..Default::default() };
            let (x, rep) = minimize(&q, &vec![0.0; n], &cfg);
            assert!(rep.converged, "{rep:?}");
            let err = x.iter().zip(exact.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-9 * exact.amax(), "pre={pre}: {err}");
            if pre {
                assert!(rep.iterations <= 2);
            }
        }
    }

    struct Rosenbrock;

    impl Objective for Rosenbrock {
        fn dim(&self) -> usize {
            2
        }
        fn value_grad(&self, x: &[f64], g: &mut [f64]) -> f64 {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        }
    }

    #[test]
    fn rosenbrock_converges() {
        let cfg = MinimizeConfig { max_iter: 2000, tol_grad: 1e-9, ..Default::default() };
        let (x, rep) = minimize(&Rosenbrock, &[-1.2, 1.0], &cfg);
        assert!(rep.converged);
        assert!((x[0] - 1.0).abs() < 1e-6 && (x[1] - 1.0).abs() < 1e-6, "{x:?}");
    }

    struct MeanFree;

    impl Objective for MeanFree {
        fn dim(&self) -> usize {
            3
        }
        // invariant under constant shifts
        fn value_grad(&self, x: &[f64], g: &mut [f64]) -> f64 {
            let d1 = x[0] - x[1] - 1.0;
            let d2 = x[1] - x[2] + 2.0;
            g[0] = 2.0 * d1;
            g[1] = -2.0 * d1 + 2.0 * d2;
            g[2] = -2.0 * d2;
            d1 * d1 + d2 * d2
        }
        fn project(&self, x: &mut [f64]) {
            let m = x.iter().sum::<f64>() / 3.0;
            x.iter_mut().for_each(|v| *v -= m);
        }
    }

    #[test]
    fn projection_keeps_mean_zero() {
        let (x, rep) = minimize(&MeanFree, &[5.0, -1.0, 7.0], &MinimizeConfig::default());
        assert!(rep.converged);
        assert!(x.iter().sum::<f64>().abs() < 1e-12);
        assert!((x[0] - x[1] - 1.0).abs() < 1e-8 && (x[2] - x[1] - 2.0).abs() < 1e-8);
    }

    struct Bad;

    impl Objective for Bad {
        fn dim(&self) -> usize {
            1
        }
        fn value_grad(&self, x: &[f64], g: &mut [f64]) -> f64 {
            // gradient inconsistent with the value: no descent is ever found
            g[0] = 1.0;
            x[0] * x[0] + 1.0 + if x[0] == 0.0 { 0.0 } else { 1.0 }
        }
    }

    #[test]
    fn failing_line_search_reports_non_convergence() {
        let (_, rep) = minimize(&Bad, &[0.0], &MinimizeConfig::default());
        assert!(!rep.converged);
        assert_eq!(rep.stop, StopReason::LineSearch);
        assert_eq!(rep.line_search_failures, 3);
    }
}
