//! Numerical Poincaré constants: the smallest Rayleigh ratio `E(u, u) / ‖u‖^p_{L^p(Omega)}` found by
//! L-BFGS from random starts.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ConvergenceRow;
use crate::error::{invalid, Result};
use crate::forms::{assemble, psi, DiagonalRule, DiscreteForm, GridFunction, Region};
use crate::kernels::{ApproxFamily, KernelSpec};
use crate::mesh::build_mesh;
use crate::solvers::lbfgs::{minimize, MinimizeConfig, Objective};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoincareMode {
    /// `‖u - mean u‖^p ≤ C E_Omega(u, u)`, regional form, unknowns on `Omega`.
    MeanZero,
    /// `‖u‖^p ≤ C E(u, u)` for `u = 0` on `Omega^c`.
    DirichletZero,
}

#[derive(Debug, Clone)]
pub struct PoincareEstimate {
    /// Smallest ratio found; `1 / ratio` bounds the best constant from below.
    pub ratio: f64,
    pub minimizer: GridFunction,
    pub trials: usize,
    pub converged_trials: usize,
}

struct Rayleigh {
    form: DiscreteForm,
    free: Vec<usize>,
    q: Vec<f64>,
    mean_zero: bool,
    metric: DMatrix<f64>,
}

impl Rayleigh {
    fn new(form: &DiscreteForm, mode: PoincareMode) -> Result<Self> {
        let form = match mode {
            PoincareMode::MeanZero => form.with_region(Region::Regional),
            PoincareMode::DirichletZero => form.with_region(Region::FullComplement),
        };
        let free: Vec<usize> = (0..form.mesh().len()).filter(|&k| form.is_interior(k)).collect();
        if free.len() < 2 {
            return Err(invalid("the Rayleigh ratio needs at least two interior nodes"));
        }
        let q: Vec<f64> = free.iter().map(|&k| form.mesh().weight(k)).collect();
        let mut metric = 2.0 * form.laplacian(&free);
        let scale = metric.diagonal().mean().max(f64::MIN_POSITIVE);
        for (a, qa) in q.iter().enumerate() {
            metric[(a, a)] += 1e-6 * scale * qa / q[0];
        }
        Ok(Rayleigh { form, free, q, mean_zero: mode == PoincareMode::MeanZero, metric })
    }

    fn centered(&self, x: &[f64]) -> Vec<f64> {
        if !self.mean_zero {
            return x.to_vec();
        }
        let total: f64 = self.q.iter().sum();
        let mean = x.iter().zip(&self.q).map(|(x, q)| x * q).sum::<f64>() / total;
        x.iter().map(|v| v - mean).collect()
    }

    fn lp_p(&self, y: &[f64]) -> f64 {
        y.iter().zip(&self.q).map(|(y, q)| q * y.abs().powf(self.form.p())).sum()
    }

    fn full(&self, y: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.form.mesh().len()];
        for (&k, v) in self.free.iter().zip(y) {
            u[k] = *v;
        }
        u
    }
}

impl Objective for Rayleigh {
    fn dim(&self) -> usize {
        self.free.len()
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let p = self.form.p();
        let y = self.centered(x);
        let n = self.lp_p(&y);
        if n == 0.0 {
            grad.iter_mut().for_each(|g| *g = 0.0);
            return f64::INFINITY;
        }
        let u = self.full(&y);
        let mut gu = vec![0.0; u.len()];
        let e = self.form.value_grad(&u, 0.0, &mut gu);
        let r = e / n;
        for (a, &k) in self.free.iter().enumerate() {
            grad[a] = (gu[k] - r * p * self.q[a] * psi(y[a], p)) / n;
        }
        if self.mean_zero {
            let total: f64 = self.q.iter().sum();
            let s: f64 = grad.iter().sum();
            for (g, q) in grad.iter_mut().zip(&self.q) {
                *g -= q * s / total;
            }
        }
        r
    }

    fn project(&self, x: &mut [f64]) {
        let y = self.centered(x);
        let n = self.lp_p(&y);
        if n > 0.0 {
            let s = n.powf(-1.0 / self.form.p());
            x.iter_mut().zip(&y).for_each(|(x, y)| *x = y * s);
        }
    }

    fn preconditioner(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        Some(self.metric.clone())
    }
}

/// `E(u, u) / ‖u‖^p` with the form and normalization of `mode`.
pub fn rayleigh_ratio(form: &DiscreteForm, mode: PoincareMode, u: &GridFunction) -> Result<f64> {
    let r = Rayleigh::new(form, mode)?;
    if !u.same_mesh(form.mesh()) {
        return Err(crate::Error::MeshMismatch);
    }
    let x: Vec<f64> = r.free.iter().map(|&k| u.values[k]).collect();
    let mut g = vec![0.0; x.len()];
    Ok(r.value_grad(&x, &mut g))
}

/// Minimize the Rayleigh ratio from `trials` random starts drawn from `seed`.
pub fn poincare_estimate(form: &DiscreteForm, mode: PoincareMode, trials: usize, seed: u64) -> Result<PoincareEstimate> {
    if trials == 0 {
        return Err(invalid("trials must be positive"));
    }
    let obj = Rayleigh::new(form, mode)?;
    let cfg = MinimizeConfig { max_iter: 400, tol_grad: 1e-10, grad_weights: Some(obj.q.clone()), ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut converged_trials = 0;
    for _ in 0..trials {
        let x0: Vec<f64> = (0..obj.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (x, rep) = minimize(&obj, &x0, &cfg);
        converged_trials += usize::from(rep.converged);
        if best.as_ref().is_none_or(|(v, _)| rep.value < *v) {
            best = Some((rep.value, x));
        }
    }
    let (ratio, x) = best.expect("at least one trial");
    let minimizer = GridFunction::new(form.mesh().clone(), obj.full(&obj.centered(&x)))?;
    Ok(PoincareEstimate { ratio, minimizer, trials, converged_trials })
}

/// Estimated ratios on `Omega = (-1, 1)` along `eps_list`; `reference` is the finest-`eps` ratio.
pub fn poincare_sweep(
    family: &ApproxFamily,
    p: f64,
    eps_list: &[f64],
    n_interior: usize,
    mode: PoincareMode,
    trials: usize,
    seed: u64,
) -> Result<Vec<ConvergenceRow>> {
    let eps = super::sorted_desc(eps_list)?;
    let mesh = Arc::new(build_mesh(-1.0, 1.0, n_interior, 1.0)?);
    let ratios: Vec<Result<(f64, f64)>> = eps
        .par_iter()
        .map(|&e| {
            let kernel = family.member(1, p, e)?;
            let form = assemble(mesh.clone(), &kernel, Region::FullComplement, DiagonalRule::LocalExact)?;
            Ok((e, poincare_estimate(&form, mode, trials, seed)?.ratio))
        })
        .collect();
    let ratios = ratios.into_iter().collect::<Result<Vec<_>>>()?;
    let reference = ratios.last().map_or(0.0, |r| r.1);
    Ok(ratios.into_iter().map(|(e, r)| ConvergenceRow::new(e, r, reference)).collect())
}

/// Gap between the two pieces of the disconnected surrogate `(-1, -0.3) ∪ (0.3, 1)`.
pub const SURROGATE_GAP: (f64, f64) = (-0.3, 0.3);
/// Indicator radius, smaller than the gap.
pub const SURROGATE_DELTA: f64 = 0.25;

/// Regional form of an indicator kernel with no interaction across the gap.
pub fn disconnected_surrogate(n_interior: usize, p: f64) -> Result<DiscreteForm> {
    let mesh = Arc::new(build_mesh(-1.0, 1.0, n_interior, SURROGATE_DELTA)?);
    let kernel = KernelSpec::indicator(SURROGATE_DELTA, 1, p)?;
    let mask: Vec<bool> = mesh
        .nodes
        .iter()
        .zip(&mesh.is_interior)
        .map(|(&x, &int)| int && !(x > SURROGATE_GAP.0 && x < SURROGATE_GAP.1))
        .collect();
    assemble(mesh, &kernel, Region::Regional, DiagonalRule::LocalExact)?.with_interior_mask(mask)
}

/// `-1` on the left piece, `+1` on the right piece: mean zero with zero regional energy.
pub fn piecewise_sign(form: &DiscreteForm) -> GridFunction {
    let m = form.mesh();
    let values = (0..m.len()).map(|k| if form.is_interior(k) { m.nodes[k].signum() } else { 0.0 }).collect();
    GridFunction::new(m.clone(), values).expect("same mesh")
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    fn form(n: usize, eps: f64) -> DiscreteForm {
        let mesh = Arc::new(build_mesh(-1.0, 1.0, n, 1.0).unwrap());
        let k = KernelSpec::stable_normalized(eps, 1, 2.0).unwrap();
        assemble(mesh, &k, Region::FullComplement, DiagonalRule::LocalExact).unwrap()
    }

    // p = 2: E = x^T H x / 2 and q is uniform, so the ratio minima are eigenvalues of H / (2q)
    fn eigen_oracle(form: &DiscreteForm, mode: PoincareMode) -> f64 {
        let f = match mode {
            PoincareMode::MeanZero => form.with_region(Region::Regional),
            PoincareMode::DirichletZero => form.clone(),
        };
        let free: Vec<usize> = f.mesh().interior_idx.clone();
        let h = f.hessian(&vec![0.0; f.mesh().len()], 0.0, &free);
        let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let q = f.mesh().spacing;
        match mode {
            PoincareMode::MeanZero => ev[1] / (2.0 * q),
            PoincareMode::DirichletZero => ev[0] / (2.0 * q),
        }
    }

    #[test]
    fn matches_eigenvalue_oracle() {
        let f = form(32, 0.3);
        for mode in [PoincareMode::MeanZero, PoincareMode::DirichletZero] {
            let est = poincare_estimate(&f, mode, 3, 7).unwrap();
            let oracle = eigen_oracle(&f, mode);
            assert!((est.ratio - oracle).abs() < 1e-6 * oracle, "{mode:?}: {} vs {oracle}", est.ratio);
            let again = rayleigh_ratio(&f, mode, &est.minimizer).unwrap();
            assert!((again - est.ratio).abs() < 1e-9 * oracle);
        }
    }

    #[test]
    fn ratio_is_shift_and_scale_invariant_in_mean_zero_mode() {
        let f = form(16, 0.5);
        let u = GridFunction::from_fn(f.mesh().clone(), |x| x * x + x.sin());
        let v = GridFunction::from_fn(f.mesh().clone(), |x| 3.0 * (x * x + x.sin()) - 2.0);
        let (a, b) = (rayleigh_ratio(&f, PoincareMode::MeanZero, &u).unwrap(), rayleigh_ratio(&f, PoincareMode::MeanZero, &v).unwrap());
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn disconnected_surrogate_degenerates() {
        let f = disconnected_surrogate(64, 2.0).unwrap();
        let sign = piecewise_sign(&f);
        assert_eq!(rayleigh_ratio(&f, PoincareMode::MeanZero, &sign).unwrap(), 0.0);
        let est = poincare_estimate(&f, PoincareMode::MeanZero, 2, 1).unwrap();
        assert!(est.ratio < 1e-6, "{}", est.ratio);
    }

    #[test]
    fn p_three_runs() {
        let mesh = Arc::new(build_mesh(-1.0, 1.0, 24, 1.0).unwrap());
        let k = KernelSpec::stable_normalized(0.3, 1, 3.0).unwrap();
        let f = assemble(mesh, &k, Region::FullComplement, DiagonalRule::LocalExact).unwrap();
        let est = poincare_estimate(&f, PoincareMode::DirichletZero, 2, 3).unwrap();
        assert!(est.ratio > 0.0 && est.ratio.is_finite());
        let bump = GridFunction::from_fn(f.mesh().clone(), |x| if x.abs() < 1.0 { 1.0 - x * x } else { 0.0 });
        assert!(est.ratio <= rayleigh_ratio(&f, PoincareMode::DirichletZero, &bump).unwrap() * (1.0 + 1e-12));
    }
}
