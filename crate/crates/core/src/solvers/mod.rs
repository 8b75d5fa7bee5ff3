//! Dirichlet, Neumann and Robin complement-value problems as convex minimization.
//!
//! With `J(u) = (mu/p) E(u, u) + (1/p) Σ_{Omega^c} q beta |u|^p - Σ_Omega q f u - Σ_{Omega^c} q g u`
//! the three problems differ only in which nodes are free and whether `g` enters as a load
//! (Neumann, Robin) or as pinned values (Dirichlet).

pub mod lbfgs;

use std::cell::Cell;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use lbfgs::{minimize, MinimizeConfig, MinimizeReport, Objective, StopReason};

use crate::error::{invalid, Error, Result};
use crate::forms::{psi, DiscreteForm, FarField, GridFunction, Region};

/// Default compatibility tolerance, relative to `‖f‖_1 + ‖g‖_1`.
pub const TOL_COMPAT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Dirichlet,
    Neumann,
    Robin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iter: usize,
    /// Target for the strong-form residual `max_i |dJ/du_i| / q_i`.
    pub tol: f64,
    /// Smoothing levels for `p < 2`, relative to the data scale.
    pub delta_schedule: Vec<f64>,
    pub memory: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { max_iter: 200, tol: 1e-8, delta_schedule: vec![1e-2, 1e-4, 1e-6], memory: 10 }
    }
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub form: DiscreteForm,
    /// Right-hand side; only interior values are read.
    pub f: GridFunction,
    /// Complement data; only exterior values are read.
    pub g: GridFunction,
    /// Robin coefficient on exterior nodes.
    pub beta: Option<GridFunction>,
    /// Multiplies the form, not the data.
    pub mu_scaling: f64,
    pub solver: SolverConfig,
    /// Starting point; for Dirichlet only its interior values are used.
    pub initial: Option<GridFunction>,
}

impl ProblemSpec {
    pub fn new(kind: ProblemKind, form: DiscreteForm, f: GridFunction, g: GridFunction) -> Self {
        ProblemSpec { kind, form, f, g, beta: None, mu_scaling: 1.0, solver: SolverConfig::default(), initial: None }
    }

    pub fn with_beta(mut self, beta: GridFunction) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu_scaling = mu;
        self
    }

    pub fn with_solver(mut self, solver: SolverConfig) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_initial(mut self, u0: GridFunction) -> Self {
        self.initial = Some(u0);
        self
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub kind: ProblemKind,
    pub u: GridFunction,
    pub iterations: usize,
    /// `J(u)` with the unsmoothed potential.
    pub final_energy: f64,
    /// `max_i |E(u, e_i) - <f, e_i> - <g, e_i>| / ‖e_i‖_1` over the free nodes.
    pub variational_residual: f64,
    pub converged: bool,
    pub delta_schedule_used: Vec<f64>,
    /// Bound on the effect of dropping interactions beyond the computational box.
    pub truncation_defect: f64,
    /// `‖u‖_W / (data norm)`; bounded along families with a common well-posedness constant.
    pub stability_ratio: f64,
    /// Neumann only: `max_{c = ±1} |J(u + c) - J(u)| / scale`.
    pub gauge_defect: Option<f64>,
    pub f: GridFunction,
    pub g: GridFunction,
}

fn compat_sum(interior: &[bool], f: &GridFunction, g: &GridFunction) -> (f64, f64) {
    let m = f.mesh();
    let (mut sum, mut l1) = (0.0, 0.0);
    for (k, &int) in interior.iter().enumerate() {
        let q = m.weight(k);
        let v = if int { f.values[k] } else { g.values[k] };
        sum += q * v;
        l1 += q * v.abs();
    }
    (sum, l1)
}

/// `(Σ_Omega q f + Σ_{Omega^c} q g, compatible)`.
pub fn check_compatibility(f: &GridFunction, g: &GridFunction) -> (f64, bool) {
    let (sum, l1) = compat_sum(&f.mesh().is_interior, f, g);
    (sum, sum.abs() <= TOL_COMPAT * (l1 + f64::MIN_POSITIVE))
}

/// Smoothed `|t|^p`: value, derivative over `p`, second derivative.
fn smooth_pow(t: f64, p: f64, delta: f64) -> (f64, f64, f64) {
    if delta == 0.0 {
        let a = t.abs();
        let curv = if a > 0.0 {
            p * (p - 1.0) * a.powf(p - 2.0)
        } else if p == 2.0 {
            2.0
        } else if p > 2.0 {
            0.0
        } else {
            f64::MAX
        };
        return (a.powf(p), psi(t, p), curv);
    }
    let s = t * t + delta * delta;
    let v = s.powf(0.5 * p) - delta.powf(p);
    let d = t * s.powf(0.5 * p - 1.0);
    let c = p * s.powf(0.5 * p - 2.0) * ((p - 1.0) * t * t + delta * delta);
    (v, d, c)
}

struct Functional<'a> {
    form: &'a DiscreteForm,
    mu: f64,
    p: f64,
    free: Vec<usize>,
    base: Vec<f64>,
    load: Vec<f64>,
    robin: Vec<f64>,
    delta: f64,
    delta_h: f64,
    /// Omega weights, set for the Neumann gauge.
    gauge: Option<Vec<f64>>,
    damping: Option<DMatrix<f64>>,
    lambda: Cell<f64>,
    lambda_floor: f64,
}

impl Functional<'_> {
    fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut u = self.base.clone();
        for (&k, &v) in self.free.iter().zip(x) {
            u[k] = v;
        }
        u
    }

    fn full_grad(&self, u: &[f64], delta: f64, grad: &mut [f64]) -> f64 {
        let e = self.form.value_grad(u, delta, grad);
        let mut j = self.mu * e / self.p;
        for k in 0..u.len() {
            grad[k] *= self.mu / self.p;
            grad[k] -= self.load[k];
            j -= self.load[k] * u[k];
            if self.robin[k] != 0.0 {
                let (v, d, _) = smooth_pow(u[k], self.p, delta);
                j += self.robin[k] * v / self.p;
                grad[k] += self.robin[k] * d;
            }
        }
        j
    }

    fn energy_exact(&self, u: &[f64]) -> f64 {
        let mut g = vec![0.0; u.len()];
        self.full_grad(u, 0.0, &mut g)
    }

    /// Strong-form residual with the exact potential.
    fn residual(&self, u: &[f64]) -> f64 {
        let mut g = vec![0.0; u.len()];
        self.full_grad(u, 0.0, &mut g);
        self.free.iter().map(|&k| (g[k] / self.form.mesh().weight(k)).abs()).fold(0.0, f64::max)
    }
}

impl Objective for Functional<'_> {
    fn dim(&self) -> usize {
        self.free.len()
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let u = self.expand(x);
        let mut g = vec![0.0; u.len()];
        let j = self.full_grad(&u, self.delta, &mut g);
        for (gi, &k) in grad.iter_mut().zip(&self.free) {
            *gi = g[k];
        }
        j
    }

    fn project(&self, x: &mut [f64]) {
        if let Some(w) = &self.gauge {
            // free = all nodes under the Neumann gauge
            let m = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / w.iter().sum::<f64>();
            x.iter_mut().for_each(|v| *v -= m);
        }
    }

    fn preconditioner(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let u = self.expand(x);
        let mut h = self.form.hessian(&u, self.delta_h, &self.free) * (self.mu / self.p);
        for (a, &k) in self.free.iter().enumerate() {
            if self.robin[k] != 0.0 {
                h[(a, a)] += self.robin[k] * smooth_pow(u[k], self.p, self.delta_h).2 / self.p;
            }
        }
        if let Some(m) = &self.damping {
            let l = self.lambda.get();
            if l > 0.0 {
                h += m * l;
            }
        }
        if let Some(w) = &self.gauge {
            // penalize the constant mode, which the gauge projection removes anyway
            let wn: f64 = w.iter().map(|v| v * v).sum();
            let tau = (0..h.nrows()).map(|i| h[(i, i)]).sum::<f64>() / h.nrows() as f64;
            let c = tau / wn;
            for i in 0..h.nrows() {
                for j in 0..h.ncols() {
                    h[(i, j)] += c * w[i] * w[j];
                }
            }
        }
        Some(h)
    }

    fn step_feedback(&self, full_step: bool) {
        if self.damping.is_some() {
            let l = self.lambda.get();
            self.lambda.set(if full_step { (l * 0.3).max(self.lambda_floor) } else { l * 10.0 });
        }
    }
}

fn validate(spec: &ProblemSpec) -> Result<()> {
    let mesh = spec.form.mesh();
    if !spec.f.same_mesh(mesh) || !spec.g.same_mesh(mesh) {
        return Err(Error::MeshMismatch);
    }
    if spec.form.region() != Region::FullComplement {
        return Err(invalid("complement-value problems use the full-complement form"));
    }
    if !(spec.mu_scaling > 0.0 && spec.mu_scaling.is_finite()) {
        return Err(invalid("mu_scaling must be positive"));
    }
    if let Some(b) = &spec.beta {
        if !b.same_mesh(mesh) {
            return Err(Error::MeshMismatch);
        }
    }
    if let Some(u0) = &spec.initial {
        if !u0.same_mesh(mesh) {
            return Err(Error::MeshMismatch);
        }
    }
    Ok(())
}

fn interior_mask(form: &DiscreteForm) -> Vec<bool> {
    (0..form.mesh().len()).map(|k| form.is_interior(k)).collect()
}

fn sup(values: impl Iterator<Item = f64>) -> f64 {
    values.map(f64::abs).fold(0.0, f64::max)
}

/// Characteristic amplitude of the solution, used to scale the smoothing.
fn data_scale(spec: &ProblemSpec, interior: &[bool]) -> f64 {
    let p = spec.form.p();
    let fs = sup(interior.iter().zip(&spec.f.values).filter(|(i, _)| **i).map(|(_, v)| *v));
    let gs = sup(interior.iter().zip(&spec.g.values).filter(|(i, _)| !**i).map(|(_, v)| *v));
    let scale = gs.max((fs / spec.mu_scaling).powf(1.0 / (p - 1.0)));
    if scale > 0.0 { scale } else { 1.0 }
}

fn build_report(
    spec: &ProblemSpec,
    obj: &Functional,
    u: Vec<f64>,
    iterations: usize,
    deltas: Vec<f64>,
    interior: &[bool],
) -> Result<SolveReport> {
    let form = &spec.form;
    let mesh = form.mesh().clone();
    let p = form.p();
    let final_energy = obj.energy_exact(&u);
    let residual = obj.residual(&u);

    let truncation_defect = match (form.far_field(), form.kernel().support_radius()) {
        (FarField::Zero, _) => 0.0,
        (FarField::Dropped, Some(r)) if r <= mesh.collar_r => 0.0,
        _ => {
            let osc = sup(u.iter().zip(interior).filter(|(_, i)| **i).map(|(v, _)| *v))
                + sup(spec.g.values.iter().zip(interior).filter(|(_, i)| !**i).map(|(v, _)| *v));
            form.kernel().tail_mass(mesh.collar_r).value * osc.powf(p - 1.0)
        }
    };

    let pp = p / (p - 1.0);
    let lp = |v: &[f64], r: f64, on_interior: bool| -> f64 {
        v.iter().enumerate().filter(|(k, _)| interior[*k] == on_interior).map(|(k, x)| mesh.weight(k) * x.abs().powf(r)).sum()
    };
    let num = (lp(&u, p, true) + form.value(&u, 0.0)).powf(1.0 / p);
    let f_part = lp(&spec.f.values, pp, true);
    let g_part = match spec.kind {
        ProblemKind::Dirichlet => {
            let gbar: Vec<f64> = spec.g.values.iter().zip(interior).map(|(v, i)| if *i { 0.0 } else { *v }).collect();
            form.value(&gbar, 0.0) + lp(&gbar, p, false)
        }
        _ => lp(&spec.g.values, pp, false),
    };
    let den = (f_part + g_part).powf(1.0 / p);
    let stability_ratio = if num == 0.0 { 0.0 } else { num / den };

    let gauge_defect = (spec.kind == ProblemKind::Neumann).then(|| {
        let loads: f64 = u.iter().zip(&obj.load).map(|(a, b)| (a * b).abs()).sum();
        let scale = final_energy.abs().max(form.value(&u, 0.0) * spec.mu_scaling / p).max(loads).max(f64::MIN_POSITIVE);
        [1.0, -1.0]
            .iter()
            .map(|c| {
                let shifted: Vec<f64> = u.iter().map(|v| v + c).collect();
                (obj.energy_exact(&shifted) - final_energy).abs() / scale
            })
            .fold(0.0, f64::max)
    });

    Ok(SolveReport {
        kind: spec.kind,
        u: GridFunction::new(mesh, u)?,
        iterations,
        final_energy,
        variational_residual: residual,
        converged: residual <= spec.solver.tol,
        delta_schedule_used: deltas,
        truncation_defect,
        stability_ratio,
        gauge_defect,
        f: spec.f.clone(),
        g: spec.g.clone(),
    })
}

/// Minimize with smoothing continuation for `p < 2`, Hessian refresh for `p != 2`.
fn run(spec: &ProblemSpec, mut obj: Functional, x0: Vec<f64>, interior: &[bool]) -> Result<SolveReport> {
    let p = obj.p;
    let weights: Vec<f64> = obj.free.iter().map(|&k| spec.form.mesh().weight(k)).collect();
    let cfg = MinimizeConfig {
        max_iter: spec.solver.max_iter,
        tol_grad: spec.solver.tol,
        grad_weights: Some(weights),
        memory: spec.solver.memory,
        refresh_every: if p == 2.0 { 0 } else { 1 },
        ..Default::default()
    };
    let stages: Vec<f64> = if p < 2.0 {
        let scale = data_scale(spec, interior);
        let mut s: Vec<f64> = spec.solver.delta_schedule.iter().map(|d| d * scale).collect();
        s.push(0.0);
        s
    } else {
        vec![0.0]
    };
    let mut x = x0;
    let mut iterations = 0;
    let mut used = Vec::new();
    for &delta in &stages {
        obj.delta = delta;
        if delta > 0.0 {
            obj.delta_h = delta;
        }
        let (xn, rep) = minimize(&obj, &x, &cfg);
        x = xn;
        iterations += rep.iterations;
        used.push(delta);
    }
    let u = obj.expand(&x);
    build_report(spec, &obj, u, iterations, used, interior)
}

fn functional<'a>(spec: &'a ProblemSpec, free: Vec<usize>, base: Vec<f64>, load: Vec<f64>, robin: Vec<f64>) -> Functional<'a> {
    let form = &spec.form;
    let p = form.p();
    let needs_damping = p != 2.0;
    let damping = needs_damping.then(|| form.laplacian(&free) * (2.0 * spec.mu_scaling));
    let lambda0 = if p > 2.0 { (p - 1.0) * 0.5 } else { 1e-3 };
    Functional {
        form,
        mu: spec.mu_scaling,
        p,
        free,
        base,
        load,
        robin,
        delta: 0.0,
        delta_h: 0.0,
        gauge: None,
        damping,
        lambda: Cell::new(if needs_damping { lambda0 } else { 0.0 }),
        lambda_floor: if needs_damping { 1e-10 * lambda0 } else { 0.0 },
    }
}

/// Dirichlet problem: exterior values pinned to `g`, interior unknowns.
pub fn solve_dirichlet(spec: &ProblemSpec) -> Result<SolveReport> {
    validate(spec)?;
    let form = &spec.form;
    let mesh = form.mesh();
    let n = mesh.len();
    let interior = interior_mask(form);
    let free: Vec<usize> = (0..n).filter(|&k| interior[k]).collect();
    let base: Vec<f64> = (0..n).map(|k| if interior[k] { 0.0 } else { spec.g.values[k] }).collect();
    let load: Vec<f64> = (0..n).map(|k| if interior[k] { mesh.weight(k) * spec.f.values[k] } else { 0.0 }).collect();
    let x0: Vec<f64> = match &spec.initial {
        Some(u0) => free.iter().map(|&k| u0.values[k]).collect(),
        None => {
            // linear interpolation between the exterior values next to each end
            let first = free[0];
            let last = *free.last().unwrap_or(&first);
            let gl = if first > 0 { spec.g.values[first - 1] } else { 0.0 };
            let gr = if last + 1 < n { spec.g.values[last + 1] } else { 0.0 };
            let (xl, xr) = (mesh.nodes[first.saturating_sub(1)], mesh.nodes[(last + 1).min(n - 1)]);
            free.iter().map(|&k| gl + (gr - gl) * (mesh.nodes[k] - xl) / (xr - xl)).collect()
        }
    };
    let obj = functional(spec, free, base, load, vec![0.0; n]);
    run(spec, obj, x0, &interior)
}

/// Neumann problem on the mean-zero representatives; refuses incompatible data.
pub fn solve_neumann(spec: &ProblemSpec) -> Result<SolveReport> {
    validate(spec)?;
    let form = &spec.form;
    let mesh = form.mesh();
    let n = mesh.len();
    let interior = interior_mask(form);
    let (sum, l1) = compat_sum(&interior, &spec.f, &spec.g);
    let tol = TOL_COMPAT * (l1 + f64::MIN_POSITIVE);
    if sum.abs() > tol {
        return Err(Error::IncompatibleData { defect: sum, tol });
    }
    let load: Vec<f64> = (0..n)
        .map(|k| mesh.weight(k) * if interior[k] { spec.f.values[k] } else { spec.g.values[k] })
        .collect();
    let gauge: Vec<f64> = (0..n).map(|k| if interior[k] { mesh.weight(k) } else { 0.0 }).collect();
    let x0 = spec.initial.as_ref().map(|u| u.values.clone()).unwrap_or_else(|| vec![0.0; n]);
    let mut obj = functional(spec, (0..n).collect(), vec![0.0; n], load, vec![0.0; n]);
    obj.gauge = Some(gauge);
    run(spec, obj, x0, &interior)
}

/// Robin problem `E(u, v) + Σ_{Omega^c} q beta psi(u) v = <f, v> + <g, v>`.
pub fn solve_robin(spec: &ProblemSpec) -> Result<SolveReport> {
    validate(spec)?;
    let form = &spec.form;
    let mesh = form.mesh();
    let n = mesh.len();
    let interior = interior_mask(form);
    let beta = spec.beta.as_ref().ok_or_else(|| invalid("Robin problems need a beta coefficient"))?;
    let mut any = false;
    for k in (0..n).filter(|&k| !interior[k]) {
        let b = beta.values[k];
        if !(b >= 0.0 && b.is_finite()) {
            return Err(invalid("beta must be finite and nonnegative"));
        }
        any |= b > 0.0;
    }
    if !any {
        return Err(Error::Unsupported("beta vanishes on the exterior; solve the Neumann problem instead".into()));
    }
    let load: Vec<f64> = (0..n)
        .map(|k| mesh.weight(k) * if interior[k] { spec.f.values[k] } else { spec.g.values[k] })
        .collect();
    let robin: Vec<f64> = (0..n).map(|k| if interior[k] { 0.0 } else { mesh.weight(k) * beta.values[k] }).collect();
    let x0 = spec.initial.as_ref().map(|u| u.values.clone()).unwrap_or_else(|| vec![0.0; n]);
    let obj = functional(spec, (0..n).collect(), vec![0.0; n], load, robin);
    run(spec, obj, x0, &interior)
}

pub fn solve(spec: &ProblemSpec) -> Result<SolveReport> {
    match spec.kind {
        ProblemKind::Dirichlet => solve_dirichlet(spec),
        ProblemKind::Neumann => solve_neumann(spec),
        ProblemKind::Robin => solve_robin(spec),
    }
}

/// Default tolerance of the nodewise ordering check.
pub const TOL_ORDER: f64 = 1e-8;

/// Weak comparison: for Dirichlet solves with `f_v ≤ f_u` and `g_v ≤ g_u`, checks `v ≤ u + tol` nodewise.
pub fn comparison_check(u: &SolveReport, v: &SolveReport) -> Result<bool> {
    if u.kind != ProblemKind::Dirichlet || v.kind != ProblemKind::Dirichlet {
        return Err(invalid("comparison applies to Dirichlet solves"));
    }
    let mesh = u.u.mesh();
    if !v.u.same_mesh(mesh) {
        return Err(Error::MeshMismatch);
    }
    for k in 0..mesh.len() {
        let ordered = if mesh.is_interior[k] { v.f.values[k] <= u.f.values[k] } else { v.g.values[k] <= u.g.values[k] };
        if !ordered {
            return Err(invalid(format!("data are not ordered at node {k}")));
        }
    }
    Ok(v.u.values.iter().zip(&u.u.values).all(|(a, b)| *a <= b + TOL_ORDER))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{assemble, DiagonalRule};
    use crate::kernels::KernelSpec;
    use crate::mesh::build_mesh;
    use std::sync::Arc;

    fn setup(n: usize, p: f64) -> DiscreteForm {
        let m = Arc::new(build_mesh(-1.0, 1.0, n, 0.5).unwrap());
        assemble(m, &KernelSpec::fractional(0.5, 1, p).unwrap(), Region::FullComplement, DiagonalRule::LocalExact).unwrap()
    }

    fn constant(form: &DiscreteForm, c: f64) -> GridFunction {
        GridFunction::from_fn(form.mesh().clone(), |_| c)
    }

    #[test]
    fn compatibility_examples() {
        let form = setup(16, 2.0);
        let m = form.mesh().clone();
        let zero = constant(&form, 0.0);
        assert_eq!(check_compatibility(&zero, &zero), (0.0, true));
        let one = constant(&form, 1.0);
        let (s, ok) = check_compatibility(&one, &zero);
        assert!((s - 2.0).abs() < 1e-12 && !ok);
        let ext: f64 = m.exterior_idx.iter().map(|&k| m.weight(k)).sum();
        let g = constant(&form, -2.0 / ext);
        let (s, ok) = check_compatibility(&one, &g);
        assert!(s.abs() < 1e-12 && ok);
    }

    #[test]
    fn dirichlet_trivial_solutions() {
        for p in [2.0, 3.0, 1.5] {
            let form = setup(16, p);
            let zero = constant(&form, 0.0);
            let r = solve_dirichlet(&ProblemSpec::new(ProblemKind::Dirichlet, form.clone(), zero.clone(), zero.clone())).unwrap();
            assert!(r.u.values.iter().all(|v| v.abs() < 1e-12));
            let one = constant(&form, 1.0);
            let r = solve_dirichlet(&ProblemSpec::new(ProblemKind::Dirichlet, form, zero, one)).unwrap();
            assert!(r.converged, "p={p}: {}", r.variational_residual);
            assert!(r.u.values.iter().all(|v| (v - 1.0).abs() < 1e-8), "p={p}");
        }
    }

    #[test]
    fn neumann_refuses_incompatible() {
        let form = setup(16, 2.0);
        let one = constant(&form, 1.0);
        let zero = constant(&form, 0.0);
        let e = solve_neumann(&ProblemSpec::new(ProblemKind::Neumann, form, one, zero)).unwrap_err();
        assert!(matches!(e, Error::IncompatibleData { defect, .. } if (defect - 2.0).abs() < 1e-12));
    }

    #[test]
    fn neumann_odd_data_gives_odd_solution() {
        let form = setup(32, 2.0);
        let m = form.mesh().clone();
        let f = GridFunction::from_fn(m.clone(), |x| x);
        let zero = constant(&form, 0.0);
        let r = solve_neumann(&ProblemSpec::new(ProblemKind::Neumann, form, f, zero)).unwrap();
        assert!(r.converged);
        let n = m.len();
        for k in 0..n {
            assert!((r.u.values[k] + r.u.values[n - 1 - k]).abs() < 1e-8);
        }
        assert!(r.gauge_defect.unwrap() < 1e-10);
    }

    #[test]
    fn robin_rejects_zero_beta() {
        let form = setup(16, 2.0);
        let zero = constant(&form, 0.0);
        let spec = ProblemSpec::new(ProblemKind::Robin, form, zero.clone(), zero.clone()).with_beta(zero);
        assert!(matches!(solve_robin(&spec), Err(Error::Unsupported(_))));
    }

    #[test]
    fn comparison_requires_ordered_data() {
        let form = setup(16, 2.0);
        let zero = constant(&form, 0.0);
        let one = constant(&form, 1.0);
        let a = solve_dirichlet(&ProblemSpec::new(ProblemKind::Dirichlet, form.clone(), zero.clone(), one.clone())).unwrap();
        let b = solve_dirichlet(&ProblemSpec::new(ProblemKind::Dirichlet, form, zero.clone(), zero)).unwrap();
        assert!(comparison_check(&a, &b).unwrap());
        assert!(comparison_check(&b, &a).is_err());
    }

    #[test]
    fn smooth_pow_derivatives() {
        for p in [1.5, 2.0, 3.0] {
            for delta in [0.0, 1e-2] {
                for t in [-0.7, 0.3, 1.9] {
                    let (_, d, c) = smooth_pow(t, p, delta);
                    let h = 1e-6;
                    let fd = (smooth_pow(t + h, p, delta).0 - smooth_pow(t - h, p, delta).0) / (2.0 * h);
                    assert!((p * d - fd).abs() < 1e-6, "p={p} t={t}");
                    let fd2 = (smooth_pow(t + h, p, delta).1 - smooth_pow(t - h, p, delta).1) / (2.0 * h);
                    assert!((c - p * fd2).abs() < 1e-5 * (1.0 + c.abs()), "p={p} t={t}");
                }
            }
        }
    }
}
