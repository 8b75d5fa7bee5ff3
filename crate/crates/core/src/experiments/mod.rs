//! Nonlocal-to-local convergence sweeps, the non-existence demo, Poincaré estimates and
//! the elementary inequality suite. Sweep rows come out in descending `epsilon`.

pub mod inequalities;
pub mod local;
pub mod nonexistence;
pub mod poincare;
pub mod verify;

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::forms::{assemble, DiagonalRule, GridFunction, Region};
use crate::kernels::ApproxFamily;
use crate::mesh::{build_mesh, Mesh1D};
use crate::forms::psi;
use crate::operators::{gradient_p_integral, local_plaplace_1d, pointwise_l, SmoothFunction1D};
use crate::quadrature::{integrate_split, integrate_to_zero, Tol};
use crate::solvers::{solve_dirichlet, solve_neumann, ProblemKind, ProblemSpec, SolverConfig};
use crate::special::k_dp;
use local::{constant_rhs_solution, solve_local, LocalBc};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub quantity: f64,
    pub reference: f64,
    pub abs_error: f64,
    pub rel_error: f64,
}

impl ConvergenceRow {
    pub fn new(epsilon: f64, quantity: f64, reference: f64) -> Self {
        let abs_error = (quantity - reference).abs();
        let rel_error = if reference != 0.0 { abs_error / reference.abs() } else { abs_error };
        ConvergenceRow { epsilon, quantity, reference, abs_error, rel_error }
    }

    /// A distance row: `quantity = ‖u_eps - u‖`, `reference = 0`, relative to `norm = ‖u‖`.
    pub fn distance(epsilon: f64, distance: f64, norm: f64) -> Self {
        ConvergenceRow {
            epsilon,
            quantity: distance,
            reference: 0.0,
            abs_error: distance,
            rel_error: if norm > 0.0 { distance / norm } else { distance },
        }
    }
}

/// Rows plus diagnostics that do not fit the table.
#[derive(Debug, Clone, Default)]
pub struct Sweep {
    pub rows: Vec<ConvergenceRow>,
    pub warnings: Vec<String>,
    /// `sup_Omega |L_eps phi|` per row, for the Neumann sweep.
    pub kappa: Vec<f64>,
    /// Rows whose solve stopped above tolerance.
    pub unconverged: usize,
}

/// Last row has the smallest relative error, with at most one increase along the way.
pub fn monotone_trend(rows: &[ConvergenceRow]) -> bool {
    let Some(last) = rows.last() else { return true };
    if rows.iter().any(|r| r.rel_error < last.rel_error) {
        return false;
    }
    rows.windows(2).filter(|w| w[1].rel_error > w[0].rel_error).count() <= 1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshSpec {
    pub a: f64,
    pub b: f64,
    pub n_interior: usize,
    pub collar_r: f64,
}

impl MeshSpec {
    pub fn build(&self) -> Result<Arc<Mesh1D>> {
        Ok(Arc::new(build_mesh(self.a, self.b, self.n_interior, self.collar_r)?))
    }
}

fn sorted_desc(eps_list: &[f64]) -> Result<Vec<f64>> {
    if eps_list.is_empty() {
        return Err(invalid("eps_list must not be empty"));
    }
    let mut e = eps_list.to_vec();
    e.sort_by(|a, b| b.total_cmp(a));
    Ok(e)
}

fn lp_norm(mesh: &Mesh1D, v: impl Fn(usize) -> f64, p: f64) -> f64 {
    mesh.interior_idx.iter().map(|&k| mesh.weight(k) * v(k).abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

fn effective_window(u: &SmoothFunction1D) -> Result<(f64, f64, f64)> {
    match u {
        SmoothFunction1D::Gaussian { center, width } => Ok((center - 8.0 * width, center + 8.0 * width, 0.0)),
        SmoothFunction1D::BumpCompact { center, radius } => Ok((center - radius, center + radius, 0.0)),
        SmoothFunction1D::Polynomial { coeffs } if coeffs.iter().skip(1).all(|&c| c == 0.0) => {
            Ok((-1.0, 1.0, coeffs.first().copied().unwrap_or(0.0)))
        }
        SmoothFunction1D::Polynomial { .. } => Err(invalid("the full-space energy needs a test function with a far-field value")),
    }
}

/// Full-space energy `E_eps(u, u)` against `K_{1,p} ∫ |u'|^p`.
///
/// The energy is evaluated on a window carrying the variation of `u`; interactions with the
/// far field use the exact kernel tail, valid because `u` is constant out there.
pub fn bbm_convergence(
    u: &SmoothFunction1D,
    family: &ApproxFamily,
    p: f64,
    eps_list: &[f64],
    n_interior: usize,
) -> Result<Vec<ConvergenceRow>> {
    let (lo, hi, u_inf) = effective_window(u)?;
    let eps = sorted_desc(eps_list)?;
    let mesh = Arc::new(build_mesh(lo, hi, n_interior, (hi - lo) / n_interior as f64)?);
    let reference = k_dp(1, p)? * gradient_p_integral(u, p, lo, hi);
    let values: Vec<f64> = mesh.nodes.iter().map(|&x| u.value(x) - u_inf).collect();
    eps.par_iter()
        .map(|&e| {
            let kernel = family.member(1, p, e)?;
            let form = assemble(mesh.clone(), &kernel, Region::FullComplement, DiagonalRule::LocalExact)?.with_far_field_zero()?;
            Ok(ConvergenceRow::new(e, form.value(&values, 0.0), reference))
        })
        .collect()
}

/// `L_eps u(x)` against `-K_{1,p} Delta_p u(x)`.
pub fn pointwise_convergence(
    u: &SmoothFunction1D,
    family: &ApproxFamily,
    p: f64,
    x: f64,
    eps_list: &[f64],
) -> Result<Vec<ConvergenceRow>> {
    let reference = -k_dp(1, p)? * local_plaplace_1d(u, p, x)?;
    sorted_desc(eps_list)?
        .par_iter()
        .map(|&e| {
            let kernel = family.member(1, p, e)?;
            Ok(ConvergenceRow::new(e, pointwise_l(u, &kernel, x)?.value, reference))
        })
        .collect()
}

fn constant_value(u: &SmoothFunction1D) -> Option<f64> {
    match u {
        SmoothFunction1D::Polynomial { coeffs } if coeffs.iter().skip(1).all(|&c| c == 0.0) => {
            Some(coeffs.first().copied().unwrap_or(0.0))
        }
        _ => None,
    }
}

fn far_value_zero(u: &SmoothFunction1D) -> bool {
    match u {
        SmoothFunction1D::Gaussian { .. } | SmoothFunction1D::BumpCompact { .. } => true,
        _ => constant_value(u) == Some(0.0),
    }
}

/// Local reference resolution relative to the nonlocal grid.
pub const LOCAL_REFINEMENT: usize = 8;

/// Dirichlet solutions of `mu L_eps u = f`, `u = g` on `Omega^c`, `mu = K_{1,p}^{-1}`, against the
/// local `p`-Laplace solution, in `L^p(Omega)`.
pub fn dirichlet_convergence(
    p: f64,
    f: &SmoothFunction1D,
    g: &SmoothFunction1D,
    family: &ApproxFamily,
    eps_list: &[f64],
    mesh: &MeshSpec,
    solver: &SolverConfig,
) -> Result<Sweep> {
    let m = mesh.build()?;
    let (a, b) = (mesh.a, mesh.b);
    let u_local: Box<dyn Fn(f64) -> f64 + Sync> = match (constant_value(f), constant_value(g)) {
        (Some(c), Some(g0)) => Box::new(constant_rhs_solution(p, c, a, b, g0)),
        _ => {
            let s = solve_local(p, a, b, LOCAL_REFINEMENT * mesh.n_interior, &|x| f.value(x), LocalBc::Dirichlet(g.value(a), g.value(b)))?;
            Box::new(move |x| s.eval(x))
        }
    };
    let norm = lp_norm(&m, |k| u_local(m.nodes[k]), p);
    let fg = GridFunction::from_fn(m.clone(), |x| f.value(x));
    let gg = GridFunction::from_fn(m.clone(), |x| g.value(x));
    let mu = 1.0 / k_dp(1, p)?;
    let results: Vec<Result<(ConvergenceRow, Option<String>)>> = sorted_desc(eps_list)?
        .par_iter()
        .map(|&e| {
            let kernel = family.member(1, p, e)?;
            let mut form = assemble(m.clone(), &kernel, Region::FullComplement, DiagonalRule::LocalExact)?;
            if far_value_zero(g) {
                form = form.with_far_field_zero()?;
            }
            let spec = ProblemSpec::new(ProblemKind::Dirichlet, form, fg.clone(), gg.clone())
                .with_mu(mu)
                .with_solver(solver.clone());
            let rep = solve_dirichlet(&spec)?;
            let dist = lp_norm(&m, |k| rep.u.values[k] - u_local(m.nodes[k]), p);
            let warn = (!rep.converged)
                .then(|| format!("eps = {e}: solver residual {:.3e} above tolerance", rep.variational_residual));
            Ok((ConvergenceRow::distance(e, dist, norm), warn))
        })
        .collect();
    collect_sweep(results)
}

fn collect_sweep(results: Vec<Result<(ConvergenceRow, Option<String>)>>) -> Result<Sweep> {
    let mut sweep = Sweep::default();
    for r in results {
        let (row, warn) = r?;
        sweep.rows.push(row);
        sweep.unconverged += warn.is_some() as usize;
        sweep.warnings.extend(warn);
    }
    Ok(sweep)
}

/// Neumann solutions with `g_eps = N_eps phi` on the exterior nodes and constant `f_eps` making the
/// discrete data compatible, against the local Neumann problem with flux `∂_{n,p} phi`.
/// Mean-zero representatives are compared in `L^p(Omega)`.
pub fn neumann_convergence(
    p: f64,
    phi: &SmoothFunction1D,
    family: &ApproxFamily,
    eps_list: &[f64],
    mesh: &MeshSpec,
    solver: &SolverConfig,
) -> Result<Sweep> {
    let m = mesh.build()?;
    let (a, b) = (mesh.a, mesh.b);
    let kp = k_dp(1, p)?;
    let flux_a = psi(-phi.jet(a).1, p);
    let flux_b = psi(phi.jet(b).1, p);
    let f_local = -(flux_a + flux_b) / (b - a);
    let local = solve_local(p, a, b, LOCAL_REFINEMENT * mesh.n_interior, &|_| f_local, LocalBc::Neumann(flux_a, flux_b))?;
    let norm = lp_norm(&m, |k| local.eval(m.nodes[k]), p);
    let phi_grid = GridFunction::from_fn(m.clone(), |x| phi.value(x));
    let omega: f64 = m.interior_idx.iter().map(|&k| m.weight(k)).sum();
    let mu = 1.0 / kp;
    let results: Vec<Result<(ConvergenceRow, Option<String>, f64)>> = sorted_desc(eps_list)?
        .par_iter()
        .map(|&e| {
            let kernel = family.member(1, p, e)?;
            let form = assemble(m.clone(), &kernel, Region::FullComplement, DiagonalRule::LocalExact)?;
            let normal = form.discrete_normal(&phi_grid)?;
            let kappa = form.discrete_l(&phi_grid)?.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let g_ext: f64 = m.exterior_idx.iter().map(|&k| m.weight(k) * normal.values[k]).sum();
            let c = -mu * g_ext / omega;
            let f = GridFunction::from_fn(m.clone(), |_| c);
            let g = GridFunction::new(m.clone(), normal.values.iter().map(|v| mu * v).collect())?;
            let spec = ProblemSpec::new(ProblemKind::Neumann, form, f, g).with_mu(mu).with_solver(solver.clone());
            let rep = match solve_neumann(&spec) {
                Ok(r) => r,
                Err(err) => {
                    return Ok((ConvergenceRow::distance(e, f64::NAN, norm), Some(format!("eps = {e}: {err}")), kappa))
                }
            };
            let mean = m.interior_idx.iter().map(|&k| m.weight(k) * rep.u.values[k]).sum::<f64>() / omega;
            let dist = lp_norm(&m, |k| rep.u.values[k] - mean - local.eval(m.nodes[k]), p);
            let warn = (!rep.converged)
                .then(|| format!("eps = {e}: solver residual {:.3e} above tolerance", rep.variational_residual));
            Ok((ConvergenceRow::distance(e, dist, norm), warn, kappa))
        })
        .collect();
    let mut sweep = Sweep::default();
    for r in results {
        let (row, warn, kappa) = r?;
        sweep.rows.push(row);
        sweep.unconverged += warn.is_some() as usize;
        sweep.warnings.extend(warn);
        sweep.kappa.push(kappa);
    }
    if p < 2.0 && sweep.kappa.windows(2).any(|w| w[1] > 1.5 * w[0]) {
        sweep.warnings.push(format!("sup |L_eps phi| grows along the sweep: {:?}", sweep.kappa));
    }
    Ok(sweep)
}

/// `∫_{Omega^c} N_eps phi · v` against `K_{1,p} Σ_{∂Omega} ∂_{n,p} phi · v`.
///
/// The double integral is taken in the pair distance `rho` first: on the right end, with
/// `y = b + t` and `x = y - rho`, `I(rho) = ∫ psi(phi(y) - phi(x)) v(y) dt` over admissible `t`,
/// and `I(rho) = C0 rho^p + O(rho^{p+1})` with `C0 = psi(phi'(b)) v(b)`. The leading part goes
/// through the kernel's near moment, which keeps the slowly decaying singularity of
/// `N_eps phi` at the boundary out of the quadrature.
pub fn boundary_collapse(
    phi: &SmoothFunction1D,
    v: &SmoothFunction1D,
    family: &ApproxFamily,
    p: f64,
    eps_list: &[f64],
    domain: (f64, f64),
) -> Result<Vec<ConvergenceRow>> {
    let (a, b) = domain;
    if !(a < b) {
        return Err(invalid("domain must satisfy a < b"));
    }
    let len = b - a;
    let reach = match v {
        SmoothFunction1D::Gaussian { center, width } => (center - a).abs().max((center - b).abs()) + 10.0 * width,
        SmoothFunction1D::BumpCompact { center, radius } => (center - a).abs().max((center - b).abs()) + radius,
        SmoothFunction1D::Polynomial { .. } => return Err(invalid("v must decay away from Omega")),
    };
    let kp = k_dp(1, p)?;
    let ends = [(b, 1.0, psi(phi.jet(b).1, p) * v.value(b)), (a, -1.0, psi(-phi.jet(a).1, p) * v.value(a))];
    let reference = kp * (ends[0].2 + ends[1].2);
    sorted_desc(eps_list)?
        .par_iter()
        .map(|&e| {
            let kernel = family.member(1, p, e)?;
            let r_max = kernel.support_radius().map_or(reach + len, |r| r.min(reach + len));
            let r0 = r_max.min(0.5 * len);
            let knots = kernel.knots();
            let tol = Tol::rel(1e-10);
            let mut total = 0.0;
            for &(edge, dir, c0) in &ends {
                let inner = |rho: f64| {
                    let lo = (rho - len).max(0.0);
                    let f = |t: f64| {
                        let y = edge + dir * t;
                        psi(phi.value(y) - phi.value(y - dir * rho), p) * v.value(y)
                    };
                    crate::quadrature::integrate(f, lo, rho, tol).value
                };
                let near = 0.5 * kernel.near_moment(r0).value * c0
                    + integrate_to_zero(|r| kernel.profile(r) * (inner(r) - c0 * r.powf(p)), r0, &knots, tol).value;
                let far = if r_max > r0 { integrate_split(|r| kernel.profile(r) * inner(r), r0, r_max, &knots, tol).value } else { 0.0 };
                total += 2.0 * (near + far);
            }
            Ok(ConvergenceRow::new(e, total, reference))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trend_detection() {
        let rows = |e: &[f64]| e.iter().enumerate().map(|(i, &r)| ConvergenceRow::new(i as f64, r, 1.0)).collect::<Vec<_>>();
        assert!(monotone_trend(&rows(&[1.5, 1.2, 1.1])));
        assert!(monotone_trend(&rows(&[1.5, 1.6, 1.1])));
        assert!(!monotone_trend(&rows(&[1.5, 1.2, 1.3])));
        assert!(!monotone_trend(&rows(&[1.5, 1.6, 1.4, 1.45, 1.1])));
    }

    #[test]
    fn bbm_constant_is_zero() {
        let c = SmoothFunction1D::constant(2.5);
        let rows = bbm_convergence(&c, &ApproxFamily::StableNormalized, 2.0, &[0.3, 0.1], 64).unwrap();
        assert!(rows.iter().all(|r| r.quantity == 0.0 && r.reference == 0.0));
        assert!(rows[0].epsilon > rows[1].epsilon);
    }

    #[test]
    fn bbm_gaussian_reference_is_analytic() {
        let g = SmoothFunction1D::gaussian(0.0, 1.0);
        let rows = bbm_convergence(&g, &ApproxFamily::StableNormalized, 2.0, &[0.3], 128).unwrap();
        assert!((rows[0].reference - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn pointwise_linear_is_zero() {
        let lin = SmoothFunction1D::Polynomial { coeffs: vec![0.3, 2.0] };
        let rows = pointwise_convergence(&lin, &ApproxFamily::RescaledIndicator, 3.0, 0.1, &[0.5, 0.1]).unwrap();
        assert!(rows.iter().all(|r| r.quantity == 0.0 && r.reference == 0.0));
    }
}
