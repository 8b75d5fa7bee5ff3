//! Grid convergence of a p = 2 fractional Dirichlet solve against a fine-grid reference.

use std::sync::Arc;

use plevy::forms::{assemble, DiagonalRule, GridFunction, Region};
use plevy::kernels::KernelSpec;
use plevy::mesh::build_mesh;
use plevy::solvers::{solve_dirichlet, ProblemKind, ProblemSpec, SolveReport};

/// `u = 0` off `(-1, 1)` is exact with the analytic far field, so a one-cell collar suffices.
fn solve(n: usize) -> SolveReport {
    let mesh = Arc::new(build_mesh(-1.0, 1.0, n, 2.0 / n as f64).unwrap());
    let kernel = KernelSpec::fractional(0.5, 1, 2.0).unwrap();
    let form = assemble(mesh.clone(), &kernel, Region::FullComplement, DiagonalRule::LocalExact)
        .unwrap()
        .with_far_field_zero()
        .unwrap();
    let f = GridFunction::from_fn(mesh.clone(), |_| 1.0);
    let rep = solve_dirichlet(&ProblemSpec::new(ProblemKind::Dirichlet, form, f, GridFunction::zeros(mesh))).unwrap();
    assert!(rep.converged);
    rep
}

fn interior(rep: &SolveReport) -> Vec<f64> {
    let m = rep.u.mesh();
    m.interior_idx.iter().map(|&k| rep.u.values[k]).collect()
}

#[test]
fn coarse_solve_matches_fine_reference() {
    let (n, fine_n) = (512, 4096);
    let coarse = interior(&solve(n));
    let fine = interior(&solve(fine_n));
    let r = fine_n / n;
    // coarse midpoints sit between fine nodes r/2 - 1 and r/2 of each coarse cell
    let restricted: Vec<f64> = (0..n).map(|k| 0.5 * (fine[r * k + r / 2 - 1] + fine[r * k + r / 2])).collect();
    let diff: f64 = coarse.iter().zip(&restricted).map(|(a, b)| (a - b).powi(2)).sum();
    let norm: f64 = restricted.iter().map(|b| b * b).sum();
    let rel = (diff / norm).sqrt();
    assert!(rel < 0.02, "relative L2 distance {rel}");
    assert!(coarse.iter().all(|&v| v > 0.0));
}
