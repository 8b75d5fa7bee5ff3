//! Discrete energy forms `E`, `E_Omega`, `E_+` on a uniform grid, their gradients and Hessians,
//! the discrete operators `L` and `N`, and the Gauss–Green residual.
//!
//! With node weights `q_i = h` and pair weights `w_k ≈ ∫∫_{cell_i × cell_{i+k}} nu`,
//! the energy is the ordered-pair sum `Σ_{i≠j} c_ij w_{|i-j|} |u_i - u_j|^p` where the
//! region coefficient `c_ij` encodes the integration domain.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::kernels::KernelSpec;
use crate::mesh::Mesh1D;
use crate::quadrature::{integrate_split, integrate_to_zero, Tol};

/// `psi(t) = |t|^{p-2} t`, with `psi(0) = 0`.
pub fn psi(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.abs().powf(p - 2.0) * t
    }
}

/// Node values on a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    mesh: Arc<Mesh1D>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(mesh: Arc<Mesh1D>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(Error::MeshMismatch);
        }
        Ok(GridFunction { mesh, values })
    }

    pub fn zeros(mesh: Arc<Mesh1D>) -> Self {
        let n = mesh.len();
        GridFunction { mesh, values: vec![0.0; n] }
    }

    pub fn from_fn<F: Fn(f64) -> f64>(mesh: Arc<Mesh1D>, f: F) -> Self {
        let values = mesh.nodes.iter().map(|&x| f(x)).collect();
        GridFunction { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<Mesh1D> {
        &self.mesh
    }

    pub fn same_mesh(&self, other: &Arc<Mesh1D>) -> bool {
        Arc::ptr_eq(&self.mesh, other) || *self.mesh == **other
    }

    /// Copy with the exterior (or interior) nodes zeroed.
    pub fn restricted(&self, interior: bool) -> Self {
        let values =
            self.values.iter().zip(&self.mesh.is_interior).map(|(&v, &i)| if i == interior { v } else { 0.0 }).collect();
        GridFunction { mesh: self.mesh.clone(), values }
    }

    /// `(Σ_{i in Omega} q_i |u_i|^r)^{1/r}`.
    pub fn interior_lp_norm(&self, r: f64) -> f64 {
        self.mesh
            .interior_idx
            .iter()
            .map(|&k| self.mesh.weight(k) * self.values[k].abs().powf(r))
            .sum::<f64>()
            .powf(1.0 / r)
    }
}

/// Integration domain of the form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// `(Omega^c × Omega^c)^c`, the form `E`.
    FullComplement,
    /// `Omega × Omega`, the form `E_Omega`.
    Regional,
    /// `Omega × R`, the form `E_+`.
    Plus,
    /// `R × R`, no mask.
    Full,
}

impl Region {
    /// Coefficient table indexed by `[interior_i][interior_j]`.
    fn table(self) -> [[f64; 2]; 2] {
        match self {
            Region::FullComplement => [[0.0, 1.0], [1.0, 1.0]],
            Region::Regional => [[0.0, 0.0], [0.0, 1.0]],
            Region::Plus => [[0.0, 0.5], [0.5, 1.0]],
            Region::Full => [[1.0, 1.0], [1.0, 1.0]],
        }
    }
}

/// Treatment of the singular diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagonalRule {
    /// Product weights `nu(kh) h^2`, diagonal excluded.
    Skip,
    /// Cell-pair moments `∫∫ |x-y|^p nu`, exact for linear `u`; the diagonal cell moment
    /// is distributed to the nearest neighbours.
    LocalExact,
}

/// Interaction with points beyond the computational box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FarField {
    Dropped,
    /// Values beyond the box are taken as 0 and their coupling is integrated analytically.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    /// Single pass over pairs in fixed order.
    #[default]
    Deterministic,
    /// Rows evaluated in parallel and combined in row order.
    Fast,
}

#[derive(Debug, Clone, Copy)]
enum Power {
    Two,
    Three,
    Four,
    ThreeHalves,
    General(f64),
}

impl Power {
    fn of(p: f64) -> Self {
        if p == 2.0 {
            Power::Two
        } else if p == 3.0 {
            Power::Three
        } else if p == 4.0 {
            Power::Four
        } else if p == 1.5 {
            Power::ThreeHalves
        } else {
            Power::General(p)
        }
    }

    #[inline(always)]
    fn p(self) -> f64 {
        match self {
            Power::Two => 2.0,
            Power::Three => 3.0,
            Power::Four => 4.0,
            Power::ThreeHalves => 1.5,
            Power::General(p) => p,
        }
    }

    /// `(|t|^p, |t|^{p-2} t)`.
    #[inline(always)]
    fn phi_psi(self, t: f64) -> (f64, f64) {
        let a = t.abs();
        match self {
            Power::Two => (t * t, t),
            Power::Three => (a * t * t, a * t),
            Power::Four => {
                let t2 = t * t;
                (t2 * t2, t2 * t)
            }
            Power::ThreeHalves => {
                let r = a.sqrt();
                (a * r, if a == 0.0 { 0.0 } else { t / r })
            }
            Power::General(p) => {
                if a == 0.0 {
                    (0.0, 0.0)
                } else {
                    let m = a.powf(p - 2.0);
                    (m * a * a, m * t)
                }
            }
        }
    }
}

/// Smoothed or exact pair potential.
#[derive(Debug, Clone, Copy)]
struct Potential {
    pow: Power,
    delta: f64,
}

impl Potential {
    /// `(phi(t), psi(t))` with `phi' = p psi`.
    #[inline(always)]
    fn eval(self, t: f64) -> (f64, f64) {
        if self.delta == 0.0 {
            return self.pow.phi_psi(t);
        }
        let p = self.pow.p();
        let s = t * t + self.delta * self.delta;
        let m = s.powf(0.5 * p - 1.0);
        (m * s - self.delta.powf(p), m * t)
    }

    /// `phi''(t)`.
    fn curvature(self, t: f64) -> f64 {
        let p = self.pow.p();
        if self.delta == 0.0 {
            if p == 2.0 {
                return 2.0;
            }
            let a = t.abs();
            if a == 0.0 {
                return if p > 2.0 { 0.0 } else { f64::INFINITY };
            }
            return p * (p - 1.0) * a.powf(p - 2.0);
        }
        let s = t * t + self.delta * self.delta;
        p * s.powf(0.5 * p - 2.0) * ((p - 1.0) * t * t + self.delta * self.delta)
    }
}

/// Pairwise quadrature of an energy form on a mesh.
#[derive(Debug, Clone)]
pub struct DiscreteForm {
    mesh: Arc<Mesh1D>,
    kernel: KernelSpec,
    p: f64,
    region: Region,
    diagonal_rule: DiagonalRule,
    far_field: FarField,
    reduction: Reduction,
    /// `profile[k]` is the weight of node pairs at index distance `k`; `profile[0] = 0`.
    profile: Vec<f64>,
    /// Largest index distance with a nonzero weight.
    band: usize,
    /// Far-field coefficients `2 q_i T_i` on interior nodes.
    far: Vec<f64>,
    coef: [[f64; 2]; 2],
    /// Interior membership, possibly overriding the mesh.
    interior: Vec<bool>,
}

/// Assemble the pair weights of `kernel` on `mesh`. The exponent is `kernel.p`.
pub fn assemble(mesh: Arc<Mesh1D>, kernel: &KernelSpec, region: Region, rule: DiagonalRule) -> Result<DiscreteForm> {
    if kernel.d != 1 {
        return Err(invalid("forms are assembled for one-dimensional kernels"));
    }
    let mass = kernel.plevy_mass();
    if mass.divergent {
        return Err(Error::NonIntegrable(format!("{:?} has divergent p-Levy mass", kernel.family)));
    }
    let n = mesh.len();
    let h = mesh.spacing;
    let p = kernel.p;
    let max_k = match kernel.support_radius() {
        None => n - 1,
        Some(rho) => {
            let k = match rule {
                DiagonalRule::Skip => (rho / h).floor() as usize,
                DiagonalRule::LocalExact => (rho / h).ceil() as usize + 1,
            };
            k.min(n - 1)
        }
    };
    let mut profile = vec![0.0; max_k + 1];
    match rule {
        DiagonalRule::Skip => {
            for (k, w) in profile.iter_mut().enumerate().skip(1) {
                *w = kernel.profile(k as f64 * h) * h * h;
            }
        }
        DiagonalRule::LocalExact => {
            let knots = kernel.knots();
            let tol = Tol::rel(1e-12);
            let nu_p = |r: f64| r.powf(p) * kernel.profile(r);
            for (k, w) in profile.iter_mut().enumerate().skip(1) {
                let c = k as f64 * h;
                let rising = if k == 1 {
                    integrate_to_zero(|r| r * nu_p(r), h, &knots, tol).value
                } else {
                    integrate_split(|r| (r - c + h) * nu_p(r), c - h, c, &knots, tol).value
                };
                let falling = integrate_split(|r| (c + h - r) * nu_p(r), c, c + h, &knots, tol).value;
                *w = (rising + falling) / c.powf(p);
            }
            if max_k >= 1 {
                let m0 = 2.0 * integrate_to_zero(|r| (h - r) * nu_p(r), h, &knots, tol).value;
                profile[1] += m0 / (2.0 * h.powf(p));
            }
        }
    }
    let band = profile.iter().rposition(|&w| w != 0.0).unwrap_or(0);
    profile.truncate(band + 1);
    Ok(DiscreteForm {
        interior: mesh.is_interior.clone(),
        mesh,
        kernel: kernel.clone(),
        p,
        region,
        diagonal_rule: rule,
        far_field: FarField::Dropped,
        reduction: Reduction::Deterministic,
        profile,
        band,
        far: vec![0.0; n],
        coef: region.table(),
    })
}

impl DiscreteForm {
    /// Couple interior nodes to zero values beyond the computational box.
    pub fn with_far_field_zero(mut self) -> Result<Self> {
        if self.region != Region::FullComplement {
            return Err(invalid("far-field coupling is defined for the full-complement form only"));
        }
        let (lo, hi) = self.mesh.box_bounds();
        let one_sided = |r: f64| 0.5 * self.kernel.tail_mass(r).value;
        self.far = (0..self.mesh.len())
            .map(|k| {
                if self.interior[k] {
                    let x = self.mesh.nodes[k];
                    2.0 * self.mesh.weight(k) * (one_sided(x - lo) + one_sided(hi - x))
                } else {
                    0.0
                }
            })
            .collect();
        self.far_field = FarField::Zero;
        Ok(self)
    }

    pub fn with_reduction(mut self, reduction: Reduction) -> Self {
        self.reduction = reduction;
        self
    }

    /// Same weights over a different region.
    pub fn with_region(&self, region: Region) -> Self {
        let mut f = self.clone();
        f.region = region;
        f.coef = region.table();
        if region != Region::FullComplement {
            f.far = vec![0.0; f.mesh.len()];
            f.far_field = FarField::Dropped;
        }
        f
    }

    pub fn mesh(&self) -> &Arc<Mesh1D> {
        &self.mesh
    }
    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn region(&self) -> Region {
        self.region
    }
    pub fn diagonal_rule(&self) -> DiagonalRule {
        self.diagonal_rule
    }
    pub fn far_field(&self) -> FarField {
        self.far_field
    }
    pub fn band(&self) -> usize {
        self.band
    }
    /// Pair weight at index distance `k`.
    pub fn weight(&self, k: usize) -> f64 {
        self.profile.get(k).copied().unwrap_or(0.0)
    }
    pub fn is_interior(&self, k: usize) -> bool {
        self.interior[k]
    }

    fn check(&self, u: &GridFunction) -> Result<()> {
        if u.same_mesh(&self.mesh) {
            Ok(())
        } else {
            Err(Error::MeshMismatch)
        }
    }

    /// Visit each unordered pair `i < j` with nonzero coefficient, passing `2 c_ij w_ij`.
    #[inline(always)]
    fn for_each_pair<F: FnMut(usize, usize, f64)>(&self, mut f: F) {
        let n = self.mesh.len();
        for i in 0..n {
            let row = self.coef[self.interior[i] as usize];
            let end = (i + self.band).min(n - 1);
            for j in i + 1..=end {
                let c = row[self.interior[j] as usize];
                if c != 0.0 {
                    f(i, j, 2.0 * c * self.profile[j - i]);
                }
            }
        }
    }

    /// Visit the pairs of row `i` in both directions.
    #[inline(always)]
    fn for_each_in_row<F: FnMut(usize, f64)>(&self, i: usize, mut f: F) {
        let n = self.mesh.len();
        let row = self.coef[self.interior[i] as usize];
        let lo = i.saturating_sub(self.band);
        let hi = (i + self.band).min(n - 1);
        for j in lo..=hi {
            if j == i {
                continue;
            }
            let c = row[self.interior[j] as usize];
            if c != 0.0 {
                f(j, 2.0 * c * self.profile[i.abs_diff(j)]);
            }
        }
    }

    fn potential(&self, delta: f64) -> Potential {
        Potential { pow: Power::of(self.p), delta }
    }

    /// Energy and its gradient for raw node values; `delta > 0` smooths the potential.
    pub fn value_grad(&self, u: &[f64], delta: f64, grad: &mut [f64]) -> f64 {
        let pot = self.potential(delta);
        let p = self.p;
        match self.reduction {
            Reduction::Deterministic => {
                grad.iter_mut().for_each(|g| *g = 0.0);
                let mut e = 0.0;
                self.for_each_pair(|i, j, cw| {
                    let (ph, ps) = pot.eval(u[i] - u[j]);
                    e += cw * ph;
                    let g = cw * p * ps;
                    grad[i] += g;
                    grad[j] -= g;
                });
                for (k, &fk) in self.far.iter().enumerate() {
                    if fk != 0.0 {
                        let (ph, ps) = pot.eval(u[k]);
                        e += fk * ph;
                        grad[k] += fk * p * ps;
                    }
                }
                e
            }
            Reduction::Fast => {
                let rows: Vec<(f64, f64)> = (0..u.len())
                    .into_par_iter()
                    .map(|i| {
                        let mut e = 0.0;
                        let mut g = 0.0;
                        self.for_each_in_row(i, |j, cw| {
                            let (ph, ps) = pot.eval(u[i] - u[j]);
                            e += 0.5 * cw * ph;
                            g += cw * p * ps;
                        });
                        if self.far[i] != 0.0 {
                            let (ph, ps) = pot.eval(u[i]);
                            e += self.far[i] * ph;
                            g += self.far[i] * p * ps;
                        }
                        (e, g)
                    })
                    .collect();
                let mut e = 0.0;
                for (k, (re, rg)) in rows.into_iter().enumerate() {
                    e += re;
                    grad[k] = rg;
                }
                e
            }
        }
    }

    /// Energy for raw node values.
    pub fn value(&self, u: &[f64], delta: f64) -> f64 {
        let pot = self.potential(delta);
        let mut e = 0.0;
        match self.reduction {
            Reduction::Deterministic => self.for_each_pair(|i, j, cw| e += cw * pot.eval(u[i] - u[j]).0),
            Reduction::Fast => {
                let rows: Vec<f64> = (0..u.len())
                    .into_par_iter()
                    .map(|i| {
                        let mut r = 0.0;
                        self.for_each_in_row(i, |j, cw| r += 0.5 * cw * pot.eval(u[i] - u[j]).0);
                        r
                    })
                    .collect();
                e = rows.into_iter().sum();
            }
        }
        e + self.far.iter().zip(u).filter(|(f, _)| **f != 0.0).map(|(f, &x)| f * pot.eval(x).0).sum::<f64>()
    }

    /// `E(u, u)`.
    pub fn energy(&self, u: &GridFunction) -> Result<f64> {
        self.check(u)?;
        Ok(self.value(&u.values, 0.0))
    }

    /// `E(u, v) = Σ c w psi(u_i - u_j)(v_i - v_j)`.
    pub fn form_apply(&self, u: &GridFunction, v: &GridFunction) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.apply_raw(&u.values, &v.values))
    }

    fn apply_raw(&self, u: &[f64], v: &[f64]) -> f64 {
        let p = self.p;
        let mut e = 0.0;
        self.for_each_pair(|i, j, cw| e += cw * psi(u[i] - u[j], p) * (v[i] - v[j]));
        e + (0..u.len()).filter(|&k| self.far[k] != 0.0).map(|k| self.far[k] * psi(u[k], p) * v[k]).sum::<f64>()
    }

    /// Exact gradient of `E(u, u)`, with smoothing `delta` (0 for none).
    pub fn grad_energy(&self, u: &GridFunction, delta: f64) -> Result<GridFunction> {
        self.check(u)?;
        if self.p < 2.0 && delta == 0.0 {
            let mut tie = None;
            self.for_each_pair(|i, j, _| {
                if tie.is_none() && u.values[i] == u.values[j] {
                    tie = Some((i, j));
                }
            });
            if let Some((i, j)) = tie {
                return Err(Error::Nondifferentiable(i, j));
            }
        }
        let mut g = vec![0.0; u.values.len()];
        self.value_grad(&u.values, delta, &mut g);
        GridFunction::new(self.mesh.clone(), g)
    }

    /// Discrete `Lu(x_i) = (2/q_i) Σ_j w_ij psi(u_i - u_j)` on interior nodes, zero elsewhere.
    /// All box nodes interact, independent of the region mask.
    pub fn discrete_l(&self, u: &GridFunction) -> Result<GridFunction> {
        self.check(u)?;
        let n = self.mesh.len();
        let mut out = vec![0.0; n];
        for i in (0..n).filter(|&i| self.interior[i]) {
            out[i] = self.row_operator(&u.values, i, |_| true);
        }
        GridFunction::new(self.mesh.clone(), out)
    }

    /// Discrete `Nu(y_i) = (2/q_i) Σ_{j in Omega} w_ij psi(u_i - u_j)` on exterior nodes, zero elsewhere.
    pub fn discrete_normal(&self, u: &GridFunction) -> Result<GridFunction> {
        self.check(u)?;
        let n = self.mesh.len();
        let mut out = vec![0.0; n];
        for i in (0..n).filter(|&i| !self.interior[i]) {
            out[i] = self.row_operator(&u.values, i, |j| self.interior[j]);
        }
        GridFunction::new(self.mesh.clone(), out)
    }

    fn row_operator<F: Fn(usize) -> bool>(&self, u: &[f64], i: usize, include: F) -> f64 {
        let n = u.len();
        let lo = i.saturating_sub(self.band);
        let hi = (i + self.band).min(n - 1);
        let mut s = 0.0;
        for j in (lo..=hi).filter(|&j| j != i && include(j)) {
            s += self.profile[i.abs_diff(j)] * psi(u[i] - u[j], self.p);
        }
        let q = self.mesh.weight(i);
        (2.0 * s + self.far[i] * psi(u[i], self.p)) / q
    }

    /// `|Σ_Omega q L u v - (E(u, v) - Σ_{Omega^c} q N u v)|`; vanishes up to roundoff.
    pub fn gauss_green_residual(&self, u: &GridFunction, v: &GridFunction) -> Result<f64> {
        if self.region != Region::FullComplement {
            return Err(invalid("the Gauss-Green identity holds for the full-complement form"));
        }
        let l = self.discrete_l(u)?;
        let nu = self.discrete_normal(u)?;
        self.check(v)?;
        let mut lhs = 0.0;
        let mut boundary = 0.0;
        for k in 0..self.mesh.len() {
            let q = self.mesh.weight(k);
            if self.interior[k] {
                lhs += q * l.values[k] * v.values[k];
            } else {
                boundary += q * nu.values[k] * v.values[k];
            }
        }
        Ok((lhs - (self.apply_raw(&u.values, &v.values) - boundary)).abs())
    }

    /// Hessian of `E(u, u)` restricted to the `free` node indices.
    pub fn hessian(&self, u: &[f64], delta: f64, free: &[usize]) -> DMatrix<f64> {
        let pot = self.potential(delta);
        self.curvature_matrix(free, |i, j| pot.curvature(u[i] - u[j]), |k| pot.curvature(u[k]))
    }

    /// `Σ c w (e_i - e_j)(e_i - e_j)^T` over pairs, half the Hessian of the `p = 2` energy.
    pub fn laplacian(&self, free: &[usize]) -> DMatrix<f64> {
        self.curvature_matrix(free, |_, _| 1.0, |_| 1.0)
    }

    fn curvature_matrix<P, D>(&self, free: &[usize], pair: P, diag: D) -> DMatrix<f64>
    where
        P: Fn(usize, usize) -> f64,
        D: Fn(usize) -> f64,
    {
        let n = self.mesh.len();
        let mut pos = vec![usize::MAX; n];
        for (a, &k) in free.iter().enumerate() {
            pos[k] = a;
        }
        let m = free.len();
        let mut h = DMatrix::zeros(m, m);
        self.for_each_pair(|i, j, cw| {
            let (a, b) = (pos[i], pos[j]);
            if a == usize::MAX && b == usize::MAX {
                return;
            }
            let c = (cw * pair(i, j)).min(f64::MAX);
            if a != usize::MAX {
                h[(a, a)] += c;
            }
            if b != usize::MAX {
                h[(b, b)] += c;
            }
            if a != usize::MAX && b != usize::MAX {
                h[(a, b)] -= c;
                h[(b, a)] -= c;
            }
        });
        for (k, &fk) in self.far.iter().enumerate() {
            if fk != 0.0 && pos[k] != usize::MAX {
                h[(pos[k], pos[k])] += fk * diag(k);
            }
        }
        h
    }

    /// Override the interior mask of the form without touching the mesh.
    pub fn with_interior_mask(mut self, interior: Vec<bool>) -> Result<Self> {
        if interior.len() != self.mesh.len() {
            return Err(Error::MeshMismatch);
        }
        self.interior = interior;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_u(m: &Arc<Mesh1D>, rng: &mut ChaCha8Rng) -> GridFunction {
        GridFunction::new(m.clone(), (0..m.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    fn frac_form(n: usize, s: f64, p: f64, region: Region, rule: DiagonalRule) -> DiscreteForm {
        let m = Arc::new(build_mesh(-1.0, 1.0, n, 0.5).unwrap());
        assemble(m, &KernelSpec::fractional(s, 1, p).unwrap(), region, rule).unwrap()
    }

    #[test]
    fn psi_basics() {
        assert_eq!(psi(0.0, 1.5), 0.0);
        assert_eq!(psi(-2.0, 3.0), -4.0);
        assert_eq!(psi(3.0, 2.0), 3.0);
        for p in [1.5, 2.0, 3.0, 4.0, 2.7] {
            let pw = Power::of(p);
            for t in [-1.3, -0.2, 0.0, 0.7, 2.0] {
                let (ph, ps) = pw.phi_psi(t);
                assert!((ph - t.abs().powf(p)).abs() < 1e-14);
                assert!((ps - psi(t, p)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn indicator_narrower_than_cell_has_no_weights() {
        let m = Arc::new(build_mesh(-1.0, 1.0, 10, 0.5).unwrap());
        let k = KernelSpec::indicator(0.15, 1, 2.0).unwrap();
        let f = assemble(m.clone(), &k, Region::FullComplement, DiagonalRule::Skip).unwrap();
        assert!((1..m.len()).all(|k| f.weight(k) == 0.0));
        let u = GridFunction::from_fn(m, |x| x);
        assert_eq!(f.energy(&u).unwrap(), 0.0);
    }

    #[test]
    fn fractional_weights_monotone() {
        let f = frac_form(32, 0.4, 2.0, Region::FullComplement, DiagonalRule::Skip);
        for k in 1..f.band() {
            assert!(f.weight(k + 1) < f.weight(k));
        }
    }

    #[test]
    fn divergent_kernel_refused() {
        let m = Arc::new(build_mesh(-1.0, 1.0, 8, 0.5).unwrap());
        let k = KernelSpec::fractional(1.0, 1, 2.0).unwrap();
        assert!(matches!(
            assemble(m, &k, Region::FullComplement, DiagonalRule::Skip),
            Err(Error::NonIntegrable(_))
        ));
    }

    #[test]
    fn two_band_energy_by_hand() {
        let m = Arc::new(build_mesh(-1.0, 1.0, 8, 0.5).unwrap());
        let h = m.spacing;
        let k = KernelSpec::indicator(1.5 * h, 1, 2.0).unwrap();
        let f = assemble(m.clone(), &k, Region::FullComplement, DiagonalRule::Skip).unwrap();
        let u = GridFunction::from_fn(m.clone(), |x| x);
        let mut brute = 0.0;
        for i in 0..m.len() {
            for j in 0..m.len() {
                let r = (m.nodes[i] - m.nodes[j]).abs();
                if i != j && (m.is_interior[i] || m.is_interior[j]) && r <= 1.5 * h + 1e-12 {
                    brute += h * h * (u.values[i] - u.values[j]).powi(2);
                }
            }
        }
        assert!((f.energy(&u).unwrap() - brute).abs() < 1e-14 * brute);
    }

    #[test]
    fn region_ordering() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e = frac_form(24, 0.5, 2.5, Region::FullComplement, DiagonalRule::Skip);
        let r = e.with_region(Region::Regional);
        let plus = e.with_region(Region::Plus);
        for _ in 0..20 {
            let u = random_u(e.mesh(), &mut rng);
            let (ee, er, ep) = (e.energy(&u).unwrap(), r.energy(&u).unwrap(), plus.energy(&u).unwrap());
            assert!(er <= ee);
            assert!(ee <= 2.0 * ep * (1.0 + 1e-14) && ep <= ee * (1.0 + 1e-14));
        }
    }

    #[test]
    fn constants_and_homogeneity() {
        let f = frac_form(20, 0.3, 3.0, Region::FullComplement, DiagonalRule::LocalExact);
        let c = GridFunction::from_fn(f.mesh().clone(), |_| 2.5);
        assert_eq!(f.energy(&c).unwrap(), 0.0);
        let g = f.grad_energy(&c, 0.0).unwrap();
        assert!(g.values.iter().all(|&x| x == 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_u(f.mesh(), &mut rng);
        assert_eq!(f.form_apply(&u, &c).unwrap(), 0.0);
        let lam: f64 = -1.7;
        let lu = GridFunction::new(f.mesh().clone(), u.values.iter().map(|x| lam * x).collect()).unwrap();
        let r = f.energy(&lu).unwrap() / (lam.abs().powf(3.0) * f.energy(&u).unwrap());
        assert!((r - 1.0).abs() < 1e-12);
        assert!((f.form_apply(&u, &u).unwrap() - f.energy(&u).unwrap()).abs() < 1e-12 * f.energy(&u).unwrap());
    }

    #[test]
    fn full_space_gradient_sums_to_zero() {
        let f = frac_form(20, 0.6, 3.0, Region::Full, DiagonalRule::Skip);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = random_u(f.mesh(), &mut rng);
        let g = f.grad_energy(&u, 0.0).unwrap();
        let scale: f64 = g.values.iter().map(|x| x.abs()).sum();
        assert!(g.values.iter().sum::<f64>().abs() < 1e-13 * scale);
    }

    #[test]
    fn gradient_matches_discrete_operator() {
        let f = frac_form(16, 0.5, 3.0, Region::FullComplement, DiagonalRule::LocalExact);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random_u(f.mesh(), &mut rng);
        let g = f.grad_energy(&u, 0.0).unwrap();
        let l = f.discrete_l(&u).unwrap();
        let m = f.mesh();
        for &i in &m.interior_idx {
            assert!((g.values[i] - f.p() * m.weight(i) * l.values[i]).abs() < 1e-12 * g.values[i].abs().max(1e-300));
        }
    }

    #[test]
    fn tie_without_smoothing_is_refused() {
        let f = frac_form(8, 0.5, 1.5, Region::FullComplement, DiagonalRule::Skip);
        let u = GridFunction::zeros(f.mesh().clone());
        assert!(matches!(f.grad_energy(&u, 0.0), Err(Error::Nondifferentiable(_, _))));
        assert!(f.grad_energy(&u, 1e-3).is_ok());
    }

    #[test]
    fn mesh_mismatch() {
        let f = frac_form(8, 0.5, 2.0, Region::FullComplement, DiagonalRule::Skip);
        let other = Arc::new(build_mesh(-1.0, 1.0, 9, 0.5).unwrap());
        let u = GridFunction::zeros(other);
        assert!(matches!(f.energy(&u), Err(Error::MeshMismatch)));
    }

    #[test]
    fn deterministic_and_fast_agree() {
        let f = frac_form(40, 0.5, 3.0, Region::FullComplement, DiagonalRule::Skip);
        let fast = f.clone().with_reduction(Reduction::Fast);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_u(f.mesh(), &mut rng);
        let mut g1 = vec![0.0; u.values.len()];
        let mut g2 = g1.clone();
        let e1 = f.value_grad(&u.values, 0.0, &mut g1);
        let e2 = fast.value_grad(&u.values, 0.0, &mut g2);
        assert!((e1 - e2).abs() < 1e-12 * e1);
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a - b).abs() < 1e-11 * (1.0 + a.abs()));
        }
        assert!((fast.value(&u.values, 0.0) - e1).abs() < 1e-12 * e1);
    }

    #[test]
    fn local_exact_closed_form_weights() {
        // for |h|^{-1-sp} with sp = 1 and p = 2 the moment density r^p nu(r) is 1, so every cell-pair
        // moment equals the triangle area h^2 and the diagonal moment h^2 moves half onto k = 1
        let f = frac_form(64, 0.5, 2.0, Region::Full, DiagonalRule::LocalExact);
        assert!((f.weight(1) - 1.5).abs() < 1e-10, "w1 = {}", f.weight(1));
        for k in 2..20 {
            assert!((f.weight(k) - 1.0 / (k * k) as f64).abs() < 1e-10 / (k * k) as f64);
        }
    }

    #[test]
    fn far_field_zero_equals_wider_box() {
        // with u = 0 outside, the analytic far-field term matches a brute-force wider collar
        let k = KernelSpec::fractional(0.5, 1, 2.0).unwrap();
        let narrow = Arc::new(build_mesh(-1.0, 1.0, 32, 0.5).unwrap());
        let wide = Arc::new(build_mesh(-1.0, 1.0, 32, 20.0).unwrap());
        let fn_ = assemble(narrow.clone(), &k, Region::FullComplement, DiagonalRule::Skip).unwrap().with_far_field_zero().unwrap();
        let fw = assemble(wide.clone(), &k, Region::FullComplement, DiagonalRule::Skip).unwrap().with_far_field_zero().unwrap();
        let bump = |x: f64| if x.abs() < 1.0 { 1.0 - x * x } else { 0.0 };
        let en = fn_.energy(&GridFunction::from_fn(narrow, bump)).unwrap();
        let ew = fw.energy(&GridFunction::from_fn(wide, bump)).unwrap();
        assert!((en - ew).abs() < 2e-3 * ew, "{en} vs {ew}");
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let f = frac_form(10, 0.5, 3.0, Region::FullComplement, DiagonalRule::Skip);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random_u(f.mesh(), &mut rng);
        let free = f.mesh().interior_idx.clone();
        let h = f.hessian(&u.values, 0.0, &free);
        let step = 1e-6;
        for (a, &k) in free.iter().enumerate() {
            let mut up = u.values.clone();
            let mut dn = u.values.clone();
            up[k] += step;
            dn[k] -= step;
            let mut gu = vec![0.0; up.len()];
            let mut gd = gu.clone();
            f.value_grad(&up, 0.0, &mut gu);
            f.value_grad(&dn, 0.0, &mut gd);
            for (b, &l) in free.iter().enumerate() {
                let fd = (gu[l] - gd[l]) / (2.0 * step);
                assert!((fd - h[(a, b)]).abs() < 1e-6 * (1.0 + h[(a, a)].abs()));
            }
        }
    }
}
