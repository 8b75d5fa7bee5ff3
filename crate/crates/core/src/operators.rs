//! Pointwise evaluation of `Lu` and `Nu` for closed-form test functions, the local
//! 1D p-Laplacian, and the spherical-mean identity for `Delta_p` in `d = 2, 3`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::forms::{psi, DiscreteForm, GridFunction};
use crate::kernels::KernelSpec;
use crate::quadrature::{integrate, integrate_split, integrate_to_zero, Quad, Tol};
use crate::special::k_dp;

/// Closed-form test functions with analytic derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SmoothFunction1D {
    /// `exp(-((x - center)/width)^2)`.
    Gaussian { center: f64, width: f64 },
    /// `Σ_k coeffs[k] x^k`.
    Polynomial { coeffs: Vec<f64> },
    /// `exp(1 - 1/(1 - t^2))` with `t = (x - center)/radius` on `|t| < 1`, zero outside.
    BumpCompact { center: f64, radius: f64 },
}

impl SmoothFunction1D {
    pub fn gaussian(center: f64, width: f64) -> Self {
        SmoothFunction1D::Gaussian { center, width }
    }

    pub fn constant(c: f64) -> Self {
        SmoothFunction1D::Polynomial { coeffs: vec![c] }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SmoothFunction1D::Gaussian { width, center } => {
                if !(*width > 0.0 && width.is_finite() && center.is_finite()) {
                    return Err(invalid("gaussian width must be positive"));
                }
            }
            SmoothFunction1D::Polynomial { coeffs } => {
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(invalid("polynomial coefficients must be finite"));
                }
            }
            SmoothFunction1D::BumpCompact { radius, center } => {
                if !(*radius > 0.0 && radius.is_finite() && center.is_finite()) {
                    return Err(invalid("bump radius must be positive"));
                }
            }
        }
        Ok(())
    }

    /// `(u, u', u'')` at `x`.
    pub fn jet(&self, x: f64) -> (f64, f64, f64) {
        match self {
            SmoothFunction1D::Gaussian { center, width } => {
                let z = (x - center) / width;
                let u = (-z * z).exp();
                (u, -2.0 * z * u / width, (4.0 * z * z - 2.0) * u / (width * width))
            }
            SmoothFunction1D::Polynomial { coeffs } => {
                let (mut u, mut d1, mut d2) = (0.0, 0.0, 0.0);
                for &c in coeffs.iter().rev() {
                    d2 = d2 * x + 2.0 * d1;
                    d1 = d1 * x + u;
                    u = u * x + c;
                }
                (u, d1, d2)
            }
            SmoothFunction1D::BumpCompact { center, radius } => {
                let t = (x - center) / radius;
                if t.abs() >= 1.0 {
                    return (0.0, 0.0, 0.0);
                }
                let w = 1.0 - t * t;
                let u = (1.0 - 1.0 / w).exp();
                let g1 = -2.0 * t / (w * w);
                let g2 = -2.0 / (w * w) - 8.0 * t * t / (w * w * w);
                (u, u * g1 / radius, u * (g1 * g1 + g2) / (radius * radius))
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.jet(x).0
    }

    /// A characteristic length on which the function varies.
    fn length_scale(&self) -> f64 {
        match self {
            SmoothFunction1D::Gaussian { width, .. } => *width,
            SmoothFunction1D::Polynomial { .. } => 1.0,
            SmoothFunction1D::BumpCompact { radius, .. } => *radius,
        }
    }

    /// `(T, u_inf)`: for `|h| > T` the function equals `u_inf` at `x ± h`, up to `e^{-100}` for Gaussians.
    fn far_field(&self, x: f64) -> Option<(f64, f64)> {
        match self {
            SmoothFunction1D::Gaussian { center, width } => Some(((x - center).abs() + 10.0 * width, 0.0)),
            SmoothFunction1D::BumpCompact { center, radius } => Some(((x - center).abs() + radius, 0.0)),
            SmoothFunction1D::Polynomial { coeffs } => {
                let deg = coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0);
                if deg == 0 {
                    Some((0.0, coeffs.first().copied().unwrap_or(0.0)))
                } else {
                    None
                }
            }
        }
    }

    fn is_affine(&self) -> bool {
        matches!(self, SmoothFunction1D::Polynomial { coeffs } if coeffs.iter().skip(2).all(|&c| c == 0.0))
    }

    /// Points where the function has structure worth splitting a quadrature at.
    fn breakpoints(&self) -> Vec<f64> {
        match self {
            SmoothFunction1D::Gaussian { center, width } => vec![*center, center - width, center + width],
            SmoothFunction1D::BumpCompact { center, radius } => vec![center - radius, *center, center + radius],
            SmoothFunction1D::Polynomial { .. } => vec![],
        }
    }
}

fn require_1d(kernel: &KernelSpec) -> Result<()> {
    if kernel.d == 1 {
        Ok(())
    } else {
        Err(invalid("pointwise operators are implemented for d = 1 kernels"))
    }
}

/// Relative cut below which the second-difference remainder is dropped: it is `O(h^{p+2})`
/// there while its floating-point evaluation loses all digits.
const TAYLOR_CUT: f64 = 1e-3;

/// `Lu(x) = -2 ∫_0^∞ [psi(u(x+h) - u(x)) + psi(u(x-h) - u(x))] nu(h) dh`.
///
/// The leading term `Delta_p u(x) h^p` of the second difference is integrated against the kernel
/// moment exactly; the remainder is integrated adaptively; beyond the far-field radius of `u`
/// the integrand is constant and the kernel tail is used.
pub fn pointwise_l(u: &SmoothFunction1D, kernel: &KernelSpec, x: f64) -> Result<Quad> {
    require_1d(kernel)?;
    u.validate()?;
    let p = kernel.p;
    let (u0, d1, d2) = u.jet(x);
    if p < 2.0 && d1 == 0.0 {
        return Err(Error::Unsupported(format!("p = {p} < 2 at a critical point x = {x}")));
    }
    if u.is_affine() {
        return Ok(Quad::default());
    }
    let support = kernel.support_radius();
    let (far_t, u_inf) = match (u.far_field(x), support) {
        (Some(f), _) => f,
        (None, Some(rho)) => (rho, f64::NAN),
        (None, None) => {
            return Err(Error::Unsupported("unbounded test function against a full-support kernel".into()))
        }
    };
    let lap = if p == 2.0 { d2 } else { (p - 1.0) * d1.abs().powf(p - 2.0) * d2 };
    let s = |h: f64| psi(u.value(x + h) - u0, p) + psi(u.value(x - h) - u0, p);
    let len = u.length_scale();
    let mut rho = 0.05 * len;
    if let Some(r) = support {
        rho = rho.min(r);
    }
    rho = rho.min(far_t.max(f64::MIN_POSITIVE));
    let knots: Vec<f64> = {
        let mut k = kernel.knots();
        for b in u.breakpoints() {
            k.push((b - x).abs());
        }
        k
    };
    let tol = Tol::rel(1e-11);

    // leading term against the exact moment ∫_0^rho h^p nu
    let moment = 0.5 * kernel.near_moment(rho).value;
    let h_t = TAYLOR_CUT * len;
    let remainder = if h_t < rho {
        integrate_split(|h| (s(h) - lap * h.powf(p)) * kernel.profile(h), h_t, rho, &knots, tol)
    } else {
        Quad::default()
    };
    let middle = if far_t > rho {
        integrate_split(|h| s(h) * kernel.profile(h), rho, far_t, &knots, tol)
    } else {
        Quad::default()
    };
    let tail = if u_inf.is_nan() {
        0.0
    } else {
        2.0 * psi(u_inf - u0, p) * 0.5 * kernel.tail_mass(far_t.max(rho)).value
    };
    let total = lap * moment + remainder.value + middle.value + tail;
    Ok(Quad { value: -2.0 * total, error: 2.0 * (remainder.error + middle.error) })
}

/// `Nu(y) = 2 ∫_a^b psi(u(y) - u(x)) nu(x - y) dx` for `y` outside `[a, b]`.
pub fn nonlocal_normal(u: &SmoothFunction1D, kernel: &KernelSpec, y: f64, domain_ab: (f64, f64)) -> Result<Quad> {
    require_1d(kernel)?;
    let (a, b) = domain_ab;
    if y >= a && y <= b {
        return Err(domain(format!("y = {y} lies in the closed domain [{a}, {b}]")));
    }
    let p = kernel.p;
    let uy = u.value(y);
    let (near, len, dir) = if y > b { (y - b, b - a, -1.0) } else { (a - y, b - a, 1.0) };
    if let Some(rho) = kernel.support_radius() {
        if near >= rho {
            return Ok(Quad::default());
        }
    }
    // r = near + t is the distance from y; x = y + dir * r
    let f = |t: f64| {
        let r = near + t;
        psi(uy - u.value(y + dir * r), p) * kernel.profile(r)
    };
    let knots: Vec<f64> = kernel.knots().into_iter().map(|k| k - near).collect();
    // shells resolve the scale `near` of the kernel singularity
    let start = len.min(near.max(len * 1e-3));
    let s = integrate_to_zero(f, start, &knots, Tol::rel(1e-11));
    let rest = if len > start { integrate_split(f, start, len, &knots, Tol::rel(1e-11)) } else { Quad::default() };
    Ok(Quad { value: 2.0 * (s.value + rest.value), error: 2.0 * (s.error + rest.error) })
}

/// Discrete `Nu` of a grid function through the form's pair weights.
pub fn nonlocal_normal_grid(form: &DiscreteForm, u: &GridFunction) -> Result<GridFunction> {
    form.discrete_normal(u)
}

/// `Delta_p u(x) = (p - 1)|u'|^{p-2} u''` in one dimension.
pub fn local_plaplace_1d(u: &SmoothFunction1D, p: f64, x: f64) -> Result<f64> {
    let (_, d1, d2) = u.jet(x);
    if p == 2.0 {
        return Ok(d2);
    }
    if d1 == 0.0 {
        if p < 2.0 {
            return Err(Error::Unsupported(format!("p = {p} < 2 at a critical point x = {x}")));
        }
        return Ok(0.0);
    }
    Ok((p - 1.0) * d1.abs().powf(p - 2.0) * d2)
}

/// `∫_a^b f` with both endpoints treated by shell summation, for endpoint power singularities.
fn endpoint_singular(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    let tol = Tol::rel(1e-13);
    integrate_to_zero(|t| f(a + t), m - a, &[], tol).value + integrate_to_zero(|t| f(b - t), b - m, &[], tol).value
}

/// Householder reflection taking `g/|g|` to `e_1`.
fn frame(g: &[f64]) -> Vec<Vec<f64>> {
    let d = g.len();
    let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut q = vec![vec![0.0; d]; d];
    for (i, row) in q.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    if n == 0.0 {
        return q;
    }
    let mut v: Vec<f64> = g.iter().map(|x| x / n).collect();
    v[0] -= 1.0;
    let vv: f64 = v.iter().map(|x| x * x).sum();
    if vv < 1e-30 {
        return q;
    }
    for i in 0..d {
        for j in 0..d {
            q[i][j] -= 2.0 * v[i] * v[j] / vv;
        }
    }
    q
}

/// `(⨍_{S^{d-1}} |∇u·w|^{p-2} D²u w·w dσ, (K_{d,p}/(p-1)) Delta_p u)` for `d ∈ {2, 3}`.
///
/// The left side is a product rule in coordinates whose polar axis is the gradient.
pub fn spherical_mean_check(d: usize, p: f64, gradient: &[f64], hessian: &[Vec<f64>]) -> Result<(f64, f64)> {
    if !(d == 2 || d == 3) {
        return Err(invalid("spherical mean check supports d = 2 and d = 3"));
    }
    if gradient.len() != d || hessian.len() != d || hessian.iter().any(|r| r.len() != d) {
        return Err(invalid("gradient and hessian must match the dimension"));
    }
    let gn = gradient.iter().map(|x| x * x).sum::<f64>().sqrt();
    if p < 2.0 && gn == 0.0 {
        return Err(Error::Unsupported("zero gradient with p < 2".into()));
    }
    // rhs
    let lap: f64 = (0..d).map(|i| hessian[i][i]).sum();
    let inf: f64 = (0..d).map(|i| (0..d).map(|j| hessian[i][j] * gradient[i] * gradient[j]).sum::<f64>()).sum();
    let delta_p = if p == 2.0 {
        lap
    } else if gn == 0.0 {
        0.0
    } else {
        gn.powf(p - 2.0) * (lap + (p - 2.0) * inf / (gn * gn))
    };
    let rhs = k_dp(d, p)? / (p - 1.0) * delta_p;

    // rotated hessian R = Q H Q^T with Q g = |g| e_1
    let q = frame(gradient);
    let mut r = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            r[i][j] = (0..d).map(|k| (0..d).map(|l| q[i][k] * hessian[k][l] * q[j][l]).sum::<f64>()).sum();
        }
    }
    let weight = |t: f64| if p == 2.0 { 1.0 } else { gn.powf(p - 2.0) * t.abs().powf(p - 2.0) };
    let lhs = match d {
        2 => {
            // w = (t, ±sqrt(1-t^2)), arc length dt / sqrt(1-t^2), total 2 pi
            let f = |t: f64| {
                let s2 = (1.0 - t * t).max(0.0);
                let s = s2.sqrt();
                let quad = |sg: f64| r[0][0] * t * t + 2.0 * r[0][1] * t * sg * s + r[1][1] * s2;
                weight(t) * (quad(1.0) + quad(-1.0)) / s
            };
            (endpoint_singular(&f, -1.0, 0.0) + endpoint_singular(&f, 0.0, 1.0)) / (2.0 * PI)
        }
        _ => {
            // w = (t, s cos th, s sin th), dσ = dt dth, total 4 pi; trapezoid in th is exact here
            let nth = 16;
            let f = |t: f64| {
                let s2 = (1.0 - t * t).max(0.0);
                let s = s2.sqrt();
                let mut acc = 0.0;
                for k in 0..nth {
                    let th = 2.0 * PI * k as f64 / nth as f64;
                    let w = [t, s * th.cos(), s * th.sin()];
                    let mut qf = 0.0;
                    for i in 0..3 {
                        for j in 0..3 {
                            qf += r[i][j] * w[i] * w[j];
                        }
                    }
                    acc += qf;
                }
                weight(t) * acc * 2.0 * PI / nth as f64
            };
            (endpoint_singular(&f, -1.0, 0.0) + endpoint_singular(&f, 0.0, 1.0)) / (4.0 * PI)
        }
    };
    Ok((lhs, rhs))
}

/// `∫_a^b |u'|^p` by adaptive quadrature.
pub fn gradient_p_integral(u: &SmoothFunction1D, p: f64, a: f64, b: f64) -> f64 {
    let bps: Vec<f64> = u.breakpoints();
    integrate_split(|x| u.jet(x).1.abs().powf(p), a, b, &bps, Tol::rel(1e-12)).value
}

/// `∫_a^b |u|^p`.
pub fn lp_integral(f: impl Fn(f64) -> f64, p: f64, a: f64, b: f64) -> f64 {
    integrate(|x| f(x).abs().powf(p), a, b, Tol::rel(1e-12)).value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Family;

    #[test]
    fn jets_match_finite_differences() {
        let fns = [
            SmoothFunction1D::gaussian(0.3, 0.7),
            SmoothFunction1D::Polynomial { coeffs: vec![1.0, -2.0, 0.5, 0.25] },
            SmoothFunction1D::BumpCompact { center: -0.2, radius: 1.3 },
        ];
        let h = 1e-5;
        for f in &fns {
            for x in [-0.9, -0.1, 0.4, 0.8] {
                let (_, d1, d2) = f.jet(x);
                let fd1 = (f.value(x + h) - f.value(x - h)) / (2.0 * h);
                let fd2 = (f.jet(x + h).1 - f.jet(x - h).1) / (2.0 * h);
                assert!((d1 - fd1).abs() < 1e-8 * (1.0 + d1.abs()), "{f:?} x={x}");
                assert!((d2 - fd2).abs() < 1e-8 * (1.0 + d2.abs()), "{f:?} x={x}");
            }
        }
    }

    #[test]
    fn local_plaplace_examples() {
        let g = SmoothFunction1D::gaussian(0.0, 1.0);
        let e1 = (-1f64).exp();
        assert!((local_plaplace_1d(&g, 2.0, 0.0).unwrap() + 2.0).abs() < 1e-15);
        let v = local_plaplace_1d(&g, 4.0, 1.0).unwrap();
        assert!((v - 3.0 * (2.0 * e1).powi(2) * 2.0 * e1).abs() < 1e-14);
        assert!((v - 24.0 * (-3f64).exp()).abs() < 1e-14);
        let lin = SmoothFunction1D::Polynomial { coeffs: vec![1.0, 3.0] };
        assert_eq!(local_plaplace_1d(&lin, 3.0, 0.2).unwrap(), 0.0);
        assert!(local_plaplace_1d(&g, 1.5, 0.0).is_err());
    }

    #[test]
    fn pointwise_gaussian_centre() {
        let g = SmoothFunction1D::gaussian(0.0, 1.0);
        let k = KernelSpec::stable_normalized(1e-3, 1, 2.0).unwrap();
        let l = pointwise_l(&g, &k, 0.0).unwrap().value;
        assert!((l - 2.0).abs() < 0.02, "L = {l}");
    }

    #[test]
    fn pointwise_trivial_cases() {
        let k = KernelSpec::fractional(0.5, 1, 3.0).unwrap();
        let c = SmoothFunction1D::constant(4.0);
        assert_eq!(pointwise_l(&c, &k, 0.3).unwrap().value, 0.0);
        // odd about x = 0.3
        let odd = SmoothFunction1D::Polynomial { coeffs: vec![-0.027, 0.27, -0.9, 1.0] };
        let kt = KernelSpec::new(Family::TruncatedFractional { s: 0.5, r_cut: 1.0 }, 1, 2.0).unwrap();
        assert!(pointwise_l(&odd, &kt, 0.3).unwrap().value.abs() < 1e-12);
        assert!(pointwise_l(&odd, &KernelSpec::fractional(0.5, 1, 2.0).unwrap(), 0.3).is_err());
        let g = SmoothFunction1D::gaussian(0.0, 1.0);
        assert!(pointwise_l(&g, &KernelSpec::fractional(0.5, 1, 1.5).unwrap(), 0.0).is_err());
    }

    #[test]
    fn pointwise_matches_direct_quadrature() {
        // oracle: plain adaptive quadrature of the symmetrized integrand for a mildly singular kernel
        let g = SmoothFunction1D::gaussian(0.1, 0.8);
        for p in [2.0, 3.0, 1.5] {
            let k = KernelSpec::fractional(0.3, 1, p).unwrap();
            let x = 0.4;
            let u0 = g.value(x);
            let s = |h: f64| psi(g.value(x + h) - u0, p) + psi(g.value(x - h) - u0, p);
            let direct = crate::quadrature::integrate_to_zero(|h| s(h) * k.profile(h), 1.0, &[], Tol::rel(1e-10)).value
                + integrate(|h| s(h) * k.profile(h), 1.0, 12.0, Tol::rel(1e-12)).value
                + 2.0 * psi(-u0, p) * 0.5 * k.tail_mass(12.0).value;
            let l = pointwise_l(&g, &k, x).unwrap().value;
            assert!((l + 2.0 * direct).abs() < 1e-6 * l.abs(), "p={p}: {l} vs {}", -2.0 * direct);
        }
    }

    #[test]
    fn normal_derivative_examples() {
        let lin = SmoothFunction1D::Polynomial { coeffs: vec![0.0, 1.0] };
        let k = KernelSpec::indicator(1.0, 1, 2.0).unwrap();
        // 2 ∫_{0.5}^{1} (1.5 - x) dx
        let n = nonlocal_normal(&lin, &k, 1.5, (-1.0, 1.0)).unwrap().value;
        assert!((n - 0.75).abs() < 1e-10, "N = {n}");
        assert_eq!(nonlocal_normal(&lin, &k, 2.5, (-1.0, 1.0)).unwrap().value, 0.0);
        let c = SmoothFunction1D::constant(1.0);
        let kf = KernelSpec::fractional(0.5, 1, 2.0).unwrap();
        assert_eq!(nonlocal_normal(&c, &kf, 1.2, (-1.0, 1.0)).unwrap().value, 0.0);
        assert!(nonlocal_normal(&lin, &kf, 0.5, (-1.0, 1.0)).is_err());
        assert!(nonlocal_normal(&lin, &kf, 1.0, (-1.0, 1.0)).is_err());
    }

    #[test]
    fn normal_derivative_singular_kernel() {
        // N of u = x at y = 1 + eta for nu = r^{-2}, p = 2: 2 ∫_{eta}^{2+eta} r * r^{-2} dr = 2 ln((2+eta)/eta)
        let lin = SmoothFunction1D::Polynomial { coeffs: vec![0.0, 1.0] };
        let k = KernelSpec::fractional(0.5, 1, 2.0).unwrap();
        for eta in [1e-4, 0.01, 0.5] {
            let n = nonlocal_normal(&lin, &k, 1.0 + eta, (-1.0, 1.0)).unwrap().value;
            let exact = 2.0 * ((2.0 + eta) / eta).ln();
            assert!((n - exact).abs() < 1e-9 * exact, "eta={eta}: {n} vs {exact}");
        }
    }

    #[test]
    fn normal_derivative_vanishes_along_family() {
        let g = SmoothFunction1D::gaussian(0.0, 1.0);
        let mut last = f64::INFINITY;
        for e in [0.3, 0.1, 0.01] {
            let k = KernelSpec::stable_normalized(e, 1, 2.0).unwrap();
            let n = nonlocal_normal(&g, &k, 1.5, (-1.0, 1.0)).unwrap().value.abs();
            assert!(n < last);
            last = n;
        }
    }

    #[test]
    fn spherical_mean_examples() {
        let (l, r) = spherical_mean_check(2, 2.0, &[0.3, -0.7], &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((l - 1.0).abs() < 1e-12 && (r - 1.0).abs() < 1e-12);
        let (l, r) = spherical_mean_check(2, 4.0, &[1.0, 0.0], &[vec![2.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!((r - 0.75).abs() < 1e-12);
        assert!((l - 0.75).abs() < 1e-6, "lhs = {l}");
    }

    #[test]
    fn spherical_mean_general() {
        let h2 = vec![vec![1.3, -0.4], vec![-0.4, 0.2]];
        let h3 = vec![vec![1.0, 0.3, -0.2], vec![0.3, -0.5, 0.7], vec![-0.2, 0.7, 0.4]];
        for p in [1.5, 2.0, 3.0, 4.0] {
            let (l, r) = spherical_mean_check(2, p, &[0.6, 0.8], &h2).unwrap();
            assert!((l - r).abs() < 1e-7 * (1.0 + r.abs()), "d=2 p={p}: {l} vs {r}");
            let (l, r) = spherical_mean_check(3, p, &[0.2, -1.0, 0.5], &h3).unwrap();
            assert!((l - r).abs() < 1e-7 * (1.0 + r.abs()), "d=3 p={p}: {l} vs {r}");
        }
        assert!(spherical_mean_check(3, 1.5, &[0.0, 0.0, 0.0], &h3).is_err());
    }

    #[test]
    fn spherical_mean_rotation_invariance() {
        let g = [0.6, 0.8];
        let h = [[1.3, -0.4], [-0.4, 0.2]];
        let th: f64 = 0.7;
        let q = [[th.cos(), -th.sin()], [th.sin(), th.cos()]];
        let gr: Vec<f64> = (0..2).map(|i| (0..2).map(|j| q[i][j] * g[j]).sum()).collect();
        let hr: Vec<Vec<f64>> = (0..2)
            .map(|i| (0..2).map(|j| (0..2).map(|k| (0..2).map(|l| q[i][k] * h[k][l] * q[j][l]).sum::<f64>()).sum()).collect())
            .collect();
        let hv: Vec<Vec<f64>> = h.iter().map(|r| r.to_vec()).collect();
        let a = spherical_mean_check(2, 3.0, &g, &hv).unwrap().0;
        let b = spherical_mean_check(2, 3.0, &gr, &hr).unwrap().0;
        assert!((a - b).abs() < 1e-10);
    }
}
