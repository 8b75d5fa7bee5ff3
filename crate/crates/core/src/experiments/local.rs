//! Finite-difference solver for the local 1D problem `-(|u'|^{p-2} u')' = f`, used as an
//! independent reference for the nonlocal solutions.

use crate::error::{invalid, Error, Result};
use crate::forms::psi;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalBc {
    /// `u(a)`, `u(b)`.
    Dirichlet(f64, f64),
    /// Outward conormal fluxes `|u'|^{p-2} u' · n` at `a` and at `b`.
    Neumann(f64, f64),
}

#[derive(Debug, Clone)]
pub struct LocalSolution {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub residual: f64,
}

impl LocalSolution {
    /// Piecewise-linear interpolation.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let h = (self.x[n - 1] - self.x[0]) / (n - 1) as f64;
        let k = (((t - self.x[0]) / h).floor().max(0.0) as usize).min(n - 2);
        let w = (t - self.x[k]) / h;
        (1.0 - w) * self.u[k] + w * self.u[k + 1]
    }
}

/// Smoothed `|t|^p / p`: value, first and second derivative.
fn phi(t: f64, p: f64, delta: f64) -> (f64, f64, f64) {
    if delta == 0.0 {
        let a = t.abs();
        let c = if a > 0.0 { (p - 1.0) * a.powf(p - 2.0) } else if p == 2.0 { 1.0 } else { 0.0 };
        return (a.powf(p) / p, psi(t, p), c);
    }
    let s = t * t + delta * delta;
    (
        (s.powf(0.5 * p) - delta.powf(p)) / p,
        t * s.powf(0.5 * p - 1.0),
        s.powf(0.5 * p - 2.0) * ((p - 1.0) * t * t + delta * delta),
    )
}

/// Solve a symmetric tridiagonal system in place (`diag`, `off` of length n-1).
fn thomas(diag: &[f64], off: &[f64], rhs: &mut [f64]) -> Result<()> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = diag[0];
    if d <= 0.0 {
        return Err(Error::Unsupported("singular local Hessian".into()));
    }
    rhs[0] /= d;
    for i in 1..n {
        c[i - 1] = off[i - 1] / d;
        d = diag[i] - off[i - 1] * c[i - 1];
        if d <= 0.0 {
            return Err(Error::Unsupported("singular local Hessian".into()));
        }
        rhs[i] = (rhs[i] - off[i - 1] * rhs[i - 1]) / d;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Ok(())
}

struct Fd<'a> {
    p: f64,
    h: f64,
    f: &'a [f64],
    w: Vec<f64>,
    bc: LocalBc,
}

impl Fd<'_> {
    fn energy(&self, u: &[f64], delta: f64) -> f64 {
        let mut j: f64 = u.windows(2).map(|s| self.h * phi((s[1] - s[0]) / self.h, self.p, delta).0).sum();
        j -= u.iter().zip(self.f).zip(&self.w).map(|((u, f), w)| u * f * w).sum::<f64>();
        if let LocalBc::Neumann(na, nb) = self.bc {
            j -= na * u[0] + nb * u[u.len() - 1];
        }
        j
    }

    fn gradient(&self, u: &[f64], delta: f64) -> Vec<f64> {
        let n = u.len();
        let mut g: Vec<f64> = (0..n).map(|k| -self.f[k] * self.w[k]).collect();
        for k in 0..n - 1 {
            let d = phi((u[k + 1] - u[k]) / self.h, self.p, delta).1;
            g[k] -= d;
            g[k + 1] += d;
        }
        if let LocalBc::Neumann(na, nb) = self.bc {
            g[0] -= na;
            g[n - 1] -= nb;
        }
        g
    }
}

/// Damped Newton on the FD energy with `m` intervals.
pub fn solve_local(p: f64, a: f64, b: f64, m: usize, f: &dyn Fn(f64) -> f64, bc: LocalBc) -> Result<LocalSolution> {
    if m < 4 || !(a < b) || !(p > 1.0) {
        return Err(invalid("local solve needs m ≥ 4, a < b and p > 1"));
    }
    let h = (b - a) / m as f64;
    let x: Vec<f64> = (0..=m).map(|k| a + k as f64 * h).collect();
    let fv: Vec<f64> = x.iter().map(|&t| f(t)).collect();
    let mut w = vec![h; m + 1];
    w[0] = 0.5 * h;
    w[m] = 0.5 * h;
    let fd = Fd { p, h, f: &fv, w, bc };
    let mut u = match bc {
        LocalBc::Dirichlet(ga, gb) => x.iter().map(|&t| ga + (gb - ga) * (t - a) / (b - a)).collect(),
        LocalBc::Neumann(na, nb) => {
            let total: f64 = fv.iter().zip(&fd.w).map(|(f, w)| f * w).sum::<f64>() + na + nb;
            let scale: f64 = fv.iter().zip(&fd.w).map(|(f, w)| (f * w).abs()).sum::<f64>() + na.abs() + nb.abs();
            if total.abs() > 1e-10 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::IncompatibleData { defect: total, tol: 1e-10 * scale });
            }
            vec![0.0; m + 1]
        }
    };
    // unknowns: interior nodes for Dirichlet; all but node 0 for Neumann (gauge)
    let free: Vec<usize> = match bc {
        LocalBc::Dirichlet(..) => (1..m).collect(),
        LocalBc::Neumann(..) => (1..=m).collect(),
    };
    let amp = fv.iter().map(|v| v.abs()).fold(0.0, f64::max).powf(1.0 / (p - 1.0)).max(match bc {
        LocalBc::Dirichlet(ga, gb) => ga.abs().max(gb.abs()),
        LocalBc::Neumann(na, nb) => na.abs().max(nb.abs()).powf(1.0 / (p - 1.0)),
    });
    let amp = if amp > 0.0 { amp } else { 1.0 };
    let stages: Vec<f64> = if p < 2.0 { vec![1e-2 * amp, 1e-4 * amp, 1e-6 * amp, 1e-8 * amp] } else { vec![0.0] };
    let mut lambda = if p > 2.0 { (p - 1.0) * amp.powf(p - 2.0) } else { 0.0 };
    for &delta in &stages {
        for _ in 0..200 {
            let g = fd.gradient(&u, delta);
            let gmax = free.iter().map(|&k| (g[k] / fd.w[k]).abs()).fold(0.0, f64::max);
            if gmax <= 1e-12 * (1.0 + amp) {
                break;
            }
            let nf = free.len();
            let mut diag = vec![0.0; nf];
            let mut off = vec![0.0; nf.saturating_sub(1)];
            let first = free[0];
            for k in 0..m {
                let c = phi((u[k + 1] - u[k]) / h, p, delta).2 / h + lambda / h;
                let (i, j) = (k as isize - first as isize, k as isize + 1 - first as isize);
                if i >= 0 && (i as usize) < nf {
                    diag[i as usize] += c;
                }
                if j >= 0 && (j as usize) < nf {
                    diag[j as usize] += c;
                }
                if i >= 0 && j >= 0 && (j as usize) < nf {
                    off[i as usize] -= c;
                }
            }
            let mut step: Vec<f64> = free.iter().map(|&k| -g[k]).collect();
            thomas(&diag, &off, &mut step)?;
            let j0 = fd.energy(&u, delta);
            let slope: f64 = free.iter().zip(&step).map(|(&k, s)| g[k] * s).sum();
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let mut trial = u.clone();
                for (&k, s) in free.iter().zip(&step) {
                    trial[k] += alpha * s;
                }
                let jt = fd.energy(&trial, delta);
                if jt <= j0 + 1e-4 * alpha * slope || (jt - j0).abs() <= 1e-15 * j0.abs() {
                    u = trial;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if p > 2.0 {
                lambda = if alpha == 1.0 { lambda * 0.2 } else { lambda * 5.0 };
            }
            if !accepted {
                break;
            }
        }
    }
    if let LocalBc::Neumann(..) = bc {
        let mean = u.iter().zip(&fd.w).map(|(u, w)| u * w).sum::<f64>() / (b - a);
        u.iter_mut().for_each(|v| *v -= mean);
    }
    let g = fd.gradient(&u, 0.0);
    let residual = free.iter().map(|&k| (g[k] / fd.w[k]).abs()).fold(0.0, f64::max);
    Ok(LocalSolution { x, u, residual })
}

/// Closed-form solution of `-Delta_p u = c` on `(a, b)` with `u = g0` at both ends.
pub fn constant_rhs_solution(p: f64, c: f64, a: f64, b: f64, g0: f64) -> impl Fn(f64) -> f64 {
    let m = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let e = p / (p - 1.0);
    move |x: f64| {
        let amp = c.abs().powf(1.0 / (p - 1.0)) * c.signum();
        g0 + amp / e * (r.powf(e) - (x - m).abs().powf(e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirichlet_matches_closed_forms() {
        let exact = constant_rhs_solution(2.0, 2.0, -1.0, 1.0, 0.0);
        assert!((exact(0.5) - 0.75).abs() < 1e-15);
        let s = solve_local(2.0, -1.0, 1.0, 64, &|_| 2.0, LocalBc::Dirichlet(0.0, 0.0)).unwrap();
        for (x, u) in s.x.iter().zip(&s.u) {
            assert!((u - (1.0 - x * x)).abs() < 1e-10);
        }
        for p in [4.0, 3.0, 1.5] {
            let c = 1.7;
            let exact = constant_rhs_solution(p, c, -1.0, 1.0, 0.0);
            let s = solve_local(p, -1.0, 1.0, 2048, &|_| c, LocalBc::Dirichlet(0.0, 0.0)).unwrap();
            let err = s.x.iter().zip(&s.u).map(|(x, u)| (u - exact(*x)).abs()).fold(0.0, f64::max);
            assert!(err < 2e-3 * exact(0.0), "p={p}: {err}");
        }
        let e4 = constant_rhs_solution(4.0, 8.0, -1.0, 1.0, 0.0);
        assert!((e4(0.0) - 0.75 * 2.0).abs() < 1e-14);
    }

    #[test]
    fn neumann_mean_zero_and_refusal() {
        // -u'' = 1, u'(1) = 1/2 = -u'(-1) ... fluxes outward: +1 at both ends balance -2
        let s = solve_local(2.0, -1.0, 1.0, 128, &|_| -1.0, LocalBc::Neumann(1.0, 1.0)).unwrap();
        // exact: u = x^2/2 - 1/6
        for (x, u) in s.x.iter().zip(&s.u) {
            assert!((u - (x * x / 2.0 - 1.0 / 6.0)).abs() < 1e-4, "{x}: {u}");
        }
        assert!(solve_local(2.0, -1.0, 1.0, 32, &|_| 1.0, LocalBc::Neumann(0.0, 0.0)).is_err());
    }

    #[test]
    fn interpolation() {
        let s = LocalSolution { x: vec![0.0, 1.0, 2.0], u: vec![0.0, 2.0, 0.0], residual: 0.0 };
        assert_eq!(s.eval(0.5), 1.0);
        assert_eq!(s.eval(1.5), 1.0);
        assert_eq!(s.eval(2.0), 0.0);
    }
}
