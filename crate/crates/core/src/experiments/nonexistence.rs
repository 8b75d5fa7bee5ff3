//! Neumann data outside the weighted trace space, on `Omega = (-1, 1)` with `nu = |h|^{-1-sp}`.
//!
//! `g_gamma(x) = sgn(x) (|x| - 1)^gamma` for `|x| > 1`. At critical exponents the pairing
//! `∫ g_gamma g_beta nu~` diverges logarithmically while `‖g_beta‖_W` stays finite, so no
//! weak solution can exist for the datum `g_gamma nu~`.

use serde::Serialize;

use super::ConvergenceRow;
use crate::error::{invalid, Result};
use crate::quadrature::{integrate, integrate_to_infinity, integrate_to_zero, Tol};

/// Number of dyadic shells for the pairing.
pub const PAIRING_SHELLS: usize = 20;
/// Number of dyadic shells on each side of `t = 1` for the norms.
pub const NORM_SHELLS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Critical {
    /// `gamma + beta = -1`: divergence at the boundary of `Omega`.
    Boundary,
    /// `gamma + beta = sp`: divergence at infinity.
    Infinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonexistenceParams {
    pub s: f64,
    pub p: f64,
    pub gamma: f64,
    pub beta: f64,
}

impl NonexistenceParams {
    fn sp(&self) -> f64 {
        self.s * self.p
    }

    /// Which end carries the divergence; errors if `gamma + beta` is not critical.
    pub fn critical(&self) -> Result<Critical> {
        let sum = self.gamma + self.beta;
        if (sum + 1.0).abs() < 1e-12 {
            Ok(Critical::Boundary)
        } else if (sum - self.sp()).abs() < 1e-12 {
            Ok(Critical::Infinity)
        } else {
            Err(invalid(format!("gamma + beta = {sum} must be -1 or sp = {}", self.sp())))
        }
    }

    /// All preconditions of the construction.
    pub fn validate(&self) -> Result<Critical> {
        let (s, p) = (self.s, self.p);
        if !(s > 0.0 && s < 1.0) || !(p > 1.0) {
            return Err(invalid("need s in (0,1) and p > 1"));
        }
        let pc = p / (p - 1.0);
        let sp = self.sp();
        let g = self.gamma;
        if !((g > -1.0 && g <= -1.0 / pc) || (g >= sp / pc && g < sp)) {
            return Err(invalid(format!("gamma = {g} must lie in (-1, {}] or [{}, {sp})", -1.0 / pc, sp / pc)));
        }
        let lo = (sp - 1.0) / p;
        if !(self.beta > lo && self.beta < s) {
            return Err(invalid(format!("beta = {} must lie in ({lo}, {s})", self.beta)));
        }
        self.critical()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShellRow {
    pub k: usize,
    pub radius: f64,
    pub partial_sum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogFit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
}

impl LogFit {
    pub fn eval(&self, r: f64) -> f64 {
        self.intercept + self.slope * r.ln()
    }
}

/// Least squares `y ≈ a + b log r`.
pub fn fit_log(r: &[f64], y: &[f64]) -> LogFit {
    let n = r.len() as f64;
    let x: Vec<f64> = r.iter().map(|v| v.ln()).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    LogFit { intercept: my - slope * mx, slope, r_squared }
}

/// Partial sums of a nonnegative integral over `(0, ∞)` on dyadic shells around `t = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellNorm {
    pub partial: Vec<f64>,
    pub value: f64,
    /// Contribution of the last pair of shells.
    pub cauchy_tail: f64,
}

impl ShellNorm {
    pub fn converged(&self, tol: f64) -> bool {
        self.cauchy_tail.is_finite() && self.cauchy_tail < tol
    }
}

fn shell_norm(w: impl Fn(f64) -> f64) -> ShellNorm {
    let tol = Tol::rel(1e-12);
    let mut partial = Vec::with_capacity(NORM_SHELLS);
    let mut acc = 0.0;
    for k in 1..=NORM_SHELLS {
        let near = 0.5f64.powi(k as i32);
        let far = 2.0f64.powi(k as i32);
        acc += integrate(&w, near, 2.0 * near, tol).value + integrate(&w, 0.5 * far, far, tol).value;
        partial.push(acc);
    }
    let cauchy_tail = acc - partial[NORM_SHELLS - 2];
    ShellNorm { partial, value: acc, cauchy_tail }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonexistenceReport {
    pub params: NonexistenceParams,
    pub critical: Critical,
    /// Pairing over `Omega^c` cut at scale `R_k = 2^k`.
    pub pairing: Vec<ShellRow>,
    pub fit: LogFit,
    /// Shell sums of `‖g_beta‖_W^p`.
    pub w_norm_p: ShellNorm,
    /// `‖g_beta‖_W`.
    pub norm_g_beta: f64,
    /// Shell sums of `∫ |g_gamma|^{p'} nu~`; divergent when `g_gamma nu~` leaves the trace space.
    pub dual_norm: ShellNorm,
}

impl NonexistenceReport {
    pub fn rows(&self) -> Vec<ConvergenceRow> {
        self.pairing
            .iter()
            .map(|r| ConvergenceRow::new(1.0 / r.radius, r.partial_sum, self.fit.eval(r.radius)))
            .collect()
    }
}

/// Runs the construction after checking every precondition.
pub fn nonexistence_demo(params: NonexistenceParams) -> Result<NonexistenceReport> {
    params.validate()?;
    shell_report(params)
}

/// The shell computation without the range checks on `gamma` and `beta`; only criticality is required.
pub fn shell_report(params: NonexistenceParams) -> Result<NonexistenceReport> {
    let critical = params.critical()?;
    let NonexistenceParams { s, p, gamma, beta } = params;
    if !(s > 0.0) || !(p > 1.0) {
        return Err(invalid("need s > 0 and p > 1"));
    }
    let sp = s * p;
    let e = gamma + beta;
    // both half-lines, t = |x| - 1
    let pair = |t: f64| 2.0 * t.powf(e) * (2.0 + t).powf(-1.0 - sp);
    let tol = Tol::rel(1e-12);
    let mut pairing = Vec::with_capacity(PAIRING_SHELLS);
    let mut acc = match critical {
        Critical::Boundary => integrate_to_infinity(pair, 1.0, &[], tol).value,
        Critical::Infinity => integrate_to_zero(pair, 1.0, &[], tol).value,
    };
    for k in 1..=PAIRING_SHELLS {
        let (lo, hi) = match critical {
            Critical::Boundary => (0.5f64.powi(k as i32), 0.5f64.powi(k as i32 - 1)),
            Critical::Infinity => (2.0f64.powi(k as i32 - 1), 2.0f64.powi(k as i32)),
        };
        acc += integrate(pair, lo, hi, tol).value;
        pairing.push(ShellRow { k, radius: 2.0f64.powi(k as i32), partial_sum: acc });
    }
    let radii: Vec<f64> = pairing.iter().map(|r| r.radius).collect();
    let sums: Vec<f64> = pairing.iter().map(|r| r.partial_sum).collect();
    let fit = fit_log(&radii, &sums);

    // x > 1 sees Omega through ∫_{-1}^{1} |x - y|^{-1-sp} dy = (t^{-sp} - (t + 2)^{-sp}) / sp
    let w = |t: f64| 4.0 * t.powf(p * beta) * (t.powf(-sp) - (t + 2.0).powf(-sp)) / sp;
    let w_norm_p = shell_norm(w);
    let pc = p / (p - 1.0);
    let dual_norm = shell_norm(|t: f64| 2.0 * t.powf(pc * gamma) * (2.0 + t).powf(-1.0 - sp));
    Ok(NonexistenceReport {
        params,
        critical,
        pairing,
        fit,
        norm_g_beta: w_norm_p.value.powf(1.0 / p),
        w_norm_p,
        dual_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preconditions() {
        let ok = NonexistenceParams { s: 0.5, p: 2.0, gamma: 0.75, beta: 0.25 };
        assert_eq!(ok.validate().unwrap(), Critical::Infinity);
        let beta_out = NonexistenceParams { s: 0.5, p: 2.0, gamma: -0.75, beta: -0.25 };
        assert!(beta_out.validate().is_err());
        assert_eq!(beta_out.critical().unwrap(), Critical::Boundary);
        assert!(NonexistenceParams { s: 0.5, p: 2.0, gamma: 0.7, beta: 0.2 }.validate().is_err());
        // sp < 1 admits the boundary case
        let b = NonexistenceParams { s: 0.2, p: 2.0, gamma: -0.9, beta: -0.1 };
        assert_eq!(b.validate().unwrap(), Critical::Boundary);
    }

    #[test]
    fn log_fit_of_exact_log() {
        let r: Vec<f64> = (1..10).map(|k| 2f64.powi(k)).collect();
        let y: Vec<f64> = r.iter().map(|v| 1.5 + 0.25 * v.ln()).collect();
        let f = fit_log(&r, &y);
        assert!((f.slope - 0.25).abs() < 1e-12 && (f.intercept - 1.5).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn valid_critical_pair() {
        let rep = nonexistence_demo(NonexistenceParams { s: 0.5, p: 2.0, gamma: 0.75, beta: 0.25 }).unwrap();
        assert!(rep.fit.r_squared >= 0.99);
        // 2 t^{sp} (2 + t)^{-1-sp} ≈ 2 / t at infinity; early shells are pre-asymptotic
        assert!((rep.fit.slope - 2.0).abs() < 0.15, "{:?}", rep.fit);
        assert!(rep.w_norm_p.converged(1e-3));
        assert!(!rep.dual_norm.converged(1e-3));
    }

    #[test]
    fn boundary_case_with_small_sp() {
        let rep = nonexistence_demo(NonexistenceParams { s: 0.2, p: 2.0, gamma: -0.9, beta: -0.1 }).unwrap();
        assert!(rep.fit.r_squared >= 0.99);
        // t^{-1} (2 + t)^{-1-sp} near 0: slope 2 · 2^{-1-sp}
        assert!((rep.fit.slope - 2.0 * 2f64.powf(-1.4)).abs() < 0.05, "{:?}", rep.fit);
        assert!(rep.w_norm_p.converged(1e-3));
        assert!(!rep.dual_norm.converged(1e-3));
    }

    #[test]
    fn beta_below_range_has_divergent_norm() {
        let rep = shell_report(NonexistenceParams { s: 0.5, p: 2.0, gamma: -0.75, beta: -0.25 }).unwrap();
        assert!(rep.fit.r_squared >= 0.99);
        assert!(!rep.w_norm_p.converged(1e-3));
    }
}
