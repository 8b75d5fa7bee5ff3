//! Symmetric radial p-Lévy kernels, approximation families and the weights used for Neumann data.

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};
use crate::quadrature::{integrate_split, integrate_to_infinity, integrate_to_zero, ShellSum, Tol};
use crate::special::{c_dps, sphere_measure};

/// Kernel family with its parameters. The radial profile is `amplitude * profile(r)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `r^{-d-sp}`.
    Fractional { s: f64 },
    /// `r^{-d-sp}` on `r <= r_cut`.
    TruncatedFractional { s: f64, r_cut: f64 },
    /// `1` on `r <= delta`.
    Indicator { delta: f64 },
    /// `p eps (1-eps) / |S^{d-1}| * r^{-d-(1-eps)p}`, unit p-Lévy mass.
    StableNormalized { epsilon: f64 },
    /// `(d+beta) / (|S^{d-1}| eps^{d+beta}) * r^{beta-p}` on `r <= eps`.
    PowerTruncated { epsilon: f64, beta: f64 },
    /// Three-branch rescaling of a base kernel that preserves the p-Lévy mass.
    Rescaled { base: Box<KernelSpec>, epsilon: f64 },
    /// `prefactor * r^{-d-sp}`.
    ScaledFractional { s: f64, prefactor: f64 },
}

/// A radial kernel on `R^d` tied to an exponent `p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelSpec {
    pub family: Family,
    pub d: usize,
    pub p: f64,
    pub amplitude: f64,
}

impl KernelSpec {
    pub fn new(family: Family, d: usize, p: f64) -> Result<Self> {
        let k = KernelSpec { family, d, p, amplitude: 1.0 };
        k.validate()?;
        Ok(k)
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Result<Self> {
        self.amplitude = amplitude;
        self.validate()?;
        Ok(self)
    }

    pub fn fractional(s: f64, d: usize, p: f64) -> Result<Self> {
        Self::new(Family::Fractional { s }, d, p)
    }

    pub fn indicator(delta: f64, d: usize, p: f64) -> Result<Self> {
        Self::new(Family::Indicator { delta }, d, p)
    }

    /// Indicator of the unit ball scaled to unit p-Lévy mass.
    pub fn normalized_indicator(d: usize, p: f64) -> Result<Self> {
        Self::indicator(1.0, d, p)?.with_amplitude((d as f64 + p) / sphere_measure(d))
    }

    pub fn stable_normalized(epsilon: f64, d: usize, p: f64) -> Result<Self> {
        Self::new(Family::StableNormalized { epsilon }, d, p)
    }

    pub fn rescaled(base: KernelSpec, epsilon: f64) -> Result<Self> {
        let (d, p) = (base.d, base.p);
        Self::new(Family::Rescaled { base: Box::new(base), epsilon }, d, p)
    }

    /// Structural checks. Integrability is a separate numerical question, see [`KernelSpec::plevy_mass`].
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(invalid("kernel dimension must be at least 1"));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(invalid(format!("p must exceed 1, got {}", self.p)));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(invalid("amplitude must be finite and non-negative"));
        }
        let unit_eps = |e: f64| {
            if e > 0.0 && e < 1.0 {
                Ok(())
            } else {
                Err(invalid(format!("epsilon must lie in (0,1), got {e}")))
            }
        };
        match &self.family {
            Family::Fractional { s } => finite(*s, "s"),
            Family::TruncatedFractional { s, r_cut } => {
                finite(*s, "s")?;
                positive(*r_cut, "r_cut")
            }
            Family::Indicator { delta } => {
                if *delta >= 0.0 && delta.is_finite() {
                    Ok(())
                } else {
                    Err(invalid("delta must be finite and non-negative"))
                }
            }
            Family::StableNormalized { epsilon } => unit_eps(*epsilon),
            Family::PowerTruncated { epsilon, beta } => {
                unit_eps(*epsilon)?;
                if *beta > -(self.d as f64) {
                    Ok(())
                } else {
                    Err(invalid("beta must exceed -d"))
                }
            }
            Family::Rescaled { base, epsilon } => {
                unit_eps(*epsilon)?;
                base.validate()?;
                if base.d != self.d || base.p != self.p {
                    return Err(invalid("rescaled base must share d and p"));
                }
                Ok(())
            }
            Family::ScaledFractional { s, prefactor } => {
                finite(*s, "s")?;
                if *prefactor >= 0.0 && prefactor.is_finite() {
                    Ok(())
                } else {
                    Err(invalid("prefactor must be finite and non-negative"))
                }
            }
        }
    }

    /// `nu(r)`, the radial profile.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(domain(format!("kernel profile undefined at r = {r}")));
        }
        Ok(self.profile(r))
    }

    /// Unchecked profile for `r > 0`.
    pub fn profile(&self, r: f64) -> f64 {
        let d = self.d as f64;
        let p = self.p;
        let raw = match &self.family {
            Family::Fractional { s } => r.powf(-d - s * p),
            Family::TruncatedFractional { s, r_cut } => {
                if r <= *r_cut {
                    r.powf(-d - s * p)
                } else {
                    0.0
                }
            }
            Family::Indicator { delta } => {
                if r <= *delta {
                    1.0
                } else {
                    0.0
                }
            }
            Family::StableNormalized { epsilon: e } => {
                p * e * (1.0 - e) / sphere_measure(self.d) * r.powf(-d - (1.0 - e) * p)
            }
            Family::PowerTruncated { epsilon: e, beta } => {
                if r <= *e {
                    (d + beta) / (sphere_measure(self.d) * e.powf(d + beta)) * r.powf(beta - p)
                } else {
                    0.0
                }
            }
            Family::Rescaled { base, epsilon: e } => {
                let b = base.profile(r / e);
                if r <= *e {
                    e.powf(-d - p) * b
                } else if r <= 1.0 {
                    e.powf(-d) * r.powf(-p) * b
                } else {
                    e.powf(-d) * b
                }
            }
            Family::ScaledFractional { s, prefactor } => prefactor * r.powf(-d - s * p),
        };
        self.amplitude * raw
    }

    /// Radius of the support ball, `None` for full support.
    pub fn support_radius(&self) -> Option<f64> {
        match &self.family {
            Family::TruncatedFractional { r_cut, .. } => Some(*r_cut),
            Family::Indicator { delta } => Some(*delta),
            Family::PowerTruncated { epsilon, .. } => Some(*epsilon),
            Family::Rescaled { base, epsilon } => base.support_radius().map(|r| r * epsilon),
            _ => None,
        }
        .or(if self.amplitude == 0.0 { Some(0.0) } else { None })
    }

    /// Radii where the profile has jumps or kinks.
    pub fn knots(&self) -> Vec<f64> {
        match &self.family {
            Family::TruncatedFractional { r_cut, .. } => vec![*r_cut],
            Family::Indicator { delta } => vec![*delta],
            Family::PowerTruncated { epsilon, .. } => vec![*epsilon],
            Family::Rescaled { base, epsilon } => {
                let mut k: Vec<f64> = base.knots().into_iter().map(|r| r * epsilon).collect();
                k.extend([*epsilon, 1.0]);
                k
            }
            _ => vec![],
        }
    }

    /// Whether the profile is nonincreasing in `r`.
    pub fn is_unimodal(&self) -> bool {
        match &self.family {
            Family::Fractional { s }
            | Family::TruncatedFractional { s, .. }
            | Family::ScaledFractional { s, .. } => -(self.d as f64) - s * self.p <= 0.0,
            Family::Indicator { .. } | Family::StableNormalized { .. } => true,
            Family::PowerTruncated { beta, .. } => *beta <= self.p,
            Family::Rescaled { base, .. } => base.is_unimodal(),
        }
    }

    /// `|S^{d-1}| ∫_0^{r0} r^{d-1} w(r) nu(r) dr`.
    pub fn radial_to_zero<W: Fn(f64) -> f64>(&self, w: W, r0: f64) -> ShellSum {
        let sm = sphere_measure(self.d);
        let dm1 = self.d as i32 - 1;
        let mut s = integrate_to_zero(|r| r.powi(dm1) * w(r) * self.profile(r), r0, &self.knots(), Tol::rel(1e-13));
        s.value *= sm;
        s.error *= sm;
        s
    }

    /// `|S^{d-1}| ∫_{r0}^∞ r^{d-1} w(r) nu(r) dr`.
    pub fn radial_to_infinity<W: Fn(f64) -> f64>(&self, w: W, r0: f64) -> ShellSum {
        let sm = sphere_measure(self.d);
        let dm1 = self.d as i32 - 1;
        let mut s = integrate_to_infinity(|r| r.powi(dm1) * w(r) * self.profile(r), r0, &self.knots(), Tol::rel(1e-13));
        s.value *= sm;
        s.error *= sm;
        s
    }

    /// `∫_{|h| <= rho} |h|^p nu(h) dh`.
    pub fn near_moment(&self, rho: f64) -> ShellSum {
        let p = self.p;
        self.radial_to_zero(|r| r.powf(p), rho)
    }

    /// `∫_{|h| > delta} nu(h) dh`.
    pub fn tail_mass(&self, delta: f64) -> ShellSum {
        self.radial_to_infinity(|_| 1.0, delta)
    }

    /// Near mass, tail mass beyond 1, and the total `∫ (1 ∧ |h|^p) nu`.
    pub fn plevy_mass(&self) -> MassReport {
        let near = self.near_moment(1.0);
        let tail = self.tail_mass(1.0);
        let divergent = near.divergent || tail.divergent;
        MassReport {
            near_mass: near.value,
            tail_mass_one: tail.value,
            total_plevy_mass: if divergent { f64::INFINITY } else { near.value + tail.value },
            near_divergent: near.divergent,
            tail_divergent: tail.divergent,
            divergent,
        }
    }
}

fn finite(x: f64, name: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite")))
    }
}

fn positive(x: f64, name: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive")))
    }
}

/// Masses of a kernel. `total_plevy_mass = near_mass + tail_mass_one` unless divergent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassReport {
    pub near_mass: f64,
    pub tail_mass_one: f64,
    pub total_plevy_mass: f64,
    pub near_divergent: bool,
    pub tail_divergent: bool,
    pub divergent: bool,
}

/// p-Lévy approximation families `eps -> nu_eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ApproxFamily {
    StableNormalized,
    /// Rescaling of the normalized unit-ball indicator.
    RescaledIndicator,
    PowerTruncated { beta: f64 },
    /// `(C_{d,p,s}/2) |h|^{-d-sp}` with `s = 1 - eps`.
    FractionalNormalized,
}

impl ApproxFamily {
    pub fn member(&self, d: usize, p: f64, eps: f64) -> Result<KernelSpec> {
        match self {
            ApproxFamily::StableNormalized => KernelSpec::stable_normalized(eps, d, p),
            ApproxFamily::RescaledIndicator => KernelSpec::rescaled(KernelSpec::normalized_indicator(d, p)?, eps),
            ApproxFamily::PowerTruncated { beta } => {
                KernelSpec::new(Family::PowerTruncated { epsilon: eps, beta: *beta }, d, p)
            }
            ApproxFamily::FractionalNormalized => {
                let s = 1.0 - eps;
                let c = c_dps(d, p, s)?;
                KernelSpec::new(Family::ScaledFractional { s, prefactor: c / 2.0 }, d, p)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcentrationRow {
    pub epsilon: f64,
    pub total_plevy_mass: f64,
    pub near_mass: f64,
    pub tail_mass_delta: f64,
    pub divergent: bool,
}

/// Masses and tails `∫_{|h|>delta} nu_eps` along a family, rows in descending `eps`.
pub fn concentration_report<F>(family: F, eps_list: &[f64], delta: f64) -> Result<Vec<ConcentrationRow>>
where
    F: Fn(f64) -> Result<KernelSpec>,
{
    if !(delta > 0.0) {
        return Err(invalid("delta must be positive"));
    }
    let mut eps: Vec<f64> = eps_list.to_vec();
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.into_iter()
        .map(|e| {
            let k = family(e)?;
            let m = k.plevy_mass();
            let t = k.tail_mass(delta);
            Ok(ConcentrationRow {
                epsilon: e,
                total_plevy_mass: m.total_plevy_mass,
                near_mass: m.near_mass,
                tail_mass_delta: t.value,
                divergent: m.divergent || t.divergent,
            })
        })
        .collect()
}

/// Weights attached to a set `B` for the Neumann data spaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    /// `∫_B (1 ∧ nu(x-y)) dy`.
    Tilde,
    /// `ess inf_{y in B} nu(x-y)`.
    Bar,
    /// `nu(R(1+|x|))`, independent of `B`.
    Hat { r: f64 },
}

/// Number of samples used for the infimum of non-monotone profiles.
pub const INF_SAMPLES: usize = 1024;

/// Evaluate a weight for the interval `B = (a, b)` at `x`. One-dimensional kernels only.
pub fn weight_omega(kernel: &KernelSpec, b_set: (f64, f64), x: f64, which: Weight) -> Result<f64> {
    if kernel.d != 1 {
        return Err(invalid("weights are implemented for d = 1"));
    }
    let (a, b) = b_set;
    if !(a < b) {
        return Err(invalid("interval must satisfy a < b"));
    }
    match which {
        Weight::Tilde => {
            let f = |y: f64| {
                let r = (x - y).abs();
                if r == 0.0 {
                    1.0
                } else {
                    kernel.profile(r).min(1.0)
                }
            };
            let mut knots = vec![x];
            for k in kernel.knots() {
                knots.extend([x - k, x + k]);
            }
            Ok(integrate_split(f, a, b, &knots, Tol::rel(1e-10)).value)
        }
        Weight::Bar => {
            let far = (x - a).abs().max((x - b).abs());
            if kernel.is_unimodal() {
                Ok(kernel.profile(far))
            } else {
                let n = INF_SAMPLES;
                Ok((0..n)
                    .map(|i| {
                        let y = a + (b - a) * (i as f64 + 0.5) / n as f64;
                        let r = (x - y).abs();
                        if r == 0.0 {
                            f64::INFINITY
                        } else {
                            kernel.profile(r)
                        }
                    })
                    .fold(f64::INFINITY, f64::min))
            }
        }
        Weight::Hat { r } => {
            if !(r > 1.0) {
                return Err(invalid("R must exceed 1"));
            }
            Ok(kernel.profile(r * (1.0 + x.abs())))
        }
    }
}
