//! Gamma function and the normalization constants `K_{d,p}`, `C_{d,p,s}`, `C~_{d,p,s}`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{domain, invalid, Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `sin(pi x)` with argument reduction, exact zeros at the integers.
fn sin_pi(x: f64) -> f64 {
    let r = x.rem_euclid(2.0);
    if r == 0.0 || r == 1.0 {
        return 0.0;
    }
    (PI * r).sin()
}

/// Gamma function. Arguments below 1/2, including negative non-integers,
/// go through the reflection formula.
pub fn gamma(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(domain(format!("gamma of non-finite argument {x}")));
    }
    if x <= 0.0 && x.fract() == 0.0 {
        return Err(Error::Pole(x));
    }
    if x < 0.5 {
        return Ok(PI / (sin_pi(x) * gamma(1.0 - x)?));
    }
    let z = x - 1.0;
    let mut acc = LANCZOS[0];
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    Ok((2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc)
}

/// Surface measure `|S^{d-1}| = 2 pi^{d/2} / Gamma(d/2)`; `|S^0| = 2`.
pub fn sphere_measure(d: usize) -> f64 {
    assert!(d >= 1, "dimension must be at least 1");
    if d == 1 {
        return 2.0;
    }
    let half = d as f64 / 2.0;
    2.0 * PI.powf(half) / gamma(half).expect("d/2 > 0")
}

fn check_dp(d: usize, p: f64) -> Result<()> {
    if d == 0 {
        return Err(invalid("dimension d must be at least 1"));
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(invalid(format!("p must exceed 1, got {p}")));
    }
    Ok(())
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(domain(format!("s must lie in (0,1), got {s}")));
    }
    Ok(())
}

/// `K_{d,p}`: the sphere average of `|w . e|^p`.
pub fn k_dp(d: usize, p: f64) -> Result<f64> {
    check_dp(d, p)?;
    if d == 1 {
        return Ok(1.0);
    }
    let df = d as f64;
    Ok(gamma(df / 2.0)? * gamma((p + 1.0) / 2.0)? / (gamma((df + p) / 2.0)? * PI.sqrt()))
}

/// `(1 - 2s) / cos(s pi)`, continuous through its removable singularity at `s = 1/2`.
fn half_order_factor(s: f64) -> f64 {
    let t = s - 0.5;
    if t.abs() < 1e-4 {
        let z2 = (PI * t).powi(2);
        2.0 / PI * (1.0 + z2 / 6.0 + 7.0 * z2 * z2 / 360.0)
    } else {
        (1.0 - 2.0 * s) / (s * PI).cos()
    }
}

/// `C_{d,p,s}`, the normalizing constant of the fractional p-Laplacian.
pub fn c_dps(d: usize, p: f64, s: f64) -> Result<f64> {
    check_dp(d, p)?;
    check_s(s)?;
    let df = d as f64;
    let sp = s * p;
    let num = s * half_order_factor(s) * gamma((df + sp) / 2.0)?;
    let den = PI.powf((df - 1.0) / 2.0) * gamma((sp + 1.0) / 2.0)? * gamma(p * (1.0 - s))?;
    Ok(num / den)
}

/// Second representation of `C_{d,p,s}` through `|Gamma(-s)|`, used as a cross-check.
pub fn c_dps_reflection_form(d: usize, p: f64, s: f64) -> Result<f64> {
    check_dp(d, p)?;
    check_s(s)?;
    let df = d as f64;
    let sp = s * p;
    let num = 4f64.powf(s)
        * gamma((df + sp) / 2.0)?
        * gamma((2.0 * s + 1.0) / 2.0)?
        * gamma(2.0 * (1.0 - s))?;
    let den = PI.powf(df / 2.0)
        * gamma(-s)?.abs()
        * gamma((sp + 1.0) / 2.0)?
        * gamma(p * (1.0 - s))?;
    Ok(num / den)
}

/// `C~_{d,p,s}`: `C_{d,p,s}` when `sp >= 1`, otherwise `C_{d,2,sp/2}`.
pub fn c_tilde(d: usize, p: f64, s: f64) -> Result<f64> {
    check_dp(d, p)?;
    check_s(s)?;
    if s * p >= 1.0 {
        c_dps(d, p, s)
    } else {
        c_dps(d, 2.0, s * p / 2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsReport {
    pub d: usize,
    pub p: f64,
    pub s: f64,
    pub sphere_measure: f64,
    pub k_dp: f64,
    pub c_dps: f64,
    pub c_tilde: f64,
}

impl ConstantsReport {
    pub fn compute(d: usize, p: f64, s: f64) -> Result<Self> {
        Ok(Self {
            d,
            p,
            s,
            sphere_measure: sphere_measure(d),
            k_dp: k_dp(d, p)?,
            c_dps: c_dps(d, p, s)?,
            c_tilde: c_tilde(d, p, s)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn gamma_known_values() {
        assert!(rel(gamma(1.0).unwrap(), 1.0) < 1e-14);
        assert!(rel(gamma(0.5).unwrap(), PI.sqrt()) < 1e-14);
        assert!(rel(gamma(2.5).unwrap(), 0.75 * PI.sqrt()) < 1e-14);
        assert!(rel(gamma(10.0).unwrap(), 362_880.0) < 1e-13);
        assert!(rel(gamma(-0.5).unwrap(), -2.0 * PI.sqrt()) < 1e-14);
    }

    #[test]
    fn gamma_poles() {
        for x in [0.0, -1.0, -7.0] {
            assert!(matches!(gamma(x), Err(Error::Pole(_))));
        }
    }

    #[test]
    fn gamma_recurrence() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let x: f64 = rng.gen_range(0.1..20.0);
            let r = gamma(x + 1.0).unwrap() / (x * gamma(x).unwrap());
            assert!((r - 1.0).abs() < 1e-12, "x={x} r={r}");
        }
    }

    #[test]
    fn sphere_measures() {
        assert_eq!(sphere_measure(1), 2.0);
        assert!(rel(sphere_measure(2), 2.0 * PI) < 1e-14);
        assert!(rel(sphere_measure(3), 4.0 * PI) < 1e-14);
        assert!(rel(sphere_measure(4), 2.0 * PI * PI) < 1e-14);
    }

    #[test]
    fn k_dp_values() {
        for d in 1..=10 {
            assert!((k_dp(d, 2.0).unwrap() * d as f64 - 1.0).abs() < 1e-12);
        }
        assert_eq!(k_dp(1, 4.0).unwrap(), 1.0);
        assert!((k_dp(3, 2.0).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        // average of |cos t|^4 over the circle by the trapezoid rule, exact for trig polynomials
        let n = 64;
        let avg = (0..n)
            .map(|k| (2.0 * PI * k as f64 / n as f64).cos().powi(4))
            .sum::<f64>()
            / n as f64;
        assert!((k_dp(2, 4.0).unwrap() - avg).abs() < 1e-12);
        assert!((avg - 0.375).abs() < 1e-12);
    }

    #[test]
    fn c_dps_matches_p2_closed_form() {
        for &(d, s) in &[(1usize, 0.25), (2, 0.7), (3, 0.1)] {
            let df = d as f64;
            let alt = s * 4f64.powf(s) * gamma((df + 2.0 * s) / 2.0).unwrap()
                / (PI.powf(df / 2.0) * gamma(1.0 - s).unwrap());
            assert!(rel(c_dps(d, 2.0, s).unwrap(), alt) < 1e-10);
        }
    }

    #[test]
    fn c_dps_reflection_agrees() {
        for &(d, p, s) in &[(1, 2.0, 0.3), (2, 3.0, 0.8), (3, 1.5, 0.45), (1, 4.0, 0.5)] {
            let a = c_dps(d, p, s).unwrap();
            let b = c_dps_reflection_form(d, p, s).unwrap();
            assert!(rel(a, b) < 1e-10, "{d} {p} {s}: {a} vs {b}");
        }
    }

    #[test]
    fn c_dps_continuous_at_half() {
        for &(d, p) in &[(1, 2.0), (2, 3.0), (3, 1.5)] {
            let l = c_dps(d, p, 0.5 - 1e-8).unwrap();
            let m = c_dps(d, p, 0.5).unwrap();
            let r = c_dps(d, p, 0.5 + 1e-8).unwrap();
            assert!(m > 0.0);
            assert!(rel(l, r) < 1e-6 && rel(l, m) < 1e-6);
            // both sides of the switch between the series and the direct quotient
            let a = c_dps(d, p, 0.5 + 0.99e-4).unwrap();
            let b = c_dps(d, p, 0.5 + 1.01e-4).unwrap();
            assert!(rel(a, b) < 1e-5);
        }
    }

    #[test]
    fn c_dps_limits() {
        let (d, p) = (2usize, 3.0);
        let sm = sphere_measure(d);
        let s0 = 1e-6;
        let lim0 = 2.0 / (sm * gamma(p).unwrap());
        assert!((lim0 - 0.159_154_943_1).abs() < 1e-9);
        assert!(rel(c_dps(d, p, s0).unwrap() / (s0 * (1.0 - s0)), lim0) < 1e-4);
        let s1 = 1.0 - 1e-6;
        let lim1 = 2.0 * p / (sm * k_dp(d, p).unwrap());
        assert!(rel(c_dps(d, p, s1).unwrap() / (s1 * (1.0 - s1)), lim1) < 1e-4);
    }

    #[test]
    fn c_dps_rejects_bad_order() {
        for s in [0.0, 1.0, -0.2, 1.2] {
            assert!(matches!(c_dps(1, 2.0, s), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn c_tilde_branches() {
        for s in [0.1, 0.5, 0.9] {
            assert_eq!(c_tilde(2, 2.0, s).unwrap(), c_dps(2, 2.0, s).unwrap());
        }
        assert_eq!(c_tilde(1, 4.0, 0.5).unwrap(), c_dps(1, 4.0, 0.5).unwrap());
        assert_eq!(c_tilde(1, 4.0, 0.2).unwrap(), c_dps(1, 2.0, 0.4).unwrap());
    }

    #[test]
    fn c_tilde_small_order_limit() {
        // C_{d,2,t} ~ 2t/|S^{d-1}| as t -> 0, so with t = sp/2 the quotient tends to p/|S^{d-1}|
        let (d, p, s) = (1usize, 4.0, 1e-6);
        let q = c_tilde(d, p, s).unwrap() / (s * (1.0 - s));
        assert!(rel(q, p / sphere_measure(d)) < 1e-4, "q={q}");
    }

    #[test]
    fn report_fields() {
        let r = ConstantsReport::compute(3, 2.0, 0.5).unwrap();
        assert!(rel(r.k_dp, 1.0 / 3.0) < 1e-14);
        assert!(rel(r.sphere_measure, 4.0 * PI) < 1e-14);
        assert_eq!(r.c_dps, r.c_tilde);
    }
}
