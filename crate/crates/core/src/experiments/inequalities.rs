//! Randomized checks of the elementary inequalities for `psi(x) = |x|^{p-2} x` on `R^d`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Result};

/// `(A_p, A'_p)`.
pub fn constants(p: f64) -> (f64, f64) {
    if p >= 2.0 {
        (p - 1.0, 0.5f64.min(2f64.powf(2.0 - p)))
    } else {
        (2f64.powf(2.0 - p) * (3.0 - p), p - 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub name: &'static str,
    pub trials: usize,
    pub violations: usize,
    /// First failing pair, verbatim.
    pub first_violation: Option<Violation>,
}

impl InequalityCheck {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(a, b)| a - b).collect()
}

fn psi_vec(x: &[f64], p: f64) -> Vec<f64> {
    let n = norm(x);
    if n == 0.0 {
        return vec![0.0; x.len()];
    }
    let s = n.powf(p - 2.0);
    x.iter().map(|v| s * v).collect()
}

/// One inequality `lhs ≤ rhs` with the roundoff budget `slack` of its evaluation.
struct Sample {
    lhs: f64,
    rhs: f64,
    slack: f64,
}

type Check = (&'static str, Box<dyn Fn(&[f64], &[f64], f64) -> Sample>);

fn checks(p: f64) -> Vec<Check> {
    let (a, a1) = constants(p);
    let eps = 8.0 * f64::EPSILON;
    let mut v: Vec<Check> = Vec::new();
    // shared pieces: |psi(x) - psi(y)|, (psi(x) - psi(y))·(x - y) and their roundoff scales
    let parts = move |x: &[f64], y: &[f64]| {
        let (px, py) = (psi_vec(x, p), psi_vec(y, p));
        let d = sub(x, y);
        let dp = sub(&px, &py);
        let scale = norm(&px) + norm(&py);
        (norm(&dp), dot(&dp, &d), norm(&d), norm(x) + norm(y), scale)
    };
    v.push((
        "elementary upper bound",
        Box::new(move |x, y, _| {
            let (diff, _, r, s, sc) = parts(x, y);
            Sample { lhs: diff, rhs: a * r * s.powf(p - 2.0), slack: eps * sc }
        }),
    ));
    v.push((
        "elementary lower bound",
        Box::new(move |x, y, _| {
            let (_, mono, r, s, sc) = parts(x, y);
            Sample { lhs: a1 * r * r * s.powf(p - 2.0), rhs: mono, slack: eps * sc * r }
        }),
    ));
    v.push((
        "beta upper bound",
        Box::new(move |x, y, beta| {
            let (diff, _, r, s, sc) = parts(x, y);
            Sample { lhs: diff, rhs: a * r.powf(1.0 - beta) * s.powf(p - 2.0 + beta), slack: eps * sc }
        }),
    ));
    v.push((
        "beta lower bound",
        Box::new(move |x, y, beta| {
            let (_, mono, r, s, sc) = parts(x, y);
            Sample { lhs: a1 * r.powf(2.0 + beta) * s.powf(p - 2.0 - beta), rhs: mono, slack: eps * sc * r }
        }),
    ));
    v.push((
        "Simon upper bound",
        Box::new(move |x, y, _| {
            let (diff, _, r, s, sc) = parts(x, y);
            let rhs = if p >= 2.0 { a * r * s.powf(p - 2.0) } else { a * r.powf(p - 1.0) };
            Sample { lhs: diff, rhs, slack: eps * sc }
        }),
    ));
    v.push((
        "Simon lower bound",
        Box::new(move |x, y, _| {
            let (_, mono, r, s, sc) = parts(x, y);
            let lhs = if p >= 2.0 { a1 * r.powf(p) } else { a1 * r * r * s.powf(p - 2.0) };
            Sample { lhs, rhs: mono, slack: eps * sc * r }
        }),
    ));
    if p < 2.0 {
        v.push((
            "scalar Hölder bound",
            Box::new(move |x, y, _| {
                let (b, c) = (x[0], y[0]);
                let f = |t: f64| t.abs().powf(p - 2.0) * t;
                let lhs = (f(b) - f(c)).abs();
                Sample { lhs, rhs: 2f64.powf(2.0 - p) * (b - c).abs().powf(p - 1.0), slack: eps * (f(b).abs() + f(c).abs()) }
            }),
        ));
    }
    let taylor = move |x: &[f64], y: &[f64]| {
        let d = sub(x, y);
        let t = norm(x).powf(p) - norm(y).powf(p) - p * dot(&psi_vec(y, p), &d);
        let sc = norm(x).powf(p) + norm(y).powf(p) + p * norm(&psi_vec(y, p)) * norm(&d);
        (t, norm(&d), norm(y), sc)
    };
    v.push((
        "Taylor upper bound",
        Box::new(move |x, y, _| {
            let (t, r, ny, sc) = taylor(x, y);
            let rhs = if p < 2.0 { a * r.powf(p) } else { 0.5 * p * a * r * r * (r + 2.0 * ny).powf(p - 2.0) };
            Sample { lhs: t, rhs, slack: eps * sc }
        }),
    ));
    v.push((
        "Taylor lower bound",
        Box::new(move |x, y, _| {
            let (t, r, ny, sc) = taylor(x, y);
            let lhs = if p >= 2.0 { a1 * r.powf(p) } else { 0.5 * p * a1 * r * r * (r + 2.0 * ny).powf(p - 2.0) };
            Sample { lhs, rhs: t, slack: eps * sc }
        }),
    ));
    v
}

/// Random pairs in `[-10, 10]^d`, `d ∈ {1, 2, 3}`, with spread magnitudes and near-ties.
fn sample_pair(rng: &mut ChaCha8Rng, trial: usize) -> (Vec<f64>, Vec<f64>) {
    let d = if trial % 7 == 0 { 1 } else { rng.gen_range(1..=3) };
    let mut x: Vec<f64> = (0..d).map(|_| rng.gen_range(-10.0..10.0)).collect();
    let mut y: Vec<f64> = (0..d).map(|_| rng.gen_range(-10.0..10.0)).collect();
    match trial % 10 {
        // near-tie
        0 => {
            let h = 10f64.powf(rng.gen_range(-12.0..-6.0));
            y = x.iter().map(|v| v + h * rng.gen_range(-1.0..1.0)).collect();
        }
        // one point near the origin
        1 => x.iter_mut().for_each(|v| *v *= 10f64.powf(rng.gen_range(-8.0..-2.0))),
        // opposite points
        2 => y = x.iter().map(|v| -v * rng.gen_range(0.5..2.0)).collect(),
        // small scale
        3 => {
            let s = 10f64.powf(rng.gen_range(-6.0..0.0));
            x.iter_mut().chain(y.iter_mut()).for_each(|v| *v *= s);
        }
        _ => {}
    }
    (x, y)
}

/// Runs every applicable inequality on `trials` random pairs; pairs with `x = y = 0` are skipped.
pub fn inequality_suite(p: f64, trials: usize, seed: u64) -> Result<Vec<InequalityCheck>> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(invalid("the inequality suite needs p > 1"));
    }
    let checks = checks(p);
    let mut out: Vec<InequalityCheck> = checks
        .iter()
        .map(|(name, _)| InequalityCheck { name, trials: 0, violations: 0, first_violation: None })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let (x, y) = sample_pair(&mut rng, trial);
        let beta = rng.gen_range(0.0..3.0);
        if norm(&x) + norm(&y) == 0.0 {
            continue;
        }
        for ((name, check), rec) in checks.iter().zip(out.iter_mut()) {
            if *name == "scalar Hölder bound" && x.len() != 1 {
                continue;
            }
            let s = check(&x, &y, beta);
            rec.trials += 1;
            let ok = s.lhs <= s.rhs + 1e-10 * (s.lhs.abs() + s.rhs.abs()) + s.slack;
            if !ok || !s.lhs.is_finite() || !s.rhs.is_finite() {
                rec.violations += 1;
                if rec.first_violation.is_none() {
                    rec.first_violation = Some(Violation { x: x.clone(), y: y.clone(), lhs: s.lhs, rhs: s.rhs });
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_match_stated_values() {
        assert_eq!(constants(2.0), (1.0, 0.5));
        assert_eq!(constants(3.0), (2.0, 0.5));
        assert_eq!(constants(4.0), (3.0, 0.25));
        let (a, a1) = constants(1.5);
        assert!((a - 2f64.sqrt() * 1.5).abs() < 1e-15 && a1 == 0.5);
    }

    #[test]
    fn p_two_is_exact() {
        // psi is the identity: the upper bound is an equality and the monotonicity product is |x - y|^2
        let x = [1.0, -2.0, 0.5];
        let y = [0.25, 3.0, -1.0];
        let d = sub(&x, &y);
        assert!((norm(&sub(&psi_vec(&x, 2.0), &psi_vec(&y, 2.0))) - norm(&d)).abs() < 1e-15);
        assert!(inequality_suite(2.0, 2000, 1).unwrap().iter().all(InequalityCheck::passed));
    }

    #[test]
    fn sharp_scalar_constant_is_attained() {
        // b = -a gives |2 psi(a)| = 2^{2-p} |2a|^{p-1}
        let p = 1.5;
        let lhs = 2.0;
        let rhs = 2f64.powf(2.0 - p) * 2f64.powf(p - 1.0);
        assert!((lhs - rhs).abs() < 1e-15);
    }

    #[test]
    fn suite_passes_for_sample_exponents() {
        for p in [1.2, 1.5, 3.0, 4.7] {
            for c in inequality_suite(p, 5000, 11).unwrap() {
                assert!(c.passed(), "p={p} {}: {:?}", c.name, c.first_violation);
                assert!(c.trials > 0);
            }
        }
    }

    #[test]
    fn detects_a_wrong_constant() {
        // the p < 2 upper bound fails with constant 1 at opposite points
        let p = 1.5;
        let (x, y) = ([1.0], [-1.0]);
        let lhs = norm(&sub(&psi_vec(&x, p), &psi_vec(&y, p)));
        assert!(lhs > 1.0 * norm(&sub(&x, &y)).powf(p - 1.0));
    }
}
