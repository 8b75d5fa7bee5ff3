//! Adaptive Gauss–Kronrod quadrature and dyadic shell sums for power-law singular integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Integral value with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Quad {
    type Output = Quad;
    fn add(self, o: Quad) -> Quad {
        Quad { value: self.value + o.value, error: self.error + o.error }
    }
}

impl std::iter::Sum for Quad {
    fn sum<I: Iterator<Item = Quad>>(it: I) -> Quad {
        it.fold(Quad::default(), |a, b| a + b)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Tol {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tol {
    fn default() -> Self {
        Tol { abs: 1e-300, rel: 1e-12, max_intervals: 4000 }
    }
}

impl Tol {
    pub fn rel(rel: f64) -> Self {
        Tol { rel, ..Tol::default() }
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Quad {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    Quad { value: k * h, error: ((k - g) * h).abs() }
}

struct Piece {
    a: f64,
    b: f64,
    q: Quad,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.q.error == o.q.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.q.error.total_cmp(&o.q.error)
    }
}

/// Globally adaptive G7–K15 quadrature on `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tol) -> Quad {
    if a == b {
        return Quad::default();
    }
    if b < a {
        let q = integrate(f, b, a, tol);
        return Quad { value: -q.value, error: q.error };
    }
    let first = kronrod(&f, a, b);
    let mut total = first;
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, q: first });
    while total.error > tol.abs.max(tol.rel * total.value.abs()) && heap.len() < tol.max_intervals {
        let Some(worst) = heap.pop() else { break };
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            heap.push(worst);
            break;
        }
        let l = kronrod(&f, worst.a, m);
        let r = kronrod(&f, m, worst.b);
        total.value += l.value + r.value - worst.q.value;
        total.error += l.error + r.error - worst.q.error;
        heap.push(Piece { a: worst.a, b: m, q: l });
        heap.push(Piece { a: m, b: worst.b, q: r });
    }
    // re-sum to shed accumulated cancellation in the running totals
    heap.into_iter().map(|p| p.q).sum()
}

/// [`integrate`] with the interval pre-split at the given breakpoints.
pub fn integrate_split<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, knots: &[f64], tol: Tol) -> Quad {
    let mut cuts: Vec<f64> = knots.iter().copied().filter(|&k| k > a && k < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut pts = Vec::with_capacity(cuts.len() + 2);
    pts.push(a);
    pts.extend(cuts);
    pts.push(b);
    pts.windows(2).map(|w| integrate(&f, w[0], w[1], tol)).sum()
}

/// Result of a dyadic shell summation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellSum {
    pub value: f64,
    pub error: f64,
    pub divergent: bool,
    pub shells: usize,
    /// Ratio of the last two shell contributions.
    pub ratio: f64,
}

/// Number of shells inspected before divergence is decided.
pub const DIVERGENCE_SHELLS: usize = 40;
const MAX_SHELLS: usize = 160;
const DIVERGENT_RATIO: f64 = 1.0 - 1e-9;

#[derive(Clone, Copy)]
enum Direction {
    ToZero,
    ToInfinity,
}

fn shells<F: Fn(f64) -> f64>(f: F, r0: f64, knots: &[f64], tol: Tol, dir: Direction) -> ShellSum {
    let shell_tol = Tol { rel: tol.rel.min(1e-13), ..tol };
    let mut sum = 0.0;
    let mut err = 0.0;
    let mut prev: Option<f64> = None;
    let mut prev_ratio = f64::NAN;
    let mut grow_run = 0usize;
    for k in 0..MAX_SHELLS {
        let (lo, hi) = match dir {
            Direction::ToZero => (r0 * 0.5f64.powi(k as i32 + 1), r0 * 0.5f64.powi(k as i32)),
            Direction::ToInfinity => (r0 * 2f64.powi(k as i32), r0 * 2f64.powi(k as i32 + 1)),
        };
        let q = integrate_split(&f, lo, hi, knots, shell_tol);
        if !q.value.is_finite() {
            return ShellSum { value: f64::INFINITY, error: f64::INFINITY, divergent: true, shells: k + 1, ratio: f64::NAN };
        }
        sum += q.value;
        err += q.error;
        let Some(p) = prev else {
            prev = Some(q.value);
            continue;
        };
        prev = Some(q.value);
        if q.value == 0.0 && p == 0.0 {
            if sum != 0.0 {
                return ShellSum { value: sum, error: err, divergent: false, shells: k + 1, ratio: 0.0 };
            }
            continue;
        }
        let ratio = if p != 0.0 { q.value / p } else { f64::INFINITY };
        grow_run = if ratio.abs() >= DIVERGENT_RATIO { grow_run + 1 } else { 0 };
        if grow_run >= 8 || (k + 1 >= DIVERGENCE_SHELLS && ratio.abs() >= DIVERGENT_RATIO) {
            return ShellSum { value: f64::INFINITY, error: f64::INFINITY, divergent: true, shells: k + 1, ratio };
        }
        if ratio.abs() < 1.0 && k >= 3 {
            let rem = q.value * ratio / (1.0 - ratio);
            let drift = if prev_ratio.is_finite() { (ratio - prev_ratio).abs() } else { 1.0 };
            let rem_err = q.value.abs() * drift / (1.0 - ratio.abs()).powi(2) + 1e-14 * rem.abs();
            if rem_err <= tol.abs.max(tol.rel * (sum + rem).abs()) || k + 1 == MAX_SHELLS {
                return ShellSum { value: sum + rem, error: err + rem_err, divergent: false, shells: k + 1, ratio };
            }
        }
        prev_ratio = ratio;
    }
    let error = if sum == 0.0 { 0.0 } else { f64::INFINITY };
    ShellSum { value: sum, error, divergent: false, shells: MAX_SHELLS, ratio: prev_ratio }
}

/// `∫_0^{r0} f` over shells `(r0 2^{-k-1}, r0 2^{-k}]`, extrapolating the geometric remainder.
/// Exact for pure power laws; flags divergence when shells stop decaying.
pub fn integrate_to_zero<F: Fn(f64) -> f64>(f: F, r0: f64, knots: &[f64], tol: Tol) -> ShellSum {
    shells(f, r0, knots, tol, Direction::ToZero)
}

/// `∫_{r0}^∞ f` over shells `(r0 2^k, r0 2^{k+1}]`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, r0: f64, knots: &[f64], tol: Tol) -> ShellSum {
    shells(f, r0, knots, tol, Direction::ToInfinity)
}
