//! Uniform 1D grids over `Omega = (a, b)` with an exterior collar, and nonlocal hulls.

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;

/// Cell-centred uniform grid over `[a - R, b + R]`.
///
/// Every node carries the quadrature weight `spacing`; node `k` sits at the
/// midpoint of cell `k`, so no node lies on `∂Omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    pub a: f64,
    pub b: f64,
    /// Collar width actually used, a whole number of cells.
    pub collar_r: f64,
    pub n_interior: usize,
    pub n_collar: usize,
    pub spacing: f64,
    pub nodes: Vec<f64>,
    pub is_interior: Vec<bool>,
    pub interior_idx: Vec<usize>,
    pub exterior_idx: Vec<usize>,
}

pub fn build_mesh(a: f64, b: f64, n_interior: usize, collar_r: f64) -> Result<Mesh1D> {
    if n_interior < 4 {
        return Err(Error::Config(format!("n_interior must be at least 4, got {n_interior}")));
    }
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Config(format!("domain needs finite a < b, got ({a}, {b})")));
    }
    if !(collar_r > 0.0 && collar_r.is_finite()) {
        return Err(Error::Config(format!("collar_R must be positive, got {collar_r}")));
    }
    let h = (b - a) / n_interior as f64;
    let n_collar = ((collar_r / h).round() as usize).max(1);
    let total = n_interior + 2 * n_collar;
    let left = a - n_collar as f64 * h;
    let nodes: Vec<f64> = (0..total).map(|k| left + (k as f64 + 0.5) * h).collect();
    let is_interior: Vec<bool> = (0..total).map(|k| k >= n_collar && k < n_collar + n_interior).collect();
    Ok(Mesh1D::from_parts(a, b, n_interior, n_collar, h, nodes, is_interior))
}

impl Mesh1D {
    fn from_parts(
        a: f64,
        b: f64,
        n_interior: usize,
        n_collar: usize,
        spacing: f64,
        nodes: Vec<f64>,
        is_interior: Vec<bool>,
    ) -> Self {
        let interior_idx = (0..nodes.len()).filter(|&k| is_interior[k]).collect();
        let exterior_idx = (0..nodes.len()).filter(|&k| !is_interior[k]).collect();
        Mesh1D {
            a,
            b,
            collar_r: n_collar as f64 * spacing,
            n_interior,
            n_collar,
            spacing,
            nodes,
            is_interior,
            interior_idx,
            exterior_idx,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Quadrature weight of node `k`.
    pub fn weight(&self, _k: usize) -> f64 {
        self.spacing
    }

    /// Lower and upper end of the computational box.
    pub fn box_bounds(&self) -> (f64, f64) {
        (self.a - self.collar_r, self.b + self.collar_r)
    }

    /// Same grid with the interior reduced to the nodes of the original interior satisfying `keep`.
    /// Used to model a union of intervals inside `(a, b)`.
    pub fn restrict_interior<F: Fn(f64) -> bool>(&self, keep: F) -> Mesh1D {
        let is_interior: Vec<bool> =
            self.nodes.iter().zip(&self.is_interior).map(|(&x, &int)| int && keep(x)).collect();
        Mesh1D::from_parts(self.a, self.b, self.n_interior, self.n_collar, self.spacing, self.nodes.clone(), is_interior)
    }

    /// Indices of nodes inside the hull.
    pub fn hull_idx(&self, hull: &NonlocalHull) -> Vec<usize> {
        (0..self.len())
            .filter(|&k| match hull.region {
                HullRegion::All => true,
                HullRegion::Interval(lo, hi) => self.nodes[k] > lo && self.nodes[k] < hi,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HullRegion {
    /// The whole line.
    All,
    Interval(f64, f64),
}

/// `Omega + supp nu` for an interval `Omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlocalHull {
    pub region: HullRegion,
    /// Set when the hull equals `Omega` (kernel supported at the origin only).
    pub empty_boundary: bool,
}

pub fn nonlocal_hull(domain: (f64, f64), kernel: &KernelSpec) -> NonlocalHull {
    let (a, b) = domain;
    match kernel.support_radius() {
        None => NonlocalHull { region: HullRegion::All, empty_boundary: false },
        Some(delta) => NonlocalHull { region: HullRegion::Interval(a - delta, b + delta), empty_boundary: delta == 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_examples() {
        let m = build_mesh(-1.0, 1.0, 4, 1.0).unwrap();
        assert_eq!(m.len(), 8);
        assert_eq!(m.spacing, 0.5);
        assert_eq!(m.box_bounds(), (-2.0, 2.0));
        let m = build_mesh(0.0, 2.0, 100, 2.0).unwrap();
        assert!((m.spacing - 0.02).abs() < 1e-15);
        assert_eq!(m.len(), 300);
        let m = build_mesh(0.0, 1.0, 10, 0.5).unwrap();
        for &k in &m.exterior_idx {
            let x = m.nodes[k];
            assert!((-0.5..=0.0).contains(&x) || (1.0..=1.5).contains(&x));
        }
        for &k in &m.interior_idx {
            assert!(m.nodes[k] > 0.0 && m.nodes[k] < 1.0);
        }
    }

    #[test]
    fn partition_and_spacing() {
        let m = build_mesh(-0.3, 1.7, 37, 0.75).unwrap();
        let mut all: Vec<usize> = m.interior_idx.iter().chain(&m.exterior_idx).copied().collect();
        all.sort();
        assert_eq!(all, (0..m.len()).collect::<Vec<_>>());
        assert_eq!(m.interior_idx.len(), 37);
        for w in m.nodes.windows(2) {
            assert!((w[1] - w[0] - m.spacing).abs() < 1e-12);
        }
        let expected = 37.0 * (1.0 + 2.0 * 0.75 / 2.0);
        assert!((m.len() as f64 - expected).abs() <= 2.0);
    }

    #[test]
    fn mesh_rejects_bad_input() {
        assert!(matches!(build_mesh(-1.0, 1.0, 2, 1.0), Err(Error::Config(_))));
        assert!(build_mesh(1.0, -1.0, 10, 1.0).is_err());
        assert!(build_mesh(-1.0, 1.0, 10, 0.0).is_err());
    }

    #[test]
    fn hulls() {
        let ind = KernelSpec::indicator(0.25, 1, 2.0).unwrap();
        let h = nonlocal_hull((-0.5, 0.5), &ind);
        assert_eq!(h.region, HullRegion::Interval(-0.75, 0.75));
        assert!(!h.empty_boundary);
        let fr = KernelSpec::fractional(0.5, 1, 2.0).unwrap();
        assert_eq!(nonlocal_hull((-1.0, 1.0), &fr).region, HullRegion::All);
        let deg = KernelSpec::indicator(0.0, 1, 2.0).unwrap();
        let h = nonlocal_hull((-1.0, 1.0), &deg);
        assert_eq!(h.region, HullRegion::Interval(-1.0, 1.0));
        assert!(h.empty_boundary);
    }

    #[test]
    fn hull_monotone_and_contains_interior() {
        let m = build_mesh(-1.0, 1.0, 40, 1.0).unwrap();
        let mut last = 0;
        for delta in [0.0, 0.1, 0.3, 0.7, 2.0] {
            let k = KernelSpec::indicator(delta, 1, 2.0).unwrap();
            let idx = m.hull_idx(&nonlocal_hull((m.a, m.b), &k));
            assert!(idx.len() >= last);
            last = idx.len();
            for i in &m.interior_idx {
                assert!(idx.contains(i));
            }
        }
    }

    #[test]
    fn restricted_interior() {
        let m = build_mesh(-1.0, 1.0, 20, 0.5).unwrap();
        let r = m.restrict_interior(|x| x.abs() > 0.4);
        assert!(r.interior_idx.len() < m.interior_idx.len());
        assert!(r.interior_idx.iter().all(|&k| r.nodes[k].abs() > 0.4));
        assert_eq!(r.interior_idx.len() + r.exterior_idx.len(), r.len());
    }
}
