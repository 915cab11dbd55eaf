//! Uniform one-dimensional grids on `[-L, L]`.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform grid with both endpoints as nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    half_length: T,
    spacing: T,
    nodes: Vec<T>,
}

/// Builds the uniform grid on `[-L, L]` with spacing as close to `dx` as
/// the node count allows. Nodes are symmetric: `x[j] == -x[n-1-j]`.
pub fn make_grid<T: Real>(half_length: T, dx: T) -> Result<Grid<T>> {
    if !(half_length > T::zero()) || !(dx > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "grid needs L > 0 and dx > 0 (L = {half_length}, dx = {dx})"
        )));
    }
    let ratio = half_length / dx;
    if ratio < T::lit(50.0) {
        return Err(Error::GridTooCoarse { ratio: ratio.as_f64() });
    }
    let intervals = (T::lit(2.0) * ratio).round().to_usize().unwrap_or(0);
    let n = intervals + 1;
    let spacing = T::lit(2.0) * half_length / T::from_usize_lossy(intervals);
    let mid = intervals / 2;
    let mut nodes = Vec::with_capacity(n);
    for j in 0..n {
        let x = if intervals.is_multiple_of(2) {
            (T::from_usize_lossy(j) - T::from_usize_lossy(mid)) * spacing
        } else {
            (T::from_usize_lossy(j) - T::from_usize_lossy(intervals) / T::lit(2.0)) * spacing
        };
        nodes.push(x);
    }
    nodes[0] = -half_length;
    nodes[n - 1] = half_length;
    Ok(Grid { half_length, spacing, nodes })
}

impl<T: Real> Grid<T> {
    pub fn half_length(&self) -> T {
        self.half_length
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(T) -> T) -> Vec<T> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }

    /// L² norm with quadrature weight `dx`.
    pub fn l2_norm(&self, v: &[crate::Cplx<T>]) -> T {
        crate::scalar::norm2(v) * self.spacing.sqrt()
    }

    /// Index of the node nearest to `x`.
    pub fn nearest(&self, x: T) -> usize {
        let j = ((x + self.half_length) / self.spacing).round();
        j.max(T::zero()).to_usize().unwrap_or(0).min(self.len() - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_grid() {
        let g = make_grid(13.0, 0.01).unwrap();
        assert_eq!(g.len(), 2601);
        assert_eq!(g.nodes()[0], -13.0);
        assert_eq!(g.nodes()[2600], 13.0);
        let h = 0.05;
        assert_eq!(make_grid(13.0, h / 10.0).unwrap().len(), 5201);
    }

    #[test]
    fn too_coarse() {
        assert!(matches!(make_grid(1.0, 0.5), Err(Error::GridTooCoarse { .. })));
        assert!(make_grid(0.0, 0.01).is_err());
        assert!(make_grid(1.0, -0.01).is_err());
    }

    #[test]
    fn symmetric_uniform_nodes() {
        for &(l, dx) in &[(13.0_f64, 0.0069930), (13.0, 0.1), (7.5, 0.03)] {
            let g = make_grid(l, dx).unwrap();
            let n = g.len();
            for j in 0..n {
                assert_eq!(g.nodes()[j], -g.nodes()[n - 1 - j]);
            }
            for w in g.nodes().windows(2) {
                assert!(w[1] > w[0]);
                assert!((w[1] - w[0] - g.spacing()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn integer_radii_land_on_nodes_for_unit_fraction_spacing() {
        let g = make_grid(13.0, 1.0 / 143.0).unwrap();
        for r in 2..=7 {
            let j = g.nearest(r as f64);
            assert!((g.nodes()[j] - r as f64).abs() < 1e-12);
        }
    }
}
