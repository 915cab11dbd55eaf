use std::fmt::Write as _;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::{Cplx, Real};

/// Rectangular `(x, ξ)` sampling grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid<T> {
    pub x: Vec<T>,
    pub xi: Vec<T>,
    pub dx: T,
    pub dxi: T,
}

impl<T: Real> PhaseGrid<T> {
    /// Every `stride`-th spatial node, and `ξ ∈ [-xi_max, xi_max]` at
    /// spacing `dxi`. Both spacings must resolve the window scale `√h`.
    pub fn new(grid: &Grid<T>, stride: usize, xi_max: T, dxi: T, h: T) -> Result<Self> {
        let dx = grid.spacing() * T::from_usize_lossy(stride.max(1));
        let sh = h.sqrt();
        if dx > sh || dxi > sh || !(dxi > T::zero()) {
            return Err(Error::UnderResolved(format!("phase spacings ({dx}, {dxi}) must not exceed √h = {sh}")));
        }
        let x = grid.nodes().iter().step_by(stride.max(1)).copied().collect();
        let m = (xi_max / dxi).ceil().to_usize().unwrap_or(0);
        let xi = (0..=2 * m).map(|j| dxi * (T::from_usize_lossy(j) - T::from_usize_lossy(m))).collect();
        Ok(Self { x, xi, dx, dxi })
    }

    /// Default sampling: `x` every 4 nodes, `ξ` at `√h/4` up to
    /// `1.25·√(E + max V) + 8√h`.
    pub fn standard(grid: &Grid<T>, h: T, energy: T, max_v: T) -> Result<Self> {
        let sh = h.sqrt();
        let xi_max = T::lit(1.25) * (energy + max_v.max(T::zero())).sqrt() + T::lit(8.0) * sh;
        Self::new(grid, 4, xi_max, sh / T::lit(4.0), h)
    }

    pub fn len(&self) -> usize {
        self.x.len() * self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn xi_max(&self) -> T {
        self.xi.last().copied().unwrap_or(T::zero())
    }

    /// Flat index of `(i, j)`: `x` major.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.xi.len() + j
    }

    pub fn nearest(&self, x: T, xi: T) -> (usize, usize) {
        let near = |v: &[T], t: T| {
            v.iter()
                .enumerate()
                .min_by(|a, b| (*a.1 - t).abs().partial_cmp(&(*b.1 - t).abs()).unwrap_or(std::cmp::Ordering::Equal))
                .map(|(k, _)| k)
                .unwrap_or(0)
        };
        (near(&self.x, x), near(&self.xi, xi))
    }
}

/// `|T_h u|` sampled on a phase grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeField<T> {
    pub phase: PhaseGrid<T>,
    pub amp: Vec<T>,
    pub h: T,
    /// `‖u‖` of the transformed function.
    pub input_norm: T,
}

pub const AMPLITUDE_HEADER: &str = "x,xi,amp";

impl<T: Real> AmplitudeField<T> {
    pub fn get(&self, i: usize, j: usize) -> T {
        self.amp[self.phase.index(i, j)]
    }

    pub fn max(&self) -> T {
        self.amp.iter().copied().fold(T::zero(), T::max)
    }

    pub fn argmax(&self) -> (usize, usize) {
        let k = self
            .amp
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(k, _)| k)
            .unwrap_or(0);
        (k / self.phase.xi.len(), k % self.phase.xi.len())
    }

    /// `∫∫ |T u|² dx dξ`.
    pub fn phase_norm_sq(&self) -> T {
        self.amp.iter().map(|a| *a * *a).sum::<T>() * self.phase.dx * self.phase.dxi
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(AMPLITUDE_HEADER);
        out.push('\n');
        for (i, x) in self.phase.x.iter().enumerate() {
            for (j, xi) in self.phase.xi.iter().enumerate() {
                let _ = writeln!(out, "{x},{xi},{}", self.get(i, j));
            }
        }
        out
    }
}

/// Normalized coherent state `(πh)^{-1/4} e^{iξ₀(y-x₀)/h - (y-x₀)²/(2h)}`.
pub fn coherent_state<T: Real>(grid: &Grid<T>, h: T, x0: T, xi0: T) -> Vec<Cplx<T>> {
    let c = (T::PI() * h).powf(T::lit(-0.25));
    grid.nodes()
        .iter()
        .map(|&y| {
            let d = y - x0;
            Complex::from_polar(c * (-(d * d) / (h + h)).exp(), xi0 * d / h)
        })
        .collect()
}

/// `T_h u(x, ξ) = c_h ∫ e^{i(x-y)ξ/h - (x-y)²/(2h)} u(y) dy` with
/// `c_h = 2^{-1/2} (πh)^{-3/4}`, which makes `T_h` an isometry
/// `L²(ℝ) → L²(ℝ², dx dξ)`. The window is truncated at `|x - y| ≤ 8√h`.
pub fn fbi_transform<T: Real>(u: &[Cplx<T>], grid: &Grid<T>, h: T, phase: &PhaseGrid<T>) -> Result<AmplitudeField<T>> {
    if u.len() != grid.len() {
        return Err(Error::GridMismatch { expected: grid.len(), found: u.len() });
    }
    let sh = h.sqrt();
    if phase.dx > sh || phase.dxi > sh {
        return Err(Error::UnderResolved(format!("phase spacings exceed √h = {sh}")));
    }
    let dy = grid.spacing();
    let c = T::lit(std::f64::consts::FRAC_1_SQRT_2) * (T::PI() * h).powf(T::lit(-0.75)) * dy;
    let reach = T::lit(8.0) * sh;
    let nodes = grid.nodes();
    let n_xi = phase.xi.len();
    let xi0 = phase.xi[0];
    let dxi = phase.dxi;
    let rows: Vec<Vec<T>> = phase
        .x
        .par_iter()
        .map(|&x| {
            let lo = grid.nearest(x - reach);
            let hi = grid.nearest(x + reach);
            // weights for ξ = ξ₀, then multiplied by e^{i(x-y)Δξ/h} per step
            let mut w: Vec<Cplx<T>> = Vec::with_capacity(hi + 1 - lo);
            let mut step: Vec<Cplx<T>> = Vec::with_capacity(hi + 1 - lo);
            for k in lo..=hi {
                let d = x - nodes[k];
                let g = (-(d * d) / (h + h)).exp() * c;
                w.push(u[k] * Complex::from_polar(g, d * xi0 / h));
                step.push(Complex::from_polar(T::one(), d * dxi / h));
            }
            let mut row = Vec::with_capacity(n_xi);
            for _ in 0..n_xi {
                let s: Cplx<T> = w.iter().fold(Complex::new(T::zero(), T::zero()), |acc, z| acc + z);
                row.push(s.norm());
                w.iter_mut().zip(&step).for_each(|(a, b)| *a = *a * *b);
            }
            row
        })
        .collect();
    Ok(AmplitudeField {
        phase: phase.clone(),
        amp: rows.into_iter().flatten().collect(),
        h,
        input_norm: grid.l2_norm(u),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn coherent_state_peaks_at_centre() {
        let h = 0.05;
        let g = make_grid(13.0_f64, 0.005).unwrap();
        let u = coherent_state(&g, h, 2.0, -0.7);
        assert!((g.l2_norm(&u) - 1.0).abs() < 1e-10);
        let ph = PhaseGrid::standard(&g, h, 1.0, 0.0).unwrap();
        let f = fbi_transform(&u, &g, h, &ph).unwrap();
        let (i, j) = f.argmax();
        assert!((f.phase.x[i] - 2.0).abs() <= f.phase.dx);
        assert!((f.phase.xi[j] + 0.7).abs() <= f.phase.dxi);
        // |T φ| at the centre is (2πh)^{-1/2}
        assert!((f.max() * (2.0 * std::f64::consts::PI * h).sqrt() - 1.0).abs() < 1e-2);
        assert!((f.phase_norm_sq() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn coarse_phase_grid_rejected() {
        let g = make_grid(13.0, 0.01).unwrap();
        assert!(matches!(PhaseGrid::new(&g, 4, 2.0, 0.5, 0.1), Err(Error::UnderResolved(_))));
    }
}
