//! Discrete semiclassical Schrödinger operators `-h²Δ + V`, absorbers and
//! commutators with cutoffs.

use std::fmt;

use num_complex::Complex;

use crate::band::BandMatrix;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::potential::PotentialSpec;
use crate::profile::CutoffProfile;
use crate::scalar::{Cplx, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorTag {
    P,
    P0,
    PW,
    PW0,
    Custom,
}

impl fmt::Display for OperatorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OperatorTag::P => "P",
            OperatorTag::P0 => "P0",
            OperatorTag::PW => "PW",
            OperatorTag::PW0 => "PW0",
            OperatorTag::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// Finite-difference stencil for `-Δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stencil {
    /// Second-order `(-1, 2, -1)/dx²`.
    #[default]
    ThreePoint,
    /// Fourth-order `(1, -16, 30, -16, 1)/(12 dx²)`.
    FivePoint,
}

impl Stencil {
    pub fn half_width(self) -> usize {
        match self {
            Stencil::ThreePoint => 1,
            Stencil::FivePoint => 2,
        }
    }

    fn coefficients(self) -> &'static [f64] {
        match self {
            Stencil::ThreePoint => &[2.0, -1.0],
            Stencil::FivePoint => &[30.0 / 12.0, -16.0 / 12.0, 1.0 / 12.0],
        }
    }
}

/// Banded complex matrix realizing one of `P`, `P0`, `PW`, `PW0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator<T> {
    pub band: BandMatrix<T>,
    pub h: T,
    pub dx: T,
    pub tag: OperatorTag,
}

impl<T: Real> DiscreteOperator<T> {
    pub fn dim(&self) -> usize {
        self.band.dim()
    }

    pub fn apply(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>> {
        self.band.mul_vec(x)
    }

    /// `self - λ·Id` as a band matrix.
    pub fn shifted(&self, lambda: Cplx<T>) -> BandMatrix<T> {
        let mut b = self.band.clone();
        b.add_diagonal(|_| -lambda);
        b
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::GridMismatch { expected: self.dim(), found: n });
        }
        Ok(())
    }
}

/// Assembles `-h²Δ + V` with homogeneous Dirichlet values one cell beyond
/// each end node. Tagged `P0` when the potential vanishes identically.
pub fn assemble_p<T: Real>(
    grid: &Grid<T>,
    potential: &PotentialSpec<T>,
    h: T,
    stencil: Stencil,
) -> Result<DiscreteOperator<T>> {
    if !(h > T::zero()) {
        return Err(Error::InvalidParameter(format!("h must be positive, got {h}")));
    }
    let n = grid.len();
    if potential.values.len() != n {
        return Err(Error::GridMismatch { expected: n, found: potential.values.len() });
    }
    let dx = grid.spacing();
    let scale = h * h / (dx * dx);
    let hw = stencil.half_width();
    let coeffs = stencil.coefficients();
    let mut band = BandMatrix::zeros(n, hw, hw);
    for i in 0..n {
        for (off, c) in coeffs.iter().enumerate() {
            let v = Complex::new(scale * T::lit(*c), T::zero());
            if off == 0 {
                band.set(i, i, v + Complex::new(potential.values[i], T::zero()));
            } else {
                if i >= off {
                    band.set(i, i - off, v);
                }
                if i + off < n {
                    band.set(i, i + off, v);
                }
            }
        }
    }
    let tag = if potential.is_zero() { OperatorTag::P0 } else { OperatorTag::P };
    Ok(DiscreteOperator { band, h, dx, tag })
}

/// `op - i·diag(W)`; tag `P → PW`, `P0 → PW0`.
pub fn attach_absorber<T: Real>(op: &DiscreteOperator<T>, w: &CutoffProfile<T>) -> Result<DiscreteOperator<T>> {
    let tag = match op.tag {
        OperatorTag::P => OperatorTag::PW,
        OperatorTag::P0 => OperatorTag::PW0,
        other => return Err(Error::BadTag(other.to_string())),
    };
    op.check_len(w.len())?;
    let mut band = op.band.clone();
    band.add_diagonal(|i| Complex::new(T::zero(), -w.values[i]));
    Ok(DiscreteOperator { band, tag, ..op.clone() })
}

/// Subtracts `i·diag(W)` without tag bookkeeping (used for auxiliary
/// outgoing absorbers that sit outside the layout).
pub fn with_extra_absorber<T: Real>(op: &DiscreteOperator<T>, w: &CutoffProfile<T>) -> Result<DiscreteOperator<T>> {
    op.check_len(w.len())?;
    let mut band = op.band.clone();
    band.add_diagonal(|i| Complex::new(T::zero(), -w.values[i]));
    Ok(DiscreteOperator { band, tag: OperatorTag::Custom, ..op.clone() })
}

/// `op·diag(χ) - diag(χ)·op`, entry `(i, j)` computed as `a_ij χ_j - χ_i a_ij`.
pub fn commutator_with_cutoff<T: Real>(
    op: &DiscreteOperator<T>,
    profile: &CutoffProfile<T>,
) -> Result<DiscreteOperator<T>> {
    op.check_len(profile.len())?;
    let chi = &profile.values;
    let band = op.band.map(|i, j, a| {
        let cj = Complex::new(chi[j], T::zero());
        let ci = Complex::new(chi[i], T::zero());
        a * cj - ci * a
    });
    Ok(DiscreteOperator { band, tag: OperatorTag::Custom, ..op.clone() })
}
