//! Nested support radii for the potential, cutoffs and absorbers.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Radii `r_k = R0 + k·s` (k = 1..6) plus the outer absorbing collar.
///
/// `supp V ⊂ {|x| < R0}`; the gluing cutoffs transition on `(r_1, r_2)`,
/// `(r_2, r_3)`, `(r_3, r_4)`; the barrier `W` switches on across
/// `(r_4, r_5)`; the outer cutoff `χ` switches off across `(r_5, r_6)`;
/// the outgoing absorber switches on across `(r_6, L - absorber_width)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportLayout<T> {
    pub r0: T,
    pub offset: T,
    pub absorber_width: T,
    pub half_length: T,
}

impl<T: Real> Default for SupportLayout<T> {
    fn default() -> Self {
        Self {
            r0: T::one(),
            offset: T::one(),
            absorber_width: T::lit(4.0),
            half_length: T::lit(13.0),
        }
    }
}

impl<T: Real> SupportLayout<T> {
    pub fn new(r0: T, offset: T, absorber_width: T, half_length: T) -> Result<Self> {
        let layout = Self { r0, offset, absorber_width, half_length };
        layout.validate()?;
        Ok(layout)
    }

    /// `r_k = R0 + k·s`.
    pub fn radius(&self, k: i32) -> T {
        self.r0 + T::lit(k as f64) * self.offset
    }

    /// Radius where the outgoing absorber reaches full strength.
    pub fn collar_start(&self) -> T {
        self.half_length - self.absorber_width
    }

    /// Gap between `r_6` and the collar.
    pub fn box_margin(&self) -> T {
        self.collar_start() - self.radius(6)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > T::zero()) || !(self.offset > T::zero()) || !(self.absorber_width > T::zero()) {
            return Err(Error::LayoutViolation(format!(
                "R0 = {}, s = {}, absorber width = {} must all be positive",
                self.r0, self.offset, self.absorber_width
            )));
        }
        if !(self.radius(6) < self.collar_start()) {
            return Err(Error::LayoutViolation(format!(
                "r_6 = {} must lie below L - absorber_width = {}",
                self.radius(6),
                self.collar_start()
            )));
        }
        Ok(())
    }

    /// Grid spacing for semiclassical parameter `h`: the largest `s/m`
    /// (m integer) not exceeding `h/10`, so every `r_k` and `±L` fall on
    /// nodes when `R0` and `L` are multiples of `s`.
    pub fn spacing_for(&self, h: T) -> T {
        let m = (T::lit(10.0) * self.offset / h).ceil();
        self.offset / m
    }

    /// Same layout with the box extended by `extra` (absorber distance grows).
    pub fn extended(&self, extra: T) -> Self {
        Self { half_length: self.half_length + extra, ..*self }
    }
}
