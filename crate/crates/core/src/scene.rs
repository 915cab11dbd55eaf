//! A physical configuration (layout, potential, energy) and its
//! discretization at a given `h`.

use std::fmt;

use crate::band::BandMatrix;
use crate::error::{Error, Result};
use crate::grid::{make_grid, Grid};
use crate::layout::SupportLayout;
use crate::operator::{assemble_p, attach_absorber, commutator_with_cutoff, with_extra_absorber, DiscreteOperator, Stencil};
use crate::potential::{PotentialFamily, PotentialSpec};
use crate::profile::{make_profile, CutoffProfile, ProfileKind, Transition};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scene<T> {
    pub layout: SupportLayout<T>,
    pub potential: PotentialFamily<T>,
    /// Reference energy `E > 0`.
    pub energy: T,
    pub stencil: Stencil,
    pub transition: Transition,
}

impl<T: Real> Scene<T> {
    pub fn new(layout: SupportLayout<T>, potential: PotentialFamily<T>, energy: T) -> Result<Self> {
        let scene = Self {
            layout,
            potential,
            energy,
            stencil: Stencil::default(),
            transition: Transition::default(),
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        self.layout.validate()?;
        self.potential.check_support(self.layout.r0)?;
        if !(self.energy > T::zero()) {
            return Err(Error::InvalidParameter(format!("energy must be positive, got {}", self.energy)));
        }
        Ok(())
    }

    pub fn grid_for(&self, h: T) -> Result<Grid<T>> {
        make_grid(self.layout.half_length, self.layout.spacing_for(h))
    }

    pub fn discretize(&self, h: T) -> Result<Discretization<T>> {
        self.discretize_on(self.grid_for(h)?, h)
    }

    /// Discretizes on a caller-chosen grid (dense oracle sizes).
    pub fn discretize_on(&self, grid: Grid<T>, h: T) -> Result<Discretization<T>> {
        if (grid.half_length() - self.layout.half_length).abs() > T::epsilon() * self.layout.half_length {
            return Err(Error::InvalidParameter("grid half-length differs from layout".into()));
        }
        let potential = self.potential.sample(&grid);
        let p = assemble_p(&grid, &potential, h, self.stencil)?;
        let p0 = assemble_p(&grid, &PotentialSpec::zero(grid.len()), h, self.stencil)?;
        let mk = |kind, shift| make_profile(kind, &self.layout, &grid, shift, self.transition);
        let profiles = Profiles {
            chi: mk(ProfileKind::Chi, 0)?,
            chi_k: mk(ProfileKind::ChiK, 0)?,
            chi_k_out: mk(ProfileKind::ChiK, 1)?,
            chi_inf: mk(ProfileKind::ChiInf, 0)?,
            chi_inf_in: mk(ProfileKind::ChiInf, -1)?,
            barrier: mk(ProfileKind::BarrierW, 0)?,
            outer_absorber: mk(ProfileKind::OuterAbsorber, 0)?,
        };
        Ok(Discretization { grid, h, energy: self.energy, potential, p, p0, profiles })
    }

    /// Same scene with the box (and hence the absorber distance) enlarged.
    pub fn extended(&self, extra: T) -> Self {
        Self { layout: self.layout.extended(extra), ..*self }
    }
}

/// Profiles of one discretization. `chi_k_out` is `χ_K(|x| - s)`,
/// `chi_inf_in` is `χ_∞(|x| + s)`.
#[derive(Debug, Clone)]
pub struct Profiles<T> {
    pub chi: CutoffProfile<T>,
    pub chi_k: CutoffProfile<T>,
    pub chi_k_out: CutoffProfile<T>,
    pub chi_inf: CutoffProfile<T>,
    pub chi_inf_in: CutoffProfile<T>,
    pub barrier: CutoffProfile<T>,
    pub outer_absorber: CutoffProfile<T>,
}

/// Which discrete operator realizes a resolvent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Realization {
    /// `P - i·W_out`: the outgoing resolvent `R(λ)` seen through `χ`.
    Outgoing,
    /// `P_W = P - i·W`.
    Cap,
    /// `P_{W,0} = P0 - i·W`.
    FreeCap,
    /// `P0 - i·W_out`: the outgoing free resolvent `R_0(λ)`.
    FreeOutgoing,
    /// `P` with Dirichlet ends only.
    Bare,
}

impl Realization {
    pub fn label(self) -> &'static str {
        match self {
            Realization::Outgoing => "R_out",
            Realization::Cap => "R_W",
            Realization::FreeCap => "R_W0",
            Realization::FreeOutgoing => "R0_out",
            Realization::Bare => "R_box",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        [Self::Outgoing, Self::Cap, Self::FreeCap, Self::FreeOutgoing, Self::Bare]
            .into_iter()
            .find(|r| r.label() == s)
    }
}

impl fmt::Display for Realization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone)]
pub struct Discretization<T> {
    pub grid: Grid<T>,
    pub h: T,
    pub energy: T,
    pub potential: PotentialSpec<T>,
    pub p: DiscreteOperator<T>,
    pub p0: DiscreteOperator<T>,
    pub profiles: Profiles<T>,
}

fn is_zero_product<T: Real>(a: &[T], b: &[T]) -> bool {
    a.iter().zip(b).all(|(x, y)| *x * *y == T::zero())
}

/// `diag(d)·B == 0` exactly.
fn kills_rows<T: Real>(d: &[T], b: &BandMatrix<T>) -> bool {
    b.nonzero_rows().into_iter().all(|i| d[i] == T::zero())
}

impl<T: Real> Discretization<T> {
    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    pub fn operator(&self, which: Realization) -> Result<DiscreteOperator<T>> {
        let pr = &self.profiles;
        match which {
            Realization::Outgoing => with_extra_absorber(&self.p, &pr.outer_absorber),
            Realization::Cap => attach_absorber(&self.p, &pr.barrier),
            Realization::FreeCap => attach_absorber(&self.p0, &pr.barrier),
            Realization::FreeOutgoing => with_extra_absorber(&self.p0, &pr.outer_absorber),
            Realization::Bare => Ok(self.p.clone()),
        }
    }

    /// Verifies, exactly on this grid and stencil, the support relations the
    /// gluing algebra relies on.
    pub fn check_layout(&self) -> Result<()> {
        let pr = &self.profiles;
        let comm_k = commutator_with_cutoff(&self.p, &pr.chi_k_out)?;
        let comm_inf = commutator_with_cutoff(&self.p, &pr.chi_inf_in)?;
        let fail = |what: &str| Err(Error::LayoutViolation(format!("{what} fails at stencil resolution")));
        if !kills_rows(&pr.chi_k.values, &comm_k.band) {
            return fail("χ_K(|x|)·[P, χ_K(|x|-s)] = 0");
        }
        if !kills_rows(&pr.chi_inf.values, &comm_inf.band) {
            return fail("χ_∞(|x|)·[P, χ_∞(|x|+s)] = 0");
        }
        // shifted cutoffs equal 1 on the support of the unshifted ones
        let absorbs = |outer: &[T], inner: &[T]| outer.iter().zip(inner).all(|(o, i)| *i == T::zero() || *o == T::one());
        if !absorbs(&pr.chi_k_out.values, &pr.chi_k.values) {
            return fail("χ_K(|x|-s) = 1 on supp χ_K(|x|)");
        }
        if !absorbs(&pr.chi_inf_in.values, &pr.chi_inf.values) {
            return fail("χ_∞(|x|+s) = 1 on supp χ_∞(|x|)");
        }
        if !is_zero_product(&pr.chi_inf_in.values, &self.potential.values) {
            return fail("V·χ_∞(|x|+s) = 0");
        }
        if !is_zero_product(&pr.chi_k_out.values, &pr.barrier.values) {
            return fail("W·χ_K(|x|-s) = 0");
        }
        if !is_zero_product(&pr.chi_k_out.values, &pr.outer_absorber.values) {
            return fail("W_out·χ_K(|x|-s) = 0");
        }
        if !is_zero_product(&pr.chi.values, &pr.outer_absorber.values) {
            return fail("W_out·χ = 0");
        }
        // commutator supports must not touch each other either
        let rows_k = comm_k.band.nonzero_rows();
        let rows_inf = comm_inf.band.nonzero_rows();
        if rows_k.iter().any(|i| rows_inf.contains(i)) {
            return fail("disjoint commutator supports");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::OperatorTag;

    fn nontrap() -> Scene<f64> {
        Scene::new(
            SupportLayout::default(),
            PotentialFamily::NontrapBump { amplitude: 0.5, width: 1.0 },
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn default_layout_passes_on_sweep_grids() {
        let s = nontrap();
        for &h in &[0.1, 0.07, 0.05] {
            s.discretize(h).unwrap().check_layout().unwrap();
        }
    }

    #[test]
    fn dense_oracle_grid_passes() {
        let s = nontrap();
        let g = make_grid(13.0, 1.0 / 12.0).unwrap();
        assert_eq!(g.len(), 313);
        s.discretize_on(g, 0.5).unwrap().check_layout().unwrap();
    }

    #[test]
    fn misaligned_grid_is_caught() {
        // radii fall between nodes, so cutoff tails leak across one stencil cell
        let g = make_grid(13.0, 26.0 / 299.0).unwrap();
        let d = nontrap().discretize_on(g, 0.5).unwrap();
        assert!(matches!(d.check_layout(), Err(Error::LayoutViolation(_))));
    }

    #[test]
    fn collapsed_offset_is_a_violation() {
        let layout = SupportLayout { r0: 1.0, offset: 0.02, absorber_width: 4.0, half_length: 13.0 };
        let s = Scene::new(layout, PotentialFamily::NontrapBump { amplitude: 0.5, width: 1.0 }, 1.0).unwrap();
        let g = make_grid(13.0, 0.05).unwrap();
        let d = s.discretize_on(g, 0.5).unwrap();
        assert!(matches!(d.check_layout(), Err(Error::LayoutViolation(_))));
    }

    #[test]
    fn realizations_have_expected_tags() {
        let d = nontrap().discretize(0.1).unwrap();
        assert_eq!(d.operator(Realization::Cap).unwrap().tag, OperatorTag::PW);
        assert_eq!(d.operator(Realization::FreeCap).unwrap().tag, OperatorTag::PW0);
        assert_eq!(Realization::from_label("R_W0"), Some(Realization::FreeCap));
    }
}
