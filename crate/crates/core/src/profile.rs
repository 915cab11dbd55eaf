//! Smooth cutoff and barrier profiles sampled on a grid.
//!
//! Every profile is a radial step `t ↦ ψ(t)` rescaled to a transition
//! interval `[inner, outer]` in the variable `|x| - k·s` (the shift `k`
//! reproduces the arguments `|x| - s` and `|x| + s`). Values are snapped to
//! multiples of `ε/2` so that `χ_∞ = 1 - χ_K` holds bit-exactly and values
//! below roundoff become exact zeros.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::layout::SupportLayout;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProfileKind {
    /// Outer cutoff χ: 1 on `|x| ≤ r_5`, 0 on `|x| ≥ r_6`.
    Chi,
    /// χ_K: 1 on `r ≤ r_2`, 0 on `r ≥ r_3`.
    ChiK,
    /// χ_∞ = 1 - χ_K.
    ChiInf,
    /// Barrier W: 0 on `|x| ≤ r_4`, 1 on `|x| ≥ r_5`.
    BarrierW,
    /// Outgoing absorber: 0 on `|x| ≤ r_6`, 1 on the collar.
    OuterAbsorber,
}

impl ProfileKind {
    fn rises(self) -> bool {
        matches!(self, ProfileKind::ChiInf | ProfileKind::BarrierW | ProfileKind::OuterAbsorber)
    }
}

/// Transition template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Transition {
    /// `exp(-1/t) / (exp(-1/t) + exp(-1/(1-t)))`, C^∞.
    #[default]
    Smooth,
    /// Polynomial smoothstep of class C^k.
    Polynomial(u32),
}

impl Transition {
    /// Step from 0 (t ≤ 0) to 1 (t ≥ 1).
    pub fn step<T: Real>(self, t: T) -> T {
        if t <= T::zero() {
            return T::zero();
        }
        if t >= T::one() {
            return T::one();
        }
        match self {
            Transition::Smooth => {
                let expo = (T::one() - T::lit(2.0) * t) / (t * (T::one() - t));
                T::one() / (T::one() + expo.exp())
            }
            Transition::Polynomial(k) => smoothstep(k, t),
        }
    }
}

fn smoothstep<T: Real>(k: u32, t: T) -> T {
    let k = k as i64;
    let binom = |n: i64, r: i64| -> f64 {
        (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    };
    let mut sum = T::zero();
    for j in 0..=k {
        let c = binom(k + j, j) * binom(2 * k + 1, k - j);
        sum = sum + T::lit(c) * (-t).powi(j as i32);
    }
    t.powi(k as i32 + 1) * sum
}

fn snap<T: Real>(v: T) -> T {
    let q = T::profile_quantum();
    (v / q).round() * q
}

/// A sampled radial profile.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffProfile<T> {
    pub kind: ProfileKind,
    /// Transition interval in `|x|` (already shifted).
    pub inner: T,
    pub outer: T,
    /// Profile is evaluated at `|x| - shift·s`.
    pub shift: i32,
    pub transition: Transition,
    pub values: Vec<T>,
}

impl<T: Real> CutoffProfile<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Constant profile, used for `χ ≡ 1` and `W ≡ 0` controls.
    pub fn constant(kind: ProfileKind, n: usize, value: T) -> Self {
        Self {
            kind,
            inner: T::zero(),
            outer: T::zero(),
            shift: 0,
            transition: Transition::Smooth,
            values: vec![value; n],
        }
    }

    /// Pointwise complement `1 - self`, exact on snapped values.
    pub fn complement(&self, kind: ProfileKind) -> Self {
        Self {
            kind,
            values: self.values.iter().map(|&v| T::one() - v).collect(),
            ..self.clone()
        }
    }

    /// Node indices where the profile is neither 0 nor 1.
    pub fn transition_nodes(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != T::zero() && v != T::one())
            .map(|(i, _)| i)
            .collect()
    }
}

/// Samples `kind` on `grid`, evaluated at `|x| - shift·s`.
pub fn make_profile<T: Real>(
    kind: ProfileKind,
    layout: &SupportLayout<T>,
    grid: &Grid<T>,
    shift: i32,
    transition: Transition,
) -> Result<CutoffProfile<T>> {
    let (lo, hi) = match kind {
        ProfileKind::Chi => (layout.radius(5), layout.radius(6)),
        ProfileKind::ChiK | ProfileKind::ChiInf => (layout.radius(2), layout.radius(3)),
        ProfileKind::BarrierW => (layout.radius(4), layout.radius(5)),
        ProfileKind::OuterAbsorber => (layout.radius(6), layout.collar_start()),
    };
    let delta = T::lit(shift as f64) * layout.offset;
    let (inner, outer) = (lo + delta, hi + delta);
    if !(inner > T::zero()) || !(inner < outer) {
        return Err(Error::LayoutViolation(format!(
            "{kind:?} transition [{inner}, {outer}] is not an ordered positive interval"
        )));
    }
    if outer > grid.half_length() {
        return Err(Error::LayoutViolation(format!(
            "{kind:?} transition ends at {outer}, beyond the grid half-length {}",
            grid.half_length()
        )));
    }
    let width = outer - inner;
    let falling = |x: T| snap(T::one() - transition.step((x.abs() - inner) / width));
    let values = if kind == ProfileKind::ChiInf {
        // built from χ_K so the complement is exact
        grid.sample(falling).into_iter().map(|v| T::one() - v).collect()
    } else if kind.rises() {
        grid.sample(|x| snap(transition.step((x.abs() - inner) / width)))
    } else {
        grid.sample(falling)
    };
    Ok(CutoffProfile { kind, inner, outer, shift, transition, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn setup() -> (SupportLayout<f64>, Grid<f64>) {
        let layout = SupportLayout::default();
        let grid = make_grid(13.0, 0.01).unwrap();
        (layout, grid)
    }

    fn check_regions(p: &CutoffProfile<f64>, g: &Grid<f64>, a: f64, b: f64, inside: f64) {
        for (x, v) in g.nodes().iter().zip(&p.values) {
            assert!((0.0..=1.0).contains(v));
            if x.abs() <= a {
                assert_eq!(*v, inside, "x = {x}");
            } else if x.abs() >= b {
                assert_eq!(*v, 1.0 - inside, "x = {x}");
            }
        }
    }

    #[test]
    fn chi_k_regions() {
        let (l, g) = setup();
        let p = make_profile(ProfileKind::ChiK, &l, &g, 0, Transition::Smooth).unwrap();
        check_regions(&p, &g, 3.0, 4.0, 1.0);
        let shifted = make_profile(ProfileKind::ChiK, &l, &g, 1, Transition::Smooth).unwrap();
        check_regions(&shifted, &g, 4.0, 5.0, 1.0);
    }

    #[test]
    fn barrier_and_chi_regions() {
        let (l, g) = setup();
        let w = make_profile(ProfileKind::BarrierW, &l, &g, 0, Transition::Smooth).unwrap();
        check_regions(&w, &g, 5.0, 6.0, 0.0);
        let chi = make_profile(ProfileKind::Chi, &l, &g, 0, Transition::Smooth).unwrap();
        check_regions(&chi, &g, 6.0, 7.0, 1.0);
        let wout = make_profile(ProfileKind::OuterAbsorber, &l, &g, 0, Transition::Smooth).unwrap();
        check_regions(&wout, &g, 7.0, 9.0, 0.0);
    }

    #[test]
    fn complement_is_exact() {
        let (l, g) = setup();
        for shift in [-1, 0, 1] {
            let k = make_profile(ProfileKind::ChiK, &l, &g, shift, Transition::Smooth).unwrap();
            let inf = make_profile(ProfileKind::ChiInf, &l, &g, shift, Transition::Smooth).unwrap();
            let worst = k
                .values
                .iter()
                .zip(&inf.values)
                .map(|(a, b)| (a + b - 1.0).abs())
                .fold(0.0, f64::max);
            assert_eq!(worst, 0.0);
        }
    }

    #[test]
    fn transition_strictly_inside() {
        let (l, g) = setup();
        let p = make_profile(ProfileKind::ChiInf, &l, &g, -1, Transition::Smooth).unwrap();
        let t = p.transition_nodes();
        assert!(!t.is_empty());
        for i in t {
            let r = g.nodes()[i].abs();
            assert!(r > 2.0 && r < 3.0);
        }
    }

    #[test]
    fn ordering_violation() {
        let l = SupportLayout { r0: 0.5, offset: 1.0, absorber_width: 4.0, half_length: 13.0 };
        let g = make_grid(13.0, 0.01).unwrap();
        assert!(make_profile(ProfileKind::ChiInf, &l, &g, -3, Transition::Smooth).is_err());
        let small = make_grid(6.0, 0.01).unwrap();
        assert!(make_profile(ProfileKind::Chi, &l, &small, 0, Transition::Smooth).is_err());
    }

    #[test]
    fn polynomial_steps_are_monotone_and_symmetric() {
        for k in 0..5 {
            let tr = Transition::Polynomial(k);
            let mut prev = 0.0;
            for i in 0..=100 {
                let t = i as f64 / 100.0;
                let v: f64 = tr.step(t);
                assert!(v >= prev - 1e-14);
                assert!((v + tr.step(1.0 - t) - 1.0).abs() < 1e-12);
                prev = v;
            }
        }
        assert!((Transition::Smooth.step(0.5_f64) - 0.5).abs() < 1e-15);
    }
}
