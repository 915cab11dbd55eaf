use crate::error::{Error, Result};
use crate::layout::SupportLayout;
use crate::scalar::Real;

use crate::grid::Grid;
use crate::scalar::Cplx;

use super::fbi::{fbi_transform, PhaseGrid};
use super::flow::{escape_certificate, PhasePoint};
use super::wavefront::{wavefront_mask, WavefrontMask, DEFAULT_DILATION, DEFAULT_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationMode {
    /// Free rays everywhere (`V ≡ 0` with an absorber).
    FreeCap,
    /// Only points whose backward free ray avoids `supp V` are checked.
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationReport<T> {
    pub checked: usize,
    /// Points not covered by the free-ray statement (full mode).
    pub skipped: usize,
    /// Points within `√h` of the absorber, where rays are damped rather than free.
    pub damped: usize,
    pub violations: Vec<PhasePoint<T>>,
}

pub const PROPAGATION_HEADER: &str = "x,xi";

impl<T: Real> PropagationReport<T> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// Violating points, one `x,xi` row each.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{PROPAGATION_HEADER}\n");
        for p in &self.violations {
            out.push_str(&format!("{},{}\n", p.x, p.xi));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationOptions<T> {
    /// Relative mask threshold.
    pub tau: T,
    /// Neighbourhood of the input mask, in cells.
    pub dilation: usize,
    /// Radius containing `supp V` (full mode).
    pub support_radius: T,
    /// Radius where the absorbing potential turns on.
    pub absorber_onset: T,
}

impl<T: Real> PropagationOptions<T> {
    /// `supp V ⊂ B(R₀)` and the absorber starts at `r₄`.
    pub fn for_layout(layout: &SupportLayout<T>) -> Self {
        Self {
            tau: T::lit(DEFAULT_THRESHOLD),
            dilation: DEFAULT_DILATION,
            support_radius: layout.radius(0),
            absorber_onset: layout.radius(4),
        }
    }
}

/// For each point `ρ` of the output mask, checks that the backward free ray
/// `γ_ρ⁻` meets the dilated input mask.
///
/// Free rays keep `ξ` fixed and move `x` against `ξ`, so the test walks the
/// mask row of `ρ` from `x` in the direction of decreasing `t`.
///
/// Points with `|x| > absorber_onset - √h` are counted as damped and not
/// checked: the symbol is elliptic there and the residual content decays in
/// `h` without following free rays.
pub fn propagation_check<T: Real>(
    out: &WavefrontMask<T>,
    input: &WavefrontMask<T>,
    mode: PropagationMode,
    opts: &PropagationOptions<T>,
) -> Result<PropagationReport<T>> {
    if out.phase != input.phase {
        return Err(Error::InvalidParameter("masks live on different phase grids".into()));
    }
    let sh = out.h.sqrt();
    if out.phase.dx > sh || out.phase.dxi > sh {
        return Err(Error::UnderResolved("mask spacing exceeds √h".into()));
    }
    let target = input.dilate(opts.dilation);
    let nx = out.phase.x.len();
    let mut report = PropagationReport { checked: 0, skipped: 0, damped: 0, violations: Vec::new() };
    for (i, j) in out.points() {
        let rho = PhasePoint::new(out.phase.x[i], out.phase.xi[j]);
        if rho.x.abs() > opts.absorber_onset - sh {
            report.damped += 1;
            continue;
        }
        if mode == PropagationMode::Full {
            let clear = rho.x.abs() > opts.support_radius && escape_certificate(rho, opts.support_radius)?;
            if !clear {
                report.skipped += 1;
                continue;
            }
        }
        report.checked += 1;
        let hit = if rho.xi > T::zero() {
            (0..=i).rev().any(|a| target.contains(a, j))
        } else if rho.xi < T::zero() {
            (i..nx).any(|a| target.contains(a, j))
        } else {
            target.contains(i, j)
        };
        if !hit {
            report.violations.push(rho);
        }
    }
    Ok(report)
}

/// Transforms `u_out` and `f` on `phase`, thresholds both at `opts.tau` and
/// runs [`propagation_check`].
pub fn propagation_check_functions<T: Real>(
    u_out: &[Cplx<T>],
    f: &[Cplx<T>],
    grid: &Grid<T>,
    h: T,
    phase: &PhaseGrid<T>,
    mode: PropagationMode,
    opts: &PropagationOptions<T>,
) -> Result<PropagationReport<T>> {
    let out = wavefront_mask(&fbi_transform(u_out, grid, h, phase)?, opts.tau)?;
    let input = wavefront_mask(&fbi_transform(f, grid, h, phase)?, opts.tau)?;
    propagation_check(&out, &input, mode, opts)
}

/// Outcome of the phase-space contradiction argument for `A_∞A_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainReport<T> {
    /// Sampled `ρ` in `T*{r₁ < |x| < r₂}`.
    pub examined: usize,
    /// `ρ` with some `ρ'` on `γ_ρ⁻` in `T*{r₃ < |x| < r₄}`.
    pub with_intermediate: usize,
    /// Chains where `γ_{ρ'}⁻` also reaches `{|x| ≤ r₃}`; each would be a
    /// consistent route into `WF_h(A_∞A_K f)`.
    pub consistent: Vec<(PhasePoint<T>, PhasePoint<T>)>,
}

impl<T: Real> ChainReport<T> {
    /// No consistent chain: the wavefront set of `A_∞A_K f` must be empty.
    pub fn empty_verdict(&self) -> bool {
        self.consistent.is_empty()
    }
}

/// Samples `ρ = (x, ξ)` with `r₁ < |x| < r₂`, `|ξ| ≤ xi_max` and follows the
/// argument: `ρ ∈ WF(A_∞A_K f)` needs `ρ' ∈ γ_ρ⁻` with `r₃ < |x'| < r₄`
/// lying in `WF(A_K f)`, which in turn needs `γ_{ρ'}⁻` to reach
/// `supp χ_K ⊂ {|x| ≤ r₃}`.
pub fn contradiction_chain<T: Real>(layout: &SupportLayout<T>, xi_max: T, n_x: usize, n_xi: usize) -> Result<ChainReport<T>> {
    if n_x < 2 || n_xi < 2 {
        return Err(Error::InvalidParameter("chain sampling needs at least 2 points per axis".into()));
    }
    let (r1, r2, r3, r4) = (layout.radius(1), layout.radius(2), layout.radius(3), layout.radius(4));
    let mut report = ChainReport { examined: 0, with_intermediate: 0, consistent: Vec::new() };
    let frac = |k: usize, n: usize| (T::from_usize_lossy(k) + T::lit(0.5)) / T::from_usize_lossy(n);
    for sign in [-T::one(), T::one()] {
        for a in 0..n_x {
            let x = sign * (r1 + (r2 - r1) * frac(a, n_x));
            for b in 0..n_xi {
                let xi = xi_max * (T::lit(2.0) * frac(b, n_xi) - T::one());
                let rho = PhasePoint::new(x, xi);
                report.examined += 1;
                if xi == T::zero() {
                    continue;
                }
                // γ_ρ⁻ moves x against ξ; it reaches the shell r₃ < |x'| < r₄
                // only when heading outward in backward time
                let backward_dir = -xi.signum();
                if backward_dir != x.signum() {
                    continue;
                }
                report.with_intermediate += 1;
                let mid = sign * (r3 + r4) / T::lit(2.0);
                let rho_prime = PhasePoint::new(mid, xi);
                if !escape_certificate(rho_prime, r3)? {
                    report.consistent.push((rho, rho_prime));
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout_has_no_consistent_chain() {
        let r = contradiction_chain(&SupportLayout::<f64>::default(), 2.0, 20, 40).unwrap();
        assert!(r.with_intermediate > 0);
        assert!(r.empty_verdict());
    }
}
