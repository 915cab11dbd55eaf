//! Cutoff-resolvent norms and the empirical `a(h)` curve.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::factor::{factorize_shifted, Factorization};
use crate::fit::{linear_fit, scaling_fit, ScalingFit};
use crate::linmap::{largest_singular_value, CutoffResolvent, PowerOptions, SingularEstimate};
use crate::scalar::{cplx, Cplx, Real};
use crate::scene::{Discretization, Realization, Scene};

/// A spectral parameter together with the reference energy and `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint<T> {
    pub lambda: Cplx<T>,
    pub energy: T,
    pub h: T,
}

impl<T: Real> SpectralPoint<T> {
    pub fn at_energy(energy: T, h: T) -> Self {
        Self { lambda: cplx(energy, T::zero()), energy, h }
    }

    pub fn distance_to_energy(&self) -> T {
        (self.lambda - cplx(self.energy, T::zero())).norm()
    }
}

/// Largest singular value of `diag(left)·A⁻¹·diag(right)`.
pub fn cutoff_norm<T: Real>(
    fact: &Factorization<T>,
    left: &[T],
    right: &[T],
    power: &PowerOptions<T>,
) -> Result<SingularEstimate<T>> {
    let n = fact.dim();
    for v in [left, right] {
        if v.len() != n {
            return Err(Error::GridMismatch { expected: n, found: v.len() });
        }
    }
    if !(power.tol > T::zero()) {
        return Err(Error::InvalidParameter("power-iteration tolerance must be positive".into()));
    }
    largest_singular_value(&CutoffResolvent { fact, left, right }, power)
}

/// Which cutoff brackets the resolvent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cutoff {
    /// The layout's `χ` on both sides.
    Chi,
    /// No cutoff.
    Identity,
}

/// `‖c·(op - λ)⁻¹·c‖` for one realization on one discretization.
pub fn resolvent_norm<T: Real>(
    disc: &Discretization<T>,
    which: Realization,
    lambda: Cplx<T>,
    cutoff: Cutoff,
    power: &PowerOptions<T>,
) -> Result<SingularEstimate<T>> {
    let op = disc.operator(which)?;
    let fact = factorize_shifted(&op, lambda)?;
    let ones;
    let c: &[T] = match cutoff {
        Cutoff::Chi => &disc.profiles.chi.values,
        Cutoff::Identity => {
            ones = vec![T::one(); disc.dim()];
            &ones
        }
    };
    cutoff_norm(&fact, c, c, power)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOptions<T> {
    pub power: PowerOptions<T>,
    /// Re-run with an enlarged box and compare.
    pub check_stability: bool,
    pub stability_extension: T,
    pub stability_tol: T,
}

impl<T: Real> Default for NormOptions<T> {
    fn default() -> Self {
        Self {
            power: PowerOptions::default(),
            check_stability: true,
            stability_extension: T::lit(4.0),
            stability_tol: T::lit(1e-3),
        }
    }
}

/// Cutoff norm together with its absorber-placement stability check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableNorm<T> {
    pub estimate: SingularEstimate<T>,
    pub extended: Option<SingularEstimate<T>>,
    pub relative_change: Option<T>,
}

impl<T: Real> StableNorm<T> {
    pub fn value(&self) -> T {
        self.estimate.value
    }
}

/// `‖χ·(op - λ)⁻¹·χ‖` with the stability check under `L → L + extension`.
/// Fails with [`Error::Unstable`] when the relative change exceeds the
/// tolerance.
pub fn stable_cutoff_norm<T: Real>(
    scene: &Scene<T>,
    h: T,
    which: Realization,
    lambda: Cplx<T>,
    opts: &NormOptions<T>,
) -> Result<StableNorm<T>> {
    let disc = scene.discretize(h)?;
    disc.check_layout()?;
    let estimate = resolvent_norm(&disc, which, lambda, Cutoff::Chi, &opts.power)?;
    if !opts.check_stability {
        return Ok(StableNorm { estimate, extended: None, relative_change: None });
    }
    let far = scene.extended(opts.stability_extension).discretize(h)?;
    let extended = resolvent_norm(&far, which, lambda, Cutoff::Chi, &opts.power)?;
    let rel = (extended.value - estimate.value).abs() / estimate.value;
    if rel > opts.stability_tol {
        return Err(Error::Unstable { relative_change: rel.as_f64(), tolerance: opts.stability_tol.as_f64() });
    }
    Ok(StableNorm { estimate, extended: Some(extended), relative_change: Some(rel) })
}

/// `‖χ R(λ) χ‖` through the outgoing surrogate `P - i·W_out`, whose absorber
/// turns on only beyond `supp χ`. At `λ = E` this is the limiting-absorption
/// value `‖χ R(E + i0) χ‖`.
pub fn outgoing_cutoff_norm<T: Real>(
    scene: &Scene<T>,
    h: T,
    lambda: Cplx<T>,
    opts: &NormOptions<T>,
) -> Result<StableNorm<T>> {
    stable_cutoff_norm(scene, h, Realization::Outgoing, lambda, opts)
}

/// One rung of the `ε`-ladder cross-check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderRung<T> {
    pub epsilon: T,
    pub half_length: T,
    pub norm: T,
}

/// Limiting-absorption cross-check without absorbers: `‖χ(P - E - iε)⁻¹χ‖`
/// on a Dirichlet box long enough that waves reflected at the walls are
/// damped by `e^{-ε·distance/(√E·h)} ≤ e^{-damping}`, followed by a linear
/// extrapolation of the rungs to `ε = 0`.
pub fn epsilon_ladder<T: Real>(
    scene: &Scene<T>,
    h: T,
    epsilons: &[T],
    damping: T,
    power: &PowerOptions<T>,
) -> Result<(Vec<LadderRung<T>>, T)> {
    if epsilons.len() < 2 || epsilons.iter().any(|e| !(*e > T::zero())) {
        return Err(Error::InvalidParameter("ladder needs at least two positive ε".into()));
    }
    let rungs = epsilons
        .par_iter()
        .map(|&eps| {
            let layout = scene.layout;
            let travel = damping * scene.energy.sqrt() * h / eps;
            let half = (layout.radius(6) + travel).max(layout.half_length);
            // keep ±L on grid nodes
            let half = (half / layout.offset).ceil() * layout.offset;
            let far = scene.extended(half - layout.half_length);
            let disc = far.discretize(h)?;
            let lambda = cplx(scene.energy, eps);
            let est = resolvent_norm(&disc, Realization::Bare, lambda, Cutoff::Chi, power)?;
            Ok(LadderRung { epsilon: eps, half_length: half, norm: est.value })
        })
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<T> = rungs.iter().map(|r| r.epsilon).collect();
    let y: Vec<T> = rungs.iter().map(|r| r.norm).collect();
    let limit = linear_fit(&x, &y)?.intercept;
    Ok((rungs, limit))
}

/// Largest outgoing cutoff norm over a real energy window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowPeak<T> {
    pub energy: T,
    /// Infinite when the scan hit a numerically real pole.
    pub norm: T,
    pub pole: bool,
    pub evaluations: usize,
}

/// `sup_{|E' - E| ≤ half_width} ‖χ R(E' + i0) χ‖`: a coarse scan followed by
/// golden-section refinement around the best sample. Near a resonance the
/// norm is a narrow Lorentzian, so the refinement is what exposes
/// exponentially large values.
pub fn window_peak_norm<T: Real>(
    scene: &Scene<T>,
    h: T,
    half_width: T,
    coarse: usize,
    refine: usize,
    power: &PowerOptions<T>,
) -> Result<WindowPeak<T>> {
    if coarse < 3 || !(half_width > T::zero()) {
        return Err(Error::InvalidParameter("window scan needs a positive width and at least 3 points".into()));
    }
    let disc = scene.discretize(h)?;
    disc.check_layout()?;
    let eval = |e: T| match resolvent_norm(&disc, Realization::Outgoing, cplx(e, T::zero()), Cutoff::Chi, power) {
        Ok(est) => Ok(est.value),
        Err(Error::NearSingular { .. }) => Ok(T::infinity()),
        Err(err) => Err(err),
    };
    let step = T::lit(2.0) * half_width / T::from_usize_lossy(coarse - 1);
    let grid: Vec<T> = (0..coarse).map(|k| scene.energy - half_width + step * T::from_usize_lossy(k)).collect();
    let values = grid.par_iter().map(|&e| eval(e)).collect::<Result<Vec<T>>>()?;
    let mut evaluations = coarse;
    let (mut best_k, mut best) = (0, values[0]);
    for (k, v) in values.iter().enumerate() {
        if *v > best {
            best_k = k;
            best = *v;
        }
    }
    let mut peak = WindowPeak { energy: grid[best_k], norm: best, pole: !best.is_finite(), evaluations };
    if peak.pole {
        return Ok(peak);
    }
    let golden = T::lit(0.618_033_988_749_894_8);
    let (mut lo, mut hi) = (grid[best_k.saturating_sub(1)], grid[(best_k + 1).min(coarse - 1)]);
    let mut x1 = hi - golden * (hi - lo);
    let mut x2 = lo + golden * (hi - lo);
    let (mut f1, mut f2) = (eval(x1)?, eval(x2)?);
    evaluations += 2;
    for _ in 0..refine {
        for (x, f) in [(x1, f1), (x2, f2)] {
            if f > peak.norm {
                peak.energy = x;
                peak.norm = f;
            }
        }
        if !peak.norm.is_finite() {
            peak.pole = true;
            break;
        }
        if hi - lo <= T::epsilon() * scene.energy {
            break;
        }
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - golden * (hi - lo);
            f1 = eval(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + golden * (hi - lo);
            f2 = eval(x2)?;
        }
        evaluations += 1;
    }
    peak.evaluations = evaluations;
    Ok(peak)
}

/// One measured point of a norm curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSample<T> {
    pub h: T,
    pub lambda: Cplx<T>,
    pub operator: Realization,
    pub norm: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Measured `h ↦ norm` samples, sorted by decreasing `h`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NormCurve<T> {
    pub samples: Vec<NormSample<T>>,
}

pub const NORM_CURVE_HEADER: &str = "h,lambda_re,lambda_im,operator,norm,iters,converged";

impl<T: Real> NormCurve<T> {
    pub fn new(mut samples: Vec<NormSample<T>>) -> Self {
        samples.sort_by(|a, b| {
            b.h.partial_cmp(&a.h)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.operator.label().cmp(b.operator.label()))
        });
        Self { samples }
    }

    pub fn hs(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.h).collect()
    }

    pub fn norms(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.norm).collect()
    }

    /// Samples of one operator only.
    pub fn select(&self, which: Realization) -> Self {
        Self { samples: self.samples.iter().filter(|s| s.operator == which).copied().collect() }
    }

    pub fn fit(&self) -> Result<ScalingFit<T>> {
        scaling_fit(&self.hs(), &self.norms())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(NORM_CURVE_HEADER);
        out.push('\n');
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.h, s.lambda.re, s.lambda.im, s.operator, s.norm, s.iterations, s.converged
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |line: usize, what: &str| Error::InvalidParameter(format!("norm curve line {line}: {what}"));
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, head)) if head.trim() == NORM_CURVE_HEADER => {}
            _ => return Err(bad(1, "missing header")),
        }
        let mut samples = Vec::new();
        for (i, line) in lines {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 7 {
                return Err(bad(i + 1, "expected 7 fields"));
            }
            let num = |s: &str| s.parse::<f64>().map(T::lit).map_err(|_| bad(i + 1, "bad number"));
            samples.push(NormSample {
                h: num(f[0])?,
                lambda: cplx(num(f[1])?, num(f[2])?),
                operator: Realization::from_label(f[3]).ok_or_else(|| bad(i + 1, "unknown operator"))?,
                norm: num(f[4])?,
                iterations: f[5].parse().map_err(|_| bad(i + 1, "bad iteration count"))?,
                converged: f[6].parse().map_err(|_| bad(i + 1, "bad flag"))?,
            });
        }
        Ok(Self::new(samples))
    }
}

/// Measures `‖χ R(E + i0) χ‖` (or another realization at `λ = E`) over an
/// `h`-sweep in parallel.
pub fn measure_curve<T: Real>(
    scene: &Scene<T>,
    hs: &[T],
    which: Realization,
    opts: &NormOptions<T>,
) -> Result<NormCurve<T>> {
    let lambda = cplx(scene.energy, T::zero());
    let samples = hs
        .par_iter()
        .map(|&h| {
            let r = stable_cutoff_norm(scene, h, which, lambda, opts)?;
            Ok(NormSample {
                h,
                lambda,
                operator: which,
                norm: r.value(),
                iterations: r.estimate.iterations,
                converged: r.estimate.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NormCurve::new(samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::SupportLayout;
    use crate::potential::PotentialFamily;

    fn scene(v: PotentialFamily<f64>) -> Scene<f64> {
        Scene::new(SupportLayout::default(), v, 1.0).unwrap()
    }

    #[test]
    fn cap_resolvent_exists_at_energy() {
        let s = scene(PotentialFamily::NontrapBump { amplitude: 0.5, width: 1.0 });
        let d = s.discretize(0.1).unwrap();
        let op = d.operator(Realization::Cap).unwrap();
        factorize_shifted(&op, cplx(1.0, 0.0)).unwrap();
    }

    #[test]
    fn free_outgoing_matches_free_cap() {
        // both absorbers sit outside supp χ; with V = 0 they realize the same object
        let s = scene(PotentialFamily::Zero);
        let d = s.discretize(0.1).unwrap();
        let p = PowerOptions { tol: 1e-10, max_iter: 2000, seed: 3, block: 4 };
        let a = resolvent_norm(&d, Realization::FreeOutgoing, cplx(1.0, 0.0), Cutoff::Chi, &p).unwrap();
        let b = resolvent_norm(&d, Realization::Outgoing, cplx(1.0, 0.0), Cutoff::Chi, &p).unwrap();
        assert!((a.value - b.value).abs() / a.value < 1e-3, "{} {}", a.value, b.value);
    }

    #[test]
    fn csv_round_trip() {
        let c = NormCurve::new(vec![
            NormSample { h: 0.05, lambda: cplx(1.0, 0.0), operator: Realization::Outgoing, norm: 84.5, iterations: 12, converged: true },
            NormSample { h: 0.1, lambda: cplx(1.0, -0.25), operator: Realization::Cap, norm: 42.25, iterations: 9, converged: false },
        ]);
        assert_eq!(c.samples[0].h, 0.1);
        let back = NormCurve::<f64>::from_csv(&c.to_csv()).unwrap();
        assert_eq!(back, c);
        assert!(NormCurve::<f64>::from_csv("h,norm\n").is_err());
    }

    #[test]
    fn cutoff_norm_rejects_mismatched_profiles() {
        let s = scene(PotentialFamily::Zero);
        let d = s.discretize(0.1).unwrap();
        let f = factorize_shifted(&d.operator(Realization::Cap).unwrap(), cplx(1.0, 0.0)).unwrap();
        let short = vec![1.0; 3];
        let full = vec![1.0; d.dim()];
        assert!(matches!(
            cutoff_norm(&f, &short, &full, &PowerOptions::default()),
            Err(Error::GridMismatch { .. })
        ));
    }
}
