//! Continuation of the cutoff resolvent off the real axis: the resolvent
//! identity as a Neumann series, absorber-based continuation into
//! `Im λ < 0`, and the disk certificate.

use std::fmt::Write as _;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::factor::Factorization;
use crate::fit::{linear_fit, scaling_fit};
use crate::resolvent::{stable_cutoff_norm, NormCurve, NormOptions, StableNorm};
use crate::scalar::{cplx, norm2, Cplx, Real};
use crate::scene::{Realization, Scene};

/// Lowest admissible `Im λ`. The absorbers have strength 1, so their
/// essential spectrum sits on `Im λ = -1`.
pub const MIN_IMAG: f64 = -0.3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeumannOptions<T> {
    /// Relative bound on the geometric tail.
    pub tol: T,
    pub max_terms: usize,
    /// Largest admissible `|E - λ|·‖R(E)‖`.
    pub max_ratio: T,
}

impl<T: Real> Default for NeumannOptions<T> {
    fn default() -> Self {
        Self { tol: T::lit(1e-10), max_terms: 400, max_ratio: T::lit(0.9) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeumannSeries<T> {
    pub value: Vec<Cplx<T>>,
    pub terms: usize,
    /// `|E - λ|·‖R(E)‖`.
    pub ratio_bound: T,
    /// Largest observed `‖t_{k+1}‖ / ‖t_k‖`.
    pub observed_ratio: T,
    /// Geometric bound on the omitted tail, relative to the sum.
    pub tail_bound: T,
}

/// `R(λ)v = Σ_k (λ - E)^k R(E)^{k+1} v` from a factorization at `E`.
///
/// `norm_at_e` is an estimate of `‖R(E)‖`. The series is refused when
/// `|E - λ|·‖R(E)‖ ≥ max_ratio`, and abandoned if successive terms stop
/// shrinking (an underestimated norm).
pub fn neumann_resolvent<T: Real>(
    fact_at_e: &Factorization<T>,
    norm_at_e: T,
    lambda: Cplx<T>,
    v: &[Cplx<T>],
    opts: &NeumannOptions<T>,
) -> Result<NeumannSeries<T>> {
    let shift = lambda - fact_at_e.lambda();
    let ratio = shift.norm() * norm_at_e;
    if !(ratio < opts.max_ratio) {
        return Err(Error::Divergent { ratio: ratio.as_f64() });
    }
    let mut term = fact_at_e.solve(v);
    let mut sum = term.clone();
    let mut observed = T::zero();
    let mut prev = norm2(&term);
    let mut growth = 0;
    for k in 1..=opts.max_terms {
        let tail = prev * ratio / (T::one() - ratio);
        let total = norm2(&sum);
        if tail <= opts.tol * total || prev == T::zero() {
            return Ok(NeumannSeries {
                value: sum,
                terms: k,
                ratio_bound: ratio,
                observed_ratio: observed,
                tail_bound: if total > T::zero() { tail / total } else { T::zero() },
            });
        }
        term = fact_at_e.solve(&term);
        term.iter_mut().for_each(|z| *z = *z * shift);
        let nt = norm2(&term);
        let r = nt / prev;
        observed = observed.max(r);
        growth = if r >= T::one() { growth + 1 } else { 0 };
        if growth >= 3 {
            return Err(Error::Divergent { ratio: r.as_f64() });
        }
        sum.iter_mut().zip(&term).for_each(|(s, t)| *s = *s + *t);
        prev = nt;
    }
    Err(Error::NoConvergence { iterations: opts.max_terms, estimate: norm2(&sum).as_f64(), gap: (T::one() - observed).as_f64() })
}

/// `‖χ R(λ) χ‖` continued into `Im λ < 0`, realized by the absorber placed
/// beyond `supp χ`, with the box-extension stability check.
pub fn cap_lower_halfplane_norm<T: Real>(
    scene: &Scene<T>,
    h: T,
    lambda: Cplx<T>,
    opts: &NormOptions<T>,
) -> Result<StableNorm<T>> {
    if lambda.im < T::lit(MIN_IMAG) {
        return Err(Error::InvalidParameter(format!(
            "Im λ = {} is below {MIN_IMAG}; too close to the absorber's essential spectrum",
            lambda.im
        )));
    }
    stable_cutoff_norm(scene, h, Realization::Outgoing, lambda, opts)
}

/// Jump of `‖χR(λ)χ‖` across the real axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisJump<T> {
    pub offsets: Vec<T>,
    /// `|n(re + iδ) - n(re - iδ)| / n(re)` per offset.
    pub jumps: Vec<T>,
    /// Linear extrapolation of the jumps to `δ = 0`.
    pub limit: T,
}

pub fn real_axis_jump<T: Real>(scene: &Scene<T>, h: T, re: T, offsets: &[T], opts: &NormOptions<T>) -> Result<AxisJump<T>> {
    let at = |im: T| cap_lower_halfplane_norm(scene, h, cplx(re, im), opts).map(|n| n.value());
    let centre = at(T::zero())?;
    let jumps = offsets
        .par_iter()
        .map(|&d| Ok((at(d)? - at(-d)?).abs() / centre))
        .collect::<Result<Vec<T>>>()?;
    let limit = linear_fit(offsets, &jumps)?.intercept.abs();
    Ok(AxisJump { offsets: offsets.to_vec(), jumps, limit })
}

/// Sample points on the disk `|λ - E| ≤ ρ`: centre, `boundary` points on
/// the circle, and `diameter` interior points on each of the real and
/// vertical diameters. With `real_only`, only the centre and the real
/// diameter plus its two end points.
pub fn disk_samples<T: Real>(energy: T, radius: T, boundary: usize, diameter: usize, real_only: bool) -> Vec<Cplx<T>> {
    let e = cplx(energy, T::zero());
    let mut out = vec![e];
    let t = |k: usize| -T::one() + T::lit(2.0) * T::from_usize_lossy(k + 1) / T::from_usize_lossy(diameter + 1);
    if real_only {
        out.push(e - cplx(radius, T::zero()));
        out.push(e + cplx(radius, T::zero()));
        out.extend((0..diameter).map(|k| e + cplx(radius * t(k), T::zero())));
        return out;
    }
    let tau = T::lit(std::f64::consts::TAU);
    out.extend((0..boundary).map(|k| {
        let th = tau * T::from_usize_lossy(k) / T::from_usize_lossy(boundary);
        e + Complex::from_polar(radius, th)
    }));
    out.extend((0..diameter).map(|k| e + cplx(radius * t(k), T::zero())));
    out.extend((0..diameter).map(|k| e + cplx(T::zero(), radius * t(k))));
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskOptions<T> {
    pub c_start: T,
    pub c_cap: T,
    pub boundary: usize,
    pub diameter: usize,
    pub real_only: bool,
    /// `N` in the hypothesis `a(h) ≤ h^{-N}`.
    pub max_exponent: T,
    /// Disks with `ρ < resolution·E` are below what the solver can resolve.
    pub resolution: T,
    pub norm: NormOptions<T>,
}

impl<T: Real> Default for DiskOptions<T> {
    fn default() -> Self {
        Self {
            c_start: T::one(),
            c_cap: T::lit(1024.0),
            boundary: 16,
            diameter: 8,
            real_only: false,
            max_exponent: T::lit(3.0),
            resolution: T::lit(1e-10),
            norm: NormOptions { check_stability: false, ..NormOptions::default() },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskSample<T> {
    pub lambda: Cplx<T>,
    /// Infinite at a pole.
    pub norm: T,
    pub ratio: T,
    pub pole: bool,
}

/// One disk evaluated at one `h` for one trial constant.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskRow<T> {
    pub h: T,
    pub a_h: T,
    pub c_trial: T,
    pub radius: T,
    pub samples: Vec<DiskSample<T>>,
    pub sup_ratio: T,
    pub poles: usize,
}

impl<T: Real> DiskRow<T> {
    pub fn passes(&self) -> bool {
        self.poles == 0 && self.sup_ratio <= self.c_trial
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CertificateStatus<T> {
    /// Smallest passing trial constant.
    Pass(T),
    /// No trial up to the cap passed.
    Fail,
    /// `a(h)` is outside the class the estimate applies to.
    OutOfHypothesis(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiskCertificate<T> {
    pub energy: T,
    pub hs: Vec<T>,
    pub a: Vec<T>,
    /// Every trial, in the order evaluated.
    pub trials: Vec<Vec<DiskRow<T>>>,
    pub status: CertificateStatus<T>,
}

pub const DISK_HEADER: &str = "h,a_h,C_trial,lambda_re,lambda_im,norm,ratio,pole_flag";
pub const DISK_SUMMARY_HEADER: &str = "h,sup_ratio,pass";

impl<T: Real> DiskCertificate<T> {
    pub fn passed(&self) -> bool {
        matches!(self.status, CertificateStatus::Pass(_))
    }

    /// Rows of the last trial evaluated.
    pub fn final_rows(&self) -> &[DiskRow<T>] {
        self.trials.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(DISK_HEADER);
        out.push('\n');
        for row in self.trials.iter().flatten() {
            for s in &row.samples {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    row.h, row.a_h, row.c_trial, s.lambda.re, s.lambda.im, s.norm, s.ratio, s.pole
                );
            }
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from(DISK_SUMMARY_HEADER);
        out.push('\n');
        for row in self.final_rows() {
            let _ = writeln!(out, "{},{},{}", row.h, row.sup_ratio, row.passes());
        }
        out
    }
}

/// Checks `1 ≤ a(h) ≤ h^{-N}` and a power-law-like growth; returns the
/// reason when violated.
pub fn hypothesis_violation<T: Real>(hs: &[T], a: &[T], opts: &DiskOptions<T>) -> Option<String> {
    for (h, v) in hs.iter().zip(a) {
        if !v.is_finite() || *v > h.powf(-opts.max_exponent) {
            return Some(format!("a({h}) = {v:e} exceeds h^-{}", opts.max_exponent));
        }
        if T::one() / (opts.c_start * *v) < opts.resolution * T::one() {
            return Some(format!("disk radius at h = {h} is below resolution"));
        }
    }
    if let Ok(fit) = scaling_fit(hs, a) {
        if fit.exponent > opts.max_exponent {
            return Some(format!("fitted exponent {} exceeds {}", fit.exponent, opts.max_exponent));
        }
    }
    None
}

fn evaluate_disk<T: Real>(scene: &Scene<T>, h: T, a_h: T, c: T, opts: &DiskOptions<T>) -> Result<DiskRow<T>> {
    let radius = T::one() / (c * a_h);
    let points = disk_samples(scene.energy, radius, opts.boundary, opts.diameter, opts.real_only);
    let samples = points
        .par_iter()
        .map(|&lambda| match cap_lower_halfplane_norm(scene, h, lambda, &opts.norm) {
            Ok(n) => Ok(DiskSample { lambda, norm: n.value(), ratio: n.value() / a_h, pole: false }),
            Err(Error::NearSingular { .. }) => Ok(DiskSample { lambda, norm: T::infinity(), ratio: T::infinity(), pole: true }),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    let sup_ratio = samples.iter().map(|s| s.ratio).fold(T::zero(), T::max);
    let poles = samples.iter().filter(|s| s.pole).count();
    Ok(DiskRow { h, a_h, c_trial: c, radius, samples, sup_ratio, poles })
}

/// Searches `C = c_start, 2·c_start, …` up to `c_cap` for the first trial
/// constant with `sup_λ ‖χR(λ)χ‖ / a(h) ≤ C` on every disk
/// `|λ - E| ≤ 1/(C·a(h))` of the sweep.
pub fn disk_certificate<T: Real>(scene: &Scene<T>, curve: &NormCurve<T>, opts: &DiskOptions<T>) -> Result<DiskCertificate<T>> {
    if !(opts.c_start >= T::one()) {
        return Err(Error::InvalidParameter("trial constant must be at least 1".into()));
    }
    if !opts.real_only && opts.boundary < 16 {
        return Err(Error::InvalidParameter("need at least 16 boundary samples".into()));
    }
    let curve = curve.select(Realization::Outgoing);
    if curve.samples.is_empty() {
        return Err(Error::DegenerateSweep("no outgoing-resolvent samples to certify".into()));
    }
    let hs = curve.hs();
    let a = curve.norms();
    let mut cert = DiskCertificate { energy: scene.energy, hs: hs.clone(), a: a.clone(), trials: Vec::new(), status: CertificateStatus::Fail };
    if let Some(reason) = hypothesis_violation(&hs, &a, opts) {
        cert.status = CertificateStatus::OutOfHypothesis(reason);
        return Ok(cert);
    }
    let mut c = opts.c_start;
    while c <= opts.c_cap {
        let rows = hs
            .iter()
            .zip(&a)
            .map(|(&h, &ah)| evaluate_disk(scene, h, ah, c, opts))
            .collect::<Result<Vec<_>>>()?;
        let pass = rows.iter().all(DiskRow::passes);
        cert.trials.push(rows);
        if pass {
            cert.status = CertificateStatus::Pass(c);
            return Ok(cert);
        }
        c = c * T::lit(2.0);
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::factorize_shifted;
    use crate::layout::SupportLayout;
    use crate::linmap::{random_unit_vector, PowerOptions};
    use crate::potential::PotentialFamily;
    use crate::resolvent::{resolvent_norm, Cutoff};

    fn nontrap() -> Scene<f64> {
        Scene::new(SupportLayout::default(), PotentialFamily::NontrapBump { amplitude: 0.5, width: 1.0 }, 1.0).unwrap()
    }

    #[test]
    fn disk_sample_layout() {
        let s = disk_samples(1.0_f64, 0.1, 16, 8, false);
        assert_eq!(s.len(), 33);
        assert!(s.iter().any(|z| z.im < -0.09));
        assert!(s.iter().all(|z| (z - cplx(1.0, 0.0)).norm() <= 0.1 + 1e-15));
        assert_eq!(disk_samples(1.0_f64, 0.1, 16, 8, true).iter().filter(|z| z.im != 0.0).count(), 0);
    }

    #[test]
    fn neumann_identity_case_is_one_term() {
        let d = nontrap().discretize(0.1).unwrap();
        let op = d.operator(Realization::Cap).unwrap();
        let f = factorize_shifted(&op, cplx(1.0, 0.0)).unwrap();
        let v = random_unit_vector::<f64>(d.dim(), 2);
        let s = neumann_resolvent(&f, 40.0, cplx(1.0, 0.0), &v, &NeumannOptions::default()).unwrap();
        assert_eq!(s.terms, 1);
        assert_eq!(s.value, f.solve(&v));
    }

    #[test]
    fn neumann_refuses_outside_radius() {
        let d = nontrap().discretize(0.1).unwrap();
        let op = d.operator(Realization::Cap).unwrap();
        let f = factorize_shifted(&op, cplx(1.0, 0.0)).unwrap();
        let n = resolvent_norm(&d, Realization::Cap, cplx(1.0, 0.0), Cutoff::Identity, &PowerOptions::default()).unwrap().value;
        let v = random_unit_vector::<f64>(d.dim(), 2);
        let r = neumann_resolvent(&f, n, cplx(1.0 + 2.0 / n, 0.0), &v, &NeumannOptions::default());
        assert!(matches!(r, Err(Error::Divergent { .. })));
    }

    #[test]
    fn deep_lower_half_plane_rejected() {
        let r = cap_lower_halfplane_norm(&nontrap(), 0.1, cplx(1.0, -0.9), &NormOptions::default());
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn hypothesis_checks() {
        let hs = [0.1, 0.07, 0.05, 0.035, 0.025];
        let o = DiskOptions::<f64>::default();
        let good: Vec<f64> = hs.iter().map(|h| 4.0 / h).collect();
        assert!(hypothesis_violation(&hs, &good, &o).is_none());
        let huge: Vec<f64> = hs.iter().map(|h| (1.0 / h).exp()).collect();
        assert!(hypothesis_violation(&hs, &huge, &o).is_some());
    }
}
