//! The glued parametrix `F`, its error operators `A_K`, `A_∞`, and the
//! exact algebraic identities they satisfy.
//!
//! With `χ_K' = χ_K(|x| - s)` and `χ_∞' = χ_∞(|x| + s)`:
//!
//! ```text
//! F   = χ_K' R_in χ_K + χ_∞' R_out χ_∞
//! A_K = [P, χ_K'] R_in χ_K,   A_∞ = [P, χ_∞'] R_out χ_∞
//! (target) F = Id + A_K + A_∞
//! ```

use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex;
use rayon::prelude::*;

use crate::band::BandMatrix;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::factor::{factorize_shifted, Factorization};
use crate::fit::{linear_fit, local_slopes};
use crate::grid::Grid;
use crate::linmap::{largest_singular_value, random_unit_vector, LinearMap, PowerOptions, Product, SingularEstimate};
use crate::operator::commutator_with_cutoff;
use crate::scalar::{mul_diag, norm2, Cplx, Real};
use crate::scene::{Discretization, Realization, Scene};

/// Largest dimension for which dense realizations are built.
pub const DENSE_LIMIT: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GluingMode {
    /// Glue the outgoing resolvent with `R_{W,0}`; target `P_W - E`.
    ToCap,
    /// Glue `R_W(λ)` with the outgoing free resolvent; target `P - i·W_out - λ`.
    FromCap,
}

impl GluingMode {
    pub fn label(self) -> &'static str {
        match self {
            GluingMode::ToCap => "toCAP",
            GluingMode::FromCap => "fromCAP",
        }
    }

    /// `(inner, outer, target)` realizations.
    pub fn realizations(self) -> (Realization, Realization, Realization) {
        match self {
            GluingMode::ToCap => (Realization::Outgoing, Realization::FreeCap, Realization::Cap),
            GluingMode::FromCap => (Realization::Cap, Realization::FreeOutgoing, Realization::Outgoing),
        }
    }
}

impl fmt::Display for GluingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for GluingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "toCAP" | "tocap" | "to-cap" => Ok(GluingMode::ToCap),
            "fromCAP" | "fromcap" | "from-cap" => Ok(GluingMode::FromCap),
            other => Err(Error::InvalidParameter(format!("unknown gluing mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GluingOptions {
    /// Refuse to build when the support relations fail on the grid. Turned
    /// off only to construct negative controls.
    pub verify_layout: bool,
}

impl Default for GluingOptions {
    fn default() -> Self {
        Self { verify_layout: true }
    }
}

#[derive(Debug, Clone)]
struct DenseParts<T> {
    f: DenseMatrix<T>,
    a_k: DenseMatrix<T>,
    a_inf: DenseMatrix<T>,
    target: DenseMatrix<T>,
}

/// An immutable glued system; all applies are safe to run concurrently.
pub struct GluingSystem<T: Real> {
    pub mode: GluingMode,
    pub h: T,
    pub lambda: Cplx<T>,
    /// Violated support relation, if the system was built unchecked.
    pub layout_violation: Option<String>,
    grid: Grid<T>,
    inner: Factorization<T>,
    outer: Factorization<T>,
    target: BandMatrix<T>,
    comm_k: BandMatrix<T>,
    comm_inf: BandMatrix<T>,
    chi: Vec<T>,
    chi_k: Vec<T>,
    chi_k_out: Vec<T>,
    chi_inf: Vec<T>,
    chi_inf_in: Vec<T>,
    dense: OnceLock<DenseParts<T>>,
}

/// The operators a [`GluingSystem`] exposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Piece {
    F,
    AK,
    AInf,
    Target,
}

/// Matrix-free view of one piece.
pub struct PieceMap<'a, T: Real> {
    sys: &'a GluingSystem<T>,
    piece: Piece,
}

impl<T: Real> LinearMap<T> for PieceMap<'_, T> {
    fn dim(&self) -> usize {
        self.sys.dim()
    }
    fn apply(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>> {
        self.sys.apply(self.piece, x)
    }
    fn apply_adjoint(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>> {
        self.sys.apply_adjoint(self.piece, x)
    }
}

fn add<T: Real>(a: &mut [Cplx<T>], b: &[Cplx<T>], s: T) {
    a.iter_mut().zip(b).for_each(|(x, y)| *x = *x + *y * s);
}

impl<T: Real> GluingSystem<T> {
    pub fn build(scene: &Scene<T>, h: T, mode: GluingMode, lambda: Cplx<T>, opts: &GluingOptions) -> Result<Self> {
        Self::from_discretization(scene.discretize(h)?, mode, lambda, opts)
    }

    /// Builds on an explicit grid (used for dense oracle sizes).
    pub fn build_on(
        scene: &Scene<T>,
        grid: Grid<T>,
        h: T,
        mode: GluingMode,
        lambda: Cplx<T>,
        opts: &GluingOptions,
    ) -> Result<Self> {
        Self::from_discretization(scene.discretize_on(grid, h)?, mode, lambda, opts)
    }

    pub fn from_discretization(disc: Discretization<T>, mode: GluingMode, lambda: Cplx<T>, opts: &GluingOptions) -> Result<Self> {
        let layout_violation = match disc.check_layout() {
            Ok(()) => None,
            Err(e) if opts.verify_layout => return Err(e),
            Err(e) => Some(e.to_string()),
        };
        let (inner, outer, target) = mode.realizations();
        let inner = factorize_shifted(&disc.operator(inner)?, lambda)?;
        let outer = factorize_shifted(&disc.operator(outer)?, lambda)?;
        let target = disc.operator(target)?.shifted(lambda);
        let pr = &disc.profiles;
        let comm_k = commutator_with_cutoff(&disc.p, &pr.chi_k_out)?.band;
        let comm_inf = commutator_with_cutoff(&disc.p, &pr.chi_inf_in)?.band;
        Ok(Self {
            mode,
            h: disc.h,
            lambda,
            layout_violation,
            inner,
            outer,
            target,
            comm_k,
            comm_inf,
            chi: pr.chi.values.clone(),
            chi_k: pr.chi_k.values.clone(),
            chi_k_out: pr.chi_k_out.values.clone(),
            chi_inf: pr.chi_inf.values.clone(),
            chi_inf_in: pr.chi_inf_in.values.clone(),
            grid: disc.grid,
            dense: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn chi(&self) -> &[T] {
        &self.chi
    }

    pub fn map(&self, piece: Piece) -> PieceMap<'_, T> {
        PieceMap { sys: self, piece }
    }

    pub fn apply(&self, piece: Piece, x: &[Cplx<T>]) -> Vec<Cplx<T>> {
        match piece {
            Piece::F => {
                let mut a = self.inner.solve(&mul_diag(&self.chi_k, x));
                a = mul_diag(&self.chi_k_out, &a);
                let b = self.outer.solve(&mul_diag(&self.chi_inf, x));
                add(&mut a, &mul_diag(&self.chi_inf_in, &b), T::one());
                a
            }
            Piece::AK => self.comm_k.mul_vec(&self.inner.solve(&mul_diag(&self.chi_k, x))),
            Piece::AInf => self.comm_inf.mul_vec(&self.outer.solve(&mul_diag(&self.chi_inf, x))),
            Piece::Target => self.target.mul_vec(x),
        }
    }

    pub fn apply_adjoint(&self, piece: Piece, y: &[Cplx<T>]) -> Vec<Cplx<T>> {
        match piece {
            Piece::F => {
                let mut a = mul_diag(&self.chi_k, &self.inner.solve_adjoint(&mul_diag(&self.chi_k_out, y)));
                let b = mul_diag(&self.chi_inf, &self.outer.solve_adjoint(&mul_diag(&self.chi_inf_in, y)));
                add(&mut a, &b, T::one());
                a
            }
            Piece::AK => mul_diag(&self.chi_k, &self.inner.solve_adjoint(&self.comm_k.adjoint_mul_vec(y))),
            Piece::AInf => mul_diag(&self.chi_inf, &self.outer.solve_adjoint(&self.comm_inf.adjoint_mul_vec(y))),
            Piece::Target => self.target.adjoint_mul_vec(y),
        }
    }

    /// `(Id - A_K - A_∞ + A_K A_∞) x`, or `x` when `with_errors` is false.
    fn correction(&self, x: &[Cplx<T>], with_errors: bool) -> Vec<Cplx<T>> {
        let mut y = x.to_vec();
        if with_errors {
            let ainf = self.apply(Piece::AInf, x);
            add(&mut y, &self.apply(Piece::AK, x), -T::one());
            add(&mut y, &ainf, -T::one());
            add(&mut y, &self.apply(Piece::AK, &ainf), T::one());
        }
        y
    }

    fn correction_adjoint(&self, y: &[Cplx<T>]) -> Vec<Cplx<T>> {
        let mut x = y.to_vec();
        let ak = self.apply_adjoint(Piece::AK, y);
        add(&mut x, &ak, -T::one());
        add(&mut x, &self.apply_adjoint(Piece::AInf, y), -T::one());
        add(&mut x, &self.apply_adjoint(Piece::AInf, &ak), T::one());
        x
    }

    /// `(Id - A_∞A_K + A_∞A_KA_∞) x`, or `x` when `with_errors` is false.
    fn identity_rhs(&self, x: &[Cplx<T>], with_errors: bool) -> Vec<Cplx<T>> {
        let mut y = x.to_vec();
        if with_errors {
            let akx = self.apply(Piece::AK, x);
            add(&mut y, &self.apply(Piece::AInf, &akx), -T::one());
            let t = self.apply(Piece::AK, &self.apply(Piece::AInf, x));
            add(&mut y, &self.apply(Piece::AInf, &t), T::one());
        }
        y
    }

    /// Dense realizations of `F`, `A_K`, `A_∞` and the target, built once.
    fn dense(&self) -> Result<&DenseParts<T>> {
        let n = self.dim();
        if n > DENSE_LIMIT {
            return Err(Error::InvalidParameter(format!("dense realization limited to N ≤ {DENSE_LIMIT}, got {n}")));
        }
        if let Some(d) = self.dense.get() {
            return Ok(d);
        }
        let mut mats: Vec<DenseMatrix<T>> = [Piece::F, Piece::AK, Piece::AInf, Piece::Target]
            .par_iter()
            .map(|p| self.map(*p).to_dense())
            .collect();
        let target = mats.pop().expect("four pieces");
        let a_inf = mats.pop().expect("four pieces");
        let a_k = mats.pop().expect("four pieces");
        let f = mats.pop().expect("four pieces");
        Ok(self.dense.get_or_init(|| DenseParts { f, a_k, a_inf, target }))
    }

    /// Dense `(target)F - (Id + A_K + A_∞)`, measured in operator norm
    /// relative to `‖Id + A_K + A_∞‖`.
    pub fn dense_gluing_residual(&self, power: &PowerOptions<T>) -> Result<T> {
        let d = self.dense()?;
        let n = self.dim();
        let rhs = DenseMatrix::identity(n).add(&d.a_k).add(&d.a_inf);
        let lhs = d.target.matmul(&d.f);
        relative_dense(&lhs.sub(&rhs), &rhs, power)
    }

    /// Matrix-free version of [`Self::dense_gluing_residual`] probed on
    /// seeded random vectors; returns the worst relative defect.
    pub fn probe_gluing_residual(&self, probes: usize, seed: u64) -> T {
        (0..probes)
            .map(|k| {
                let x = random_unit_vector::<T>(self.dim(), seed.wrapping_add(k as u64));
                let lhs = self.apply(Piece::Target, &self.apply(Piece::F, &x));
                let mut rhs = x.clone();
                add(&mut rhs, &self.apply(Piece::AK, &x), T::one());
                add(&mut rhs, &self.apply(Piece::AInf, &x), T::one());
                let diff: Vec<_> = lhs.iter().zip(&rhs).map(|(a, b)| *a - *b).collect();
                norm2(&diff) / norm2(&rhs)
            })
            .fold(T::zero(), T::max)
    }
}

fn relative_dense<T: Real>(diff: &DenseMatrix<T>, reference: &DenseMatrix<T>, power: &PowerOptions<T>) -> Result<T> {
    let num = largest_singular_value(diff, power)?.value;
    let den = largest_singular_value(reference, power)?.value;
    Ok(num / den)
}

/// Builds a gluing system on the sweep grid for `h`.
pub fn build_gluing<T: Real>(scene: &Scene<T>, h: T, mode: GluingMode, lambda: Cplx<T>) -> Result<GluingSystem<T>> {
    GluingSystem::build(scene, h, mode, lambda, &GluingOptions::default())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nilpotency<T> {
    pub ak_squared: T,
    pub ainf_squared: T,
    pub norm_ak: T,
    pub norm_ainf: T,
    pub layout_violation: Option<String>,
}

impl<T: Real> Nilpotency<T> {
    /// `‖A_K²‖/‖A_K‖` and `‖A_∞²‖/‖A_∞‖` both at most `tol`.
    pub fn holds(&self, tol: T) -> bool {
        let rel = |sq: T, n: T| if n == T::zero() { sq } else { sq / n };
        rel(self.ak_squared, self.norm_ak) <= tol && rel(self.ainf_squared, self.norm_ainf) <= tol
    }
}

/// `‖A_K²‖` and `‖A_∞²‖` by matrix-free norm estimation.
pub fn check_nilpotency<T: Real>(sys: &GluingSystem<T>, power: &PowerOptions<T>) -> Result<Nilpotency<T>> {
    let ak = sys.map(Piece::AK);
    let ainf = sys.map(Piece::AInf);
    let norm = |m: &dyn LinearMap<T>| largest_singular_value(m, power).map(|e| e.value);
    Ok(Nilpotency {
        ak_squared: norm(&Product { outer: &ak, inner: &ak })?,
        ainf_squared: norm(&Product { outer: &ainf, inner: &ainf })?,
        norm_ak: norm(&ak)?,
        norm_ainf: norm(&ainf)?,
        layout_violation: sys.layout_violation.clone(),
    })
}

/// Operator-norm residual of
/// `(target)F(Id - A_K - A_∞ + A_KA_∞) - (Id - A_∞A_K + A_∞A_KA_∞)`
/// relative to the right-hand side, using the dense realization.
///
/// With `with_errors = false` both error operators are replaced by zero;
/// the identity then degenerates to `(target)F = Id` and must fail.
pub fn check_factor_identity<T: Real>(sys: &GluingSystem<T>, with_errors: bool, power: &PowerOptions<T>) -> Result<T> {
    let d = sys.dense()?;
    let n = sys.dim();
    let id = DenseMatrix::identity(n);
    let (lhs, rhs) = if with_errors {
        let corr = id.sub(&d.a_k).sub(&d.a_inf).add(&d.a_k.matmul(&d.a_inf));
        let lhs = d.target.matmul(&d.f).matmul(&corr);
        let p = d.a_inf.matmul(&d.a_k);
        (lhs, id.sub(&p).add(&p.matmul(&d.a_inf)))
    } else {
        (d.target.matmul(&d.f), id)
    };
    relative_dense(&lhs.sub(&rhs), &rhs, power)
}

/// Matrix-free probe of the factorization identity on random vectors.
pub fn probe_factor_identity<T: Real>(sys: &GluingSystem<T>, with_errors: bool, probes: usize, seed: u64) -> T {
    (0..probes)
        .map(|k| {
            let x = random_unit_vector::<T>(sys.dim(), seed.wrapping_add(k as u64));
            let y = sys.correction(&x, with_errors);
            let lhs = sys.apply(Piece::Target, &sys.apply(Piece::F, &y));
            let rhs = sys.identity_rhs(&x, with_errors);
            let diff: Vec<_> = lhs.iter().zip(&rhs).map(|(a, b)| *a - *b).collect();
            norm2(&diff) / norm2(&rhs)
        })
        .fold(T::zero(), T::max)
}

/// `‖A_∞ A_K‖`.
pub fn error_product_norm<T: Real>(sys: &GluingSystem<T>, power: &PowerOptions<T>) -> Result<SingularEstimate<T>> {
    let ak = sys.map(Piece::AK);
    let ainf = sys.map(Piece::AInf);
    largest_singular_value(&Product { outer: &ainf, inner: &ak }, power)
}

struct CutMap<'a, T: Real> {
    sys: &'a GluingSystem<T>,
    parametrix: bool,
}

impl<T: Real> LinearMap<T> for CutMap<'_, T> {
    fn dim(&self) -> usize {
        self.sys.dim()
    }
    fn apply(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>> {
        let x = mul_diag(&self.sys.chi, x);
        let y = if self.parametrix {
            self.sys.apply(Piece::F, &self.sys.correction(&x, true))
        } else {
            self.sys.apply(Piece::AInf, &x)
        };
        mul_diag(&self.sys.chi, &y)
    }
    fn apply_adjoint(&self, y: &[Cplx<T>]) -> Vec<Cplx<T>> {
        let y = mul_diag(&self.sys.chi, y);
        let x = if self.parametrix {
            self.sys.correction_adjoint(&self.sys.apply_adjoint(Piece::F, &y))
        } else {
            self.sys.apply_adjoint(Piece::AInf, &y)
        };
        mul_diag(&self.sys.chi, &x)
    }
}

/// `‖χ A_∞ χ‖`.
pub fn cut_error_norm<T: Real>(sys: &GluingSystem<T>, power: &PowerOptions<T>) -> Result<SingularEstimate<T>> {
    largest_singular_value(&CutMap { sys, parametrix: false }, power)
}

/// `‖χ F (Id - A_K - A_∞ + A_KA_∞) χ‖`.
pub fn parametrix_cutoff_norm<T: Real>(sys: &GluingSystem<T>, power: &PowerOptions<T>) -> Result<SingularEstimate<T>> {
    largest_singular_value(&CutMap { sys, parametrix: true }, power)
}

/// `‖A_K‖`.
pub fn inner_error_norm<T: Real>(sys: &GluingSystem<T>, power: &PowerOptions<T>) -> Result<SingularEstimate<T>> {
    largest_singular_value(&sys.map(Piece::AK), power)
}

/// One row of the gluing report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GluingRow<T> {
    pub mode: GluingMode,
    pub h: T,
    pub norm_ak: T,
    pub norm_ainf_cut: T,
    pub norm_product: T,
    /// Windowed log–log slope centred on this `h`; NaN at the sweep ends.
    pub slope_local: T,
    pub residual_identity: T,
}

pub const GLUING_HEADER: &str = "mode,h,norm_AK,norm_Ainf_cut,norm_product,slope_local,residual_identity";

impl<T: Real> GluingRow<T> {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.mode, self.h, self.norm_ak, self.norm_ainf_cut, self.norm_product, self.slope_local, self.residual_identity
        )
    }
}

/// Decay of a measured curve `h ↦ value`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit<T> {
    /// Slope of `log value` against `log(1/h)` over the whole sweep, sign
    /// flipped so that decay like `h^k` gives `k`.
    pub order: T,
    /// Three-point windowed slopes, ordered from large to small `h`.
    pub local: Vec<T>,
    pub superpolynomial: bool,
}

/// Slopes at or above this count as faster than any tested power.
pub const SUPERPOLY_THRESHOLD: f64 = 3.0;

/// Fits the decay order of `values` over `hs`. Superpolynomial means every
/// local slope exceeds 3 and the slopes strictly increase (beyond roundoff)
/// as `h` shrinks.
pub fn decay_fit<T: Real>(hs: &[T], values: &[T]) -> Result<DecayFit<T>> {
    if hs.len() < 5 || hs.len() != values.len() {
        return Err(Error::DegenerateSweep(format!("decay fit needs at least 5 paired samples, got {}", hs.len())));
    }
    if values.iter().any(|v| !(*v > T::zero())) {
        return Err(Error::DegenerateSweep("decay fit needs positive values".into()));
    }
    let mut idx: Vec<usize> = (0..hs.len()).collect();
    idx.sort_by(|a, b| hs[*b].partial_cmp(&hs[*a]).unwrap_or(std::cmp::Ordering::Equal));
    let x: Vec<T> = idx.iter().map(|&i| -hs[i].ln()).collect();
    let y: Vec<T> = idx.iter().map(|&i| -values[i].ln()).collect();
    let order = linear_fit(&x, &y)?.slope;
    let local = local_slopes(&x, &y, 3)?;
    let tol = T::lit(1e-9);
    let superpolynomial = local.iter().all(|s| *s > T::lit(SUPERPOLY_THRESHOLD))
        && local.windows(2).all(|w| w[1] > w[0] + tol * w[0].abs());
    Ok(DecayFit { order, local, superpolynomial })
}

/// Result of [`decay_sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct DecaySweep<T> {
    pub rows: Vec<GluingRow<T>>,
    pub fit: DecayFit<T>,
}

impl<T: Real> DecaySweep<T> {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(GLUING_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv_line());
            out.push('\n');
        }
        out
    }
}

/// Measures one gluing row at `h`.
pub fn gluing_row<T: Real>(scene: &Scene<T>, h: T, mode: GluingMode, power: &PowerOptions<T>) -> Result<GluingRow<T>> {
    let lambda = Complex::new(scene.energy, T::zero());
    let sys = build_gluing(scene, h, mode, lambda)?;
    Ok(GluingRow {
        mode,
        h,
        norm_ak: inner_error_norm(&sys, power)?.value,
        norm_ainf_cut: cut_error_norm(&sys, power)?.value,
        norm_product: error_product_norm(&sys, power)?.value,
        slope_local: T::nan(),
        residual_identity: probe_factor_identity(&sys, true, 3, 0x9a1),
    })
}

/// Gluing measurements over an `h`-sweep at `λ = E`, with local decay
/// slopes of `‖A_∞A_K‖`.
pub fn decay_sweep<T: Real>(scene: &Scene<T>, mode: GluingMode, hs: &[T], power: &PowerOptions<T>) -> Result<DecaySweep<T>> {
    if hs.len() < 5 {
        return Err(Error::DegenerateSweep(format!("need at least 5 values of h, got {}", hs.len())));
    }
    let mut rows = hs
        .par_iter()
        .map(|&h| gluing_row(scene, h, mode, power))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| b.h.partial_cmp(&a.h).unwrap_or(std::cmp::Ordering::Equal));
    let fit = decay_fit(&rows.iter().map(|r| r.h).collect::<Vec<_>>(), &rows.iter().map(|r| r.norm_product).collect::<Vec<_>>())?;
    for (k, s) in fit.local.iter().enumerate() {
        rows[k + 1].slope_local = *s;
    }
    Ok(DecaySweep { rows, fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::layout::SupportLayout;
    use crate::potential::PotentialFamily;
    use crate::scalar::cplx;

    fn scene(v: PotentialFamily<f64>) -> Scene<f64> {
        Scene::new(SupportLayout::default(), v, 1.0).unwrap()
    }

    fn dense_system(mode: GluingMode, v: PotentialFamily<f64>) -> GluingSystem<f64> {
        let g = make_grid(13.0, 1.0 / 12.0).unwrap();
        GluingSystem::build_on(&scene(v), g, 0.5, mode, cplx(1.0, 0.0), &GluingOptions::default()).unwrap()
    }

    #[test]
    fn chi_k_annihilates_ak() {
        let sys = dense_system(GluingMode::ToCap, PotentialFamily::NontrapBump { amplitude: 0.5, width: 1.0 });
        let x = random_unit_vector::<f64>(sys.dim(), 4);
        let ak = sys.apply(Piece::AK, &x);
        assert!(mul_diag(&sys.chi_k, &ak).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn identities_hold_in_both_modes() {
        let p = PowerOptions { tol: 1e-10, max_iter: 500, ..Default::default() };
        for mode in [GluingMode::ToCap, GluingMode::FromCap] {
            let sys = dense_system(mode, PotentialFamily::NontrapBump { amplitude: 0.5, width: 1.0 });
            assert!(sys.dense_gluing_residual(&p).unwrap() < 1e-10);
            assert!(check_factor_identity(&sys, true, &p).unwrap() < 1e-10);
            assert!(check_factor_identity(&sys, false, &p).unwrap() > 1e-3);
            assert!(probe_factor_identity(&sys, true, 2, 1) < 1e-10);
            assert!(check_nilpotency(&sys, &p).unwrap().holds(1e-12));
        }
    }

    #[test]
    fn synthetic_quartic_decay() {
        let hs = [0.1_f64, 0.07, 0.05, 0.035, 0.025];
        let v: Vec<f64> = hs.iter().map(|h| 3.0 * h.powi(4)).collect();
        let f = decay_fit(&hs, &v).unwrap();
        assert!((f.order - 4.0).abs() < 0.1);
        // constant slopes: a fixed power, however large, is not flagged
        assert!(!f.superpolynomial);
        let v2: Vec<f64> = hs.iter().map(|h| (-1.0 / h).exp()).collect();
        assert!(decay_fit(&hs, &v2).unwrap().superpolynomial);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("toCAP".parse::<GluingMode>().unwrap(), GluingMode::ToCap);
        assert!("sideways".parse::<GluingMode>().is_err());
    }
}
