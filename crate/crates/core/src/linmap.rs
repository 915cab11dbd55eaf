//! Matrix-free linear maps and largest-singular-value estimation.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::band::BandMatrix;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::factor::Factorization;
use crate::scalar::{dot, mul_diag, norm2, Cplx, Real};

/// A square linear map known through its action and its adjoint's action
/// (adjoint with respect to the grid inner product; the uniform quadrature
/// weight cancels, so this is the conjugate transpose).
pub trait LinearMap<T: Real>: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>>;
    fn apply_adjoint(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>>;

    /// Dense realization column by column.
    fn to_dense(&self) -> DenseMatrix<T> {
        let n = self.dim();
        DenseMatrix::from_columns(n, |j| {
            let mut e = vec![Complex::new(T::zero(), T::zero()); n];
            e[j] = Complex::new(T::one(), T::zero());
            self.apply(&e)
        })
    }
}

impl<T: Real> LinearMap<T> for BandMatrix<T> {
    fn dim(&self) -> usize {
        BandMatrix::dim(self)
    }
    fn apply(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>> {
        self.mul_vec(x)
    }
    fn apply_adjoint(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>> {
        self.adjoint_mul_vec(x)
    }
}

impl<T: Real> LinearMap<T> for DenseMatrix<T> {
    fn dim(&self) -> usize {
        self.cols()
    }
    fn apply(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>> {
        self.mul_vec(x)
    }
    fn apply_adjoint(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>> {
        (0..self.cols())
            .map(|j| (0..self.rows()).fold(Complex::new(T::zero(), T::zero()), |acc, i| acc + self.get(i, j).conj() * x[i]))
            .collect()
    }
    fn to_dense(&self) -> DenseMatrix<T> {
        self.clone()
    }
}

/// `diag(left)·A⁻¹·diag(right)` for a factored `A`.
pub struct CutoffResolvent<'a, T> {
    pub fact: &'a Factorization<T>,
    pub left: &'a [T],
    pub right: &'a [T],
}

impl<T: Real> LinearMap<T> for CutoffResolvent<'_, T> {
    fn dim(&self) -> usize {
        self.fact.dim()
    }
    fn apply(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>> {
        let mut y = mul_diag(self.right, x);
        self.fact.solve_in_place(&mut y);
        mul_diag(self.left, &y)
    }
    fn apply_adjoint(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>> {
        let mut y = mul_diag(self.left, x);
        self.fact.solve_adjoint_in_place(&mut y);
        mul_diag(self.right, &y)
    }
}

/// Map given by a pair of closures.
pub struct FnMap<F, G> {
    pub n: usize,
    pub forward: F,
    pub adjoint: G,
}

impl<T, F, G> LinearMap<T> for FnMap<F, G>
where
    T: Real,
    F: Fn(&[Cplx<T>]) -> Vec<Cplx<T>> + Sync,
    G: Fn(&[Cplx<T>]) -> Vec<Cplx<T>> + Sync,
{
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>> {
        (self.forward)(x)
    }
    fn apply_adjoint(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>> {
        (self.adjoint)(x)
    }
}

/// `A·B`.
pub struct Product<'a, T> {
    pub outer: &'a dyn LinearMap<T>,
    pub inner: &'a dyn LinearMap<T>,
}

impl<T: Real> LinearMap<T> for Product<'_, T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn apply(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>> {
        self.outer.apply(&self.inner.apply(x))
    }
    fn apply_adjoint(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>> {
        self.inner.apply_adjoint(&self.outer.apply_adjoint(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptions<T> {
    /// Relative accuracy target for the singular value.
    pub tol: T,
    pub max_iter: usize,
    pub seed: u64,
    /// Number of vectors iterated together. Symmetric configurations have
    /// nearly degenerate leading singular pairs; a block of a few vectors
    /// converges at the rate of the first well-separated value instead.
    pub block: usize,
}

impl<T: Real> Default for PowerOptions<T> {
    fn default() -> Self {
        Self { tol: T::lit(1e-6), max_iter: 500, seed: 0x5eed, block: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularEstimate<T> {
    pub value: T,
    pub iterations: usize,
    pub converged: bool,
    /// `‖M*M v - σ² v‖ / σ²` for the leading Ritz vector.
    pub residual: T,
    /// Estimated `1 - ρ` where `ρ` is the observed contraction rate.
    pub gap: T,
}

pub fn random_unit_vector<T: Real>(n: usize, seed: u64) -> Vec<Cplx<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Cplx<T>> = (0..n)
        .map(|_| Complex::new(T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(-1.0..1.0))))
        .collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|z| *z = *z / nv);
    v
}

/// Orthonormalizes the columns in place (two passes of modified
/// Gram–Schmidt), dropping columns that become numerically zero.
fn orthonormalize<T: Real>(cols: &mut Vec<Vec<Cplx<T>>>) {
    let mut out: Vec<Vec<Cplx<T>>> = Vec::with_capacity(cols.len());
    for mut c in cols.drain(..) {
        let before = norm2(&c);
        for _ in 0..2 {
            for q in &out {
                let p = dot(q, &c);
                c.iter_mut().zip(q).for_each(|(a, b)| *a = *a - *b * p);
            }
        }
        let nc = norm2(&c);
        if nc > before * T::lit(1e-10) && nc > T::zero() {
            c.iter_mut().for_each(|z| *z = *z / nc);
            out.push(c);
        }
    }
    *cols = out;
}

/// Eigen-decomposition of a small Hermitian matrix by cyclic Jacobi
/// rotations. Returns eigenvalues in decreasing order and the matching
/// eigenvectors as columns.
pub fn hermitian_eigen<T: Real>(a: &DenseMatrix<T>) -> (Vec<T>, DenseMatrix<T>) {
    let n = a.rows();
    let mut a = a.clone();
    let mut v = DenseMatrix::identity(n);
    let zero = Complex::new(T::zero(), T::zero());
    for _sweep in 0..60 {
        let off: T = (0..n).flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j))).map(|(i, j)| a.get(i, j).norm_sqr()).sum();
        let diag: T = (0..n).map(|i| a.get(i, i).norm_sqr()).sum();
        if off <= T::epsilon() * T::epsilon() * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                let m = apq.norm();
                if m == T::zero() {
                    continue;
                }
                let phase = apq / m;
                let tau = (a.get(q, q).re - a.get(p, p).re) / (m + m);
                let t = tau.signum() / (tau.abs() + (T::one() + tau * tau).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                // J = D·R with D = diag(1, conj(phase)) on (p, q)
                let mut j = DenseMatrix::identity(n);
                j.set(p, p, Complex::new(c, T::zero()));
                j.set(p, q, Complex::new(s, T::zero()));
                j.set(q, p, phase.conj() * (-s));
                j.set(q, q, phase.conj() * c);
                a = j.adjoint().matmul(&a).matmul(&j);
                a.set(p, q, zero);
                a.set(q, p, zero);
                v = v.matmul(&j);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|x, y| a.get(*y, *y).re.partial_cmp(&a.get(*x, *x).re).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| a.get(i, i).re).collect();
    let vecs = DenseMatrix::from_columns(n, |k| (0..n).map(|i| v.get(i, order[k])).collect());
    (values, vecs)
}

fn combine<T: Real>(cols: &[Vec<Cplx<T>>], coef: &DenseMatrix<T>, k: usize) -> Vec<Cplx<T>> {
    let n = cols[0].len();
    let mut out = vec![Complex::new(T::zero(), T::zero()); n];
    for (j, c) in cols.iter().enumerate() {
        let w = coef.get(j, k);
        out.iter_mut().zip(c).for_each(|(o, x)| *o = *o + *x * w);
    }
    out
}

/// Block power iteration on `M*M` with Rayleigh–Ritz extraction.
///
/// Stops when the leading Ritz residual, or the extrapolated error of the
/// leading Ritz value (from the observed contraction ratio), is below `tol`
/// relative to `σ²`. With `block = 1` this is plain power iteration.
pub fn power_iteration<T: Real>(map: &dyn LinearMap<T>, opts: &PowerOptions<T>) -> SingularEstimate<T> {
    let n = map.dim();
    let b = opts.block.clamp(1, n.max(1));
    let mut basis: Vec<Vec<Cplx<T>>> =
        (0..b).map(|k| random_unit_vector::<T>(n, opts.seed.wrapping_add(k as u64 * 0x9e37))).collect();
    orthonormalize(&mut basis);
    let mut theta_prev = T::zero();
    let mut delta_prev = T::zero();
    let mut est = SingularEstimate {
        value: T::zero(),
        iterations: 0,
        converged: false,
        residual: T::infinity(),
        gap: T::one(),
    };
    for k in 1..=opts.max_iter {
        est.iterations = k;
        let images: Vec<Vec<Cplx<T>>> = {
            use rayon::prelude::*;
            basis.par_iter().map(|v| map.apply(v)).collect()
        };
        let m = basis.len();
        let gram = DenseMatrix::from_columns(m, |j| (0..m).map(|i| dot(&images[i], &images[j])).collect());
        let (vals, vecs) = hermitian_eigen(&gram);
        let theta = vals[0].max(T::zero());
        est.value = theta.sqrt();
        if theta == T::zero() {
            est.residual = T::zero();
            est.converged = true;
            return est;
        }
        let back: Vec<Vec<Cplx<T>>> = {
            use rayon::prelude::*;
            images.par_iter().map(|w| map.apply_adjoint(w)).collect()
        };
        let y = combine(&basis, &vecs, 0);
        let zy = combine(&back, &vecs, 0);
        let r: Vec<_> = zy.iter().zip(&y).map(|(a, c)| *a - *c * theta).collect();
        est.residual = norm2(&r) / theta;
        let delta = (theta - theta_prev).abs();
        if k >= 3 && delta_prev > T::zero() {
            let rho = (delta / delta_prev).min(T::lit(0.999_999));
            est.gap = T::one() - rho;
            if delta * rho / (T::one() - rho) <= opts.tol * theta {
                est.converged = true;
                return est;
            }
        }
        if est.residual <= opts.tol {
            est.converged = true;
            return est;
        }
        theta_prev = theta;
        delta_prev = delta;
        let mut next: Vec<Vec<Cplx<T>>> = (0..m).map(|j| combine(&back, &vecs, j)).collect();
        orthonormalize(&mut next);
        if next.is_empty() {
            est.converged = true;
            return est;
        }
        basis = next;
    }
    est
}

/// Like [`power_iteration`] but non-convergence is an error.
pub fn largest_singular_value<T: Real>(map: &dyn LinearMap<T>, opts: &PowerOptions<T>) -> Result<SingularEstimate<T>> {
    let est = power_iteration(map, opts);
    if est.converged {
        Ok(est)
    } else {
        Err(Error::NoConvergence {
            iterations: est.iterations,
            estimate: est.value.as_f64(),
            gap: est.gap.as_f64(),
        })
    }
}

/// `|⟨M u, v⟩ - ⟨u, M* v⟩| / (‖M‖_est ‖u‖ ‖v‖)` on seeded random pairs.
pub fn adjoint_defect<T: Real>(map: &dyn LinearMap<T>, pairs: usize, seed: u64) -> T {
    let n = map.dim();
    let mut worst = T::zero();
    for k in 0..pairs {
        let u = random_unit_vector::<T>(n, seed.wrapping_add(2 * k as u64));
        let v = random_unit_vector::<T>(n, seed.wrapping_add(2 * k as u64 + 1));
        let mu = map.apply(&u);
        let msv = map.apply_adjoint(&v);
        let lhs = dot(&v, &mu);
        let rhs = dot(&msv, &u);
        let scale = norm2(&mu).max(norm2(&msv)).max(T::min_positive_value());
        worst = worst.max((lhs - rhs).norm() / scale);
    }
    worst
}
