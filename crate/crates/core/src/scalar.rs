//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
///
/// Operators are complex-valued, so everything downstream works with
/// [`Complex<T>`]. Rational or exact scalars are not supported: the
/// solvers divide by pivots and take square roots.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + LowerExp
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only if the literal is not representable at all.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    /// Grid on which profile values are snapped so that `1 - v` and
    /// `(1 - v) + v` are exact for every value `v` in `[0, 1]`.
    #[inline]
    fn profile_quantum() -> Self {
        Self::epsilon() / (Self::one() + Self::one())
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over `T`.
pub type Cplx<T> = Complex<T>;

#[inline]
pub fn cplx<T: Real>(re: T, im: T) -> Cplx<T> {
    Complex::new(re, im)
}

#[inline]
pub fn real<T: Real>(re: T) -> Cplx<T> {
    Complex::new(re, T::zero())
}

/// Euclidean norm of a complex vector (no quadrature weight).
pub fn norm2<T: Real>(v: &[Cplx<T>]) -> T {
    // scaled accumulation avoids overflow/underflow on tiny error products
    let scale = v.iter().map(|z| z.re.abs().max(z.im.abs())).fold(T::zero(), T::max);
    if scale == T::zero() || !scale.is_finite() {
        return scale;
    }
    let s: T = v.iter().map(|z| (*z / scale).norm_sqr()).sum();
    scale * s.sqrt()
}

/// `⟨u, v⟩ = Σ conj(u_i) v_i`.
pub fn dot<T: Real>(u: &[Cplx<T>], v: &[Cplx<T>]) -> Cplx<T> {
    u.iter().zip(v).fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b)
}

pub fn scale_in_place<T: Real>(v: &mut [Cplx<T>], s: T) {
    for z in v.iter_mut() {
        *z = *z * s;
    }
}

/// `v ⊙ w` for a real weight `w`.
pub fn mul_diag<T: Real>(w: &[T], v: &[Cplx<T>]) -> Vec<Cplx<T>> {
    w.iter().zip(v).map(|(a, z)| *z * *a).collect()
}
