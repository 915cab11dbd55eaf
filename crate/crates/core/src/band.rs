//! Complex band matrices in row-major band storage.

use crate::dense::DenseMatrix;
use crate::scalar::{Cplx, Real};
use num_complex::Complex;

/// Square matrix with `kl` sub- and `ku` superdiagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<Cplx<T>>,
}

impl<T: Real> BandMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let w = kl + ku + 1;
        Self { n, kl, ku, data: vec![Complex::new(T::zero(), T::zero()); n * w] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower(&self) -> usize {
        self.kl
    }

    pub fn upper(&self) -> usize {
        self.ku
    }

    fn width(&self) -> usize {
        self.kl + self.ku + 1
    }

    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku && i < self.n && j < self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Cplx<T> {
        if self.in_band(i, j) {
            self.data[i * self.width() + j + self.kl - i]
        } else {
            Complex::new(T::zero(), T::zero())
        }
    }

    /// Panics when `(i, j)` is outside the band.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Cplx<T>) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let w = self.width();
        self.data[i * w + j + self.kl - i] = v;
    }

    /// Column range stored for row `i`.
    #[inline]
    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.kl)..(i + self.ku + 1).min(self.n)
    }

    pub fn apply(&self, x: &[Cplx<T>], y: &mut [Cplx<T>]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for j in self.row_range(i) {
                acc = acc + self.get(i, j) * x[j];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>> {
        let mut y = vec![Complex::new(T::zero(), T::zero()); self.n];
        self.apply(x, &mut y);
        y
    }

    /// `y = A^H x`.
    pub fn apply_adjoint(&self, x: &[Cplx<T>], y: &mut [Cplx<T>]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for v in y.iter_mut() {
            *v = Complex::new(T::zero(), T::zero());
        }
        for (i, xi) in x.iter().enumerate() {
            for j in self.row_range(i) {
                y[j] = y[j] + self.get(i, j).conj() * *xi;
            }
        }
    }

    pub fn adjoint_mul_vec(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>> {
        let mut y = vec![Complex::new(T::zero(), T::zero()); self.n];
        self.apply_adjoint(x, &mut y);
        y
    }

    /// Adds `d` to the diagonal.
    pub fn add_diagonal(&mut self, d: impl Fn(usize) -> Cplx<T>) {
        for i in 0..self.n {
            let v = self.get(i, i) + d(i);
            self.set(i, i, v);
        }
    }

    /// Rows containing at least one nonzero entry.
    pub fn nonzero_rows(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| self.row_range(i).any(|j| self.get(i, j) != Complex::new(T::zero(), T::zero())))
            .collect()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> T {
        let mut col = vec![T::zero(); self.n];
        for i in 0..self.n {
            for j in self.row_range(i) {
                col[j] = col[j] + self.get(i, j).norm();
            }
        }
        col.into_iter().fold(T::zero(), T::max)
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut m = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in self.row_range(i) {
                m.set(i, j, self.get(i, j));
            }
        }
        m
    }

    /// Entrywise map over the stored band.
    pub fn map(&self, f: impl Fn(usize, usize, Cplx<T>) -> Cplx<T>) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            for j in self.row_range(i) {
                out.set(i, j, f(i, j, self.get(i, j)));
            }
        }
        out
    }

    pub fn is_complex_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row_range(i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;

    fn sample() -> BandMatrix<f64> {
        let mut b = BandMatrix::zeros(5, 1, 2);
        for i in 0..5 {
            for j in b.row_range(i) {
                b.set(i, j, cplx((i * 5 + j) as f64, (i as f64) - (j as f64)));
            }
        }
        b
    }

    #[test]
    fn apply_matches_dense() {
        let b = sample();
        let d = b.to_dense();
        let x: Vec<_> = (0..5).map(|k| cplx(k as f64 + 0.5, -(k as f64))).collect();
        let y = b.mul_vec(&x);
        let yd = d.mul_vec(&x);
        assert_eq!(y, yd);
        let ya = b.adjoint_mul_vec(&x);
        let yad = d.adjoint().mul_vec(&x);
        for (a, c) in ya.iter().zip(&yad) {
            assert!((a - c).norm() < 1e-12);
        }
    }

    #[test]
    fn out_of_band_reads_zero() {
        let b = sample();
        assert_eq!(b.get(4, 0), cplx(0.0, 0.0));
        assert_eq!(b.get(0, 3), cplx(0.0, 0.0));
        assert_ne!(b.get(0, 2), cplx(0.0, 0.0));
    }
}
