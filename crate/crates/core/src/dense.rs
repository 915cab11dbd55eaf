//! Small dense complex matrices used for oracle realizations.

use crate::scalar::{norm2, Cplx, Real};
use num_complex::Complex;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Cplx<T>>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex::new(T::zero(), T::zero()); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex::new(T::one(), T::zero()));
        }
        m
    }

    pub fn diagonal(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m.set(i, i, Complex::new(*v, T::zero()));
        }
        m
    }

    /// Builds the matrix column by column.
    pub fn from_columns(n: usize, col: impl Fn(usize) -> Vec<Cplx<T>>) -> Self {
        let mut m = Self::zeros(n, n);
        for j in 0..n {
            let c = col(j);
            for (i, v) in c.into_iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Cplx<T> {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Cplx<T>) {
        self.data[i * self.cols + j] = v;
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == Complex::new(T::zero(), T::zero()) {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * other.cols + j;
                    out.data[idx] = out.data[idx] + a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    fn zip(&self, other: &Self, f: impl Fn(Cplx<T>, Cplx<T>) -> Cplx<T>) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>> {
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(Complex::new(T::zero(), T::zero()), |acc, j| acc + self.get(i, j) * x[j])
            })
            .collect()
    }

    pub fn frobenius(&self) -> T {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    /// Largest singular value by power iteration on `A^H A` with a fixed
    /// start; converges to the requested relative accuracy or returns the
    /// best estimate after `max_iter` sweeps.
    pub fn spectral_norm(&self, tol: T, max_iter: usize) -> T {
        let n = self.cols;
        if n == 0 || self.frobenius() == T::zero() {
            return T::zero();
        }
        let adj = self.adjoint();
        let mut v: Vec<Cplx<T>> = (0..n)
            .map(|k| {
                let t = T::from_usize_lossy(k + 1);
                Complex::new(T::one() + (t * T::lit(0.618_033_988_749_895)).fract(), (t * T::lit(0.414_213_562)).fract())
            })
            .collect();
        let mut sigma = T::zero();
        for _ in 0..max_iter {
            let nv = norm2(&v);
            v.iter_mut().for_each(|z| *z = *z / nv);
            let av = self.mul_vec(&v);
            let next = norm2(&av);
            v = adj.mul_vec(&av);
            if (next - sigma).abs() <= tol * next {
                return next;
            }
            sigma = next;
        }
        sigma
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;

    #[test]
    fn identity_products() {
        let a = DenseMatrix::from_columns(3, |j| (0..3).map(|i| cplx((i + 2 * j) as f64, 1.0)).collect());
        let i3 = DenseMatrix::identity(3);
        assert_eq!(a.matmul(&i3), a);
        assert_eq!(i3.matmul(&a), a);
        assert_eq!(a.sub(&a).frobenius(), 0.0);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let d = DenseMatrix::<f64>::diagonal(&[1.0, -3.0, 2.0]);
        assert!((d.spectral_norm(1e-14, 1000) - 3.0).abs() < 1e-10);
    }
}
