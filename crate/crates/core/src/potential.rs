//! Compactly supported smooth potentials and differentiable interpolation.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Real;

/// A real function of one variable with a derivative, as needed by the
/// Hamiltonian flow.
pub trait SmoothFunction<T: Real>: Sync {
    fn value(&self, x: T) -> T;
    fn derivative(&self, x: T) -> T;
}

/// `b(u) = exp(1 - 1/(1-u²))` on `|u| < 1`, zero outside; `b(0) = 1`,
/// `b''(0) = -2`.
fn bump<T: Real>(u: T) -> (T, T) {
    let one = T::one();
    let q = one - u * u;
    if q <= T::zero() {
        return (T::zero(), T::zero());
    }
    let v = (one - one / q).exp();
    let dv = v * (-T::lit(2.0) * u / (q * q));
    (v, dv)
}

/// Analytic potential families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialFamily<T> {
    Zero,
    /// `A·b(x/w)` with `A` below the working energy.
    NontrapBump { amplitude: T, width: T },
    /// Same template with `A` equal to the working energy: a nondegenerate
    /// maximum at the origin.
    BarrierTop { amplitude: T, width: T },
    /// `A·(b((x-c)/w) + b((x+c)/w))`: two barriers enclosing a well.
    DoubleBumpWell { amplitude: T, centre: T, width: T },
}

impl<T: Real> PotentialFamily<T> {
    /// Radius outside of which the potential vanishes identically.
    pub fn support_radius(&self) -> T {
        match *self {
            PotentialFamily::Zero => T::zero(),
            PotentialFamily::NontrapBump { width, .. } | PotentialFamily::BarrierTop { width, .. } => width,
            PotentialFamily::DoubleBumpWell { centre, width, .. } => centre.abs() + width,
        }
    }

    pub fn max_value(&self) -> T {
        match *self {
            PotentialFamily::Zero => T::zero(),
            PotentialFamily::NontrapBump { amplitude, .. }
            | PotentialFamily::BarrierTop { amplitude, .. }
            | PotentialFamily::DoubleBumpWell { amplitude, .. } => amplitude.max(T::zero()),
        }
    }

    /// Location of the global maximum (the barrier-top fixed point).
    pub fn argmax(&self) -> T {
        match *self {
            PotentialFamily::DoubleBumpWell { centre, .. } => centre.abs(),
            _ => T::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, PotentialFamily::Zero)
    }

    /// Checks `supp V ⊂ {|x| ≤ R0}` (the open support is then inside `|x| < R0`).
    pub fn check_support(&self, r0: T) -> Result<()> {
        if self.support_radius() > r0 {
            return Err(Error::LayoutViolation(format!(
                "potential support radius {} exceeds R0 = {r0}",
                self.support_radius()
            )));
        }
        if let PotentialFamily::DoubleBumpWell { centre, width, .. } = *self {
            if centre.abs() < width {
                return Err(Error::InvalidParameter("double bump centres overlap".into()));
            }
        }
        Ok(())
    }

    pub fn sample(&self, grid: &Grid<T>) -> PotentialSpec<T> {
        PotentialSpec { family: *self, values: grid.sample(|x| self.value(x)) }
    }
}

impl<T: Real> SmoothFunction<T> for PotentialFamily<T> {
    fn value(&self, x: T) -> T {
        match *self {
            PotentialFamily::Zero => T::zero(),
            PotentialFamily::NontrapBump { amplitude, width } | PotentialFamily::BarrierTop { amplitude, width } => {
                amplitude * bump(x / width).0
            }
            PotentialFamily::DoubleBumpWell { amplitude, centre, width } => {
                amplitude * (bump((x - centre) / width).0 + bump((x + centre) / width).0)
            }
        }
    }

    fn derivative(&self, x: T) -> T {
        match *self {
            PotentialFamily::Zero => T::zero(),
            PotentialFamily::NontrapBump { amplitude, width } | PotentialFamily::BarrierTop { amplitude, width } => {
                amplitude * bump(x / width).1 / width
            }
            PotentialFamily::DoubleBumpWell { amplitude, centre, width } => {
                amplitude * (bump((x - centre) / width).1 + bump((x + centre) / width).1) / width
            }
        }
    }
}

/// A potential family together with its samples on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec<T> {
    pub family: PotentialFamily<T>,
    pub values: Vec<T>,
}

impl<T: Real> PotentialSpec<T> {
    pub fn zero(n: usize) -> Self {
        Self { family: PotentialFamily::Zero, values: vec![T::zero(); n] }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == T::zero())
    }
}

/// Natural cubic spline through samples on a uniform grid.
#[derive(Debug, Clone)]
pub struct CubicSpline<T> {
    x0: T,
    dx: T,
    y: Vec<T>,
    m: Vec<T>,
}

impl<T: Real> CubicSpline<T> {
    pub fn new(grid: &Grid<T>, values: &[T]) -> Result<Self> {
        let n = values.len();
        if n != grid.len() || n < 3 {
            return Err(Error::GridMismatch { expected: grid.len(), found: n });
        }
        let dx = grid.spacing();
        // second derivatives from the tridiagonal system m_{i-1} + 4 m_i + m_{i+1} = 6 Δ²y / dx²
        let mut m = vec![T::zero(); n];
        let mut c = vec![T::zero(); n];
        let mut d = vec![T::zero(); n];
        let six = T::lit(6.0);
        let four = T::lit(4.0);
        for i in 1..n - 1 {
            let rhs = six * (values[i + 1] - T::lit(2.0) * values[i] + values[i - 1]) / (dx * dx);
            let denom = four - if i > 1 { c[i - 1] } else { T::zero() };
            c[i] = T::one() / denom;
            d[i] = (rhs - if i > 1 { d[i - 1] } else { T::zero() }) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        Ok(Self { x0: grid.nodes()[0], dx, y: values.to_vec(), m })
    }

    fn locate(&self, x: T) -> (usize, T) {
        let n = self.y.len();
        let s = ((x - self.x0) / self.dx).floor();
        let i = s.max(T::zero()).to_usize().unwrap_or(0).min(n - 2);
        let t = (x - self.x0) / self.dx - T::from_usize_lossy(i);
        (i, t)
    }
}

impl<T: Real> SmoothFunction<T> for CubicSpline<T> {
    fn value(&self, x: T) -> T {
        let (i, t) = self.locate(x);
        let (a, b) = (T::one() - t, t);
        let h2 = self.dx * self.dx / T::lit(6.0);
        a * self.y[i] + b * self.y[i + 1] + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h2
    }

    fn derivative(&self, x: T) -> T {
        let (i, t) = self.locate(x);
        let (a, b) = (T::one() - t, t);
        let three = T::lit(3.0);
        (self.y[i + 1] - self.y[i]) / self.dx
            + ((-(three * a * a - T::one())) * self.m[i] + (three * b * b - T::one()) * self.m[i + 1]) * self.dx
                / T::lit(6.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn bump_shape() {
        let v = PotentialFamily::BarrierTop { amplitude: 1.0, width: 1.0 };
        assert_eq!(v.value(0.0), 1.0);
        assert_eq!(v.derivative(0.0), 0.0);
        assert_eq!(v.value(1.0), 0.0);
        assert_eq!(v.value(-1.5), 0.0);
        // b(u) ≈ 1 - u² near the top
        assert!((v.value(1e-3) - (1.0 - 1e-6_f64)).abs() < 1e-10);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let fams = [
            PotentialFamily::NontrapBump { amplitude: 0.5, width: 1.0 },
            PotentialFamily::DoubleBumpWell { amplitude: 2.0, centre: 0.5, width: 0.45 },
        ];
        for f in fams {
            for i in -19..20 {
                let x = i as f64 * 0.05 + 0.013;
                let eps = 1e-6;
                let fd = (f.value(x + eps) - f.value(x - eps)) / (2.0 * eps);
                assert!((fd - f.derivative(x)).abs() < 1e-6, "x={x}");
            }
        }
    }

    #[test]
    fn support_check() {
        let v = PotentialFamily::NontrapBump { amplitude: 0.5, width: 1.5 };
        assert!(v.check_support(1.0).is_err());
        assert!(PotentialFamily::DoubleBumpWell { amplitude: 2.0, centre: 0.5, width: 0.45 }
            .check_support(1.0)
            .is_ok());
        let g = make_grid(13.0_f64, 0.01).unwrap();
        let s = PotentialFamily::NontrapBump { amplitude: 0.5, width: 1.0 }.sample(&g);
        for (x, v) in g.nodes().iter().zip(&s.values) {
            if x.abs() >= 1.0 {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn spline_reproduces_smooth_potential() {
        let g = make_grid(3.0, 0.01).unwrap();
        let f = PotentialFamily::BarrierTop { amplitude: 1.0, width: 1.0 };
        let s = CubicSpline::new(&g, &f.sample(&g).values).unwrap();
        for i in 0..300 {
            let x = -1.4 + i as f64 * 0.00937;
            assert!((s.value(x) - f.value(x)).abs() < 1e-6);
            assert!((s.derivative(x) - f.derivative(x)).abs() < 1e-3);
        }
    }
}
