//! Least-squares fits on log–log scales.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    /// Root-mean-square residual.
    pub rms: T,
}

pub fn linear_fit<T: Real>(x: &[T], y: &[T]) -> Result<LineFit<T>> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::DegenerateSweep(format!("need at least 2 paired samples, got {n}")));
    }
    let nf = T::from_usize_lossy(n);
    let mx = x.iter().copied().sum::<T>() / nf;
    let my = y.iter().copied().sum::<T>() / nf;
    let sxx: T = x.iter().map(|a| (*a - mx) * (*a - mx)).sum();
    if sxx == T::zero() {
        return Err(Error::DegenerateSweep("all abscissae are equal".into()));
    }
    let sxy: T = x.iter().zip(y).map(|(a, b)| (*a - mx) * (*b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: T = x.iter().zip(y).map(|(a, b)| (*b - intercept - slope * *a).powi(2)).sum();
    Ok(LineFit { slope, intercept, rms: (ss / nf).sqrt() })
}

/// Coefficient `c₂` of the least-squares quadratic `c₀ + c₁x + c₂x²`.
pub fn quadratic_coefficient<T: Real>(x: &[T], y: &[T]) -> Result<T> {
    let n = x.len();
    if n < 3 {
        return Err(Error::DegenerateSweep("quadratic fit needs 3 samples".into()));
    }
    let nf = T::from_usize_lossy(n);
    let mx = x.iter().copied().sum::<T>() / nf;
    let u: Vec<T> = x.iter().map(|a| *a - mx).collect();
    let s = |p: i32| u.iter().map(|a| a.powi(p)).sum::<T>();
    let t = |p: i32| u.iter().zip(y).map(|(a, b)| a.powi(p) * *b).sum::<T>();
    // normal equations in centred coordinates
    let m = [[nf, s(1), s(2)], [s(1), s(2), s(3)], [s(2), s(3), s(4)]];
    let r = [t(0), t(1), t(2)];
    let det3 = |a: [[T; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det3(m);
    if d.abs() <= T::epsilon() * m[2][2] * m[2][2] {
        return Err(Error::DegenerateSweep("quadratic normal equations are singular".into()));
    }
    let mut m2 = m;
    for (row, rv) in m2.iter_mut().zip(r) {
        row[2] = rv;
    }
    Ok(det3(m2) / d)
}

/// Least-squares slopes over sliding windows of `window` consecutive points.
pub fn local_slopes<T: Real>(x: &[T], y: &[T], window: usize) -> Result<Vec<T>> {
    if window < 2 || x.len() < window {
        return Err(Error::DegenerateSweep(format!("window {window} does not fit {} samples", x.len())));
    }
    (0..=x.len() - window)
        .map(|i| linear_fit(&x[i..i + window], &y[i..i + window]).map(|f| f.slope))
        .collect()
}

/// Power-law fit `norm ≈ c·h^{-p}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit<T> {
    pub exponent: T,
    pub prefactor: T,
    pub residual_rms: T,
    /// Second-order coefficient of `log norm` against `log(1/h)`.
    pub curvature: T,
    /// Slope of `log(h·norm)` against `log log(1/h)`: the power of
    /// `log(1/h)` a `log^q(1/h)/h` model would need.
    pub log_power: T,
    /// `h·norm` strictly increases as `h` decreases.
    pub excess_increasing: bool,
}

/// Fits `norm ≈ c·h^{-p}` on a log–log scale. Needs at least five samples
/// spanning a factor of four in `h`, all with `h < 1`.
pub fn scaling_fit<T: Real>(hs: &[T], norms: &[T]) -> Result<ScalingFit<T>> {
    if hs.len() != norms.len() {
        return Err(Error::DegenerateSweep("h and norm lists differ in length".into()));
    }
    if hs.len() < 5 {
        return Err(Error::DegenerateSweep(format!("need at least 5 samples, got {}", hs.len())));
    }
    let hmax = hs.iter().copied().fold(T::neg_infinity(), T::max);
    let hmin = hs.iter().copied().fold(T::infinity(), T::min);
    if hmax == hmin {
        return Err(Error::DegenerateSweep("all h are equal".into()));
    }
    if hmax / hmin < T::lit(4.0) * (T::one() - T::lit(1e-9)) {
        return Err(Error::DegenerateSweep(format!("h spans a factor {} < 4", hmax / hmin)));
    }
    if hmax >= T::one() || norms.iter().any(|v| !(*v > T::zero())) {
        return Err(Error::DegenerateSweep("need 0 < h < 1 and positive norms".into()));
    }
    let x: Vec<T> = hs.iter().map(|h| -h.ln()).collect();
    let y: Vec<T> = norms.iter().map(|v| v.ln()).collect();
    let line = linear_fit(&x, &y)?;
    let curvature = quadratic_coefficient(&x, &y)?;
    let lx: Vec<T> = x.iter().map(|v| v.ln()).collect();
    let excess: Vec<T> = hs.iter().zip(norms).map(|(h, v)| (*h * *v).ln()).collect();
    let log_power = linear_fit(&lx, &excess)?.slope;
    let mut order: Vec<usize> = (0..hs.len()).collect();
    order.sort_by(|a, b| hs[*b].partial_cmp(&hs[*a]).unwrap_or(std::cmp::Ordering::Equal));
    let excess_increasing = order.windows(2).all(|w| excess[w[1]] > excess[w[0]]);
    Ok(ScalingFit {
        exponent: line.slope,
        prefactor: line.intercept.exp(),
        residual_rms: line.rms,
        curvature,
        log_power,
        excess_increasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SWEEP: [f64; 5] = [0.1, 0.07, 0.05, 0.035, 0.025];

    #[test]
    fn exact_power_law() {
        let n: Vec<f64> = SWEEP.iter().map(|h| 7.0 / h).collect();
        let f = scaling_fit(&SWEEP, &n).unwrap();
        assert!((f.exponent - 1.0).abs() < 1e-6);
        assert!((f.prefactor - 7.0).abs() < 1e-6);
        assert!(f.residual_rms < 1e-12);
        assert!(f.log_power.abs() < 1e-9);
        assert!(!f.excess_increasing);
    }

    #[test]
    fn constant_curve() {
        let n = [3.0; 5];
        let f = scaling_fit(&SWEEP, &n).unwrap();
        assert!(f.exponent.abs() < 1e-12);
    }

    #[test]
    fn log_corrected_curve() {
        let n: Vec<f64> = SWEEP.iter().map(|h| (1.0 / h).ln() / h).collect();
        let f = scaling_fit(&SWEEP, &n).unwrap();
        assert!(f.exponent > 1.0 && f.exponent < 1.5, "{f:?}");
        assert!((f.log_power - 1.0).abs() < 1e-9);
        assert!(f.excess_increasing);
        // log(1/h)/h is concave in log–log coordinates
        assert!(f.curvature < 0.0);
    }

    #[test]
    fn degenerate_sweeps() {
        assert!(scaling_fit(&[0.1; 5], &[1.0; 5]).is_err());
        assert!(scaling_fit(&SWEEP[..4], &[1.0; 4]).is_err());
        assert!(scaling_fit(&[0.1, 0.09, 0.08, 0.07, 0.06], &[1.0; 5]).is_err());
    }

    #[test]
    fn windows() {
        let x = [0.0_f64, 1.0, 2.0, 3.0];
        let y = [0.0_f64, 1.0, 4.0, 9.0];
        let s = local_slopes(&x, &y, 3).unwrap();
        assert_eq!(s, vec![2.0, 4.0]);
        assert!((quadratic_coefficient(&x, &y).unwrap() - 1.0).abs() < 1e-12);
    }
}
