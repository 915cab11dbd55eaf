use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::scalar::Real;

use super::fbi::{AmplitudeField, PhaseGrid};

pub const DEFAULT_THRESHOLD: f64 = 1e-3;
/// Phase cells added around a mask before ray-intersection tests.
pub const DEFAULT_DILATION: usize = 3;

/// `amp ≥ τ·max amp` on a phase grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WavefrontMask<T> {
    pub phase: PhaseGrid<T>,
    pub tau: T,
    pub h: T,
    pub max_amp: T,
    pub mask: Vec<bool>,
}

pub fn wavefront_mask<T: Real>(field: &AmplitudeField<T>, tau: T) -> Result<WavefrontMask<T>> {
    if !(tau > T::zero() && tau < T::one()) {
        return Err(Error::InvalidParameter(format!("threshold must lie in (0, 1), got {tau}")));
    }
    let max_amp = field.max();
    let cut = tau * max_amp;
    let mask = field.amp.iter().map(|a| max_amp > T::zero() && *a >= cut).collect();
    Ok(WavefrontMask { phase: field.phase.clone(), tau, h: field.h, max_amp, mask })
}

impl<T: Real> WavefrontMask<T> {
    pub fn count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.mask[self.phase.index(i, j)]
    }

    /// Mask points as `(i, j)` index pairs.
    pub fn points(&self) -> Vec<(usize, usize)> {
        let nxi = self.phase.xi.len();
        self.mask.iter().enumerate().filter(|(_, m)| **m).map(|(k, _)| (k / nxi, k % nxi)).collect()
    }

    /// Adds every cell within `cells` (Chebyshev distance) of the mask.
    pub fn dilate(&self, cells: usize) -> Self {
        let (nx, nxi) = (self.phase.x.len(), self.phase.xi.len());
        let mut out = vec![false; self.mask.len()];
        for (i, j) in self.points() {
            for a in i.saturating_sub(cells)..=(i + cells).min(nx - 1) {
                for b in j.saturating_sub(cells)..=(j + cells).min(nxi - 1) {
                    out[a * nxi + b] = true;
                }
            }
        }
        Self { mask: out, ..self.clone() }
    }

    /// Number of 4-connected components.
    pub fn components(&self) -> usize {
        let (nx, nxi) = (self.phase.x.len(), self.phase.xi.len());
        let mut seen = vec![false; self.mask.len()];
        let mut count = 0;
        for start in 0..self.mask.len() {
            if !self.mask[start] || seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(k) = stack.pop() {
                let (i, j) = (k / nxi, k % nxi);
                let mut push = |a: usize, b: usize| {
                    let idx = a * nxi + b;
                    if self.mask[idx] && !seen[idx] {
                        seen[idx] = true;
                        stack.push(idx);
                    }
                };
                if i > 0 {
                    push(i - 1, j);
                }
                if i + 1 < nx {
                    push(i + 1, j);
                }
                if j > 0 {
                    push(i, j - 1);
                }
                if j + 1 < nxi {
                    push(i, j + 1);
                }
            }
        }
        count
    }
}

/// `max |T_h u| · √(2πh) / ‖f‖`: equals 1 for a coherent state `u = f`
/// and never exceeds `‖u‖/‖f‖`.
pub fn normalized_peak<T: Real>(field: &AmplitudeField<T>, reference_norm: T) -> T {
    field.max() * (T::lit(std::f64::consts::TAU) * field.h).sqrt() / reference_norm
}

/// Decay of normalized peak amplitudes over an `h`-sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderVerdict<T> {
    pub order: usize,
    /// Fitted slope of `-log peak` against `log(1/h)`.
    pub fitted_order: T,
    /// `peak / h^order`, ordered from large to small `h`.
    pub ratios: Vec<T>,
    pub empty: bool,
}

/// "Empty at order k": the peaks decay at least like `h^k` across the
/// sweep (fitted slope ≥ k) and `peak / h^k` decreases as `h` shrinks.
pub fn emptiness_verdict<T: Real>(hs: &[T], peaks: &[T], order: usize) -> Result<OrderVerdict<T>> {
    if hs.len() < 3 || hs.len() != peaks.len() {
        return Err(Error::DegenerateSweep("emptiness verdict needs at least 3 paired samples".into()));
    }
    let mut idx: Vec<usize> = (0..hs.len()).collect();
    idx.sort_by(|a, b| hs[*b].partial_cmp(&hs[*a]).unwrap_or(std::cmp::Ordering::Equal));
    let k = T::from_usize_lossy(order);
    let ratios: Vec<T> = idx.iter().map(|&i| peaks[i] / hs[i].powf(k)).collect();
    if peaks.iter().all(|p| *p == T::zero()) {
        return Ok(OrderVerdict { order, fitted_order: T::infinity(), ratios, empty: true });
    }
    if peaks.iter().any(|p| !(*p > T::zero())) {
        return Err(Error::DegenerateSweep("peaks must be positive".into()));
    }
    let x: Vec<T> = idx.iter().map(|&i| -hs[i].ln()).collect();
    let y: Vec<T> = idx.iter().map(|&i| -peaks[i].ln()).collect();
    let fitted_order = linear_fit(&x, &y)?.slope;
    let empty = fitted_order >= k && ratios.windows(2).all(|w| w[1] < w[0]);
    Ok(OrderVerdict { order, fitted_order, ratios, empty })
}
