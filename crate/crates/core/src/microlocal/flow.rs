use crate::error::{Error, Result};
use crate::potential::SmoothFunction;
use crate::scalar::Real;

/// Relative energy drift tolerated along a Hamiltonian trajectory.
pub const DRIFT_TOLERANCE: f64 = 1e-6;

/// `ρ = (x, ξ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint<T> {
    pub x: T,
    pub xi: T,
}

impl<T: Real> PhasePoint<T> {
    pub fn new(x: T, xi: T) -> Self {
        Self { x, xi }
    }

    /// `p(ρ) = ξ² + V(x)`.
    pub fn energy(&self, v: &dyn SmoothFunction<T>) -> T {
        self.xi * self.xi + v.value(self.x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub points: Vec<PhasePoint<T>>,
    /// Zero for closed-form rays.
    pub dt: T,
    /// Largest `|p(ρ(t)) - p(ρ(0))|` relative to `max(|p(ρ(0))|, 1)`.
    pub max_drift: T,
}

impl<T: Real> Trajectory<T> {
    pub fn last(&self) -> PhasePoint<T> {
        *self.points.last().expect("trajectories are never empty")
    }

    pub fn max_abs_x(&self) -> T {
        self.points.iter().map(|p| p.x.abs()).fold(T::zero(), T::max)
    }
}

/// `γ_ρ⁻ = {(x + 2tξ, ξ) : t ≤ 0}` at the given times.
pub fn free_backward_ray<T: Real>(rho: PhasePoint<T>, times: &[T]) -> Result<Trajectory<T>> {
    if times.is_empty() || times.iter().any(|t| *t > T::zero()) {
        return Err(Error::InvalidParameter("backward ray needs a non-empty list of times t ≤ 0".into()));
    }
    let two = T::lit(2.0);
    Ok(Trajectory {
        times: times.to_vec(),
        points: times.iter().map(|&t| PhasePoint::new(rho.x + two * t * rho.xi, rho.xi)).collect(),
        dt: T::zero(),
        max_drift: T::zero(),
    })
}

/// RK4 integration of `ẋ = 2ξ`, `ξ̇ = -V'(x)` from `t = 0` to `t_max`
/// (negative for backward flow). Requires `dt ≤ 10⁻³·|t_max|` and fails
/// with [`Error::EnergyDrift`] when the energy drifts more than
/// [`DRIFT_TOLERANCE`].
pub fn hamiltonian_flow<T: Real>(rho: PhasePoint<T>, v: &dyn SmoothFunction<T>, t_max: T, dt: T) -> Result<Trajectory<T>> {
    let span = t_max.abs();
    if !(dt > T::zero()) || dt > T::lit(1e-3) * span {
        return Err(Error::InvalidParameter(format!("dt = {dt} must be positive and at most 1e-3·|t_max|")));
    }
    let steps = (span / dt).ceil().to_usize().unwrap_or(0);
    let h = t_max / T::from_usize_lossy(steps);
    let two = T::lit(2.0);
    let field = |p: PhasePoint<T>| (two * p.xi, -v.derivative(p.x));
    let e0 = rho.energy(v);
    let scale = e0.abs().max(T::one());
    let mut p = rho;
    let mut traj = Trajectory { times: vec![T::zero()], points: vec![p], dt: h.abs(), max_drift: T::zero() };
    let half = h / two;
    let sixth = h / T::lit(6.0);
    for k in 1..=steps {
        let (a1, b1) = field(p);
        let (a2, b2) = field(PhasePoint::new(p.x + half * a1, p.xi + half * b1));
        let (a3, b3) = field(PhasePoint::new(p.x + half * a2, p.xi + half * b2));
        let (a4, b4) = field(PhasePoint::new(p.x + h * a3, p.xi + h * b3));
        p = PhasePoint::new(
            p.x + sixth * (a1 + two * a2 + two * a3 + a4),
            p.xi + sixth * (b1 + two * b2 + two * b3 + b4),
        );
        traj.max_drift = traj.max_drift.max((p.energy(v) - e0).abs() / scale);
        traj.times.push(h * T::from_usize_lossy(k));
        traj.points.push(p);
    }
    if traj.max_drift > T::lit(DRIFT_TOLERANCE) {
        return Err(Error::EnergyDrift { drift: traj.max_drift.as_f64(), tolerance: DRIFT_TOLERANCE });
    }
    Ok(traj)
}

/// Whether the backward free ray from `ρ'` stays in `|x| > radius` for all
/// `t ≤ 0`. In one dimension this holds iff `x'·ξ' ≤ 0`: an incoming or
/// stationary point came from (or stayed at) larger `|x|`.
pub fn escape_certificate<T: Real>(rho: PhasePoint<T>, radius: T) -> Result<bool> {
    if rho.x.abs() <= radius {
        return Err(Error::InvalidParameter(format!("|x'| = {} must exceed R = {radius}", rho.x.abs())));
    }
    Ok(rho.x * rho.xi <= T::zero())
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrappingVerdict<T> {
    /// No seed stayed bounded over the probe time.
    Empty { seeds: usize },
    /// Seeds whose forward and backward trajectories stayed in `|x| ≤ radius`.
    Nonempty { seeds: usize, witnesses: Vec<PhasePoint<T>> },
}

impl<T: Real> TrappingVerdict<T> {
    pub fn is_empty(&self) -> bool {
        matches!(self, TrappingVerdict::Empty { .. })
    }

    pub fn witnesses(&self) -> &[PhasePoint<T>] {
        match self {
            TrappingVerdict::Empty { .. } => &[],
            TrappingVerdict::Nonempty { witnesses, .. } => witnesses,
        }
    }
}

/// Halves `dt` on energy drift, at most [`MAX_HALVINGS`] times. Steep
/// potentials need steps well below the default.
fn refined_flow<T: Real>(rho: PhasePoint<T>, v: &dyn SmoothFunction<T>, t_max: T, dt: T) -> Result<Trajectory<T>> {
    let mut dt = dt;
    for _ in 0..MAX_HALVINGS {
        match hamiltonian_flow(rho, v, t_max, dt) {
            Err(Error::EnergyDrift { .. }) => dt = dt / T::lit(2.0),
            other => return other,
        }
    }
    hamiltonian_flow(rho, v, t_max, dt)
}

pub const MAX_HALVINGS: usize = 6;

/// Samples the energy shell `ξ² + V(x) = E` at `n_x` points of
/// `[-radius, radius]` (odd counts include `x = 0`), both momentum signs,
/// and flows each seed for time `horizon` in both directions.
pub fn trapping_probe<T: Real>(
    v: &dyn SmoothFunction<T>,
    energy: T,
    n_x: usize,
    horizon: T,
    radius: T,
) -> Result<TrappingVerdict<T>> {
    if n_x < 2 || !(horizon > T::zero()) || !(radius > T::zero()) {
        return Err(Error::InvalidParameter("probe needs n_x ≥ 2 and positive horizon and radius".into()));
    }
    let mut seeds = Vec::new();
    for k in 0..n_x {
        let x = -radius + T::lit(2.0) * radius * T::from_usize_lossy(k) / T::from_usize_lossy(n_x - 1);
        let gap = energy - v.value(x);
        if gap < T::zero() {
            continue;
        }
        let xi = gap.sqrt();
        seeds.push(PhasePoint::new(x, xi));
        if xi > T::zero() {
            seeds.push(PhasePoint::new(x, -xi));
        }
    }
    if seeds.is_empty() {
        return Err(Error::EmptyShell(format!("no point of [-{radius}, {radius}] has V(x) ≤ E = {energy}")));
    }
    let dt = T::lit(2.5e-4) * horizon;
    let mut witnesses = Vec::new();
    for &s in &seeds {
        let fwd = refined_flow(s, v, horizon, dt)?;
        if fwd.max_abs_x() > radius {
            continue;
        }
        let bwd = refined_flow(s, v, -horizon, dt)?;
        if bwd.max_abs_x() <= radius {
            witnesses.push(s);
        }
    }
    Ok(if witnesses.is_empty() {
        TrappingVerdict::Empty { seeds: seeds.len() }
    } else {
        TrappingVerdict::Nonempty { seeds: seeds.len(), witnesses }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialFamily;

    #[test]
    fn free_ray_formula() {
        let r = free_backward_ray(PhasePoint::new(0.0, 1.0), &[0.0, -1.0]).unwrap();
        assert_eq!(r.last(), PhasePoint::new(-2.0, 1.0));
        let s = free_backward_ray(PhasePoint::new(3.0, 0.0), &[-5.0]).unwrap();
        assert_eq!(s.last().x, 3.0);
        assert!(free_backward_ray(PhasePoint::new(0.0, 1.0), &[0.5]).is_err());
    }

    #[test]
    fn free_flow_matches_ray() {
        let v = PotentialFamily::<f64>::Zero;
        let f = hamiltonian_flow(PhasePoint::new(0.3, -0.8), &v, -2.0, 1e-3).unwrap();
        assert!((f.last().x - (0.3 + 2.0 * -2.0 * -0.8)).abs() < 1e-12);
    }

    #[test]
    fn stable_manifold_stays_near_top() {
        let v = PotentialFamily::BarrierTop { amplitude: 1.0_f64, width: 1.0 };
        let e = v.value(0.0);
        let x0 = 0.2;
        let rho = PhasePoint::new(x0, -(e - v.value(x0)).sqrt());
        let f = hamiltonian_flow(rho, &v, 6.0, 1e-3).unwrap();
        assert!(f.max_abs_x() <= x0 + 1e-12);
        assert!(f.last().x.abs() < 1e-3);
    }

    #[test]
    fn escape_geometry() {
        assert!(!escape_certificate(PhasePoint::new(5.0, 1.0), 4.0).unwrap());
        assert!(escape_certificate(PhasePoint::new(5.0, -1.0), 4.0).unwrap());
        assert!(escape_certificate(PhasePoint::new(-5.0, 1.0), 4.0).unwrap());
        assert!(escape_certificate(PhasePoint::new(3.0, 1.0), 4.0).is_err());
    }

    #[test]
    fn shell_below_potential_reported() {
        let v = PotentialFamily::NontrapBump { amplitude: 0.5, width: 1.0 };
        assert!(matches!(trapping_probe(&v, 0.2, 11, 5.0, 0.3), Err(Error::EmptyShell(_))));
    }
}
