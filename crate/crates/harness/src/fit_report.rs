//! Classification of measured norm curves into the growth classes the
//! estimate distinguishes.

use std::fmt;

use semires_core::fit::{scaling_fit, ScalingFit};
use semires_core::resolvent::NormCurve;
use semires_core::scene::Realization;

/// Exponent band around 1 accepted as `~1/h`.
pub const INVERSE_H_TOL: f64 = 0.15;
/// Range of the fitted `log(1/h)` power accepted as log-compatible. The
/// lower end separates genuine growth of `h·a(h)` from drift.
pub const LOG_POWER_RANGE: (f64, f64) = (0.05, 2.0);
/// Exponent resolution claimed for `h^{-k}` fits.
pub const EXPONENT_RESOLUTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub enum CurveClass {
    InverseH,
    /// `h·a(h)` grows like a small power of `log(1/h)`. Not a measured log
    /// factor: only the direction of the deviation from `1/h` is resolved.
    LogCompatible,
    Power { k: f64 },
    OutOfHypothesis(String),
}

impl fmt::Display for CurveClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveClass::InverseH => write!(f, "~1/h"),
            CurveClass::LogCompatible => write!(f, "log-compatible"),
            CurveClass::Power { k } => write!(f, "h^-k, k={k:.1}±{EXPONENT_RESOLUTION}"),
            CurveClass::OutOfHypothesis(why) => write!(f, "out-of-hypothesis ({why})"),
        }
    }
}

/// Classifies a fit. `max_exponent` is `N` in `a(h) ≤ h^{-N}`.
pub fn classify(fit: &ScalingFit<f64>, max_exponent: f64) -> CurveClass {
    let p = fit.exponent;
    if !p.is_finite() {
        return CurveClass::OutOfHypothesis("non-finite exponent".into());
    }
    if p > max_exponent {
        return CurveClass::OutOfHypothesis(format!("exponent {p:.2} exceeds N = {max_exponent}"));
    }
    if p < 1.0 - INVERSE_H_TOL {
        return CurveClass::OutOfHypothesis(format!("exponent {p:.2} below the 1/h lower bound"));
    }
    let (qlo, qhi) = LOG_POWER_RANGE;
    if fit.excess_increasing && fit.log_power > qlo && fit.log_power <= qhi && p < 2.0 {
        return CurveClass::LogCompatible;
    }
    if (p - 1.0).abs() <= INVERSE_H_TOL {
        return CurveClass::InverseH;
    }
    CurveClass::Power { k: p }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitRow {
    pub label: String,
    pub samples: usize,
    pub fit: ScalingFit<f64>,
    pub class: CurveClass,
}

pub const FIT_HEADER: &str = "curve,samples,exponent,prefactor,rms,curvature,log_power,excess_increasing,class";

impl FitRow {
    pub fn csv_line(&self) -> String {
        let f = &self.fit;
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.label,
            self.samples,
            f.exponent,
            f.prefactor,
            f.residual_rms,
            f.curvature,
            f.log_power,
            f.excess_increasing,
            // commas inside the class text would split the column
            self.class.to_string().replace(',', ";")
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitReport {
    pub rows: Vec<FitRow>,
}

impl FitReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{FIT_HEADER}\n");
        for r in &self.rows {
            out.push_str(&r.csv_line());
            out.push('\n');
        }
        out
    }
}

/// Fits `(label, h, norm)` curves. Fails on sweeps too short or narrow to
/// fit; non-finite norms (poles) classify as out-of-hypothesis.
pub fn fit_curves(curves: &[(String, Vec<f64>, Vec<f64>)], max_exponent: f64) -> semires_core::Result<FitReport> {
    let mut rows = Vec::new();
    for (label, hs, norms) in curves {
        if norms.iter().any(|v| !v.is_finite()) {
            let hs_f: Vec<f64> = hs.to_vec();
            let nan = ScalingFit {
                exponent: f64::NAN,
                prefactor: f64::NAN,
                residual_rms: f64::NAN,
                curvature: f64::NAN,
                log_power: f64::NAN,
                excess_increasing: false,
            };
            // still enforce the sweep requirements
            scaling_fit(&hs_f, &vec![1.0; hs_f.len()])?;
            rows.push(FitRow {
                label: label.clone(),
                samples: hs.len(),
                fit: nan,
                class: CurveClass::OutOfHypothesis("pole in the sweep".into()),
            });
            continue;
        }
        let fit = scaling_fit(hs, norms)?;
        let class = classify(&fit, max_exponent);
        rows.push(FitRow { label: label.clone(), samples: hs.len(), fit, class });
    }
    Ok(FitReport { rows })
}

/// One row per realization present in the curve.
pub fn fit_report(curve: &NormCurve<f64>, max_exponent: f64) -> semires_core::Result<FitReport> {
    let mut labels: Vec<Realization> = Vec::new();
    for s in &curve.samples {
        if !labels.contains(&s.operator) {
            labels.push(s.operator);
        }
    }
    let curves: Vec<_> = labels
        .into_iter()
        .map(|r| {
            let c = curve.select(r);
            (r.label().to_string(), c.hs(), c.norms())
        })
        .collect();
    fit_curves(&curves, max_exponent)
}
