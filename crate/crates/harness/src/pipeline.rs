//! The experiment pipeline: `a(h)` → gluing checks → `‖R_W(E)‖` bound →
//! disk certificate → phase-space checks.

use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use semires_core::continuation::{disk_certificate, CertificateStatus, DiskCertificate};
use semires_core::factor::factorize_shifted;
use semires_core::fit::linear_fit;
use semires_core::gluing::{build_gluing, check_nilpotency, decay_sweep, probe_factor_identity, DecaySweep, GluingMode, Nilpotency, Piece};
use semires_core::microlocal::{
    coherent_state, contradiction_chain, emptiness_verdict, fbi_transform, normalized_peak, propagation_check_functions,
    trapping_probe, OrderVerdict, PhaseGrid, PropagationMode, PropagationOptions, PropagationReport, TrappingVerdict,
};
use semires_core::resolvent::{measure_curve, resolvent_norm, window_peak_norm, Cutoff, NormCurve, NormSample};
use semires_core::scalar::cplx;
use semires_core::scene::{Realization, Scene};

use crate::config::{ExperimentConfig, PotentialKind};
use crate::fit_report::{fit_report, CurveClass, FitReport, INVERSE_H_TOL};

/// Largest RMS residual of the log–log fit accepted for a clean power law.
pub const FIT_RMS_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Build,
    Scaling,
    Gluing,
    CapBound,
    Disk,
    Propagation,
    Wavefront,
    Trapping,
}

impl Stage {
    pub fn label(self) -> &'static str {
        match self {
            Stage::Build => "build",
            Stage::Scaling => "scaling",
            Stage::Gluing => "gluing",
            Stage::CapBound => "cap_bound",
            Stage::Disk => "disk",
            Stage::Propagation => "propagation",
            Stage::Wavefront => "wavefront",
            Stage::Trapping => "trapping",
        }
    }

    fn depends_on(self) -> &'static [Stage] {
        match self {
            Stage::Build => &[],
            Stage::Scaling | Stage::Gluing | Stage::Propagation | Stage::Wavefront | Stage::Trapping => &[Stage::Build],
            Stage::CapBound | Stage::Disk => &[Stage::Build, Stage::Scaling],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StageStatus {
    Completed,
    Failed(String),
    Skipped(String),
}

impl fmt::Display for StageStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StageStatus::Completed => write!(f, "completed"),
            StageStatus::Failed(m) => write!(f, "failed: {m}"),
            StageStatus::Skipped(m) => write!(f, "skipped: {m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub stage: Stage,
    pub status: StageStatus,
    pub seconds: f64,
}

/// A checked statement with the measured value and the tolerance it was
/// held to.
#[derive(Debug, Clone, PartialEq)]
pub struct Claim {
    pub stage: Stage,
    pub claim: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapBoundRow {
    pub h: f64,
    pub norm_rw: f64,
    pub a_h: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub x0: f64,
    pub xi0: f64,
    pub report: PropagationReport<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WavefrontRow {
    pub h: f64,
    pub peak: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub stages: Vec<StageRecord>,
    pub claims: Vec<Claim>,
    pub curve: Option<NormCurve<f64>>,
    pub fit: Option<FitReport>,
    pub gluing: Option<DecaySweep<f64>>,
    pub nilpotency: Vec<(f64, Nilpotency<f64>)>,
    pub cap_bound: Vec<CapBoundRow>,
    pub disk: Option<DiskCertificate<f64>>,
    pub from_cap: Vec<(f64, f64)>,
    pub isometry: Vec<(f64, f64, f64)>,
    pub probes: Vec<ProbeRow>,
    pub wavefront: Vec<WavefrontRow>,
    pub wavefront_verdict: Option<OrderVerdict<f64>>,
    pub trapping: Option<TrappingVerdict<f64>>,
}

impl RunReport {
    pub fn stage(&self, s: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|r| r.stage == s)
    }

    pub fn completed(&self, s: Stage) -> bool {
        self.stage(s).is_some_and(|r| r.status == StageStatus::Completed)
    }

    pub fn claims_for(&self, s: Stage) -> impl Iterator<Item = &Claim> {
        self.claims.iter().filter(move |c| c.stage == s)
    }

    /// The fit class of the `a(h)` curve.
    pub fn scaling_class(&self) -> Option<&CurveClass> {
        self.fit.as_ref().and_then(|f| f.rows.first()).map(|r| &r.class)
    }

    pub fn all_claims_pass(&self) -> bool {
        self.claims.iter().all(|c| c.pass)
    }
}

/// Why a stage stopped early.
enum Halt {
    Fail(String),
    Skip(String),
}

impl From<String> for Halt {
    fn from(m: String) -> Self {
        Halt::Fail(m)
    }
}

type StageResult = Result<(), Halt>;

struct Runner<'a> {
    cfg: &'a ExperimentConfig,
    scene: Option<Scene<f64>>,
    report: RunReport,
}

impl Runner<'_> {
    fn claim(&mut self, stage: Stage, claim: impl Into<String>, value: f64, tolerance: f64, pass: bool) {
        self.report.claims.push(Claim { stage, claim: claim.into(), value, tolerance, pass });
    }

    fn run(&mut self, stage: Stage, body: impl FnOnce(&mut Self) -> StageResult) {
        let blocked = stage.depends_on().iter().find(|d| !self.report.completed(**d)).copied();
        let started = Instant::now();
        let status = match blocked {
            Some(d) => StageStatus::Skipped(format!("depends on {d}")),
            None => match body(self) {
                Ok(()) => StageStatus::Completed,
                Err(Halt::Fail(m)) => StageStatus::Failed(m),
                Err(Halt::Skip(m)) => StageStatus::Skipped(m),
            },
        };
        self.report.stages.push(StageRecord { stage, status, seconds: started.elapsed().as_secs_f64() });
    }

    fn scene(&self) -> &Scene<f64> {
        self.scene.as_ref().expect("build stage completed")
    }

    /// `(h, a(h))` from the outgoing samples.
    fn a_of_h(&self) -> (Vec<f64>, Vec<f64>) {
        let c = self.report.curve.as_ref().map(|c| c.select(Realization::Outgoing)).unwrap_or_default();
        (c.hs(), c.norms())
    }
}

fn err(e: impl fmt::Display) -> String {
    e.to_string()
}

/// Runs every stage in order. Failed stages record their error; stages
/// depending on them are skipped.
pub fn run_experiment(cfg: &ExperimentConfig) -> RunReport {
    let config_hash = cfg.hash().unwrap_or_default();
    let report = RunReport {
        config: cfg.clone(),
        config_hash,
        stages: Vec::new(),
        claims: Vec::new(),
        curve: None,
        fit: None,
        gluing: None,
        nilpotency: Vec::new(),
        cap_bound: Vec::new(),
        disk: None,
        from_cap: Vec::new(),
        isometry: Vec::new(),
        probes: Vec::new(),
        wavefront: Vec::new(),
        wavefront_verdict: None,
        trapping: None,
    };
    let mut r = Runner { cfg, scene: None, report };
    r.run(Stage::Build, build_stage);
    r.run(Stage::Scaling, scaling_stage);
    r.run(Stage::Gluing, gluing_stage);
    r.run(Stage::CapBound, cap_bound_stage);
    r.run(Stage::Disk, disk_stage);
    r.run(Stage::Propagation, propagation_stage);
    r.run(Stage::Wavefront, wavefront_stage);
    r.run(Stage::Trapping, trapping_stage);
    r.report
}

fn build_stage(r: &mut Runner) -> StageResult {
    let scene = r.cfg.scene().map_err(err)?;
    for &h in &r.cfg.h_list {
        scene.discretize(h).and_then(|d| d.check_layout()).map_err(|e| format!("h = {h}: {e}"))?;
    }
    r.scene = Some(scene);
    Ok(())
}

fn scaling_stage(r: &mut Runner) -> StageResult {
    let cfg = r.cfg;
    let scene = *r.scene();
    let curve = if cfg.a_window > 0.0 {
        let samples = cfg
            .h_list
            .iter()
            .map(|&h| {
                let p = window_peak_norm(&scene, h, cfg.a_window * h, cfg.window_coarse, cfg.window_refine, &cfg.power())?;
                Ok(NormSample {
                    h,
                    lambda: cplx(p.energy, 0.0),
                    operator: Realization::Outgoing,
                    norm: p.norm,
                    iterations: p.evaluations,
                    converged: !p.pole,
                })
            })
            .collect::<semires_core::Result<Vec<_>>>()
            .map_err(err)?;
        NormCurve::new(samples)
    } else {
        measure_curve(&scene, &cfg.h_list, Realization::Outgoing, &cfg.norm_options()).map_err(err)?
    };
    let fit = fit_report(&curve, cfg.max_exponent).map_err(err)?;
    r.report.curve = Some(curve);
    let row = fit.rows[0].clone();
    r.report.fit = Some(fit);
    let p = row.fit.exponent;
    match cfg.potential {
        PotentialKind::Free | PotentialKind::Nontrap => {
            r.claim(Stage::Scaling, "fitted exponent within 1 ± tol", p, INVERSE_H_TOL, (p - 1.0).abs() <= INVERSE_H_TOL);
            let rms = row.fit.residual_rms;
            r.claim(Stage::Scaling, "log-log residual rms", rms, FIT_RMS_TOL, rms <= FIT_RMS_TOL);
        }
        PotentialKind::BarrierTop => {
            let inc = row.fit.excess_increasing;
            r.claim(Stage::Scaling, "h·a(h) increasing as h decreases", inc as u8 as f64, 0.0, inc);
            let lc = row.class == CurveClass::LogCompatible;
            r.claim(Stage::Scaling, "classified log-compatible", row.fit.log_power, 0.0, lc);
        }
        PotentialKind::Well => {
            let ooh = matches!(row.class, CurveClass::OutOfHypothesis(_));
            r.claim(Stage::Scaling, "classified out-of-hypothesis", p, cfg.max_exponent, ooh);
        }
    }
    Ok(())
}

fn gluing_stage(r: &mut Runner) -> StageResult {
    let cfg = r.cfg;
    let scene = *r.scene();
    let sweep = decay_sweep(&scene, GluingMode::ToCap, &cfg.h_list, &cfg.power()).map_err(err)?;
    let lambda = cplx(cfg.energy, 0.0);
    let nil = cfg
        .h_list
        .par_iter()
        .map(|&h| {
            let sys = build_gluing(&scene, h, GluingMode::ToCap, lambda)?;
            Ok((h, check_nilpotency(&sys, &cfg.power())?))
        })
        .collect::<semires_core::Result<Vec<_>>>()
        .map_err(err)?;
    let min_slope = sweep.fit.local.iter().copied().fold(f64::INFINITY, f64::min);
    let worst_identity = sweep.rows.iter().map(|row| row.residual_identity).fold(0.0, f64::max);
    let nil_ok = nil.iter().all(|(_, n)| n.holds(cfg.nilpotency_tol));
    let worst_nil = nil
        .iter()
        .map(|(_, n)| (n.ak_squared / n.norm_ak.max(f64::MIN_POSITIVE)).max(n.ainf_squared / n.norm_ainf.max(f64::MIN_POSITIVE)))
        .fold(0.0, f64::max);
    r.claim(Stage::Gluing, "min local decay slope of ‖A_∞A_K‖", min_slope, cfg.decay_threshold, min_slope >= cfg.decay_threshold);
    let increasing = sweep.fit.superpolynomial;
    r.claim(Stage::Gluing, "local slopes increasing as h decreases", increasing as u8 as f64, 0.0, increasing);
    r.claim(Stage::Gluing, "factorization identity residual (toCAP)", worst_identity, cfg.identity_tol, worst_identity <= cfg.identity_tol);
    r.claim(Stage::Gluing, "relative ‖A_K²‖, ‖A_∞²‖", worst_nil, cfg.nilpotency_tol, nil_ok);
    r.report.gluing = Some(sweep);
    r.report.nilpotency = nil;
    Ok(())
}

fn cap_bound_stage(r: &mut Runner) -> StageResult {
    let cfg = r.cfg;
    let (hs, a) = r.a_of_h();
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Halt::Skip("a(h) has poles; no bound to compare against".into()));
    }
    let scene = *r.scene();
    let lambda = cplx(cfg.energy, 0.0);
    let rows = hs
        .par_iter()
        .zip(&a)
        .map(|(&h, &a_h)| {
            let d = scene.discretize(h)?;
            let n = resolvent_norm(&d, Realization::Cap, lambda, Cutoff::Identity, &cfg.power())?.value;
            Ok(CapBoundRow { h, norm_rw: n, a_h, ratio: n / a_h })
        })
        .collect::<semires_core::Result<Vec<_>>>()
        .map_err(err)?;
    let x: Vec<f64> = rows.iter().map(|row| -row.h.ln()).collect();
    let y: Vec<f64> = rows.iter().map(|row| row.ratio.ln()).collect();
    let slope = linear_fit(&x, &y).map_err(err)?.slope;
    r.claim(Stage::CapBound, "growth of ‖R_W(E)‖/a(h) in log(1/h)", slope, cfg.rw_slope_tol, slope <= cfg.rw_slope_tol);
    r.report.cap_bound = rows;
    Ok(())
}

fn disk_stage(r: &mut Runner) -> StageResult {
    let cfg = r.cfg;
    let scene = *r.scene();
    let curve = r.report.curve.clone().unwrap_or_default();
    let cert = disk_certificate(&scene, &curve, &cfg.disk_options()).map_err(err)?;
    match &cert.status {
        CertificateStatus::OutOfHypothesis(why) => {
            let expected = cfg.potential == PotentialKind::Well;
            r.claim(Stage::Disk, format!("certificate out of hypothesis: {why}"), f64::NAN, cfg.max_exponent, expected);
        }
        status => {
            let c = match status {
                CertificateStatus::Pass(c) => *c,
                _ => f64::NAN,
            };
            r.claim(Stage::Disk, "smallest passing C_trial", c, cfg.c_cap, cert.passed());
            let lambda = cplx(cfg.energy, 0.0);
            let residuals = cfg
                .h_list
                .par_iter()
                .map(|&h| {
                    let sys = build_gluing(&scene, h, GluingMode::FromCap, lambda)?;
                    Ok((h, probe_factor_identity(&sys, true, 3, cfg.seed)))
                })
                .collect::<semires_core::Result<Vec<_>>>()
                .map_err(err)?;
            let worst = residuals.iter().map(|(_, v)| *v).fold(0.0, f64::max);
            r.claim(Stage::Disk, "factorization identity residual (fromCAP)", worst, cfg.identity_tol, worst <= cfg.identity_tol);
            r.report.from_cap = residuals;
        }
    }
    r.report.disk = Some(cert);
    Ok(())
}

/// Outward packets in the collar between `supp χ_K` and the absorber.
pub fn random_outward_packets(cfg: &ExperimentConfig, count: usize) -> Vec<(f64, f64)> {
    let layout = cfg.layout().expect("validated layout");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let k = cfg.energy.sqrt();
    (0..count)
        .map(|_| {
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let x0 = sign * rng.gen_range(layout.radius(2)..layout.radius(4) - 0.5 * layout.offset);
            let xi0 = sign * k * rng.gen_range(0.8..1.2);
            (x0, xi0)
        })
        .collect()
}

fn propagation_stage(r: &mut Runner) -> StageResult {
    let cfg = r.cfg;
    let h = cfg.microlocal_h;
    let scene = *r.scene();
    let d = scene.discretize(h).map_err(err)?;
    let phase = PhaseGrid::standard(&d.grid, h, cfg.energy, 0.0).map_err(err)?;
    let f_norm = |u: &[_]| d.grid.l2_norm(u);
    let mut iso = Vec::new();
    for (x0, xi0) in [(0.0, cfg.energy.sqrt()), (-2.0, 0.5), (3.0, -0.8)] {
        let f = coherent_state(&d.grid, h, x0, xi0);
        let t = fbi_transform(&f, &d.grid, h, &phase).map_err(err)?;
        let n2 = f_norm(&f).powi(2);
        iso.push((x0, xi0, (t.phase_norm_sq() - n2).abs() / n2));
    }
    let worst_iso = iso.iter().map(|v| v.2).fold(0.0, f64::max);
    r.claim(Stage::Propagation, "windowed transform isometry defect", worst_iso, cfg.isometry_tol, worst_iso <= cfg.isometry_tol);
    r.report.isometry = iso;

    let fact = factorize_shifted(&d.operator(Realization::FreeCap).map_err(err)?, cplx(cfg.energy, 0.0)).map_err(err)?;
    let opts = PropagationOptions {
        tau: cfg.tau,
        dilation: cfg.dilation,
        ..PropagationOptions::for_layout(&scene.layout)
    };
    let rows = random_outward_packets(cfg, cfg.probes)
        .into_par_iter()
        .map(|(x0, xi0)| {
            let f = coherent_state(&d.grid, h, x0, xi0);
            let u = fact.solve(&f);
            let report = propagation_check_functions(&u, &f, &d.grid, h, &phase, PropagationMode::FreeCap, &opts)?;
            Ok(ProbeRow { x0, xi0, report })
        })
        .collect::<semires_core::Result<Vec<_>>>()
        .map_err(err)?;
    let violations: usize = rows.iter().map(|row| row.report.violations.len()).sum();
    let passed = rows.iter().filter(|row| row.report.passed()).count();
    r.claim(Stage::Propagation, format!("free-CAP packets passing ({passed}/{})", rows.len()), violations as f64, 0.0, violations == 0);
    r.report.probes = rows;
    Ok(())
}

fn wavefront_stage(r: &mut Runner) -> StageResult {
    let cfg = r.cfg;
    let scene = *r.scene();
    let lambda = cplx(cfg.energy, 0.0);
    let max_v = scene.potential.max_value();
    let rows = cfg
        .h_list
        .par_iter()
        .map(|&h| {
            let sys = build_gluing(&scene, h, GluingMode::ToCap, lambda)?;
            let g = sys.grid().clone();
            let f = coherent_state(&g, h, 0.0, cfg.energy.sqrt());
            let u = sys.apply(Piece::AInf, &sys.apply(Piece::AK, &f));
            let phase = PhaseGrid::standard(&g, h, cfg.energy, max_v)?;
            let t = fbi_transform(&u, &g, h, &phase)?;
            Ok(WavefrontRow { h, peak: normalized_peak(&t, g.l2_norm(&f)) })
        })
        .collect::<semires_core::Result<Vec<_>>>()
        .map_err(err)?;
    let hs: Vec<f64> = rows.iter().map(|row| row.h).collect();
    let peaks: Vec<f64> = rows.iter().map(|row| row.peak).collect();
    let verdict = emptiness_verdict(&hs, &peaks, cfg.wavefront_order).map_err(err)?;
    r.claim(
        Stage::Wavefront,
        format!("A_∞A_K f empty at order {}", cfg.wavefront_order),
        verdict.fitted_order,
        cfg.wavefront_order as f64,
        verdict.empty,
    );
    let xi_max = PhaseGrid::standard(&scene.grid_for(cfg.h_list[0]).map_err(err)?, cfg.h_list[0], cfg.energy, max_v)
        .map_err(err)?
        .xi_max();
    let chain = contradiction_chain(&scene.layout, xi_max, 24, 48).map_err(err)?;
    r.claim(Stage::Wavefront, "no consistent phase-space chain into A_∞A_K", chain.consistent.len() as f64, 0.0, chain.empty_verdict());
    r.report.wavefront = rows;
    r.report.wavefront_verdict = Some(verdict);
    Ok(())
}

fn trapping_stage(r: &mut Runner) -> StageResult {
    let cfg = r.cfg;
    let family = cfg.family();
    let verdict = trapping_probe(&family, cfg.energy, cfg.trap_seeds, cfg.trap_horizon, cfg.trap_radius).map_err(err)?;
    let expect_trapped = cfg.potential.traps();
    let n = verdict.witnesses().len() as f64;
    r.claim(
        Stage::Trapping,
        if expect_trapped { "trapped set nonempty" } else { "trapped set empty" },
        n,
        0.0,
        verdict.is_empty() != expect_trapped,
    );
    if cfg.potential == PotentialKind::BarrierTop {
        let top = family.argmax();
        let fixed = verdict.witnesses().iter().any(|w| (w.x - top).abs() < 1e-12 && w.xi.abs() < 1e-12);
        r.claim(Stage::Trapping, "fixed point at the barrier top among witnesses", fixed as u8 as f64, 0.0, fixed);
    }
    r.report.trapping = Some(verdict);
    Ok(())
}
