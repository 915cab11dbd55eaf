//! CSV artifacts, the manifest and the timing log for a run.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use semires_core::microlocal::PhasePoint;

use crate::pipeline::RunReport;

pub const CLAIMS_HEADER: &str = "stage,claim,value,tolerance,pass";
pub const STAGES_HEADER: &str = "stage,status";

/// Commas and newlines would break a CSV cell.
fn cell(s: &str) -> String {
    s.replace([',', '\n'], ";")
}

fn table(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = format!("{header}\n");
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

/// `(file name, contents)` for every deterministic artifact of the run.
/// Stages that did not complete contribute nothing beyond their status row.
pub fn render(report: &RunReport) -> Vec<(&'static str, String)> {
    let mut files = Vec::new();
    if let Some(curve) = &report.curve {
        files.push(("norm_curve.csv", curve.to_csv()));
    }
    if let Some(fit) = &report.fit {
        files.push(("fit_report.csv", fit.to_csv()));
    }
    if let Some(sweep) = &report.gluing {
        files.push(("gluing_toCAP.csv", sweep.to_csv()));
        files.push((
            "nilpotency.csv",
            table(
                "h,norm_AK,norm_AK_sq,norm_Ainf,norm_Ainf_sq",
                report.nilpotency.iter().map(|(h, n)| format!("{h},{},{},{},{}", n.norm_ak, n.ak_squared, n.norm_ainf, n.ainf_squared)),
            ),
        ));
    }
    if !report.cap_bound.is_empty() {
        files.push((
            "rw_norm.csv",
            table("h,norm_RW,a_h,ratio", report.cap_bound.iter().map(|r| format!("{},{},{},{}", r.h, r.norm_rw, r.a_h, r.ratio))),
        ));
    }
    if let Some(cert) = &report.disk {
        files.push(("disk.csv", cert.to_csv()));
        files.push(("disk_summary.csv", cert.summary_csv()));
    }
    if !report.from_cap.is_empty() {
        files.push(("gluing_fromCAP.csv", table("h,residual_identity", report.from_cap.iter().map(|(h, r)| format!("{h},{r}")))));
    }
    if !report.probes.is_empty() {
        files.push((
            "isometry.csv",
            table("x0,xi0,relative_defect", report.isometry.iter().map(|(x, xi, e)| format!("{x},{xi},{e}"))),
        ));
        files.push((
            "propagation.csv",
            table(
                "x0,xi0,checked,skipped,damped,violations",
                report.probes.iter().map(|p| {
                    let r = &p.report;
                    format!("{},{},{},{},{},{}", p.x0, p.xi0, r.checked, r.skipped, r.damped, r.violations.len())
                }),
            ),
        ));
        files.push((
            "propagation_violations.csv",
            table(
                "x0,xi0,x,xi",
                report.probes.iter().flat_map(|p| p.report.violations.iter().map(move |v| format!("{},{},{},{}", p.x0, p.xi0, v.x, v.xi))),
            ),
        ));
    }
    if let Some(v) = &report.wavefront_verdict {
        let rows = report.wavefront.iter().zip(&v.ratios).map(|(w, r)| format!("{},{},{},{}", w.h, w.peak, v.order, r));
        files.push(("wavefront.csv", table("h,peak,order,peak_over_h_order", rows)));
    }
    if let Some(t) = &report.trapping {
        let w: &[PhasePoint<f64>] = t.witnesses();
        files.push(("trapping.csv", table("x,xi", w.iter().map(|p| format!("{},{}", p.x, p.xi)))));
    }
    files.push((
        "claims.csv",
        table(
            CLAIMS_HEADER,
            report.claims.iter().map(|c| format!("{},{},{},{},{}", c.stage, cell(&c.claim), c.value, c.tolerance, c.pass)),
        ),
    ));
    files.push(("stages.csv", table(STAGES_HEADER, report.stages.iter().map(|s| format!("{},{}", s.stage, cell(&s.status.to_string()))))));
    files
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Writes the CSVs, `manifest.toml` (config, config hash, per-file
/// digests) and `timings.txt` into `dir`. Returns the written paths.
pub fn write_artifacts(report: &RunReport, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut manifest = format!("config_hash = \"{}\"\n\n[files]\n", report.config_hash);
    for (name, body) in render(report) {
        let path = dir.join(name);
        fs::write(&path, &body)?;
        manifest.push_str(&format!("\"{name}\" = \"{}\"\n", sha256_hex(body.as_bytes())));
        written.push(path);
    }
    let config = report.config.to_toml().map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    manifest.push_str("\n[config]\n");
    manifest.push_str(&config);
    let path = dir.join("manifest.toml");
    fs::write(&path, manifest)?;
    written.push(path);

    let timings: String = report.stages.iter().map(|s| format!("{:<12} {:>9.3} s  {}\n", s.stage.label(), s.seconds, s.status)).collect();
    let path = dir.join("timings.txt");
    fs::write(&path, timings)?;
    written.push(path);
    Ok(written)
}
