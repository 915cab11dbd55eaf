use std::fs;
use std::path::Path;
use std::process::Command;

use semires::artifacts::{sha256_hex, write_artifacts};
use semires::config::ExperimentConfig;
use semires::fit_report::CurveClass;
use semires::pipeline::{run_experiment, Stage, StageStatus};

/// The nontrap preset with fewer propagation packets.
fn reduced(seed: u64) -> ExperimentConfig {
    let over = [
        ExperimentConfig::parse_override("probes=3").unwrap(),
        ExperimentConfig::parse_override(&format!("seed={seed}")).unwrap(),
    ];
    ExperimentConfig::resolve(Some("nontrap"), None, &over).unwrap()
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn nontrap_pipeline_reports_inverse_h_and_a_certificate() {
    let report = run_experiment(&reduced(0x5eed));
    for s in &report.stages {
        assert_eq!(s.status, StageStatus::Completed, "{}", s.stage);
    }
    assert_eq!(report.scaling_class(), Some(&CurveClass::InverseH));
    let p = report.fit.as_ref().unwrap().rows[0].fit.exponent;
    assert!((p - 1.0).abs() < 0.05, "exponent {p}");
    assert!(report.disk.as_ref().unwrap().passed());
    assert!(report.all_claims_pass(), "{:#?}", report.claims.iter().filter(|c| !c.pass).collect::<Vec<_>>());
    assert!(report.claims_for(Stage::Disk).count() >= 2);

    let dir = tempfile::tempdir().unwrap();
    write_artifacts(&report, dir.path()).unwrap();
    let manifest: toml::Table = fs::read_to_string(dir.path().join("manifest.toml")).unwrap().parse().unwrap();
    assert_eq!(manifest["config_hash"].as_str(), Some(report.config_hash.as_str()));
    let files = manifest["files"].as_table().unwrap();
    let csvs = csv_files(dir.path());
    assert_eq!(files.len(), csvs.len());
    for (name, bytes) in &csvs {
        assert_eq!(files[name].as_str(), Some(sha256_hex(bytes).as_str()), "{name}");
        let text = std::str::from_utf8(bytes).unwrap();
        assert!(!text.contains('\r') && text.ends_with('\n'));
    }
    let restored: ExperimentConfig = manifest["config"].clone().try_into().unwrap();
    assert_eq!(restored, report.config);
}

#[test]
fn small_offset_stops_at_the_build_stage() {
    let cfg = ExperimentConfig::preset("small-offset").unwrap();
    let report = run_experiment(&cfg);
    match &report.stage(Stage::Build).unwrap().status {
        StageStatus::Failed(m) => assert!(m.contains("layout violation"), "{m}"),
        other => panic!("{other}"),
    }
    for s in report.stages.iter().filter(|s| s.stage != Stage::Build) {
        assert_eq!(s.status, StageStatus::Skipped("depends on build".into()));
    }
    assert!(report.claims.is_empty());
    let dir = tempfile::tempdir().unwrap();
    write_artifacts(&report, dir.path()).unwrap();
    let names: Vec<String> = csv_files(dir.path()).into_iter().map(|f| f.0).collect();
    assert_eq!(names, ["claims.csv", "stages.csv"]);
}

#[test]
fn same_seed_gives_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = run_experiment(&reduced(7));
    write_artifacts(&first, a.path()).unwrap();
    write_artifacts(&run_experiment(&reduced(7)), b.path()).unwrap();
    assert_eq!(csv_files(a.path()), csv_files(b.path()));
    assert_eq!(fs::read(a.path().join("manifest.toml")).unwrap(), fs::read(b.path().join("manifest.toml")).unwrap());

    let other = run_experiment(&reduced(8));
    assert_ne!(first.config_hash, other.config_hash);
    let packets = |r: &semires::RunReport| r.probes.iter().map(|p| (p.x0, p.xi0)).collect::<Vec<_>>();
    assert_ne!(packets(&first), packets(&other));
}

#[test]
fn well_preset_is_out_of_hypothesis() {
    let over = [ExperimentConfig::parse_override("probes=0").unwrap()];
    let report = run_experiment(&ExperimentConfig::resolve(Some("well"), None, &over).unwrap());
    assert!(matches!(report.scaling_class(), Some(CurveClass::OutOfHypothesis(_))));
    assert!(matches!(report.stage(Stage::CapBound).unwrap().status, StageStatus::Skipped(_)));
    assert!(!report.disk.as_ref().unwrap().passed());
    assert!(!report.trapping.as_ref().unwrap().is_empty());
    for s in [Stage::Scaling, Stage::Disk, Stage::Trapping] {
        assert!(report.claims_for(s).all(|c| c.pass), "{s}");
    }
}

fn semires() -> Command {
    Command::new(env!("CARGO_BIN_EXE_semires"))
}

#[test]
fn cli_fit_reclassifies_a_curve() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("h,lambda_re,lambda_im,operator,norm,iters,converged\n");
    for h in [0.1, 0.07, 0.05, 0.035, 0.025] {
        text.push_str(&format!("{h},1,0,R_out,{},10,true\n", 3.0 / (h * h)));
    }
    fs::write(dir.path().join("norm_curve.csv"), text).unwrap();
    let out = semires().args(["fit", "--in"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(dir.path().join("fit_report.csv")).unwrap();
    assert!(report.lines().nth(1).unwrap().ends_with("h^-k; k=2.0±0.1"), "{report}");
}

#[test]
fn cli_rejects_bad_configuration() {
    let out = semires().args(["run", "--preset", "torus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown preset"));
    let out = semires().args(["run", "--preset", "nontrap", "--h-list", "0.05,0.1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("strictly decreasing"));
}

#[test]
fn cli_wavefront_writes_an_amplitude_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = semires()
        .args(["wavefront", "--preset", "free", "--h", "0.1", "--x0", "1", "--xi0", "0.5", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let grid = fs::read_to_string(dir.path().join("amplitude.csv")).unwrap();
    assert_eq!(grid.lines().next(), Some("x,xi,amp"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("components 1"));
}

#[test]
fn cli_gluing_sweeps_the_reverse_mode() {
    let dir = tempfile::tempdir().unwrap();
    let out = semires().args(["gluing", "--mode", "fromCAP", "--preset", "free", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("gluing_fromCAP.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.lines().skip(1).all(|l| l.starts_with("fromCAP,")));
}
