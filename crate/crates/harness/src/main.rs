use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use semires::artifacts::write_artifacts;
use semires::config::ExperimentConfig;
use semires::fit_report::fit_report;
use semires::pipeline::{run_experiment, StageStatus};
use semires_core::factor::factorize_shifted;
use semires_core::gluing::{build_gluing, decay_sweep, GluingMode, Piece};
use semires_core::microlocal::{coherent_state, fbi_transform, normalized_peak, wavefront_mask, PhaseGrid};
use semires_core::resolvent::NormCurve;
use semires_core::scalar::cplx;
use semires_core::scene::Realization;

#[derive(Parser)]
#[command(name = "semires", version, about = "Semiclassical cutoff-resolvent experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write its artifacts.
    Run {
        #[command(flatten)]
        scene: SceneArgs,
        /// Output directory (overrides `out_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-fit a `norm_curve.csv` and write `fit_report.csv` beside it.
    Fit {
        #[arg(long = "in")]
        dir: PathBuf,
        #[arg(long, default_value_t = 3.0)]
        max_exponent: f64,
    },
    /// Measure the gluing decay sweep in one direction.
    Gluing {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long, default_value = "toCAP")]
        mode: GluingMode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Transform one field and write its amplitude grid and mask size.
    Wavefront {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long)]
        h: f64,
        #[arg(long, default_value_t = 0.0)]
        x0: f64,
        #[arg(long, default_value_t = 1.0)]
        xi0: f64,
        #[arg(long, value_enum, default_value_t = Field::Packet)]
        field: Field,
        #[arg(long, default_value_t = 1e-3)]
        tau: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Field {
    /// The coherent state itself.
    Packet,
    /// The free complex-absorbing resolvent applied to the packet.
    FreeCap,
    /// `A_∞A_K` of the outward gluing applied to the packet.
    Gluing,
}

#[derive(Args)]
struct SceneArgs {
    /// Flat TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// Comma separated, strictly decreasing.
    #[arg(long, value_delimiter = ',')]
    h_list: Option<Vec<f64>>,
    #[arg(long)]
    potential: Option<String>,
    #[arg(long = "E")]
    energy: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// `key=value` override of any config key; repeatable.
    #[arg(long = "set")]
    set: Vec<String>,
}

impl SceneArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let file = match &self.config {
            Some(p) => Some(fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?),
            None => None,
        };
        let mut over = Vec::new();
        if let Some(hs) = &self.h_list {
            over.push(("h_list".to_string(), toml::Value::Array(hs.iter().map(|h| toml::Value::Float(*h)).collect())));
        }
        if let Some(p) = &self.potential {
            over.push(("potential".to_string(), toml::Value::String(p.clone())));
        }
        if let Some(e) = self.energy {
            over.push(("energy".to_string(), toml::Value::Float(e)));
        }
        if let Some(s) = self.seed {
            over.push(("seed".to_string(), toml::Value::Integer(s as i64)));
        }
        for s in &self.set {
            over.push(ExperimentConfig::parse_override(s)?);
        }
        Ok(ExperimentConfig::resolve(self.preset.as_deref(), file.as_deref(), &over)?)
    }
}

fn write_to(out: Option<&Path>, name: &str, body: &str) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(name);
            fs::write(&path, body)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { scene, out } => {
            let mut cfg = scene.resolve()?;
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            let report = run_experiment(&cfg);
            write_artifacts(&report, &cfg.out_dir).with_context(|| format!("writing to {}", cfg.out_dir.display()))?;
            for s in &report.stages {
                println!("{:<12} {}", s.stage.label(), s.status);
            }
            for c in &report.claims {
                println!("{} [{}] {}: {} (tol {})", if c.pass { "PASS" } else { "FAIL" }, c.stage, c.claim, c.value, c.tolerance);
            }
            let failed = report.stages.iter().any(|s| matches!(s.status, StageStatus::Failed(_)));
            Ok(if failed { ExitCode::FAILURE } else { ExitCode::SUCCESS })
        }
        Command::Fit { dir, max_exponent } => {
            let path = dir.join("norm_curve.csv");
            let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let curve = NormCurve::<f64>::from_csv(&text)?;
            let report = fit_report(&curve, max_exponent)?;
            write_to(Some(&dir), "fit_report.csv", &report.to_csv())?;
            print!("{}", report.to_csv());
            Ok(ExitCode::SUCCESS)
        }
        Command::Gluing { scene, mode, out } => {
            let cfg = scene.resolve()?;
            let sweep = decay_sweep(&cfg.scene()?, mode, &cfg.h_list, &cfg.power())?;
            write_to(out.as_deref(), &format!("gluing_{mode}.csv"), &sweep.to_csv())?;
            eprintln!("local slopes {:?}, superpolynomial {}", sweep.fit.local, sweep.fit.superpolynomial);
            Ok(ExitCode::SUCCESS)
        }
        Command::Wavefront { scene, h, x0, xi0, field, tau, out } => {
            let cfg = scene.resolve()?;
            if !(h > 0.0 && h < 1.0) {
                bail!("h must lie in (0, 1)");
            }
            let s = cfg.scene()?;
            let d = s.discretize(h)?;
            let f = coherent_state(&d.grid, h, x0, xi0);
            let lambda = cplx(cfg.energy, 0.0);
            let u = match field {
                Field::Packet => f.clone(),
                Field::FreeCap => factorize_shifted(&d.operator(Realization::FreeCap)?, lambda)?.solve(&f),
                Field::Gluing => {
                    let sys = build_gluing(&s, h, GluingMode::ToCap, lambda)?;
                    sys.apply(Piece::AInf, &sys.apply(Piece::AK, &f))
                }
            };
            let max_v = match field {
                Field::FreeCap => 0.0,
                _ => s.potential.max_value(),
            };
            let phase = PhaseGrid::standard(&d.grid, h, cfg.energy, max_v)?;
            let t = fbi_transform(&u, &d.grid, h, &phase)?;
            let mask = wavefront_mask(&t, tau)?;
            write_to(out.as_deref(), "amplitude.csv", &t.to_csv())?;
            eprintln!(
                "peak {:e} (normalized {:e}), mask cells {}, components {}",
                t.max(),
                normalized_peak(&t, d.grid.l2_norm(&f)),
                mask.count(),
                mask.components()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
