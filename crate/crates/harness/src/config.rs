//! Experiment configuration: presets, flat TOML files and flag overrides.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use semires_core::continuation::DiskOptions;
use semires_core::layout::SupportLayout;
use semires_core::linmap::PowerOptions;
use semires_core::operator::Stencil;
use semires_core::potential::PotentialFamily;
use semires_core::resolvent::NormOptions;
use semires_core::scene::Scene;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown preset `{0}` (expected nontrap, barrier-top, well, free or small-offset)")]
    UnknownPreset(String),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config serialization error: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("bad override `{0}`: expected key=value")]
    BadOverride(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Potential family by name, with its parameters kept as separate keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    #[serde(alias = "zero")]
    Free,
    Nontrap,
    BarrierTop,
    Well,
}

impl PotentialKind {
    pub fn label(self) -> &'static str {
        match self {
            PotentialKind::Free => "free",
            PotentialKind::Nontrap => "nontrap",
            PotentialKind::BarrierTop => "barrier-top",
            PotentialKind::Well => "well",
        }
    }

    /// Whether the classical flow at the working energy has a trapped set.
    pub fn traps(self) -> bool {
        matches!(self, PotentialKind::BarrierTop | PotentialKind::Well)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StencilKind {
    ThreePoint,
    FivePoint,
}

impl From<StencilKind> for Stencil {
    fn from(k: StencilKind) -> Self {
        match k {
            StencilKind::ThreePoint => Stencil::ThreePoint,
            StencilKind::FivePoint => Stencil::FivePoint,
        }
    }
}

/// Every key is flat so that a sweep script can override any of them with
/// `--set key=value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub potential: PotentialKind,
    pub amplitude: f64,
    pub width: f64,
    pub centre: f64,
    pub energy: f64,

    pub r0: f64,
    pub offset: f64,
    pub absorber_width: f64,
    pub half_length: f64,
    pub stencil: StencilKind,
    pub h_list: Vec<f64>,

    pub power_tol: f64,
    pub power_max_iter: usize,
    pub stability_tol: f64,
    pub stability_extension: f64,
    /// Half-width of the energy window for `a(h)`, in units of `h`; zero
    /// measures at `E` only.
    pub a_window: f64,
    pub window_coarse: usize,
    pub window_refine: usize,

    pub identity_tol: f64,
    pub nilpotency_tol: f64,
    pub decay_threshold: f64,
    /// Largest admissible growth of `log(‖R_W(E)‖/a(h))` against `log(1/h)`.
    pub rw_slope_tol: f64,

    pub c_start: f64,
    pub c_cap: f64,
    /// `N` in `1 ≤ a(h) ≤ h^{-N}`.
    pub max_exponent: f64,
    pub disk_boundary: usize,
    pub disk_diameter: usize,

    pub microlocal_h: f64,
    pub probes: usize,
    pub tau: f64,
    pub dilation: usize,
    pub isometry_tol: f64,
    pub wavefront_order: usize,
    pub trap_seeds: usize,
    pub trap_horizon: f64,
    pub trap_radius: f64,

    pub out_dir: PathBuf,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let base = Self::base();
        let cfg = match name {
            "nontrap" => Self { name: "nontrap".into(), potential: PotentialKind::Nontrap, amplitude: 0.5, ..base },
            "barrier-top" => Self { name: "barrier-top".into(), potential: PotentialKind::BarrierTop, amplitude: 1.0, ..base },
            "well" => Self {
                name: "well".into(),
                potential: PotentialKind::Well,
                amplitude: 10.0,
                centre: 0.75,
                width: 0.25,
                a_window: 4.0,
                ..base
            },
            // the shifted cutoffs sit one cell apart at the coarsest h, closer
            // than the five-point stencil reaches
            "small-offset" => Self {
                name: "small-offset".into(),
                potential: PotentialKind::Nontrap,
                amplitude: 0.5,
                offset: 0.004,
                stencil: StencilKind::FivePoint,
                ..base
            },
            "free" | "zero" => Self { name: "free".into(), potential: PotentialKind::Free, amplitude: 0.0, ..base },
            other => return Err(ConfigError::UnknownPreset(other.into())),
        };
        Ok(cfg)
    }

    fn base() -> Self {
        Self {
            name: String::new(),
            potential: PotentialKind::Free,
            amplitude: 0.0,
            width: 1.0,
            centre: 0.0,
            energy: 1.0,
            r0: 1.0,
            offset: 1.0,
            absorber_width: 4.0,
            half_length: 13.0,
            stencil: StencilKind::ThreePoint,
            h_list: vec![0.1, 0.07, 0.05, 0.035, 0.025],
            power_tol: 1e-6,
            power_max_iter: 500,
            stability_tol: 1e-3,
            stability_extension: 4.0,
            a_window: 0.0,
            window_coarse: 41,
            window_refine: 80,
            identity_tol: 1e-10,
            nilpotency_tol: 1e-12,
            decay_threshold: 3.0,
            rw_slope_tol: 0.15,
            c_start: 1.0,
            c_cap: 1024.0,
            max_exponent: 3.0,
            disk_boundary: 16,
            disk_diameter: 8,
            microlocal_h: 0.05,
            probes: 20,
            tau: 1e-3,
            dilation: 3,
            isometry_tol: 1e-4,
            wavefront_order: 4,
            trap_seeds: 41,
            trap_horizon: 20.0,
            trap_radius: 3.0,
            out_dir: PathBuf::from("out"),
            seed: 0x5eed,
        }
    }

    /// Layers `file` (flat TOML) and then `overrides` onto a preset. A
    /// `preset` key in the file picks the base unless `preset` is given.
    pub fn resolve(preset: Option<&str>, file: Option<&str>, overrides: &[(String, toml::Value)]) -> Result<Self, ConfigError> {
        let mut file_table = match file {
            Some(text) => text.parse::<toml::Table>()?,
            None => toml::Table::new(),
        };
        let from_file = match file_table.remove("preset") {
            Some(toml::Value::String(s)) => Some(s),
            Some(other) => return Err(ConfigError::Invalid(format!("preset must be a string, got {other}"))),
            None => None,
        };
        let base = Self::preset(preset.or(from_file.as_deref()).unwrap_or("nontrap"))?;
        let mut table = toml::Table::try_from(&base)?;
        table.extend(file_table);
        for (k, v) in overrides {
            table.insert(k.clone(), v.clone());
        }
        let cfg: Self = table.try_into()?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses `key=value`; the value is read as a TOML literal when it is
    /// one, otherwise as a bare string.
    pub fn parse_override(s: &str) -> Result<(String, toml::Value), ConfigError> {
        let (k, v) = s.split_once('=').ok_or_else(|| ConfigError::BadOverride(s.into()))?;
        let key = k.trim().replace('-', "_");
        if key.is_empty() {
            return Err(ConfigError::BadOverride(s.into()));
        }
        let value = format!("v = {}", v.trim())
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(v.trim().into()));
        Ok((key, value))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.h_list.is_empty() {
            return bad("h_list is empty".into());
        }
        if self.h_list.windows(2).any(|w| w[1] >= w[0]) {
            return bad(format!("h_list must be strictly decreasing: {:?}", self.h_list));
        }
        if self.h_list.iter().any(|h| !(*h > 0.0 && *h < 1.0)) {
            return bad("every h must lie in (0, 1)".into());
        }
        if !(self.energy > 0.0) {
            return bad("energy must be positive".into());
        }
        if !(self.power_tol > 0.0) || self.power_max_iter == 0 {
            return bad("power iteration needs a positive tolerance and iteration budget".into());
        }
        if !(self.c_start >= 1.0 && self.c_cap >= self.c_start) {
            return bad("need 1 ≤ c_start ≤ c_cap".into());
        }
        if self.disk_boundary < 16 {
            return bad("disk_boundary must be at least 16".into());
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad("tau must lie in (0, 1)".into());
        }
        let hmin = self.h_list[self.h_list.len() - 1];
        // the dx rule at the finest h: L/dx ≥ 50 and radii on nodes
        self.scene()
            .and_then(|s| s.grid_for(hmin))
            .map_err(|e| ConfigError::Invalid(format!("at h = {hmin}: {e}")))?;
        Ok(())
    }

    pub fn layout(&self) -> semires_core::Result<SupportLayout<f64>> {
        SupportLayout::new(self.r0, self.offset, self.absorber_width, self.half_length)
    }

    pub fn family(&self) -> PotentialFamily<f64> {
        match self.potential {
            PotentialKind::Free => PotentialFamily::Zero,
            PotentialKind::Nontrap => PotentialFamily::NontrapBump { amplitude: self.amplitude, width: self.width },
            PotentialKind::BarrierTop => PotentialFamily::BarrierTop { amplitude: self.amplitude, width: self.width },
            PotentialKind::Well => PotentialFamily::DoubleBumpWell { amplitude: self.amplitude, centre: self.centre, width: self.width },
        }
    }

    pub fn scene(&self) -> semires_core::Result<Scene<f64>> {
        let mut scene = Scene::new(self.layout()?, self.family(), self.energy)?;
        scene.stencil = self.stencil.into();
        Ok(scene)
    }

    pub fn power(&self) -> PowerOptions<f64> {
        PowerOptions { tol: self.power_tol, max_iter: self.power_max_iter, seed: self.seed, ..Default::default() }
    }

    pub fn norm_options(&self) -> NormOptions<f64> {
        NormOptions {
            power: self.power(),
            check_stability: true,
            stability_extension: self.stability_extension,
            stability_tol: self.stability_tol,
        }
    }

    pub fn disk_options(&self) -> DiskOptions<f64> {
        DiskOptions {
            c_start: self.c_start,
            c_cap: self.c_cap,
            boundary: self.disk_boundary,
            diameter: self.disk_diameter,
            max_exponent: self.max_exponent,
            norm: NormOptions { check_stability: false, ..self.norm_options() },
            ..DiskOptions::default()
        }
    }

    /// Canonical TOML rendering; the hash below is taken over it.
    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    /// SHA-256 of the canonical rendering, hex encoded.
    pub fn hash(&self) -> Result<String, ConfigError> {
        Ok(format!("{:x}", Sha256::digest(self.to_toml()?.as_bytes())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for p in ["nontrap", "barrier-top", "well", "free", "small-offset"] {
            ExperimentConfig::preset(p).unwrap().validate().unwrap();
        }
        assert!(matches!(ExperimentConfig::preset("torus"), Err(ConfigError::UnknownPreset(_))));
    }

    #[test]
    fn layering_order() {
        let file = "preset = \"barrier-top\"\nenergy = 0.9\nseed = 3\n";
        let over = vec![ExperimentConfig::parse_override("seed=7").unwrap()];
        let c = ExperimentConfig::resolve(None, Some(file), &over).unwrap();
        assert_eq!(c.potential, PotentialKind::BarrierTop);
        assert_eq!(c.energy, 0.9);
        assert_eq!(c.seed, 7);
        let c = ExperimentConfig::resolve(Some("free"), Some(file), &[]).unwrap();
        assert_eq!(c.potential, PotentialKind::Free);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::resolve(None, Some("colour = 3\n"), &[]).is_err());
        let up = vec![ExperimentConfig::parse_override("h_list=[0.05, 0.1]").unwrap()];
        assert!(matches!(ExperimentConfig::resolve(None, None, &up), Err(ConfigError::Invalid(_))));
        assert!(ExperimentConfig::parse_override("novalue").is_err());
    }

    #[test]
    fn override_values_are_typed() {
        assert_eq!(ExperimentConfig::parse_override("probes=5").unwrap().1, toml::Value::Integer(5));
        assert_eq!(ExperimentConfig::parse_override("potential=well").unwrap().1, toml::Value::String("well".into()));
        assert_eq!(ExperimentConfig::parse_override("out-dir=/tmp/x").unwrap().0, "out_dir");
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::preset("nontrap").unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.seed += 1;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
    }
}
