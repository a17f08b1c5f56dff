//! Engine configuration from an optional TOML file plus command-line
//! overrides.

use std::path::Path;

use clap::{Args, ValueEnum};
use proxdist::augment::AugmentationConfig;
use proxdist::nns::NnsStrategy;
use proxdist::{EngineConfig, Error};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nns {
    Kdtree,
    Walk,
}

impl From<Nns> for NnsStrategy {
    fn from(n: Nns) -> Self {
        match n {
            Nns::Kdtree => NnsStrategy::KdTree,
            Nns::Walk => NnsStrategy::DelaunayWalk,
        }
    }
}

/// Keys accepted in a config file, e.g.
///
/// ```toml
/// augment = "on"
/// alpha = 1.0
/// k = 1000
/// nns = "walk"
/// ```
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub augment: Option<Switch>,
    pub alpha: Option<f64>,
    pub k: Option<usize>,
    pub rho: Option<f64>,
    pub rounds: Option<usize>,
    pub nns: Option<Nns>,
    pub prune: Option<Switch>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<ConfigFile, Error> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<ConfigFile, Error> {
        ConfigFile::parse(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML file with engine settings; flags given here take precedence
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long, value_enum)]
    pub augment: Option<Switch>,
    /// Grid cell size in mean edge lengths
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Voronoi vertices per grid cell that trigger augmentation
    #[arg(long)]
    pub k: Option<usize>,
    /// Ring radius in grid cells
    #[arg(long)]
    pub rho: Option<f64>,
    /// Maximum augmentation rounds
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long, value_enum)]
    pub nns: Option<Nns>,
    #[arg(long, value_enum)]
    pub prune: Option<Switch>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<EngineConfig, Error> {
        let file = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let d = EngineConfig::default();
        let da = AugmentationConfig::default();
        let cfg = EngineConfig {
            augment: self.augment.or(file.augment).map_or(d.augment, Switch::on),
            augmentation: AugmentationConfig {
                alpha: self.alpha.or(file.alpha).unwrap_or(da.alpha),
                k: self.k.or(file.k).unwrap_or(da.k),
                rho: self.rho.or(file.rho).unwrap_or(da.rho),
                max_rounds: self.rounds.or(file.rounds).unwrap_or(da.max_rounds),
            },
            nns: self.nns.or(file.nns).map_or(d.nns, NnsStrategy::from),
            prune: self.prune.or(file.prune).map_or(d.prune, Switch::on),
        };
        cfg.augmentation.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "augment = \"off\"\nalpha = 2.5\nk = 30\nnns = \"walk\"\n").unwrap();
        let args = ConfigArgs { config: Some(p), k: Some(99), ..Default::default() };
        let c = args.resolve().unwrap();
        assert!(!c.augment);
        assert_eq!(c.augmentation.alpha, 2.5);
        assert_eq!(c.augmentation.k, 99);
        assert_eq!(c.nns, NnsStrategy::DelaunayWalk);
        assert_eq!(c.augmentation.rho, AugmentationConfig::default().rho);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(ConfigFile::parse("alpah = 1.0").is_err());
        assert!(ConfigFile::parse("k = \"many\"").is_err());
        assert!(ConfigArgs { alpha: Some(-1.0), ..Default::default() }.resolve().is_err());
    }

    #[test]
    fn defaults_without_input() {
        assert_eq!(ConfigArgs::default().resolve().unwrap(), EngineConfig::default());
    }
}
