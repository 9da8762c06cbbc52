//! JSON run configuration. Precedence, highest first: command-line flags,
//! `RECOMMERCE_OUT` (output directory only), the config file, built-in
//! defaults.

use std::path::{Path, PathBuf};

use recommerce_core::olg::OlgObjective;
use recommerce_core::sampling::DrawBox;
use recommerce_core::statics::Parameter;
use recommerce_core::{Error, ModelKind, ModelParams, Regime, Result, SolverOptions};
use serde::Deserialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeChoice {
    ThirdParty,
    Branded,
    Both,
}

impl RegimeChoice {
    pub fn regimes(self) -> Vec<Regime> {
        match self {
            RegimeChoice::ThirdParty => vec![Regime::ThirdParty],
            RegimeChoice::Branded => vec![Regime::Branded],
            RegimeChoice::Both => Regime::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: Option<Parameter>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub seed: Option<u64>,
    pub draws: Option<usize>,
    pub oracle_draws: Option<usize>,
    pub audit_draws: Option<usize>,
    pub grid_points: Option<usize>,
    pub commission_points: Option<usize>,
    pub bounds: Option<DrawBox>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub params: Option<ModelParams>,
    pub model: Option<ModelKind>,
    pub regime: Option<RegimeChoice>,
    pub objective: Option<OlgObjective>,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub verify: VerifySection,
    pub solver: Option<SolverOptions>,
    pub out_dir: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema: SCHEMA_VERSION,
            params: None,
            model: None,
            regime: None,
            objective: None,
            sweep: SweepSection::default(),
            verify: VerifySection::default(),
            solver: None,
            out_dir: None,
            formats: None,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema {} (this build reads schema {SCHEMA_VERSION})",
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn params(&self) -> ModelParams {
        self.params.unwrap_or_else(ModelParams::canonical)
    }

    pub fn solver(&self) -> SolverOptions {
        self.solver.unwrap_or_default()
    }

    pub fn formats(&self) -> Vec<Format> {
        self.formats.clone().unwrap_or_else(|| vec![Format::Csv, Format::Json])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = RunConfig::parse(r#"{"schema": 1}"#).unwrap();
        assert_eq!(c.params(), ModelParams::canonical());
        assert_eq!(c.formats(), vec![Format::Csv, Format::Json]);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse(r#"{"schema": 1, "seed": 3}"#).is_err());
        assert!(RunConfig::parse(r#"{"schema": 1, "verify": {"sed": 3}}"#).is_err());
        assert!(RunConfig::parse(r#"{"schema": 1, "sweep": {"parameter": "gamma"}}"#).is_err());
    }

    #[test]
    fn schema_is_checked() {
        assert!(matches!(RunConfig::parse(r#"{"schema": 2}"#), Err(Error::Config(_))));
        assert!(RunConfig::parse(r#"{}"#).is_err());
    }

    #[test]
    fn full_config() {
        let c = RunConfig::parse(
            r#"{"schema": 1, "model": "olg", "regime": "both", "objective": "stream-only",
                "sweep": {"parameter": "alpha", "from": 0.75, "to": 1.0, "steps": 26},
                "verify": {"seed": 9, "draws": 10}, "formats": ["csv"], "out_dir": "x"}"#,
        )
        .unwrap();
        assert_eq!(c.model, Some(ModelKind::Olg));
        assert_eq!(c.regime, Some(RegimeChoice::Both));
        assert_eq!(c.objective, Some(OlgObjective::StreamOnly));
        assert_eq!(c.sweep.steps, Some(26));
        assert_eq!(c.verify.seed, Some(9));
    }
}
