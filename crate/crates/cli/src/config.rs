//! Run configuration: a TOML file overlaid by command-line flags.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use stopgo_core::info::InfoMode;
use stopgo_core::search::Baseline;
use stopgo_core::{GameDesign, GridResolution, ModelId, ModelParams};

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub models: Option<Vec<ModelId>>,
    /// Prior weights in model order; uniform when absent.
    pub prior: Option<Vec<f64>>,
    /// `average` or `target:N`.
    pub objective: Option<String>,
    pub mode: Option<InfoMode>,
    pub k: Option<usize>,
    pub n_players: Option<usize>,
    pub n_rounds: Option<usize>,
    pub enumeration_cap: Option<u64>,
    pub design_grid: Option<DesignGridConfig>,
    pub param_grid: Option<GridResolution>,
    pub search: Option<SearchSection>,
    pub simulate: Option<SimulateSection>,
    pub select: Option<SelectSection>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignGridConfig {
    pub n_a: usize,
    pub n_pi: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Gpucbpe,
    GridScan,
    Random,
}

impl Strategy {
    pub fn baseline(self) -> Option<Baseline> {
        match self {
            Strategy::Gpucbpe => None,
            Strategy::GridScan => Some(Baseline::GridScan),
            Strategy::Random => Some(Baseline::Random),
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gpucbpe" => Ok(Strategy::Gpucbpe),
            "grid_scan" => Ok(Strategy::GridScan),
            "random" => Ok(Strategy::Random),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    pub strategy: Option<Strategy>,
    pub n_init: Option<usize>,
    pub beta: Option<f64>,
    pub delta_c: Option<f64>,
    pub stop_threshold: Option<f64>,
    pub stop_repeats: Option<usize>,
    pub use_stop_rule: Option<bool>,
    pub budget: Option<usize>,
    pub refit_every: Option<usize>,
    pub noise_var: Option<f64>,
    /// Evaluate the whole grid first so the trace can report regret.
    pub regret: Option<bool>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum ParamsSpec {
    Fixed(ModelParams),
    /// Must be the string `sample`.
    Sample(SampleTag),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleTag {
    Sample,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub model: Option<ModelId>,
    pub params: Option<ParamsSpec>,
    pub design: Option<GameDesign>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectSection {
    pub inputs: Option<Vec<PathBuf>>,
    pub design: Option<GameDesign>,
    pub bootstrap: Option<BootstrapSpec>,
    pub posterior: Option<ModelId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapSpec {
    pub sizes: Vec<usize>,
    pub reps: usize,
}

impl std::str::FromStr for BootstrapSpec {
    type Err = String;

    /// `sizes=10,20,40,reps=50`
    fn from_str(s: &str) -> Result<Self, String> {
        let mut sizes = Vec::new();
        let mut reps = None;
        let mut in_sizes = false;
        for tok in s.split(',').map(str::trim) {
            if let Some(v) = tok.strip_prefix("sizes=") {
                in_sizes = true;
                sizes.push(v.parse().map_err(|_| format!("bad size `{v}`"))?);
            } else if let Some(v) = tok.strip_prefix("reps=") {
                in_sizes = false;
                reps = Some(v.parse().map_err(|_| format!("bad reps `{v}`"))?);
            } else if in_sizes {
                sizes.push(tok.parse().map_err(|_| format!("bad size `{tok}`"))?);
            } else {
                return Err(format!("unexpected `{tok}` in bootstrap spec"));
            }
        }
        match reps {
            Some(reps) if !sizes.is_empty() => Ok(Self { sizes, reps }),
            _ => Err("bootstrap spec needs sizes=... and reps=...".into()),
        }
    }
}

/// `model=roth_erev`
pub fn parse_posterior(s: &str) -> Result<ModelId, String> {
    let v = s.strip_prefix("model=").unwrap_or(s);
    v.parse().map_err(|e: stopgo_core::Error| e.to_string())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bootstrap_spec_parses() {
        let b: BootstrapSpec = "sizes=10,20,40,reps=5".parse().unwrap();
        assert_eq!(b.sizes, vec![10, 20, 40]);
        assert_eq!(b.reps, 5);
        assert!("sizes=10".parse::<BootstrapSpec>().is_err());
        assert!("reps=3".parse::<BootstrapSpec>().is_err());
        assert!("7,reps=3".parse::<BootstrapSpec>().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("seed = 1\nsede = 2").is_err());
        assert!(toml::from_str::<RunConfig>("[search]\nbudgett = 3").is_err());
        let c: RunConfig = toml::from_str(
            "seed = 3\nmodels = [\"bayes_nash\", \"roth_erev\"]\nmode = \"exact\"\n[design_grid]\nn_a = 4\nn_pi = 5",
        )
        .unwrap();
        assert_eq!(c.models.unwrap(), vec![ModelId::BayesNash, ModelId::RothErev]);
        assert_eq!(c.mode, Some(InfoMode::Exact));
    }

    #[test]
    fn params_accept_sample_or_table() {
        let s: SimulateSection = toml::from_str("params = \"sample\"").unwrap();
        assert!(matches!(s.params, Some(ParamsSpec::Sample(_))));
        let s: SimulateSection =
            toml::from_str("params = { epsilon0 = 0.1, alpha = 0.9, delta = 0.0, pi_per = 0.5 }").unwrap();
        assert!(matches!(s.params, Some(ParamsSpec::Fixed(_))));
        assert!(toml::from_str::<SimulateSection>("params = \"guess\"").is_err());
    }
}
