//! Cost-model and parameter configuration files.
//!
//! A config is a flat TOML table; every key is optional and falls back to the
//! built-in default:
//!
//! ```toml
//! t_perm = 0.178
//! t_scmult = 0.005
//! n = 2048
//! ```
//!
//! When `t_decperm` or `t_hstperm` is absent it is derived from `t_perm`
//! (60% and 40% of it). The noise budget is recomputed from `q_bits` and `p`
//! unless given explicitly.

use std::path::{Path, PathBuf};

use gala_core::{CostModel, HeParams};
use serde::{Deserialize, Serialize};

/// Environment variable consulted when no `--config` is given.
pub const CONFIG_ENV: &str = "GALA_COST_CONFIG";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub t_perm: Option<f64>,
    pub t_scmult: Option<f64>,
    pub t_add: Option<f64>,
    pub t_decperm: Option<f64>,
    pub t_hstperm: Option<f64>,
    pub eta0: Option<f64>,
    pub eta_mult: Option<f64>,
    pub eta_rot: Option<f64>,
    pub n: Option<usize>,
    pub p: Option<u64>,
    pub q_bits: Option<u32>,
    pub sigma: Option<f64>,
    pub noise_budget: Option<f64>,
}

impl ConfigFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_owned(),
            message: e.message().to_owned(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text, path)
    }
}

/// Parameters and cost model in effect for a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[derive(Default)]
pub struct Effective {
    pub params: HeParams,
    pub cost: CostModel,
}


/// Command-line overrides applied after the file.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub n: Option<usize>,
    pub p: Option<u64>,
}

impl Effective {
    pub fn resolve(file: &ConfigFile, overrides: Overrides) -> Result<Self, ConfigError> {
        let base = CostModel::default();
        let t_perm = file.t_perm.unwrap_or(base.t_perm);
        let cost = CostModel {
            t_perm,
            t_scmult: file.t_scmult.unwrap_or(base.t_scmult),
            t_add: file.t_add.unwrap_or(base.t_add),
            t_decperm: file.t_decperm.unwrap_or(0.6 * t_perm),
            t_hstperm: file.t_hstperm.unwrap_or(0.4 * t_perm),
        };
        if !cost.is_valid() {
            return Err(ConfigError::Invalid(format!("cost model has negative or non-finite entries: {cost:?}")));
        }

        let n = overrides.n.or(file.n).unwrap_or(HeParams::default().n);
        let p = overrides.p.or(file.p).unwrap_or(HeParams::default().p);
        let mut params = HeParams::new(n, p);
        if let Some(q) = file.q_bits {
            params.q_bits = q;
        }
        params.eta0 = file.eta0.unwrap_or(params.eta0);
        params.eta_mult = file.eta_mult.unwrap_or(params.eta_mult);
        params.eta_rot = file.eta_rot.unwrap_or(params.eta_rot);
        params.sigma = file.sigma.unwrap_or(params.sigma);
        params.noise_budget = file
            .noise_budget
            .unwrap_or_else(|| HeParams::default_budget(params.q_bits, params.p));
        params.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(Self { params, cost })
    }

    /// Loads `path`, else the file named by [`CONFIG_ENV`], else defaults.
    pub fn load(path: Option<&Path>, overrides: Overrides) -> Result<Self, ConfigError> {
        let env_path = std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
        let file = match path.map(Path::to_owned).or(env_path) {
            Some(p) => ConfigFile::load(&p)?,
            None => ConfigFile::default(),
        };
        Self::resolve(&file, overrides)
    }

    /// The effective values as a flat TOML document (loadable again).
    pub fn to_toml(&self) -> String {
        let echo = ConfigFile {
            t_perm: Some(self.cost.t_perm),
            t_scmult: Some(self.cost.t_scmult),
            t_add: Some(self.cost.t_add),
            t_decperm: Some(self.cost.t_decperm),
            t_hstperm: Some(self.cost.t_hstperm),
            eta0: Some(self.params.eta0),
            eta_mult: Some(self.params.eta_mult),
            eta_rot: Some(self.params.eta_rot),
            n: Some(self.params.n),
            p: Some(self.params.p),
            q_bits: Some(self.params.q_bits),
            sigma: Some(self.params.sigma),
            noise_budget: Some(self.params.noise_budget),
        };
        toml::to_string(&echo).expect("flat config always serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ConfigFile, ConfigError> {
        ConfigFile::parse(text, Path::new("test.toml"))
    }

    #[test]
    fn empty_file_gives_defaults() {
        let eff = Effective::resolve(&parse("").unwrap(), Overrides::default()).unwrap();
        assert_eq!(eff, Effective::default());
    }

    #[test]
    fn derived_rotation_costs() {
        let eff = Effective::resolve(&parse("t_perm = 1.0").unwrap(), Overrides::default()).unwrap();
        assert_eq!(eff.cost.t_decperm, 0.6);
        assert_eq!(eff.cost.t_hstperm, 0.4);
        let eff = Effective::resolve(&parse("t_perm = 1.0\nt_hstperm = 0.1").unwrap(), Overrides::default()).unwrap();
        assert_eq!(eff.cost.t_hstperm, 0.1);
    }

    #[test]
    fn overrides_win_and_budget_follows_p() {
        let file = parse("n = 4096\np = 65537\nq_bits = 40").unwrap();
        let eff = Effective::resolve(&file, Overrides { n: Some(256), p: None }).unwrap();
        assert_eq!(eff.params.n, 256);
        assert_eq!(eff.params.p, 65537);
        assert_eq!(eff.params.noise_budget, 2f64.powi(39) / 65537.0);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(parse("t_prem = 1.0"), Err(ConfigError::Parse { .. })));
        assert!(matches!(parse("n = \"big\""), Err(ConfigError::Parse { .. })));
        let bad = [ "p = 1000", "n = 1000", "t_add = -1.0", "eta_rot = 1.0" ];
        for text in bad {
            assert!(
                matches!(Effective::resolve(&parse(text).unwrap(), Overrides::default()), Err(ConfigError::Invalid(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn echo_round_trips() {
        let eff = Effective::resolve(&parse("t_scmult = 0.01\nn = 512").unwrap(), Overrides::default()).unwrap();
        let again = Effective::resolve(&parse(&eff.to_toml()).unwrap(), Overrides::default()).unwrap();
        assert_eq!(eff, again);
    }
}
