//! TOML run configuration shared by every subcommand.
//!
//! ```toml
//! [agents]
//! purchaser_type = "curious"
//! seller_type = "uncurious"
//! [agents.distribution]        # or [agents.purchaser] + [agents.seller]
//! purchaser_reserve_mean = 15.0
//! # ...
//! [protocol]
//! variant = "all"
//! bound = 500
//! opener = "purchaser"
//! curious_counts = "opponent"
//! [experiment]
//! draws = 10000
//! seed = 42
//! [output]
//! dir = "out"
//! formats = ["csv", "json"]
//! records = false
//! [check]
//! multipliers = [1.0, 1.05, 1.1, 1.2, 1.3, 1.4, 1.5]
//! draws = 10000
//! ```
//!
//! Unknown keys are rejected. Semantic errors name the offending key.

use crate::agents::{AgentSpec, CuriosityType, CuriousCounts, StrategyParams};
use crate::experiments::{DistributionParams, Pairing};
use crate::model::Role;
use crate::protocol::{ProtocolConfig, Variant, DEFAULT_BOUND};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid `{key}`: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub agents: AgentsSection,
    #[serde(default)]
    pub protocol: ProtocolSection,
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub check: CheckSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentsSection {
    #[serde(default = "default_purchaser_type")]
    pub purchaser_type: CuriosityType,
    #[serde(default = "default_seller_type")]
    pub seller_type: CuriosityType,
    pub distribution: Option<DistributionParams>,
    pub purchaser: Option<AgentBlock>,
    pub seller: Option<AgentBlock>,
}

fn default_purchaser_type() -> CuriosityType {
    CuriosityType::Curious
}

fn default_seller_type() -> CuriosityType {
    CuriosityType::Uncurious
}

/// One fully specified agent; its type comes from the `agents` section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentBlock {
    pub initial_reserve: f64,
    pub info_base: f64,
    pub info_scale: f64,
    pub kappa: f64,
    pub beta: f64,
    pub gamma: f64,
    pub pace_horizon: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    #[serde(default = "default_variant")]
    pub variant: Variant,
    #[serde(default = "default_bound")]
    pub bound: u32,
    #[serde(default = "default_opener")]
    pub opener: Role,
    /// Overrides the counting convention of curious agents when set.
    pub curious_counts: Option<CuriousCounts>,
}

fn default_variant() -> Variant {
    Variant::All
}

fn default_bound() -> u32 {
    DEFAULT_BOUND
}

fn default_opener() -> Role {
    Role::Purchaser
}

impl Default for ProtocolSection {
    fn default() -> Self {
        ProtocolSection {
            variant: default_variant(),
            bound: default_bound(),
            opener: default_opener(),
            curious_counts: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub draws: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    /// Stream every bargaining record as JSON lines (`run` only).
    #[serde(default)]
    pub records: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: default_dir(), formats: default_formats(), records: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    /// Declarations as multiples of the truthful reserve at the bound.
    #[serde(default = "default_multipliers")]
    pub multipliers: Vec<f64>,
    /// Draws of the incentive probes; defaults to `experiment.draws`.
    pub draws: Option<u64>,
    /// Agent whose declarations are probed; its type is the curious side of
    /// `agents`. Defaults to the mid-range agent of the distribution.
    pub focal: Option<AgentBlock>,
}

fn default_multipliers() -> Vec<f64> {
    vec![1.0, 1.05, 1.1, 1.2, 1.3, 1.4, 1.5]
}

impl Default for CheckSection {
    fn default() -> Self {
        CheckSection { multipliers: default_multipliers(), draws: None, focal: None }
    }
}

/// Where the agents of a run come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Population {
    Random { pairing: Pairing, dist: DistributionParams },
    Fixed { seller: AgentSpec, purchaser: AgentSpec },
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        RunConfig::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.experiment.draws == 0 {
            return Err(invalid("experiment.draws", "must be >= 1"));
        }
        if self.protocol.bound == 0 {
            return Err(invalid("protocol.bound", "must be >= 1"));
        }
        if self.output.formats.is_empty() {
            return Err(invalid("output.formats", "must list at least one format"));
        }
        if self.check.multipliers.is_empty() {
            return Err(invalid("check.multipliers", "must not be empty"));
        }
        if let Some(m) = self.check.multipliers.iter().find(|m| !(**m > 0.0)) {
            return Err(invalid("check.multipliers", format!("{m} is not positive")));
        }
        if self.check.draws == Some(0) {
            return Err(invalid("check.draws", "must be >= 1"));
        }
        let a = &self.agents;
        match (&a.distribution, &a.purchaser, &a.seller) {
            (Some(_), None, None) => {}
            (None, Some(_), Some(_)) => {}
            (Some(_), _, _) => {
                return Err(invalid(
                    "agents",
                    "give either a distribution or explicit purchaser/seller blocks, not both",
                ))
            }
            (None, None, _) => return Err(invalid("agents.purchaser", "missing")),
            (None, _, None) => return Err(invalid("agents.seller", "missing")),
        }
        if let Some(d) = &self.agents.distribution {
            d.validate().map_err(|e| invalid("agents.distribution", e.to_string()))?;
        }
        for (key, role) in [("agents.purchaser", Role::Purchaser), ("agents.seller", Role::Seller)] {
            if let Some(spec) = self.agent_spec(role) {
                spec.validate().map_err(|e| invalid(key, e.to_string()))?;
            }
        }
        self.protocol_config().validate().map_err(|e| invalid("protocol", e.to_string()))?;
        Ok(())
    }

    pub fn pairing(&self) -> Pairing {
        Pairing::new(self.agents.purchaser_type, self.agents.seller_type)
    }

    fn curious_counts(&self, fallback: CuriousCounts) -> CuriousCounts {
        self.protocol.curious_counts.unwrap_or(fallback)
    }

    /// Distribution with the protocol-level counting override applied.
    pub fn distribution(&self) -> Option<DistributionParams> {
        self.agents
            .distribution
            .map(|d| DistributionParams { curious_counts: self.curious_counts(d.curious_counts), ..d })
    }

    /// The explicit agent for `role`, if the config lists one.
    pub fn agent_spec(&self, role: Role) -> Option<AgentSpec> {
        let block = match role {
            Role::Purchaser => self.agents.purchaser?,
            Role::Seller => self.agents.seller?,
        };
        Some(self.spec_from_block(role, block))
    }

    /// `block` as an agent of `role`, typed by the `agents` section.
    pub fn spec_from_block(&self, role: Role, block: AgentBlock) -> AgentSpec {
        let ctype = match role {
            Role::Purchaser => self.agents.purchaser_type,
            Role::Seller => self.agents.seller_type,
        };
        AgentSpec {
            role,
            ctype,
            initial_reserve: block.initial_reserve,
            info_base: block.info_base,
            info_scale: block.info_scale,
            curious_counts: self.curious_counts(CuriousCounts::default()),
            strategy: StrategyParams {
                kappa: block.kappa,
                beta: block.beta,
                gamma: block.gamma,
                pace_horizon: block.pace_horizon,
            },
        }
    }

    pub fn population(&self) -> Population {
        match self.distribution() {
            Some(dist) => Population::Random { pairing: self.pairing(), dist },
            None => Population::Fixed {
                seller: self.agent_spec(Role::Seller).expect("validated"),
                purchaser: self.agent_spec(Role::Purchaser).expect("validated"),
            },
        }
    }

    pub fn protocol_config(&self) -> ProtocolConfig {
        ProtocolConfig { opener: self.protocol.opener, ..self.protocol.variant.config(self.protocol.bound) }
    }

    pub fn check_draws(&self) -> u64 {
        self.check.draws.unwrap_or(self.experiment.draws)
    }

    pub fn wants(&self, format: Format) -> bool {
        self.output.formats.contains(&format)
    }

    /// SHA-256 of the effective configuration, in hex.
    ///
    /// The output directory is left out: where results are written does
    /// not change them.
    pub fn digest(&self) -> String {
        let mut cfg = self.clone();
        cfg.output.dir = PathBuf::new();
        let canonical = serde_json::to_string(&cfg).expect("config serializes");
        let hash = Sha256::digest(canonical.as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}
