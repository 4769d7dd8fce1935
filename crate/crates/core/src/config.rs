//! JSON run configuration shared by every command.

use serde::{Deserialize, Serialize};

use crate::decoder::DecoderConfig;
use crate::error::{Error, Result};
use crate::sim::{SearchSpec, System};
use crate::tree::{TreeCodeConfig, TreeLayout};

/// Either a named preset or an explicit layout.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum TreeSpec {
    Preset { preset: String },
    Custom(TreeLayout),
}

impl Default for TreeSpec {
    fn default() -> Self {
        TreeSpec::Preset { preset: "toy".into() }
    }
}

// Untagged deserialization buffers map keys as strings, which breaks the
// integer keys of `parity_graph`, so dispatch on the `preset` key by hand.
impl<'de> Deserialize<'de> for TreeSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let value = serde_json::Value::deserialize(d)?;
        match value.get("preset") {
            Some(serde_json::Value::String(name)) if value.as_object().is_some_and(|o| o.len() == 1) => {
                Ok(TreeSpec::Preset { preset: name.clone() })
            }
            Some(_) => Err(D::Error::custom("`preset` must be the only key and a string")),
            None => serde_json::from_value(value).map(TreeSpec::Custom).map_err(D::Error::custom),
        }
    }
}

impl TreeSpec {
    pub fn build(&self) -> Result<TreeCodeConfig> {
        match self {
            TreeSpec::Preset { preset } => TreeCodeConfig::preset(preset)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown tree preset {preset:?}"))),
            TreeSpec::Custom(layout) => TreeCodeConfig::try_from(layout.clone()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            TreeSpec::Preset { preset } => preset.clone(),
            TreeSpec::Custom(_) => "custom".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorSpec {
    pub seed: u64,
}

impl Default for OperatorSpec {
    fn default() -> Self {
        OperatorSpec { seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub tree: TreeSpec,
    pub generator_seed: u64,
    /// Channel uses.
    pub n: usize,
    pub operator: OperatorSpec,
    pub ka: usize,
    pub ebn0_db: f64,
    pub decoder: DecoderConfig,
    pub trials: usize,
    pub master_seed: u64,
    pub search: SearchSpec,
    pub ka_list: Vec<usize>,
    /// Write measured wall-clock times; when false the column is zero so
    /// that outputs are byte-for-byte reproducible.
    pub record_timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            tree: TreeSpec::default(),
            generator_seed: 0,
            n: 2048,
            operator: OperatorSpec::default(),
            ka: 2,
            ebn0_db: 6.0,
            decoder: DecoderConfig::default(),
            trials: 200,
            master_seed: 0,
            search: SearchSpec::default(),
            ka_list: vec![2, 4, 8],
            record_timing: true,
        }
    }
}

impl RunConfig {
    /// Parses and validates a JSON document. Syntax errors carry line and
    /// column.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.tree.build()?;
        self.decoder.validate()?;
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be positive".into()));
        }
        if self.ka == 0 || self.ka_list.contains(&0) {
            return Err(Error::InvalidConfig("ka must be positive".into()));
        }
        if self.trials == 0 || self.search.trials_per_point == 0 {
            return Err(Error::InvalidConfig("trial counts must be positive".into()));
        }
        if !self.ebn0_db.is_finite() {
            return Err(Error::InvalidConfig("ebn0_db must be finite".into()));
        }
        Ok(())
    }

    pub fn system(&self) -> Result<System> {
        System::new(self.tree.build()?, self.generator_seed, self.n, self.operator.seed)
    }
}
