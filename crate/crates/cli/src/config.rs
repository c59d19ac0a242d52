use std::fs;
use std::path::Path;

use beamadapt::channels::{ModelId, ScenarioConfig};
use beamadapt::nn::InputTransform;
use beamadapt::offline::TrainConfig;
use beamadapt::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Config file shared by `train` and `adapt`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train: TrainConfig,
    /// Meta-training tasks drawn from the merged pool.
    pub tasks: usize,
    pub support: usize,
    pub query: usize,
    /// Leading records of the adaptation file used by `adapt`.
    pub samples: usize,
    /// Overrides the network's default input transform.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_transform: Option<InputTransform>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { train: TrainConfig::default(), tasks: 1500, support: 50, query: 50, samples: 20, input_transform: None }
    }
}

/// `solve` input: channel rows `h_k^H` as real and imaginary parts.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveInput {
    pub h_re: Vec<Vec<f64>>,
    pub h_im: Vec<Vec<f64>>,
    /// Per-user noise powers; all ones when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<Vec<f64>>,
    /// Power budget in watts. Exactly one of `power` and `p_dbm` is required.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_dbm: Option<f64>,
}

/// Reads a JSON config. Any object with a `"preset"` key is a scenario
/// shorthand: it expands to the preset for `model`, `m`, `k`, `p_dbm`, with
/// the object's other keys overriding preset fields.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    let value = expand_presets(serde_json::from_str(&text)?)?;
    Ok(serde_json::from_value(value)?)
}

fn expand_presets(value: Value) -> Result<Value> {
    match value {
        Value::Object(mut map) => {
            if let Some(preset) = map.remove("preset") {
                let model: ModelId = preset
                    .as_str()
                    .ok_or_else(|| Error::InvalidConfig("preset must be a scenario name".into()))?
                    .parse()?;
                let field = |key: &str| {
                    map.get(key).cloned().ok_or_else(|| Error::InvalidConfig(format!("preset needs `{key}`")))
                };
                let m: usize = serde_json::from_value(field("m")?)?;
                let k: usize = serde_json::from_value(field("k")?)?;
                let p_dbm: f64 = serde_json::from_value(field("p_dbm")?)?;
                let mut base = serde_json::to_value(ScenarioConfig::preset(model, m, k, p_dbm))?;
                if let Value::Object(fields) = &mut base {
                    fields.extend(map);
                }
                return Ok(base);
            }
            let map = map.into_iter().map(|(k, v)| Ok((k, expand_presets(v)?))).collect::<Result<_>>()?;
            Ok(Value::Object(map))
        }
        Value::Array(items) => Ok(Value::Array(items.into_iter().map(expand_presets).collect::<Result<_>>()?)),
        other => Ok(other),
    }
}

pub fn load_or_default<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    path.map_or_else(|| Ok(T::default()), load_json)
}

pub fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidConfig(msg.to_string()))
    }
}
