use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::{Model, NetworkConfig, ParameterSet, RunningStats, Standardization};
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub shape: [usize; 2],
    pub offset: usize,
}

/// First line of a checkpoint file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub version: u32,
    pub config: NetworkConfig,
    pub standardization: Standardization,
    pub p_dbm: f64,
    pub scenario: String,
    /// Effective run configuration that produced the checkpoint, if recorded.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub settings: serde_json::Value,
    pub manifest: Vec<ManifestEntry>,
}

impl CheckpointHeader {
    fn payload_len(&self) -> usize {
        self.manifest.iter().map(|e| e.shape[0] * e.shape[1]).sum()
    }
}

/// A model together with the power level and scenario label it was trained for.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub p_dbm: f64,
    pub scenario: String,
    pub settings: serde_json::Value,
}

const RUNNING: [&str; 4] = ["bn1.running_mean", "bn1.running_var", "bn2.running_mean", "bn2.running_var"];

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let model = &self.model;
        let mut manifest = Vec::new();
        let mut payload: Vec<f64> = Vec::new();
        let mut push = |name: &str, shape: [usize; 2], data: &[f64]| {
            manifest.push(ManifestEntry { name: name.to_string(), shape, offset: payload.len() });
            payload.extend_from_slice(data);
        };
        for (name, t) in model.params.iter() {
            push(name, [t.rows(), t.cols()], t.data());
        }
        let c = model.config.channels;
        let running = [&model.running.mean[0], &model.running.var[0], &model.running.mean[1], &model.running.var[1]];
        for (name, data) in RUNNING.iter().zip(running) {
            push(name, [c, 1], data);
        }
        let header = CheckpointHeader {
            version: CHECKPOINT_VERSION,
            config: model.config.clone(),
            standardization: model.standardization.clone(),
            p_dbm: self.p_dbm,
            scenario: self.scenario.clone(),
            settings: self.settings.clone(),
            manifest,
        };
        let mut out = serde_json::to_vec(&header)?;
        out.push(b'\n');
        for x in payload {
            out.extend_from_slice(&x.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let split = bytes
            .iter()
            .position(|b| *b == b'\n')
            .ok_or_else(|| Error::CorruptPayload("missing header line".into()))?;
        let header = parse_header(&bytes[..split])?;
        let payload = &bytes[split + 1..];
        if payload.len() != header.payload_len() * 8 {
            return Err(Error::CorruptPayload(format!(
                "payload has {} bytes, manifest needs {}",
                payload.len(),
                header.payload_len() * 8
            )));
        }
        let values: Vec<f64> =
            payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
        let read = |e: &ManifestEntry| -> Result<Tensor> {
            let n = e.shape[0] * e.shape[1];
            let slice = values
                .get(e.offset..e.offset + n)
                .ok_or_else(|| Error::CorruptPayload(format!("{} lies outside the payload", e.name)))?;
            Tensor::from_vec(e.shape[0], e.shape[1], slice.to_vec())
        };

        let layout = header.config.layout();
        if header.manifest.len() != layout.len() + RUNNING.len() {
            return Err(Error::CorruptPayload("manifest does not match the network layout".into()));
        }
        let mut names = Vec::new();
        let mut tensors = Vec::new();
        for (entry, (name, shape)) in header.manifest.iter().zip(&layout) {
            if entry.name != *name || (entry.shape[0], entry.shape[1]) != *shape {
                return Err(Error::CorruptPayload(format!("unexpected manifest entry {}", entry.name)));
            }
            names.push(entry.name.clone());
            tensors.push(read(entry)?);
        }
        let mut running = Vec::new();
        for (entry, name) in header.manifest[layout.len()..].iter().zip(RUNNING) {
            if entry.name != name || entry.shape != [header.config.channels, 1] {
                return Err(Error::CorruptPayload(format!("unexpected manifest entry {}", entry.name)));
            }
            running.push(read(entry)?.into_data());
        }
        let mut running = running.into_iter();
        let (m0, v0, m1, v1) = (running.next(), running.next(), running.next(), running.next());
        let running = RunningStats {
            mean: vec![m0.unwrap_or_default(), m1.unwrap_or_default()],
            var: vec![v0.unwrap_or_default(), v1.unwrap_or_default()],
        };
        let model = Model {
            config: header.config,
            params: ParameterSet::new(names, tensors)?,
            running,
            standardization: header.standardization,
        };
        Ok(Self { model, p_dbm: header.p_dbm, scenario: header.scenario, settings: header.settings })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// Reads only the header line.
    pub fn inspect(path: &Path) -> Result<CheckpointHeader> {
        let mut line = Vec::new();
        BufReader::new(fs::File::open(path)?.take(1 << 24)).read_until(b'\n', &mut line)?;
        if line.last() != Some(&b'\n') {
            return Err(Error::CorruptPayload("missing header line".into()));
        }
        line.pop();
        parse_header(&line)
    }
}

fn parse_header(line: &[u8]) -> Result<CheckpointHeader> {
    #[derive(Deserialize)]
    struct Version {
        version: u32,
    }
    let v: Version =
        serde_json::from_slice(line).map_err(|e| Error::CorruptPayload(format!("unreadable header: {e}")))?;
    if v.version != CHECKPOINT_VERSION {
        return Err(Error::VersionMismatch { found: v.version, expected: CHECKPOINT_VERSION });
    }
    serde_json::from_slice(line).map_err(|e| Error::CorruptPayload(format!("unreadable header: {e}")))
}
