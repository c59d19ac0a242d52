use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channels::{ChannelInstance, ScenarioConfig};
use crate::error::{Error, Result};
use crate::numerics::{dbm_to_watts, ComplexMatrix};

pub const DATASET_VERSION: u32 = 1;

/// A canonicalized instance and its optimal uplink powers as fractions of `P`.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePair {
    pub id: usize,
    pub instance: ChannelInstance<f64>,
    pub label: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub version: u32,
    pub m: usize,
    pub k: usize,
    pub p_dbm: f64,
    pub scenario: ScenarioConfig,
    pub count: usize,
    pub seed: u64,
    pub stream: u64,
    pub redraws: usize,
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    h_re: Vec<Vec<f64>>,
    h_im: Vec<Vec<f64>>,
    q: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetFile {
    pub header: DatasetHeader,
    pub records: Vec<SamplePair>,
}

impl DatasetFile {
    pub fn power(&self) -> f64 {
        dbm_to_watts(self.header.p_dbm)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = serde_json::to_vec(&self.header)?;
        out.push(b'\n');
        for rec in &self.records {
            let h = &rec.instance.h;
            let line = RecordLine {
                h_re: (0..h.rows()).map(|r| h.row(r).iter().map(|z| z.re).collect()).collect(),
                h_im: (0..h.rows()).map(|r| h.row(r).iter().map(|z| z.im).collect()).collect(),
                q: rec.label.clone(),
            };
            serde_json::to_writer(&mut out, &line)?;
            out.push(b'\n');
        }
        Ok(out)
    }

    pub fn from_reader(reader: impl Read) -> Result<Self> {
        let mut lines = BufReader::new(reader).lines();
        let first = lines.next().ok_or_else(|| Error::CorruptPayload("empty dataset file".into()))??;
        let header: DatasetHeader = serde_json::from_str(&first)?;
        if header.version != DATASET_VERSION {
            return Err(Error::VersionMismatch { found: header.version, expected: DATASET_VERSION });
        }
        let power = dbm_to_watts(header.p_dbm);
        let mut records = Vec::with_capacity(header.count);
        for (id, line) in lines.enumerate() {
            let line = line?;
            let rec: RecordLine = serde_json::from_str(&line)?;
            records.push(decode_record(id, rec, &header, power)?);
        }
        if records.len() != header.count {
            return Err(Error::CorruptPayload(format!(
                "header announces {} records, found {}",
                header.count,
                records.len()
            )));
        }
        Ok(Self { header, records })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_reader(fs::File::open(path)?)
    }

    /// Hex SHA-256 of the serialized file; with the record index it identifies a pair.
    pub fn file_hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_bytes()?)))
    }
}

fn decode_record(id: usize, rec: RecordLine, header: &DatasetHeader, power: f64) -> Result<SamplePair> {
    let (k, m) = (header.k, header.m);
    let shape_ok = rec.h_re.len() == k
        && rec.h_im.len() == k
        && rec.q.len() == k
        && rec.h_re.iter().chain(&rec.h_im).all(|r| r.len() == m);
    if !shape_ok {
        return Err(Error::CorruptPayload(format!("record {id} does not have shape {k}x{m}")));
    }
    let h = ComplexMatrix::from_fn(k, m, |r, c| Complex::new(rec.h_re[r][c], rec.h_im[r][c]));
    let instance = ChannelInstance::new(h, vec![1.0; k], power)?;
    Ok(SamplePair { id, instance, label: rec.q })
}
