use crate::error::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_hash(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Write to a sibling temporary file, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Format(format!("not a file path: {}", path.display())))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.partial"));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

pub fn to_csv_bytes<T: Serialize>(rows: &[T], header: &[&str]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).map_err(|e| Error::Format(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::Format(e.to_string()))
}

/// Parse CSV bytes back into typed rows after checking the header.
pub fn read_csv<T: DeserializeOwned>(bytes: &[u8], header: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(bytes);
    let found: Vec<String> = r
        .headers()
        .map_err(|e| Error::Format(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if found != header {
        return Err(Error::Format(format!("CSV header {found:?}, expected {header:?}")));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Format(e.to_string())))
        .collect()
}

pub const SWEEP_HEADER: [&str; 9] = [
    "N",
    "t",
    "norm_full",
    "norm_minus_p0",
    "norm_phase",
    "norm_sc",
    "norm_slf",
    "norm_shf",
    "closure_residual",
];

pub const SHARP_HEADER: [&str; 8] = ["N", "t", "variant", "sum", "integral", "gap", "normalized_const", "regime_flag"];

pub const SPECTRUM_HEADER: [&str; 4] = ["xi", "re_lambda", "im_lambda", "branch_id"];

pub const WHITHAM_HEADER: [&str; 7] = [
    "t",
    "norm_full",
    "norm_minus_p0",
    "norm_phase",
    "norm_residual",
    "whitham_error",
    "leak",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub t: f64,
    pub variant: String,
    pub sum: f64,
    pub integral: f64,
    pub gap: f64,
    pub normalized_const: f64,
    pub regime_flag: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub xi: f64,
    pub re_lambda: f64,
    pub im_lambda: f64,
    /// rank by real part within the slice, 0 = rightmost
    pub branch_id: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhithamRow {
    pub t: f64,
    pub norm_full: f64,
    pub norm_minus_p0: f64,
    pub norm_phase: f64,
    pub norm_residual: f64,
    pub whitham_error: f64,
    pub leak: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub sha256: String,
    pub bytes: u64,
    pub stage: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageStatus {
    Done,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub status: StageStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// name -> sha256 of everything the stage read, including its config slice
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub config_sha256: String,
    pub files: BTreeMap<String, FileRecord>,
    pub stages: BTreeMap<String, StageRecord>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl Manifest {
    pub fn load(dir: &Path) -> Result<Option<Manifest>> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Some(serde_json::from_str(&text)?))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join(MANIFEST_FILE), &to_json_bytes(self)?)
    }

    /// On-disk hash of a recorded file, refusing when it differs from the record.
    pub fn verified_hash(&self, dir: &Path, name: &str) -> Result<String> {
        let rec = self
            .files
            .get(name)
            .ok_or_else(|| Error::Format(format!("{name} is not in the manifest")))?;
        let found = file_hash(&dir.join(name))?;
        if found != rec.sha256 {
            return Err(Error::HashMismatch {
                file: name.to_string(),
                expected: rec.sha256.clone(),
                found,
            });
        }
        Ok(found)
    }
}
