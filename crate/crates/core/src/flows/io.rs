//! On-disk formats: model checkpoints (JSON) and datasets (CSV).

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::FlowModel;
use super::spec::FlowSpec;
use super::FlowError;
use crate::numcore::{Matrix, Rng};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: u32,
    pub spec: FlowSpec,
    pub hidden: Vec<usize>,
    pub params: Vec<f64>,
}

impl FlowModel {
    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format_version: CHECKPOINT_FORMAT_VERSION,
            spec: self.spec().clone(),
            hidden: self.hidden().to_vec(),
            params: self.params(),
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, FlowError> {
        if ck.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(FlowError::Checkpoint(format!(
                "unsupported format version {}",
                ck.format_version
            )));
        }
        // Initialization randomness is irrelevant: every parameter is overwritten.
        let mut model = FlowModel::new(ck.spec.clone(), &ck.hidden, &mut Rng::new(0))?;
        model.set_params(&ck.params)?;
        Ok(model)
    }

    pub fn to_checkpoint_json(&self) -> String {
        serde_json::to_string(&self.to_checkpoint()).expect("checkpoint serializes")
    }

    pub fn from_checkpoint_json(text: &str) -> Result<Self, FlowError> {
        let ck: Checkpoint =
            serde_json::from_str(text).map_err(|e| FlowError::Checkpoint(e.to_string()))?;
        Self::from_checkpoint(&ck)
    }
}

fn io_err(path: &Path, e: std::io::Error) -> FlowError {
    FlowError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Reads a numeric CSV with an optional header row.
pub fn read_dataset<R: Read>(reader: R) -> Result<Matrix, FlowError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| FlowError::Csv(e.to_string()))?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => {
                if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
                    return Err(FlowError::Csv(format!("row {}: non-finite value {bad}", i + 1)));
                }
                rows.push(row);
            }
            Err(_) if i == 0 => continue,
            Err(e) => return Err(FlowError::Csv(format!("row {}: {e}", i + 1))),
        }
    }
    if rows.is_empty() {
        return Err(FlowError::Csv("dataset has no rows".into()));
    }
    Matrix::from_rows(&rows).map_err(|e| FlowError::Csv(e.to_string()))
}

pub fn read_dataset_path(path: &Path) -> Result<Matrix, FlowError> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    read_dataset(f)
}

pub fn write_dataset<W: Write>(writer: W, data: &Matrix) -> Result<(), FlowError> {
    let mut w = csv::Writer::from_writer(writer);
    for r in 0..data.rows() {
        w.write_record(data.row(r).iter().map(|v| v.to_string()))
            .map_err(|e| FlowError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| FlowError::Csv(e.to_string()))
}

pub fn read_spec_path(path: &Path) -> Result<FlowSpec, FlowError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    FlowSpec::from_json(&text)
}
