use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::NUM_FEATURES;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feature {
    pub id: usize,
    pub name: String,
    pub unit: String,
}

/// Names and units of the 30 channels, indexed by `feature_id`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    features: Vec<Feature>,
}

const DEFAULT_CHANNELS: [(&str, &str); NUM_FEATURES] = [
    ("heart_rate", "bpm"),
    ("systolic_bp", "mmHg"),
    ("diastolic_bp", "mmHg"),
    ("mean_bp", "mmHg"),
    ("respiratory_rate", "breaths/min"),
    ("temperature", "degC"),
    ("spo2", "%"),
    ("fio2", "fraction"),
    ("gcs_total", "points"),
    ("glucose", "mg/dL"),
    ("potassium", "mEq/L"),
    ("sodium", "mEq/L"),
    ("chloride", "mEq/L"),
    ("bicarbonate", "mEq/L"),
    ("bun", "mg/dL"),
    ("creatinine", "mg/dL"),
    ("hemoglobin", "g/dL"),
    ("hematocrit", "%"),
    ("wbc", "K/uL"),
    ("platelets", "K/uL"),
    ("lactate", "mmol/L"),
    ("ph", "pH"),
    ("pao2", "mmHg"),
    ("paco2", "mmHg"),
    ("magnesium", "mg/dL"),
    ("calcium", "mg/dL"),
    ("phosphate", "mg/dL"),
    ("bilirubin", "mg/dL"),
    ("urine_output", "mL/h"),
    ("pain_score", "points"),
];

impl Default for FeatureSchema {
    fn default() -> Self {
        Self {
            features: DEFAULT_CHANNELS
                .iter()
                .enumerate()
                .map(|(id, (name, unit))| Feature {
                    id,
                    name: (*name).to_string(),
                    unit: (*unit).to_string(),
                })
                .collect(),
        }
    }
}

impl FeatureSchema {
    /// Requires exactly one entry per id in `0..30`, in order, with unique
    /// nonempty names.
    pub fn new(features: Vec<Feature>) -> Result<Self> {
        if features.len() != NUM_FEATURES {
            return Err(Error::Config(format!(
                "feature schema must list {NUM_FEATURES} features, found {}",
                features.len()
            )));
        }
        for (i, f) in features.iter().enumerate() {
            if f.id != i {
                return Err(Error::Config(format!(
                    "feature schema entry {i} has id {}",
                    f.id
                )));
            }
            if f.name.is_empty() || f.name.contains(',') {
                return Err(Error::Config(format!(
                    "feature {i} has an invalid name {:?}",
                    f.name
                )));
            }
            if features[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::Config(format!(
                    "duplicate feature name {:?}",
                    f.name
                )));
            }
        }
        Ok(Self { features })
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn name(&self, id: usize) -> &str {
        &self.features[id].name
    }

    /// `feature_id,name,unit` lines, one per feature, no header.
    pub fn to_text(&self) -> String {
        self.features
            .iter()
            .map(|f| format!("{},{},{}\n", f.id, f.name, f.unit))
            .collect()
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    /// Parses the line format of [`FeatureSchema::to_text`]. A leading
    /// `feature_id,name,unit` header and `#` comment lines are skipped.
    pub fn read(reader: impl Read, path: &Path) -> Result<Self> {
        let mut features = Vec::new();
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let lineno = i as u64 + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.trim();
            if line.is_empty()
                || line.starts_with('#')
                || (features.is_empty() && line.starts_with("feature_id,"))
            {
                continue;
            }
            let parse_err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                msg,
            };
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(parse_err(format!(
                    "expected 3 fields, found {}",
                    parts.len()
                )));
            }
            let id = parts[0]
                .trim()
                .parse::<usize>()
                .map_err(|e| parse_err(format!("feature_id {:?}: {e}", parts[0])))?;
            features.push(Feature {
                id,
                name: parts[1].trim().to_string(),
                unit: parts[2].trim().to_string(),
            });
        }
        Self::new(features)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(file, path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(self.to_text().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}
