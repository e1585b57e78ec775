//! Versioned JSON model files.

use std::path::Path;

use rulecast::data::Schema;
use rulecast::pipeline::PipelineModel;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::io::write_atomic;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    /// SHA-256 of the schema's canonical manifest text.
    pub schema_fingerprint: String,
    pub schema: Schema,
    /// Per feature, the category code used for missing cells at prediction
    /// time (the training mode); `None` for numeric features.
    pub fill: Vec<Option<f64>>,
    pub model: PipelineModel,
}

pub fn fingerprint(schema: &Schema) -> String {
    let digest = Sha256::digest(schema.to_manifest().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl ModelFile {
    pub fn new(schema: Schema, fill: Vec<Option<f64>>, model: PipelineModel) -> Self {
        ModelFile {
            format_version: FORMAT_VERSION,
            schema_fingerprint: fingerprint(&schema),
            schema,
            fill,
            model,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| CliError::Data(format!("model file is not JSON: {e}")))?;
        match value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
        {
            Some(v) if v == FORMAT_VERSION as u64 => {}
            Some(v) => {
                return Err(CliError::Data(format!(
                    "model file format version {v} is not supported (expected {FORMAT_VERSION})"
                )))
            }
            None => return Err(CliError::Data("model file has no format_version".into())),
        }
        let file: ModelFile = serde_json::from_value(value)
            .map_err(|e| CliError::Data(format!("malformed model file: {e}")))?;
        if file.schema_fingerprint != fingerprint(&file.schema) {
            return Err(CliError::Data(
                "schema fingerprint does not match the embedded schema".into(),
            ));
        }
        if file.fill.len() != file.model.features.len() {
            return Err(CliError::Data(
                "model file fill list does not match its features".into(),
            ));
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
