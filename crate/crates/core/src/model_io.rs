//! Versioned JSON persistence for [`EvidentialModel`].
//!
//! The document carries a format tag, a version, a SHA-256 checksum of the
//! canonical (key-sorted, compact) serialization of the `model` object, and
//! the model itself. Floats are written in shortest round-trip form and
//! parsed with correct rounding, so a reload reproduces every decision value
//! bit for bit.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::belief::Frame;
use crate::multiclass::{expected_scopes, BinaryClassifier, EvidentialModel, LambdaMode, Strategy};
use crate::svm::Kernel;

pub const FORMAT_TAG: &str = "evsvm-model";
pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("model file is truncated (line {line}, column {column})")]
    Truncated { line: usize, column: usize },
    #[error("model file is not valid JSON: {0}")]
    Syntax(serde_json::Error),
    #[error("not a model file (format tag `{0}`)")]
    Format(String),
    #[error("unsupported model format version {found} (expected {FORMAT_VERSION})")]
    Version { found: u64 },
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("checksum mismatch: file says {stored}, content hashes to {computed}")]
    Checksum { stored: String, computed: String },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Payload {
    frame: Vec<String>,
    strategy: Strategy,
    kernel: Kernel,
    c: f64,
    lambda_mode: LambdaMode,
    classifiers: Vec<BinaryClassifier>,
}

#[derive(Serialize)]
struct Document<'a> {
    format: &'a str,
    format_version: u64,
    checksum: String,
    model: &'a Value,
}

fn field(field: impl Into<String>, message: impl Into<String>) -> ModelIoError {
    ModelIoError::Field {
        field: field.into(),
        message: message.into(),
    }
}

fn checksum(model: &Value) -> String {
    // serde_json's default map is ordered by key, which makes this canonical.
    let canonical = serde_json::to_string(model).expect("JSON values always serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

pub fn model_to_string(model: &EvidentialModel) -> String {
    let payload = Payload {
        frame: model.frame.labels().to_vec(),
        strategy: model.strategy,
        kernel: model.kernel,
        c: model.c,
        lambda_mode: model.lambda_mode,
        classifiers: model.classifiers.clone(),
    };
    let value = serde_json::to_value(&payload).expect("model payload serializes");
    let doc = Document {
        format: FORMAT_TAG,
        format_version: FORMAT_VERSION,
        checksum: checksum(&value),
        model: &value,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("document serializes");
    s.push('\n');
    s
}

pub fn model_from_str(text: &str) -> Result<EvidentialModel, ModelIoError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| {
        if e.is_eof() {
            ModelIoError::Truncated {
                line: e.line(),
                column: e.column(),
            }
        } else {
            ModelIoError::Syntax(e)
        }
    })?;
    let obj = doc
        .as_object()
        .ok_or_else(|| field("<root>", "expected a JSON object"))?;
    match obj.get("format").and_then(Value::as_str) {
        Some(FORMAT_TAG) => {}
        Some(other) => return Err(ModelIoError::Format(other.to_string())),
        None => return Err(field("format", "missing")),
    }
    let version = obj
        .get("format_version")
        .ok_or_else(|| field("format_version", "missing"))?
        .as_u64()
        .ok_or_else(|| field("format_version", "expected an unsigned integer"))?;
    if version != FORMAT_VERSION {
        return Err(ModelIoError::Version { found: version });
    }
    let stored = obj
        .get("checksum")
        .and_then(Value::as_str)
        .ok_or_else(|| field("checksum", "missing or not a string"))?
        .to_string();
    let value = obj.get("model").ok_or_else(|| field("model", "missing"))?;

    let payload: Payload = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        field(format!("model.{path}"), e.inner().to_string())
    })?;
    let model = build_model(payload)?;

    let computed = checksum(value);
    if computed != stored {
        return Err(ModelIoError::Checksum { stored, computed });
    }
    Ok(model)
}

fn build_model(p: Payload) -> Result<EvidentialModel, ModelIoError> {
    let frame = Frame::new(p.frame).map_err(|e| field("model.frame", e.to_string()))?;
    p.kernel
        .validate()
        .map_err(|e| field("model.kernel", e.to_string()))?;
    if !(p.c > 0.0 && p.c.is_finite()) {
        return Err(field("model.c", format!("must be > 0, got {}", p.c)));
    }
    let scopes = expected_scopes(p.strategy, frame.len());
    if p.classifiers.len() != scopes.len() {
        return Err(field(
            "model.classifiers",
            format!(
                "{} model over {} classes needs {} classifiers, found {}",
                p.strategy,
                frame.len(),
                scopes.len(),
                p.classifiers.len()
            ),
        ));
    }
    let mut dim = None;
    for (k, (c, want)) in p.classifiers.iter().zip(&scopes).enumerate() {
        let at = |f: &str| format!("model.classifiers[{k}].{f}");
        if c.scope != *want {
            return Err(field(
                at("scope"),
                format!("expected {want:?}, found {:?}", c.scope),
            ));
        }
        if c.svm.kernel != p.kernel {
            return Err(field(at("svm.kernel"), "differs from the model kernel"));
        }
        if c.svm.support_vectors.is_empty() {
            return Err(field(at("svm.support_vectors"), "empty"));
        }
        if c.svm.support_vectors.len() != c.svm.dual_coefs.len() {
            return Err(field(
                at("svm.dual_coefs"),
                "length differs from support_vectors",
            ));
        }
        let d = *dim.get_or_insert(c.svm.dim());
        if c.svm.support_vectors.iter().any(|sv| sv.len() != d) {
            return Err(field(
                at("svm.support_vectors"),
                format!("rows must have {d} values"),
            ));
        }
        let cal = &c.calibration;
        if cal.lambda_p.is_nan() || cal.lambda_p <= 0.0 {
            return Err(field(at("calibration.lambda_p"), "must be > 0"));
        }
        if cal.lambda_n.is_nan() || cal.lambda_n >= 0.0 {
            return Err(field(at("calibration.lambda_n"), "must be < 0"));
        }
        if !(cal.alpha > 0.0 && cal.alpha <= 1.0) {
            return Err(field(at("calibration.alpha"), "must be in (0, 1]"));
        }
    }
    Ok(EvidentialModel {
        frame: Arc::new(frame),
        strategy: p.strategy,
        kernel: p.kernel,
        c: p.c,
        lambda_mode: p.lambda_mode,
        classifiers: p.classifiers,
    })
}

pub fn save_model(model: &EvidentialModel, path: impl AsRef<Path>) -> Result<(), ModelIoError> {
    let path = path.as_ref();
    fs::write(path, model_to_string(model)).map_err(|source| ModelIoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<EvidentialModel, ModelIoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ModelIoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    model_from_str(&text)
}
