//! `model.json` layout:
//!
//! ```json
//! {"format_version": 1, "checksum": "<sha256 hex>", "payload": {...}}
//! ```
//!
//! The checksum covers the payload serialized with sorted keys and no
//! whitespace. Loading checks the version first, then the checksum, then the
//! payload schema.

use std::fs;
use std::path::Path;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::MrotModel;

pub const FORMAT_VERSION: u64 = 1;

fn digest(payload: &Value) -> Result<String> {
    let canonical =
        serde_json::to_string(payload).map_err(|e| Error::ModelFormat(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

pub fn model_to_document(model: &MrotModel) -> Result<Value> {
    let payload = serde_json::to_value(model).map_err(|e| Error::ModelFormat(e.to_string()))?;
    Ok(json!({
        "format_version": FORMAT_VERSION,
        "checksum": digest(&payload)?,
        "payload": payload,
    }))
}

pub fn model_from_document(doc: &Value) -> Result<MrotModel> {
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::ModelFormat("top level is not an object".into()))?;
    let version = obj
        .get("format_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::ModelFormat("missing integer `format_version`".into()))?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let checksum = obj
        .get("checksum")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::ModelFormat("missing `checksum`".into()))?;
    let payload = obj
        .get("payload")
        .ok_or_else(|| Error::ModelFormat("missing `payload`".into()))?;
    if digest(payload)? != checksum {
        return Err(Error::ModelFormat("checksum mismatch; the file is corrupt".into()));
    }
    let model: MrotModel = serde_json::from_value(payload.clone())
        .map_err(|e| Error::ModelFormat(format!("schema violation: {e}")))?;
    if model.regressor.n_features() != model.n_features {
        return Err(Error::ModelFormat("regressor and schema disagree on the feature count".into()));
    }
    Ok(model)
}

pub fn save_model(model: &MrotModel, path: &Path) -> Result<()> {
    let doc = model_to_document(model)?;
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::ModelFormat(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<MrotModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| Error::ModelFormat(format!("{}: {e}", path.display())))?;
    model_from_document(&doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::synth_toy;
    use crate::model::FitConfig;

    fn model() -> MrotModel {
        let d = synth_toy(40, 4, 1).unwrap();
        MrotModel::fit(&d.dataset, &FitConfig::new(5, 0.5)).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = model();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        save_model(&m, &p).unwrap();
        let back = load_model(&p).unwrap();
        assert_eq!(back, m);
        let q = ndarray::array![[0.1, -0.2], [-3.0, -3.0], [5.0, 1e-7]];
        let a = m.predict(q.view()).unwrap();
        let b = back.predict(q.view()).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn tampering_and_versions_are_rejected() {
        let m = model();
        let mut doc = model_to_document(&m).unwrap();
        doc["payload"]["kde"]["bandwidth"] = json!(0.123);
        assert!(matches!(model_from_document(&doc), Err(Error::ModelFormat(_))));

        let mut doc = model_to_document(&m).unwrap();
        doc["format_version"] = json!(0);
        assert!(matches!(
            model_from_document(&doc),
            Err(Error::UnsupportedVersion { found: 0, supported: 1 })
        ));

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        save_model(&m, &p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        fs::write(&p, &text[..text.len() / 2]).unwrap();
        assert!(load_model(&p).is_err());
    }
}
