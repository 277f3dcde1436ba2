use std::fs;

use mrot::eval::{synth_toy, SeededRng};
use mrot::io::{load_model, model_from_document, model_to_document, save_model};
use mrot::{CapRule, Error, FitConfig, MrotModel, RegressorKind};
use ndarray::Array2;

fn fitted(kind: RegressorKind) -> MrotModel {
    let d = synth_toy(50, 5, 9).unwrap();
    let cfg = FitConfig::new(4, 0.2).with_regressor(kind).with_cap(CapRule::GlobalMax);
    MrotModel::fit(&d.dataset, &cfg).unwrap().with_column_names(vec!["x0".into(), "x1".into()])
}

#[test]
fn every_regressor_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = SeededRng::new(1);
    let q = Array2::from_shape_fn((50, 2), |_| 4.0 * rng.standard_normal());
    for kind in [RegressorKind::knn(), RegressorKind::kernel_ridge(), RegressorKind::gbt()] {
        let m = fitted(kind);
        let path = dir.path().join(format!("{kind}.json"));
        save_model(&m, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, m);
        let (a, b) = (m.predict(q.view()).unwrap(), back.predict(q.view()).unwrap());
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()), "{kind}");
    }
}

#[test]
fn any_flipped_byte_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let m = fitted(RegressorKind::gbt());
    save_model(&m, &path).unwrap();
    let clean = fs::read(&path).unwrap();
    let mut rng = SeededRng::new(2);
    for _ in 0..200 {
        let mut bytes = clean.clone();
        let at = rng.below(bytes.len());
        let old = bytes[at];
        // digits stay digits so that the JSON usually still parses
        bytes[at] = if old.is_ascii_digit() { b'0' + (old - b'0' + 1) % 10 } else { old ^ 0x20 };
        fs::write(&path, &bytes).unwrap();
        match load_model(&path) {
            Err(_) => {}
            // only whitespace or key-order-neutral edits may survive, and
            // those must reproduce the identical model
            Ok(back) => assert_eq!(back, m, "byte {at} changed {old} -> {}", bytes[at]),
        }
    }
}

#[test]
fn version_errors_are_explicit() {
    let m = fitted(RegressorKind::knn());
    let mut doc = model_to_document(&m).unwrap();
    doc["format_version"] = 2.into();
    assert!(matches!(model_from_document(&doc), Err(Error::UnsupportedVersion { found: 2, .. })));
    doc.as_object_mut().unwrap().remove("format_version");
    assert!(matches!(model_from_document(&doc), Err(Error::ModelFormat(_))));
}

#[test]
fn schema_violations_with_valid_checksum_are_rejected() {
    let m = fitted(RegressorKind::knn());
    let mut doc = model_to_document(&m).unwrap();
    doc["payload"]["n_features"] = 3.into();
    let payload = doc["payload"].clone();
    let text = serde_json::to_string(&payload).unwrap();
    use sha2::Digest;
    doc["checksum"] = hex::encode(sha2::Sha256::digest(text.as_bytes())).into();
    assert!(matches!(model_from_document(&doc), Err(Error::ModelFormat(_))));
}
