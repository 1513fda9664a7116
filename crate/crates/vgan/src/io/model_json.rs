//! Versioned JSON documents for trained networks and vowel detectors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use vgan_core::gmm::VowelDetector;
use vgan_core::linalg::Matrix;
use vgan_core::model::TargetKind;
use vgan_core::nn::{NamedArray, Standardization, VganConfig, VganModel};

use crate::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const DETECTOR_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArrayDoc {
    shape: [usize; 2],
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    version: u32,
    target: TargetKind,
    dims: VganConfig,
    standardization: Standardization,
    params: BTreeMap<String, ArrayDoc>,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: serde_json::Value,
}

fn check_version(text: &str, supported: u32, what: &str) -> Result<()> {
    let probe: VersionProbe =
        serde_json::from_str(text).map_err(|e| Error::Load(format!("{what} document: {e}")))?;
    match probe.version.as_u64() {
        Some(v) if v == supported as u64 => Ok(()),
        _ => Err(Error::Load(format!(
            "unsupported {what} format version {}; supported versions: [{supported}]",
            probe.version
        ))),
    }
}

pub fn serialize_model(model: &VganModel) -> String {
    let params = model
        .params
        .iter()
        .map(|p| {
            let (r, c) = p.value.shape();
            (
                p.name.clone(),
                ArrayDoc {
                    shape: [r, c],
                    data: p.value.as_slice().to_vec(),
                },
            )
        })
        .collect();
    let doc = ModelDoc {
        version: MODEL_FORMAT_VERSION,
        target: model.target,
        dims: model.config.clone(),
        standardization: model.standardization.clone(),
        params,
    };
    serde_json::to_string_pretty(&doc).expect("model document serializes")
}

/// Parses a model document and checks every array against the shapes the
/// declared dimensions imply.
pub fn deserialize_model(text: &str) -> Result<VganModel> {
    check_version(text, MODEL_FORMAT_VERSION, "model")?;
    let mut doc: ModelDoc = serde_json::from_str(text).map_err(|e| Error::Load(format!("model document: {e}")))?;
    doc.dims.validate()?;
    let layout = doc.dims.param_layout();
    let mut params = Vec::with_capacity(layout.len());
    for (name, (r, c), _) in &layout {
        let a = doc
            .params
            .remove(name)
            .ok_or_else(|| Error::Load(format!("missing parameter array '{name}'")))?;
        if a.shape != [*r, *c] {
            return Err(Error::Load(format!(
                "parameter array '{name}' has shape {:?}, dims imply [{r}, {c}]",
                a.shape
            )));
        }
        let value = Matrix::from_vec(*r, *c, a.data)
            .map_err(|_| Error::Load(format!("parameter array '{name}': data length does not match shape [{r}, {c}]")))?;
        params.push(NamedArray { name: name.clone(), value });
    }
    if let Some(extra) = doc.params.keys().next() {
        return Err(Error::Load(format!("unexpected parameter array '{extra}'")));
    }
    let model = VganModel {
        scale_max: doc.target.scale_max(),
        config: doc.dims,
        target: doc.target,
        params,
        standardization: doc.standardization,
    };
    model.validate()?;
    Ok(model)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectorDoc {
    version: u32,
    detector: VowelDetector,
}

pub fn serialize_detector(d: &VowelDetector) -> String {
    serde_json::to_string(&DetectorDoc {
        version: DETECTOR_FORMAT_VERSION,
        detector: d.clone(),
    })
    .expect("detector document serializes")
}

pub fn deserialize_detector(text: &str) -> Result<VowelDetector> {
    check_version(text, DETECTOR_FORMAT_VERSION, "detector")?;
    let doc: DetectorDoc = serde_json::from_str(text).map_err(|e| Error::Load(format!("detector document: {e}")))?;
    doc.detector.validate()?;
    Ok(doc.detector)
}
