//! The shared configuration document, one block per module.

use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::augment::AugmentConfig;
use crate::dsp::DspConfig;
use crate::extract::AnnotationConfig;
use crate::gmm::GmmConfig;
use crate::lip::LipIndexMap;
use crate::nn::VganConfig;
use crate::papi::PapiConfig;
use crate::synth::SynthConfig;
use crate::train::TrainConfig;
use crate::Result;

/// Default locations, relative to the working directory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub manifest: Option<String>,
    pub features: Option<String>,
    pub groups: Option<String>,
    pub model: Option<String>,
    pub detector: Option<String>,
    pub out: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlobalConfig {
    pub dsp: DspConfig,
    pub papi: PapiConfig,
    pub lip: LipIndexMap,
    pub annotation: AnnotationConfig,
    pub augment: AugmentConfig,
    pub gmm: GmmConfig,
    pub vgan: VganConfig,
    pub train: TrainConfig,
    pub synth: SynthConfig,
    pub paths: PathsConfig,
}

impl GlobalConfig {
    pub fn validate(&self) -> Result<()> {
        self.dsp.validate()?;
        self.papi.validate()?;
        self.lip.validate()?;
        self.annotation.validate()?;
        self.augment.validate()?;
        self.gmm.validate()?;
        self.vgan.validate()?;
        self.train.validate()?;
        self.synth.validate()
    }
}
