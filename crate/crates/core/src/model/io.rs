//! Text serialization of fitted models.
//!
//! A model file is TOML with a top-level `format_version`, the SKU it was
//! fitted for, and a `[model]` table holding every parameter on the scaled
//! axis together with the structure needed to predict (changepoint grid,
//! seasonalities, holiday calendar, regressor names). Floats are written in
//! shortest round-trip form, so save → load is lossless.

use serde::{Deserialize, Serialize};

use super::FittedModel;
use crate::domain::SkuId;
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub sku: SkuId,
    pub model: FittedModel,
}

pub fn to_string(sku: &SkuId, model: &FittedModel) -> Result<String> {
    let file = ModelFile { format_version: MODEL_FORMAT_VERSION, sku: sku.clone(), model: model.clone() };
    toml::to_string(&file).map_err(|e| Error::Format(format!("cannot serialize model: {e}")))
}

pub fn from_str(text: &str) -> Result<ModelFile> {
    #[derive(Deserialize)]
    struct Header {
        format_version: u32,
    }
    let header: Header = toml::from_str(text).map_err(|e| Error::Format(format!("model file: {e}")))?;
    if header.format_version == 0 || header.format_version > MODEL_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "model file format_version {} is not supported (this build reads up to {MODEL_FORMAT_VERSION})",
            header.format_version
        )));
    }
    toml::from_str(text).map_err(|e| Error::Format(format!("model file: {e}")))
}
