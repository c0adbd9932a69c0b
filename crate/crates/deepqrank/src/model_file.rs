//! Versioned JSON model persistence.
//!
//! The file records the layer dims, row-major weights, biases, the feature
//! scaler (or null), and the training configuration, with every float
//! written at 17 significant digits so reloads are bit-exact.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::letor::{FeatureScaler, FEATURE_DIM};
use crate::neural::{LayerParams, QNetwork, LAYER_DIMS};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Hyperparameters recorded next to the weights for provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub tau: f64,
    pub position_offset: u32,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    dims: Vec<usize>,
    layers: Vec<LayerFile>,
    scaler: Option<ScalerFile>,
    config: ModelConfig,
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ScalerFile {
    mins: Vec<f64>,
    maxs: Vec<f64>,
}

/// What [`load_model`] recovers from disk.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub network: QNetwork,
    pub scaler: Option<FeatureScaler>,
    pub config: ModelConfig,
}

pub fn save_model(
    net: &QNetwork,
    scaler: Option<&FeatureScaler>,
    config: &ModelConfig,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let file = ModelFile {
        version: MODEL_FORMAT_VERSION,
        dims: LAYER_DIMS.to_vec(),
        layers: net
            .layers()
            .iter()
            .map(|layer| LayerFile {
                weights: (0..layer.out_dim())
                    .map(|r| (0..layer.in_dim()).map(|c| layer.weight(r, c)).collect())
                    .collect(),
                biases: layer.biases().to_vec(),
            })
            .collect(),
        scaler: scaler.map(|s| ScalerFile {
            mins: s.mins().to_vec(),
            maxs: s.maxs().to_vec(),
        }),
        config: config.clone(),
    };
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigitFormatter);
    file.serialize(&mut ser)
        .map_err(|e| Error::SchemaMismatch(e.to_string()))?;
    buf.push(b'\n');
    fs::write(path, buf).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LoadedModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| Error::SchemaMismatch(format!("{}: {e}", path.display())))?;

    if file.version != MODEL_FORMAT_VERSION {
        return Err(Error::SchemaMismatch(format!(
            "unsupported model version {} (expected {MODEL_FORMAT_VERSION})",
            file.version
        )));
    }
    if file.dims != LAYER_DIMS {
        return Err(Error::SchemaMismatch(format!(
            "dims {:?} do not match {:?}",
            file.dims, LAYER_DIMS
        )));
    }
    if file.layers.len() != LAYER_DIMS.len() - 1 {
        return Err(Error::SchemaMismatch(format!(
            "expected {} layers, found {}",
            LAYER_DIMS.len() - 1,
            file.layers.len()
        )));
    }

    let mut layers = Vec::with_capacity(file.layers.len());
    for (i, layer) in file.layers.iter().enumerate() {
        let (in_dim, out_dim) = (LAYER_DIMS[i], LAYER_DIMS[i + 1]);
        if layer.weights.len() != out_dim
            || layer.weights.iter().any(|row| row.len() != in_dim)
            || layer.biases.len() != out_dim
        {
            return Err(Error::SchemaMismatch(format!(
                "layer {i} does not have shape {out_dim}x{in_dim}"
            )));
        }
        let mut params = zero_layer(in_dim, out_dim)?;
        for (r, row) in layer.weights.iter().enumerate() {
            for (c, &w) in row.iter().enumerate() {
                params.set_weight(r, c, w);
            }
        }
        for (r, &b) in layer.biases.iter().enumerate() {
            params.set_bias(r, b);
        }
        layers.push(params);
    }
    let network = QNetwork::from_layers(layers)?;

    let scaler = match file.scaler {
        None => None,
        Some(s) => {
            let mins: [f64; FEATURE_DIM] = s.mins.try_into().map_err(|_| {
                Error::SchemaMismatch(format!("scaler mins must have {FEATURE_DIM} entries"))
            })?;
            let maxs: [f64; FEATURE_DIM] = s.maxs.try_into().map_err(|_| {
                Error::SchemaMismatch(format!("scaler maxs must have {FEATURE_DIM} entries"))
            })?;
            Some(FeatureScaler::from_bounds(mins, maxs))
        }
    };

    Ok(LoadedModel {
        network,
        scaler,
        config: file.config,
    })
}

fn zero_layer(in_dim: usize, out_dim: usize) -> Result<LayerParams> {
    // QNetwork::zeros is the only public constructor for blank layers; carve
    // the right layer out of it.
    let blank = QNetwork::zeros();
    let idx = LAYER_DIMS
        .windows(2)
        .position(|p| p[0] == in_dim && p[1] == out_dim)
        .ok_or_else(|| Error::SchemaMismatch(format!("no layer of shape {out_dim}x{in_dim}")))?;
    Ok(blank.layers()[idx].clone())
}

/// Formats every float at 17 significant digits (`{:.16e}`), enough to
/// round-trip any f64 exactly.
struct SigDigitFormatter;

impl serde_json::ser::Formatter for SigDigitFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// `{:.16e}` for the CSV writers, kept next to the JSON formatter so every
/// emitted number shares one precision rule.
pub fn fmt_sig17(value: f64) -> String {
    format!("{value:.16e}")
}
