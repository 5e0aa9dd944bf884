//! JSON checkpoints.
//!
//! Layout (version 1):
//!
//! ```text
//! { "format": "lpegn-checkpoint", "version": 1,
//!   "config": ModelConfig, "bucketing": SizeBucketing | null,
//!   "weights": [ { "layer", "bucket", "k_in", "k_out", "partition",
//!                  "values": [c_in x c_out, row-major] } ... ],
//!   "biases":  [ { "layer", "bucket", "order", "element",
//!                  "values": [c_out] } ... ],
//!   "head": [ { "inputs", "outputs", "weight", "bias" } ... ] }
//! ```
//!
//! Partition indices follow the restricted-growth-string enumeration order.
//! For order-2 biases element 0 is the diagonal term and element 1 the
//! all-cells term.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bucketing::SizeBucketing;
use super::config::ModelConfig;
use super::model::Model;
use super::weights::{bias_elements, DenseLayer, EquivariantLayerWeights};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "lpegn-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightEntry {
    layer: usize,
    bucket: usize,
    k_in: usize,
    k_out: usize,
    partition: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BiasEntry {
    layer: usize,
    bucket: usize,
    order: usize,
    element: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Checkpoint {
    format: String,
    version: u32,
    config: ModelConfig,
    bucketing: Option<SizeBucketing>,
    weights: Vec<WeightEntry>,
    biases: Vec<BiasEntry>,
    head: Vec<DenseLayer>,
}

impl Model {
    pub fn to_checkpoint_json(&self) -> Result<String> {
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for (layer, (layout, lw)) in self.layouts().iter().zip(&self.layers).enumerate() {
            for (bucket, w) in lw.buckets.iter().enumerate() {
                for b in &layout.blocks {
                    let cw = b.c_in * b.c_out;
                    for partition in 0..b.basis_len() {
                        let at = b.offset + partition * cw;
                        weights.push(WeightEntry {
                            layer,
                            bucket,
                            k_in: b.k_in,
                            k_out: b.k_out,
                            partition,
                            values: w[at..at + cw].to_vec(),
                        });
                    }
                }
                for b in &layout.biases {
                    for element in 0..bias_elements(b.k_out) {
                        let at = b.offset + element * b.c_out;
                        biases.push(BiasEntry {
                            layer,
                            bucket,
                            order: b.k_out,
                            element,
                            values: w[at..at + b.c_out].to_vec(),
                        });
                    }
                }
            }
        }
        let ck = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            bucketing: self.bucketing.clone(),
            weights,
            biases,
            head: self.head.clone(),
        };
        Ok(serde_json::to_string(&ck)?)
    }

    pub fn from_checkpoint_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(Error::input(format!(
                "unsupported checkpoint {} v{}",
                ck.format, ck.version
            )));
        }
        // a fresh model fixes the layout; every slot must then be overwritten
        let mut model = Model::new(ck.config, ck.bucketing)?;
        let layouts = model.layouts();
        let mut filled: Vec<Vec<Vec<bool>>> = model
            .layers
            .iter()
            .map(|l| l.buckets.iter().map(|b| vec![false; b.len()]).collect())
            .collect();
        let mut put = |model: &mut Model, layer: usize, bucket: usize, at: usize, values: &[f64]| -> Result<()> {
            let slot = model
                .layers
                .get_mut(layer)
                .and_then(|l: &mut EquivariantLayerWeights| l.buckets.get_mut(bucket))
                .ok_or_else(|| Error::input(format!("no layer {layer} bucket {bucket}")))?;
            slot[at..at + values.len()].copy_from_slice(values);
            filled[layer][bucket][at..at + values.len()].iter_mut().for_each(|f| *f = true);
            Ok(())
        };
        let blocks: HashMap<(usize, usize, usize), (usize, usize, usize)> = layouts
            .iter()
            .enumerate()
            .flat_map(|(l, lay)| {
                lay.blocks
                    .iter()
                    .map(move |b| ((l, b.k_in, b.k_out), (b.offset, b.c_in * b.c_out, b.basis_len())))
            })
            .collect();
        for e in &ck.weights {
            let &(offset, cw, count) = blocks
                .get(&(e.layer, e.k_in, e.k_out))
                .ok_or_else(|| Error::input(format!("layer {} has no {}->{} block", e.layer, e.k_in, e.k_out)))?;
            if e.partition >= count || e.values.len() != cw {
                return Err(Error::shape(format!(
                    "weight entry layer {} {}->{} partition {} does not fit",
                    e.layer, e.k_in, e.k_out, e.partition
                )));
            }
            put(&mut model, e.layer, e.bucket, offset + e.partition * cw, &e.values)?;
        }
        for e in &ck.biases {
            let b = layouts
                .get(e.layer)
                .and_then(|l| l.bias(e.order))
                .ok_or_else(|| Error::input(format!("layer {} has no order-{} bias", e.layer, e.order)))?;
            if e.element >= bias_elements(e.order) || e.values.len() != b.c_out {
                return Err(Error::shape(format!("bias entry layer {} order {} does not fit", e.layer, e.order)));
            }
            put(&mut model, e.layer, e.bucket, b.offset + e.element * b.c_out, &e.values)?;
        }
        if filled.iter().flatten().flatten().any(|f| !f) {
            return Err(Error::input("checkpoint leaves some weights unset"));
        }
        model.head = ck.head;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_checkpoint_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Load {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::from_checkpoint_json(&text)
    }
}
