use serde::{Deserialize, Serialize};

use crate::data::TUDataset;
use crate::error::{Error, Result};
use crate::graph::SubgraphMode;
use crate::layers::ModelConfig;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    /// Local layers on k-hop subgraphs.
    #[default]
    Lpegn,
    /// Every layer acts on the whole graph.
    Global,
}

/// Everything that determines a benchmark run besides the data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub architecture: Architecture,
    pub k: usize,
    pub orders: Vec<usize>,
    pub channels: usize,
    /// Equivariant layers including the invariant readout layer.
    pub layers: usize,
    pub bucket_threshold: usize,
    pub share_bucket_weights: bool,
    pub subgraph_mode: SubgraphMode,
    /// Degree one-hot cap for datasets without node labels.
    pub degree_cap: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub folds: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            architecture: Architecture::Lpegn,
            k: 1,
            orders: vec![1, 2],
            channels: 32,
            layers: 3,
            bucket_threshold: 10,
            share_bucket_weights: false,
            subgraph_mode: SubgraphMode::Induced,
            degree_cap: 10,
            lr: 1e-3,
            epochs: 200,
            batch_size: 32,
            seed: 0,
            folds: 10,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::input("need at least the readout layer"));
        }
        if self.batch_size == 0 {
            return Err(Error::input("batch size must be positive"));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::input(format!("learning rate {} is not positive", self.lr)));
        }
        if self.folds < 2 {
            return Err(Error::input("need at least 2 folds"));
        }
        Ok(())
    }

    /// Model for `ds` with weight init seeded by `seed`.
    pub fn model_config(&self, ds: &TUDataset, seed: u64) -> Result<ModelConfig> {
        let enc = ds.encoding(self.degree_cap);
        let hidden = self.layers - 1;
        let mut cfg = match self.architecture {
            Architecture::Lpegn => ModelConfig::lpegn(enc, ds.num_classes, &self.orders, self.channels, hidden, self.k)?,
            Architecture::Global => ModelConfig::global(enc, ds.num_classes, &self.orders, self.channels, hidden)?,
        };
        cfg.bucket_threshold = self.bucket_threshold;
        cfg.share_bucket_weights |= self.share_bucket_weights;
        cfg.subgraph_mode = self.subgraph_mode;
        cfg.seed = seed;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Short digest of the serialized config, written into every CSV.
    pub fn hash(&self) -> String {
        crate::report::config_hash(self)
    }
}
