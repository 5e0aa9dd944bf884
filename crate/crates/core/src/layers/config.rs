use serde::{Deserialize, Serialize};

use super::repspec::RepSpec;
use crate::basis::bell;
use crate::error::{Error, Result};
use crate::graph::{FeatureEncoding, SubgraphMode};

/// Which nodes a layer's per-node update looks at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Neighbourhood {
    /// The k-hop ball around each node, reconstructed afterwards.
    Local { k: usize },
    /// One update over the whole graph.
    Global,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerConfig {
    pub neighbourhood: Neighbourhood,
    pub output: RepSpec,
}

/// Full architecture. The last entry of `layers` is the invariant readout
/// and must output order 0 only; earlier entries are hidden layers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub encoding: FeatureEncoding,
    pub layers: Vec<LayerConfig>,
    /// Hidden widths of the MLP head; the last affine layer maps to `classes`.
    pub head: Vec<usize>,
    pub classes: usize,
    pub bucket_threshold: usize,
    pub share_bucket_weights: bool,
    pub subgraph_mode: SubgraphMode,
    pub seed: u64,
}

/// Number of basis weights per channel pair for one `k_in -> k_out` block.
pub fn basis_count(k_in: usize, k_out: usize) -> usize {
    bell(k_in + k_out) as usize
}

impl ModelConfig {
    fn stack(
        encoding: FeatureEncoding,
        classes: usize,
        hidden: Vec<LayerConfig>,
        readout: LayerConfig,
        channels: usize,
    ) -> Self {
        let mut layers = hidden;
        layers.push(readout);
        ModelConfig {
            encoding,
            layers,
            head: vec![channels, channels],
            classes,
            bucket_threshold: 10,
            share_bucket_weights: false,
            subgraph_mode: SubgraphMode::Induced,
            seed: 0,
        }
    }

    /// Local model: `hidden` layers over `orders` on k-hop subgraphs, then a
    /// k-hop invariant readout.
    pub fn lpegn(
        encoding: FeatureEncoding,
        classes: usize,
        orders: &[usize],
        channels: usize,
        hidden: usize,
        k: usize,
    ) -> Result<Self> {
        let nb = Neighbourhood::Local { k };
        let out = RepSpec::uniform(orders, channels)?;
        let layers = (0..hidden)
            .map(|_| LayerConfig {
                neighbourhood: nb,
                output: out.clone(),
            })
            .collect();
        let readout = LayerConfig {
            neighbourhood: nb,
            output: RepSpec::uniform(&[0], channels)?,
        };
        let cfg = Self::stack(encoding, classes, layers, readout, channels);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Whole-graph equivariant network: every layer sees the entire graph.
    pub fn global(
        encoding: FeatureEncoding,
        classes: usize,
        orders: &[usize],
        channels: usize,
        hidden: usize,
    ) -> Result<Self> {
        let out = RepSpec::uniform(orders, channels)?;
        let layers = (0..hidden)
            .map(|_| LayerConfig {
                neighbourhood: Neighbourhood::Global,
                output: out.clone(),
            })
            .collect();
        let readout = LayerConfig {
            neighbourhood: Neighbourhood::Global,
            output: RepSpec::uniform(&[0], channels)?,
        };
        let mut cfg = Self::stack(encoding, classes, layers, readout, channels);
        cfg.share_bucket_weights = true;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Invariant-feature variant: the first layer maps each 1-hop
    /// neighbourhood to scalars, later layers are scalar to scalar.
    pub fn invariant_local(encoding: FeatureEncoding, classes: usize, channels: usize, hidden: usize) -> Result<Self> {
        let nb = Neighbourhood::Local { k: 1 };
        let out = RepSpec::uniform(&[0], channels)?;
        let layers = (0..hidden)
            .map(|_| LayerConfig {
                neighbourhood: nb,
                output: out.clone(),
            })
            .collect();
        let readout = LayerConfig {
            neighbourhood: nb,
            output: out,
        };
        let cfg = Self::stack(encoding, classes, layers, readout, channels);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn input_spec(&self) -> RepSpec {
        RepSpec::uniform(&[2], self.encoding.channels()).expect("encodings have at least one channel")
    }

    /// Input feature space of layer `i`.
    pub fn layer_input(&self, i: usize) -> RepSpec {
        if i == 0 {
            self.input_spec()
        } else {
            self.layers[i - 1].output.clone()
        }
    }

    pub fn embedding_width(&self) -> usize {
        self.layers
            .last()
            .and_then(|l| l.output.channels(0))
            .unwrap_or(0)
    }

    /// Hop count used to build the size bucketing: that of the first local layer.
    pub fn bucketing_k(&self) -> Option<usize> {
        self.layers.iter().find_map(|l| match l.neighbourhood {
            Neighbourhood::Local { k } => Some(k),
            Neighbourhood::Global => None,
        })
    }

    pub fn has_global_layer(&self) -> bool {
        self.layers
            .iter()
            .any(|l| l.neighbourhood == Neighbourhood::Global)
    }

    pub fn validate(&self) -> Result<()> {
        let Some(last) = self.layers.last() else {
            return Err(Error::input("model needs at least the readout layer"));
        };
        if last.output.entries().len() != 1 || !last.output.has(0) {
            return Err(Error::input("the final graph layer must output order 0 only"));
        }
        for l in &self.layers {
            if let Neighbourhood::Local { k } = l.neighbourhood {
                if k == 0 {
                    return Err(Error::input("local layers need k >= 1"));
                }
            }
        }
        if self.classes < 2 {
            return Err(Error::input("at least two classes are needed"));
        }
        if self.head.iter().any(|&w| w == 0) {
            return Err(Error::input("MLP head widths must be positive"));
        }
        if self.bucket_threshold == 0 {
            return Err(Error::input("bucketing threshold must be at least 1"));
        }
        Ok(())
    }
}
