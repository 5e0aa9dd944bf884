use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bucketing::{build_bucketing, SizeBucketing};
use super::config::{ModelConfig, Neighbourhood};
use super::op::{EquivariantOp, Target};
use super::repspec::FeatureLayout;
use super::structure::{Batch, PreparedGraph};
use super::weights::{DenseLayer, EquivariantLayerWeights, LayerLayout};
use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::graph::{subgraph_size_histogram, ConcreteGraph};

/// Features of one graph in packed layout, as produced by a layer.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphFeatures {
    pub layout: FeatureLayout,
    /// `(u, v)` of every stored order-2 cell.
    pub cells: Vec<(usize, usize)>,
    pub data: Vec<f64>,
}

impl GraphFeatures {
    /// Order-0 or order-1 feature vector of node position `p`.
    pub fn node(&self, order: usize, p: usize) -> Option<&[f64]> {
        let (offset, c) = self.layout.block(order)?;
        (order < 2 && p < self.layout.nodes).then(|| &self.data[offset + p * c..offset + (p + 1) * c])
    }

    /// Order-2 feature of cell `(u, v)`; `None` for cells that are not stored.
    pub fn cell(&self, u: usize, v: usize) -> Option<&[f64]> {
        let (offset, c) = self.layout.block(2)?;
        let slot = self.cells.iter().position(|&x| x == (u, v))?;
        Some(&self.data[offset + slot * c..offset + (slot + 1) * c])
    }
}

/// Tape handles of every parameter, in [`Model::parameters`] order.
#[derive(Clone, Debug)]
pub struct ParamVars {
    pub layers: Vec<Vec<Var>>,
    pub head: Vec<(Var, Var)>,
}

impl ParamVars {
    pub fn all(&self) -> Vec<Var> {
        let mut out: Vec<Var> = self.layers.iter().flatten().copied().collect();
        for &(w, b) in &self.head {
            out.push(w);
            out.push(b);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub config: ModelConfig,
    pub bucketing: Option<SizeBucketing>,
    pub layers: Vec<EquivariantLayerWeights>,
    pub head: Vec<DenseLayer>,
}

impl Model {
    /// Bucketing from the training graphs' subgraph sizes at the first
    /// local layer's k; `None` for whole-graph models.
    pub fn fit_bucketing(config: &ModelConfig, graphs: &[ConcreteGraph]) -> Result<Option<SizeBucketing>> {
        match config.bucketing_k() {
            Some(k) if !config.share_bucket_weights => {
                let hist = subgraph_size_histogram(graphs, k)?;
                Ok(Some(build_bucketing(&hist, config.bucket_threshold)?))
            }
            _ => Ok(None),
        }
    }

    /// Randomly initialized model, seeded by `config.seed`.
    pub fn new(config: ModelConfig, bucketing: Option<SizeBucketing>) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let layouts = Self::layouts_for(&config);
        let mut layers = Vec::with_capacity(layouts.len());
        for (i, layout) in layouts.iter().enumerate() {
            let n = Self::buckets_for(&config, bucketing.as_ref(), i);
            layers.push(EquivariantLayerWeights {
                buckets: (0..n).map(|_| layout.init(&mut rng)).collect(),
            });
        }
        let mut widths = vec![config.embedding_width()];
        widths.extend(&config.head);
        widths.push(config.classes);
        let head = widths
            .windows(2)
            .map(|w| DenseLayer::init(w[0], w[1], &mut rng))
            .collect();
        Ok(Model {
            config,
            bucketing,
            layers,
            head,
        })
    }

    fn layouts_for(config: &ModelConfig) -> Vec<LayerLayout> {
        (0..config.layers.len())
            .map(|i| LayerLayout::new(&config.layer_input(i), &config.layers[i].output))
            .collect()
    }

    fn buckets_for(config: &ModelConfig, bucketing: Option<&SizeBucketing>, layer: usize) -> usize {
        match (config.layers[layer].neighbourhood, bucketing) {
            (Neighbourhood::Local { .. }, Some(b)) if !config.share_bucket_weights => b.len(),
            _ => 1,
        }
    }

    pub fn layouts(&self) -> Vec<LayerLayout> {
        Self::layouts_for(&self.config)
    }

    /// Checks that stored weights fit the configuration.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let layouts = self.layouts();
        if layouts.len() != self.layers.len() {
            return Err(Error::shape("layer count does not match the configuration"));
        }
        for (i, (layout, w)) in layouts.iter().zip(&self.layers).enumerate() {
            let expected = Self::buckets_for(&self.config, self.bucketing.as_ref(), i);
            if w.buckets.len() != expected {
                return Err(Error::shape(format!(
                    "layer {i} has {} buckets, expected {expected}",
                    w.buckets.len()
                )));
            }
            if w.buckets.iter().any(|b| b.len() != layout.len) {
                return Err(Error::shape(format!("layer {i} weights do not match its layout")));
            }
        }
        let mut width = self.config.embedding_width();
        for (i, d) in self.head.iter().enumerate() {
            if d.inputs != width || d.weight.len() != d.inputs * d.outputs || d.bias.len() != d.outputs {
                return Err(Error::shape(format!("head layer {i} has inconsistent shapes")));
            }
            width = d.outputs;
        }
        if width != self.config.classes {
            return Err(Error::shape("head output width differs from the class count"));
        }
        Ok(())
    }

    pub fn prepare(&self, g: &ConcreteGraph) -> Result<PreparedGraph> {
        PreparedGraph::new(g, &self.config)
    }

    pub fn batch<'a>(&self, graphs: Vec<&'a PreparedGraph>) -> Result<Batch<'a>> {
        Batch::new(graphs, &self.config, self.bucketing.as_ref())
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }

    pub fn parameters(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self
            .layers
            .iter()
            .flat_map(|l| l.buckets.iter().map(Vec::as_slice))
            .collect();
        for d in &self.head {
            out.push(&d.weight);
            out.push(&d.bias);
        }
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self
            .layers
            .iter_mut()
            .flat_map(|l| l.buckets.iter_mut().map(Vec::as_mut_slice))
            .collect();
        for d in &mut self.head {
            out.push(&mut d.weight);
            out.push(&mut d.bias);
        }
        out
    }

    /// Puts every parameter on `tape` as a leaf.
    pub fn register(&self, tape: &mut Tape, requires_grad: bool) -> ParamVars {
        let layers = self
            .layers
            .iter()
            .map(|l| {
                l.buckets
                    .iter()
                    .map(|b| tape.leaf(Tensor::vector(b.clone()).requires_grad(requires_grad)))
                    .collect()
            })
            .collect();
        let head = self
            .head
            .iter()
            .map(|d| {
                let w = Tensor::matrix(d.inputs, d.outputs, d.weight.clone())
                    .expect("validated head shapes")
                    .requires_grad(requires_grad);
                let b = Tensor::vector(d.bias.clone()).requires_grad(requires_grad);
                (tape.leaf(w), tape.leaf(b))
            })
            .collect();
        ParamVars { layers, head }
    }

    /// Parameter tensors with their tape shapes, in [`Model::parameters`] order.
    pub fn parameter_tensors(&self) -> Vec<Tensor> {
        let mut tape = Tape::new();
        let vars = self.register(&mut tape, true);
        vars.all().into_iter().map(|v| tape.value(v).clone()).collect()
    }

    /// Regroups a flat list of parameter handles (as from
    /// [`Model::parameter_tensors`]) into [`ParamVars`].
    pub fn param_vars(&self, vars: &[Var]) -> Result<ParamVars> {
        let total: usize = self.layers.iter().map(|l| l.buckets.len()).sum::<usize>() + 2 * self.head.len();
        if vars.len() != total {
            return Err(Error::shape(format!("{} handles for {total} parameters", vars.len())));
        }
        let mut it = vars.iter().copied();
        let layers = self
            .layers
            .iter()
            .map(|l| it.by_ref().take(l.buckets.len()).collect())
            .collect();
        let head = self
            .head
            .iter()
            .map(|_| (it.next().expect("counted"), it.next().expect("counted")))
            .collect();
        Ok(ParamVars { layers, head })
    }

    fn layer_op(&self, batch: &Batch, i: usize, input_needs_grad: bool) -> Result<EquivariantOp> {
        let cfg = &self.config.layers[i];
        let plan = batch
            .plan(cfg.neighbourhood)
            .ok_or_else(|| Error::usage("batch was built for a different configuration"))?;
        let readout = i + 1 == self.config.layers.len();
        Ok(EquivariantOp {
            plan,
            layout: Arc::new(LayerLayout::new(&self.config.layer_input(i), &cfg.output)),
            input: FeatureLayout::new(self.config.layer_input(i), batch.nodes, batch.cells),
            output: FeatureLayout::new(cfg.output.clone(), batch.nodes, batch.cells),
            target: if readout {
                Target::Readout { graphs: batch.len() }
            } else {
                Target::Features
            },
            input_needs_grad,
        })
    }

    /// Graph embeddings (`graphs x width`) recorded on `tape`.
    pub fn embed(&self, tape: &mut Tape, batch: &Batch, params: &ParamVars) -> Result<Var> {
        let mut h = tape.constant(Tensor::vector(batch.input()));
        let last = self.config.layers.len() - 1;
        for i in 0..=last {
            let op = self.layer_op(batch, i, tape.requires_grad(h))?;
            let out = {
                let weights: Vec<&[f64]> = params.layers[i].iter().map(|&v| tape.value(v).data()).collect();
                op.forward(tape.value(h).data(), &weights)
            };
            let shape = if i == last {
                vec![batch.len(), self.config.embedding_width()]
            } else {
                vec![out.len()]
            };
            let mut inputs = vec![h];
            inputs.extend(&params.layers[i]);
            h = tape.custom(&inputs, Tensor::new(shape, out)?, Box::new(op));
            if i != last {
                h = tape.relu(h);
            }
        }
        Ok(h)
    }

    /// Applies the MLP head to `graphs x width` embeddings on `tape`.
    pub fn head_on_tape(&self, tape: &mut Tape, embedding: Var, params: &ParamVars) -> Result<Var> {
        let graphs = tape.value(embedding).shape()[0];
        let ones = tape.constant(Tensor::vector(vec![1.0; graphs]));
        let mut h = embedding;
        for (j, &(w, b)) in params.head.iter().enumerate() {
            let z = tape.contract(h, w, "gi,io->go")?;
            let bias = tape.contract(ones, b, "g,o->go")?;
            h = tape.add(z, bias)?;
            if j + 1 < self.head.len() {
                h = tape.relu(h);
            }
        }
        Ok(h)
    }

    /// Logits (`graphs x classes`) of a batch recorded on `tape`.
    pub fn forward(&self, tape: &mut Tape, batch: &Batch, params: &ParamVars) -> Result<Var> {
        let e = self.embed(tape, batch, params)?;
        self.head_on_tape(tape, e, params)
    }

    /// Logits of every graph in a prepared batch, without gradients.
    pub fn predict_batch(&self, batch: &Batch) -> Result<Vec<Vec<f64>>> {
        let mut tape = Tape::new();
        let params = self.register(&mut tape, false);
        let logits = self.forward(&mut tape, batch, &params)?;
        let v = tape.value(logits);
        Ok(v.data().chunks(self.config.classes).map(<[f64]>::to_vec).collect())
    }

    /// Class logits of one graph.
    pub fn logits(&self, g: &ConcreteGraph) -> Result<Vec<f64>> {
        let pg = self.prepare(g)?;
        let batch = self.batch(vec![&pg])?;
        Ok(self.predict_batch(&batch)?.remove(0))
    }

    /// Features after layer `layer` (post-relu for hidden layers).
    pub fn layer_features(&self, g: &ConcreteGraph, layer: usize) -> Result<GraphFeatures> {
        if layer + 1 >= self.config.layers.len() {
            return Err(Error::input(format!("layer {layer} is not a hidden layer")));
        }
        let pg = self.prepare(g)?;
        let batch = self.batch(vec![&pg])?;
        let mut h = batch.input();
        for i in 0..=layer {
            let op = self.layer_op(&batch, i, false)?;
            let weights: Vec<&[f64]> = self.layers[i].buckets.iter().map(Vec::as_slice).collect();
            h = op.forward(&h, &weights);
            h.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        Ok(GraphFeatures {
            layout: FeatureLayout::new(self.config.layers[layer].output.clone(), batch.nodes, batch.cells),
            cells: pg.cells.cells(),
            data: h,
        })
    }

    /// Graph embedding vector of one graph (readout output before the head).
    pub fn embedding(&self, g: &ConcreteGraph) -> Result<Vec<f64>> {
        let pg = self.prepare(g)?;
        let batch = self.batch(vec![&pg])?;
        let mut tape = Tape::new();
        let params = self.register(&mut tape, false);
        let e = self.embed(&mut tape, &batch, &params)?;
        Ok(tape.value(e).data().to_vec())
    }
}

/// `relu` between hidden affine layers, linear output.
pub fn mlp_head(embedding: &[f64], head: &[DenseLayer]) -> Result<Vec<f64>> {
    let mut h = embedding.to_vec();
    for (j, d) in head.iter().enumerate() {
        if h.len() != d.inputs {
            return Err(Error::shape(format!(
                "head layer {j} expects width {}, got {}",
                d.inputs,
                h.len()
            )));
        }
        let mut z = d.bias.clone();
        for (i, &x) in h.iter().enumerate() {
            for (o, zo) in z.iter_mut().enumerate() {
                *zo += x * d.weight[i * d.outputs + o];
            }
        }
        if j + 1 < head.len() {
            z.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        h = z;
    }
    Ok(h)
}
