//! Reverse-mode differentiation over an explicit, per-pass operation tape.
//!
//! A [`Tape`] owns every value produced during one forward pass. Operations
//! append nodes in execution order, so the node list is already a
//! topological order and the backward sweep is a single reverse scan.
//! Call [`Tape::reset`] between batches.

use super::einsum::{ContractionPlan, ContractionSpec};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Local gradient rule of a recorded operation.
///
/// Returns one entry per input, `None` where the input receives no gradient.
pub trait Backward: Send + Sync {
    fn backward(&self, inputs: &[&Tensor], output: &Tensor, grad: &[f64]) -> Vec<Option<Vec<f64>>>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReduceKind {
    Sum,
    Mean,
}

/// Pointwise operations understood by [`Tape::elementwise`].
#[derive(Clone, Copy, Debug)]
pub enum Elementwise {
    Add(Var, Var),
    Mul(Var, Var),
    Relu(Var),
    Scale(Var, f64),
}

struct Node {
    value: Tensor,
    inputs: Vec<Var>,
    op: Option<Box<dyn Backward>>,
    needs_grad: bool,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    consumed: bool,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Drops every recorded value and gradient.
    pub fn reset(&mut self) {
        self.nodes.clear();
        self.consumed = false;
    }

    /// Number of floats currently held by recorded values.
    pub fn resident_floats(&self) -> usize {
        self.nodes.iter().map(|n| n.value.numel()).sum()
    }

    pub fn leaf(&mut self, tensor: Tensor) -> Var {
        let needs_grad = tensor.needs_grad();
        self.push(tensor, Vec::new(), None, needs_grad)
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, tensor: Tensor) -> Var {
        self.leaf(tensor.requires_grad(false))
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    /// Gradient of a `requires_grad` leaf after [`Tape::backward`].
    pub fn grad(&self, var: Var) -> Option<&[f64]> {
        self.nodes[var.0].value.grad()
    }

    pub fn requires_grad(&self, var: Var) -> bool {
        self.nodes[var.0].needs_grad
    }

    fn push(
        &mut self,
        value: Tensor,
        inputs: Vec<Var>,
        op: Option<Box<dyn Backward>>,
        needs_grad: bool,
    ) -> Var {
        self.nodes.push(Node {
            value,
            inputs,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Records an operation whose forward value was computed by the caller.
    ///
    /// The gradient rule is kept only when at least one input needs a
    /// gradient.
    pub fn custom(&mut self, inputs: &[Var], output: Tensor, op: Box<dyn Backward>) -> Var {
        let needs_grad = inputs.iter().any(|v| self.nodes[v.0].needs_grad);
        let op = if needs_grad { Some(op) } else { None };
        self.push(output, inputs.to_vec(), op, needs_grad)
    }

    pub fn contract(&mut self, a: Var, b: Var, spec: &str) -> Result<Var> {
        let spec = ContractionSpec::parse(spec)?;
        let plan = spec.plan(self.value(a).shape(), self.value(b).shape())?;
        let data = plan.forward(self.value(a).data(), self.value(b).data());
        let out = Tensor::from_parts(plan.out_shape.clone(), data);
        Ok(self.custom(&[a, b], out, Box::new(ContractOp { plan })))
    }

    pub fn elementwise(&mut self, op: Elementwise) -> Result<Var> {
        match op {
            Elementwise::Add(a, b) => self.add(a, b),
            Elementwise::Mul(a, b) => self.mul(a, b),
            Elementwise::Relu(a) => Ok(self.relu(a)),
            Elementwise::Scale(a, s) => Ok(self.scale(a, s)),
        }
    }

    fn same_shape(&self, a: Var, b: Var, what: &str) -> Result<()> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa != sb {
            return Err(Error::shape(format!("{what}: operand shapes {sa:?} and {sb:?} differ")));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        let (va, vb) = (self.value(a), self.value(b));
        let data = va.data().iter().zip(vb.data()).map(|(x, y)| x + y).collect();
        let out = Tensor::from_parts(va.shape().to_vec(), data);
        Ok(self.custom(&[a, b], out, Box::new(AddOp)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "mul")?;
        let (va, vb) = (self.value(a), self.value(b));
        let data = va.data().iter().zip(vb.data()).map(|(x, y)| x * y).collect();
        let out = Tensor::from_parts(va.shape().to_vec(), data);
        Ok(self.custom(&[a, b], out, Box::new(MulOp)))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let va = self.value(a);
        let data = va.data().iter().map(|&x| if x > 0.0 { x } else { 0.0 }).collect();
        let out = Tensor::from_parts(va.shape().to_vec(), data);
        self.custom(&[a], out, Box::new(ReluOp))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let va = self.value(a);
        let data = va.data().iter().map(|&x| x * factor).collect();
        let out = Tensor::from_parts(va.shape().to_vec(), data);
        self.custom(&[a], out, Box::new(ScaleOp(factor)))
    }

    pub fn reduce(&mut self, a: Var, axes: &[usize], kind: ReduceKind) -> Result<Var> {
        let shape = self.value(a).shape().to_vec();
        for (i, &ax) in axes.iter().enumerate() {
            if ax >= shape.len() {
                return Err(Error::shape(format!(
                    "reduce axis {ax} is out of range for shape {shape:?}"
                )));
            }
            if axes[..i].contains(&ax) {
                return Err(Error::shape(format!("reduce axis {ax} listed twice")));
            }
        }
        let plan = ReducePlan::new(&shape, axes);
        let mut data = vec![0.0; plan.out_len];
        for (i, &x) in self.value(a).data().iter().enumerate() {
            data[plan.target(i)] += x;
        }
        if kind == ReduceKind::Mean && plan.count > 0 {
            let inv = 1.0 / plan.count as f64;
            data.iter_mut().for_each(|x| *x *= inv);
        }
        let out = Tensor::from_parts(plan.out_shape.clone(), data);
        Ok(self.custom(&[a], out, Box::new(ReduceOp { plan, kind })))
    }

    /// Max-subtracted softmax cross-entropy for a single example.
    pub fn softmax_cross_entropy(&mut self, logits: Var, label: usize) -> Result<Var> {
        let v = self.value(logits);
        if v.rank() != 1 || v.numel() < 2 {
            return Err(Error::shape(format!(
                "logits must be a vector of at least 2 classes, got shape {:?}",
                v.shape()
            )));
        }
        if label >= v.numel() {
            return Err(Error::input(format!(
                "label {label} out of range for {} classes",
                v.numel()
            )));
        }
        let max = v.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = v.data().iter().map(|&x| (x - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        let loss = total.ln() - (v.data()[label] - max);
        let probs: Vec<f64> = exps.iter().map(|e| e / total).collect();
        Ok(self.custom(
            &[logits],
            Tensor::scalar(loss),
            Box::new(SoftmaxCrossEntropyOp { probs, label }),
        ))
    }

    /// Mean cross-entropy over the rows of a `batch x classes` logit matrix.
    pub fn softmax_cross_entropy_rows(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let v = self.value(logits);
        if v.rank() != 2 || v.shape()[1] < 2 || v.shape()[0] != labels.len() || labels.is_empty() {
            return Err(Error::shape(format!(
                "logits of shape {:?} do not fit {} labels with at least 2 classes",
                v.shape(),
                labels.len()
            )));
        }
        let classes = v.shape()[1];
        let mut probs = Vec::with_capacity(v.numel());
        let mut loss = 0.0;
        for (row, &label) in v.data().chunks(classes).zip(labels) {
            if label >= classes {
                return Err(Error::input(format!(
                    "label {label} out of range for {classes} classes"
                )));
            }
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = row.iter().map(|&x| (x - max).exp()).collect();
            let total: f64 = exps.iter().sum();
            loss += total.ln() - (row[label] - max);
            probs.extend(exps.iter().map(|e| e / total));
        }
        let n = labels.len() as f64;
        Ok(self.custom(
            &[logits],
            Tensor::scalar(loss / n),
            Box::new(RowsCrossEntropyOp {
                probs,
                labels: labels.to_vec(),
                classes,
            }),
        ))
    }

    /// Accumulates d`loss`/d`leaf` into every `requires_grad` leaf.
    ///
    /// The tape is consumed afterwards; values stay readable until
    /// [`Tape::reset`].
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.consumed {
            return Err(Error::usage("backward already ran on this tape; reset it first"));
        }
        let numel = self.value(loss).numel();
        if numel != 1 {
            return Err(Error::usage(format!(
                "backward needs a scalar loss, got {numel} elements"
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![1.0]);
        for idx in (0..=loss.0).rev() {
            let Some(grad) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            match &node.op {
                Some(op) => {
                    let inputs: Vec<&Tensor> =
                        node.inputs.iter().map(|v| &self.nodes[v.0].value).collect();
                    let input_grads = op.backward(&inputs, &node.value, &grad);
                    debug_assert_eq!(input_grads.len(), node.inputs.len());
                    for (var, g) in node.inputs.iter().zip(input_grads) {
                        let Some(g) = g else { continue };
                        if !self.nodes[var.0].needs_grad {
                            continue;
                        }
                        match &mut grads[var.0] {
                            Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
                            slot => *slot = Some(g),
                        }
                    }
                }
                None => {
                    // leaf: keep the gradient on the value
                    grads[idx] = Some(grad);
                }
            }
        }
        for (idx, grad) in grads.into_iter().enumerate() {
            let node = &mut self.nodes[idx];
            if node.op.is_none() && node.inputs.is_empty() && node.value.needs_grad() {
                match grad {
                    Some(g) => node.value.set_grad(g),
                    None => node.value.set_grad(vec![0.0; node.value.numel()]),
                }
            } else {
                node.value.clear_grad();
            }
        }
        self.consumed = true;
        Ok(())
    }
}

struct ContractOp {
    plan: ContractionPlan,
}

impl Backward for ContractOp {
    fn backward(&self, inputs: &[&Tensor], _: &Tensor, grad: &[f64]) -> Vec<Option<Vec<f64>>> {
        let (ga, gb) = self.plan.backward(inputs[0].data(), inputs[1].data(), grad);
        vec![Some(ga), Some(gb)]
    }
}

struct AddOp;

impl Backward for AddOp {
    fn backward(&self, _: &[&Tensor], _: &Tensor, grad: &[f64]) -> Vec<Option<Vec<f64>>> {
        vec![Some(grad.to_vec()), Some(grad.to_vec())]
    }
}

struct MulOp;

impl Backward for MulOp {
    fn backward(&self, inputs: &[&Tensor], _: &Tensor, grad: &[f64]) -> Vec<Option<Vec<f64>>> {
        let (a, b) = (inputs[0].data(), inputs[1].data());
        let ga = grad.iter().zip(b).map(|(g, y)| g * y).collect();
        let gb = grad.iter().zip(a).map(|(g, x)| g * x).collect();
        vec![Some(ga), Some(gb)]
    }
}

struct ReluOp;

impl Backward for ReluOp {
    fn backward(&self, inputs: &[&Tensor], _: &Tensor, grad: &[f64]) -> Vec<Option<Vec<f64>>> {
        // subgradient at exactly zero is zero
        let g = inputs[0]
            .data()
            .iter()
            .zip(grad)
            .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
            .collect();
        vec![Some(g)]
    }
}

struct ScaleOp(f64);

impl Backward for ScaleOp {
    fn backward(&self, _: &[&Tensor], _: &Tensor, grad: &[f64]) -> Vec<Option<Vec<f64>>> {
        vec![Some(grad.iter().map(|g| g * self.0).collect())]
    }
}

#[derive(Clone, Debug)]
struct ReducePlan {
    in_shape: Vec<usize>,
    keep: Vec<bool>,
    out_shape: Vec<usize>,
    out_len: usize,
    count: usize,
}

impl ReducePlan {
    fn new(shape: &[usize], axes: &[usize]) -> Self {
        let keep: Vec<bool> = (0..shape.len()).map(|i| !axes.contains(&i)).collect();
        let out_shape: Vec<usize> = shape
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(&d, _)| d)
            .collect();
        let count = axes.iter().map(|&a| shape[a]).product();
        Self {
            in_shape: shape.to_vec(),
            out_len: out_shape.iter().product(),
            keep,
            out_shape,
            count,
        }
    }

    fn target(&self, mut flat: usize) -> usize {
        let mut out = 0;
        let mut stride = 1;
        for axis in (0..self.in_shape.len()).rev() {
            let d = self.in_shape[axis];
            let i = flat % d;
            flat /= d;
            if self.keep[axis] {
                out += i * stride;
                stride *= d;
            }
        }
        out
    }
}

struct ReduceOp {
    plan: ReducePlan,
    kind: ReduceKind,
}

impl Backward for ReduceOp {
    fn backward(&self, inputs: &[&Tensor], _: &Tensor, grad: &[f64]) -> Vec<Option<Vec<f64>>> {
        let factor = match self.kind {
            ReduceKind::Sum => 1.0,
            ReduceKind::Mean if self.plan.count > 0 => 1.0 / self.plan.count as f64,
            ReduceKind::Mean => 0.0,
        };
        let g = (0..inputs[0].numel())
            .map(|i| grad[self.plan.target(i)] * factor)
            .collect();
        vec![Some(g)]
    }
}

struct SoftmaxCrossEntropyOp {
    probs: Vec<f64>,
    label: usize,
}

impl Backward for SoftmaxCrossEntropyOp {
    fn backward(&self, _: &[&Tensor], _: &Tensor, grad: &[f64]) -> Vec<Option<Vec<f64>>> {
        let g = grad[0];
        let out = self
            .probs
            .iter()
            .enumerate()
            .map(|(i, &p)| g * (p - if i == self.label { 1.0 } else { 0.0 }))
            .collect();
        vec![Some(out)]
    }
}

struct RowsCrossEntropyOp {
    probs: Vec<f64>,
    labels: Vec<usize>,
    classes: usize,
}

impl Backward for RowsCrossEntropyOp {
    fn backward(&self, _: &[&Tensor], _: &Tensor, grad: &[f64]) -> Vec<Option<Vec<f64>>> {
        let g = grad[0] / self.labels.len() as f64;
        let mut out: Vec<f64> = self.probs.iter().map(|p| g * p).collect();
        for (r, &l) in self.labels.iter().enumerate() {
            out[r * self.classes + l] -= g;
        }
        vec![Some(out)]
    }
}
