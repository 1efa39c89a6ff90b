use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::matrix::{softmax_in_place, Matrix};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `h`.
    #[inline]
    fn derivative(self, z: f64, h: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => h * (1.0 - h),
            Activation::Tanh => 1.0 - h * h,
        }
    }

    pub(crate) fn code(self) -> u32 {
        match self {
            Activation::Relu => 0,
            Activation::Sigmoid => 1,
            Activation::Tanh => 2,
        }
    }

    pub(crate) fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Sigmoid),
            2 => Some(Activation::Tanh),
            _ => None,
        }
    }
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// The four output heads a network may carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HeadKind {
    /// Class logits (m, or m+1 with an abstention entry), softmax output.
    Predictive,
    /// Single sigmoid selection score.
    Selective,
    /// Class logits of the auxiliary head, softmax output.
    Auxiliary,
    /// Single sigmoid uncertainty / confidence score.
    Uncertainty,
}

impl HeadKind {
    pub const ALL: [HeadKind; 4] = [
        HeadKind::Predictive,
        HeadKind::Selective,
        HeadKind::Auxiliary,
        HeadKind::Uncertainty,
    ];

    fn index(self) -> usize {
        match self {
            HeadKind::Predictive => 0,
            HeadKind::Selective => 1,
            HeadKind::Auxiliary => 2,
            HeadKind::Uncertainty => 3,
        }
    }

    fn is_softmax(self) -> bool {
        matches!(self, HeadKind::Predictive | HeadKind::Auxiliary)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamGroup {
    Body,
    Head(HeadKind),
}

/// Hidden widths and output count of one head.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadSpec {
    pub hidden: Vec<usize>,
    pub outputs: usize,
}

impl HeadSpec {
    pub fn linear(outputs: usize) -> Self {
        Self {
            hidden: Vec::new(),
            outputs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub activation: Activation,
    pub predictive: HeadSpec,
    pub selective: Option<HeadSpec>,
    pub auxiliary: Option<HeadSpec>,
    pub uncertainty: Option<HeadSpec>,
}

impl MlpSpec {
    /// Body plus a linear predictive head with `outputs` logits.
    pub fn classifier(input_dim: usize, hidden_widths: &[usize], outputs: usize) -> Self {
        Self {
            input_dim,
            hidden_widths: hidden_widths.to_vec(),
            activation: Activation::Relu,
            predictive: HeadSpec::linear(outputs),
            selective: None,
            auxiliary: None,
            uncertainty: None,
        }
    }

    fn head(&self, kind: HeadKind) -> Option<&HeadSpec> {
        match kind {
            HeadKind::Predictive => Some(&self.predictive),
            HeadKind::Selective => self.selective.as_ref(),
            HeadKind::Auxiliary => self.auxiliary.as_ref(),
            HeadKind::Uncertainty => self.uncertainty.as_ref(),
        }
    }

    fn head_slot(&mut self, kind: HeadKind) -> &mut Option<HeadSpec> {
        match kind {
            HeadKind::Predictive => unreachable!("predictive head is mandatory"),
            HeadKind::Selective => &mut self.selective,
            HeadKind::Auxiliary => &mut self.auxiliary,
            HeadKind::Uncertainty => &mut self.uncertainty,
        }
    }

    fn validate(&self) -> Result<()> {
        let widths = std::iter::once(self.input_dim)
            .chain(self.hidden_widths.iter().copied())
            .chain(HeadKind::ALL.iter().filter_map(|&k| self.head(k)).flat_map(|h| {
                h.hidden.iter().copied().chain(std::iter::once(h.outputs))
            }));
        if widths.into_iter().any(|w| w == 0) {
            return Err(Error::InvalidInput("all layer widths must be >= 1".into()));
        }
        for kind in [HeadKind::Selective, HeadKind::Uncertainty] {
            if let Some(h) = self.head(kind) {
                if h.outputs != 1 {
                    return Err(Error::InvalidInput(format!("{kind:?} head must have one output")));
                }
            }
        }
        Ok(())
    }

    fn body_output_dim(&self) -> usize {
        self.hidden_widths.last().copied().unwrap_or(self.input_dim)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Dense {
    offset: usize,
    inputs: usize,
    outputs: usize,
}

impl Dense {
    fn weights<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        &params[self.offset..self.offset + self.inputs * self.outputs]
    }

    fn bias<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        let start = self.offset + self.inputs * self.outputs;
        &params[start..start + self.outputs]
    }

    fn len(&self) -> usize {
        self.outputs * (self.inputs + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Stack {
    layers: Vec<Dense>,
    /// Apply the hidden activation after the last layer too (true for the body).
    activate_last: bool,
}

impl Stack {
    fn range(&self) -> Range<usize> {
        match (self.layers.first(), self.layers.last()) {
            (Some(first), Some(last)) => first.offset..last.offset + last.len(),
            _ => 0..0,
        }
    }
}

/// Activations recorded during a forward pass through one stack.
#[derive(Debug, Clone)]
struct StackCache {
    /// Input of every layer.
    inputs: Vec<Matrix>,
    /// Pre-activation of every layer.
    pre: Vec<Matrix>,
    /// Output of the stack.
    output: Matrix,
}

/// Everything `backward` needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    body: StackCache,
    heads: [Option<StackCache>; 4],
}

/// Head outputs after their output nonlinearity.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadOutputs {
    /// Softmax rows of the predictive head.
    pub predictive: Matrix,
    /// Sigmoid values of the selective head.
    pub selective: Option<Vec<f64>>,
    /// Softmax rows of the auxiliary head.
    pub auxiliary: Option<Matrix>,
    /// Sigmoid values of the uncertainty head.
    pub uncertainty: Option<Vec<f64>>,
}

/// Dense network with a shared body and up to four heads.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadedNet {
    spec: MlpSpec,
    body: Stack,
    heads: [Option<Stack>; 4],
    params: Vec<f64>,
}

impl HeadedNet {
    /// Builds a network with Glorot-uniform weights and zero biases.
    pub fn new(spec: MlpSpec, seed: u64) -> Result<Self> {
        let mut net = Self::zeroed(spec)?;
        let mut rng = seed::rng(seed);
        let layers: Vec<Dense> = net.all_layers().cloned().collect();
        for layer in &layers {
            init_layer(&mut net.params, layer, &mut rng);
        }
        Ok(net)
    }

    /// Builds a network whose parameters are all zero.
    pub fn zeroed(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let mut offset = 0;
        let body = build_stack(spec.input_dim, &spec.hidden_widths, true, &mut offset);
        let feat = spec.body_output_dim();
        let mut heads: [Option<Stack>; 4] = Default::default();
        for kind in HeadKind::ALL {
            if let Some(h) = spec.head(kind) {
                let mut widths = h.hidden.clone();
                widths.push(h.outputs);
                heads[kind.index()] = Some(build_stack(feat, &widths, false, &mut offset));
            }
        }
        Ok(Self {
            spec,
            body,
            heads,
            params: vec![0.0; offset],
        })
    }

    /// Copy of this network with a freshly initialized head of the given kind
    /// (replacing any existing one). Existing parameters are kept bit-for-bit.
    pub fn with_head(&self, kind: HeadKind, head: HeadSpec, seed: u64) -> Result<Self> {
        let mut spec = self.spec.clone();
        if kind == HeadKind::Predictive {
            spec.predictive = head;
        } else {
            *spec.head_slot(kind) = Some(head);
        }
        let mut out = Self::zeroed(spec)?;
        let mut rng = seed::rng(seed);
        // copy body and untouched heads
        let copy = |dst: &Stack, src: &Stack, params: &mut Vec<f64>| {
            params[dst.range()].copy_from_slice(&self.params[src.range()]);
        };
        copy(&out.body, &self.body, &mut out.params);
        for other in HeadKind::ALL {
            if other == kind {
                continue;
            }
            if let (Some(dst), Some(src)) = (&out.heads[other.index()], &self.heads[other.index()]) {
                copy(dst, src, &mut out.params);
            }
        }
        let fresh: Vec<Dense> = out.heads[kind.index()].as_ref().expect("head just added").layers.clone();
        for layer in &fresh {
            init_layer(&mut out.params, layer, &mut rng);
        }
        Ok(out)
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn has_head(&self, kind: HeadKind) -> bool {
        self.heads[kind.index()].is_some()
    }

    /// Number of predictive logits.
    pub fn predictive_outputs(&self) -> usize {
        self.spec.predictive.outputs
    }

    /// Flat parameter range of a group, if the group exists.
    pub fn group_range(&self, group: ParamGroup) -> Option<Range<usize>> {
        match group {
            ParamGroup::Body => Some(self.body.range()),
            ParamGroup::Head(kind) => self.heads[kind.index()].as_ref().map(Stack::range),
        }
    }

    /// Hex SHA-256 of the parameter bytes.
    pub fn param_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for p in &self.params {
            hasher.update(p.to_le_bytes());
        }
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    fn all_layers(&self) -> impl Iterator<Item = &Dense> {
        self.body
            .layers
            .iter()
            .chain(self.heads.iter().flatten().flat_map(|s| s.layers.iter()))
    }

    /// (group, out, in, weights, bias) for every layer, in parameter order.
    pub(crate) fn layer_views(&self) -> Vec<(ParamGroup, usize, usize, &[f64], &[f64])> {
        let mut out = Vec::new();
        for l in &self.body.layers {
            out.push((ParamGroup::Body, l.outputs, l.inputs, l.weights(&self.params), l.bias(&self.params)));
        }
        for kind in HeadKind::ALL {
            if let Some(s) = &self.heads[kind.index()] {
                for l in &s.layers {
                    out.push((ParamGroup::Head(kind), l.outputs, l.inputs, l.weights(&self.params), l.bias(&self.params)));
                }
            }
        }
        out
    }

    pub(crate) fn from_parts(spec: MlpSpec, params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeroed(spec)?;
        if net.params.len() != params.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} parameters, found {}",
                net.params.len(),
                params.len()
            )));
        }
        net.params = params;
        Ok(net)
    }

    pub fn forward(&self, x: &Matrix) -> Result<HeadOutputs> {
        Ok(self.forward_cached(x)?.0)
    }

    pub fn forward_cached(&self, x: &Matrix) -> Result<(HeadOutputs, ForwardCache)> {
        if x.cols() != self.spec.input_dim {
            return Err(Error::Shape(format!(
                "network expects {} features, got {}",
                self.spec.input_dim,
                x.cols()
            )));
        }
        let act = self.spec.activation;
        let body = run_stack(&self.body, &self.params, x, act);
        let mut heads: [Option<StackCache>; 4] = Default::default();
        for kind in HeadKind::ALL {
            if let Some(stack) = &self.heads[kind.index()] {
                heads[kind.index()] = Some(run_stack(stack, &self.params, &body.output, act));
            }
        }
        let probs = |kind: HeadKind| -> Option<Matrix> {
            heads[kind.index()].as_ref().map(|c| {
                let mut m = c.output.clone();
                if kind.is_softmax() {
                    for r in 0..m.rows() {
                        softmax_in_place(m.row_mut(r));
                    }
                } else {
                    m.values_mut().iter_mut().for_each(|v| *v = sigmoid(*v));
                }
                m
            })
        };
        let outputs = HeadOutputs {
            predictive: probs(HeadKind::Predictive).expect("predictive head"),
            selective: probs(HeadKind::Selective).map(Matrix::into_values),
            auxiliary: probs(HeadKind::Auxiliary),
            uncertainty: probs(HeadKind::Uncertainty).map(Matrix::into_values),
        };
        Ok((outputs, ForwardCache { body, heads }))
    }

    /// Raw (pre-softmax) predictive logits.
    pub fn logits(&self, x: &Matrix) -> Result<Matrix> {
        let (_, cache) = self.forward_cached(x)?;
        Ok(cache.heads[HeadKind::Predictive.index()].as_ref().expect("predictive head").output.clone())
    }

    /// Gradient of the loss with respect to every parameter, given the
    /// gradient with respect to head probabilities.
    pub fn backward(&self, cache: &ForwardCache, outputs: &HeadOutputs, grads: &super::HeadGrads) -> Vec<f64> {
        let mut grad = vec![0.0; self.params.len()];
        let act = self.spec.activation;
        let n = cache.body.output.rows();
        let mut d_feat = Matrix::zeros(n, cache.body.output.cols());
        let mut any = false;
        for kind in HeadKind::ALL {
            let (Some(stack), Some(hc)) = (&self.heads[kind.index()], &cache.heads[kind.index()]) else {
                continue;
            };
            let d_raw = match kind {
                HeadKind::Predictive => grads.predictive.as_ref().map(|g| softmax_backward(&outputs.predictive, g)),
                HeadKind::Auxiliary => match (&grads.auxiliary, &outputs.auxiliary) {
                    (Some(g), Some(p)) => Some(softmax_backward(p, g)),
                    _ => None,
                },
                HeadKind::Selective => match (&grads.selective, &outputs.selective) {
                    (Some(g), Some(k)) => Some(sigmoid_backward(k, g)),
                    _ => None,
                },
                HeadKind::Uncertainty => match (&grads.uncertainty, &outputs.uncertainty) {
                    (Some(g), Some(k)) => Some(sigmoid_backward(k, g)),
                    _ => None,
                },
            };
            if let Some(d_raw) = d_raw {
                let d_in = backprop_stack(stack, &self.params, hc, d_raw, act, &mut grad);
                for (a, b) in d_feat.values_mut().iter_mut().zip(d_in.values()) {
                    *a += b;
                }
                any = true;
            }
        }
        if any {
            backprop_stack(&self.body, &self.params, &cache.body, d_feat, act, &mut grad);
        }
        grad
    }
}

fn build_stack(input: usize, widths: &[usize], activate_last: bool, offset: &mut usize) -> Stack {
    let mut layers = Vec::with_capacity(widths.len());
    let mut fan_in = input;
    for &w in widths {
        let layer = Dense {
            offset: *offset,
            inputs: fan_in,
            outputs: w,
        };
        *offset += layer.len();
        layers.push(layer);
        fan_in = w;
    }
    Stack { layers, activate_last }
}

fn init_layer(params: &mut [f64], layer: &Dense, rng: &mut impl Rng) {
    let limit = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
    let w_end = layer.offset + layer.inputs * layer.outputs;
    for p in &mut params[layer.offset..w_end] {
        *p = rng.random_range(-limit..=limit);
    }
    for p in &mut params[w_end..w_end + layer.outputs] {
        *p = 0.0;
    }
}

fn dense_forward(layer: &Dense, params: &[f64], x: &Matrix) -> Matrix {
    let w = layer.weights(params);
    let b = layer.bias(params);
    let mut out = Matrix::zeros(x.rows(), layer.outputs);
    for r in 0..x.rows() {
        let xr = x.row(r);
        let or = out.row_mut(r);
        for (o, slot) in or.iter_mut().enumerate() {
            let wr = &w[o * layer.inputs..(o + 1) * layer.inputs];
            *slot = b[o] + wr.iter().zip(xr).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    out
}

fn run_stack(stack: &Stack, params: &[f64], x: &Matrix, act: Activation) -> StackCache {
    let mut inputs = Vec::with_capacity(stack.layers.len());
    let mut pre = Vec::with_capacity(stack.layers.len());
    let mut h = x.clone();
    let last = stack.layers.len().saturating_sub(1);
    for (i, layer) in stack.layers.iter().enumerate() {
        let z = dense_forward(layer, params, &h);
        let next = if i < last || stack.activate_last {
            let mut a = z.clone();
            a.values_mut().iter_mut().for_each(|v| *v = act.apply(*v));
            a
        } else {
            z.clone()
        };
        inputs.push(std::mem::replace(&mut h, next));
        pre.push(z);
    }
    StackCache {
        inputs,
        pre,
        output: h,
    }
}

/// Backpropagates `d_out` (gradient w.r.t. the stack output) and returns the
/// gradient w.r.t. the stack input; parameter gradients accumulate into `grad`.
fn backprop_stack(
    stack: &Stack,
    params: &[f64],
    cache: &StackCache,
    d_out: Matrix,
    act: Activation,
    grad: &mut [f64],
) -> Matrix {
    let mut d = d_out;
    let last = stack.layers.len().saturating_sub(1);
    for (i, layer) in stack.layers.iter().enumerate().rev() {
        let input = &cache.inputs[i];
        let z = &cache.pre[i];
        if i < last || stack.activate_last {
            let h = if i == last { &cache.output } else { &cache.inputs[i + 1] };
            for ((dv, &zv), &hv) in d.values_mut().iter_mut().zip(z.values()).zip(h.values()) {
                *dv *= act.derivative(zv, hv);
            }
        }
        let w = layer.weights(params);
        let (gw, rest) = grad[layer.offset..].split_at_mut(layer.inputs * layer.outputs);
        let gb = &mut rest[..layer.outputs];
        let mut d_in = Matrix::zeros(input.rows(), layer.inputs);
        for r in 0..input.rows() {
            let xr = input.row(r);
            let dr = d.row(r);
            let dir = d_in.row_mut(r);
            for (o, &g) in dr.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                gb[o] += g;
                let wrow = &w[o * layer.inputs..(o + 1) * layer.inputs];
                let gwrow = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                for k in 0..layer.inputs {
                    gwrow[k] += g * xr[k];
                    dir[k] += g * wrow[k];
                }
            }
        }
        d = d_in;
    }
    d
}

/// dL/dz for z -> softmax(z) = s, given dL/ds.
fn softmax_backward(s: &Matrix, g: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(s.rows(), s.cols());
    for r in 0..s.rows() {
        let sr = s.row(r);
        let gr = g.row(r);
        let dot: f64 = sr.iter().zip(gr).map(|(a, b)| a * b).sum();
        for (o, (&sv, &gv)) in out.row_mut(r).iter_mut().zip(sr.iter().zip(gr)) {
            *o = sv * (gv - dot);
        }
    }
    out
}

fn sigmoid_backward(k: &[f64], g: &[f64]) -> Matrix {
    let values = k.iter().zip(g).map(|(&kv, &gv)| gv * kv * (1.0 - kv)).collect();
    Matrix::from_vec(k.len(), 1, values).expect("finite sigmoid gradient")
}
