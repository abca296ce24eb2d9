//! Network architecture description, weight genome, and the forward pass.
//!
//! There are no gradients anywhere in this module: networks are pure
//! functions of a flat parameter vector (the [`FlatGenome`]), which is what
//! the evolutionary trainer perturbs and selects on.
//!
//! Layout conventions, fixed for determinism and serialization:
//! - activations are stored channels-last, row-major: `(h, w, c)`;
//! - convolution weights are packed `[out_ch][kh][kw][in_ch]`, then biases
//!   `[out_ch]`;
//! - dense weights are packed `[out][in]`, then biases `[out]`;
//! - dense accumulation is strict left-to-right over the input index.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{domain, stream};
use crate::tensor::Tensor;

/// Self-normalizing SELU constants.
pub const SELU_ALPHA: f32 = 1.673_263_2;
pub const SELU_LAMBDA: f32 = 1.050_701;

/// Magic header of a serialized genome file.
pub const GENOME_MAGIC: &[u8; 8] = b"DNEW0001";

// ---------------------------------------------------------------------------
// Classes and probabilities
// ---------------------------------------------------------------------------

/// Binary tumor class. Serialized as 0 (LGG) / 1 (HGG).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum ClassLabel {
    Lgg,
    Hgg,
}

impl ClassLabel {
    pub fn index(self) -> usize {
        match self {
            ClassLabel::Lgg => 0,
            ClassLabel::Hgg => 1,
        }
    }

    pub fn from_index(index: usize) -> Result<Self> {
        match index {
            0 => Ok(ClassLabel::Lgg),
            1 => Ok(ClassLabel::Hgg),
            other => Err(Error::Config(format!("class label must be 0 or 1, got {other}"))),
        }
    }
}

impl From<ClassLabel> for u8 {
    fn from(label: ClassLabel) -> u8 {
        label.index() as u8
    }
}

impl TryFrom<u8> for ClassLabel {
    type Error = Error;
    fn try_from(value: u8) -> Result<Self> {
        ClassLabel::from_index(value as usize)
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassLabel::Lgg => write!(f, "LGG"),
            ClassLabel::Hgg => write!(f, "HGG"),
        }
    }
}

/// Softmax output over the two classes; sums to one within 1e-6.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutputProbabilities {
    p: [f32; 2],
}

impl OutputProbabilities {
    pub fn new(p: [f32; 2]) -> Result<Self> {
        let sum = p[0] as f64 + p[1] as f64;
        if !p.iter().all(|v| (0.0..=1.0).contains(v)) || (sum - 1.0).abs() > 1e-6 {
            return Err(Error::Internal(format!(
                "probabilities {p:?} are not a valid two-class distribution"
            )));
        }
        Ok(OutputProbabilities { p })
    }

    pub fn values(&self) -> [f32; 2] {
        self.p
    }
}

/// Class of highest probability; an exact tie resolves to class 0 (LGG).
pub fn predict(output: &OutputProbabilities) -> ClassLabel {
    if output.p[1] > output.p[0] {
        ClassLabel::Hgg
    } else {
        ClassLabel::Lgg
    }
}

// ---------------------------------------------------------------------------
// Architecture description
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Selu,
    #[serde(rename = "none")]
    Identity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        activation: Activation,
    },
    Dense {
        in_features: usize,
        out_features: usize,
        activation: Activation,
    },
    Flatten,
    Softmax,
}

impl LayerSpec {
    /// (weight count, bias count) for this layer.
    pub fn param_counts(&self) -> (usize, usize) {
        match *self {
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => (kernel * kernel * in_channels * out_channels, out_channels),
            LayerSpec::Dense {
                in_features,
                out_features,
                ..
            } => (in_features * out_features, out_features),
            LayerSpec::Flatten | LayerSpec::Softmax => (0, 0),
        }
    }
}

/// Shape of the value flowing between layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureShape {
    Spatial { h: usize, w: usize, c: usize },
    Flat(usize),
}

/// Spatial size after a padded, strided convolution along one axis.
pub fn conv_output_len(input: usize, kernel: usize, stride: usize, padding: usize) -> usize {
    (input + 2 * padding - kernel) / stride + 1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkSpecRepr")]
pub struct NetworkSpec {
    input_shape: (usize, usize, usize),
    layers: Vec<LayerSpec>,
}

/// Unvalidated mirror used so every deserialization path runs validation.
#[derive(Deserialize)]
struct NetworkSpecRepr {
    input_shape: (usize, usize, usize),
    layers: Vec<LayerSpec>,
}

impl TryFrom<NetworkSpecRepr> for NetworkSpec {
    type Error = Error;
    fn try_from(repr: NetworkSpecRepr) -> Result<Self> {
        NetworkSpec::new(repr.input_shape, repr.layers)
    }
}

impl NetworkSpec {
    /// Builds a spec, checking the whole layer chain for shape consistency.
    pub fn new(input_shape: (usize, usize, usize), layers: Vec<LayerSpec>) -> Result<Self> {
        let spec = NetworkSpec {
            input_shape,
            layers,
        };
        spec.shape_chain()?;
        Ok(spec)
    }

    /// The 105x105 connectivity-matrix classifier used throughout:
    /// four stride-2 conv/ReLU stages into a 512/256/128 SELU head.
    pub fn default_105() -> Self {
        let conv = |in_channels| LayerSpec::Conv2d {
            in_channels,
            out_channels: 32,
            kernel: 3,
            stride: 2,
            padding: 1,
            activation: Activation::Relu,
        };
        let dense = |i, o, activation| LayerSpec::Dense {
            in_features: i,
            out_features: o,
            activation,
        };
        NetworkSpec::new(
            (105, 105, 1),
            vec![
                conv(1),
                conv(32),
                conv(32),
                conv(32),
                LayerSpec::Flatten,
                dense(1568, 512, Activation::Selu),
                dense(512, 256, Activation::Selu),
                dense(256, 128, Activation::Selu),
                dense(128, 2, Activation::Identity),
                LayerSpec::Softmax,
            ],
        )
        .expect("default architecture is shape-consistent")
    }

    /// Reduced 32x32 variant for fast desk-scale runs: two conv stages and a
    /// 64-unit head.
    pub fn small_32() -> Self {
        let conv = |in_channels| LayerSpec::Conv2d {
            in_channels,
            out_channels: 32,
            kernel: 3,
            stride: 2,
            padding: 1,
            activation: Activation::Relu,
        };
        NetworkSpec::new(
            (32, 32, 1),
            vec![
                conv(1),
                conv(32),
                LayerSpec::Flatten,
                LayerSpec::Dense {
                    in_features: 2048,
                    out_features: 64,
                    activation: Activation::Selu,
                },
                LayerSpec::Dense {
                    in_features: 64,
                    out_features: 2,
                    activation: Activation::Identity,
                },
                LayerSpec::Softmax,
            ],
        )
        .expect("reduced architecture is shape-consistent")
    }

    pub fn input_shape(&self) -> (usize, usize, usize) {
        self.input_shape
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    /// Shape after every layer, validating the chain end to end.
    pub fn shape_chain(&self) -> Result<Vec<FeatureShape>> {
        let (h, w, c) = self.input_shape;
        if h == 0 || w == 0 || c == 0 {
            return Err(Error::Shape(format!(
                "input shape {:?} has a zero dimension",
                self.input_shape
            )));
        }
        let mut current = FeatureShape::Spatial { h, w, c };
        let mut chain = Vec::with_capacity(self.layers.len());
        for (index, layer) in self.layers.iter().enumerate() {
            let here = |msg: String| Error::Shape(format!("layer {index}: {msg}"));
            current = match (*layer, current) {
                (
                    LayerSpec::Conv2d {
                        in_channels,
                        out_channels,
                        kernel,
                        stride,
                        padding,
                        ..
                    },
                    FeatureShape::Spatial { h, w, c },
                ) => {
                    if kernel == 0 || stride == 0 || out_channels == 0 {
                        return Err(here(
                            "kernel, stride and out_channels must be positive".into(),
                        ));
                    }
                    if in_channels != c {
                        return Err(here(format!(
                            "expects {in_channels} input channels, input has {c}"
                        )));
                    }
                    if h + 2 * padding < kernel || w + 2 * padding < kernel {
                        return Err(here(format!(
                            "kernel {kernel} exceeds padded input {h}x{w} (padding {padding})"
                        )));
                    }
                    FeatureShape::Spatial {
                        h: conv_output_len(h, kernel, stride, padding),
                        w: conv_output_len(w, kernel, stride, padding),
                        c: out_channels,
                    }
                }
                (LayerSpec::Conv2d { .. }, FeatureShape::Flat(_)) => {
                    return Err(here("convolution requires a spatial input".into()));
                }
                (LayerSpec::Flatten, FeatureShape::Spatial { h, w, c }) => {
                    FeatureShape::Flat(h * w * c)
                }
                (LayerSpec::Flatten, FeatureShape::Flat(_)) => {
                    return Err(here("input is already flat".into()));
                }
                (
                    LayerSpec::Dense {
                        in_features,
                        out_features,
                        ..
                    },
                    FeatureShape::Flat(n),
                ) => {
                    if out_features == 0 {
                        return Err(here("out_features must be positive".into()));
                    }
                    if in_features != n {
                        return Err(here(format!(
                            "expects {in_features} input features, input has {n}"
                        )));
                    }
                    FeatureShape::Flat(out_features)
                }
                (LayerSpec::Dense { .. }, FeatureShape::Spatial { .. }) => {
                    return Err(here("dense layer requires a flat input (add Flatten)".into()));
                }
                (LayerSpec::Softmax, FeatureShape::Flat(n)) => {
                    if n != 2 {
                        return Err(here(format!("softmax output must have 2 logits, got {n}")));
                    }
                    if index + 1 != self.layers.len() {
                        return Err(here("softmax must be the final layer".into()));
                    }
                    FeatureShape::Flat(2)
                }
                (LayerSpec::Softmax, FeatureShape::Spatial { .. }) => {
                    return Err(here("softmax requires a flat input".into()));
                }
            };
            chain.push(current);
        }
        match chain.last() {
            Some(FeatureShape::Flat(2)) if matches!(self.layers.last(), Some(LayerSpec::Softmax)) => {
                Ok(chain)
            }
            _ => Err(Error::Shape(
                "network must end with a softmax over exactly 2 logits".into(),
            )),
        }
    }

    /// Total number of trainable parameters.
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| {
                let (w, b) = l.param_counts();
                w + b
            })
            .sum()
    }

    /// Per-layer `(start, length)` offsets into the flat parameter vector.
    pub fn layer_offsets(&self) -> Vec<(usize, usize)> {
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut start = 0;
        for layer in &self.layers {
            let (w, b) = layer.param_counts();
            offsets.push((start, w + b));
            start += w + b;
        }
        offsets
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("network spec JSON: {e}")))
    }
}

// ---------------------------------------------------------------------------
// Flat genome
// ---------------------------------------------------------------------------

/// All network parameters as one flat `f32` vector, weights-then-biases per
/// layer, layers in network order.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatGenome {
    values: Vec<f32>,
    offsets: Vec<(usize, usize)>,
}

impl FlatGenome {
    pub fn from_values(spec: &NetworkSpec, values: Vec<f32>) -> Result<Self> {
        let expected = spec.param_count();
        if values.len() != expected {
            return Err(Error::Shape(format!(
                "genome has {} parameters, spec requires {expected}",
                values.len()
            )));
        }
        Ok(FlatGenome {
            values,
            offsets: spec.layer_offsets(),
        })
    }

    pub fn param_count(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn offsets(&self) -> &[(usize, usize)] {
        &self.offsets
    }

    /// Parameter slice for one layer (weights followed by biases).
    pub fn layer_slice(&self, layer: usize) -> &[f32] {
        let (start, len) = self.offsets[layer];
        &self.values[start..start + len]
    }

    /// Splits the genome into per-layer parameter vectors.
    pub fn unpack(&self) -> Vec<Vec<f32>> {
        self.offsets
            .iter()
            .map(|&(start, len)| self.values[start..start + len].to_vec())
            .collect()
    }

    /// Reassembles a genome from per-layer parameter vectors.
    pub fn pack(spec: &NetworkSpec, parts: &[Vec<f32>]) -> Result<Self> {
        let offsets = spec.layer_offsets();
        if parts.len() != offsets.len() {
            return Err(Error::Shape(format!(
                "expected {} layer parameter blocks, got {}",
                offsets.len(),
                parts.len()
            )));
        }
        let mut values = Vec::with_capacity(spec.param_count());
        for (index, (part, &(_, len))) in parts.iter().zip(&offsets).enumerate() {
            if part.len() != len {
                return Err(Error::Shape(format!(
                    "layer {index} block has {} parameters, expected {len}",
                    part.len()
                )));
            }
            values.extend_from_slice(part);
        }
        FlatGenome::from_values(spec, values)
    }

    /// Writes the genome as the 8-byte magic `DNEW0001` followed by the
    /// parameters as little-endian IEEE-754 32-bit floats.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut bytes = Vec::with_capacity(8 + self.values.len() * 4);
        bytes.extend_from_slice(GENOME_MAGIC);
        for v in &self.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(spec: &NetworkSpec, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        FlatGenome::from_values(spec, read_genome_values(path)?)
    }
}

/// Reads a `DNEW0001` float-array file without checking against a spec.
pub fn read_genome_values(path: impl AsRef<Path>) -> Result<Vec<f32>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 8 || &bytes[..8] != GENOME_MAGIC {
        return Err(Error::format(path, "missing DNEW0001 genome magic"));
    }
    let payload = &bytes[8..];
    if payload.len() % 4 != 0 {
        return Err(Error::format(path, "truncated genome payload"));
    }
    Ok(payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

/// Glorot/Xavier uniform initialization: weights from `U(-L, L)` with
/// `L = sqrt(6 / (fan_in + fan_out))`, biases zero. Deterministic per seed.
pub fn glorot_init(spec: &NetworkSpec, seed: u64) -> FlatGenome {
    let mut values = Vec::with_capacity(spec.param_count());
    for (index, layer) in spec.layers().iter().enumerate() {
        let (weight_count, bias_count) = layer.param_counts();
        if weight_count == 0 && bias_count == 0 {
            continue;
        }
        let (fan_in, fan_out) = match *layer {
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => (kernel * kernel * in_channels, kernel * kernel * out_channels),
            LayerSpec::Dense {
                in_features,
                out_features,
                ..
            } => (in_features, out_features),
            _ => unreachable!("parameterless layers are skipped"),
        };
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt() as f32;
        let mut rng = stream(seed, domain::INIT, index as u64, 0);
        let dist = rand::distr::Uniform::new(-limit, limit).expect("valid glorot bounds");
        values.extend((0..weight_count).map(|_| rand::Rng::sample(&mut rng, dist)));
        values.extend(std::iter::repeat(0.0f32).take(bias_count));
    }
    FlatGenome::from_values(spec, values).expect("generated genome matches spec")
}

// ---------------------------------------------------------------------------
// Layer forward operations
// ---------------------------------------------------------------------------

/// Dot product over chunks of eight with a fixed combine tree; used by the
/// convolution. The summation order is fixed, just not left-to-right.
#[inline]
fn dot8(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f32; 8];
    let chunks = a.len() / 8;
    for i in 0..chunks {
        let (pa, pb) = (&a[i * 8..i * 8 + 8], &b[i * 8..i * 8 + 8]);
        for lane in 0..8 {
            acc[lane] += pa[lane] * pb[lane];
        }
    }
    let mut tail = 0.0f32;
    for i in chunks * 8..a.len() {
        tail += a[i] * b[i];
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

/// Strided, zero-padded 2D convolution over a channels-last tensor.
///
/// `weights` is the `[out_ch][kh][kw][in_ch]` kernel bank, `biases` one per
/// output channel. Output spatial size follows
/// `floor((n + 2*padding - kernel) / stride) + 1`.
pub fn conv2d_forward(
    input: &Tensor,
    weights: &[f32],
    biases: &[f32],
    out_channels: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
) -> Result<Tensor> {
    let shape = input.shape();
    if shape.len() != 3 {
        return Err(Error::Shape(format!(
            "convolution input must be rank 3, got {shape:?}"
        )));
    }
    let (h, w, c) = (shape[0], shape[1], shape[2]);
    if kernel == 0 || stride == 0 {
        return Err(Error::Shape("kernel and stride must be positive".into()));
    }
    if weights.len() != kernel * kernel * c * out_channels {
        return Err(Error::Shape(format!(
            "kernel bank has {} weights, expected {}",
            weights.len(),
            kernel * kernel * c * out_channels
        )));
    }
    if biases.len() != out_channels {
        return Err(Error::Shape(format!(
            "bias count {} does not match {out_channels} output channels",
            biases.len()
        )));
    }
    if h + 2 * padding < kernel || w + 2 * padding < kernel {
        return Err(Error::Shape(format!(
            "kernel {kernel} exceeds padded input {h}x{w} (padding {padding})"
        )));
    }

    let out_h = conv_output_len(h, kernel, stride, padding);
    let out_w = conv_output_len(w, kernel, stride, padding);
    let patch_len = kernel * kernel * c;
    let mut patch = vec![0.0f32; patch_len];
    let mut out = vec![0.0f32; out_h * out_w * out_channels];
    let data = input.data();

    for oh in 0..out_h {
        for ow in 0..out_w {
            // Gather the receptive field; out-of-bounds taps are zero padding.
            let mut k = 0;
            for kh in 0..kernel {
                let ih = (oh * stride + kh) as isize - padding as isize;
                if ih < 0 || ih >= h as isize {
                    patch[k..k + kernel * c].fill(0.0);
                    k += kernel * c;
                    continue;
                }
                let row = ih as usize * w * c;
                for kw in 0..kernel {
                    let iw = (ow * stride + kw) as isize - padding as isize;
                    if iw < 0 || iw >= w as isize {
                        patch[k..k + c].fill(0.0);
                    } else {
                        let src = row + iw as usize * c;
                        patch[k..k + c].copy_from_slice(&data[src..src + c]);
                    }
                    k += c;
                }
            }
            let base = (oh * out_w + ow) * out_channels;
            for oc in 0..out_channels {
                let row = &weights[oc * patch_len..(oc + 1) * patch_len];
                out[base + oc] = dot8(row, &patch) + biases[oc];
            }
        }
    }
    Tensor::new(vec![out_h, out_w, out_channels], out)
}

#[inline]
fn activate(x: f32, kind: Activation) -> f32 {
    match kind {
        Activation::Relu => x.max(0.0),
        Activation::Selu => {
            if x > 0.0 {
                SELU_LAMBDA * x
            } else {
                SELU_LAMBDA * SELU_ALPHA * (x.exp() - 1.0)
            }
        }
        Activation::Identity => x,
    }
}

/// Elementwise activation over a tensor.
pub fn activation_apply(t: &Tensor, kind: Activation) -> Tensor {
    let data = t.data().iter().map(|&x| activate(x, kind)).collect();
    Tensor::new(t.shape().to_vec(), data).expect("shape unchanged")
}

fn activate_in_place(values: &mut [f32], kind: Activation) {
    if kind == Activation::Identity {
        return;
    }
    for v in values.iter_mut() {
        *v = activate(*v, kind);
    }
}

/// `y = Wx + b` with strict left-to-right accumulation over the input index.
pub fn dense_forward(x: &[f32], weights: &[f32], biases: &[f32]) -> Result<Vec<f32>> {
    let out_features = biases.len();
    if out_features == 0 || weights.len() != out_features * x.len() {
        return Err(Error::Shape(format!(
            "dense weights {} do not factor as {} outputs x {} inputs",
            weights.len(),
            out_features,
            x.len()
        )));
    }
    let in_features = x.len();
    let mut y = Vec::with_capacity(out_features);
    for o in 0..out_features {
        let row = &weights[o * in_features..(o + 1) * in_features];
        let mut acc = 0.0f32;
        for i in 0..in_features {
            acc += row[i] * x[i];
        }
        y.push(acc + biases[o]);
    }
    Ok(y)
}

/// Numerically shifted softmax over two logits.
pub fn softmax(logits: &[f32]) -> Result<OutputProbabilities> {
    if logits.len() != 2 {
        return Err(Error::Shape(format!(
            "softmax expects 2 logits, got {}",
            logits.len()
        )));
    }
    let max = logits[0].max(logits[1]);
    let e0 = (logits[0] - max).exp();
    let e1 = (logits[1] - max).exp();
    let sum = e0 + e1;
    OutputProbabilities::new([e0 / sum, e1 / sum])
}

/// Runs the full network on one input tensor. Pure function of
/// `(spec, genome, input)`: identical arguments give bit-identical output.
pub fn forward(spec: &NetworkSpec, genome: &FlatGenome, input: &Tensor) -> Result<OutputProbabilities> {
    if genome.param_count() != spec.param_count() {
        return Err(Error::Shape(format!(
            "genome has {} parameters, spec requires {}",
            genome.param_count(),
            spec.param_count()
        )));
    }
    let (h, w, c) = spec.input_shape();
    if input.shape() != [h, w, c] {
        return Err(Error::Shape(format!(
            "input shape {:?} does not match spec input ({h}, {w}, {c})",
            input.shape()
        )));
    }

    let mut spatial: Option<Tensor> = Some(input.clone());
    let mut flat: Vec<f32> = Vec::new();
    for (index, layer) in spec.layers().iter().enumerate() {
        match *layer {
            LayerSpec::Conv2d {
                out_channels,
                kernel,
                stride,
                padding,
                activation,
                ..
            } => {
                let t = spatial
                    .take()
                    .ok_or_else(|| Error::Internal("conv reached with flat value".into()))?;
                let params = genome.layer_slice(index);
                let (wc, _) = layer.param_counts();
                let mut out =
                    conv2d_forward(&t, &params[..wc], &params[wc..], out_channels, kernel, stride, padding)?;
                out = activation_apply(&out, activation);
                spatial = Some(out);
            }
            LayerSpec::Flatten => {
                let t = spatial
                    .take()
                    .ok_or_else(|| Error::Internal("flatten reached with flat value".into()))?;
                flat = t.into_data();
            }
            LayerSpec::Dense { activation, .. } => {
                let params = genome.layer_slice(index);
                let (wc, _) = layer.param_counts();
                let mut out = dense_forward(&flat, &params[..wc], &params[wc..])?;
                activate_in_place(&mut out, activation);
                flat = out;
            }
            LayerSpec::Softmax => {
                return softmax(&flat);
            }
        }
    }
    Err(Error::Internal("network did not end in softmax".into()))
}
