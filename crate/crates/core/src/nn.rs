//! Dense MLPs evaluated straight from a flat parameter vector, and a single
//! convolution + ReLU + pooling reference layer.
//!
//! Parameter layout: layers in order; within a layer the weight matrix comes
//! first, row-major with one row per output neuron (`out × in`), followed by
//! the `out` biases.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ErrorKind;

#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error("topology needs at least 2 layers, got {0}")]
    TooFewLayers(usize),
    #[error("layer {0} has size 0")]
    EmptyLayer(usize),
    #[error("parameter vector has length {found}, topology needs {expected}")]
    ParamLength { expected: usize, found: usize },
    #[error("input has length {found}, expected {expected}")]
    InputLength { expected: usize, found: usize },
    #[error("non-finite activation in layer {layer}")]
    NonFinite { layer: usize },
    #[error("kernel {kernel:?} larger than input {input:?}")]
    KernelTooLarge {
        kernel: (usize, usize),
        input: (usize, usize),
    },
    #[error("pool window {window} larger than convolved map {map:?}")]
    PoolTooLarge { window: usize, map: (usize, usize) },
    #[error("invalid matrix: {0}")]
    BadMatrix(String),
}

impl NnError {
    pub(crate) fn kind(&self) -> ErrorKind {
        match self {
            NnError::NonFinite { .. } => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Sigmoid,
    Tanh,
    Relu,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(format!("unknown activation {other:?}")),
        }
    }
}

/// Layer sizes from input to output. The output layer is always softmax.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpTopology {
    pub layers: Vec<usize>,
    #[serde(default)]
    pub hidden_activation: Activation,
}

impl MlpTopology {
    pub fn new(layers: Vec<usize>, hidden_activation: Activation) -> Result<Self, NnError> {
        let t = Self {
            layers,
            hidden_activation,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.layers.len() < 2 {
            return Err(NnError::TooFewLayers(self.layers.len()));
        }
        if let Some(i) = self.layers.iter().position(|&n| n == 0) {
            return Err(NnError::EmptyLayer(i));
        }
        Ok(())
    }

    pub fn input_size(&self) -> usize {
        self.layers[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layers.last().expect("validated topology")
    }

    pub fn param_count(&self) -> usize {
        param_count(self)
    }
}

pub fn param_count(t: &MlpTopology) -> usize {
    t.layers.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

/// Flat parameter vector of an MLP; also a WOA search position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn zeros(t: &MlpTopology) -> Self {
        ParamVector(vec![0.0; param_count(t)])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        ParamVector(v)
    }
}

/// One affine layer: `weights` is `outputs × inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    pub fn weight(&self, out: usize, inp: usize) -> f64 {
        self.weights[out * self.inputs + inp]
    }
}

fn check_len(t: &MlpTopology, p: &[f64]) -> Result<(), NnError> {
    let expected = param_count(t);
    if p.len() != expected {
        return Err(NnError::ParamLength {
            expected,
            found: p.len(),
        });
    }
    Ok(())
}

pub fn unflatten(t: &MlpTopology, p: &ParamVector) -> Result<Vec<DenseLayer>, NnError> {
    t.validate()?;
    check_len(t, &p.0)?;
    let mut rest = p.as_slice();
    let layers = t
        .layers
        .windows(2)
        .map(|w| {
            let (inputs, outputs) = (w[0], w[1]);
            let (weights, tail) = rest.split_at(inputs * outputs);
            let (biases, tail) = tail.split_at(outputs);
            rest = tail;
            DenseLayer {
                inputs,
                outputs,
                weights: weights.to_vec(),
                biases: biases.to_vec(),
            }
        })
        .collect();
    Ok(layers)
}

pub fn flatten(layers: &[DenseLayer]) -> ParamVector {
    let mut out = Vec::with_capacity(
        layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum(),
    );
    for l in layers {
        out.extend_from_slice(&l.weights);
        out.extend_from_slice(&l.biases);
    }
    ParamVector(out)
}

/// In-place numerically stable softmax.
pub fn softmax(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for z in logits.iter_mut() {
        *z = (*z - max).exp();
        sum += *z;
    }
    for z in logits.iter_mut() {
        *z /= sum;
    }
}

/// Pre-softmax output of the network.
pub fn mlp_logits(t: &MlpTopology, p: &[f64], x: &[f64]) -> Result<Vec<f64>, NnError> {
    check_len(t, p)?;
    if x.len() != t.input_size() {
        return Err(NnError::InputLength {
            expected: t.input_size(),
            found: x.len(),
        });
    }
    let n_layers = t.layers.len() - 1;
    let mut act = x.to_vec();
    let mut offset = 0;
    for (li, w) in t.layers.windows(2).enumerate() {
        let (inputs, outputs) = (w[0], w[1]);
        let weights = &p[offset..offset + inputs * outputs];
        let biases = &p[offset + inputs * outputs..offset + inputs * outputs + outputs];
        offset += inputs * outputs + outputs;

        let last = li + 1 == n_layers;
        let next: Vec<f64> = weights
            .chunks_exact(inputs)
            .zip(biases)
            .map(|(row, b)| {
                let z = row.iter().zip(&act).map(|(w, a)| w * a).sum::<f64>() + b;
                if last {
                    z
                } else {
                    t.hidden_activation.apply(z)
                }
            })
            .collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(NnError::NonFinite { layer: li + 1 });
        }
        act = next;
    }
    Ok(act)
}

/// Class probabilities for one input vector.
pub fn mlp_forward(t: &MlpTopology, p: &ParamVector, x: &[f64]) -> Result<Vec<f64>, NnError> {
    let mut out = mlp_logits(t, &p.0, x)?;
    softmax(&mut out);
    Ok(out)
}

/// Dense 2-D matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NnError> {
        if rows == 0 || cols == 0 {
            return Err(NnError::BadMatrix("zero dimension".into()));
        }
        if data.len() != rows * cols {
            return Err(NnError::BadMatrix(format!(
                "{} values for {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NnError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(NnError::BadMatrix("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolKind {
    Max,
    Average,
    Sum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayerSpec {
    pub kernel: Matrix,
    pub bias: f64,
    pub pool_window: usize,
    pub pool_kind: PoolKind,
}

/// `pool_{n×n}(ReLU(kernel ⋆ input + bias))`.
///
/// Valid cross-correlation at stride 1 (no kernel flip, no padding), then
/// non-overlapping `n×n` pooling. Trailing rows/columns that do not fill a
/// whole pooling window are dropped.
pub fn cnn_layer_forward(input: &Matrix, spec: &ConvLayerSpec) -> Result<Matrix, NnError> {
    let (kh, kw) = (spec.kernel.rows, spec.kernel.cols);
    if kh > input.rows || kw > input.cols {
        return Err(NnError::KernelTooLarge {
            kernel: (kh, kw),
            input: (input.rows, input.cols),
        });
    }
    let (ch, cw) = (input.rows - kh + 1, input.cols - kw + 1);
    let n = spec.pool_window;
    if n == 0 || n > ch || n > cw {
        return Err(NnError::PoolTooLarge {
            window: n,
            map: (ch, cw),
        });
    }

    let mut conv = Vec::with_capacity(ch * cw);
    for r in 0..ch {
        for c in 0..cw {
            // bias first, then products in row-major kernel order
            let mut acc = spec.bias;
            for i in 0..kh {
                let in_row = &input.data[(r + i) * input.cols + c..][..kw];
                let k_row = &spec.kernel.data[i * kw..][..kw];
                for (a, b) in in_row.iter().zip(k_row) {
                    acc += a * b;
                }
            }
            conv.push(acc.max(0.0));
        }
    }

    let (ph, pw) = (ch / n, cw / n);
    let mut out = Vec::with_capacity(ph * pw);
    for pr in 0..ph {
        for pc in 0..pw {
            let window = (0..n).flat_map(|i| {
                let row = pr * n + i;
                conv[row * cw + pc * n..][..n].iter().copied()
            });
            let v = match spec.pool_kind {
                PoolKind::Max => window.fold(f64::NEG_INFINITY, f64::max),
                PoolKind::Sum => window.sum(),
                PoolKind::Average => window.sum::<f64>() / (n * n) as f64,
            };
            out.push(v);
        }
    }
    Matrix::new(ph, pw, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn topo(layers: &[usize]) -> MlpTopology {
        MlpTopology::new(layers.to_vec(), Activation::Sigmoid).unwrap()
    }

    #[test]
    fn param_counts() {
        assert_eq!(param_count(&topo(&[2, 2, 1])), 9);
        assert_eq!(param_count(&topo(&[1, 1])), 2);
        assert_eq!(param_count(&topo(&[6144, 20, 2])), 122_942);
    }

    #[test]
    fn invalid_topologies() {
        assert_eq!(
            MlpTopology::new(vec![3], Activation::Sigmoid),
            Err(NnError::TooFewLayers(1))
        );
        assert_eq!(
            MlpTopology::new(vec![3, 0, 2], Activation::Sigmoid),
            Err(NnError::EmptyLayer(1))
        );
    }

    #[test]
    fn unflatten_smallest() {
        let layers = unflatten(&topo(&[1, 1]), &ParamVector(vec![0.5, -0.25])).unwrap();
        assert_eq!(layers[0].weights, vec![0.5]);
        assert_eq!(layers[0].biases, vec![-0.25]);
    }

    #[test]
    fn unflatten_layout_is_output_major() {
        // (2,2,1): W1 = [[1,2],[3,4]], b1 = [5,6], W2 = [[7,8]], b2 = [9]
        let p = ParamVector((1..=9).map(f64::from).collect());
        let layers = unflatten(&topo(&[2, 2, 1]), &p).unwrap();
        assert_eq!(layers[0].weight(0, 1), 2.0);
        assert_eq!(layers[0].weight(1, 0), 3.0);
        assert_eq!(layers[0].biases, vec![5.0, 6.0]);
        assert_eq!(layers[1].weights, vec![7.0, 8.0]);
        assert_eq!(layers[1].biases, vec![9.0]);
        assert_eq!(flatten(&layers), p);
    }

    #[test]
    fn unflatten_rejects_wrong_length() {
        assert_eq!(
            unflatten(&topo(&[2, 2, 1]), &ParamVector(vec![0.0; 8])),
            Err(NnError::ParamLength {
                expected: 9,
                found: 8
            })
        );
    }

    #[test]
    fn zero_params_give_uniform_output() {
        let t = topo(&[1, 2]);
        let out = mlp_forward(&t, &ParamVector::zeros(&t), &[3.7]).unwrap();
        assert_eq!(out, vec![0.5, 0.5]);
    }

    #[test]
    fn single_output_is_certain() {
        let t = topo(&[1, 1, 1]);
        let out = mlp_forward(&t, &ParamVector::zeros(&t), &[-2.0]).unwrap();
        assert_eq!(out, vec![1.0]);
    }

    #[test]
    fn hand_computed_2_2_2() {
        // W1 = [[0.1, -0.2], [0.3, 0.4]], b1 = [0.05, -0.1]
        // W2 = [[0.5, -0.6], [-0.7, 0.8]], b2 = [0.2, -0.3]
        // x = (1, 2)
        // z1 = (0.1 - 0.4 + 0.05, 0.3 + 0.8 - 0.1) = (-0.25, 1.0)
        // h  = (sigmoid(-0.25), sigmoid(1.0))
        //    = (0.43782349911420193, 0.7310585786300049)
        // z2_0 = 0.5 h0 - 0.6 h1 + 0.2   = -0.0197233976...
        // z2_1 = -0.7 h0 + 0.8 h1 - 0.3  = -0.0216295864...
        // p0   = 1 / (1 + exp(z2_1 - z2_0)) = 0.5004765470...
        let t = topo(&[2, 2, 2]);
        let p = ParamVector(vec![
            0.1, -0.2, 0.3, 0.4, 0.05, -0.1, 0.5, -0.6, -0.7, 0.8, 0.2, -0.3,
        ]);
        let h0: f64 = 0.437_823_499_114_201_93;
        let h1: f64 = 0.731_058_578_630_004_9;
        let z0 = 0.5 * h0 - 0.6 * h1 + 0.2;
        let z1 = -0.7 * h0 + 0.8 * h1 - 0.3;
        let p0 = 1.0 / (1.0 + (z1 - z0).exp());
        let out = mlp_forward(&t, &p, &[1.0, 2.0]).unwrap();
        assert!((out[0] - p0).abs() < 1e-9);
        assert!((out[1] - (1.0 - p0)).abs() < 1e-9);
        // decimal check of the hand arithmetic itself
        assert!((p0 - 0.500_476_547_069_462_2).abs() < 1e-12, "{p0}");
    }

    #[test]
    fn forward_rejects_wrong_input() {
        let t = topo(&[2, 2]);
        assert_eq!(
            mlp_forward(&t, &ParamVector::zeros(&t), &[1.0]),
            Err(NnError::InputLength {
                expected: 2,
                found: 1
            })
        );
    }

    #[test]
    fn forward_reports_non_finite() {
        let t = MlpTopology::new(vec![1, 1, 2], Activation::Relu).unwrap();
        let p = ParamVector(vec![f64::MAX, 0.0, f64::MAX, 0.0, 0.0, 0.0]);
        assert_eq!(
            mlp_forward(&t, &p, &[f64::MAX]),
            Err(NnError::NonFinite { layer: 1 })
        );
    }

    fn conv(kernel: Vec<Vec<f64>>, bias: f64, n: usize, kind: PoolKind) -> ConvLayerSpec {
        ConvLayerSpec {
            kernel: Matrix::from_rows(&kernel).unwrap(),
            bias,
            pool_window: n,
            pool_kind: kind,
        }
    }

    #[test]
    fn identity_kernel_is_relu() {
        let input = Matrix::from_rows(&[vec![1.0, -2.0], vec![3.0, -4.0]]).unwrap();
        let out = cnn_layer_forward(&input, &conv(vec![vec![1.0]], 0.0, 1, PoolKind::Max)).unwrap();
        assert_eq!(out.as_slice(), &[1.0, 0.0, 3.0, 0.0]);
    }

    #[test]
    fn relu_then_max_pool() {
        let input = Matrix::from_rows(&[vec![1.0, -2.0], vec![3.0, 4.0]]).unwrap();
        let out = cnn_layer_forward(&input, &conv(vec![vec![1.0]], 0.0, 2, PoolKind::Max)).unwrap();
        assert_eq!((out.rows(), out.cols()), (1, 1));
        assert_eq!(out.get(0, 0), 4.0);
    }

    #[test]
    fn ramp_average_kernel_average_pool() {
        // input[r][c] = 4r + c. A 2x2 averaging window at (r,c) gives
        // 4r + c + 2.5; minus 1 => 4r + c + 1.5, all positive on the 3x3 map.
        // 2x2 average pool over rows/cols {0,1}: mean of 1.5,2.5,5.5,6.5 = 4.0.
        // Row/col 2 is truncated.
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|r| (0..4).map(|c| (4 * r + c) as f64).collect())
            .collect();
        let input = Matrix::from_rows(&rows).unwrap();
        let spec = conv(vec![vec![0.25; 2]; 2], -1.0, 2, PoolKind::Average);
        let out = cnn_layer_forward(&input, &spec).unwrap();
        assert_eq!((out.rows(), out.cols()), (1, 1));
        assert_eq!(out.get(0, 0), 4.0);
    }

    #[test]
    fn sum_pool_and_truncation() {
        let input = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let out = cnn_layer_forward(&input, &conv(vec![vec![1.0]], 0.0, 2, PoolKind::Sum)).unwrap();
        assert_eq!((out.rows(), out.cols()), (1, 1));
        assert_eq!(out.get(0, 0), 12.0);
    }

    #[test]
    fn conv_errors() {
        let input = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let big = conv(vec![vec![1.0; 3]; 3], 0.0, 1, PoolKind::Max);
        assert!(matches!(
            cnn_layer_forward(&input, &big),
            Err(NnError::KernelTooLarge { .. })
        ));
        let wide_pool = conv(vec![vec![1.0; 2]; 2], 0.0, 2, PoolKind::Max);
        assert!(matches!(
            cnn_layer_forward(&input, &wide_pool),
            Err(NnError::PoolTooLarge { .. })
        ));
    }
}
