//! Fully connected ReLU classifier with softmax output, cross-entropy loss,
//! inverted dropout and RMSprop, with hand-derived gradients.
//!
//! The network is generic over the scalar so the simulator can run in `f32`
//! (the on-air packet format) while gradient checks use `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::AddAssign;

use ndarray::{Array1, Array2, ArrayView2, Axis, LinalgScalar, ScalarOperand, Zip};
use num_traits::{Float, FromPrimitive};
use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{FeatureSample, FEATURE_LEN};

/// Layer widths of the sensor classifier: 32 inputs, hidden 128/64/32, 2 classes.
pub const ARCHITECTURE: [usize; 5] = [FEATURE_LEN, 128, 64, 32, 2];
/// Scalar parameter count of [`ARCHITECTURE`].
pub const PARAMETER_COUNT: usize = 14_626;

pub trait Real:
    Float
    + LinalgScalar
    + ScalarOperand
    + FromPrimitive
    + AddAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

fn cast<A: Real>(v: f64) -> A {
    A::from_f64(v).expect("finite f64 converts to any Real")
}

/// Weights are stored `inputs x outputs`, so a batch forward is `x.dot(w) + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense<A> {
    pub weights: Array2<A>,
    pub biases: Array1<A>,
}

impl<A: Real> Dense<A> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: Array2::zeros((inputs, outputs)),
            biases: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp<A> {
    layers: Vec<Dense<A>>,
}

/// The model a sensor trains and broadcasts.
pub type ModelParams = Mlp<f32>;

/// Inference, or training with an inverted-dropout mask on hidden activations.
pub enum ForwardMode<'r> {
    Inference,
    Train {
        dropout_rate: f64,
        rng: &'r mut dyn RngCore,
    },
}

impl<A: Real> Mlp<A> {
    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "need at least an input and an output width");
        Self {
            layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        }
    }

    /// He-style uniform weights in +/- sqrt(6 / fan_in), zero biases.
    pub fn init<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        let mut model = Self::zeros(sizes);
        for layer in &mut model.layers {
            let bound = (6.0 / layer.inputs() as f64).sqrt();
            for w in layer.weights.iter_mut() {
                *w = cast(rng.random_range(-bound..bound));
            }
        }
        model
    }

    pub fn from_layers(layers: Vec<Dense<A>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::ShapeMismatch("no layers".into()));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::ShapeMismatch(format!(
                    "layer {k} emits {} values but layer {} expects {}",
                    pair[0].outputs(),
                    k + 1,
                    pair[1].inputs()
                )));
            }
        }
        for (k, l) in layers.iter().enumerate() {
            if l.biases.len() != l.outputs() {
                return Err(Error::ShapeMismatch(format!("layer {k} bias length")));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Dense<A>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense<A>] {
        &mut self.layers
    }

    /// Widths from input to output.
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs()];
        s.extend(self.layers.iter().map(Dense::outputs));
        s
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(Dense::parameter_count).sum()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.weights.dim() == b.weights.dim() && a.biases.len() == b.biases.len())
    }

    /// All scalars in wire order: per layer, weights row-major then biases.
    pub fn params(&self) -> impl Iterator<Item = &A> + '_ {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.biases.iter()))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut A> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|v| v.is_finite())
    }

    /// Converts every parameter to another scalar type.
    pub fn cast<B: Real>(&self) -> Mlp<B> {
        Mlp {
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    weights: l.weights.mapv(|v| cast(v.to_f64().unwrap_or(f64::NAN))),
                    biases: l.biases.mapv(|v| cast(v.to_f64().unwrap_or(f64::NAN))),
                })
                .collect(),
        }
    }

    pub fn forward(&self, features: &[A], mode: ForwardMode<'_>) -> Result<Vec<A>> {
        if features.len() != self.input_len() {
            return Err(Error::Dimension {
                expected: self.input_len(),
                actual: features.len(),
            });
        }
        let x = ArrayView2::from_shape((1, features.len()), features).expect("contiguous row");
        let probs = match mode {
            ForwardMode::Inference => softmax_rows(self.logits(x)),
            ForwardMode::Train { dropout_rate, rng } => self.forward_trace(x, Some((dropout_rate, rng))).probs,
        };
        Ok(probs.into_raw_vec_and_offset().0)
    }

    /// Pre-softmax outputs for a batch, no dropout.
    pub fn logits(&self, x: ArrayView2<'_, A>) -> Array2<A> {
        let mut a = affine(x, &self.layers[0]);
        for layer in &self.layers[1..] {
            a.mapv_inplace(|v| v.max(A::zero()));
            a = affine(a.view(), layer);
        }
        a
    }

    pub fn predict_proba(&self, x: ArrayView2<'_, A>) -> Array2<A> {
        softmax_rows(self.logits(x))
    }

    fn forward_trace(&self, x: ArrayView2<'_, A>, mut dropout: Option<(f64, &mut dyn RngCore)>) -> Trace<A> {
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut gates = Vec::with_capacity(last);
        let mut a = x.to_owned();
        for (l, layer) in self.layers.iter().enumerate() {
            let z = affine(a.view(), layer);
            inputs.push(a);
            if l == last {
                return Trace {
                    inputs,
                    gates,
                    probs: softmax_rows(z.clone()),
                    logits: z,
                };
            }
            let mut gate = z.mapv(|v| if v > A::zero() { A::one() } else { A::zero() });
            if let Some((rate, rng)) = dropout.as_mut() {
                if *rate > 0.0 {
                    let keep = 1.0 - *rate;
                    let scale: A = cast(1.0 / keep);
                    for g in gate.iter_mut() {
                        let u: f64 = rng.random();
                        *g = if u < keep { *g * scale } else { A::zero() };
                    }
                }
            }
            a = z * &gate;
            gates.push(gate);
        }
        unreachable!("loop returns at the output layer")
    }

    /// Mean cross-entropy and its gradient over a batch. `dropout` of `None`
    /// gives the deterministic network.
    pub fn loss_and_gradient(
        &self,
        x: ArrayView2<'_, A>,
        labels: &[usize],
        dropout: Option<(f64, &mut dyn RngCore)>,
    ) -> Result<(A, Mlp<A>)> {
        self.check_batch(x, labels)?;
        let trace = self.forward_trace(x, dropout);
        let loss = cross_entropy(&trace.logits, labels);
        Ok((loss, self.backward(&trace, labels)))
    }

    pub fn loss(&self, x: ArrayView2<'_, A>, labels: &[usize]) -> Result<A> {
        self.check_batch(x, labels)?;
        Ok(cross_entropy(&self.logits(x), labels))
    }

    fn check_batch(&self, x: ArrayView2<'_, A>, labels: &[usize]) -> Result<()> {
        if x.ncols() != self.input_len() {
            return Err(Error::Dimension {
                expected: self.input_len(),
                actual: x.ncols(),
            });
        }
        if x.nrows() != labels.len() || labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let classes = self.layers[self.layers.len() - 1].outputs();
        if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
            return Err(Error::InvalidParameter(format!("label {bad} out of range")));
        }
        Ok(())
    }

    fn backward(&self, trace: &Trace<A>, labels: &[usize]) -> Mlp<A> {
        let batch: A = cast(labels.len() as f64);
        let mut dz = trace.probs.clone();
        for (row, &y) in labels.iter().enumerate() {
            dz[[row, y]] = dz[[row, y]] - A::one();
        }
        dz.mapv_inplace(|v| v / batch);

        let mut grads: Vec<Dense<A>> = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let weights = trace.inputs[l].t().dot(&dz);
            let biases = dz.sum_axis(Axis(0));
            if l > 0 {
                let da = dz.dot(&self.layers[l].weights.t());
                dz = da * &trace.gates[l - 1];
            }
            grads.push(Dense { weights, biases });
        }
        grads.reverse();
        Mlp { layers: grads }
    }
}

impl Mlp<f32> {
    /// The sensor classifier with freshly initialized weights.
    pub fn init_model<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::init(&ARCHITECTURE, rng)
    }
}

struct Trace<A> {
    /// Input to each layer (after activation and dropout).
    inputs: Vec<Array2<A>>,
    /// ReLU derivative times dropout scale, per hidden layer.
    gates: Vec<Array2<A>>,
    logits: Array2<A>,
    probs: Array2<A>,
}

fn affine<A: Real>(x: ArrayView2<'_, A>, layer: &Dense<A>) -> Array2<A> {
    let mut z = x.dot(&layer.weights);
    z += &layer.biases;
    z
}

/// Row-wise softmax with the max logit subtracted.
pub fn softmax_rows<A: Real>(mut z: Array2<A>) -> Array2<A> {
    for mut row in z.rows_mut() {
        let max = row.iter().copied().fold(A::neg_infinity(), A::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    z
}

/// Mean negative log-likelihood computed through log-sum-exp, so it stays
/// finite even when a softmax probability underflows to zero.
fn cross_entropy<A: Real>(logits: &Array2<A>, labels: &[usize]) -> A {
    let mut total = A::zero();
    for (row, &y) in logits.rows().into_iter().zip(labels) {
        let max = row.iter().copied().fold(A::neg_infinity(), A::max);
        let lse = row.iter().map(|&v| (v - max).exp()).sum::<A>().ln() + max;
        total += lse - row[y];
    }
    total / cast(labels.len() as f64)
}

/// Index of the largest entry; ties go to the lower index.
fn argmax<A: Real>(row: ndarray::ArrayView1<'_, A>) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = k;
        }
    }
    best
}

/// Features and class indices laid out for batched passes.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix<A> {
    pub features: Array2<A>,
    pub labels: Vec<usize>,
}

impl<A: Real> SampleMatrix<A> {
    pub fn from_samples(samples: &[FeatureSample]) -> Self {
        let mut features = Array2::zeros((samples.len(), FEATURE_LEN));
        for (mut row, s) in features.rows_mut().into_iter().zip(samples) {
            for (dst, &v) in row.iter_mut().zip(&s.features) {
                *dst = cast(v);
            }
        }
        Self {
            features,
            labels: samples.iter().map(|s| s.label.label() as usize).collect(),
        }
    }

    /// Stacks several matrices in order.
    pub fn concat(parts: &[&SampleMatrix<A>]) -> Self {
        let views: Vec<_> = parts.iter().map(|p| p.features.view()).collect();
        Self {
            features: ndarray::concatenate(Axis(0), &views).expect("same feature width"),
            labels: parts.iter().flat_map(|p| p.labels.iter().copied()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub rmsprop_decay: f64,
    pub rmsprop_epsilon: f64,
    pub dropout_rate: f64,
    pub batch_size: usize,
    pub local_epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            rmsprop_decay: 0.9,
            rmsprop_epsilon: 1e-7,
            dropout_rate: 0.2,
            batch_size: 32,
            local_epochs: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout_rate must lie in [0, 1)");
        }
        // Zero is allowed: it freezes the model, which tests rely on.
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be non-negative");
        }
        if !(0.0..1.0).contains(&self.rmsprop_decay) {
            return bad("rmsprop_decay must lie in [0, 1)");
        }
        if !(self.rmsprop_epsilon > 0.0) {
            return bad("rmsprop_epsilon must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.local_epochs == 0 {
            return bad("local_epochs must be at least 1");
        }
        Ok(())
    }
}

/// RMSprop running averages of squared gradients, one per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState<A> {
    mean_square: Mlp<A>,
}

impl<A: Real> OptimizerState<A> {
    pub fn for_model(model: &Mlp<A>) -> Self {
        Self {
            mean_square: Mlp::zeros(&model.sizes()),
        }
    }

    pub fn mean_square(&self) -> &Mlp<A> {
        &self.mean_square
    }

    /// `s = rho*s + (1-rho)*g^2; p -= lr * g / (sqrt(s) + eps)`
    pub fn step(&mut self, model: &mut Mlp<A>, grads: &Mlp<A>, cfg: &TrainConfig) {
        let lr: A = cast(cfg.learning_rate);
        let rho: A = cast(cfg.rmsprop_decay);
        let one_minus_rho = A::one() - rho;
        let eps: A = cast(cfg.rmsprop_epsilon);
        let update = |p: &mut A, s: &mut A, &g: &A| {
            *s = rho * *s + one_minus_rho * g * g;
            *p = *p - lr * g / (s.sqrt() + eps);
        };
        for ((p, s), g) in model
            .layers
            .iter_mut()
            .zip(&mut self.mean_square.layers)
            .zip(&grads.layers)
        {
            Zip::from(&mut p.weights)
                .and(&mut s.weights)
                .and(&g.weights)
                .for_each(update);
            Zip::from(&mut p.biases)
                .and(&mut s.biases)
                .and(&g.biases)
                .for_each(update);
        }
    }
}

/// Local training: `cfg.local_epochs` shuffled mini-batch passes with dropout.
pub fn train_local<A: Real, R: Rng>(
    model: &mut Mlp<A>,
    opt: &mut OptimizerState<A>,
    data: &SampleMatrix<A>,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    cfg.validate()?;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut labels = Vec::with_capacity(cfg.batch_size);
    for _ in 0..cfg.local_epochs {
        order.shuffle(rng);
        for idx in order.chunks(cfg.batch_size) {
            let x = data.features.select(Axis(0), idx);
            labels.clear();
            labels.extend(idx.iter().map(|&i| data.labels[i]));
            let (_, grads) = model.loss_and_gradient(x.view(), &labels, Some((cfg.dropout_rate, &mut *rng)))?;
            opt.step(model, &grads, cfg);
        }
    }
    Ok(())
}

/// Fraction of samples whose arg-max class matches the label.
pub fn evaluate<A: Real>(model: &Mlp<A>, data: &SampleMatrix<A>) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.features.ncols() != model.input_len() {
        return Err(Error::Dimension {
            expected: model.input_len(),
            actual: data.features.ncols(),
        });
    }
    const CHUNK: usize = 2048;
    let mut correct = 0usize;
    for (x, labels) in data
        .features
        .axis_chunks_iter(Axis(0), CHUNK)
        .zip(data.labels.chunks(CHUNK))
    {
        let logits = model.logits(x);
        correct += logits
            .rows()
            .into_iter()
            .zip(labels)
            .filter(|(row, &y)| argmax(row.view()) == y)
            .count();
    }
    Ok(correct as f64 / data.len() as f64)
}

pub fn count_parameters<A: Real>(model: &Mlp<A>) -> usize {
    model.parameter_count()
}

const MAGIC: [u8; 4] = *b"DFLM";
const FORMAT_VERSION: u32 = 1;
/// Bytes before the parameter payload.
pub const HEADER_LEN: usize = 16;

/// Size of one serialized model of the given architecture.
pub fn packet_bytes(sizes: &[usize]) -> usize {
    let params: usize = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
    HEADER_LEN + 4 * params
}

impl Mlp<f32> {
    /// Header (magic, version, layer count, parameter count; u32 LE each)
    /// followed by every parameter as little-endian f32 in wire order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.parameter_count());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.parameter_count() as u32).to_le_bytes());
        for v in self.params() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Decodes a blob produced by [`Mlp::to_bytes`] for a known architecture.
    pub fn from_bytes(bytes: &[u8], sizes: &[usize]) -> Result<Self> {
        let bad = |m: String| Err(Error::ModelFormat(m));
        if bytes.len() < HEADER_LEN {
            return bad("truncated header".into());
        }
        let word = |k: usize| u32::from_le_bytes(bytes[4 * k..4 * k + 4].try_into().expect("4 bytes"));
        if bytes[..4] != MAGIC {
            return bad("bad magic".into());
        }
        if word(1) != FORMAT_VERSION {
            return bad(format!("unsupported version {}", word(1)));
        }
        let mut model = Self::zeros(sizes);
        if word(2) as usize != model.layers.len() {
            return bad(format!("blob has {} layers, expected {}", word(2), model.layers.len()));
        }
        let n = model.parameter_count();
        if word(3) as usize != n || bytes.len() != HEADER_LEN + 4 * n {
            return bad(format!("blob holds {} parameters, expected {n}", word(3)));
        }
        for (p, chunk) in model.params_mut().zip(bytes[HEADER_LEN..].chunks_exact(4)) {
            *p = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};
    use crate::signal::Modulation;
    use ndarray::array;

    #[test]
    fn table_architecture_has_14626_parameters() {
        let m = ModelParams::init_model(&mut stream(0, Domain::Init, 0));
        assert_eq!(count_parameters(&m), PARAMETER_COUNT);
        let per_layer: Vec<usize> = m.layers().iter().map(Dense::parameter_count).collect();
        assert_eq!(per_layer, vec![4224, 8256, 2080, 66]);
        let shapes: Vec<(usize, usize)> = m.layers().iter().map(|l| l.weights.dim()).collect();
        assert_eq!(shapes, vec![(32, 128), (128, 64), (64, 32), (32, 2)]);
    }

    #[test]
    fn single_layer_count() {
        assert_eq!(Mlp::<f64>::zeros(&[2, 3]).parameter_count(), 9);
    }

    #[test]
    fn init_is_seeded() {
        let a = ModelParams::init_model(&mut stream(4, Domain::Init, 1));
        let b = ModelParams::init_model(&mut stream(4, Domain::Init, 1));
        let c = ModelParams::init_model(&mut stream(4, Domain::Init, 2));
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.layers().iter().all(|l| l.biases.iter().all(|&b| b == 0.0)));
        let bound = (6.0f32 / 32.0).sqrt();
        assert!(a.layers()[0].weights.iter().all(|w| w.abs() <= bound));
    }

    #[test]
    fn zero_model_is_indifferent() {
        let m = ModelParams::zeros(&ARCHITECTURE);
        let p = m.forward(&[0.3; 32], ForwardMode::Inference).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let m = ModelParams::zeros(&ARCHITECTURE);
        assert!(matches!(
            m.forward(&[0.0; 31], ForwardMode::Inference),
            Err(Error::Dimension {
                expected: 32,
                actual: 31
            })
        ));
    }

    #[test]
    fn toy_network_matches_hand_arithmetic() {
        // 2 -> 1 -> 2: h = relu(0.5*x0 - 1.0*x1 + 0.1), logits = [2h - 0.3, -h + 0.2]
        let m = Mlp::from_layers(vec![
            Dense {
                weights: array![[0.5], [-1.0]],
                biases: array![0.1],
            },
            Dense {
                weights: array![[2.0, -1.0]],
                biases: array![-0.3, 0.2],
            },
        ])
        .unwrap();
        let p = m.forward(&[1.0f64, -0.4], ForwardMode::Inference).unwrap();
        let h: f64 = 0.5 + 0.4 + 0.1;
        let (l0, l1) = (2.0 * h - 0.3, -h + 0.2);
        let e0 = l0.exp() / (l0.exp() + l1.exp());
        assert!((p[0] - e0).abs() < 1e-15);
        assert!((p[1] - (1.0 - e0)).abs() < 1e-15);
        // Negative pre-activation is clipped: logits are just the biases.
        let p = m.forward(&[-1.0f64, 1.0], ForwardMode::Inference).unwrap();
        let e0 = (-0.3f64).exp() / ((-0.3f64).exp() + 0.2f64.exp());
        assert!((p[0] - e0).abs() < 1e-15);
    }

    #[test]
    fn inference_ignores_dropout_rng_and_train_mode_uses_it() {
        let m = Mlp::<f64>::init(&ARCHITECTURE, &mut stream(1, Domain::Init, 0));
        let x: Vec<f64> = (0..32).map(|k| (k as f64 * 0.37).sin()).collect();
        let a = m.forward(&x, ForwardMode::Inference).unwrap();
        let mut r1 = stream(1, Domain::Train, 0);
        let mut r2 = stream(2, Domain::Train, 0);
        let t1 = m
            .forward(
                &x,
                ForwardMode::Train {
                    dropout_rate: 0.5,
                    rng: &mut r1,
                },
            )
            .unwrap();
        let t2 = m
            .forward(
                &x,
                ForwardMode::Train {
                    dropout_rate: 0.5,
                    rng: &mut r2,
                },
            )
            .unwrap();
        assert_ne!(t1, t2);
        assert_eq!(a, m.forward(&x, ForwardMode::Inference).unwrap());
        let t0 = m
            .forward(
                &x,
                ForwardMode::Train {
                    dropout_rate: 0.0,
                    rng: &mut r1,
                },
            )
            .unwrap();
        for (u, v) in a.iter().zip(&t0) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    fn constant_class(class: usize) -> ModelParams {
        let mut m = ModelParams::zeros(&ARCHITECTURE);
        m.layers_mut()[3].biases[class] = 1.0;
        m
    }

    fn samples(labels: &[Modulation]) -> Vec<FeatureSample> {
        labels
            .iter()
            .enumerate()
            .map(|(k, &label)| FeatureSample {
                features: [k as f64; 32],
                label,
            })
            .collect()
    }

    #[test]
    fn evaluate_constant_classifier() {
        let data = SampleMatrix::from_samples(&samples(&[Modulation::Qpsk; 5]));
        assert_eq!(evaluate(&constant_class(1), &data).unwrap(), 1.0);
        assert_eq!(evaluate(&constant_class(0), &data).unwrap(), 0.0);
    }

    #[test]
    fn evaluate_hand_set_threshold() {
        // Single hidden unit passes feature 0 through; class 1 wins when x0 > 1.5.
        let mut sizes = ARCHITECTURE;
        sizes[1] = 1;
        sizes[2] = 1;
        sizes[3] = 1;
        let mut m = ModelParams::zeros(&sizes);
        m.layers_mut()[0].weights[[0, 0]] = 1.0;
        m.layers_mut()[1].weights[[0, 0]] = 1.0;
        m.layers_mut()[2].weights[[0, 0]] = 1.0;
        m.layers_mut()[3].weights[[0, 1]] = 1.0;
        m.layers_mut()[3].biases[0] = 1.5;
        // features are [k; 32] for k = 0..4, so predictions are 0, 0, 1, 1.
        let labels = [Modulation::Bpsk, Modulation::Qpsk, Modulation::Qpsk, Modulation::Qpsk];
        let data = SampleMatrix::from_samples(&samples(&labels));
        assert_eq!(evaluate(&m, &data).unwrap(), 0.75);
    }

    #[test]
    fn evaluate_rejects_empty() {
        let data = SampleMatrix::<f32>::from_samples(&[]);
        assert!(matches!(evaluate(&constant_class(0), &data), Err(Error::EmptyDataset)));
    }

    #[test]
    fn zero_learning_rate_freezes_model() {
        let mut rng = stream(0, Domain::Data, 0);
        let data: Vec<FeatureSample> = (0..40)
            .map(|k| FeatureSample {
                features: std::array::from_fn(|_| rng.random_range(-1.0..1.0)),
                label: if k % 2 == 0 { Modulation::Bpsk } else { Modulation::Qpsk },
            })
            .collect();
        let data = SampleMatrix::from_samples(&data);
        let start = ModelParams::init_model(&mut stream(0, Domain::Init, 0));
        let mut m = start.clone();
        let mut opt = OptimizerState::for_model(&m);
        let cfg = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        train_local(&mut m, &mut opt, &data, &cfg, &mut stream(0, Domain::Train, 0)).unwrap();
        assert_eq!(m, start);
        assert!(opt.mean_square().params().all(|&s| s >= 0.0 && s.is_finite()));
    }

    #[test]
    fn train_rejects_empty() {
        let mut m = ModelParams::zeros(&ARCHITECTURE);
        let mut opt = OptimizerState::for_model(&m);
        let data = SampleMatrix::from_samples(&[]);
        let r = train_local(
            &mut m,
            &mut opt,
            &data,
            &TrainConfig::default(),
            &mut stream(0, Domain::Train, 0),
        );
        assert!(matches!(r, Err(Error::EmptyDataset)));
    }

    #[test]
    fn train_config_checks() {
        let ok = TrainConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            TrainConfig {
                dropout_rate: 1.0,
                ..ok.clone()
            },
            TrainConfig {
                batch_size: 0,
                ..ok.clone()
            },
            TrainConfig {
                local_epochs: 0,
                ..ok.clone()
            },
            TrainConfig {
                learning_rate: -1.0,
                ..ok.clone()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn softmax_of_huge_logits_is_finite() {
        let p = softmax_rows(array![[1e30f64, -1e30], [1000.0, 1000.0]]);
        assert_eq!(p.row(0).to_vec(), vec![1.0, 0.0]);
        assert_eq!(p.row(1).to_vec(), vec![0.5, 0.5]);
        let loss = cross_entropy(&array![[1000.0f64, -1000.0]], &[1]);
        assert!((loss - 2000.0).abs() < 1e-9);
    }

    #[test]
    fn blob_round_trip_and_size() {
        let m = ModelParams::init_model(&mut stream(3, Domain::Init, 0));
        let blob = m.to_bytes();
        assert_eq!(blob.len(), 16 + 4 * 14_626);
        assert_eq!(blob.len(), packet_bytes(&ARCHITECTURE));
        assert_eq!(&blob[..4], b"DFLM");
        assert_eq!(ModelParams::from_bytes(&blob, &ARCHITECTURE).unwrap(), m);
        assert!(ModelParams::from_bytes(&blob[..blob.len() - 1], &ARCHITECTURE).is_err());
        assert!(ModelParams::from_bytes(&blob, &[32, 2]).is_err());
    }
}
